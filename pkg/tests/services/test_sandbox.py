import logging
import subprocess

import pytest

from specine.services import SandboxService, judge_output, sanitize
from specine.utils import (
    EmptyAfterSanitizeError,
    ExecutionLimits,
    Ratio,
    SandboxSetupError,
    TestCase,
    Verdict,
)

LIMITS = ExecutionLimits(wall_timeout=5.0)


@pytest.fixture
def sandbox():
    return SandboxService(workers=2, log_level=logging.DEBUG)


def test_run_one_pass(sandbox):
    code = "print(input()[::-1])"
    result = sandbox.run_one(code, "python", TestCase("abc", "cba"), LIMITS)
    assert result.verdict == Verdict.PASS
    assert result.stdout == "cba\n"
    assert result.exit_code == 0


def test_run_one_ignores_trailing_whitespace(sandbox):
    code = "print('3   ')\nprint()"
    result = sandbox.run_one(code, "python", TestCase("", "3"), LIMITS)
    assert result.verdict == Verdict.PASS


def test_run_one_wrong_output(sandbox):
    result = sandbox.run_one("print(4)", "python", TestCase("", "3"), LIMITS)
    assert result.verdict == Verdict.WRONG_OUTPUT


def test_run_one_runtime_error(sandbox):
    result = sandbox.run_one("raise SystemExit(3)", "python", TestCase("", "3"), LIMITS)
    assert result.verdict == Verdict.RUNTIME_ERROR
    assert result.exit_code == 3


def test_run_one_crash_after_correct_output_passes(sandbox):
    code = "print(3, flush=True)\nraise ValueError('late')"
    result = sandbox.run_one(code, "python", TestCase("", "3"), LIMITS)
    assert result.verdict == Verdict.PASS
    assert "ValueError" in result.stderr


def test_run_one_missing_input_is_runtime_error(sandbox):
    result = sandbox.run_one("input()\ninput()", "python", TestCase("1", "x"), LIMITS)
    assert result.verdict == Verdict.RUNTIME_ERROR
    assert "EOFError" in result.stderr


def test_run_one_timeout(sandbox):
    limits = ExecutionLimits(wall_timeout=0.5)
    code = "while True:\n    pass"
    result = sandbox.run_one(code, "python", TestCase("", ""), limits)
    assert result.verdict == Verdict.TIMEOUT
    assert result.exit_code is None
    assert result.duration < 5.0


def test_run_one_output_overflow(sandbox):
    limits = ExecutionLimits(wall_timeout=5.0, output_limit=100)
    result = sandbox.run_one("print('x' * 1000)", "python", TestCase("", "x"), limits)
    assert result.verdict == Verdict.OUTPUT_OVERFLOW
    assert len(result.stdout) <= 100


@pytest.mark.parametrize(
    "code",
    [
        "import sys\nprint(input())\nsys.stderr.write('x' * 200)",
        "import sys\nsys.stderr.write('x' * 5000)\nprint(input())",
    ],
)
def test_run_one_stderr_does_not_count_as_output(sandbox, code):
    limits = ExecutionLimits(wall_timeout=5.0, output_limit=100)
    result = sandbox.run_one(code, "python", TestCase("5", "5"), limits)
    assert result.verdict == Verdict.PASS
    assert result.stdout == "5\n"
    assert result.stderr == "x" * 100
    assert result.exit_code == 0


def test_run_one_stderr_noise_with_wrong_output(sandbox):
    limits = ExecutionLimits(wall_timeout=5.0, output_limit=100)
    code = "import sys\nsys.stderr.write('x' * 500)\nprint(6)"
    result = sandbox.run_one(code, "python", TestCase("", "5"), limits)
    assert result.verdict == Verdict.WRONG_OUTPUT


def test_run_one_hides_environment(sandbox, monkeypatch):
    monkeypatch.setenv("SPECINE_API_KEY", "leak")
    code = "import os\nprint(os.environ.get('SPECINE_API_KEY', 'none'))"
    result = sandbox.run_one(code, "python", TestCase("", "none"), LIMITS)
    assert result.verdict == Verdict.PASS


def test_run_one_unknown_language(sandbox):
    with pytest.raises(SandboxSetupError, match="no interpreter") as info:
        sandbox.run_one("x", "cobol", TestCase("", ""), LIMITS)
    assert info.value.result.verdict == Verdict.SETUP_ERROR


def test_run_one_missing_interpreter():
    sandbox = SandboxService(interpreters={"python": "/nonexistent/python3 {file}"})
    with pytest.raises(SandboxSetupError, match="cannot launch"):
        sandbox.run_one("print(1)", "python", TestCase("", "1"), LIMITS)


def test_run_one_failing_preexec_is_setup_error(sandbox, mocker):
    mocker.patch(
        "specine.services.sandbox.subprocess.Popen",
        side_effect=subprocess.SubprocessError("Exception occurred in preexec_fn."),
    )
    with pytest.raises(SandboxSetupError, match="preexec_fn") as info:
        sandbox.run_one("print(1)", "python", TestCase("", "1"), LIMITS)
    assert info.value.result.verdict == Verdict.SETUP_ERROR


def test_pass_report(sandbox):
    tests = [TestCase(str(n), str(n * n)) for n in range(4)] + [TestCase("5", "26")]
    code = "n = int(input())\nprint(n * n)"
    report = sandbox.pass_report(code, "python", tests, LIMITS)
    assert report.ratio == Ratio(4, 5)
    assert [r.verdict for r in report.results][-1] == Verdict.WRONG_OUTPUT


def test_pass_report_without_tests(sandbox):
    report = sandbox.pass_report("print(1)", "python", [], LIMITS)
    assert report.ratio == Ratio(0, 0)
    assert report.results == ()


def test_workers_must_be_positive():
    with pytest.raises(ValueError):
        SandboxService(workers=0)


SANITIZE_CASES = [
    ("print(1)", "print(1)"),
    ("```python\nprint(1)\n```", "print(1)"),
    ("```\nx = 1\n```", "x = 1"),
    ("```py\nx = 1\nprint(x)\n```", "x = 1\nprint(x)"),
    ("Here is the code:\n```python\nprint(2)\n```\nThis prints 2.", "print(2)"),
    ("```python\nprint(1)\n```\nor\n```python\nprint(2)\n```", "print(1)"),
    ("```python\nprint(3)\n", "print(3)"),
    (
        "Sure! Here's the solution.\nn = int(input())\nprint(n)",
        "n = int(input())\nprint(n)",
    ),
    ("print(1)\nThis code prints one.", "print(1)"),
    ("def f():\n    return 1\n\nprint(f())", "def f():\n    return 1\n\nprint(f())"),
    (
        "@cache\ndef f(n):\n    return n\nprint(f(2))",
        "@cache\ndef f(n):\n    return n\nprint(f(2))",
    ),
    ("# solution\nprint(1)", "# solution\nprint(1)"),
    ("```python\n\n\nprint(1)\n\n```", "print(1)"),
    ("import sys\nprint(sys.stdin.read())", "import sys\nprint(sys.stdin.read())"),
    ("print(1)\nDone", "print(1)"),
    ("Explanation: this reads input\nprint(1)", "print(1)"),
    ("Output: 5\nprint(5)", "print(5)"),
    ("class A:\n    pass\nprint(A())", "class A:\n    pass\nprint(A())"),
    ("x = [\n    1,\n]\nprint(x)", "x = [\n    1,\n]\nprint(x)"),
    ("print(max(\n    1, 2\n))", "print(max(\n    1, 2\n))"),
    (
        "```python\nfor i in range(3):\n    print(i)\n```",
        "for i in range(3):\n    print(i)",
    ),
    (
        'if __name__ == "__main__":\n    main()',
        'if __name__ == "__main__":\n    main()',
    ),
    ('"""Solve."""\nprint(1)', '"""Solve."""\nprint(1)'),
    ("while n > 0:\n    n -= 1", "while n > 0:\n    n -= 1"),
    ("Step 1\n```python\nprint(1)\n```", "print(1)"),
    (
        "try:\n    x = int(input())\nexcept ValueError:\n    x = 0\nprint(x)",
        "try:\n    x = int(input())\nexcept ValueError:\n    x = 0\nprint(x)",
    ),
    ("```python\nprint(1)\n```   ", "print(1)"),
    ("print(1)\n42", "print(1)"),
    ("with open('f') as f:\n    pass", "with open('f') as f:\n    pass"),
    ("match x:\n    case 1:\n        pass", "match x:\n    case 1:\n        pass"),
    (
        "I think this works:\n\n"
        "print(sum(map(int, input().split())))\n\nHope it helps!",
        "print(sum(map(int, input().split())))",
    ),
    ("```python3\nimport math\nprint(math.pi)\n```\n", "import math\nprint(math.pi)"),
]


@pytest.mark.parametrize(("raw", "expected"), SANITIZE_CASES)
def test_sanitize(raw, expected):
    code = sanitize(raw)
    assert code == expected
    assert sanitize(code) == code


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("```cpp\nint main() {}\n```", "int main() {}"),
        ("\nint main() {}\n", "int main() {}"),
    ],
)
def test_sanitize_other_languages(raw, expected):
    assert sanitize(raw, "cpp") == expected
    assert sanitize(expected, "cpp") == expected


@pytest.mark.parametrize(
    "raw", ["", "I cannot solve this.", "```python\n```", "\n  \n"]
)
def test_sanitize_rejects_empty(raw):
    with pytest.raises(EmptyAfterSanitizeError):
        sanitize(raw)


@pytest.mark.parametrize(
    ("actual", "expected", "tolerance", "verdict"),
    [
        ("3", "3", None, True),
        ("3  \n", "3", None, True),
        ("3\n\n\n", "3", None, True),
        ("1 \n2\t\n", "1\n2", None, True),
        ("", "", None, True),
        ("", "\n", None, True),
        ("3", "4", None, False),
        (" 3", "3", None, False),
        ("\n3", "3", None, False),
        ("1\n2", "1 2", None, False),
        ("0.3333333", "0.33333333", None, False),
        ("0.3333333", "0.33333333", 1e-6, True),
        ("1.0 2", "1 2", 1e-9, True),
        ("abc", "abd", 1e-6, False),
        ("1 2", "1 2 3", 1e-6, False),
        ("1\n2", "1", 1e-6, False),
    ],
)
def test_judge_output(actual, expected, tolerance, verdict):
    assert judge_output(actual, expected, tolerance) is verdict
    assert judge_output(expected, actual, tolerance) is verdict
