import ast
import logging
import math
import os
import re
import resource
import shlex
import signal
import subprocess
import sys
import tempfile
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import IO

from specine.utils import (
    LANG_SUFFIXES,
    SANDBOX_ENV_ALLOWLIST,
    EmptyAfterSanitizeError,
    ExecutionLimits,
    ExecutionResult,
    Logger,
    PassReport,
    Ratio,
    SandboxSetupError,
    TestCase,
    Verdict,
    normalize_output,
)
from specine.utils.constants import DEFAULT_INTERPRETERS, DEFAULT_SANDBOX_WORKERS

_FENCE_RE = re.compile(r"^```[^\n`]*\n(.*?)(?:^```[ \t]*$|\Z)", re.S | re.M)
_BLOCK_RE = re.compile(
    r"^(?:async\s+)?"
    r"(?:def|class|if|elif|else|for|while|try|except|finally|with|match|case)\b"
    r".*:\s*(?:#.*)?$"
)
_CODE_PREFIXES = ("@", "#", '"""', "'''")
_CLOSERS = frozenset(")]},")
_OPENERS = ("(", "[", "{", "\\")


def _plausible_python(line: str) -> bool:
    text = line.strip()
    if not text:
        return False
    if text.startswith(_CODE_PREFIXES) or _BLOCK_RE.match(text):
        return True
    # first or last line of a multi-line expression
    if text.endswith(_OPENERS) or all(char in _CLOSERS for char in text):
        return True
    try:
        tree = ast.parse(text)
    except (SyntaxError, ValueError):
        return False
    if len(tree.body) != 1:
        return True
    stmt = tree.body[0]
    # a lone word or literal, or "Label: words" read as an annotation
    if isinstance(stmt, ast.Expr) and isinstance(stmt.value, (ast.Name, ast.Constant)):
        return False
    if isinstance(stmt, ast.AnnAssign) and stmt.value is None:
        return False
    return True


def sanitize(raw: str, lang: str = "python") -> str:
    """Extract runnable code from a model completion.

    The first fenced block wins when any fence exists; an unclosed fence runs to
    the end of the text. Python output is then trimmed of leading and trailing
    lines that cannot be code. The function is idempotent.

    Args:
        raw (str): The raw completion text.
        lang (str, optional): Language tag of the expected code. Defaults to "python".

    Raises:
        EmptyAfterSanitizeError: If nothing code-like remains.

    Returns:
        str: The extracted code.
    """
    match = _FENCE_RE.search(raw)
    text = match.group(1) if match else raw
    lines = text.split("\n")

    if lang == "python":
        plausible = [i for i, line in enumerate(lines) if _plausible_python(line)]
        if not plausible:
            raise EmptyAfterSanitizeError("no code found in completion")
        code = "\n".join(lines[plausible[0] : plausible[-1] + 1])
    else:
        code = text.strip("\n")

    if not code.strip():
        raise EmptyAfterSanitizeError("no code found in completion")
    return code


def judge_output(actual: str, expected: str, tolerance: float | None = None) -> bool:
    """Compare program output against the expected output.

    Both sides are normalized (trailing whitespace per line and trailing blank
    lines removed) and compared line by line. With a `tolerance`, tokens that
    differ textually still match when both parse as numbers within the tolerance,
    absolute or relative.

    Returns:
        bool: True when the outputs are judged equal.
    """
    got, want = normalize_output(actual), normalize_output(expected)
    if got == want:
        return True
    if tolerance is None or len(got) != len(want):
        return False
    for got_line, want_line in zip(got, want, strict=True):
        got_tokens, want_tokens = got_line.split(), want_line.split()
        if len(got_tokens) != len(want_tokens):
            return False
        for a, b in zip(got_tokens, want_tokens, strict=True):
            if a == b:
                continue
            try:
                x, y = float(a), float(b)
            except ValueError:
                return False
            if not math.isclose(x, y, rel_tol=tolerance, abs_tol=tolerance):
                return False
    return True


def _limit_resources(limits: ExecutionLimits) -> Callable[[], None]:
    def apply() -> None:
        memory = limits.memory_limit
        resource.setrlimit(resource.RLIMIT_AS, (memory, memory))
        # files the program creates; stdout and stderr are pipes
        cap = limits.output_limit
        resource.setrlimit(resource.RLIMIT_FSIZE, (cap, cap))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))

    return apply


class _CappedReader(threading.Thread):
    """Drains a child's pipe to EOF, keeping at most `limit` bytes.

    `on_overflow` runs once, the first time the stream goes past the cap.
    """

    def __init__(
        self,
        stream: IO[bytes],
        limit: int,
        on_overflow: Callable[[], None] | None = None,
    ) -> None:
        super().__init__(daemon=True)
        self.stream = stream
        self.limit = limit
        self.on_overflow = on_overflow
        self.data = bytearray()
        self.overflow = False

    def run(self) -> None:
        with self.stream:
            while chunk := self.stream.read(65536):
                room = self.limit - len(self.data)
                self.data.extend(chunk[: max(room, 0)])
                if len(chunk) > room and not self.overflow:
                    self.overflow = True
                    if self.on_overflow is not None:
                        self.on_overflow()

    def text(self) -> str:
        return bytes(self.data).decode("utf-8", errors="replace")


def _kill_group(pid: int) -> None:
    try:
        os.killpg(pid, signal.SIGKILL)
    except ProcessLookupError:
        pass


class SandboxService:
    """Runs untrusted programs in child processes and judges their output.

    Every execution gets a fresh process in its own session and a private
    temporary directory; a process-wide semaphore bounds how many children run
    at once across all problems.
    """

    def __init__(
        self,
        interpreters: dict[str, str] | None = None,
        workers: int = DEFAULT_SANDBOX_WORKERS,
        float_tolerance: float | None = None,
        log_level: int = logging.WARNING,
    ) -> None:
        if workers < 1:
            raise ValueError("sandbox workers must be at least 1")
        self.interpreters = dict(interpreters or DEFAULT_INTERPRETERS)
        self.workers = workers
        self.float_tolerance = float_tolerance
        self.__slots = threading.BoundedSemaphore(workers)
        self.__logger = Logger.for_service("SandboxService", log_level)

    def _command(self, lang: str, source: Path) -> list[str]:
        template = self.interpreters.get(lang)
        if template is None:
            raise SandboxSetupError(
                f"no interpreter configured for language '{lang}'",
                result=ExecutionResult(
                    verdict=Verdict.SETUP_ERROR,
                    stderr=f"no interpreter configured for language '{lang}'",
                ),
            )
        return [
            part.replace("{python}", sys.executable).replace("{file}", str(source))
            for part in shlex.split(template)
        ]

    def run_one(
        self, code: str, lang: str, test: TestCase, limits: ExecutionLimits
    ) -> ExecutionResult:
        """Run `code` on one test case and judge its output.

        Args:
            code (str): Sanitized program source.
            lang (str): Language tag selecting the interpreter template.
            test (TestCase): The test whose input is fed on standard input.
            limits (ExecutionLimits): Wall time, memory and output caps.

        Output is judged before overflow is considered; only stdout counts
        against `limits.output_limit`, stderr is truncated to the same size.

        Raises:
            SandboxSetupError: If the interpreter is not configured or cannot start.

        Returns:
            ExecutionResult: The verdict with captured (truncated) output.
        """
        with self.__slots, tempfile.TemporaryDirectory(prefix="specine-") as workdir:
            root = Path(workdir)
            source = root / f"main{LANG_SUFFIXES.get(lang, '.txt')}"
            source.write_text(code, encoding="utf-8")
            (root / "stdin").write_text(test.input, encoding="utf-8")
            argv = self._command(lang, source)
            env = {k: os.environ[k] for k in SANDBOX_ENV_ALLOWLIST if k in os.environ}

            start = time.perf_counter()
            timed_out = False
            with (root / "stdin").open("rb") as stdin:
                try:
                    proc = subprocess.Popen(
                        argv,
                        stdin=stdin,
                        stdout=subprocess.PIPE,
                        stderr=subprocess.PIPE,
                        cwd=root,
                        env=env,
                        start_new_session=True,
                        preexec_fn=_limit_resources(limits),
                    )
                except (OSError, subprocess.SubprocessError) as ex:
                    message = f"cannot launch interpreter for '{lang}': {ex}"
                    raise SandboxSetupError(
                        message,
                        result=ExecutionResult(
                            verdict=Verdict.SETUP_ERROR, stderr=message
                        ),
                    ) from ex
                stdout = _CappedReader(
                    proc.stdout, limits.output_limit, lambda: _kill_group(proc.pid)
                )
                stderr = _CappedReader(proc.stderr, limits.output_limit)
                stdout.start()
                stderr.start()
                try:
                    proc.wait(timeout=limits.wall_timeout)
                except subprocess.TimeoutExpired:
                    timed_out = True
                    _kill_group(proc.pid)
                    proc.wait()
                # a detached grandchild may keep a pipe open
                stdout.join(timeout=1.0)
                stderr.join(timeout=1.0)
            duration = time.perf_counter() - start
            out, err = stdout.text(), stderr.text()

        if timed_out:
            verdict = Verdict.TIMEOUT
        elif judge_output(out, test.expected, self.float_tolerance):
            verdict = Verdict.PASS
        elif stdout.overflow:
            verdict = Verdict.OUTPUT_OVERFLOW
        elif proc.returncode != 0:
            verdict = Verdict.RUNTIME_ERROR
        else:
            verdict = Verdict.WRONG_OUTPUT

        self.__logger.debug(f"{lang} run finished in {duration:.3f}s: {verdict}")
        return ExecutionResult(
            verdict=verdict,
            stdout=out,
            stderr=err,
            duration=duration,
            exit_code=None if timed_out else proc.returncode,
        )

    def pass_report(
        self,
        code: str,
        lang: str,
        tests: Sequence[TestCase],
        limits: ExecutionLimits,
    ) -> PassReport:
        """Run every test (no short-circuit) and count the passes.

        Raises:
            SandboxSetupError: Propagated from the first failing launch.

        Returns:
            PassReport: Results aligned with `tests`; an empty list gives 0/0.
        """
        if not tests:
            return PassReport()
        with ThreadPoolExecutor(max_workers=min(self.workers, len(tests))) as pool:
            results = tuple(
                pool.map(lambda test: self.run_one(code, lang, test, limits), tests)
            )
        passed = sum(1 for result in results if result.verdict == Verdict.PASS)
        return PassReport(results=results, ratio=Ratio(passed=passed, total=len(tests)))
