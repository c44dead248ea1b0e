import msgspec
import pytest
from typer.testing import CliRunner

from specine.cli import app
from specine.services import load_dataset, save_dataset
from specine.utils import Dataset, Problem, TestCase

runner = CliRunner()


@pytest.fixture
def source(tmp_path):
    problems = tuple(
        Problem(
            id=f"p{index}",
            spec_text="Double it.",
            private_tests=tuple(TestCase(str(n), str(2 * n)) for n in range(10)),
            difficulty=None if index == 9 else ("easy" if index < 5 else "hard"),
        )
        for index in range(10)
    )
    path = tmp_path / "source.jsonl"
    save_dataset(Dataset(name="source", problems=problems), path)
    return path


def test_prepare_samples_and_carves(tmp_path, source):
    out = tmp_path / "prepared.jsonl"
    options = ["--sample", "5", "--public", "3", "--seed", "1"]
    result = runner.invoke(app, ["prepare", str(source), str(out), *options])

    assert result.exit_code == 0, result.output
    assert "Wrote 5 of 10 problem(s)" in result.stdout
    assert "no difficulty tag" in result.stdout
    prepared = load_dataset(out)
    assert len(prepared.problems) == 5
    for problem in prepared.problems:
        assert len(problem.public_tests) == 3
        assert len(problem.private_tests) == 7

    again = tmp_path / "again.jsonl"
    runner.invoke(app, ["prepare", str(source), str(again), *options])
    assert again.read_bytes() == out.read_bytes()


def test_prepare_keeps_all_by_default(tmp_path, source):
    out = tmp_path / "prepared.jsonl"
    result = runner.invoke(app, ["prepare", str(source), str(out)])
    assert result.exit_code == 0, result.output
    assert len(load_dataset(out).problems) == 10


@pytest.mark.parametrize("args", [["--public", "10"], ["--sample", "11"]])
def test_prepare_errors(tmp_path, source, args):
    out = tmp_path / "o.jsonl"
    result = runner.invoke(app, ["prepare", str(source), str(out), *args])
    assert result.exit_code == 1
    assert "Error" in result.stdout
    assert not (tmp_path / "o.jsonl").exists()


@pytest.fixture
def apps_copy(tmp_path):
    def record(problem_id, **io):
        return {
            "problem_id": problem_id,
            "question": "Double n.",
            "input_output": msgspec.json.encode(io).decode(),
            "difficulty": "interview",
        }

    tests = {"inputs": ["1", "2", "3"], "outputs": ["2", "4", "6"]}
    records = [record(1, **tests), record(2, fn_name="f"), record(3, **tests)]
    path = tmp_path / "apps.jsonl"
    path.write_bytes(b"".join(msgspec.json.encode(r) + b"\n" for r in records))
    return path


def test_prepare_converts_upstream_copy(tmp_path, apps_copy):
    out = tmp_path / "prepared.jsonl"
    args = ["prepare", str(apps_copy), str(out), "--from", "apps", "--public", "1"]
    result = runner.invoke(app, args)

    assert result.exit_code == 0, result.output
    assert "1 conversion note(s)" in result.stdout
    assert "Wrote 2 of 2 problem(s)" in result.stdout
    prepared = load_dataset(out)
    assert [p.id for p in prepared.problems] == ["1", "3"]
    for problem in prepared.problems:
        assert len(problem.public_tests) == 1
        assert len(problem.private_tests) == 2


def test_prepare_xcodeeval_needs_unit_tests(tmp_path, apps_copy):
    out = tmp_path / "o.jsonl"
    args = ["prepare", str(apps_copy), str(out), "--from", "xcodeval"]
    result = runner.invoke(app, args)
    assert result.exit_code == 1
    assert "unit-test database" in result.stdout
    assert not out.exists()
