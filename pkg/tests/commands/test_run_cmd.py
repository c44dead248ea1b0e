import pytest
from typer.testing import CliRunner

from specine.cli import app
from tests.fakes import SPECINE_ENV, InProcessSandbox, write_mini_run_inputs

runner = CliRunner()


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in SPECINE_ENV:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture(autouse=True)
def sandbox(mocker):
    fake = InProcessSandbox()
    mocker.patch("specine.services.runner.SandboxService", return_value=fake)
    return fake


@pytest.fixture
def inputs(tmp_path):
    return write_mini_run_inputs(tmp_path)


def invoke_run(dataset, out, *args):
    return runner.invoke(
        app,
        ["run", str(dataset), "--out", str(out), "--iterations", "3", *args],
    )


def test_run_scripted(tmp_path, inputs):
    dataset, scenario = inputs
    out = tmp_path / "run"
    result = invoke_run(
        dataset,
        out,
        "--backend",
        "scripted",
        "--scenario",
        str(scenario),
        "--seed",
        "4",
    )

    assert result.exit_code == 0, result.output
    assert "Pass@1" in result.stdout
    assert "Run written to" in result.stdout
    lines = (out / "reports" / "per_problem.csv").read_text().splitlines()
    assert lines[1:] == [
        "broken,false,0,4,0.00",
        "double,false,164,205,80.00",
        "quick,true,205,205,100.00",
    ]
    assert '"seed": 4' in (out / "config.json").read_text()


def test_run_record_then_replay(tmp_path, inputs):
    dataset, scenario = inputs
    cache = tmp_path / "replay.log"
    recorded = invoke_run(
        dataset,
        tmp_path / "recorded",
        "--backend",
        "scripted",
        "--scenario",
        str(scenario),
        "--cache",
        "record",
        "--cache-file",
        str(cache),
    )
    assert recorded.exit_code == 0, recorded.output

    replayed = invoke_run(
        dataset,
        tmp_path / "replayed",
        "--backend",
        "scripted",
        "--cache",
        "replay",
        "--cache-file",
        str(cache),
    )
    assert replayed.exit_code == 0, replayed.output
    report = ("reports", "per_problem.csv")
    assert (tmp_path / "replayed").joinpath(*report).read_text() == (
        tmp_path / "recorded"
    ).joinpath(*report).read_text()


def test_run_variant_option(tmp_path, inputs):
    dataset, scenario = inputs
    out = tmp_path / "run"
    result = invoke_run(
        dataset,
        out,
        "--backend",
        "scripted",
        "--scenario",
        str(scenario),
        "--variant",
        "woa",
    )
    assert result.exit_code == 0, result.output
    assert '"variant": "woA"' in (out / "manifest.json").read_text()


def test_run_unknown_variant(tmp_path, inputs):
    dataset, _ = inputs
    result = invoke_run(dataset, tmp_path / "run", "--variant", "everything")
    assert result.exit_code == 2


def test_run_scripted_needs_scenario(tmp_path, inputs):
    dataset, _ = inputs
    result = invoke_run(dataset, tmp_path / "run", "--backend", "scripted")
    assert result.exit_code == 1
    assert "The scripted backend needs --scenario." in result.stdout


def test_run_bad_dataset(tmp_path, inputs):
    _, scenario = inputs
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    scripted = ("--backend", "scripted", "--scenario", str(scenario))
    result = invoke_run(bad, tmp_path / "run", *scripted)
    assert result.exit_code == 1
    assert "Run failed" in result.stdout


def test_run_invalid_config(tmp_path, inputs):
    dataset, scenario = inputs
    config = tmp_path / "specine.toml"
    config.write_text("colour = 'blue'\n")
    result = runner.invoke(
        app,
        [
            "--config",
            str(config),
            "run",
            str(dataset),
            "--backend",
            "scripted",
            "--scenario",
            str(scenario),
        ],
    )
    assert result.exit_code == 1
    assert "Invalid configuration" in result.stdout
