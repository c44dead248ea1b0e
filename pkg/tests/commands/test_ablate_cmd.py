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


def test_ablate(tmp_path, inputs):
    dataset, scenario = inputs
    out = tmp_path / "ablation"
    result = runner.invoke(
        app,
        [
            "ablate",
            str(dataset),
            "--variants",
            "full,woT,woA",
            "--out",
            str(out),
            "--iterations",
            "2",
            "--backend",
            "scripted",
            "--scenario",
            str(scenario),
        ],
    )

    assert result.exit_code == 0, result.output
    assert "Ablation" in result.stdout
    lines = (out / "comparison.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == ["full", "woT", "woA"]
    for variant in ("full", "woT", "woA"):
        assert (out / variant / "reports" / "summary.json").is_file()


@pytest.mark.parametrize("variants", ["full,bogus", " , "])
def test_ablate_rejects_bad_variant_lists(tmp_path, inputs, variants):
    dataset, scenario = inputs
    result = runner.invoke(
        app,
        [
            "ablate",
            str(dataset),
            "--variants",
            variants,
            "--backend",
            "scripted",
            "--scenario",
            str(scenario),
        ],
    )
    assert result.exit_code == 2


def test_ablate_scripted_needs_scenario(tmp_path, inputs):
    dataset, _ = inputs
    result = runner.invoke(app, ["ablate", str(dataset), "--backend", "scripted"])
    assert result.exit_code == 1
    assert "The scripted backend needs --scenario." in result.stdout
