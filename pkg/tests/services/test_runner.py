import logging

import httpx
import pytest

from specine.services import BackendKind, BenchmarkRunner, CacheMode, file_digest
from specine.utils import Settings, UsageStats, Variant
from tests.fakes import InProcessSandbox, write_mini_run_inputs

PER_PROBLEM = [
    "id,solved,passed,total,pass_ratio",
    "broken,false,0,4,0.00",
    "double,false,164,205,80.00",
    "quick,true,205,205,100.00",
]


@pytest.fixture
def inputs(tmp_path):
    return write_mini_run_inputs(tmp_path)


@pytest.fixture
def dataset_path(inputs):
    return inputs[0]


@pytest.fixture
def scenario_path(inputs):
    return inputs[1]


@pytest.fixture(autouse=True)
def sandbox(mocker):
    fake = InProcessSandbox()
    mocker.patch("specine.services.runner.SandboxService", return_value=fake)
    return fake


@pytest.fixture
def settings():
    return Settings(iterations=3, parallelism=2)


def scripted_runner(settings, scenario_path, **kwargs) -> BenchmarkRunner:
    return BenchmarkRunner(
        settings,
        backend=BackendKind.SCRIPTED,
        scenario_path=scenario_path,
        log_level=logging.DEBUG,
        **kwargs,
    )


def test_run_writes_run_directory(tmp_path, dataset_path, scenario_path, settings):
    out = tmp_path / "runs" / "first"
    outcome = scripted_runner(settings, scenario_path).run(dataset_path, out)

    assert (out / "reports" / "per_problem.csv").read_text().splitlines() == PER_PROBLEM
    assert (out / "reports" / "rules.csv").is_file()
    assert sorted(p.name for p in (out / "traces").iterdir()) == [
        "broken.json",
        "double.json",
        "quick.json",
    ]
    assert outcome.storage.read_summary() == outcome.summary
    assert outcome.summary.solved == 1

    results = {r.problem_id: r for r in outcome.results}
    assert results["broken"].error.startswith("coder agent failed")
    assert results["quick"].gate_passed
    assert len(results["double"].trace) == 3
    assert [str(r.private) for r in results["double"].trace] == [
        "159/205",
        "164/205",
        "159/205",
    ]

    manifest = outcome.storage.read_manifest()
    assert manifest == outcome.manifest
    assert manifest.run_name == "first"
    assert manifest.dataset_name == "mini"
    assert manifest.dataset_digest == file_digest(dataset_path)
    assert manifest.backend == "scripted"
    assert manifest.problems == 3
    assert manifest.finished_at is not None
    assert manifest.config.max_iterations == 3
    assert sum(manifest.per_agent.values(), UsageStats()) == manifest.usage
    assert set(manifest.per_agent) == {"aligner", "coder", "lifter", "tester"}
    assert manifest.usage == outcome.summary.usage


def test_run_without_private_annotation(tmp_path, dataset_path, scenario_path):
    settings = Settings(iterations=1, trace_private=False)
    runner = scripted_runner(settings, scenario_path)
    outcome = runner.run(dataset_path, tmp_path / "run")
    double = next(r for r in outcome.results if r.problem_id == "double")
    assert double.initial_private is None
    assert double.trace[0].private is None


def test_replay_reproduces_run_offline(tmp_path, dataset_path, scenario_path, settings):
    cache = tmp_path / "replay.log"
    recorded = scripted_runner(
        settings, scenario_path, cache_mode=CacheMode.RECORD, cache_path=cache
    ).run(dataset_path, tmp_path / "recorded")
    assert cache.stat().st_size > 0

    requests = []

    def handler(request):
        requests.append(request)
        return httpx.Response(500)

    replayed = BenchmarkRunner(
        settings,
        backend=BackendKind.HTTP,
        cache_mode=CacheMode.REPLAY,
        cache_path=cache,
        transport=httpx.MockTransport(handler),
    ).run(dataset_path, tmp_path / "replayed")

    assert requests == []
    for name in ("per_problem.csv", "rules.csv"):
        assert (tmp_path / "replayed" / "reports" / name).read_text() == (
            tmp_path / "recorded" / "reports" / name
        ).read_text()
    assert [r.best_candidate for r in replayed.results] == [
        r.best_candidate for r in recorded.results
    ]
    # cache hits count no tokens by default
    assert replayed.summary.usage == UsageStats()
    assert replayed.manifest.cache_mode == "replay"


def test_ablate_compares_variants(tmp_path, dataset_path, scenario_path, settings):
    out = tmp_path / "ablation"
    outcomes, rows = scripted_runner(settings, scenario_path).ablate(
        dataset_path, out, [Variant.FULL, Variant.WO_A]
    )

    assert [o.manifest.config.variant for o in outcomes] == [Variant.FULL, Variant.WO_A]
    assert (out / "full" / "manifest.json").is_file()
    assert (out / "woA" / "manifest.json").is_file()
    assert [row.variant for row in rows] == ["full", "woA"]
    assert rows[0].pass_at_1 == outcomes[0].summary.pass_at_1
    lines = (out / "comparison.csv").read_text().splitlines()
    assert lines[0].startswith("variant,pass_at_1,avg_pass_ratio")
    assert [line.split(",")[0] for line in lines[1:]] == ["full", "woA"]
