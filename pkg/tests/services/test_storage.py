import logging
from datetime import datetime

import pytest
from freezegun import freeze_time
from tzlocal import get_localzone

from specine.services import ComparisonRow, RunStorage, find_trace, load_trace, now
from specine.services.storage import trace_filename
from specine.utils import (
    AlignmentRule,
    AuditSummary,
    EvalSummary,
    PipelineConfig,
    PipelineResult,
    ProblemEval,
    Ratio,
    RunManifest,
    Settings,
    TraceDecodeError,
    TraceRecord,
    UnknownProblemError,
)


@pytest.fixture
def storage(tmp_path):
    service = RunStorage(tmp_path / "run", log_level=logging.DEBUG)
    service.initialize()
    return service


def trace(problem_id: str) -> TraceRecord:
    return TraceRecord(
        problem_id=problem_id,
        config=PipelineConfig(),
        result=PipelineResult(problem_id=problem_id, gate_passed=True),
    )


def summary() -> EvalSummary:
    return EvalSummary(
        dataset="d",
        problems=2,
        solved=1,
        pass_at_1=50.0,
        pass_at_1_fraction="1/2",
        avg_pass_ratio=66.67,
        avg_pass_ratio_fraction="2/3",
        per_problem=(
            ProblemEval(id="a", solved=True, private=Ratio(3, 3)),
            ProblemEval(id="b", solved=False, private=Ratio(1, 3)),
        ),
    )


def test_initialize_creates_layout(storage):
    for directory in ("traces", "reports", "cache"):
        assert (storage.root / directory).is_dir()
    assert storage.replay_path == storage.root / "cache" / "replay.log"
    assert storage.layout()["cache"] == "cache/replay.log"


def test_now_is_local():
    freeze_at = datetime(2025, 1, 1, 12, 0, 0)
    with freeze_time(freeze_at):
        stamp = now()
    assert stamp.tzinfo is not None
    assert stamp.utcoffset() == get_localzone().utcoffset(freeze_at)


def test_manifest_round_trip(storage):
    with freeze_time("2025-01-01 12:00:00"):
        manifest = RunManifest(
            run_name="run",
            created_at=now(),
            dataset_path="d.jsonl",
            dataset_name="d",
            dataset_digest="abc",
            backend="scripted",
            cache_mode="off",
            seed=0,
            config=PipelineConfig(),
            layout=storage.layout(),
        )
    storage.write_manifest(manifest)
    assert storage.read_manifest() == manifest
    assert not list(storage.root.glob("*.tmp"))


def test_config_is_masked(storage):
    storage.write_config(Settings(api_key="secret"))
    text = storage.config_path.read_text()
    assert "secret" not in text
    assert '"***"' in text


def test_traces(storage):
    storage.write_trace(trace("b"))
    storage.write_trace(trace("a/../x"))
    path = storage.write_trace(trace("a"))

    assert path.name == "a.json"
    assert trace_filename("a/../x") == "a_.._x.json"
    assert [r.problem_id for r in storage.read_traces()] == ["a", "a/../x", "b"]
    assert load_trace(path) == trace("a")


def test_find_trace(storage):
    storage.write_trace(trace("a"))
    storage.write_trace(trace("odd id"))
    file = storage.traces_dir / "a.json"

    assert find_trace(file).problem_id == "a"
    assert find_trace(storage.root, "a").problem_id == "a"
    assert find_trace(storage.traces_dir, "odd id").problem_id == "odd id"
    with pytest.raises(UnknownProblemError):
        find_trace(storage.root, "zzz")
    with pytest.raises(UnknownProblemError):
        find_trace(file, "b")
    with pytest.raises(UnknownProblemError):
        find_trace(storage.root)


def test_malformed_trace(storage):
    bad = storage.traces_dir / "bad.json"
    bad.write_text('{"problem_id": 3}')
    with pytest.raises(TraceDecodeError, match="Malformed trace"):
        load_trace(bad)
    with pytest.raises(TraceDecodeError):
        storage.read_traces()


def test_reports(storage):
    storage.write_summary(summary())
    assert storage.read_summary() == summary()

    storage.write_per_problem(summary())
    assert (storage.reports_dir / "per_problem.csv").read_text().splitlines() == [
        "id,solved,passed,total,pass_ratio",
        "a,true,3,3,100.00",
        "b,false,1,3,33.33",
    ]

    storage.write_rules({AlignmentRule.APIS: 50.0, AlignmentRule.HINTS_OR_TIPS: 0.0})
    assert (storage.reports_dir / "rules.csv").read_text().splitlines() == [
        "rule,title,effective_percent",
        "Apis,APIs,50.00",
        "HintsOrTips,Hints or Tips,0.00",
    ]

    storage.write_audit(AuditSummary(correct=6, total=10, accuracy=60.0))
    assert '"accuracy": 60.0' in (storage.reports_dir / "audit.json").read_text()


def test_comparison(storage):
    rows = [
        ComparisonRow("full", 50.0, 66.667, 100, 20, 1.23456),
        ComparisonRow("woA", 0.0, 10.0, 0, 0, 0.0),
    ]
    path = storage.write_comparison(rows)
    assert path == storage.root / "comparison.csv"
    assert path.read_text().splitlines() == [
        "variant,pass_at_1,avg_pass_ratio,prompt_tokens,completion_tokens,wall_time",
        "full,50.00,66.67,100,20,1.235",
        "woA,0.00,10.00,0,0,0.000",
    ]
