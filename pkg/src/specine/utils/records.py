from datetime import datetime

import msgspec

from .constants import TRACE_VERSION
from .dsl import RequirementDsl
from .models import (
    AlignedIngredient,
    AlignedSpec,
    Candidate,
    FeedbackMode,
    HierarchicalScore,
    PipelineConfig,
    Problem,
    Ratio,
    TestCase,
    UsageStats,
    Variant,
)


class IterationRecord(msgspec.Struct, frozen=True, omit_defaults=True):
    iteration: int
    proposed: tuple[AlignedIngredient, ...] = ()
    candidate: Candidate | None = None
    score: HierarchicalScore | None = None
    retained: bool = False
    lifted: RequirementDsl | None = None
    feedback_mode: FeedbackMode | None = None
    rewrite: str | None = None
    error: str | None = None
    prompt_refs: tuple[str, ...] = ()
    # evaluation-side private ratio, filled in by the harness
    private: Ratio | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class PipelineResult(msgspec.Struct, frozen=True, omit_defaults=True):
    problem_id: str
    variant: Variant = Variant.FULL
    gate_passed: bool = False
    initial_candidate: Candidate | None = None
    initial_score: HierarchicalScore | None = None
    best_candidate: Candidate | None = None
    best_score: HierarchicalScore | None = None
    best_spec: AlignedSpec | None = None
    trace: tuple[IterationRecord, ...] = ()
    generated_tests: tuple[TestCase, ...] = ()
    usage: UsageStats = msgspec.field(default_factory=UsageStats)
    wall_time: float = 0.0
    error: str | None = None
    warnings: tuple[str, ...] = ()
    initial_private: Ratio | None = None


class TraceRecord(msgspec.Struct, frozen=True):
    problem_id: str
    config: PipelineConfig
    result: PipelineResult
    version: int = TRACE_VERSION


class Dataset(msgspec.Struct, frozen=True):
    name: str
    problems: tuple[Problem, ...] = ()
    canonical_solutions: dict[str, str] = msgspec.field(default_factory=dict)

    def get(self, problem_id: str) -> Problem | None:
        for problem in self.problems:
            if problem.id == problem_id:
                return problem
        return None


class WireTest(msgspec.Struct, frozen=True):
    input: str
    output: str


class DatasetRecord(msgspec.Struct, frozen=True, omit_defaults=True):
    """One line of a dataset file."""

    id: str
    description: str
    private_tests: list[WireTest] = msgspec.field(default_factory=list)
    public_tests: list[WireTest] = msgspec.field(default_factory=list)
    title: str | None = None
    difficulty: str | None = None
    canonical_solution: str | None = None


class ProblemEval(msgspec.Struct, frozen=True):
    id: str
    solved: bool
    private: Ratio


class EvalSummary(msgspec.Struct, frozen=True):
    dataset: str
    problems: int
    solved: int
    pass_at_1: float
    pass_at_1_fraction: str
    avg_pass_ratio: float
    avg_pass_ratio_fraction: str
    per_problem: tuple[ProblemEval, ...] = ()
    usage: UsageStats = msgspec.field(default_factory=UsageStats)
    wall_time: float = 0.0
    variant: Variant | None = None


class AuditSummary(msgspec.Struct, frozen=True):
    correct: int
    total: int
    accuracy: float
    per_problem: dict[str, Ratio] = msgspec.field(default_factory=dict)


class RunManifest(msgspec.Struct, frozen=True, omit_defaults=True):
    run_name: str
    created_at: datetime
    dataset_path: str
    dataset_name: str
    dataset_digest: str
    backend: str
    cache_mode: str
    seed: int
    config: PipelineConfig
    layout: dict[str, str] = msgspec.field(default_factory=dict)
    finished_at: datetime | None = None
    problems: int = 0
    usage: UsageStats | None = None
    per_agent: dict[str, UsageStats] = msgspec.field(default_factory=dict)
    version: int = TRACE_VERSION
