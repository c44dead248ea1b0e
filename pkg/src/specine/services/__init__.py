from .agents import AgentCall, AgentOutcome, AgentService, PromptBook, RuleEntry
from .bench import (
    UNSPECIFIED_STRATUM,
    BenchService,
    allocate,
    carve_dataset,
    carve_public,
    file_digest,
    load_dataset,
    percent,
    rule_effectiveness,
    sample_stratified,
    save_dataset,
    stratum,
)
from .ingest import (
    SourceFormat,
    convert_apps,
    convert_codecontests,
    convert_xcodeeval,
    load_source,
)
from .llm import (
    Backend,
    BackendKind,
    CacheMode,
    CachedBackend,
    HttpBackend,
    LedgerEntry,
    LedgerTotals,
    LLMService,
    ReplayCache,
    ReplayRecord,
    Scenario,
    ScriptedBackend,
    ScriptedEntry,
    ScriptValue,
    UsageLedger,
    build_backend,
    request_digest,
)
from .pipeline import (
    RANDOM_RULES,
    Identification,
    PipelineService,
    Scored,
    render_feedback,
)
from .runner import BenchmarkRunner, RunOutcome
from .sandbox import SandboxService, judge_output, sanitize
from .storage import (
    ComparisonRow,
    RunStorage,
    find_trace,
    load_trace,
    now,
    trace_filename,
)

__all__ = [
    "RANDOM_RULES",
    "UNSPECIFIED_STRATUM",
    "AgentCall",
    "AgentOutcome",
    "AgentService",
    "Backend",
    "BackendKind",
    "BenchService",
    "BenchmarkRunner",
    "CacheMode",
    "CachedBackend",
    "ComparisonRow",
    "HttpBackend",
    "Identification",
    "LLMService",
    "LedgerEntry",
    "LedgerTotals",
    "PipelineService",
    "PromptBook",
    "ReplayCache",
    "ReplayRecord",
    "RuleEntry",
    "RunOutcome",
    "RunStorage",
    "SandboxService",
    "SourceFormat",
    "Scenario",
    "Scored",
    "ScriptValue",
    "ScriptedBackend",
    "ScriptedEntry",
    "UsageLedger",
    "allocate",
    "build_backend",
    "carve_dataset",
    "carve_public",
    "convert_apps",
    "convert_codecontests",
    "convert_xcodeeval",
    "file_digest",
    "find_trace",
    "judge_output",
    "load_dataset",
    "load_source",
    "load_trace",
    "now",
    "percent",
    "render_feedback",
    "request_digest",
    "rule_effectiveness",
    "sample_stratified",
    "sanitize",
    "save_dataset",
    "stratum",
    "trace_filename",
]
