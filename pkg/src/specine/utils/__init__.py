from .cli import (
    format_ratio,
    print_error,
    print_info,
    print_success,
    print_warning,
    validate_variant,
    validate_variant_list,
)
from .constants import (
    AUDIT_FILE,
    CACHE_DIR,
    COMPARISON_FILE,
    CONFIG_FILE,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PUBLIC_CARVE,
    EDGE_CASE_COUNT,
    LANG_SUFFIXES,
    MANIFEST_FILE,
    PER_PROBLEM_FILE,
    REPLAY_FILE,
    REPORTS_DIR,
    RULES_FILE,
    SANDBOX_ENV_ALLOWLIST,
    SUMMARY_FILE,
    TRACE_VERSION,
    TRACES_DIR,
)
from .dsl import (
    ApiRef,
    DiffKind,
    DslDifference,
    DslParseReport,
    ExampleCase,
    KeyConcept,
    RequirementDsl,
    dsl_diff,
    dsl_schema,
    is_populated,
    parse_dsl,
    render_dsl,
    validate_dsl,
)
from .errors import (
    AgentFailureError,
    BackendUnavailableError,
    DatasetParseError,
    DslValidationError,
    DuplicateProblemError,
    EmptyAfterSanitizeError,
    MalformedResponseError,
    MissingCanonicalError,
    NotEnoughTestsError,
    ProblemValidationError,
    ReplayCacheCorruptError,
    ReplayMissError,
    SampleSizeError,
    SandboxSetupError,
    SettingsError,
    TraceDecodeError,
    UnknownProblemError,
    UnknownRunError,
)
from .logger import Logger, get_logger
from .markup import (
    edge_tests,
    parse_ingredient_blocks,
    parse_rewrite,
    parse_tests,
    render_ingredient,
    render_tests,
)
from .models import (
    RULE_TITLES,
    AlignedIngredient,
    AlignedSpec,
    AlignmentRule,
    Candidate,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    ExecutionLimits,
    ExecutionResult,
    FeedbackMode,
    GenerationConfig,
    HierarchicalScore,
    Ordering,
    Origin,
    PassReport,
    PipelineConfig,
    Problem,
    Ratio,
    RichHelpPanel,
    TestCase,
    UsageStats,
    Variant,
    Verdict,
    compare_scores,
    normalize_output,
    render_aligned_spec,
)
from .records import (
    AuditSummary,
    Dataset,
    DatasetRecord,
    EvalSummary,
    IterationRecord,
    PipelineResult,
    ProblemEval,
    RunManifest,
    TraceRecord,
    WireTest,
)
from .settings import Settings, apply_overrides, load_settings

__all__ = [
    "AUDIT_FILE",
    "CACHE_DIR",
    "COMPARISON_FILE",
    "CONFIG_FILE",
    "DEFAULT_OUTPUT_DIR",
    "DEFAULT_PUBLIC_CARVE",
    "EDGE_CASE_COUNT",
    "LANG_SUFFIXES",
    "MANIFEST_FILE",
    "PER_PROBLEM_FILE",
    "REPLAY_FILE",
    "REPORTS_DIR",
    "RULES_FILE",
    "RULE_TITLES",
    "SANDBOX_ENV_ALLOWLIST",
    "SUMMARY_FILE",
    "TRACES_DIR",
    "TRACE_VERSION",
    "AgentFailureError",
    "AlignedIngredient",
    "AlignedSpec",
    "AlignmentRule",
    "ApiRef",
    "AuditSummary",
    "BackendUnavailableError",
    "Candidate",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "Dataset",
    "DatasetParseError",
    "DatasetRecord",
    "DiffKind",
    "DslDifference",
    "DslParseReport",
    "DslValidationError",
    "DuplicateProblemError",
    "EmptyAfterSanitizeError",
    "EvalSummary",
    "ExampleCase",
    "ExecutionLimits",
    "ExecutionResult",
    "FeedbackMode",
    "GenerationConfig",
    "HierarchicalScore",
    "IterationRecord",
    "KeyConcept",
    "Logger",
    "MalformedResponseError",
    "MissingCanonicalError",
    "NotEnoughTestsError",
    "Ordering",
    "Origin",
    "PassReport",
    "PipelineConfig",
    "PipelineResult",
    "Problem",
    "ProblemEval",
    "ProblemValidationError",
    "Ratio",
    "ReplayCacheCorruptError",
    "ReplayMissError",
    "RequirementDsl",
    "RichHelpPanel",
    "RunManifest",
    "SampleSizeError",
    "SandboxSetupError",
    "Settings",
    "SettingsError",
    "TestCase",
    "TraceDecodeError",
    "TraceRecord",
    "UnknownProblemError",
    "UnknownRunError",
    "UsageStats",
    "Variant",
    "Verdict",
    "WireTest",
    "apply_overrides",
    "compare_scores",
    "dsl_diff",
    "dsl_schema",
    "edge_tests",
    "format_ratio",
    "get_logger",
    "is_populated",
    "load_settings",
    "normalize_output",
    "parse_dsl",
    "parse_ingredient_blocks",
    "parse_rewrite",
    "parse_tests",
    "print_error",
    "print_info",
    "print_success",
    "print_warning",
    "render_aligned_spec",
    "render_dsl",
    "render_ingredient",
    "render_tests",
    "validate_dsl",
    "validate_variant",
    "validate_variant_list",
]
