import hashlib
import re
from enum import IntEnum, StrEnum
from fractions import Fraction
from typing import ClassVar, Literal

import msgspec

from .constants import (
    DEFAULT_AGENT_ATTEMPTS,
    DEFAULT_ITERATIONS,
    DEFAULT_LANG,
    DEFAULT_MAX_RETRIES,
    DEFAULT_MAX_TOKENS,
    DEFAULT_MEMORY_LIMIT,
    DEFAULT_MODEL,
    DEFAULT_OUTPUT_LIMIT,
    DEFAULT_REQUEST_TIMEOUT,
    DEFAULT_SEED,
    DEFAULT_TEMPERATURE,
    DEFAULT_TESTER_K,
    DEFAULT_WALL_TIMEOUT,
)


class RichHelpPanel(StrEnum):
    PIPELINE = "Pipeline Commands"
    INSPECTION = "Inspection Commands"
    DATASETS = "Dataset Commands"


class Origin(StrEnum):
    PUBLIC = "public"
    GENERATED = "generated"
    EDGE = "edge"


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class AlignmentRule(StrEnum):
    SPECIFICATION_BACKGROUND = "SpecificationBackground"
    SPECIFICATION_PURPOSE = "SpecificationPurpose"
    KEY_CONCEPTS = "KeyConcepts"
    INPUT_REQUIREMENTS = "InputRequirements"
    OUTPUT_REQUIREMENTS = "OutputRequirements"
    EXAMPLES_WITH_EXPLANATIONS = "ExamplesWithExplanations"
    EDGE_CORNER_CASES = "EdgeCornerCases"
    APIS = "Apis"
    ERROR_HANDLING_REQUIREMENTS = "ErrorHandlingRequirements"
    HINTS_OR_TIPS = "HintsOrTips"

    @property
    def title(self) -> str:
        return RULE_TITLES[self]

    @classmethod
    def lookup(cls, name: str) -> "AlignmentRule | None":
        """Resolve a rule from its enum value or human-readable title.

        Matching ignores case, whitespace and punctuation, so "Edge/Corner Cases",
        "edge corner cases" and "EdgeCornerCases" all resolve to the same rule.

        Args:
            name (str): The rule name as written by a model or a user.

        Returns:
            AlignmentRule | None: The matching rule, or None when unknown.
        """
        return _RULE_KEYS.get(_squash(name))


RULE_TITLES: dict[AlignmentRule, str] = {
    AlignmentRule.SPECIFICATION_BACKGROUND: "Specification Background",
    AlignmentRule.SPECIFICATION_PURPOSE: "Specification Purpose",
    AlignmentRule.KEY_CONCEPTS: "Key Concepts",
    AlignmentRule.INPUT_REQUIREMENTS: "Input Requirements",
    AlignmentRule.OUTPUT_REQUIREMENTS: "Output Requirements",
    AlignmentRule.EXAMPLES_WITH_EXPLANATIONS: "Examples with Explanations",
    AlignmentRule.EDGE_CORNER_CASES: "Edge/Corner Cases",
    AlignmentRule.APIS: "APIs",
    AlignmentRule.ERROR_HANDLING_REQUIREMENTS: "Error Handling Requirements",
    AlignmentRule.HINTS_OR_TIPS: "Hints or Tips",
}


def _squash(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


_RULE_KEYS: dict[str, AlignmentRule] = {
    **{_squash(rule.value): rule for rule in AlignmentRule},
    **{_squash(title): rule for rule, title in RULE_TITLES.items()},
}


class Variant(StrEnum):
    FULL = "full"
    WO_PTC = "woPTC"
    WO_T = "woT"
    W_TF = "wTF"
    WO_A = "woA"
    WO_AR = "woAR"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        """Parse a variant name case-insensitively.

        Raises:
            ValueError: If the name matches no variant.
        """
        for variant in cls:
            if variant.value.lower() == name.strip().lower():
                return variant
        raise ValueError(
            f"Unknown variant '{name}'. Expected one of: "
            + ", ".join(v.value for v in cls)
        )


class FeedbackMode(StrEnum):
    LIFT = "lift"
    TEST_FEEDBACK = "test_feedback"


class Verdict(StrEnum):
    PASS = "pass"
    WRONG_OUTPUT = "wrong_output"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    OUTPUT_OVERFLOW = "output_overflow"
    SETUP_ERROR = "setup_error"


def normalize_output(text: str) -> list[str]:
    """Normalize program output for judging.

    Trailing whitespace is stripped from every line and trailing blank lines are
    dropped; nothing else changes.

    Args:
        text (str): Raw output text.

    Returns:
        list[str]: The normalized line sequence.
    """
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and not lines[-1]:
        lines.pop()
    return lines


class TestCase(msgspec.Struct, frozen=True):
    __test__: ClassVar[bool] = False

    input: str
    expected: str
    origin: Origin = Origin.PUBLIC

    def identity(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return tuple(normalize_output(self.input)), tuple(
            normalize_output(self.expected)
        )


class Problem(msgspec.Struct, frozen=True):
    id: str
    spec_text: str
    public_tests: tuple[TestCase, ...] = ()
    private_tests: tuple[TestCase, ...] = ()
    title: str | None = None
    difficulty: str | None = None

    def violations(self) -> list[str]:
        """List the problem's invariant violations.

        Returns:
            list[str]: Human-readable violations, empty when the problem is valid.
        """
        found: list[str] = []
        if not self.id.strip():
            found.append("id is empty")
        if not self.spec_text.strip():
            found.append("specification text is empty")
        if not self.private_tests:
            found.append("no private tests")
        public = {test.identity() for test in self.public_tests}
        if any(test.identity() in public for test in self.private_tests):
            found.append("a test appears in both public and private tests")
        return found


class Candidate(msgspec.Struct, frozen=True):
    code: str
    lang: str = DEFAULT_LANG
    iteration: int = 0
    spec_version: str = ""


class Ratio(msgspec.Struct, frozen=True):
    passed: int = 0
    total: int = 0

    @property
    def absent(self) -> bool:
        return self.total == 0

    @property
    def value(self) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.passed, self.total)

    @property
    def complete(self) -> bool:
        return self.total > 0 and self.passed == self.total

    @property
    def percent(self) -> float:
        return round(float(self.value * 100), 2)

    def __str__(self) -> str:
        return f"{self.passed}/{self.total}"


class HierarchicalScore(msgspec.Struct, frozen=True):
    primary: Ratio = msgspec.field(default_factory=Ratio)
    secondary: Ratio = msgspec.field(default_factory=Ratio)

    @property
    def is_perfect(self) -> bool:
        """True when every present component passed all of its tests."""
        present = [r for r in (self.primary, self.secondary) if not r.absent]
        return bool(present) and all(r.complete for r in present)

    def key(self) -> tuple[Fraction, Fraction]:
        return self.primary.value, self.secondary.value


def compare_scores(a: HierarchicalScore, b: HierarchicalScore) -> Ordering:
    """Compare two scores lexicographically on (primary, secondary).

    Components are compared as exact fractions; absent components count as 0.

    Returns:
        Ordering: LESS, EQUAL or GREATER from the point of view of `a`.
    """
    ka, kb = a.key(), b.key()
    if ka > kb:
        return Ordering.GREATER
    if ka < kb:
        return Ordering.LESS
    return Ordering.EQUAL


class AlignedIngredient(msgspec.Struct, frozen=True):
    rule: AlignmentRule
    content: str
    iteration_added: int = 0


class AlignedSpec(msgspec.Struct, frozen=True):
    base: str
    retained: tuple[AlignedIngredient, ...] = ()

    @property
    def rules(self) -> tuple[AlignmentRule, ...]:
        return tuple(ingredient.rule for ingredient in self.retained)

    @property
    def version(self) -> str:
        return hashlib.sha256(
            render_aligned_spec(self).encode("utf-8")
        ).hexdigest()[:12]

    def with_ingredients(
        self, proposed: tuple[AlignedIngredient, ...]
    ) -> "AlignedSpec":
        """Return a spec with `proposed` retained, replacing same-rule ingredients.

        Ingredients of other rules keep their position; each replacing ingredient is
        appended in proposal order, and within one proposal the last ingredient for
        a rule wins.
        """
        latest: dict[AlignmentRule, AlignedIngredient] = {}
        for ingredient in proposed:
            latest.pop(ingredient.rule, None)
            latest[ingredient.rule] = ingredient
        kept = tuple(i for i in self.retained if i.rule not in latest)
        return AlignedSpec(base=self.base, retained=kept + tuple(latest.values()))

    def with_base(self, base: str) -> "AlignedSpec":
        return AlignedSpec(base=base, retained=self.retained)


def _looks_like_section(line: str) -> bool:
    if line.startswith("\\"):
        return _looks_like_section(line[1:])
    return line.startswith("## ")


def _escape_content(content: str) -> str:
    return "\n".join(
        f"\\{line}" if _looks_like_section(line) else line
        for line in content.split("\n")
    )


def render_aligned_spec(spec: AlignedSpec) -> str:
    """Render an aligned specification as text.

    The base text comes first, followed by one "## <rule title>" section per
    retained ingredient in retention order. Content lines that would read as a
    section marker get a leading backslash, so distinct ingredient lists never
    render alike over the same base.
    """
    parts = [spec.base]
    parts.extend(
        f"## {ingredient.rule.title}\n{_escape_content(ingredient.content)}"
        for ingredient in spec.retained
    )
    return "\n\n".join(parts)


class ExecutionLimits(msgspec.Struct, frozen=True):
    wall_timeout: float = DEFAULT_WALL_TIMEOUT
    memory_limit: int = DEFAULT_MEMORY_LIMIT
    output_limit: int = DEFAULT_OUTPUT_LIMIT

    def __post_init__(self) -> None:
        if self.wall_timeout <= 0 or self.memory_limit <= 0 or self.output_limit <= 0:
            raise ValueError("execution limits must be positive")


class ExecutionResult(msgspec.Struct, frozen=True):
    verdict: Verdict
    stdout: str = ""
    stderr: str = ""
    duration: float = 0.0
    exit_code: int | None = None


class PassReport(msgspec.Struct, frozen=True):
    results: tuple[ExecutionResult, ...] = ()
    ratio: Ratio = msgspec.field(default_factory=Ratio)

    @property
    def passed(self) -> int:
        return self.ratio.passed

    @property
    def total(self) -> int:
        return self.ratio.total


class GenerationConfig(msgspec.Struct, frozen=True):
    model_name: str = DEFAULT_MODEL
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    request_timeout: float = DEFAULT_REQUEST_TIMEOUT
    max_retries: int = DEFAULT_MAX_RETRIES

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


class ChatMessage(msgspec.Struct, frozen=True):
    role: Literal["user", "assistant"]
    content: str


class ChatRequest(msgspec.Struct, frozen=True):
    messages: tuple[ChatMessage, ...]
    config: GenerationConfig = msgspec.field(default_factory=GenerationConfig)
    system: str | None = None
    agent: str = "coder"
    problem_id: str = ""
    iteration: int = 0
    attempt: int = 1

    @property
    def step(self) -> str:
        return f"{self.agent}:{self.iteration}"

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.messages[-1].role != "user":
            raise ValueError("the last message of a chat request must be a user turn")


class UsageStats(msgspec.Struct, frozen=True):
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "UsageStats") -> "UsageStats":
        return UsageStats(
            prompt_tokens=self.prompt_tokens + other.prompt_tokens,
            completion_tokens=self.completion_tokens + other.completion_tokens,
        )

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class ChatResponse(msgspec.Struct, frozen=True):
    content: str
    usage: UsageStats = msgspec.field(default_factory=UsageStats)
    latency: float = 0.0
    backend: str = ""
    cached: bool = False


class PipelineConfig(msgspec.Struct, frozen=True):
    max_iterations: int = DEFAULT_ITERATIONS
    variant: Variant = Variant.FULL
    limits: ExecutionLimits = msgspec.field(default_factory=ExecutionLimits)
    tester_k: int = DEFAULT_TESTER_K
    generation: GenerationConfig = msgspec.field(default_factory=GenerationConfig)
    lang: str = DEFAULT_LANG
    agent_attempts: int = DEFAULT_AGENT_ATTEMPTS
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tester_k < 1:
            raise ValueError("tester_k must be at least 1")
        if self.agent_attempts < 1:
            raise ValueError("agent_attempts must be at least 1")
