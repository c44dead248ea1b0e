import logging
import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import msgspec

from specine.utils import (
    EDGE_CASE_COUNT,
    AlignedIngredient,
    AlignmentRule,
    BackendUnavailableError,
    Candidate,
    ChatMessage,
    ChatRequest,
    DslValidationError,
    EmptyAfterSanitizeError,
    GenerationConfig,
    Logger,
    MalformedResponseError,
    Origin,
    RequirementDsl,
    TestCase,
    dsl_schema,
    edge_tests,
    parse_dsl,
    parse_ingredient_blocks,
    parse_rewrite,
    parse_tests,
    render_dsl,
    validate_dsl,
)
from specine.utils.constants import DEFAULT_AGENT_ATTEMPTS, DEFAULT_LANG

from .llm import LLMService, request_digest
from .sandbox import sanitize

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")
_TEMPLATES = (
    "coder",
    "tester",
    "lifter",
    "aligner",
    "aligner_feedback",
    "aligner_rewrite",
)


class RuleEntry(msgspec.Struct, frozen=True):
    definition: str
    template: str = ""


class PromptBook:
    """Prompt templates and the alignment rule table.

    Templates are plain text files; lines starting with ``#:`` are header notes
    and never reach the model. A directory passed in replaces the packaged
    templates file by file.
    """

    def __init__(self, directory: Path | None = None) -> None:
        self.directory = directory
        self.templates = {name: self._read(f"{name}.txt") for name in _TEMPLATES}
        self.rules = msgspec.toml.decode(
            self._read("rules.toml"), type=dict[AlignmentRule, RuleEntry]
        )
        missing = [rule for rule in AlignmentRule if rule not in self.rules]
        if missing:
            raise ValueError(
                "rule table is missing: " + ", ".join(rule.title for rule in missing)
            )

    def _read(self, filename: str) -> str:
        if self.directory is not None and (self.directory / filename).exists():
            return (self.directory / filename).read_text(encoding="utf-8")
        return (
            resources.files("specine.prompts")
            .joinpath(filename)
            .read_text(encoding="utf-8")
        )

    def render(self, name: str, **values: str) -> str:
        """Fill a template's placeholders in one pass; unknown names stay as written."""
        body = "\n".join(
            line
            for line in self.templates[name].splitlines()
            if not line.startswith("#:")
        ).strip()
        return _PLACEHOLDER_RE.sub(
            lambda m: values.get(m.group(1), m.group(0)), body
        )

    def rules_text(self) -> str:
        return "\n".join(
            f"{i}. {rule.title}: {self.rules[rule].definition}"
            for i, rule in enumerate(AlignmentRule, start=1)
        )

    def fallback_ingredient(
        self, rule: AlignmentRule, spec_text: str, iteration: int
    ) -> AlignedIngredient:
        """Fixed-template ingredient for `rule`, used when no aligner proposes one."""
        content = self.rules[rule].template.replace("{spec}", spec_text).strip()
        if not content:
            raise ValueError(f"rule '{rule.title}' has no fallback template")
        return AlignedIngredient(rule=rule, content=content, iteration_added=iteration)


@dataclass(frozen=True)
class AgentOutcome[T]:
    value: T | None
    attempts: int
    raw_last: str = ""
    failure: str | None = None
    warnings: tuple[str, ...] = ()
    prompt_refs: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class AgentCall:
    """Attribution for one agent invocation."""

    run_id: str
    problem_id: str = ""
    iteration: int = 0


@dataclass
class _Attempt[T]:
    value: T | None = None
    reason: str | None = None
    warnings: list[str] = field(default_factory=list)


def _render_history(history: Sequence[AlignmentRule]) -> str:
    if not history:
        return "(none)"
    return "\n".join(f"- {rule.title}" for rule in history)


class AgentService:
    """The coder, tester, lifter and aligner roles over one LLM service.

    Each role builds its prompt from a template, sends it, and parses the reply,
    re-sampling up to `attempts` times when the reply does not parse. Model
    misbehaviour never raises; it comes back as a failed AgentOutcome.
    """

    def __init__(
        self,
        llm: LLMService,
        generation: GenerationConfig | None = None,
        lang: str = DEFAULT_LANG,
        attempts: int = DEFAULT_AGENT_ATTEMPTS,
        prompts: PromptBook | None = None,
        log_level: int = logging.WARNING,
    ) -> None:
        if attempts < 1:
            raise ValueError("agent attempts must be at least 1")
        self.llm = llm
        self.generation = generation or GenerationConfig()
        self.lang = lang
        self.attempts = attempts
        self.prompts = prompts or PromptBook()
        self.__logger = Logger.for_service("AgentService", log_level)

    def _call[T](
        self,
        agent: str,
        prompt: str,
        call: AgentCall,
        parse: Callable[[str], _Attempt[T]],
    ) -> AgentOutcome[T]:
        refs: list[str] = []
        raw = ""
        reason = "no attempt made"
        warnings: list[str] = []
        for attempt in range(1, self.attempts + 1):
            request = ChatRequest(
                messages=(ChatMessage(role="user", content=prompt),),
                config=self.generation,
                agent=agent,
                problem_id=call.problem_id,
                iteration=call.iteration,
                attempt=attempt,
            )
            refs.append(request_digest(request))
            try:
                raw = self.llm.complete(request, call.run_id).content
            except BackendUnavailableError as ex:
                self.__logger.warning(
                    f"[{call.run_id}] {agent} backend unavailable: {ex}"
                )
                return AgentOutcome(
                    value=None,
                    attempts=attempt,
                    raw_last=raw,
                    failure=f"BackendUnavailable: {ex}",
                    prompt_refs=tuple(refs),
                )
            except MalformedResponseError as ex:
                reason = f"MalformedResponse: {ex}"
                self.__logger.debug(
                    f"[{call.run_id}] {agent} attempt {attempt}: {reason}"
                )
                continue

            parsed = parse(raw)
            if parsed.value is not None:
                return AgentOutcome(
                    value=parsed.value,
                    attempts=attempt,
                    raw_last=raw,
                    warnings=tuple(parsed.warnings),
                    prompt_refs=tuple(refs),
                )
            reason = parsed.reason or "unparseable reply"
            warnings = parsed.warnings
            self.__logger.debug(f"[{call.run_id}] {agent} attempt {attempt}: {reason}")

        self.__logger.warning(
            f"[{call.run_id}] {agent} failed after {self.attempts} attempt(s): {reason}"
        )
        return AgentOutcome(
            value=None,
            attempts=self.attempts,
            raw_last=raw,
            failure=reason,
            warnings=tuple(warnings),
            prompt_refs=tuple(refs),
        )

    def coder_generate(
        self, spec_text: str, iteration: int, call: AgentCall, spec_version: str = ""
    ) -> AgentOutcome[Candidate]:
        """Generate a candidate program for `spec_text`.

        Returns:
            AgentOutcome[Candidate]: The sanitized candidate, or an
                EmptyAfterSanitize failure after every attempt.
        """
        if not spec_text.strip():
            raise ValueError("the coder needs a non-empty specification")
        prompt = self.prompts.render("coder", spec=spec_text, lang=self.lang)

        def parse(raw: str) -> _Attempt[Candidate]:
            try:
                code = sanitize(raw, self.lang)
            except EmptyAfterSanitizeError as ex:
                return _Attempt(reason=f"EmptyAfterSanitize: {ex}")
            return _Attempt(
                value=Candidate(
                    code=code,
                    lang=self.lang,
                    iteration=iteration,
                    spec_version=spec_version,
                )
            )

        coder_call = AgentCall(call.run_id, call.problem_id, iteration)
        return self._call("coder", prompt, coder_call, parse)

    def tester_prompt(self, spec_text: str, k: int) -> str:
        return self.prompts.render("tester", spec=spec_text, k=str(k))

    def tester_generate(
        self, spec_text: str, k: int, call: AgentCall
    ) -> AgentOutcome[tuple[TestCase, ...]]:
        """Generate up to `k` test cases from the specification alone.

        Fewer than `k` parsed tests are accepted with a warning; zero is a failure.
        """
        if k < 1:
            raise ValueError("the tester needs k >= 1")

        def parse(raw: str) -> _Attempt[tuple[TestCase, ...]]:
            tests = parse_tests(raw, Origin.GENERATED)
            if not tests:
                return _Attempt(reason="no test cases in reply")
            warnings = []
            if len(tests) < k:
                warnings.append(f"tester produced {len(tests)} of {k} requested tests")
            return _Attempt(value=tuple(tests[:k]), warnings=warnings)

        return self._call("tester", self.tester_prompt(spec_text, k), call, parse)

    def lifter_prompt(self, code: str) -> str:
        return self.prompts.render("lifter", code=code, dsl_schema=dsl_schema())

    def lifter_lift(self, code: str, call: AgentCall) -> AgentOutcome[RequirementDsl]:
        """Lift the specification a program implements into the requirement DSL."""
        if not code.strip():
            raise ValueError("the lifter needs non-empty code")

        def parse(raw: str) -> _Attempt[RequirementDsl]:
            report = parse_dsl(raw)
            if report.value is None:
                return _Attempt(reason=report.error, warnings=list(report.warnings))
            try:
                validate_dsl(report.value)
            except DslValidationError as ex:
                return _Attempt(reason=str(ex), warnings=list(report.warnings))
            return _Attempt(value=report.value, warnings=list(report.warnings))

        return self._call("lifter", self.lifter_prompt(code), call, parse)

    def _parse_ingredients(
        self, raw: str, iteration: int
    ) -> _Attempt[tuple[AlignedIngredient, ...]]:
        ingredients: list[AlignedIngredient] = []
        warnings: list[str] = []
        for name, content in parse_ingredient_blocks(raw):
            rule = AlignmentRule.lookup(name)
            if rule is None:
                warnings.append(f"unknown rule '{name}' dropped")
                continue
            if not content:
                warnings.append(f"empty '{rule.title}' ingredient dropped")
                continue
            ingredient = AlignedIngredient(
                rule=rule, content=content, iteration_added=iteration
            )
            if rule == AlignmentRule.EDGE_CORNER_CASES:
                found = len(edge_tests(ingredient))
                if found != EDGE_CASE_COUNT:
                    warnings.append(
                        f"'{rule.title}' ingredient with {found} test case(s) dropped"
                    )
                    continue
            ingredients.append(ingredient)
        if not ingredients:
            return _Attempt(reason="no valid ingredients in reply", warnings=warnings)
        return _Attempt(value=tuple(ingredients), warnings=warnings)

    def aligner_prompt(
        self, spec_text: str, lifted: RequirementDsl, history: Sequence[AlignmentRule]
    ) -> str:
        return self.prompts.render(
            "aligner",
            spec=spec_text,
            lifted=render_dsl(lifted),
            rules=self.prompts.rules_text(),
            history=_render_history(history),
        )

    def aligner_align(
        self,
        spec_text: str,
        lifted: RequirementDsl,
        history: Sequence[AlignmentRule],
        call: AgentCall,
    ) -> AgentOutcome[tuple[AlignedIngredient, ...]]:
        """Propose aligned ingredients from the specification and the lifted DSL.

        Unknown rule names and Edge/Corner Cases ingredients without exactly three
        test cases are dropped with warnings.
        """
        prompt = self.aligner_prompt(spec_text, lifted, history)
        return self._call(
            "aligner",
            prompt,
            call,
            lambda raw: self._parse_ingredients(raw, call.iteration),
        )

    def aligner_align_feedback(
        self,
        spec_text: str,
        feedback: str,
        history: Sequence[AlignmentRule],
        call: AgentCall,
    ) -> AgentOutcome[tuple[AlignedIngredient, ...]]:
        """Like aligner_align, driven by test-execution failures instead of a lift."""
        prompt = self.prompts.render(
            "aligner_feedback",
            spec=spec_text,
            feedback=feedback,
            rules=self.prompts.rules_text(),
            history=_render_history(history),
        )
        return self._call(
            "aligner",
            prompt,
            call,
            lambda raw: self._parse_ingredients(raw, call.iteration),
        )

    def aligner_rewrite(
        self, spec_text: str, lifted: RequirementDsl, call: AgentCall
    ) -> AgentOutcome[str]:
        """Ask the aligner for a whole rewritten specification, without rules."""
        prompt = self.prompts.render(
            "aligner_rewrite", spec=spec_text, lifted=render_dsl(lifted)
        )

        def parse(raw: str) -> _Attempt[str]:
            rewrite = parse_rewrite(raw)
            if rewrite is None:
                return _Attempt(reason="no aligned specification in reply")
            return _Attempt(value=rewrite)

        return self._call("aligner", prompt, call, parse)
