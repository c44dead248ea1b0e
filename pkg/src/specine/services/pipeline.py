import logging
import random
import time
from dataclasses import dataclass

import msgspec

from specine.utils import (
    AgentFailureError,
    AlignedIngredient,
    AlignedSpec,
    AlignmentRule,
    Candidate,
    FeedbackMode,
    HierarchicalScore,
    IterationRecord,
    Logger,
    Ordering,
    PassReport,
    PipelineConfig,
    PipelineResult,
    Problem,
    RequirementDsl,
    SandboxSetupError,
    TestCase,
    Variant,
    Verdict,
    compare_scores,
    edge_tests,
    render_aligned_spec,
)

from .agents import AgentCall, AgentService
from .sandbox import SandboxService

_FEEDBACK_FAILURES = 5
_FEEDBACK_OUTPUT = 500
# rules a model-free draw can fill; edge cases need generated tests
RANDOM_RULES = tuple(r for r in AlignmentRule if r != AlignmentRule.EDGE_CORNER_CASES)
_LIFTING_VARIANTS = (Variant.FULL, Variant.WO_PTC, Variant.WO_T, Variant.WO_AR)


@dataclass(frozen=True)
class Scored:
    score: HierarchicalScore
    public: PassReport
    generated: PassReport
    public_tests: tuple[TestCase, ...]
    generated_tests: tuple[TestCase, ...]


@dataclass(frozen=True)
class Identification:
    initial: Candidate
    combined_tests: tuple[TestCase, ...]
    generated_tests: tuple[TestCase, ...]
    scored: Scored
    aligned_needed: bool
    warnings: tuple[str, ...] = ()

    @property
    def score(self) -> HierarchicalScore:
        return self.scored.score


def render_feedback(scored: Scored) -> str:
    """Describe the failing tests of a scored candidate for the feedback aligner."""
    tests = scored.public_tests + scored.generated_tests
    results = scored.public.results + scored.generated.results
    blocks = []
    for test, result in zip(tests, results, strict=True):
        if result.verdict == Verdict.PASS:
            continue
        block = (
            f"Input:\n{test.input}\nExpected output:\n{test.expected}\n"
            f"Actual output:\n{result.stdout[:_FEEDBACK_OUTPUT]}\n"
            f"Verdict: {result.verdict}"
        )
        if result.stderr.strip():
            block += f"\nError output:\n{result.stderr[-_FEEDBACK_OUTPUT:]}"
        blocks.append(block)
        if len(blocks) == _FEEDBACK_FAILURES:
            break
    if not blocks:
        return "All executed tests passed."
    return "\n\n".join(blocks)


class PipelineService:
    """Identification gate, lifting and greedy alignment for one problem at a time.

    A pipeline instance is shared across problems; all per-problem state lives in
    locals, so concurrent run_problem calls are safe.
    """

    def __init__(
        self,
        agents: AgentService,
        sandbox: SandboxService,
        config: PipelineConfig,
        run_name: str = "run",
        log_level: int = logging.WARNING,
    ) -> None:
        self.agents = agents
        self.sandbox = sandbox
        self.config = config
        self.run_name = run_name
        self.__logger = Logger.for_service("PipelineService", log_level)

    @property
    def variant(self) -> Variant:
        return self.config.variant

    def run_id(self, problem: Problem) -> str:
        return f"{self.run_name}/{problem.id}"

    def _score(
        self,
        candidate: Candidate,
        public_tests: tuple[TestCase, ...],
        generated_tests: tuple[TestCase, ...],
    ) -> Scored:
        if self.variant == Variant.WO_PTC:
            public_tests = ()
        limits = self.config.limits
        public = self.sandbox.pass_report(
            candidate.code, candidate.lang, public_tests, limits
        )
        generated = self.sandbox.pass_report(
            candidate.code, candidate.lang, generated_tests, limits
        )
        return Scored(
            score=HierarchicalScore(primary=public.ratio, secondary=generated.ratio),
            public=public,
            generated=generated,
            public_tests=public_tests,
            generated_tests=generated_tests,
        )

    def identify(self, problem: Problem) -> Identification:
        """Generate the initial code and tests and decide whether alignment is needed.

        Args:
            problem (Problem): A valid problem.

        Raises:
            AgentFailureError: If the coder cannot produce initial code.
            SandboxSetupError: If the candidate cannot be executed at all.

        Returns:
            Identification: The initial candidate, the combined tests and its score.
        """
        run_id = self.run_id(problem)
        base = AlignedSpec(base=problem.spec_text)
        coded = self.agents.coder_generate(
            problem.spec_text,
            0,
            AgentCall(run_id, problem.id, 0),
            spec_version=base.version,
        )
        if coded.value is None:
            raise AgentFailureError("coder", coded.failure or "no candidate")

        warnings: list[str] = []
        generated: tuple[TestCase, ...] = ()
        if self.variant != Variant.WO_T:
            tested = self.agents.tester_generate(
                problem.spec_text,
                self.config.tester_k,
                AgentCall(run_id, problem.id, 0),
            )
            warnings.extend(tested.warnings)
            if tested.value is None:
                warnings.append(f"tester failed: {tested.failure}")
            else:
                generated = tested.value

        public = () if self.variant == Variant.WO_PTC else problem.public_tests
        scored = self._score(coded.value, public, generated)
        self.__logger.debug(
            f"[{run_id}] initial score {scored.score.primary}/{scored.score.secondary}"
        )
        return Identification(
            initial=coded.value,
            combined_tests=public + generated,
            generated_tests=generated,
            scored=scored,
            aligned_needed=not scored.score.is_perfect,
            warnings=tuple(warnings),
        )

    def _scoring_pool(
        self, generated: tuple[TestCase, ...], spec: AlignedSpec
    ) -> tuple[TestCase, ...]:
        pool = list(generated)
        for ingredient in spec.retained:
            pool.extend(edge_tests(ingredient))
        return tuple(pool)

    def align_loop(self, problem: Problem, ident: Identification) -> PipelineResult:
        """Run the greedy alignment search from an identification that needs it.

        Each iteration proposes ingredients, regenerates code from the candidate
        aligned spec and keeps the proposal only when the hierarchical score
        strictly improves on the best so far. The loop stops after
        `max_iterations` or as soon as a candidate passes every scoring test.

        Raises:
            SandboxSetupError: If a candidate cannot be executed at all.

        Returns:
            PipelineResult: The best candidate seen, with the full iteration trace.
        """
        run_id = self.run_id(problem)
        rng = random.Random(f"{self.config.seed}:{problem.id}")
        spec = AlignedSpec(base=problem.spec_text)
        best = ident.initial
        best_scored = ident.scored
        trace: list[IterationRecord] = []

        for iteration in range(1, self.config.max_iterations + 1):
            call = AgentCall(run_id, problem.id, iteration)
            current_text = render_aligned_spec(spec)
            refs: list[str] = []
            lifted: RequirementDsl | None = None
            proposed: tuple[AlignedIngredient, ...] = ()
            rewrite: str | None = None
            feedback_mode: FeedbackMode | None = None

            def failed(reason: str) -> IterationRecord:
                return IterationRecord(
                    iteration=iteration,
                    proposed=proposed,
                    lifted=lifted,
                    feedback_mode=feedback_mode,
                    rewrite=rewrite,
                    error=reason,
                    prompt_refs=tuple(refs),
                )

            if self.variant in _LIFTING_VARIANTS:
                feedback_mode = FeedbackMode.LIFT
                lift = self.agents.lifter_lift(best.code, call)
                refs.extend(lift.prompt_refs)
                if lift.value is None:
                    trace.append(failed(f"lifter: {lift.failure}"))
                    continue
                lifted = lift.value
            elif self.variant == Variant.W_TF:
                feedback_mode = FeedbackMode.TEST_FEEDBACK

            if self.variant == Variant.WO_A:
                rule = rng.choice(RANDOM_RULES)
                proposed = (
                    self.agents.prompts.fallback_ingredient(
                        rule, problem.spec_text, iteration
                    ),
                )
                candidate_spec = spec.with_ingredients(proposed)
            elif self.variant == Variant.WO_AR:
                assert lifted is not None
                rewritten = self.agents.aligner_rewrite(current_text, lifted, call)
                refs.extend(rewritten.prompt_refs)
                if rewritten.value is None:
                    trace.append(failed(f"aligner: {rewritten.failure}"))
                    continue
                rewrite = rewritten.value
                candidate_spec = spec.with_base(rewrite)
            else:
                if self.variant == Variant.W_TF:
                    aligned = self.agents.aligner_align_feedback(
                        current_text, render_feedback(best_scored), spec.rules, call
                    )
                else:
                    assert lifted is not None
                    aligned = self.agents.aligner_align(
                        current_text, lifted, spec.rules, call
                    )
                refs.extend(aligned.prompt_refs)
                if aligned.value is None:
                    trace.append(failed(f"aligner: {aligned.failure}"))
                    continue
                proposed = aligned.value
                candidate_spec = spec.with_ingredients(proposed)

            coded = self.agents.coder_generate(
                render_aligned_spec(candidate_spec),
                iteration,
                call,
                spec_version=candidate_spec.version,
            )
            refs.extend(coded.prompt_refs)
            if coded.value is None:
                trace.append(failed(f"coder: {coded.failure}"))
                continue

            scored = self._score(
                coded.value,
                problem.public_tests,
                self._scoring_pool(ident.generated_tests, spec),
            )
            ordering = compare_scores(scored.score, best_scored.score)
            retained = ordering == Ordering.GREATER
            trace.append(
                IterationRecord(
                    iteration=iteration,
                    proposed=proposed,
                    candidate=coded.value,
                    score=scored.score,
                    retained=retained,
                    lifted=lifted,
                    feedback_mode=feedback_mode,
                    rewrite=rewrite,
                    prompt_refs=tuple(refs),
                )
            )
            self.__logger.debug(
                f"[{run_id}] iteration {iteration}: "
                f"{scored.score.primary}/{scored.score.secondary} "
                f"{'retained' if retained else 'discarded'}"
            )
            if retained:
                spec = candidate_spec
                best = coded.value
                best_scored = scored
            if scored.score.is_perfect:
                self.__logger.debug(f"[{run_id}] perfect score, stopping early")
                break

        return PipelineResult(
            problem_id=problem.id,
            variant=self.variant,
            gate_passed=False,
            initial_candidate=ident.initial,
            initial_score=ident.score,
            best_candidate=best,
            best_score=best_scored.score,
            best_spec=spec,
            trace=tuple(trace),
            generated_tests=ident.generated_tests,
            warnings=ident.warnings,
        )

    def run_problem(self, problem: Problem) -> PipelineResult:
        """Identify, then align when needed. Never raises for a problem's failures.

        Returns:
            PipelineResult: The outcome with usage and wall time filled in; agent
                and sandbox setup failures are recorded in `error`.
        """
        run_id = self.run_id(problem)
        ledger = self.agents.llm.ledger
        ledger.open_run(run_id)
        start = time.perf_counter()

        try:
            ident = self.identify(problem)
            if ident.aligned_needed:
                result = self.align_loop(problem, ident)
            else:
                result = PipelineResult(
                    problem_id=problem.id,
                    variant=self.variant,
                    gate_passed=True,
                    initial_candidate=ident.initial,
                    initial_score=ident.score,
                    best_candidate=ident.initial,
                    best_score=ident.score,
                    best_spec=AlignedSpec(base=problem.spec_text),
                    generated_tests=ident.generated_tests,
                    warnings=ident.warnings,
                )
        except (AgentFailureError, SandboxSetupError) as ex:
            self.__logger.warning(f"[{run_id}] problem failed: {ex}")
            result = PipelineResult(
                problem_id=problem.id, variant=self.variant, error=str(ex)
            )

        totals = ledger.totals(run_id)
        return msgspec.structs.replace(
            result,
            usage=totals.usage,
            wall_time=time.perf_counter() - start,
        )
