import hashlib
import logging
import random
import threading
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import msgspec

from specine.utils import (
    AlignmentRule,
    AuditSummary,
    Candidate,
    Dataset,
    DatasetParseError,
    DatasetRecord,
    DuplicateProblemError,
    EvalSummary,
    ExecutionLimits,
    Logger,
    MissingCanonicalError,
    NotEnoughTestsError,
    Origin,
    PipelineResult,
    Problem,
    ProblemEval,
    ProblemValidationError,
    Ratio,
    SampleSizeError,
    TestCase,
    UnknownProblemError,
    UsageStats,
    Variant,
    Verdict,
    WireTest,
)
from specine.utils.constants import DEFAULT_LANG, DEFAULT_PARALLELISM

from .sandbox import SandboxService

UNSPECIFIED_STRATUM = "unspecified"
_DATASET_FORMATS = ("jsonl",)


def _tests(wire: Iterable[WireTest]) -> tuple[TestCase, ...]:
    return tuple(
        TestCase(input=t.input, expected=t.output, origin=Origin.PUBLIC) for t in wire
    )


def _wire(tests: Iterable[TestCase]) -> list[WireTest]:
    return [WireTest(input=t.input, output=t.expected) for t in tests]


def load_dataset(path: Path, fmt: str = "jsonl") -> Dataset:
    """Load a line-delimited dataset file.

    Each non-blank line is one JSON record with `id`, `description`,
    `private_tests` and optional `title`, `difficulty`, `public_tests` and
    `canonical_solution`.

    Args:
        path (Path): The dataset file.
        fmt (str, optional): Format tag; only "jsonl" is understood. Defaults to
            "jsonl".

    Raises:
        ValueError: If the format tag is unknown.
        DatasetParseError: If a line does not decode, with its line number.
        DuplicateProblemError: If two records share an id.
        ProblemValidationError: If a record breaks a problem invariant.

    Returns:
        Dataset: The problems in file order, named after the file stem.
    """
    if fmt not in _DATASET_FORMATS:
        raise ValueError(f"Unknown dataset format '{fmt}'")

    problems: list[Problem] = []
    canonical: dict[str, str] = {}
    seen: set[str] = set()
    with path.open("rb") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = msgspec.json.decode(line, type=DatasetRecord)
            except (msgspec.DecodeError, msgspec.ValidationError) as ex:
                raise DatasetParseError(line_no, str(ex)) from ex
            if record.id in seen:
                raise DuplicateProblemError(record.id)
            seen.add(record.id)

            problem = Problem(
                id=record.id,
                spec_text=record.description,
                public_tests=_tests(record.public_tests),
                private_tests=_tests(record.private_tests),
                title=record.title,
                difficulty=record.difficulty,
            )
            violations = problem.violations()
            if violations:
                raise ProblemValidationError(record.id, "; ".join(violations))
            problems.append(problem)
            if record.canonical_solution is not None:
                canonical[record.id] = record.canonical_solution

    return Dataset(
        name=path.stem, problems=tuple(problems), canonical_solutions=canonical
    )


def save_dataset(dataset: Dataset, path: Path) -> None:
    """Write `dataset` in the line-delimited record format, one problem per line."""
    encoder = msgspec.json.Encoder()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        for problem in dataset.problems:
            record = DatasetRecord(
                id=problem.id,
                description=problem.spec_text,
                private_tests=_wire(problem.private_tests),
                public_tests=_wire(problem.public_tests),
                title=problem.title,
                difficulty=problem.difficulty,
                canonical_solution=dataset.canonical_solutions.get(problem.id),
            )
            f.write(encoder.encode(record) + b"\n")


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def carve_public(problem: Problem, n: int, seed: int) -> Problem:
    """Move `n` seeded-random private tests to the public tests.

    Moved tests are appended after any existing public tests; both lists keep
    their original relative order.

    Raises:
        NotEnoughTestsError: If the problem has `n` or fewer private tests.

    Returns:
        Problem: A new problem; the input is untouched.
    """
    if n < 0:
        raise ValueError("cannot carve a negative number of tests")
    if n == 0:
        return problem
    if len(problem.private_tests) <= n:
        raise NotEnoughTestsError(problem.id, len(problem.private_tests), n)

    rng = random.Random(f"{seed}:{problem.id}")
    chosen = set(rng.sample(range(len(problem.private_tests)), n))
    moved = tuple(t for i, t in enumerate(problem.private_tests) if i in chosen)
    kept = tuple(t for i, t in enumerate(problem.private_tests) if i not in chosen)
    return msgspec.structs.replace(
        problem, public_tests=problem.public_tests + moved, private_tests=kept
    )


def carve_dataset(dataset: Dataset, n: int, seed: int) -> Dataset:
    return msgspec.structs.replace(
        dataset, problems=tuple(carve_public(p, n, seed) for p in dataset.problems)
    )


def stratum(problem: Problem) -> str:
    return problem.difficulty or UNSPECIFIED_STRATUM


def allocate(sizes: Mapping[str, int], n: int) -> dict[str, int]:
    """Split `n` across strata proportionally by largest remainder.

    Ties between equal remainders go to the stratum whose name sorts first.
    """
    total = sum(sizes.values())
    if total == 0:
        return {name: 0 for name in sizes}
    exact = {name: Fraction(n * size, total) for name, size in sizes.items()}
    quota = {name: int(share) for name, share in exact.items()}
    leftover = n - sum(quota.values())
    by_remainder = sorted(sizes, key=lambda name: (-(exact[name] - quota[name]), name))
    for name in by_remainder[:leftover]:
        quota[name] += 1
    return quota


def sample_stratified(
    dataset: Dataset, n: int, seed: int
) -> tuple[Dataset, tuple[str, ...]]:
    """Sample `n` problems proportionally to the difficulty distribution.

    Each stratum draws its quota uniformly with its own seeded generator; the
    sample keeps the dataset's original problem order. Problems without a
    difficulty tag form one stratum and produce a warning.

    Raises:
        SampleSizeError: If `n` exceeds the number of problems.

    Returns:
        tuple[Dataset, tuple[str, ...]]: The sampled dataset and any warnings.
    """
    if n < 0:
        raise ValueError("cannot sample a negative number of problems")
    if n > len(dataset.problems):
        raise SampleSizeError(n, len(dataset.problems))

    warnings: list[str] = []
    untagged = sum(1 for p in dataset.problems if p.difficulty is None)
    if untagged:
        warnings.append(
            f"{untagged} problem(s) have no difficulty tag and are sampled "
            f"as the '{UNSPECIFIED_STRATUM}' stratum"
        )

    members: dict[str, list[int]] = {}
    for index, problem in enumerate(dataset.problems):
        members.setdefault(stratum(problem), []).append(index)
    quota = allocate({name: len(idx) for name, idx in members.items()}, n)

    chosen: set[int] = set()
    for name, indices in members.items():
        rng = random.Random(f"{seed}:{name}")
        chosen.update(rng.sample(indices, quota[name]))

    problems = tuple(p for i, p in enumerate(dataset.problems) if i in chosen)
    ids = {p.id for p in problems}
    return (
        Dataset(
            name=dataset.name,
            problems=problems,
            canonical_solutions={
                pid: code
                for pid, code in dataset.canonical_solutions.items()
                if pid in ids
            },
        ),
        tuple(warnings),
    )


def percent(value: Fraction) -> float:
    return round(float(value * 100), 2)


def rule_effectiveness(results: Sequence[PipelineResult]) -> dict[AlignmentRule, float]:
    """Percentage of problems for which each rule was effective.

    A rule is effective for a problem when a retained iteration proposed it;
    every rule of a multi-ingredient retained iteration is credited. Computed
    from traces alone.

    Returns:
        dict[AlignmentRule, float]: Every rule, sorted by percentage descending
            and then by rule order.
    """
    counts = dict.fromkeys(AlignmentRule, 0)
    for result in results:
        effective = {
            ingredient.rule
            for record in result.trace
            if record.retained
            for ingredient in record.proposed
        }
        for rule in effective:
            counts[rule] += 1
    total = len(results)
    order = list(AlignmentRule)
    shares = {
        rule: percent(Fraction(count, total)) if total else 0.0
        for rule, count in counts.items()
    }
    ranked = sorted(shares.items(), key=lambda item: (-item[1], order.index(item[0])))
    return dict(ranked)


class BenchService:
    """Runs candidates against held-out tests for metrics and audits.

    Private ratios are memoised per (problem id, code digest) so a candidate
    that reappears across iterations is judged once.
    """

    def __init__(
        self,
        sandbox: SandboxService,
        limits: ExecutionLimits | None = None,
        lang: str = DEFAULT_LANG,
        parallelism: int = DEFAULT_PARALLELISM,
        log_level: int = logging.WARNING,
    ) -> None:
        self.sandbox = sandbox
        self.limits = limits or ExecutionLimits()
        self.lang = lang
        self.parallelism = max(1, parallelism)
        self.__lock = threading.Lock()
        self.__memo: dict[tuple[str, str], Ratio] = {}
        self.__logger = Logger.for_service("BenchService", log_level)

    def private_ratio(self, problem: Problem, candidate: Candidate | None) -> Ratio:
        """Pass ratio of `candidate` on the problem's private tests (0 when absent)."""
        if candidate is None:
            return Ratio(passed=0, total=len(problem.private_tests))
        key = (problem.id, hashlib.sha256(candidate.code.encode("utf-8")).hexdigest())
        with self.__lock:
            cached = self.__memo.get(key)
        if cached is not None:
            return cached
        report = self.sandbox.pass_report(
            candidate.code, candidate.lang, problem.private_tests, self.limits
        )
        with self.__lock:
            self.__memo[key] = report.ratio
        return report.ratio

    def annotate_private(
        self, result: PipelineResult, problem: Problem
    ) -> PipelineResult:
        """Attach evaluation-side private ratios to the initial candidate and every
        iteration candidate of a finished result. The pipeline never sees them."""
        trace = tuple(
            record
            if record.candidate is None
            else msgspec.structs.replace(
                record, private=self.private_ratio(problem, record.candidate)
            )
            for record in result.trace
        )
        initial = (
            None
            if result.initial_candidate is None
            else self.private_ratio(problem, result.initial_candidate)
        )
        return msgspec.structs.replace(result, trace=trace, initial_private=initial)

    def evaluate(
        self,
        results: Sequence[PipelineResult],
        dataset: Dataset,
        variant: Variant | None = None,
    ) -> EvalSummary:
        """Judge each best candidate on its private tests and aggregate.

        Pass@1 is the share of problems whose candidate passes every private test;
        AvgPassRatio is the mean private pass ratio. Both are exact fractions
        reported as percentages.

        Raises:
            UnknownProblemError: If a result names a problem not in `dataset`.

        Returns:
            EvalSummary: Per-problem rows sorted by id, so the summary does not
                depend on result order.
        """
        problems = []
        for result in results:
            problem = dataset.get(result.problem_id)
            if problem is None:
                raise UnknownProblemError(result.problem_id)
            problems.append(problem)

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            ratios = list(
                pool.map(
                    lambda pair: self.private_ratio(pair[0], pair[1].best_candidate),
                    zip(problems, results, strict=True),
                )
            )

        rows = sorted(
            (
                ProblemEval(id=problem.id, solved=ratio.complete, private=ratio)
                for problem, ratio in zip(problems, ratios, strict=True)
            ),
            key=lambda row: row.id,
        )
        count = len(rows)
        solved = sum(1 for row in rows if row.solved)
        pass_at_1 = Fraction(solved, count) if count else Fraction(0)
        avg = Fraction(0)
        if count:
            avg = sum((row.private.value for row in rows), Fraction(0)) / count
        usage = sum((r.usage for r in results), UsageStats())

        self.__logger.debug(f"evaluated {count} problem(s): {solved} solved")
        return EvalSummary(
            dataset=dataset.name,
            problems=count,
            solved=solved,
            pass_at_1=percent(pass_at_1),
            pass_at_1_fraction=str(pass_at_1),
            avg_pass_ratio=percent(avg),
            avg_pass_ratio_fraction=str(avg),
            per_problem=tuple(rows),
            usage=usage,
            wall_time=sum(r.wall_time for r in results),
            variant=variant,
        )

    def audit_generated_tests(
        self, dataset: Dataset, generated: Mapping[str, Sequence[TestCase]]
    ) -> AuditSummary:
        """Check generated tests against the dataset's canonical solutions.

        A generated test is correct when the canonical solution, run on its input,
        produces output judged equal to its expected output.

        Raises:
            MissingCanonicalError: If a problem with generated tests has no
                canonical solution.

        Returns:
            AuditSummary: Micro-averaged accuracy and per-problem ratios.
        """
        jobs: list[tuple[str, str, TestCase]] = []
        for problem_id in sorted(generated):
            tests = generated[problem_id]
            if not tests:
                continue
            code = dataset.canonical_solutions.get(problem_id)
            if code is None:
                raise MissingCanonicalError(problem_id)
            jobs.extend((problem_id, code, test) for test in tests)

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            verdicts = list(
                pool.map(
                    lambda job: self.sandbox.run_one(
                        job[1], self.lang, job[2], self.limits
                    ).verdict,
                    jobs,
                )
            )

        per_problem: dict[str, Ratio] = {}
        for (problem_id, _, _), verdict in zip(jobs, verdicts, strict=True):
            current = per_problem.get(problem_id, Ratio())
            per_problem[problem_id] = Ratio(
                passed=current.passed + (verdict == Verdict.PASS),
                total=current.total + 1,
            )
        correct = sum(r.passed for r in per_problem.values())
        total = sum(r.total for r in per_problem.values())
        return AuditSummary(
            correct=correct,
            total=total,
            accuracy=percent(Fraction(correct, total)) if total else 0.0,
            per_problem=per_problem,
        )
