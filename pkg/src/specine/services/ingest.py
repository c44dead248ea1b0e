"""Converters from local copies of upstream benchmarks to the dataset format.

- APPS and APPS-Eval: JSON Lines with ``problem_id``, ``question``,
  ``difficulty`` and the JSON-encoded strings ``input_output`` and
  ``solutions``. Call-based problems (``fn_name`` set) have no stdin/stdout
  form and are skipped.
- CodeContests: a JSON Lines export with ``name``, ``description``, the test
  columns ``public_tests``, ``private_tests`` and ``generated_tests`` (each
  ``{input: [...], output: [...]}``) and ``solutions`` as
  ``{language: [...], solution: [...]}``. The raw variant keeps the private
  tests only; the extended variant adds the generated tests.
- xCodeEval program synthesis: the problem description file (JSON Lines keyed
  by ``src_uid``) plus the unit-test database, a JSON object mapping each
  ``src_uid`` to ``[{input, output: [accepted, ...]}]``. Only the first
  accepted output is kept, so problems judged by a validator upstream are
  judged here by exact comparison against one answer.

Every converter returns the dataset together with one warning per skipped
problem or dropped test.
"""

from collections.abc import Iterable, Iterator
from enum import StrEnum
from pathlib import Path
from typing import Any

import msgspec

from specine.utils import (
    Dataset,
    DatasetParseError,
    DuplicateProblemError,
    Origin,
    Problem,
    TestCase,
)

from .bench import load_dataset


class SourceFormat(StrEnum):
    JSONL = "jsonl"
    APPS = "apps"
    CODECONTESTS = "codecontests"
    CODECONTESTS_RAW = "codecontests-raw"
    XCODEEVAL = "xcodeval"


class _AppsRecord(msgspec.Struct):
    problem_id: int | str
    question: str
    input_output: str = ""
    solutions: str = ""
    difficulty: str | None = None


class _AppsTests(msgspec.Struct):
    inputs: list[Any] = msgspec.field(default_factory=list)
    outputs: list[Any] = msgspec.field(default_factory=list)
    fn_name: str | None = None


class _TestColumns(msgspec.Struct):
    input: list[str] = msgspec.field(default_factory=list)
    output: list[str] = msgspec.field(default_factory=list)


class _Solutions(msgspec.Struct):
    language: list[int] = msgspec.field(default_factory=list)
    solution: list[str] = msgspec.field(default_factory=list)


class _ContestRecord(msgspec.Struct):
    name: str
    description: str
    public_tests: _TestColumns = msgspec.field(default_factory=_TestColumns)
    private_tests: _TestColumns = msgspec.field(default_factory=_TestColumns)
    generated_tests: _TestColumns = msgspec.field(default_factory=_TestColumns)
    solutions: _Solutions = msgspec.field(default_factory=_Solutions)
    difficulty: int = 0


class _XCodeEvalProblem(msgspec.Struct):
    src_uid: str
    description: str
    input_spec: str | None = None
    output_spec: str | None = None
    notes: str | None = None
    sample_inputs: list[str] = msgspec.field(default_factory=list)
    sample_outputs: list[str] = msgspec.field(default_factory=list)
    difficulty: int | None = None


class _XCodeEvalTest(msgspec.Struct):
    input: str
    output: list[str] = msgspec.field(default_factory=list)


# language codes of the CodeContests solution table
_CONTEST_PYTHON3 = 3
_CONTEST_DIFFICULTIES = {1: "easy", 2: "medium", 3: "hard", 4: "harder", 5: "hardest"}


def _records[T](path: Path, kind: type[T]) -> Iterator[tuple[int, T]]:
    decoder = msgspec.json.Decoder(kind)
    with path.open("rb") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, decoder.decode(line)
            except (msgspec.DecodeError, msgspec.ValidationError) as ex:
                raise DatasetParseError(line_no, str(ex)) from ex


def _text(value: Any) -> str:
    if isinstance(value, list):
        return "\n".join(str(item) for item in value)
    return str(value)


def _tests(pairs: Iterable[tuple[str, str]], origin: Origin) -> tuple[TestCase, ...]:
    return tuple(TestCase(input=i, expected=o, origin=origin) for i, o in pairs)


class _DatasetBuilder:
    def __init__(self, name: str) -> None:
        self.name = name
        self.problems: list[Problem] = []
        self.canonical: dict[str, str] = {}
        self.seen: set[str] = set()
        self.warnings: list[str] = []

    def skip(self, problem_id: str, reason: str) -> None:
        self.warnings.append(f"skipped '{problem_id}': {reason}")

    def add(self, problem: Problem, canonical: str | None = None) -> None:
        if problem.id in self.seen:
            raise DuplicateProblemError(problem.id)
        self.seen.add(problem.id)

        public = {test.identity() for test in problem.public_tests}
        private = tuple(
            t for t in problem.private_tests if t.identity() not in public
        )
        dropped = len(problem.private_tests) - len(private)
        if dropped:
            self.warnings.append(
                f"'{problem.id}': dropped {dropped} private test(s) "
                "that repeat a public test"
            )
            problem = msgspec.structs.replace(problem, private_tests=private)

        violations = problem.violations()
        if violations:
            self.skip(problem.id, "; ".join(violations))
            return
        self.problems.append(problem)
        if canonical is not None:
            self.canonical[problem.id] = canonical

    def build(self) -> tuple[Dataset, list[str]]:
        dataset = Dataset(
            name=self.name,
            problems=tuple(self.problems),
            canonical_solutions=self.canonical,
        )
        return dataset, self.warnings


def convert_apps(path: Path) -> tuple[Dataset, list[str]]:
    """Convert an APPS (or APPS-Eval) JSON Lines file.

    APPS ships no executable public tests; carve some out with
    :func:`specine.services.carve_dataset` afterwards.

    Raises:
        DatasetParseError: If a line does not decode.
        DuplicateProblemError: If two records share a problem id.

    Returns:
        tuple[Dataset, list[str]]: The stdin/stdout problems and the warnings
            for skipped ones.
    """
    builder = _DatasetBuilder(path.stem)
    for line_no, record in _records(path, _AppsRecord):
        problem_id = str(record.problem_id)
        try:
            io = msgspec.json.decode(record.input_output or "{}", type=_AppsTests)
        except (msgspec.DecodeError, msgspec.ValidationError) as ex:
            raise DatasetParseError(line_no, f"input_output: {ex}") from ex
        if io.fn_name is not None:
            builder.skip(problem_id, "call-based problem")
            continue

        solutions: list[str] = []
        if record.solutions.strip():
            try:
                solutions = msgspec.json.decode(record.solutions, type=list[str])
            except (msgspec.DecodeError, msgspec.ValidationError):
                builder.warnings.append(f"'{problem_id}': unreadable solutions")

        pairs = zip(map(_text, io.inputs), map(_text, io.outputs))
        builder.add(
            Problem(
                id=problem_id,
                spec_text=record.question.strip(),
                private_tests=_tests(pairs, Origin.PUBLIC),
                difficulty=record.difficulty,
            ),
            canonical=solutions[0] if solutions else None,
        )
    return builder.build()


def convert_codecontests(
    path: Path, generated: bool = True
) -> tuple[Dataset, list[str]]:
    """Convert a CodeContests JSON Lines export.

    Args:
        path (Path): The export, one problem per line.
        generated (bool, optional): Append the generated tests to the private
            tests (the extended benchmark); False keeps the raw private tests.
            Defaults to True.

    Raises:
        DatasetParseError: If a line does not decode.
        DuplicateProblemError: If two records share a name.

    Returns:
        tuple[Dataset, list[str]]: The converted problems and the warnings.
    """
    builder = _DatasetBuilder(path.stem)
    for _, record in _records(path, _ContestRecord):
        columns = [record.private_tests]
        if generated:
            columns.append(record.generated_tests)
        private = tuple(
            test
            for column in columns
            for test in _tests(zip(column.input, column.output), Origin.PUBLIC)
        )
        public = record.public_tests
        canonical = next(
            (
                code
                for language, code in zip(
                    record.solutions.language, record.solutions.solution
                )
                if language == _CONTEST_PYTHON3
            ),
            None,
        )
        difficulty = _CONTEST_DIFFICULTIES.get(
            record.difficulty, str(record.difficulty) if record.difficulty else None
        )
        builder.add(
            Problem(
                id=record.name,
                spec_text=record.description.strip(),
                public_tests=_tests(zip(public.input, public.output), Origin.PUBLIC),
                private_tests=private,
                difficulty=difficulty,
            ),
            canonical=canonical,
        )
    return builder.build()


def _xcodeeval_statement(problem: _XCodeEvalProblem) -> str:
    parts = [problem.description.strip()]
    for heading, body in (
        ("Input", problem.input_spec),
        ("Output", problem.output_spec),
        ("Note", problem.notes),
    ):
        if body and body.strip():
            parts.append(f"{heading}\n{body.strip()}")
    return "\n\n".join(parts)


def convert_xcodeeval(
    descriptions: Path, unit_tests: Path
) -> tuple[Dataset, list[str]]:
    """Convert the xCodeEval program-synthesis problems.

    Samples become public tests; the unit tests become private tests with their
    first accepted output.

    Raises:
        DatasetParseError: If a description line or the unit-test database does
            not decode.
        DuplicateProblemError: If two descriptions share a `src_uid`.

    Returns:
        tuple[Dataset, list[str]]: The converted problems and the warnings.
    """
    try:
        database = msgspec.json.decode(
            unit_tests.read_bytes(), type=dict[str, list[_XCodeEvalTest]]
        )
    except (msgspec.DecodeError, msgspec.ValidationError) as ex:
        raise DatasetParseError(None, f"unit tests: {ex}") from ex

    builder = _DatasetBuilder(descriptions.stem)
    for _, record in _records(descriptions, _XCodeEvalProblem):
        units = database.get(record.src_uid, [])
        unanswered = sum(1 for unit in units if not unit.output)
        if unanswered:
            builder.warnings.append(
                f"'{record.src_uid}': dropped {unanswered} unit test(s) "
                "without an accepted output"
            )
        builder.add(
            Problem(
                id=record.src_uid,
                spec_text=_xcodeeval_statement(record),
                public_tests=_tests(
                    zip(record.sample_inputs, record.sample_outputs), Origin.PUBLIC
                ),
                private_tests=_tests(
                    ((u.input, u.output[0]) for u in units if u.output), Origin.PUBLIC
                ),
                difficulty=(
                    None if record.difficulty is None else str(record.difficulty)
                ),
            )
        )
    return builder.build()


def load_source(
    path: Path, fmt: SourceFormat, unit_tests: Path | None = None
) -> tuple[Dataset, list[str]]:
    """Load a dataset file or convert an upstream benchmark copy.

    Raises:
        ValueError: If `fmt` is xcodeval and no unit-test database is given.
        DatasetParseError: If the source does not decode.
        DuplicateProblemError: If two problems share an id.
        ProblemValidationError: If a jsonl record breaks a problem invariant.

    Returns:
        tuple[Dataset, list[str]]: The dataset and the conversion warnings.
    """
    match fmt:
        case SourceFormat.JSONL:
            return load_dataset(path), []
        case SourceFormat.APPS:
            return convert_apps(path)
        case SourceFormat.CODECONTESTS:
            return convert_codecontests(path, generated=True)
        case SourceFormat.CODECONTESTS_RAW:
            return convert_codecontests(path, generated=False)
        case SourceFormat.XCODEEVAL:
            if unit_tests is None:
                raise ValueError("xcodeval sources need the unit-test database")
            return convert_xcodeeval(path, unit_tests)
