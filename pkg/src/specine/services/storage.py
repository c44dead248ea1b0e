import csv
import logging
import re
import threading
from collections.abc import Mapping, Sequence
from datetime import datetime
from pathlib import Path

import msgspec
from tzlocal import get_localzone

from specine.utils import (
    AUDIT_FILE,
    CACHE_DIR,
    COMPARISON_FILE,
    CONFIG_FILE,
    MANIFEST_FILE,
    PER_PROBLEM_FILE,
    REPLAY_FILE,
    REPORTS_DIR,
    RULES_FILE,
    SUMMARY_FILE,
    TRACES_DIR,
    AlignmentRule,
    AuditSummary,
    EvalSummary,
    Logger,
    RunManifest,
    Settings,
    TraceDecodeError,
    TraceRecord,
    UnknownProblemError,
)

_UNSAFE_RE = re.compile(r"[^A-Za-z0-9._-]+")


class ComparisonRow(msgspec.Struct, frozen=True):
    variant: str
    pass_at_1: float
    avg_pass_ratio: float
    prompt_tokens: int
    completion_tokens: int
    wall_time: float


def now() -> datetime:
    return datetime.now(get_localzone())


def trace_filename(problem_id: str) -> str:
    return f"{_UNSAFE_RE.sub('_', problem_id)}.json"


def load_trace(path: Path) -> TraceRecord:
    """Decode one trace file.

    Raises:
        TraceDecodeError: If the file is not a valid trace; the message carries the
            decoder's position.
    """
    try:
        return msgspec.json.decode(path.read_bytes(), type=TraceRecord)
    except (msgspec.DecodeError, msgspec.ValidationError) as ex:
        raise TraceDecodeError(str(path), str(ex)) from ex


def find_trace(path: Path, problem_id: str | None = None) -> TraceRecord:
    """Load a trace from a file, or from a run or traces directory by problem id.

    Raises:
        UnknownProblemError: If no trace in the directory matches `problem_id`, or a
            single file holds a different problem.
        TraceDecodeError: If the matching file is malformed.
    """
    if path.is_file():
        record = load_trace(path)
        if problem_id is not None and record.problem_id != problem_id:
            raise UnknownProblemError(problem_id)
        return record

    traces = path / TRACES_DIR if (path / TRACES_DIR).is_dir() else path
    if problem_id is None:
        raise UnknownProblemError("(none given)")
    candidate = traces / trace_filename(problem_id)
    if candidate.is_file():
        record = load_trace(candidate)
        if record.problem_id == problem_id:
            return record
    for file in sorted(traces.glob("*.json")):
        record = load_trace(file)
        if record.problem_id == problem_id:
            return record
    raise UnknownProblemError(problem_id)


class RunStorage:
    """The self-describing layout of one run directory.

    ``manifest.json`` and ``config.json`` at the root, one trace per problem under
    ``traces/``, reports under ``reports/`` and the replay log under ``cache/``.
    Writes are serialized per file.
    """

    def __init__(self, root: Path, log_level: int = logging.WARNING) -> None:
        self.root = root
        self.__locks: dict[Path, threading.Lock] = {}
        self.__locks_guard = threading.Lock()
        self.__encoder = msgspec.json.Encoder()
        self.__logger = Logger.for_service("RunStorage", log_level)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_FILE

    @property
    def traces_dir(self) -> Path:
        return self.root / TRACES_DIR

    @property
    def reports_dir(self) -> Path:
        return self.root / REPORTS_DIR

    @property
    def cache_dir(self) -> Path:
        return self.root / CACHE_DIR

    @property
    def replay_path(self) -> Path:
        return self.cache_dir / REPLAY_FILE

    def layout(self) -> dict[str, str]:
        return {
            "manifest": MANIFEST_FILE,
            "config": CONFIG_FILE,
            "traces": f"{TRACES_DIR}/",
            "reports": f"{REPORTS_DIR}/",
            "cache": f"{CACHE_DIR}/{REPLAY_FILE}",
        }

    def initialize(self) -> None:
        self.__logger.debug(f"using run directory: {self.root!s}")
        for directory in (self.root, self.traces_dir, self.reports_dir, self.cache_dir):
            directory.mkdir(parents=True, exist_ok=True)

    def _lock(self, path: Path) -> threading.Lock:
        with self.__locks_guard:
            return self.__locks.setdefault(path, threading.Lock())

    def _write(self, path: Path, data: bytes) -> Path:
        with self._lock(path):
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return path

    def _write_json(self, path: Path, value: object) -> Path:
        data = msgspec.json.format(self.__encoder.encode(value))
        return self._write(path, data + b"\n")

    def write_manifest(self, manifest: RunManifest) -> Path:
        return self._write_json(self.manifest_path, manifest)

    def read_manifest(self) -> RunManifest:
        return msgspec.json.decode(self.manifest_path.read_bytes(), type=RunManifest)

    def write_config(self, settings: Settings) -> Path:
        return self._write_json(self.config_path, settings.masked())

    def write_trace(self, record: TraceRecord) -> Path:
        path = self.traces_dir / trace_filename(record.problem_id)
        self.__logger.debug(f"writing trace for {record.problem_id} to {path!s}")
        return self._write_json(path, record)

    def read_traces(self) -> list[TraceRecord]:
        """Load every trace in the run, ordered by problem id.

        Raises:
            TraceDecodeError: If any trace file is malformed.
        """
        records = [load_trace(path) for path in self.traces_dir.glob("*.json")]
        return sorted(records, key=lambda record: record.problem_id)

    def write_summary(self, summary: EvalSummary) -> Path:
        return self._write_json(self.reports_dir / SUMMARY_FILE, summary)

    def read_summary(self) -> EvalSummary:
        return msgspec.json.decode(
            (self.reports_dir / SUMMARY_FILE).read_bytes(), type=EvalSummary
        )

    def _write_csv(
        self, path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]
    ) -> Path:
        with self._lock(path):
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        return path

    def write_per_problem(self, summary: EvalSummary) -> Path:
        return self._write_csv(
            self.reports_dir / PER_PROBLEM_FILE,
            ("id", "solved", "passed", "total", "pass_ratio"),
            [
                (
                    row.id,
                    str(row.solved).lower(),
                    row.private.passed,
                    row.private.total,
                    f"{row.private.percent:.2f}",
                )
                for row in summary.per_problem
            ],
        )

    def write_rules(self, effectiveness: Mapping[AlignmentRule, float]) -> Path:
        return self._write_csv(
            self.reports_dir / RULES_FILE,
            ("rule", "title", "effective_percent"),
            [
                (rule.value, rule.title, f"{share:.2f}")
                for rule, share in effectiveness.items()
            ],
        )

    def write_audit(self, audit: AuditSummary) -> Path:
        return self._write_json(self.reports_dir / AUDIT_FILE, audit)

    def write_comparison(self, rows: Sequence[ComparisonRow]) -> Path:
        return self._write_csv(
            self.root / COMPARISON_FILE,
            (
                "variant",
                "pass_at_1",
                "avg_pass_ratio",
                "prompt_tokens",
                "completion_tokens",
                "wall_time",
            ),
            [
                (
                    row.variant,
                    f"{row.pass_at_1:.2f}",
                    f"{row.avg_pass_ratio:.2f}",
                    row.prompt_tokens,
                    row.completion_tokens,
                    f"{row.wall_time:.3f}",
                )
                for row in rows
            ],
        )
