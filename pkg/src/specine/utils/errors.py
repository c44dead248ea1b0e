class BackendUnavailableError(RuntimeError):
    """Raised when a model backend cannot produce a completion after retries."""

    def __init__(self, backend: str, attempts: int, reason: str) -> None:
        self.backend = backend
        self.attempts = attempts
        super().__init__(
            f"Backend '{backend}' unavailable after {attempts} attempt(s): {reason}"
        )


class MalformedResponseError(ValueError):
    """Raised when a backend payload carries no completion text."""

    pass


class ReplayMissError(BackendUnavailableError):
    """Raised in replay mode when a request has no recorded response."""

    def __init__(self, key: str) -> None:
        super().__init__("replay", 0, f"no recorded response for request {key}")


class ReplayCacheCorruptError(ValueError):
    """Raised when a replay record fails its length or digest check."""

    def __init__(self, offset: int, reason: str) -> None:
        self.offset = offset
        super().__init__(f"Corrupt replay record at byte {offset}: {reason}")


class UnknownRunError(LookupError):
    """Raised when ledger totals are requested for a run that was never opened."""

    def __init__(self, run_id: str) -> None:
        super().__init__(f"Unknown run '{run_id}'")


class EmptyAfterSanitizeError(ValueError):
    """Raised when nothing code-like remains in a model completion."""

    pass


class SandboxSetupError(RuntimeError):
    """Raised when the interpreter for a language cannot be launched."""

    def __init__(self, message: str, result=None) -> None:
        self.result = result
        super().__init__(message)


class AgentFailureError(RuntimeError):
    """Raised when a failed agent outcome must abort the caller."""

    def __init__(self, agent: str, reason: str) -> None:
        self.agent = agent
        super().__init__(f"{agent} agent failed: {reason}")


class DslValidationError(ValueError):
    """Raised when a requirement DSL value breaks a schema invariant."""

    pass


class DatasetParseError(ValueError):
    """Raised when a dataset record cannot be decoded.

    `line_no` is None for sources stored as a single JSON document.
    """

    def __init__(self, line_no: int | None, reason: str) -> None:
        self.line_no = line_no
        where = "file" if line_no is None else f"line {line_no}"
        super().__init__(f"Dataset {where}: {reason}")


class DuplicateProblemError(ValueError):
    """Raised when two dataset records share a problem id."""

    def __init__(self, problem_id: str) -> None:
        self.problem_id = problem_id
        super().__init__(f"Duplicate problem id '{problem_id}'")


class ProblemValidationError(ValueError):
    """Raised when a problem breaks one of its invariants."""

    def __init__(self, problem_id: str, reason: str) -> None:
        self.problem_id = problem_id
        super().__init__(f"Problem '{problem_id}': {reason}")


class NotEnoughTestsError(ValueError):
    """Raised when a carve-out asks for more tests than the private pool holds."""

    def __init__(self, problem_id: str, available: int, requested: int) -> None:
        super().__init__(
            f"Problem '{problem_id}' has {available} private test(s); "
            f"cannot carve {requested} public test(s)"
        )


class SampleSizeError(ValueError):
    """Raised when a sample larger than the dataset is requested."""

    def __init__(self, requested: int, available: int) -> None:
        super().__init__(
            f"Cannot sample {requested} problem(s) from a dataset of {available}"
        )


class UnknownProblemError(LookupError):
    """Raised when a result or trace refers to a problem id that is not known."""

    def __init__(self, problem_id: str) -> None:
        self.problem_id = problem_id
        super().__init__(f"Unknown problem id '{problem_id}'")


class MissingCanonicalError(LookupError):
    """Raised when an audit needs a canonical solution the dataset lacks."""

    def __init__(self, problem_id: str) -> None:
        super().__init__(f"No canonical solution for problem '{problem_id}'")


class TraceDecodeError(ValueError):
    """Raised when a trace file cannot be decoded."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"Malformed trace '{path}': {reason}")


class SettingsError(ValueError):
    """Raised when a configuration file or override is invalid."""

    pass
