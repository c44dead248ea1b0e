from .ablate_cmd import ablate
from .prepare_cmd import prepare
from .run_cmd import run
from .trace_cmd import trace

__all__ = [
    "ablate",
    "prepare",
    "run",
    "trace",
]
