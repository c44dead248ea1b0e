from pathlib import Path

# Environment variables read for the remote backend and config file
ENV_API_BASE = "SPECINE_API_BASE"
ENV_API_KEY = "SPECINE_API_KEY"
ENV_MODEL = "SPECINE_MODEL"
ENV_CONFIG = "SPECINE_CONFIG"

DEFAULT_API_BASE = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o-mini"

# Generation defaults
DEFAULT_MAX_TOKENS = 1024
DEFAULT_TEMPERATURE = 0.8
DEFAULT_REQUEST_TIMEOUT = 60.0
DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF_BASE = 1.0

# Pipeline defaults
DEFAULT_ITERATIONS = 10
DEFAULT_TESTER_K = 5
DEFAULT_AGENT_ATTEMPTS = 3
EDGE_CASE_COUNT = 3

# Sandbox defaults
DEFAULT_LANG = "python"
DEFAULT_INTERPRETERS = {"python": "{python} -I {file}"}
LANG_SUFFIXES = {"python": ".py"}
DEFAULT_WALL_TIMEOUT = 10.0
DEFAULT_MEMORY_LIMIT = 512 * 1024 * 1024
DEFAULT_OUTPUT_LIMIT = 1024 * 1024
DEFAULT_SANDBOX_WORKERS = 4
SANDBOX_ENV_ALLOWLIST = ("PATH", "LANG", "LC_ALL", "SYSTEMROOT", "TMPDIR")

# Benchmark defaults
DEFAULT_PUBLIC_CARVE = 3
DEFAULT_PARALLELISM = 4
DEFAULT_SEED = 0

# Run directory layout
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"
TRACES_DIR = "traces"
REPORTS_DIR = "reports"
CACHE_DIR = "cache"
REPLAY_FILE = "replay.log"
SUMMARY_FILE = "summary.json"
PER_PROBLEM_FILE = "per_problem.csv"
RULES_FILE = "rules.csv"
AUDIT_FILE = "audit.json"
COMPARISON_FILE = "comparison.csv"

DEFAULT_OUTPUT_DIR = Path("runs")

# Version of the trace and manifest record formats
TRACE_VERSION = 1
