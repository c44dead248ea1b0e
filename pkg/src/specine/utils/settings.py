import os
from collections.abc import Mapping
from pathlib import Path

import msgspec

from .constants import (
    DEFAULT_AGENT_ATTEMPTS,
    DEFAULT_API_BASE,
    DEFAULT_BACKOFF_BASE,
    DEFAULT_INTERPRETERS,
    DEFAULT_ITERATIONS,
    DEFAULT_LANG,
    DEFAULT_MAX_RETRIES,
    DEFAULT_MAX_TOKENS,
    DEFAULT_MEMORY_LIMIT,
    DEFAULT_MODEL,
    DEFAULT_OUTPUT_LIMIT,
    DEFAULT_PARALLELISM,
    DEFAULT_REQUEST_TIMEOUT,
    DEFAULT_SANDBOX_WORKERS,
    DEFAULT_SEED,
    DEFAULT_TEMPERATURE,
    DEFAULT_TESTER_K,
    DEFAULT_WALL_TIMEOUT,
    ENV_API_BASE,
    ENV_API_KEY,
    ENV_CONFIG,
    ENV_MODEL,
)
from .errors import SettingsError
from .models import ExecutionLimits, GenerationConfig, PipelineConfig, Variant


class Settings(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    # model backend
    api_base: str = DEFAULT_API_BASE
    api_key: str | None = None
    model: str = DEFAULT_MODEL
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    request_timeout: float = DEFAULT_REQUEST_TIMEOUT
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff_base: float = DEFAULT_BACKOFF_BASE
    # pipeline
    iterations: int = DEFAULT_ITERATIONS
    variant: Variant = Variant.FULL
    tester_k: int = DEFAULT_TESTER_K
    agent_attempts: int = DEFAULT_AGENT_ATTEMPTS
    prompts_dir: str | None = None
    # sandbox
    lang: str = DEFAULT_LANG
    interpreters: dict[str, str] = msgspec.field(
        default_factory=lambda: dict(DEFAULT_INTERPRETERS)
    )
    wall_timeout: float = DEFAULT_WALL_TIMEOUT
    memory_limit: int = DEFAULT_MEMORY_LIMIT
    output_limit: int = DEFAULT_OUTPUT_LIMIT
    sandbox_workers: int = DEFAULT_SANDBOX_WORKERS
    float_tolerance: float | None = None
    # run
    parallelism: int = DEFAULT_PARALLELISM
    seed: int = DEFAULT_SEED
    count_cached_usage: bool = False
    trace_private: bool = True

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            model_name=self.model,
            max_tokens=self.max_tokens,
            temperature=self.temperature,
            request_timeout=self.request_timeout,
            max_retries=self.max_retries,
        )

    def limits(self) -> ExecutionLimits:
        return ExecutionLimits(
            wall_timeout=self.wall_timeout,
            memory_limit=self.memory_limit,
            output_limit=self.output_limit,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            max_iterations=self.iterations,
            variant=self.variant,
            limits=self.limits(),
            tester_k=self.tester_k,
            generation=self.generation_config(),
            lang=self.lang,
            agent_attempts=self.agent_attempts,
            seed=self.seed,
        )

    def masked(self) -> "Settings":
        """Copy of the settings safe to print or persist."""
        if self.api_key is None:
            return self
        return msgspec.structs.replace(self, api_key="***")


def load_settings(
    path: Path | None = None, env: Mapping[str, str] | None = None
) -> Settings:
    """Load settings from defaults, an optional TOML file and the environment.

    The file is taken from `path`, falling back to the SPECINE_CONFIG variable.
    SPECINE_API_BASE, SPECINE_API_KEY and SPECINE_MODEL override the file.

    Args:
        path (Path | None, optional): TOML configuration file. Defaults to None.
        env (Mapping[str, str] | None, optional): Environment to read. Defaults to
            os.environ.

    Raises:
        SettingsError: If the file is missing or does not decode into Settings.

    Returns:
        Settings: The merged settings.
    """
    env = os.environ if env is None else env
    config_path = path or (Path(env[ENV_CONFIG]) if env.get(ENV_CONFIG) else None)

    settings = Settings()
    if config_path is not None:
        try:
            settings = msgspec.toml.decode(config_path.read_bytes(), type=Settings)
        except FileNotFoundError as ex:
            raise SettingsError(f"Config file not found: {config_path}") from ex
        except (msgspec.DecodeError, msgspec.ValidationError) as ex:
            raise SettingsError(f"Invalid config file {config_path}: {ex}") from ex

    overrides = {
        field: env[name]
        for field, name in (
            ("api_base", ENV_API_BASE),
            ("api_key", ENV_API_KEY),
            ("model", ENV_MODEL),
        )
        if env.get(name)
    }
    return apply_overrides(settings, **overrides)


def apply_overrides(settings: Settings, **overrides: object) -> Settings:
    """Return `settings` with every non-None override applied and re-validated.

    Raises:
        SettingsError: If an override names an unknown field or has a bad value.
    """
    changes = {key: value for key, value in overrides.items() if value is not None}
    if not changes:
        return settings
    unknown = set(changes) - set(Settings.__struct_fields__)
    if unknown:
        raise SettingsError(f"Unknown setting(s): {', '.join(sorted(unknown))}")
    merged = msgspec.structs.asdict(settings) | changes
    try:
        settings = msgspec.convert(merged, type=Settings)
        settings.pipeline_config()
    except (msgspec.ValidationError, ValueError) as ex:
        raise SettingsError(str(ex)) from ex
    return settings
