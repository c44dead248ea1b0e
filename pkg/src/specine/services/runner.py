import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import httpx
import msgspec

from specine.utils import (
    Dataset,
    EvalSummary,
    Logger,
    PipelineResult,
    Problem,
    RunManifest,
    Settings,
    TraceRecord,
    UsageStats,
    Variant,
    apply_overrides,
)

from .agents import AgentService, PromptBook
from .bench import BenchService, file_digest, load_dataset, rule_effectiveness
from .llm import (
    BackendKind,
    CacheMode,
    LLMService,
    UsageLedger,
    build_backend,
)
from .pipeline import PipelineService
from .sandbox import SandboxService
from .storage import ComparisonRow, RunStorage, now


@dataclass(frozen=True)
class RunOutcome:
    storage: RunStorage
    summary: EvalSummary
    results: tuple[PipelineResult, ...]
    manifest: RunManifest


class BenchmarkRunner:
    """Drives a pipeline over a dataset and writes a self-describing run directory.

    Shared by the run and ablate commands; one runner may execute several runs.
    """

    def __init__(
        self,
        settings: Settings,
        backend: BackendKind = BackendKind.HTTP,
        scenario_path: Path | None = None,
        cache_mode: CacheMode = CacheMode.OFF,
        cache_path: Path | None = None,
        log_level: int = logging.WARNING,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.settings = settings
        self.backend = backend
        self.scenario_path = scenario_path
        self.cache_mode = cache_mode
        self.cache_path = cache_path
        self.log_level = log_level
        self.transport = transport
        self.__logger = Logger.for_service("BenchmarkRunner", log_level)

    def _run_one(
        self,
        problem: Problem,
        pipeline: PipelineService,
        bench: BenchService,
        storage: RunStorage,
        settings: Settings,
    ) -> PipelineResult:
        try:
            result = pipeline.run_problem(problem)
            if settings.trace_private:
                result = bench.annotate_private(result, problem)
        except Exception as ex:
            self.__logger.exception(f"problem {problem.id} crashed")
            result = PipelineResult(
                problem_id=problem.id,
                variant=settings.variant,
                error=f"{type(ex).__name__}: {ex}",
            )
        storage.write_trace(
            TraceRecord(problem_id=problem.id, config=pipeline.config, result=result)
        )
        return result

    def run(
        self,
        dataset_path: Path,
        out_dir: Path,
        variant: Variant | None = None,
        dataset: Dataset | None = None,
    ) -> RunOutcome:
        """Run every problem of a dataset and write traces, reports and manifest.

        Per-problem failures are recorded in the traces and never abort the run.

        Args:
            dataset_path (Path): The dataset file; its digest goes in the manifest.
            out_dir (Path): The run directory to create or reuse.
            variant (Variant | None, optional): Overrides the configured variant.
                Defaults to None.
            dataset (Dataset | None, optional): An already loaded copy of the file.
                Defaults to None.

        Raises:
            DatasetParseError: If the dataset cannot be read.
            SettingsError: If the settings are invalid.

        Returns:
            RunOutcome: The written storage, summary, results and final manifest.
        """
        settings = apply_overrides(self.settings, variant=variant)
        config = settings.pipeline_config()
        dataset = dataset or load_dataset(dataset_path)
        storage = RunStorage(out_dir, log_level=self.log_level)
        storage.initialize()

        manifest = RunManifest(
            run_name=out_dir.name,
            created_at=now(),
            dataset_path=str(dataset_path),
            dataset_name=dataset.name,
            dataset_digest=file_digest(dataset_path),
            backend=self.backend.value,
            cache_mode=self.cache_mode.value,
            seed=settings.seed,
            config=config,
            layout=storage.layout(),
        )
        storage.write_manifest(manifest)
        storage.write_config(settings)

        backend = build_backend(
            self.backend,
            api_base=settings.api_base,
            api_key=settings.api_key,
            backoff_base=settings.backoff_base,
            scenario_path=self.scenario_path,
            cache_mode=self.cache_mode,
            cache_path=self.cache_path or storage.replay_path,
            log_level=self.log_level,
            transport=self.transport,
        )
        ledger = UsageLedger(count_cached_usage=settings.count_cached_usage)
        llm = LLMService(
            backend,
            ledger,
            log_level=self.log_level,
            max_concurrency=settings.parallelism,
        )
        prompts_dir = Path(settings.prompts_dir) if settings.prompts_dir else None
        prompts = PromptBook(prompts_dir)
        agents = AgentService(
            llm,
            generation=config.generation,
            lang=config.lang,
            attempts=config.agent_attempts,
            prompts=prompts,
            log_level=self.log_level,
        )
        sandbox = SandboxService(
            interpreters=settings.interpreters,
            workers=settings.sandbox_workers,
            float_tolerance=settings.float_tolerance,
            log_level=self.log_level,
        )
        pipeline = PipelineService(
            agents,
            sandbox,
            config,
            run_name=manifest.run_name,
            log_level=self.log_level,
        )
        bench = BenchService(
            sandbox,
            limits=config.limits,
            lang=config.lang,
            parallelism=settings.parallelism,
            log_level=self.log_level,
        )

        try:
            with ThreadPoolExecutor(max_workers=settings.parallelism) as pool:
                results = tuple(
                    pool.map(
                        lambda problem: self._run_one(
                            problem, pipeline, bench, storage, settings
                        ),
                        dataset.problems,
                    )
                )
        finally:
            llm.close()

        summary = bench.evaluate(results, dataset, variant=config.variant)
        storage.write_summary(summary)
        storage.write_per_problem(summary)
        storage.write_rules(rule_effectiveness(results))

        per_agent: dict[str, UsageStats] = {}
        for problem in dataset.problems:
            for agent, totals in ledger.per_agent(pipeline.run_id(problem)).items():
                per_agent[agent] = per_agent.get(agent, UsageStats()) + totals.usage
        manifest = msgspec.structs.replace(
            manifest,
            finished_at=now(),
            problems=len(results),
            usage=summary.usage,
            per_agent=dict(sorted(per_agent.items())),
        )
        storage.write_manifest(manifest)
        self.__logger.info(
            f"run {manifest.run_name}: {summary.solved}/{summary.problems} solved"
        )
        return RunOutcome(
            storage=storage, summary=summary, results=results, manifest=manifest
        )

    def ablate(
        self, dataset_path: Path, out_dir: Path, variants: list[Variant]
    ) -> tuple[list[RunOutcome], list[ComparisonRow]]:
        """Run once per variant into sibling directories and compare them.

        Returns:
            tuple[list[RunOutcome], list[ComparisonRow]]: The runs in the given
                order and one comparison row per variant.
        """
        dataset = load_dataset(dataset_path)
        outcomes = [
            self.run(
                dataset_path, out_dir / variant.value, variant=variant, dataset=dataset
            )
            for variant in variants
        ]
        rows = [
            ComparisonRow(
                variant=outcome.manifest.config.variant.value,
                pass_at_1=outcome.summary.pass_at_1,
                avg_pass_ratio=outcome.summary.avg_pass_ratio,
                prompt_tokens=outcome.summary.usage.prompt_tokens,
                completion_tokens=outcome.summary.usage.completion_tokens,
                wall_time=outcome.summary.wall_time,
            )
            for outcome in outcomes
        ]
        storage = RunStorage(out_dir, log_level=self.log_level)
        storage.write_comparison(rows)
        return outcomes, rows
