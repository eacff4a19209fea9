"""
The life cycle of one command-line run: configuration, output directory,
result files, metadata and acceptance checks.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from rdphase.cli.formatters import echo_checks, echo_written
from rdphase.core.config import ExperimentConfig, Settings
from rdphase.core.exceptions import OutputError
from rdphase.dynamics.noise import rng_identity
from rdphase.testing.harness import AcceptanceHarness
from rdphase.utils.audit import ResultTable, config_digest, write_meta
from rdphase.utils.logging import configure_logging, get_logger

logger = get_logger(__name__)

CONFIG_ECHO = "config.echo"
META_FILE = "meta.json"


def emit_outputs(tables: Mapping[str, ResultTable], out_dir) -> List[Path]:
    """
    Writes each table as `<out_dir>/<filename>`.

    Raises:
        OutputError: If the directory cannot be created or a file written.
    """
    directory = ensure_directory(out_dir)
    written = []
    for filename, table in tables.items():
        path = directory / filename
        table.to_csv(path)
        written.append(path)
    return written


def ensure_directory(out_dir) -> Path:
    directory = Path(out_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory '{directory}': {e}") from e
    return directory


class RunContext:
    """
    State of one subcommand invocation.

    Example:
        run = RunContext.open("simulate", config_path="kpp.cfg", seed=7, ...)
        run.add_table("observables.csv", table)
        run.harness.check("finite", lambda: (True, "", {}))
        run.finish()
    """

    def __init__(self, experiment: ExperimentConfig):
        self.experiment = experiment
        self.settings: Settings = experiment.settings
        self.out = ensure_directory(experiment.out)
        self.harness = AcceptanceHarness(experiment.subcommand)
        self.tables: Dict[str, ResultTable] = {}
        self.files: List[Path] = []
        self.started = time.perf_counter()
        echo = experiment.echo
        self.digest = config_digest(echo)
        self._write_text(CONFIG_ECHO, echo)
        logger.info(
            "%s: seed %d, %d replicas, digest %s",
            experiment.subcommand,
            self.settings.seed,
            self.settings.replicas,
            self.digest[:12],
        )

    @classmethod
    def open(
        cls,
        subcommand: str,
        config_path: Optional[str],
        seed: Optional[int],
        replicas: Optional[int],
        out: str,
        check: bool,
        resume: bool,
        overrides: Sequence[str],
        workers: Optional[int],
        verbose: bool,
    ) -> "RunContext":
        configure_logging(logging.INFO if verbose else logging.WARNING)
        experiment = ExperimentConfig.build(
            subcommand,
            config_path,
            out,
            overrides=overrides,
            seed=seed,
            replicas=replicas,
            workers=workers,
            check=check,
            resume=resume,
        )
        return cls(experiment)

    @property
    def seed(self) -> int:
        return self.settings.seed

    @property
    def replicas(self) -> int:
        return self.settings.replicas

    @property
    def workers(self) -> Optional[int]:
        return self.settings.workers

    def path(self, filename: str) -> Path:
        return self.out / filename

    def _write_text(self, filename: str, text: str) -> None:
        try:
            self.path(filename).write_text(text, encoding="utf-8")
        except OSError as e:
            raise OutputError(f"could not write '{self.path(filename)}': {e}") from e
        self.files.append(self.path(filename))

    def add_table(self, filename: str, table: ResultTable) -> ResultTable:
        self.tables[filename] = table
        return table

    def finish(self, extra: Optional[Dict[str, Any]] = None) -> None:
        """
        Writes every table and `meta.json`, then reports the checks.

        Raises:
            AcceptanceCheckError: In --check mode, if any check failed.
        """
        self.files.extend(emit_outputs(self.tables, self.out))
        meta_extra = {"subcommand": self.experiment.subcommand}
        if self.harness.results:
            meta_extra["checks"] = self.harness.summary()
        meta_extra.update(extra or {})
        write_meta(
            self.path(META_FILE),
            digest=self.digest,
            seed=self.seed,
            replicas=self.replicas,
            rng=rng_identity(),
            wall_time=time.perf_counter() - self.started,
            extra=meta_extra,
        )
        self.files.append(self.path(META_FILE))
        echo_written(self.files)
        if self.harness.results:
            echo_checks(self.harness)
        if self.experiment.check:
            self.harness.raise_for_failures()
