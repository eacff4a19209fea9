# rdphase/core/config.py

"""
Experiment configuration.

Configurations are flat ``dotted.key = value`` text files::

    # kpp.cfg
    seed = 7
    grid.points = 256
    model.lambda = 0.05
    solver.t_end = 50
    sweep.lambdas = 0.05, 0.5, 3

Keys are folded into sections and validated with pydantic; unknown keys and
duplicate keys are errors. `echo_config` renders a validated configuration back
to sorted flat text that parses to the same configuration.
"""

from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError

from rdphase.core.exceptions import ConfigurationError
from rdphase.core.field import Field as GridField
from rdphase.core.field import TorusGrid
from rdphase.dynamics.kernel import KernelEvalConfig
from rdphase.dynamics.reaction import DiffusionSpec, PotentialSpec
from rdphase.dynamics.solver import Scheme, SolverConfig, default_dt

_NONE = {"none", "null"}


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


FloatList = Annotated[List[float], BeforeValidator(_split_list)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class GridSection(_Section):
    points: int = Field(default=128, ge=4)


class ModelSection(_Section):
    lam: float = Field(default=0.2, ge=0.0, alias="lambda")


class PotentialSection(_Section):
    family: Literal["kpp", "allen_cahn", "power"] = "kpp"
    nu: float = Field(default=1.0, gt=0.0)
    coefficient: float = Field(default=1.0, gt=0.0)
    drift: bool = True


class SigmaSection(_Section):
    kind: Literal["linear", "custom"] = "linear"
    c: float = 1.0
    name: Literal["saturating", "sine"] = "saturating"
    lip: Optional[float] = Field(default=None, ge=0.0)
    lower: Optional[float] = Field(default=None, ge=0.0)


class SolverSection(_Section):
    scheme: Scheme = Scheme.EXPLICIT
    dt: Optional[float] = Field(default=None, gt=0.0)
    t_end: float = Field(default=5.0, ge=0.0)
    clamp: bool = True
    truncation_n: Optional[int] = Field(default=None, ge=1)
    snapshots: FloatList = Field(default_factory=list)
    record_every: int = Field(default=1, ge=1)


class InitSection(_Section):
    profile: Literal["constant", "cosine"] = "constant"
    level: float = 1.0
    amplitude: float = 0.0


class KernelSection(_Section):
    image_terms: int = Field(default=10, ge=1)
    fourier_modes: int = Field(default=128, ge=1)
    crossover_time: float = Field(default=0.2, gt=0.0)
    times: FloatList = Field(
        default_factory=lambda: [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
    )
    separations: FloatList = Field(default_factory=list)


class CouplingSection(_Section):
    kind: Literal["natural", "independent", "pm", "am"] = "am"
    deltas: FloatList = Field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    t_max: float = Field(default=10.0, gt=0.0)
    merge_tol: Optional[float] = Field(default=None, gt=0.0)
    level: float = Field(default=0.5, gt=0.0)
    # replicas for the one-dimensional marginal comparison; 0 skips it
    marginal_replicas: int = Field(default=0, ge=0)


class ChainSection(_Section):
    mode: Literal["ideal", "embedded"] = "ideal"
    p_up: float = Field(default=2.0 / 3.0, gt=0.0, le=1.0)
    steps: int = Field(default=100_000, ge=1)
    stages: int = Field(default=500, ge=1)
    stage_timeout: float = Field(default=1000.0, gt=0.0)
    level: Optional[float] = Field(default=None, gt=0.0)


class MeasureSection(_Section):
    burn_in: float = Field(default=10.0, ge=1.0)
    thinning: float = Field(default=1.0, gt=0.0)
    total: float = Field(default=200.0, gt=0.0)
    eps: FloatList = Field(default_factory=lambda: [0.1, 0.01, 0.001])
    alphas: FloatList = Field(default_factory=lambda: [0.25, 0.4, 0.49])
    # replicas per start for the agreement run against the cosine start; 0 skips it
    agreement_replicas: int = Field(default=0, ge=0)
    compare_level: float = Field(default=0.3, gt=0.0)
    compare_amplitude: float = 0.2


class SweepSection(_Section):
    lambdas: FloatList = Field(default_factory=lambda: [0.05, 0.5, 1.0, 2.0, 3.0])
    t_end: float = Field(default=50.0, gt=0.0)
    window_start: float = Field(default=10.0, ge=0.0)
    eps: FloatList = Field(default_factory=lambda: [0.1, 0.01, 0.001])
    eps_floor: float = Field(default=1e-3, gt=0.0)


class AppendixSection(_Section):
    scale: Literal["quick", "full"] = "quick"


class Settings(_Section):
    """The validated contents of a configuration file plus overrides."""

    seed: int = 0
    replicas: int = Field(default=8, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    grid: GridSection = Field(default_factory=GridSection)
    model: ModelSection = Field(default_factory=ModelSection)
    potential: PotentialSection = Field(default_factory=PotentialSection)
    sigma: SigmaSection = Field(default_factory=SigmaSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    init: InitSection = Field(default_factory=InitSection)
    kernel: KernelSection = Field(default_factory=KernelSection)
    coupling: CouplingSection = Field(default_factory=CouplingSection)
    chain: ChainSection = Field(default_factory=ChainSection)
    measure: MeasureSection = Field(default_factory=MeasureSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    appendix: AppendixSection = Field(default_factory=AppendixSection)


def parse_flat(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parses ``key = value`` lines.

    Raises:
        ConfigurationError: On a line without '=' or a repeated key.
    """
    entries: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: empty key")
        if key in entries:
            raise ConfigurationError(f"{source}:{number}: duplicate key '{key}'")
        entries[key] = value
    return entries


def apply_overrides(entries: Mapping[str, str], overrides: Sequence[str]) -> Dict[str, str]:
    """Applies ``key=value`` overrides on top of parsed entries."""
    merged = dict(entries)
    for override in overrides:
        if "=" not in override:
            raise ConfigurationError(f"override '{override}' is not key=value")
        key, value = (part.strip() for part in override.split("=", 1))
        merged[key] = value
    return merged


def _fold(entries: Mapping[str, str]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in entries.items():
        node = nested
        *parents, leaf = key.split(".")
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"key '{key}' conflicts with '{part}'")
            node = child
        if isinstance(node.get(leaf), dict):
            raise ConfigurationError(f"key '{key}' conflicts with its section")
        node[leaf] = None if value.lower() in _NONE else value
    return nested


def _first_error(error: ValidationError) -> str:
    detail = error.errors()[0]
    where = ".".join(str(part) for part in detail["loc"])
    return f"{where}: {detail['msg']}"


def validate_entries(entries: Mapping[str, str]) -> Settings:
    try:
        return Settings.model_validate(_fold(entries))
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration at {_first_error(e)}") from e


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> Settings:
    """
    Reads a configuration file (or the defaults when `path` is None) and
    applies overrides.

    Raises:
        ConfigurationError: Missing file, bad syntax, unknown key or bad value.
    """
    entries: Dict[str, str] = {}
    if path is not None:
        file = Path(path)
        if not file.is_file():
            raise ConfigurationError(f"config file '{path}' not found")
        entries = parse_flat(file.read_text(encoding="utf-8"), source=str(file))
    return validate_entries(apply_overrides(entries, overrides))


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return repr(value) if isinstance(value, float) else str(value)


def _flatten(data: Mapping[str, Any], prefix: str = "") -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = _render(value)
    return flat


def echo_config(settings: Settings) -> str:
    """Sorted flat text of every setting, defaults included."""
    flat = _flatten(settings.model_dump(by_alias=True))
    return "".join(f"{key} = {flat[key]}\n" for key in sorted(flat))


class ExperimentConfig(BaseModel):
    """One CLI invocation: what to run, where, and with which settings."""

    model_config = ConfigDict(frozen=True)

    subcommand: str
    config_path: Optional[str] = None
    out: str = "."
    overrides: List[str] = Field(default_factory=list)
    check: bool = False
    resume: bool = False
    settings: Settings

    @classmethod
    def build(
        cls,
        subcommand: str,
        config_path: Optional[str],
        out: str,
        overrides: Sequence[str] = (),
        seed: Optional[int] = None,
        replicas: Optional[int] = None,
        workers: Optional[int] = None,
        check: bool = False,
        resume: bool = False,
    ) -> "ExperimentConfig":
        """Command-line flags act as the last overrides."""
        merged = list(overrides)
        for key, value in (("seed", seed), ("replicas", replicas), ("workers", workers)):
            if value is not None:
                merged.append(f"{key}={value}")
        return cls(
            subcommand=subcommand,
            config_path=config_path,
            out=out,
            overrides=merged,
            check=check,
            resume=resume,
            settings=load_config(config_path, merged),
        )

    @property
    def echo(self) -> str:
        return echo_config(self.settings)


# --- builders from settings to domain objects ---


def build_grid(settings: Settings) -> TorusGrid:
    try:
        return TorusGrid(settings.grid.points)
    except ValueError as e:
        raise ConfigurationError(f"grid.points: {e}") from e


def build_potential(settings: Settings) -> PotentialSpec:
    section = settings.potential
    nu = {"kpp": 1.0, "allen_cahn": 2.0}.get(section.family, section.nu)
    return PotentialSpec.power(nu, section.coefficient, drift_enabled=section.drift)


def build_diffusion(settings: Settings) -> DiffusionSpec:
    section = settings.sigma
    if section.kind == "linear":
        return DiffusionSpec.linear(section.c)
    base = DiffusionSpec.named(section.name, section.c)
    if section.lip is None and section.lower is None:
        return base
    return DiffusionSpec(
        sigma=base.sigma,
        lip=base.lip if section.lip is None else section.lip,
        lower=base.lower if section.lower is None else section.lower,
        name=base.name,
    )


def build_kernel_config(settings: Settings) -> KernelEvalConfig:
    section = settings.kernel
    return KernelEvalConfig(
        image_terms=section.image_terms,
        fourier_modes=section.fourier_modes,
        crossover_time=section.crossover_time,
    )


def build_initial_field(settings: Settings, grid: TorusGrid) -> GridField:
    section = settings.init
    if section.profile == "constant":
        return GridField.constant(grid, section.level)
    return GridField.from_function(
        grid, lambda x: section.level + section.amplitude * np.cos(np.pi * x)
    )


def build_solver_config(settings: Settings, **changes) -> SolverConfig:
    """
    The solver configuration described by `settings`; keyword arguments replace
    individual fields (e.g. ``t_end``, ``lam``, ``snapshot_times``).
    """
    grid = build_grid(settings)
    section = settings.solver
    scheme = Scheme(changes.pop("scheme", section.scheme))
    fields = dict(
        grid=grid,
        dt=section.dt if section.dt is not None else default_dt(grid, scheme),
        t_end=section.t_end,
        lam=settings.model.lam,
        potential=build_potential(settings),
        diffusion=build_diffusion(settings),
        truncation_n=section.truncation_n,
        scheme=scheme,
        clamp_nonnegative=section.clamp,
        snapshot_times=tuple(section.snapshots),
        record_every=section.record_every,
    )
    fields.update(changes)
    return SolverConfig(**fields)
