# tests/conftest.py
# pytest fixtures

import pytest

from rdphase.core.field import TorusGrid
from rdphase.dynamics.reaction import DiffusionSpec, PotentialSpec
from rdphase.dynamics.solver import Scheme, SolverConfig, default_dt
from rdphase.utils.logging import reset_logging


@pytest.fixture(scope="function", autouse=True)
def clean_logging():
    """Drop handlers the CLI installs so one test's verbosity does not leak."""
    yield
    reset_logging()


@pytest.fixture
def kpp_config():
    """A small, fast KPP configuration: 16 points, explicit scheme, t_end = 1."""

    def build(**changes):
        grid = TorusGrid(changes.pop("points", 16))
        scheme = changes.pop("scheme", Scheme.EXPLICIT)
        fields = dict(
            grid=grid,
            dt=default_dt(grid, scheme),
            t_end=1.0,
            lam=0.2,
            potential=PotentialSpec.kpp(),
            diffusion=DiffusionSpec.linear(1.0),
            scheme=scheme,
        )
        fields.update(changes)
        return SolverConfig(**fields)

    return build
