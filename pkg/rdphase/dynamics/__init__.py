# rdphase/dynamics/__init__.py

from rdphase.dynamics.kernel import KernelEvalConfig, heat_kernel
from rdphase.dynamics.noise import NoiseSlab, NoiseStream
from rdphase.dynamics.reaction import DiffusionSpec, PotentialSpec, compute_level_M
from rdphase.dynamics.solver import Integrator, Scheme, SolverConfig, Trajectory, simulate

__all__ = [
    "KernelEvalConfig",
    "heat_kernel",
    "NoiseSlab",
    "NoiseStream",
    "PotentialSpec",
    "DiffusionSpec",
    "compute_level_M",
    "Scheme",
    "SolverConfig",
    "Integrator",
    "Trajectory",
    "simulate",
]
