from .engine import coupling_success_experiment, run_coupling
from .models import CouplingKind, CouplingOutcome

__all__ = ["CouplingKind", "CouplingOutcome", "run_coupling", "coupling_success_experiment"]
