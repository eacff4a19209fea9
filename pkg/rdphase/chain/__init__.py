from .embedded import run_embedded_chain, run_embedded_stage
from .models import ChainConfig, ChainRecord, StageOutcome
from .walk import run_ideal_chain

__all__ = [
    "ChainConfig",
    "ChainRecord",
    "StageOutcome",
    "run_ideal_chain",
    "run_embedded_stage",
    "run_embedded_chain",
]
