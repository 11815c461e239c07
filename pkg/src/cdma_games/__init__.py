"""Energy-efficient non-cooperative power and spreading-code games in uplink DS/CDMA.

Users pick transmit power (and optionally spreading codes) to maximize bits
delivered per Joule; the access point uses linear MMSE or SIC/MMSE reception.
"""
__version__ = "0.1.0"

from .equilibrium import GameKind, GameOutcome, run_game, verify_nash
from .model import Scenario, SystemConfig, new_scenario
from .montecarlo import TrialSpec, run_experiment, sample_scenario
from .utilityfn import UtilityParams, target_sinr

__all__ = [
    "GameKind",
    "GameOutcome",
    "Scenario",
    "SystemConfig",
    "TrialSpec",
    "UtilityParams",
    "new_scenario",
    "run_experiment",
    "run_game",
    "sample_scenario",
    "target_sinr",
    "verify_nash",
]
