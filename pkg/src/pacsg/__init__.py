"""PAC reachability analysis of turn-based stochastic games with black-box
and grey-box access, plus a white-box interval iteration for reference."""

from .access import AccessMode, ObservationCounters, PartialModel, SimulatedOracle
from .blackvi import BlackViConfig, black_vi, theoretical_samples
from .estimation import EstimatorConfig, Sidedness, confidence_width, required_samples
from .harness import load_game, pac_test, read_trace, write_trace
from .model import ModelError, Player, StochasticGame, parse_model, serialize_model
from .whitebox import ReachabilityQuery, RunReport, bvi_white, oracle_value

__all__ = [
    "AccessMode", "BlackViConfig", "EstimatorConfig", "ModelError", "ObservationCounters",
    "PartialModel", "Player", "ReachabilityQuery", "RunReport", "Sidedness", "SimulatedOracle",
    "StochasticGame", "black_vi", "bvi_white", "confidence_width", "load_game", "oracle_value",
    "pac_test", "parse_model", "read_trace", "required_samples", "serialize_model",
    "theoretical_samples", "write_trace",
]
