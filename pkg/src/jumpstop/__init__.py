"""Controller-stopper games with controlled jumps: PIDE solvers, a Markov-chain oracle and Monte-Carlo checks."""
from __future__ import annotations

__version__ = "0.1.0"

from .canned import canned_model, canned_names
from .envelopes import EnvelopePair, build_envelopes, verify_neutral_control
from .grid import CFLError, SolverGrid, parse_grid_spec
from .hamiltonians import (TestFunction, facelift_distance, game_hamiltonian, generator_apply, nonlocal_apply,
                           relaxed_operator, target_jump_operators)
from .model import (ControlledJumpModel, ModelError, emit_model, eval_coefficients, load_model,
                    validate_assumptions)
from .oracle import build_chain, check_consistency, oracle_value, snell_value
from .simulate import (FixedTimeRule, HittingRule, MartingaleControl, PolicyRule, check_admissibility,
                       estimate_target_bound, hedge_from_surface, mc_game_value, simulate_path)
from .solver import AuxGSpec, check_envelope_bounds, facelift_terminal, solve_game
from .surface import PolicyField, ValueSurface, extract_policy

__all__ = [
    "AuxGSpec", "CFLError", "ControlledJumpModel", "EnvelopePair", "FixedTimeRule", "HittingRule",
    "MartingaleControl", "ModelError", "PolicyField", "PolicyRule", "SolverGrid", "TestFunction", "ValueSurface",
    "build_chain", "build_envelopes", "canned_model", "canned_names", "check_admissibility", "check_consistency",
    "check_envelope_bounds", "emit_model", "estimate_target_bound", "eval_coefficients", "extract_policy",
    "facelift_distance", "facelift_terminal", "game_hamiltonian", "generator_apply", "hedge_from_surface",
    "load_model", "mc_game_value", "nonlocal_apply", "oracle_value", "parse_grid_spec", "relaxed_operator",
    "simulate_path", "snell_value", "solve_game", "target_jump_operators", "validate_assumptions",
    "verify_neutral_control",
]
