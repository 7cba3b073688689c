"""Dissipative dynamical state-feedback synthesis for linear systems with an input delay."""

from .basis import BasisSpec, GramData, build_gram, eval_F, expand_in_basis, orthonormalize_coeffs
from .constants import TOL
from .model import (
    AugmentedSystem,
    ControllerGains,
    PlantModel,
    SupplyRate,
    build_augmented,
    supply_from_template,
    validate_plant,
)
from .predictor import PredictorSeed, predictor_init
from .synthesis import AlgorithmConfig, SynthesisResult, prepare, run, synthesize

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "GramData",
    "build_gram",
    "eval_F",
    "expand_in_basis",
    "orthonormalize_coeffs",
    "TOL",
    "AugmentedSystem",
    "ControllerGains",
    "PlantModel",
    "SupplyRate",
    "build_augmented",
    "supply_from_template",
    "validate_plant",
    "PredictorSeed",
    "predictor_init",
    "AlgorithmConfig",
    "SynthesisResult",
    "prepare",
    "run",
    "synthesize",
]
