"""High-order compact, time-adaptive pricing of European options under a
family of stochastic volatility models.

dv = kappa v^a (theta - v) dt + sigma v^b dW_2 with a >= 0, 0 < b <= 3/2.
"""

from svhoc.model import ModelParams, TransformedCoeffs, named_model
from svhoc.spatial import Grid, SemiDiscreteSystem, assemble, build_grid
from svhoc.multistep import StepRatios, MultistepCoeffs, predictor_coefficients, corrector_coefficients
from svhoc.controller import ControllerConfig, StepDiagnostics, next_step
from svhoc.solver import RunReport, march, extract_price, price_european_put

__all__ = [
    "ModelParams",
    "TransformedCoeffs",
    "named_model",
    "Grid",
    "SemiDiscreteSystem",
    "assemble",
    "build_grid",
    "StepRatios",
    "MultistepCoeffs",
    "predictor_coefficients",
    "corrector_coefficients",
    "ControllerConfig",
    "StepDiagnostics",
    "next_step",
    "RunReport",
    "march",
    "extract_price",
    "price_european_put",
]

__version__ = "0.1.0"
