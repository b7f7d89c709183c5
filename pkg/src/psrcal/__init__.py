"""Calibration of detector scores with a parametric family of proper scoring rules."""

__version__ = "0.1.0"

from .errors import DegenerateInputError, DomainError, QuadratureError, TrialFileError
from .psr import ClosedFormRule, Hypothesis, RuleParams, rule_cost, rule_cost_dq, rule_cost_quadrature
from .weighting import ImpulseWeighting, WeightGrid, WeightParams, normalizer_Z, omega, omega_grid, r_tau, w_beta
from .objective import (
    ObjectiveParams,
    TrialSet,
    expected_cost,
    expected_cost_grad,
    expected_cost_omega,
    impulse_expected_cost,
)
from .calibration import AffineModel, TrainConfig, TrainReport, apply, objective_of_model, train
from .pav import LabeledScores, PavCalibrator, PavSolution, make_calibrator, pav_fit, pav_llrs
from .metrics import bayes_error, c_llr, c_primary, error_rates, evaluate
from .synth import SynthConfig, synth_generate
