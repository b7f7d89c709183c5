"""Affine score-to-LLR calibration ``l = A*s + B``, trained with BFGS."""

from dataclasses import dataclass, field
import json
import logging
import math

import numpy as np

from .errors import DegenerateInputError, DomainError, TrialFileError
from .objective import ObjectiveParams, TrialSet, expected_cost, expected_cost_grad
from .psr import RuleParams

__all__ = [
    "AffineModel",
    "TrainConfig",
    "TrainReport",
    "apply",
    "objective_of_model",
    "default_init",
    "train",
    "bfgs",
    "MODEL_FORMAT",
]

log = logging.getLogger(__name__)

MODEL_FORMAT = "psrcal-affine/1"


@dataclass(frozen=True)
class AffineModel:
    A: float = 1.0
    B: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise DomainError(f"A and B must be finite, got A={self.A!r}, B={self.B!r}")
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "B", float(self.B))

    def __call__(self, scores):
        return apply(self, scores)

    def to_json(self, objective=None):
        """Serialise with the training objective (if any); floats round-trip exactly."""
        doc = {"format": MODEL_FORMAT, "A": self.A, "B": self.B, "alpha": None, "beta": None, "tau": None}
        if objective is not None:
            doc.update(alpha=objective.rule.alpha, beta=objective.rule.beta, tau=objective.tau)
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text, path=None):
        """Parse a model document; returns ``(model, objective_or_None)``."""
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TrialFileError(f"not a model file: {exc}", path=path, lineno=exc.lineno) from None
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise TrialFileError(f"expected format {MODEL_FORMAT!r}", path=path)
        try:
            model = cls(doc["A"], doc["B"])
            objective = None
            if doc.get("alpha") is not None:
                objective = ObjectiveParams(RuleParams(doc["alpha"], doc["beta"]), doc["tau"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TrialFileError(f"bad model fields: {exc}", path=path) from None
        return model, objective


def apply(model, scores):
    """Map raw scores to LLRs.  Accepts an array or a :class:`TrialSet`."""
    if isinstance(scores, TrialSet):
        return scores.map(lambda s: model.A * s + model.B)
    return model.A * np.asarray(scores, dtype=float) + model.B


def objective_of_model(model, scores, params):
    """Objective and its gradient ``(value, dA, dB)`` for raw ``scores``."""
    llrs = apply(model, scores)
    value = expected_cost(params, llrs)
    g_tar, g_non = expected_cost_grad(params, llrs)
    with np.errstate(invalid="ignore"):
        dA = math.fsum(np.concatenate([g_tar * scores.tar, g_non * scores.non]))
    dB = math.fsum(np.concatenate([g_tar, g_non]))
    return value, dA, dB


def default_init(scores):
    """``A = 1 / pooled standard deviation``, ``B = 0``."""
    sd = float(np.std(scores.pooled()))
    if not sd > 0 or not math.isfinite(sd):
        raise DegenerateInputError("scores have zero variance; the scale A is not identifiable")
    return AffineModel(1.0 / sd, 0.0)


@dataclass(frozen=True)
class TrainConfig:
    objective: ObjectiveParams = field(default_factory=lambda: ObjectiveParams.of(1, 1, 0.0))
    init: AffineModel = None
    grad_tol: float = 1e-8
    max_iters: int = 200

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise DomainError("grad_tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")


@dataclass(frozen=True)
class TrainReport:
    model: AffineModel
    final_objective: float
    iterations: int
    converged: bool
    gradient_norm: float
    history: tuple = field(default=(), repr=False)

    def summary(self):
        return (
            f"A={self.model.A!r} B={self.model.B!r} objective={self.final_objective!r} "
            f"iterations={self.iterations} converged={self.converged} "
            f"gradient_norm={self.gradient_norm:.3g}"
        )


def bfgs(fg, x0, grad_tol=1e-8, max_iters=200, c1=1e-4, min_step=1e-20):
    """Minimise ``fg(x) -> (f, grad)`` by BFGS with backtracking line search.

    Steps must satisfy sufficient decrease; non-finite trial values shrink
    the step.  Near the optimum, where the predicted decrease falls below
    rounding of ``f``, a step is also taken if ``f`` does not increase and the
    gradient shrinks.  Returns ``(x, f, g, iterations, converged, history)``.
    """
    x = np.asarray(x0, dtype=float)
    f, g = fg(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise FloatingPointError(f"objective is not finite at the initial point {x0!r}")
    # first step has unit length; rescaled once a curvature pair is available
    H = np.eye(x.size) / max(float(np.linalg.norm(g)), 1e-300)
    fresh = True
    history = [f]
    it = 0
    while it < max_iters and np.max(np.abs(g)) > grad_tol:
        p = -H @ g
        slope = float(g @ p)
        if not slope < 0:
            H = np.eye(x.size) / float(np.linalg.norm(g))
            fresh = True
            p = -H @ g
            slope = float(g @ p)
        step = 1.0
        while True:
            xn = x + step * p
            fn, gn = fg(xn)
            if math.isfinite(fn) and np.all(np.isfinite(gn)):
                if fn <= f + c1 * step * slope:
                    break
                if fn <= f and np.max(np.abs(gn)) < np.max(np.abs(g)):
                    break
            step *= 0.5
            if step < min_step:
                if not math.isfinite(fn):
                    raise FloatingPointError("line search found no step with a finite objective")
                log.debug("line search stalled at iteration %d", it)
                return x, f, g, it, False, tuple(history)
        s = xn - x
        y = gn - g
        sy = float(s @ y)
        if sy > 1e-14 * float(np.sqrt(s @ s) * np.sqrt(y @ y)) and sy > 0:
            if fresh:
                H = np.eye(x.size) * (sy / float(y @ y))
                fresh = False
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, f, g = xn, fn, gn
        history.append(f)
        it += 1
    return x, f, g, it, bool(np.max(np.abs(g)) <= grad_tol), tuple(history)


def train(scores, config=None):
    """Fit ``(A, B)`` on raw target/non-target ``scores``."""
    config = config or TrainConfig()
    scores.require_both()
    if not (np.all(np.isfinite(scores.tar)) and np.all(np.isfinite(scores.non))):
        raise DomainError("training scores must be finite")
    init = config.init or default_init(scores)
    if config.init is not None:
        default_init(scores)  # still reject constant scores
    params = config.objective

    def fg(x):
        value, dA, dB = objective_of_model(AffineModel(x[0], x[1]), scores, params)
        return value, np.array([dA, dB])

    def guarded(x):
        if not np.all(np.isfinite(x)):
            return math.inf, np.full(2, math.nan)
        return fg(x)

    x, f, g, it, converged, history = bfgs(guarded, [init.A, init.B], config.grad_tol, config.max_iters)
    return TrainReport(
        model=AffineModel(x[0], x[1]),
        final_objective=float(f),
        iterations=it,
        converged=converged,
        gradient_norm=float(np.max(np.abs(g))),
        history=history,
    )
