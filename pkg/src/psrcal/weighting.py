"""Threshold weightings: how much each LLR threshold counts in an objective.

Prior weighting at log-odds ``tau`` turns the scoring rule's weighting
``w(t)`` into ``r_tau(t) w(t + tau)``.  Normalised, this is ``Omega(t)``, a
density over Bayes decision thresholds on the log-likelihood-ratio axis.
"""

from dataclasses import dataclass
from functools import lru_cache
import csv
import io
import math

import numpy as np
from scipy.special import betaln, log_expit

from .errors import DomainError, TrialFileError
from .psr import DEFAULT_TOL, TRUNCATION, RuleParams, _integrate, softplus

__all__ = [
    "WeightParams",
    "WeightGrid",
    "ImpulseWeighting",
    "r_tau",
    "log_r_tau",
    "w_beta",
    "omega",
    "log_omega",
    "normalizer_Z",
    "omega_grid",
    "primary_weighting",
    "CPRIMARY_THRESHOLDS",
    "GRID_FORMAT",
]

CPRIMARY_THRESHOLDS = (4.59, 6.91)
GRID_FORMAT = "# psrcal weight-grid v1"


@dataclass(frozen=True)
class WeightParams:
    alpha: float
    beta: float
    tau: float = 0.0

    def __post_init__(self):
        self.rule  # validates alpha, beta
        if not math.isfinite(self.tau):
            raise DomainError(f"tau must be finite, got {self.tau!r}")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def rule(self):
        return RuleParams(self.alpha, self.beta)

    @property
    def prior(self):
        """Synthetic target prior ``pi = sigmoid(tau)``."""
        return 1.0 / (1.0 + math.exp(-self.tau))


def log_r_tau(tau, t):
    return softplus(np.add(t, tau)) - softplus(t) - softplus(tau)


def r_tau(tau, t):
    """Modulation ``(1 + e^(t+tau)) / ((1 + e^t)(1 + e^tau))``.

    Bounded by ``sigmoid(-tau)`` and ``sigmoid(tau)``, which are its limits as
    ``t -> -inf`` and ``t -> +inf``.
    """
    out = np.exp(log_r_tau(tau, np.asarray(t, dtype=float)))
    return float(out) if np.ndim(t) == 0 and np.ndim(tau) == 0 else out


def w_beta(alpha, beta, t):
    """Beta(alpha, beta) density moved to the log-odds axis."""
    if not (alpha > 0 and beta > 0):
        raise DomainError(f"alpha and beta must be positive, got {alpha!r}, {beta!r}")
    t_arr = np.asarray(t, dtype=float)
    out = np.exp(alpha * log_expit(t_arr) + beta * log_expit(-t_arr) - betaln(alpha, beta))
    return float(out) if np.ndim(t) == 0 else out


def _log_unnormalised(params, t):
    u = np.add(t, params.tau)
    return (
        log_r_tau(params.tau, t)
        + params.alpha * log_expit(u)
        + params.beta * log_expit(-u)
        - betaln(params.alpha, params.beta)
    )


@lru_cache(maxsize=256)
def _cached_Z(alpha, beta, tau, tol):
    params = WeightParams(alpha, beta, tau)
    if tau == 0.0:
        # r_0 is identically 1/2 and w integrates to one
        return 0.5
    f = lambda u: math.exp(float(_log_unnormalised(params, u - tau)))
    return _integrate(f, -TRUNCATION, TRUNCATION, tol, "Z")


def normalizer_Z(params, tol=DEFAULT_TOL):
    """Total mass of ``r_tau(t) w(t + tau)``; lies in ``(0, 1)`` and is 1/2 at ``tau = 0``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    return _cached_Z(params.alpha, params.beta, params.tau, float(tol))


def log_omega(params, t, tol=DEFAULT_TOL):
    return _log_unnormalised(params, np.asarray(t, dtype=float)) - math.log(normalizer_Z(params, tol))


def omega(params, t, tol=DEFAULT_TOL):
    """Normalised threshold weighting ``Omega_{alpha,beta,tau}(t)``."""
    out = np.exp(log_omega(params, t, tol))
    return float(out) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class WeightGrid:
    t: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or t.size < 2:
            raise DomainError("t and omega must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise DomainError("t must be strictly increasing")
        if np.any(w < 0):
            raise DomainError("omega must be non-negative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "omega", w)

    @property
    def argmax(self):
        return float(self.t[np.argmax(self.omega)])

    def trapezoid(self):
        return float(np.trapezoid(self.omega, self.t))

    def to_csv(self):
        buf = io.StringIO()
        buf.write(GRID_FORMAT + "\n")
        buf.write("t,omega\n")
        for t, w in zip(self.t, self.omega):
            buf.write(f"{float(t)!r},{float(w)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, path=None):
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if not rows or [c.strip() for c in rows[0]] != ["t", "omega"]:
            raise TrialFileError("expected header 't,omega'", path=path)
        try:
            data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
        except ValueError as exc:
            raise TrialFileError(f"bad weight grid row: {exc}", path=path) from None
        return cls(data[:, 0], data[:, 1])


def omega_grid(params, t_min=-15.0, t_max=15.0, n=3001, tol=DEFAULT_TOL):
    if not (math.isfinite(t_min) and math.isfinite(t_max) and t_min < t_max):
        raise DomainError(f"need finite t_min < t_max, got [{t_min}, {t_max}]")
    if n < 2:
        raise DomainError(f"need n >= 2 samples, got {n}")
    t = np.linspace(t_min, t_max, int(n))
    return WeightGrid(t, omega(params, t, tol))


@dataclass(frozen=True)
class ImpulseWeighting:
    """A finite mixture of simple accept/reject applications."""

    thresholds: tuple
    weights: tuple

    def __post_init__(self):
        th = tuple(float(v) for v in np.atleast_1d(self.thresholds))
        wt = tuple(float(v) for v in np.atleast_1d(self.weights))
        if len(th) != len(wt) or not th:
            raise DomainError("thresholds and weights must be non-empty and of equal length")
        if not all(math.isfinite(v) for v in th):
            raise DomainError("thresholds must be finite")
        if not all(v > 0 and math.isfinite(v) for v in wt):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "weights", wt)


def primary_weighting(equal_weights=False):
    """Two impulses at the Cprimary thresholds, each weighted ``sigmoid(theta)/2``.

    With ``equal_weights`` both weights are exactly 1/2.
    """
    if equal_weights:
        return ImpulseWeighting(CPRIMARY_THRESHOLDS, (0.5, 0.5))
    return ImpulseWeighting(
        CPRIMARY_THRESHOLDS, tuple(0.5 / (1.0 + math.exp(-th)) for th in CPRIMARY_THRESHOLDS)
    )
