"""Prior-weighted expected cost of a set of log-likelihood-ratios.

For a rule shape ``(alpha, beta)`` and prior log-odds ``tau``::

    Cbar = pi/T * sum_tar C*(sigmoid(l + tau), tar)
         + (1 - pi)/N * sum_non C*(sigmoid(l + tau), non)

with ``pi = sigmoid(tau)``.  The same quantity equals ``Z`` times the
threshold-weighted form that integrates ``Omega`` over LLR thresholds; both
routes are implemented so they can check each other.

Per-class sums go through :func:`math.fsum`, so results depend only on the
multiset of inputs, not on order or chunking.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import expit

from .errors import DomainError
from .psr import (
    DEFAULT_TOL,
    TRUNCATION,
    Hypothesis,
    RuleParams,
    _integrate,
    cost_llr,
    cost_llr_dx,
    softplus,
)
from .weighting import ImpulseWeighting, WeightParams, log_omega, normalizer_Z

__all__ = [
    "TrialSet",
    "ObjectiveParams",
    "expected_cost",
    "expected_cost_grad",
    "expected_cost_omega",
    "omega_form_cost",
    "impulse_expected_cost",
]


def _as_values(values, name):
    arr = np.array(values, dtype=float).ravel()
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrialSet:
    """Target and non-target values (raw scores or LLRs, depending on use)."""

    tar: np.ndarray
    non: np.ndarray
    tar_ids: tuple = field(default=None, compare=False)
    non_ids: tuple = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tar", _as_values(self.tar, "tar"))
        object.__setattr__(self, "non", _as_values(self.non, "non"))
        for ids, vals, name in ((self.tar_ids, self.tar, "tar_ids"), (self.non_ids, self.non, "non_ids")):
            if ids is not None and len(ids) != len(vals):
                raise DomainError(f"{name} has {len(ids)} entries for {len(vals)} values")

    @property
    def n_tar(self):
        return self.tar.size

    @property
    def n_non(self):
        return self.non.size

    def require_both(self):
        if self.n_tar < 1 or self.n_non < 1:
            raise DomainError(
                f"need at least one target and one non-target trial, got T={self.n_tar}, N={self.n_non}"
            )

    def map(self, fn):
        """New set with ``fn`` applied to both classes (ids kept)."""
        return TrialSet(fn(self.tar), fn(self.non), self.tar_ids, self.non_ids)

    def pooled(self):
        return np.concatenate([self.tar, self.non])


@dataclass(frozen=True)
class ObjectiveParams:
    rule: RuleParams
    tau: float = 0.0

    def __post_init__(self):
        if not isinstance(self.rule, RuleParams):
            raise DomainError("rule must be a RuleParams")
        if not math.isfinite(self.tau):
            raise DomainError(f"tau must be finite, got {self.tau!r}")
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def of(cls, alpha, beta, tau=0.0):
        return cls(RuleParams(alpha, beta), tau)

    @property
    def prior(self):
        return float(expit(self.tau))

    @property
    def weights(self):
        return WeightParams(self.rule.alpha, self.rule.beta, self.tau)


def _class_weights(params, llrs):
    llrs.require_both()
    return float(expit(params.tau)) / llrs.n_tar, float(expit(-params.tau)) / llrs.n_non


def expected_cost(params, llrs, tol=DEFAULT_TOL):
    """Objective value for a set of LLRs.

    Shapes without a closed form fall back to per-trial quadrature (``tol``).
    Infinite LLRs use the continuous extension of the rule, so e.g. a target
    at ``+inf`` costs nothing under the logarithmic rule while one at
    ``-inf`` costs ``inf``.
    """
    wt, wn = _class_weights(params, llrs)
    c_tar = cost_llr(params.rule, llrs.tar + params.tau, Hypothesis.TAR, tol)
    c_non = cost_llr(params.rule, llrs.non + params.tau, Hypothesis.NON, tol)
    return wt * math.fsum(c_tar) + wn * math.fsum(c_non)


def expected_cost_grad(params, llrs):
    """Per-trial partial derivatives ``(d/dl_tar, d/dl_non)``.

    Target entries are negative and non-target entries positive.
    """
    wt, wn = _class_weights(params, llrs)
    g_tar = wt * cost_llr_dx(params.rule, llrs.tar + params.tau, Hypothesis.TAR)
    g_non = wn * cost_llr_dx(params.rule, llrs.non + params.tau, Hypothesis.NON)
    return np.asarray(g_tar), np.asarray(g_non)


def omega_form_cost(log_density, llrs, lo, hi, tol=DEFAULT_TOL, points=()):
    """Threshold-weighted objective for an arbitrary weighting density.

    ``log_density(t)`` is the log of the weighting on the LLR-threshold axis,
    which is treated as zero outside ``[lo, hi]``.  Each target contributes
    ``int_l^hi (1 + e^-t) Omega(t) dt``, each non-target
    ``int_lo^l (1 + e^t) Omega(t) dt``, averaged per class.
    """
    llrs.require_both()
    f_tar = lambda t: math.exp(float(softplus(-t) + log_density(t)))
    f_non = lambda t: math.exp(float(softplus(t) + log_density(t)))

    def piecewise(f, a, b, what):
        if not a < b:
            return 0.0
        cuts = [a] + sorted(p for p in points if a < p < b) + [b]
        return math.fsum(_integrate(f, u, v, tol / len(cuts), what) for u, v in zip(cuts, cuts[1:]))

    c_tar = [piecewise(f_tar, min(max(l, lo), hi), hi, "C_Omega(l, tar)") for l in llrs.tar]
    c_non = [piecewise(f_non, lo, max(min(l, hi), lo), "C_Omega(l, non)") for l in llrs.non]
    return math.fsum(c_tar) / llrs.n_tar + math.fsum(c_non) / llrs.n_non


def expected_cost_omega(params, llrs, tol=DEFAULT_TOL):
    """Threshold-weighted objective with ``Omega_{alpha,beta,tau}``, by quadrature.

    ``expected_cost(params, llrs) == normalizer_Z(params.weights) * expected_cost_omega(params, llrs)``
    """
    wp = params.weights
    normalizer_Z(wp, tol)
    lo, hi = -TRUNCATION - wp.tau, TRUNCATION - wp.tau
    return omega_form_cost(lambda t: log_omega(wp, t, tol), llrs, lo, hi, tol, points=(-wp.tau,))


def impulse_expected_cost(weights, llrs):
    """Exact objective for a sum of impulses at thresholds ``theta_i``.

    An impulse at ``theta`` is the application with ``C_miss = 1 + e^-theta``
    and ``C_fa = 1 + e^theta`` deciding at LLR threshold ``theta``.  A trial
    with ``l == theta`` is rejected.
    """
    if not isinstance(weights, ImpulseWeighting):
        raise DomainError("weights must be an ImpulseWeighting")
    llrs.require_both()
    terms = []
    for theta, w in zip(weights.thresholds, weights.weights):
        p_miss = np.count_nonzero(llrs.tar <= theta) / llrs.n_tar
        p_fa = np.count_nonzero(llrs.non > theta) / llrs.n_non
        terms.append(w * ((1.0 + math.exp(-theta)) * p_miss + (1.0 + math.exp(theta)) * p_fa))
    return math.fsum(terms)
