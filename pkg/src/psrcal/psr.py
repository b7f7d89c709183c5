"""Binary proper scoring rules from the log-odds beta family.

Every rule is indexed by a shape ``(alpha, beta)`` and written in canonical
form with ``k0 = 1, k1 = k2 = 0``::

    C(q, tar) = int_{logit q}^{inf}  (1 + e^-t) w(t) dt
    C(q, non) = int_{-inf}^{logit q} (1 + e^t)  w(t) dt

where ``w`` is the beta(alpha, beta) density mapped to the log-odds axis.
Four shapes have closed forms (boosting, logarithmic, Brier, asymmetric);
anything else is integrated numerically.

Internally costs are evaluated from the log-odds ``x = logit(q)`` so that
callers holding log-likelihood-ratios never have to form ``q``.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import integrate
from scipy.special import betaln, expit, log_expit, logit

from .errors import DomainError, QuadratureError

__all__ = [
    "Hypothesis",
    "RuleParams",
    "ClosedFormRule",
    "TRUNCATION",
    "DEFAULT_TOL",
    "rule_cost",
    "rule_cost_quadrature",
    "rule_cost_dq",
    "cost_llr",
    "cost_llr_dx",
    "log_integrand",
    "softplus",
]

# Integrands decay at least like exp(-min(alpha, beta)|t|); beyond this the
# remainder is below any tolerance we use.
TRUNCATION = 50.0
DEFAULT_TOL = 1e-8


class Hypothesis(str, Enum):
    TAR = "tar"
    NON = "non"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"hypothesis must be 'tar' or 'non', got {value!r}") from None


@dataclass(frozen=True)
class RuleParams:
    """Shape of a scoring rule: ``alpha`` thins the left tail, ``beta`` the right."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def closed_form(self):
        """The matching :class:`ClosedFormRule`, or ``None``."""
        return ClosedFormRule.lookup(self.alpha, self.beta)

    @property
    def log_beta_fn(self):
        return float(betaln(self.alpha, self.beta))


class ClosedFormRule(Enum):
    BOOSTING = (0.5, 0.5)
    LOGARITHMIC = (1.0, 1.0)
    BRIER = (2.0, 2.0)
    ASYMMETRIC = (2.0, 1.0)

    @property
    def params(self):
        return RuleParams(*self.value)

    @classmethod
    def lookup(cls, alpha, beta):
        for rule in cls:
            if rule.value == (alpha, beta):
                return rule
        return None


def softplus(x):
    """log(1 + e^x), overflow-free."""
    return np.logaddexp(0.0, x)


def _softplus_minus_sigmoid(x):
    # softplus(x) - sigmoid(x) = int_{-inf}^x sigmoid(t)^2 dt.  The direct
    # difference cancels for x << 0, so use the power series in u = e^x there.
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < -3.0
    xs = x[~small]
    out[~small] = softplus(xs) - expit(xs)
    if np.any(small):
        u = np.exp(x[small])
        # sum_{k>=2} (-1)^k (k-1)/k u^k, |u| < 0.05; 14 terms reach 1e-17 relative
        acc = np.zeros_like(u)
        for k in range(15, 1, -1):
            acc = acc * u + (-1) ** k * (k - 1) / k
        out[small] = acc * u * u
    return out


def _closed_cost(rule, x, h):
    if rule is ClosedFormRule.LOGARITHMIC:
        return softplus(-x) if h is Hypothesis.TAR else softplus(x)
    if rule is ClosedFormRule.BOOSTING:
        with np.errstate(over="ignore"):
            return (2.0 / math.pi) * np.exp(-0.5 * x if h is Hypothesis.TAR else 0.5 * x)
    if rule is ClosedFormRule.BRIER:
        return 3.0 * expit(-x) ** 2 if h is Hypothesis.TAR else 3.0 * expit(x) ** 2
    if rule is ClosedFormRule.ASYMMETRIC:
        if h is Hypothesis.TAR:
            return 2.0 * expit(-x)
        return 2.0 * _softplus_minus_sigmoid(x)
    raise AssertionError(rule)


def log_integrand(params, t, h):
    """Log of ``(1 + e^-t) w(t)`` for ``tar`` or ``(1 + e^t) w(t)`` for ``non``."""
    a, b = params.alpha, params.beta
    if h is Hypothesis.TAR:
        a = a - 1.0
    else:
        b = b - 1.0
    return a * log_expit(t) + b * log_expit(-t) - params.log_beta_fn


def _integrate(f, lo, hi, tol, what):
    if not lo < hi:
        return 0.0
    points = [0.0] if lo < 0.0 < hi else None
    val, abserr, *rest = integrate.quad(
        f, lo, hi, epsabs=0.25 * tol, epsrel=0.0, limit=500, points=points, full_output=1
    )
    if not (math.isfinite(val) and abserr <= tol):
        raise QuadratureError(
            f"quadrature of {what} over [{lo:g}, {hi:g}] did not converge: "
            f"estimate={val!r}, error estimate={abserr:.3g} > tol={tol:.3g}",
            estimate=val,
            abserr=abserr,
        )
    return val


def _quad_cost_scalar(params, x, h, tol):
    f = lambda t: math.exp(log_integrand(params, t, h))
    if h is Hypothesis.TAR:
        lo = -TRUNCATION if x == -math.inf else x
        return _integrate(f, lo, TRUNCATION, tol, "C(q, tar)")
    hi = TRUNCATION if x == math.inf else x
    return _integrate(f, -TRUNCATION, hi, tol, "C(q, non)")


def cost_llr(params, x, h, tol=DEFAULT_TOL):
    """Cost of log-odds ``x = logit(q)`` (an array or scalar) under hypothesis ``h``.

    Closed forms are used when available, otherwise the canonical integral is
    evaluated per element with adaptive quadrature.  ``x = +-inf`` is the
    continuous extension and may give ``inf``.
    """
    h = Hypothesis.parse(h)
    x_arr = np.asarray(x, dtype=float)
    rule = params.closed_form
    if rule is not None:
        out = _closed_cost(rule, x_arr, h)
    else:
        flat = [_quad_cost_scalar(params, float(v), h, tol) for v in x_arr.ravel()]
        out = np.asarray(flat, dtype=float).reshape(x_arr.shape)
    return float(out) if np.ndim(x) == 0 else out


def cost_llr_dx(params, x, h):
    """Derivative of :func:`cost_llr` with respect to ``x``.

    By the fundamental theorem of calculus this is minus the integrand for
    ``tar`` and plus the integrand for ``non``; it holds for any shape.
    """
    h = Hypothesis.parse(h)
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        g = np.exp(log_integrand(params, x_arr, h))
    out = -g if h is Hypothesis.TAR else g
    return float(out) if np.ndim(x) == 0 else out


def _check_probability(q):
    q_arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(q_arr)) or np.any((q_arr < 0.0) | (q_arr > 1.0)):
        raise DomainError("q must lie in [0, 1]")
    return q_arr


def rule_cost(params, q, h):
    """Cost ``C*(q, h)`` of posterior ``q`` when hypothesis ``h`` is true.

    ``q`` may be 0 or 1; on the diverging side of the logarithmic, asymmetric
    and boosting rules the result is ``inf``.  Values outside ``[0, 1]`` raise
    :class:`DomainError`.

    >>> round(rule_cost(RuleParams(1, 1), 0.5, "tar"), 6)
    0.693147
    """
    q_arr = _check_probability(q)
    with np.errstate(divide="ignore"):
        x = logit(q_arr)
    out = cost_llr(params, x, h)
    return float(out) if np.ndim(q) == 0 else out


def rule_cost_quadrature(params, q, h, tol=DEFAULT_TOL):
    """Numerical oracle for :func:`rule_cost` valid for any ``alpha, beta > 0``."""
    h = Hypothesis.parse(h)
    if not tol > 0:
        raise DomainError("tol must be positive")
    q_arr = _check_probability(q)
    with np.errstate(divide="ignore"):
        x = logit(q_arr)
    flat = [_quad_cost_scalar(params, float(v), h, tol) for v in np.ravel(x)]
    out = np.asarray(flat, dtype=float).reshape(np.shape(x))
    return float(out) if np.ndim(q) == 0 else out


def rule_cost_dq(params, q, h):
    """``dC*/dq``: ``-q^(a-2) (1-q)^(b-1) / B(a,b)`` for tar, ``q^(a-1) (1-q)^(b-2) / B(a,b)`` for non."""
    h = Hypothesis.parse(h)
    q_arr = _check_probability(q)
    a, b = params.alpha, params.beta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if h is Hypothesis.TAR:
            out = -np.exp((a - 2.0) * np.log(q_arr) + (b - 1.0) * np.log1p(-q_arr) - params.log_beta_fn)
        else:
            out = np.exp((a - 1.0) * np.log(q_arr) + (b - 2.0) * np.log1p(-q_arr) - params.log_beta_fn)
    return float(out) if np.ndim(q) == 0 else out
