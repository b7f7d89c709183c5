"""Detection metrics on LLR trial sets: error rates, Bayes error, Cprimary, Cllr."""

from dataclasses import dataclass
import io
import math

import numpy as np

from .weighting import CPRIMARY_THRESHOLDS

__all__ = [
    "ErrorRates",
    "error_rates",
    "bayes_error",
    "c_primary",
    "c_llr",
    "MetricsReport",
    "evaluate",
    "METRICS_FORMAT",
]

METRICS_FORMAT = "# psrcal metrics v1"


@dataclass(frozen=True)
class ErrorRates:
    p_miss: float
    p_fa: float
    threshold: float


def error_rates(llrs, theta):
    """Miss and false-alarm rates when accepting iff ``l > theta``."""
    llrs.require_both()
    p_miss = np.count_nonzero(llrs.tar <= theta) / llrs.n_tar
    p_fa = np.count_nonzero(llrs.non > theta) / llrs.n_non
    return ErrorRates(float(p_miss), float(p_fa), float(theta))


def bayes_error(llrs, theta):
    """``p_miss + e^theta * p_fa``: the single-threshold cost scaled by ``sigmoid(theta)``."""
    r = error_rates(llrs, theta)
    return r.p_miss + math.exp(theta) * r.p_fa


def c_primary(llrs, equal_weights=False):
    """Mean Bayes error at LLR thresholds 4.59 and 6.91.

    The default weights each impulse by ``sigmoid(theta)/2``.  With
    ``equal_weights`` the two applications get weight exactly 1/2 each, which
    is ``bayes_error / sigmoid(theta)`` per threshold.
    """
    terms = []
    for theta in CPRIMARY_THRESHOLDS:
        be = bayes_error(llrs, theta)
        if equal_weights:
            be *= 1.0 + math.exp(-theta)
        terms.append(be)
    return 0.5 * (terms[0] + terms[1])


def c_llr(llrs):
    """Logarithmic-rule objective at ``tau = 0``, in bits."""
    llrs.require_both()
    c_tar = math.fsum(np.logaddexp2(0.0, -llrs.tar * (1.0 / math.log(2.0)))) / llrs.n_tar
    c_non = math.fsum(np.logaddexp2(0.0, llrs.non * (1.0 / math.log(2.0)))) / llrs.n_non
    return 0.5 * (c_tar + c_non)


@dataclass(frozen=True)
class MetricsReport:
    n_tar: int
    n_non: int
    rates: tuple
    c_primary: float
    c_llr: float

    def as_rows(self):
        rows = [("n_tar", self.n_tar), ("n_non", self.n_non)]
        for r in self.rates:
            rows.append((f"p_miss@{r.threshold:g}", r.p_miss))
            rows.append((f"p_fa@{r.threshold:g}", r.p_fa))
        rows.append(("c_primary", self.c_primary))
        rows.append(("c_llr", self.c_llr))
        return rows

    def to_text(self):
        lines = [f"trials: {self.n_tar} target, {self.n_non} non-target"]
        for r in self.rates:
            lines.append(f"threshold {r.threshold:g}: p_miss={r.p_miss:.6f} p_fa={r.p_fa:.6f}")
        lines.append(f"c_primary: {self.c_primary:.6f}")
        lines.append(f"c_llr:     {self.c_llr:.6f} bits")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        buf.write(METRICS_FORMAT + "\n")
        buf.write("metric,value\n")
        for k, v in self.as_rows():
            buf.write(f"{k},{v if isinstance(v, int) else float(v)!r}\n")
        return buf.getvalue()


def evaluate(llrs, equal_weights=False):
    return MetricsReport(
        n_tar=llrs.n_tar,
        n_non=llrs.n_non,
        rates=tuple(error_rates(llrs, th) for th in CPRIMARY_THRESHOLDS),
        c_primary=c_primary(llrs, equal_weights),
        c_llr=c_llr(llrs),
    )
