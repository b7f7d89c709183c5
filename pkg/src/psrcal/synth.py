"""Synthetic scores with known calibration.

Target LLRs are drawn from ``Normal(mu, 2 mu)`` and non-target LLRs from
``Normal(-mu, 2 mu)``.  For this pair of densities the log-likelihood-ratio
of a draw ``x`` is ``x`` itself, so the draws are perfectly calibrated.  Raw
scores are produced by inverting a known calibration curve
``l = A0 s + B0 + cubic s^3``.

Random numbers come from ``numpy.random.Generator(PCG64(seed))``: targets
first, then non-targets, via ``Generator.normal``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .calibration import AffineModel
from .errors import DomainError
from .io import TrialRecord
from .objective import TrialSet

__all__ = ["SynthConfig", "SynthResult", "synth_generate", "invert_warp", "calibrated_llrs"]


@dataclass(frozen=True)
class SynthConfig:
    mu: float = 2.0
    n_tar: int = 1000
    n_non: int = 1000
    warp: tuple = (1.0, 0.0)
    seed: int = 0
    cubic: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be positive, got {self.mu!r}")
        if self.n_tar < 1 or self.n_non < 1:
            raise DomainError("n_tar and n_non must be >= 1")
        A0, B0 = self.warp
        if A0 == 0 or not (math.isfinite(A0) and math.isfinite(B0)):
            raise DomainError(f"warp A0 must be finite and non-zero, got {self.warp!r}")
        if self.cubic < 0 or (self.cubic > 0 and A0 < 0):
            raise DomainError("cubic warp needs cubic >= 0 and A0 > 0 to stay invertible")


@dataclass(frozen=True)
class SynthResult:
    records: list
    truth: AffineModel
    llrs: TrialSet
    scores: TrialSet


def calibrated_llrs(mu, n_tar, n_non, rng):
    sd = math.sqrt(2.0 * mu)
    return rng.normal(mu, sd, n_tar), rng.normal(-mu, sd, n_non)


def invert_warp(llr, A0, B0, cubic=0.0):
    """Score ``s`` with ``A0 s + B0 + cubic s^3 == llr``."""
    llr = np.asarray(llr, dtype=float)
    if cubic == 0:
        return (llr - B0) / A0
    # depressed cubic s^3 + p s + q = 0 with p > 0: a single real root (Cardano)
    p = A0 / cubic
    q = (B0 - llr) / cubic
    d = np.sqrt(0.25 * q * q + p**3 / 27.0)
    s = np.cbrt(-0.5 * q + d) + np.cbrt(-0.5 * q - d)
    # one Newton step removes Cardano's cancellation error
    return s - (cubic * s**3 + A0 * s + B0 - llr) / (3.0 * cubic * s**2 + A0)


def synth_generate(config):
    rng = np.random.Generator(np.random.PCG64(config.seed))
    l_tar, l_non = calibrated_llrs(config.mu, config.n_tar, config.n_non, rng)
    A0, B0 = config.warp
    s_tar = invert_warp(l_tar, A0, B0, config.cubic)
    s_non = invert_warp(l_non, A0, B0, config.cubic)
    wt = len(str(config.n_tar - 1))
    wn = len(str(config.n_non - 1))
    records = [TrialRecord(f"tar{i:0{wt}d}", float(s), "tar") for i, s in enumerate(s_tar)]
    records += [TrialRecord(f"non{i:0{wn}d}", float(s), "non") for i, s in enumerate(s_non)]
    return SynthResult(
        records=records,
        truth=AffineModel(A0, B0),
        llrs=TrialSet(l_tar, l_non),
        scores=TrialSet(s_tar, s_non),
    )
