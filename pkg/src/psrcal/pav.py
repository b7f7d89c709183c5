"""Pool-adjacent-violators (PAV) calibration.

The fit is a weighted isotonic regression of target indicators on score
order, with weight ``pi/T`` per target and ``(1 - pi)/N`` per non-target.
Pooling decisions compare blocks by their target/non-target count ratios
using exact integer arithmetic, so the block structure, and hence the LLRs,
do not depend on ``pi`` at all.
"""

from dataclasses import dataclass
import io
import math

import numpy as np

from .errors import DomainError, TrialFileError
from .psr import Hypothesis

__all__ = [
    "LabeledScores",
    "PavBlock",
    "PavSolution",
    "PavCalibrator",
    "pav_fit",
    "pav_llrs",
    "make_calibrator",
    "DEFAULT_LLR_MAX",
    "KNOTS_FORMAT",
]

DEFAULT_LLR_MAX = 100.0
KNOTS_FORMAT = "# psrcal pav-calibrator v1"


@dataclass(frozen=True)
class LabeledScores:
    scores: np.ndarray
    labels: tuple

    def __post_init__(self):
        s = np.array(self.scores, dtype=float).ravel()
        labels = tuple(Hypothesis.parse(h) for h in self.labels)
        if s.size != len(labels):
            raise DomainError(f"{s.size} scores but {len(labels)} labels")
        if s.size == 0:
            raise DomainError("no trials")
        if not np.all(np.isfinite(s)):
            raise DomainError("scores must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_trials(cls, trials):
        """Build from a :class:`~psrcal.objective.TrialSet` of raw scores."""
        scores = np.concatenate([trials.tar, trials.non])
        return cls(scores, (Hypothesis.TAR,) * trials.n_tar + (Hypothesis.NON,) * trials.n_non)

    @property
    def is_target(self):
        return np.array([h is Hypothesis.TAR for h in self.labels], dtype=bool)


@dataclass(frozen=True)
class PavBlock:
    score_lo: float
    score_hi: float
    n_tar: int
    n_non: int
    posterior: float


@dataclass(frozen=True)
class PavSolution:
    blocks: tuple
    posteriors: np.ndarray  # per trial, input order
    block_index: np.ndarray  # per trial, input order
    n_tar: int
    n_non: int
    pi: float


def _check_pi(pi):
    if not (0.0 < pi < 1.0):
        raise DomainError(f"pi must lie strictly between 0 and 1, got {pi!r}")


def pav_fit(data, pi=0.5):
    """Monotone non-decreasing posteriors minimising every proper scoring rule.

    Trials with equal scores always share one block.
    """
    _check_pi(pi)
    scores = data.scores
    is_tar = data.is_target
    T = int(np.count_nonzero(is_tar))
    N = is_tar.size - T
    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    t_sorted = is_tar[order]

    # tie groups as starting blocks
    starts = np.flatnonzero(np.r_[True, s_sorted[1:] != s_sorted[:-1]])
    ends = np.r_[starts[1:], s_sorted.size]

    # stack of [first_group, last_group, k_tar, k_non]
    stack = []
    for g, (a, b) in enumerate(zip(starts, ends)):
        kt = int(np.count_nonzero(t_sorted[a:b]))
        cur = [g, g, kt, (b - a) - kt]
        # pool while previous ratio >= current ratio: kt1/kn1 >= kt2/kn2
        while stack and stack[-1][2] * cur[3] >= cur[2] * stack[-1][3]:
            prev = stack.pop()
            cur = [prev[0], cur[1], prev[2] + cur[2], prev[3] + cur[3]]
        stack.append(cur)

    w_tar = pi / T if T else 0.0
    w_non = (1.0 - pi) / N if N else 0.0
    blocks = []
    block_index = np.empty(scores.size, dtype=int)
    posteriors = np.empty(scores.size, dtype=float)
    for i, (g0, g1, kt, kn) in enumerate(stack):
        mass_t, mass_n = w_tar * kt, w_non * kn
        post = mass_t / (mass_t + mass_n)
        lo, hi = starts[g0], ends[g1]
        blocks.append(PavBlock(float(s_sorted[lo]), float(s_sorted[hi - 1]), kt, kn, post))
        block_index[order[lo:hi]] = i
        posteriors[order[lo:hi]] = post
    return PavSolution(tuple(blocks), posteriors, block_index, T, N, float(pi))


def _block_llrs(solution, llr_max):
    if solution.n_tar == 0 or solution.n_non == 0:
        raise DomainError("PAV LLRs need both target and non-target trials")
    if not llr_max > 0:
        raise DomainError("llr_max must be positive")
    out = []
    for b in solution.blocks:
        if b.n_non == 0:
            out.append(llr_max)
        elif b.n_tar == 0:
            out.append(-llr_max)
        else:
            llr = math.log(b.n_tar * solution.n_non) - math.log(b.n_non * solution.n_tar)
            out.append(min(max(llr, -llr_max), llr_max))
    return np.array(out)


def pav_llrs(solution, llr_max=DEFAULT_LLR_MAX):
    """Per-trial LLRs ``log(k_tar N / (k_non T))`` of each trial's block.

    Equal to ``logit(posterior) - logit(pi)``, but computed from counts so the
    value is independent of the prior the fit used.  Pure blocks map to
    ``+-llr_max``.
    """
    return _block_llrs(solution, llr_max)[solution.block_index]


@dataclass(frozen=True)
class PavCalibrator:
    """Monotone piecewise-linear score-to-LLR map, clamped beyond the knots."""

    knots: np.ndarray
    llrs: np.ndarray
    llr_max: float = DEFAULT_LLR_MAX

    def __post_init__(self):
        x = np.array(self.knots, dtype=float).ravel()
        y = np.array(self.llrs, dtype=float).ravel()
        if x.size == 0 or x.size != y.size:
            raise DomainError("knots and llrs must be non-empty and of equal length")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) < 0):
            raise DomainError("knots must increase strictly and llrs must not decrease")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "knots", x)
        object.__setattr__(self, "llrs", y)

    def __call__(self, scores):
        s = np.asarray(scores, dtype=float)
        out = np.interp(s, self.knots, self.llrs)
        return float(out) if np.ndim(scores) == 0 else out

    def to_text(self):
        buf = io.StringIO()
        buf.write(KNOTS_FORMAT + "\n")
        buf.write(f"# llr_max={float(self.llr_max)!r}\n")
        buf.write("score,llr\n")
        for x, y in zip(self.knots, self.llrs):
            buf.write(f"{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text, path=None):
        lines = text.splitlines()
        if not lines or lines[0].strip() != KNOTS_FORMAT:
            raise TrialFileError(f"expected first line {KNOTS_FORMAT!r}", path=path, lineno=1)
        llr_max = DEFAULT_LLR_MAX
        xs, ys = [], []
        header_seen = False
        for lineno, line in enumerate(lines[1:], start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("llr_max="):
                    llr_max = float(line.split("=", 1)[1])
                continue
            if not header_seen:
                if line.replace(" ", "") != "score,llr":
                    raise TrialFileError("expected header 'score,llr'", path=path, lineno=lineno)
                header_seen = True
                continue
            try:
                x, y = line.split(",")
                xs.append(float(x))
                ys.append(float(y))
            except ValueError:
                raise TrialFileError(f"bad knot row {line!r}", path=path, lineno=lineno) from None
        try:
            return cls(xs, ys, llr_max)
        except DomainError as exc:
            raise TrialFileError(str(exc), path=path) from None


def make_calibrator(data, pi=0.5, llr_max=DEFAULT_LLR_MAX):
    """Interpolating calibrator through the PAV solution of ``data``.

    Each block contributes knots at its lowest and highest score, both at the
    block LLR, so every training score maps to its own PAV LLR; between blocks
    the map is linear.
    """
    solution = pav_fit(data, pi)
    block_llr = _block_llrs(solution, llr_max)
    xs, ys = [], []
    for b, llr in zip(solution.blocks, block_llr):
        xs.append(b.score_lo)
        ys.append(llr)
        if b.score_hi > b.score_lo:
            xs.append(b.score_hi)
            ys.append(llr)
    return PavCalibrator(xs, ys, float(llr_max))
