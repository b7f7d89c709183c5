"""Independent reference computations used by the tests.

None of these call into the code path they check.
"""

import itertools
import math

import numpy as np
from scipy import integrate, stats


def central_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2.0 * h)


# closed forms written directly in q, as printed
Q_FORMS = {
    (0.5, 0.5): (lambda q: 2 / math.pi * math.sqrt((1 - q) / q), lambda q: 2 / math.pi * math.sqrt(q / (1 - q))),
    (1.0, 1.0): (lambda q: -math.log(q), lambda q: -math.log(1 - q)),
    (2.0, 2.0): (lambda q: 3 * (1 - q) ** 2, lambda q: 3 * q**2),
    (2.0, 1.0): (lambda q: 2 * (1 - q), lambda q: -2 * math.log(1 - q) - 2 * q),
}


def q_cost(shape, q, is_tar):
    """Scoring-rule cost in the probability domain with the 0*inf = 0 convention."""
    f_tar, f_non = Q_FORMS[shape]
    if is_tar:
        return 0.0 if q == 1.0 else f_tar(q) if q > 0 else math.inf
    return 0.0 if q == 0.0 else f_non(q) if q < 1 else math.inf


def dataset_cost(shape, posteriors, is_tar, pi):
    """Prior-weighted expected cost of per-trial posteriors."""
    T = int(np.sum(is_tar))
    N = len(is_tar) - T
    tot_t = math.fsum(q_cost(shape, q, True) for q, t in zip(posteriors, is_tar) if t)
    tot_n = math.fsum(q_cost(shape, q, False) for q, t in zip(posteriors, is_tar) if not t)
    return pi / T * tot_t + (1 - pi) / N * tot_n


def best_monotone_partition_cost(shape, scores, is_tar, pi):
    """Exhaustive minimum over contiguous partitions of the score order.

    Each block takes its weighted mean label, which is the optimal constant for
    any proper scoring rule; only partitions whose block values are
    non-decreasing are admitted.  Cuts inside runs of tied scores are not
    allowed.  Enumerates all 2^(g-1) partitions of the g tie groups.
    """
    order = np.argsort(scores, kind="stable")
    s = np.asarray(scores)[order]
    t = np.asarray(is_tar)[order]
    T = int(t.sum())
    N = len(t) - T
    wt, wn = pi / T, (1 - pi) / N
    cut_positions = [i for i in range(1, len(s)) if s[i] != s[i - 1]]
    best = math.inf
    for mask in itertools.product((False, True), repeat=len(cut_positions)):
        cuts = [0] + [c for c, m in zip(cut_positions, mask) if m] + [len(s)]
        post = np.empty(len(s))
        prev = -1.0
        ok = True
        for a, b in zip(cuts, cuts[1:]):
            kt = int(t[a:b].sum())
            kn = (b - a) - kt
            p = wt * kt / (wt * kt + wn * kn)
            if p < prev:
                ok = False
                break
            prev = p
            post[a:b] = p
        if ok:
            best = min(best, dataset_cost(shape, post, t, pi))
    return best


def gaussian_cllr_bits(mu):
    """Expected Cllr of perfectly calibrated two-Gaussian LLRs, by quadrature.

    Targets ~ N(mu, 2 mu); by symmetry the non-target term is equal.
    """
    sd = math.sqrt(2 * mu)
    f = lambda x: stats.norm.pdf(x, mu, sd) * math.log2(1 + math.exp(-x)) if x > -700 else 0.0
    val, _ = integrate.quad(f, mu - 40 * sd, mu + 40 * sd, points=[0.0, mu], limit=200, epsabs=1e-13)
    return val
