"""Step-up multiple-testing procedures and their error accounting.

Implements the classical step-up procedure at level alpha, the empirical
sup-threshold it induces, the tail estimator of the null fraction, and the
plug-in procedure that tightens the step-up slope by that estimate.  All
functions are pure over immutable samples.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import processes


@dataclass(frozen=True)
class ProcedureConfig:
    """Control level and null-fraction estimation knobs.

    The tail bandwidth is b = bandwidth_scale * n^(-1/3), clipped to
    (0, 1/2].  With pi0_clip the estimate is clipped into [1/n, 1] before
    use; the raw value is still reported.
    """

    alpha: float
    bandwidth_scale: float = 1.0
    pi0_clip: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.bandwidth_scale > 0.0:
            raise ValueError("bandwidth_scale must be positive")

    def bandwidth(self, n):
        return min(self.bandwidth_scale * n ** (-1.0 / 3.0), 0.5)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one procedure run.

    `threshold` is the largest rejected p-value (0 when nothing is rejected)
    and `nu` the empirical sup-threshold; `v`, `fdp`, `fnp` are None when the
    sample has no ground truth (except fdp = 0 when r = 0, which needs none).
    `floor_mismatch` flags the rare tied-input case where the plug-in's
    count-based rejection rule cuts a block of tied p-values, so the mask is
    not closed under p-value equality.
    """

    procedure: str
    alpha: float
    n: int
    r: int
    rejected: np.ndarray
    threshold: float
    nu: float
    pi0_raw: float = 1.0
    pi0: float = 1.0
    v: int | None = None
    fdp: float | None = None
    fnp: float | None = None
    floor_mismatch: bool = False


def step_up_count(x_sorted, alpha, slope=1.0):
    """Largest i in 0..n with x_(i) <= alpha*i/(n*slope) (x_(0) = 0).

    This is the step level attaining sup{t : t*slope/alpha <= F_n(t)}; it
    deliberately excludes the textbook x_(n+1) = 1 sentinel, which belongs
    to the rejection rule only (see bh_procedure).
    """
    n = x_sorted.size
    bounds = alpha * np.arange(1, n + 1) / (n * slope)
    hits = np.nonzero(x_sorted <= bounds)[0]
    return 0 if hits.size == 0 else int(hits[-1]) + 1


def _sup_threshold(r, n, alpha, slope=1.0):
    """sup{t : t*slope/alpha <= F_n(t)} given its step level r.

    The supremum equals alpha*r/(n*slope) in exact arithmetic.  The rounded
    double is nudged by ulps (verified with rational arithmetic) until
    r <= n*t*slope/alpha < r+1 holds exactly for the returned float, so the
    integer sandwich is bit-for-bit checkable downstream.
    """
    if r == 0:
        return 0.0
    t = alpha * r / (n * slope)
    if t >= 1.0:
        # only reachable when r = n and slope <= alpha: t = 1 itself
        # satisfies the defining bound, so the supremum is exactly 1
        return 1.0
    ratio = Fraction(n) * Fraction(t) * Fraction(slope) / Fraction(alpha)
    while ratio < r:
        t = math.nextafter(t, math.inf)
        ratio = Fraction(n) * Fraction(t) * Fraction(slope) / Fraction(alpha)
    while ratio >= r + 1:
        t = math.nextafter(t, -math.inf)
        ratio = Fraction(n) * Fraction(t) * Fraction(slope) / Fraction(alpha)
    return t


def bh_threshold(sample, alpha):
    """Empirical sup-threshold sup{t in [0,1] : t/alpha <= F_n(t)}.

    Satisfies r <= n*t/alpha < r+1 exactly, with r the step-up count.
    """
    r = step_up_count(sample.x_sorted, alpha)
    return _sup_threshold(r, sample.n, alpha)


def _finish(procedure, sample, config, r, rejected, threshold, nu,
            pi0_raw=1.0, pi0=1.0, floor_mismatch=False):
    v = fdp = fnp = None
    if sample.h is not None:
        v, fdp, fnp = classify(rejected, sample.h)
    elif r == 0:
        fdp = 0.0
    return TestResult(procedure=procedure, alpha=config.alpha, n=sample.n,
                      r=r, rejected=rejected, threshold=threshold, nu=nu,
                      pi0_raw=pi0_raw, pi0=pi0, v=v, fdp=fdp, fnp=fnp,
                      floor_mismatch=floor_mismatch)


def bh_procedure(sample, config):
    """Step-up procedure: reject every p-value at or below x_(r).

    r is maximal with x_(r) <= alpha*r/n, so x_(r+1) strictly exceeds the
    run's largest bound and the value-based mask always has exactly r hits,
    ties included.  The textbook scan runs to the sentinel x_(n+1) = 1,
    which fires (rejecting everything) only when alpha*(n+1)/n >= 1, i.e.
    alpha >= n/(n+1); in that corner the reported count caps at n while `nu`
    remains the sentinel-free supremum, so the usual integer sandwich
    r <= n*nu/alpha applies only below that corner.
    """
    n = sample.n
    r_sup = step_up_count(sample.x_sorted, config.alpha)
    r = n if config.alpha * (n + 1) / n >= 1.0 else r_sup
    threshold = float(sample.x_sorted[r - 1]) if r > 0 else 0.0
    rejected = sample.x <= threshold if r > 0 else np.zeros(n, dtype=bool)
    nu = _sup_threshold(r_sup, n, config.alpha)
    return _finish("bh", sample, config, r, rejected, threshold, nu)


def pi0_estimate(sample, bandwidth):
    """Tail estimate of the null fraction: [1 - F_n(1 - b)] / b, unclipped.

    Uniform nulls put mass b above 1-b while the alternative density
    vanishes there, so the scaled tail count estimates pi0.
    """
    if not 0.0 < bandwidth < 1.0:
        raise ValueError("bandwidth must lie in (0, 1)")
    return float((1.0 - processes.ecdf(sample, 1.0 - bandwidth)) / bandwidth)


def plugin_procedure(sample, config):
    """Step-up with slope tightened by the estimated null fraction.

    Computes pi0_hat from the tail, the sup-threshold for slope pi0_hat,
    and rejects the smallest floor(n*nu*pi0_hat/alpha) order statistics
    (the count-based rule; by the sup construction the floor equals the
    step-up count exactly).
    """
    if sample.n < 2:
        raise ValueError("plug-in needs at least 2 p-values")
    b = config.bandwidth(sample.n)
    pi0_raw = pi0_estimate(sample, b)
    if config.pi0_clip:
        pi0 = min(max(pi0_raw, 1.0 / sample.n), 1.0)
    else:
        pi0 = pi0_raw
        if pi0 <= 0.0:
            raise ValueError("unclipped pi0 estimate is nonpositive; "
                             "enable pi0_clip")
    r = step_up_count(sample.x_sorted, config.alpha, slope=pi0)
    nu = _sup_threshold(r, sample.n, config.alpha, slope=pi0)
    r_floor = int(Fraction(sample.n) * Fraction(nu) * Fraction(pi0)
                  / Fraction(config.alpha))
    threshold = float(sample.x_sorted[r_floor - 1]) if r_floor > 0 else 0.0
    rejected = np.zeros(sample.n, dtype=bool)
    rejected[sample.order[:r_floor]] = True
    mismatch = bool(np.sum(sample.x <= threshold) != r_floor) if r_floor > 0 else False
    return _finish("plugin", sample, config, r_floor, rejected, threshold, nu,
                   pi0_raw=pi0_raw, pi0=pi0, floor_mismatch=mismatch)


def classify(rejected, h):
    """Error counts of a rejection mask against the truth: (V, FDP, FNP)."""
    rejected = np.asarray(rejected, dtype=bool)
    h = np.asarray(h)
    if rejected.shape != h.shape:
        raise ValueError("rejected mask and truth must have equal length")
    n = h.size
    r = int(rejected.sum())
    v = int(np.sum(rejected & (h == 0)))
    fdp = v / max(r, 1)
    fnp = int(np.sum(~rejected & (h == 1))) / max(n - r, 1)
    return v, fdp, fnp


RESULT_COLUMNS = ("run_id", "procedure", "n", "alpha", "R", "V", "FDP",
                  "FNP", "nu", "pi0_hat_raw", "pi0_hat", "threshold")


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def results_to_csv(results, run_ids=None):
    """One row per run, full round-trip float precision, NA for unknowns."""
    if run_ids is None:
        run_ids = range(len(results))
    lines = [",".join(RESULT_COLUMNS)]
    for rid, res in zip(run_ids, results):
        row = (rid, res.procedure, res.n, res.alpha, res.r, res.v, res.fdp,
               res.fnp, res.nu, res.pi0_raw, res.pi0, res.threshold)
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v
                              for v in row))
    return "\n".join(lines) + "\n"
