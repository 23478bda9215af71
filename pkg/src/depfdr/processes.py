"""Empirical processes of a p-value sample, evaluated as exact step functions.

All evaluations reduce to integer counts over the sorted sample (one
searchsorted plus prefix sums of the truth marks), divided exactly once at
the end.  The additivity ecdf = null_mass + alt_mass therefore holds exactly
at the count level; adding the two returned floats may round by one ulp, so
tests of the identity should compare counts (see `counts`).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np


@dataclass(frozen=True)
class PValueSample:
    """Paired truth/p-value vectors with a cached sort permutation.

    `h` may be None for externally supplied p-values without ground truth;
    truth-dependent quantities are then unavailable.
    """

    x: np.ndarray
    h: np.ndarray | None = None
    dims: tuple | None = None
    order: np.ndarray = dc_field(init=False, repr=False, default=None)
    x_sorted: np.ndarray = dc_field(init=False, repr=False, default=None)
    null_prefix: np.ndarray | None = dc_field(init=False, repr=False, default=None)

    def __post_init__(self):
        x = np.array(self.x, dtype=float)           # private copy: immutable
        if x.ndim != 1 or x.size == 0:
            raise ValueError("x must be a nonempty 1-d array")
        if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
            raise ValueError("p-values must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        if self.h is not None:
            h = np.array(self.h, dtype=np.uint8)
            if h.shape != x.shape:
                raise ValueError("h and x must have equal length")
            if h.size and h.max() > 1:
                raise ValueError("h must be 0/1")
            h.setflags(write=False)
            object.__setattr__(self, "h", h)
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "x_sorted", x[order])
        if self.h is not None:
            nulls = (self.h[order] == 0).astype(np.int64)
            prefix = np.concatenate([[0], np.cumsum(nulls)])
            object.__setattr__(self, "null_prefix", prefix)
        for arr in (self.x, self.order, self.x_sorted):
            arr.setflags(write=False)

    @property
    def n(self):
        return self.x.size

    @property
    def num_false(self):
        if self.h is None:
            raise ValueError("sample carries no ground truth")
        return int(self.h.sum())


def draw_pvalues(field, alternative, seed):
    """Draw p-values for a truth field under the conditional independence model.

    Given the field, sites are independent: true nulls get their uniform
    draw U_i unchanged, false nulls get the alternative quantile of U_i.
    """
    rng = np.random.default_rng(seed)
    h = field.values
    u = rng.random(h.size)
    x = u.copy()
    idx = h == 1
    if idx.any():
        x[idx] = alternative.quantile(u[idx])
    return PValueSample(x=x, h=h, dims=field.dims)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t must lie in [0, 1]")
    return t


def counts(sample, t):
    """(total, null, alternative) counts of p-values <= t, as integers."""
    t = _check_t(t)
    k = np.searchsorted(sample.x_sorted, t, side="right")
    if sample.null_prefix is None:
        return k, None, None
    nulls = sample.null_prefix[k]
    return k, nulls, k - nulls


def ecdf(sample, t):
    """Empirical CDF of the p-values at t."""
    k, _, _ = counts(sample, t)
    out = k / sample.n
    return out if np.ndim(out) else float(out)


def null_mass(sample, t):
    """Fraction of the sample that is a true null with p-value <= t.

    This is the marked empirical process whose mean is t*pi0; at the
    rejection threshold it counts the false discoveries.
    """
    _, nulls, _ = counts(sample, t)
    if nulls is None:
        raise ValueError("sample carries no ground truth")
    out = nulls / sample.n
    return out if np.ndim(out) else float(out)


def alt_mass(sample, t):
    """Fraction of the sample that is a false null with p-value <= t."""
    _, _, alts = counts(sample, t)
    if alts is None:
        raise ValueError("sample carries no ground truth")
    out = alts / sample.n
    return out if np.ndim(out) else float(out)


def fdp_process(sample, t):
    """False discovery proportion if everything with p <= t were rejected.

    Ratio of null hits to total hits; the guarded denominator makes the
    value 0 when nothing is rejected.
    """
    k, nulls, _ = counts(sample, t)
    if nulls is None:
        raise ValueError("sample carries no ground truth")
    k = np.asarray(k)
    out = np.where(k > 0, nulls / np.maximum(k, 1), 0.0)
    return out if out.ndim else float(out)


def fnp_process(sample, t):
    """False nondiscovery proportion if everything with p <= t were rejected.

    Fraction of the accepted hypotheses (p > t) that are actually false;
    the 1/n guard term fires only once every p-value is at or below t.
    """
    k, _, alts = counts(sample, t)
    if alts is None:
        raise ValueError("sample carries no ground truth")
    k = np.asarray(k)
    missed = sample.num_false - alts
    denom = (sample.n - k) + (k == sample.n)
    out = missed / denom
    return out if out.ndim else float(out)


def population_fnp(t, model):
    """Population false nondiscovery proportion pi1*(1 - G(t))/(1 - F(t)).

    Returns 0 where F(t) = 1 (both tails vanish together).
    """
    t = _check_t(t)
    pi1 = 1.0 - model.pi0
    surv_alt = 1.0 - np.asarray(model.alternative.cdf(t))
    surv_mix = 1.0 - np.asarray(model.cdf(t))
    out = np.where(surv_mix > 0.0, pi1 * surv_alt / np.where(surv_mix > 0.0, surv_mix, 1.0), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ProcessEvaluation:
    """All five sample processes at the same evaluation points."""

    t: np.ndarray
    ecdf: np.ndarray
    null_mass: np.ndarray
    alt_mass: np.ndarray
    fdp: np.ndarray
    fnp: np.ndarray


def evaluate_processes(sample, t):
    return ProcessEvaluation(
        t=np.asarray(t, dtype=float),
        ecdf=ecdf(sample, t),
        null_mass=null_mass(sample, t),
        alt_mass=alt_mass(sample, t),
        fdp=fdp_process(sample, t),
        fnp=fnp_process(sample, t),
    )


def sample_to_csv(sample):
    """Serialize with header `h,x` (or `x` when truth is missing)."""
    if sample.h is None:
        lines = ["x"] + [repr(float(v)) for v in sample.x]
    else:
        lines = ["h,x"] + [f"{int(hh)},{float(xx)!r}"
                           for hh, xx in zip(sample.h, sample.x)]
    return "\n".join(lines) + "\n"


def sample_from_csv(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty p-value CSV")
    header = [c.strip().lower() for c in lines[0].split(",")]
    if header == ["h", "x"]:
        h, x = [], []
        for ln in lines[1:]:
            hs, xs = ln.split(",")
            h.append(int(hs))
            x.append(float(xs))
        return PValueSample(x=np.array(x), h=np.array(h, dtype=np.uint8))
    if header == ["x"]:
        return PValueSample(x=np.array([float(ln) for ln in lines[1:]]))
    raise ValueError("p-value CSV header must be 'h,x' or 'x'")
