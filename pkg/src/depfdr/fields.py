"""Stationary 0/1 hypothesis-field generators and their diagnostics.

Three generators produce the hidden truth field: independent Bernoulli sites,
truncation indicators of a finite-window linear process, and a two-dimensional
Ising model sampled by single-site Gibbs updates at uniformly random sites of
a periodic torus.  All are deterministic functions of (parameters, seed), and
fields are immutable once built, so replicate-level parallelism just hands
each worker its own seed.
"""

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import stats

from .seeding import stream_seed

_ISING_KERNEL = None


@dataclass(frozen=True)
class HypothesisField:
    """A 0/1 truth field over a d-dimensional cube.

    `values` is flat in lexicographic site order (first axis slowest); the
    sum of values counts the false null hypotheses.
    """

    dims: tuple
    values: np.ndarray
    kind: str = "unknown"
    params: dict = dc_field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if any(d < 1 for d in dims):
            raise ValueError("all dimensions must be positive")
        values = np.ascontiguousarray(self.values, dtype=np.uint8)
        if values.ndim != 1 or values.size != math.prod(dims):
            raise ValueError("values must be flat with length prod(dims)")
        if values.size and values.max() > 1:
            raise ValueError("field values must be 0 or 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.size

    @property
    def num_false(self):
        """Count of false null hypotheses (sites with value 1)."""
        return int(self.values.sum())

    def grid(self):
        return self.values.reshape(self.dims)


def gen_iid(pi1, dims, seed):
    """Independent Bernoulli(pi1) sites; the classical random effects field."""
    if not 0.0 <= pi1 <= 1.0:
        raise ValueError("pi1 must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = math.prod(int(d) for d in dims)
    values = (rng.random(n) < pi1).astype(np.uint8)
    return HypothesisField(tuple(dims), values, kind="iid",
                           params={"pi1": pi1}, seed=seed)


@dataclass(frozen=True)
class LinearFieldParams:
    """Coefficients and threshold for a linear-process truncation field.

    The latent process is Z_k = sum_i coeffs[i] * eta_{k - (i - origin)} with
    i.i.d. standard normal innovations, and the field is H_k = 1{Z_k <= z}.
    The tap at `origin` is the process's own innovation and must equal 1.
    Exactly one of `z_star` (explicit threshold) or `target_pi1` may be set;
    a target calibrates z via the exact N(0, sum coeffs^2) marginal of Z.
    """

    coeffs: np.ndarray
    origin: int = 0
    z_star: float | None = None
    target_pi1: float | None = None

    def __post_init__(self):
        coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d array")
        if not 0 <= self.origin < coeffs.size:
            raise ValueError("origin must index into coeffs")
        if coeffs[self.origin] != 1.0:
            raise ValueError("the origin coefficient must be 1")
        if (self.z_star is None) == (self.target_pi1 is None):
            raise ValueError("set exactly one of z_star and target_pi1")
        if self.target_pi1 is not None and not 0.0 < self.target_pi1 < 1.0:
            raise ValueError("target_pi1 must lie in (0, 1)")

    def threshold(self):
        if self.z_star is not None:
            return float(self.z_star)
        sigma = math.sqrt(float(np.sum(self.coeffs**2)))
        return float(stats.norm.ppf(self.target_pi1) * sigma)

    def marginal_pi1(self):
        sigma = math.sqrt(float(np.sum(self.coeffs**2)))
        if self.target_pi1 is not None:
            return float(self.target_pi1)
        return float(stats.norm.cdf(self.z_star / sigma))


def geometric_window(rho, half_width):
    """Symmetric window coeffs a_i = rho^|i| for |i| <= half_width."""
    idx = np.arange(-half_width, half_width + 1)
    return np.asarray(rho, dtype=float) ** np.abs(idx)


def gen_linear_indicator(params, n, seed):
    """Truncation-indicator field H_k = 1{Z_k <= z} of a windowed linear process.

    Draws n + len(coeffs) - 1 innovations so every site sees a full window
    (the process extends past the cube), then forms Z by exact finite
    convolution.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    m = params.coeffs.size
    eta = rng.standard_normal(n + m - 1)
    z = np.convolve(eta, params.coeffs, mode="valid")
    values = (z <= params.threshold()).astype(np.uint8)
    return HypothesisField((int(n),), values, kind="linear",
                           params={"coeffs": params.coeffs,
                                   "origin": params.origin,
                                   "z_star": params.threshold()},
                           seed=seed)


def beta_critical():
    """Exact critical coupling of the square-lattice Ising model."""
    return 0.5 * math.log(1.0 + math.sqrt(2.0))


def check_subcritical(beta):
    """True when |beta| is below the critical coupling; warns otherwise."""
    ok = abs(beta) < beta_critical()
    if not ok:
        warnings.warn(f"|beta| = {abs(beta)} is not below the critical "
                      f"coupling {beta_critical():.7f}; the field is "
                      "long-range dependent and the CLT diagnostics do not apply",
                      stacklevel=2)
    return ok


def ising_conditional(spin, neighbor_sum, beta):
    """Conditional probability of one spin given its four neighbors.

    exp(beta*spin*S) / (exp(beta*S) + exp(-beta*S)) with S the neighbor sum.
    """
    if spin not in (-1, 1):
        raise ValueError("spin must be -1 or +1")
    if neighbor_sum not in (-4, -2, 0, 2, 4):
        raise ValueError("neighbor_sum must be one of -4, -2, 0, 2, 4")
    z = beta * float(neighbor_sum)
    p_plus = math.exp(z) / (math.exp(z) + math.exp(-z))
    # the two spin values are exact complements, so they sum to exactly 1
    return p_plus if spin == 1 else 1.0 - p_plus


@dataclass(frozen=True)
class IsingParams:
    """Gibbs-sampler run parameters for a side x side periodic torus.

    `site_updates` counts single-site updates (one sweep = side^2 updates);
    there is no separate burn-in knob, the update total covers it.
    """

    beta: float
    side: int
    site_updates: int = 1_250_000
    init: str = "random"

    def __post_init__(self):
        if self.side < 2:
            raise ValueError("side must be at least 2")
        if self.site_updates < 1:
            raise ValueError("site_updates must be positive")
        if self.init not in ("random", "all-plus", "all-minus"):
            raise ValueError("init must be random, all-plus or all-minus")


def _gibbs_python(spins, sites, uniforms, p_plus, side):
    # Mirror of the compiled kernel; used only when numba is unavailable.
    for m in range(sites.size):
        s = sites[m]
        r = s // side
        c = s - r * side
        total = (spins[side * ((r + 1) % side) + c]
                 + spins[side * ((r - 1) % side) + c]
                 + spins[side * r + (c + 1) % side]
                 + spins[side * r + (c - 1) % side])
        spins[s] = 1 if uniforms[m] < p_plus[total + 4] else -1


def _gibbs_kernel():
    global _ISING_KERNEL
    if _ISING_KERNEL is None:
        try:
            import numba
        except ImportError:
            _ISING_KERNEL = _gibbs_python
        else:
            _ISING_KERNEL = numba.njit(cache=True)(_gibbs_python)
    return _ISING_KERNEL


def gen_ising(params, seed):
    """Sample an Ising field by Gibbs updates at uniformly random sites.

    Each update resamples the spin at one random site from its conditional
    law given the four torus neighbors, then the +-1 configuration is mapped
    to 0/1.  Deterministic given (params, seed): the site sequence, the
    update uniforms and the initial configuration all come from one stream.
    """
    rng = np.random.default_rng(seed)
    side = params.side
    n = side * side
    if params.init == "random":
        spins = np.where(rng.random(n) < 0.5, np.int8(1), np.int8(-1))
    elif params.init == "all-plus":
        spins = np.ones(n, dtype=np.int8)
    else:
        spins = -np.ones(n, dtype=np.int8)
    check_subcritical(params.beta)
    sites = rng.integers(0, n, size=params.site_updates)
    uniforms = rng.random(params.site_updates)
    # Conditional P(spin = +1 | neighbor sum S), tabulated over S = -4..4.
    s_axis = np.arange(-4, 5, dtype=float)
    p_plus = np.exp(params.beta * s_axis) / (np.exp(params.beta * s_axis)
                                             + np.exp(-params.beta * s_axis))
    _gibbs_kernel()(spins, sites, uniforms, p_plus, side)
    values = ((spins + 1) // 2).astype(np.uint8)
    return HypothesisField((side, side), values, kind="ising",
                           params={"beta": params.beta,
                                   "site_updates": params.site_updates,
                                   "init": params.init},
                           seed=seed)


def ising_count_trace(params, seed, every=None):
    """False-null count sampled along the Gibbs chain, plus its lag-1
    autocorrelation.

    The sampler has no convergence criterion; this trace is the diagnostic
    for choosing `site_updates`.  Counts are recorded every `every` updates
    (default: one sweep, side^2).  Returns (counts, lag1_autocorrelation);
    the correlation is NaN for constant traces.
    """
    rng = np.random.default_rng(seed)
    side = params.side
    n = side * side
    if every is None:
        every = n
    if params.init == "random":
        spins = np.where(rng.random(n) < 0.5, np.int8(1), np.int8(-1))
    elif params.init == "all-plus":
        spins = np.ones(n, dtype=np.int8)
    else:
        spins = -np.ones(n, dtype=np.int8)
    check_subcritical(params.beta)
    s_axis = np.arange(-4, 5, dtype=float)
    p_plus = np.exp(params.beta * s_axis) / (np.exp(params.beta * s_axis)
                                             + np.exp(-params.beta * s_axis))
    kernel = _gibbs_kernel()
    counts = []
    done = 0
    while done < params.site_updates:
        block = min(every, params.site_updates - done)
        sites = rng.integers(0, n, size=block)
        uniforms = rng.random(block)
        kernel(spins, sites, uniforms, p_plus, side)
        done += block
        counts.append(int(np.sum(spins == 1)))
    counts = np.asarray(counts)
    if counts.size < 2 or np.std(counts[:-1]) == 0 or np.std(counts[1:]) == 0:
        rho = float("nan")
    else:
        rho = float(np.corrcoef(counts[:-1], counts[1:])[0, 1])
    return counts, rho


@dataclass(frozen=True)
class FieldSpec:
    """Picklable description of a field generator, for replicate workers."""

    kind: str
    dims: tuple
    pi1: float = 0.5
    linear: LinearFieldParams | None = None
    ising: IsingParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.kind not in ("iid", "linear", "ising"):
            raise ValueError("kind must be iid, linear or ising")
        if self.kind == "linear" and self.linear is None:
            raise ValueError("linear spec requires LinearFieldParams")
        if self.kind == "ising":
            if self.ising is None:
                raise ValueError("ising spec requires IsingParams")
            if self.dims != (self.ising.side, self.ising.side):
                raise ValueError("dims must equal (side, side)")

    @property
    def n(self):
        return math.prod(self.dims)

    def marginal_pi1(self):
        """P(H = 1) at a single site under this generator."""
        if self.kind == "iid":
            return self.pi1
        if self.kind == "linear":
            return self.linear.marginal_pi1()
        # spin-flip symmetry below the critical coupling
        return 0.5


def realize(spec, seed):
    """Generate one field from a FieldSpec."""
    if spec.kind == "iid":
        return gen_iid(spec.pi1, spec.dims, seed)
    if spec.kind == "linear":
        return gen_linear_indicator(spec.linear, spec.n, seed)
    return gen_ising(spec.ising, seed)


@dataclass(frozen=True)
class CltDiagnostic:
    """Shape diagnostics for standardized counts (N - n*pi1)/sqrt(n).

    The limit variance has no closed form for dependent fields, so only the
    distributional shape is summarized: sample moments and the correlation of
    the sample quantiles against standard normal ones.
    """

    sums: np.ndarray
    pi1: float
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    qq_corr: float

    @property
    def replicates(self):
        return self.sums.size


def normal_qq_corr(values):
    """Correlation of sorted values with Blom-position normal quantiles."""
    m = values.size
    if m < 3 or np.std(values) == 0.0:
        return float("nan")
    pos = (np.arange(1, m + 1) - 0.375) / (m + 0.25)
    return float(np.corrcoef(np.sort(values), stats.norm.ppf(pos))[0, 1])


def clt_diagnostic(spec, replicates, seed):
    """Standardized false-null counts over independent replicate fields.

    Each replicate r generates a fresh field from stream_seed(seed, r) and
    contributes (N - n*pi1)/sqrt(n) with pi1 taken from the generator.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates for stable diagnostics")
    n = spec.n
    pi1 = spec.marginal_pi1()
    sums = np.empty(replicates)
    for r in range(replicates):
        f = realize(spec, stream_seed(seed, r))
        sums[r] = (f.num_false - n * pi1) / math.sqrt(n)
    if np.std(sums) == 0.0:
        skew = kurt = 0.0
    else:
        skew = float(stats.skew(sums))
        kurt = float(stats.kurtosis(sums))
    return CltDiagnostic(sums=sums, pi1=pi1,
                         mean=float(np.mean(sums)),
                         variance=float(np.var(sums, ddof=1)),
                         skewness=skew, excess_kurtosis=kurt,
                         qq_corr=normal_qq_corr(sums))


def field_to_csv(f):
    """Serialize: header line `dims=<n1>x<n2>...`, then one 0/1 per line."""
    header = "dims=" + "x".join(str(d) for d in f.dims)
    body = "\n".join(str(int(v)) for v in f.values)
    return header + "\n" + body + "\n"


def field_from_csv(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dims="):
        raise ValueError("field CSV must start with a dims=<n1>x<n2> header")
    dims = tuple(int(d) for d in lines[0][len("dims="):].split("x"))
    values = np.array([int(ln) for ln in lines[1:]], dtype=np.uint8)
    return HypothesisField(dims, values, kind="file")
