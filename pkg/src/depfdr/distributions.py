"""Alternative p-value laws and the two-component mixture population model.

Under the null a p-value is uniform(0,1); under the alternative it follows a
distribution G with bounded density g.  The mixture with null fraction pi0 has
CDF F(t) = pi0*t + pi1*G(t), and everything the asymptotic theory needs is a
functional of F: the criticality level 1/f(0), the population rejection
thresholds (largest t with t*scale/alpha <= F(t)), and the boundary-law
constant -f'(0)/(2*sqrt(f(0))).

Shape parameters may be given as `fractions.Fraction`; scalar derived
constants are then computed in exact rational arithmetic before the final
rounding to float, so e.g. the criticality level of the default model equals
2/101 bit-exactly.
"""

import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

GRID_POINTS = 4096        # scan resolution for threshold_root's sign search
ROOT_TOL = 1e-12          # bisection width for threshold_root
SLOPE_FD_STEP = 1e-6      # one-sided finite-difference step for f'(0)


def _check_unit(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x


class InverseSquareAlternative:
    """Alternative p-value law with density a*(1+a)^2/(x+a)^2 - a on [0, 1].

    The density falls from 1/a + 2 at the origin to exactly zero at 1; the
    vanishing right endpoint is what keeps the null fraction identifiable in
    the two-component mixture.  The CDF has the closed form
    G(x) = ((1+a)^2 - a*(x+a)) * x / (x+a), and the quantile function is the
    admissible root of the quadratic a*x^2 - (1+2a-u)*x + u*a = 0.

    Parameters
    ----------
    a : float or Fraction
        Positive shape parameter; smaller values concentrate the law near 0.
        Rational input enables exact scalar constants (see module docstring).
    """

    def __init__(self, a=Fraction(1, 98)):
        if isinstance(a, numbers.Rational):
            self.a_exact = Fraction(a)
        else:
            self.a_exact = None
        self.a = float(a)
        if not self.a > 0.0:
            raise ValueError("shape parameter a must be positive")

    def __repr__(self):
        a = self.a_exact if self.a_exact is not None else self.a
        return f"InverseSquareAlternative(a={a!r})"

    def density(self, x):
        """g(x); the (1-x) factor makes the right endpoint exactly zero."""
        x = _check_unit(x, "x")
        a = self.a
        out = a * (1.0 - x) * (1.0 + 2.0 * a + x) / (x + a) ** 2
        return out if out.ndim else float(out)

    def cdf(self, x):
        """G(x) = integral of the density; exact 0 and 1 at the endpoints."""
        x = _check_unit(x, "x")
        a = self.a
        out = ((1.0 + a) ** 2 - a * (x + a)) * x / (x + a)
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Smallest x with G(x) >= u.

        Uses the cancellation-free (citardauq) form of the quadratic root,
        2*u*a / (B + sqrt(B^2 - 4*a^2*u)) with B = 1+2a-u, which evaluates to
        exactly 0 and 1 at u = 0 and 1.  A numerically degenerate discriminant
        (possible only in the double root at u = 1) is clamped to zero, which
        coincides with the bisection answer there.
        """
        u = _check_unit(u, "u")
        a = self.a
        B = (1.0 - u) + 2.0 * a        # = 1 + 2a - u, exact at u = 1
        disc = np.maximum(B * B - 4.0 * a * a * u, 0.0)
        out = 2.0 * u * a / (B + np.sqrt(disc))
        return out if out.ndim else float(out)

    @property
    def density_at_zero(self):
        """g(0) = 1/a + 2, exact when the shape parameter is rational."""
        if self.a_exact is not None:
            return float(1 / self.a_exact + 2)
        return 1.0 / self.a + 2.0

    @property
    def density_slope_at_zero(self):
        """g'(0) = -2*(1+a)^2/a^2, exact when the shape parameter is rational."""
        if self.a_exact is not None:
            a = self.a_exact
            return float(-2 * (1 + a) ** 2 / a**2)
        a = self.a
        return -2.0 * (1.0 + a) ** 2 / a**2

    def _critical_alpha_exact(self, pi0_exact):
        """1/f(0) in rational arithmetic, or None if a is not rational."""
        if self.a_exact is None:
            return None
        g0 = 1 / self.a_exact + 2
        return float(1 / (pi0_exact + (1 - pi0_exact) * g0))


class TabulatedAlternative:
    """Alternative law given as a CDF table, linearly interpolated.

    `xs` and `cdf_values` must both increase from (0, 0) to (1, 1); the
    density is the piecewise-constant slope (right-continuous), which keeps
    it bounded as the standing assumptions require.
    """

    def __init__(self, xs, cdf_values):
        xs = np.asarray(xs, dtype=float)
        gs = np.asarray(cdf_values, dtype=float)
        if xs.ndim != 1 or xs.shape != gs.shape or xs.size < 2:
            raise ValueError("xs and cdf_values must be equal-length 1-d arrays")
        if xs[0] != 0.0 or xs[-1] != 1.0 or gs[0] != 0.0 or gs[-1] != 1.0:
            raise ValueError("table must span (0,0) to (1,1)")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(gs) < 0):
            raise ValueError("xs must be strictly increasing, cdf nondecreasing")
        self.xs = xs
        self.gs = gs
        self._slopes = np.diff(gs) / np.diff(xs)
        self.a_exact = None

    def density(self, x):
        x = _check_unit(x, "x")
        idx = np.minimum(np.searchsorted(self.xs, x, side="right") - 1,
                         self._slopes.size - 1)
        idx = np.maximum(idx, 0)
        out = self._slopes[idx]
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = _check_unit(x, "x")
        out = np.interp(x, self.xs, self.gs)
        return out if out.ndim else float(out)

    def quantile(self, u):
        """inf{x : G(x) >= u}; flat table segments resolve to their left end."""
        u = _check_unit(u, "u")
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(u)
        j = np.searchsorted(self.gs, u, side="left")
        j = np.clip(j, 1, self.gs.size - 1)
        g0, g1 = self.gs[j - 1], self.gs[j]
        x0, x1 = self.xs[j - 1], self.xs[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(g1 > g0, (u - g0) / np.where(g1 > g0, g1 - g0, 1.0), 1.0)
        out = np.where(u <= g0, x0, x0 + frac * (x1 - x0))
        out = np.where(u <= 0.0, 0.0, out)
        return float(out[0]) if scalar else out

    @property
    def density_at_zero(self):
        return float(self._slopes[0])

    @property
    def density_slope_at_zero(self):
        # Tables carry no smooth derivative; callers fall back to finite
        # differences of the mixture density.
        return None


def alt_density(x, a):
    """Density of the inverse-square alternative family at x."""
    return InverseSquareAlternative(a).density(x)


def alt_cdf(x, a):
    """CDF of the inverse-square alternative family at x."""
    return InverseSquareAlternative(a).cdf(x)


def alt_quantile(u, a):
    """Quantile (generalized inverse CDF) of the inverse-square family."""
    return InverseSquareAlternative(a).quantile(u)


@dataclass(frozen=True)
class PopulationModel:
    """Two-component mixture model for n simultaneous tests.

    A fraction pi0 of hypotheses are true nulls with uniform p-values; the
    rest follow `alternative`.  `alpha` is the control level of the step-up
    procedure.  Instances are immutable and safe to share across workers;
    the cheap derived constants are computed once at construction.

    Attributes (derived)
    --------------------
    critical_alpha : float
        1/f(0).  Below this control level the rejection count stays bounded
        in probability; above it, rejections grow linearly with n.
    bh_limit : float
        Population limit of the empirical BH threshold:
        sup{t in [0,1] : t/alpha <= F(t)}.
    plugin_limit : float
        Same supremum with slope pi0/alpha (the plug-in procedure's limit).
    """

    pi0: float
    alternative: object
    alpha: float
    pi0_exact: Fraction | None = field(init=False, repr=False, default=None)
    critical_alpha: float = field(init=False, default=0.0)
    bh_limit: float = field(init=False, default=0.0)
    plugin_limit: float = field(init=False, default=0.0)

    def __post_init__(self):
        pi0 = self.pi0
        if isinstance(pi0, numbers.Rational):
            object.__setattr__(self, "pi0_exact", Fraction(pi0))
        object.__setattr__(self, "pi0", float(pi0))
        if not 0.0 <= self.pi0 <= 1.0:
            raise ValueError("pi0 must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        object.__setattr__(self, "critical_alpha", self._critical_alpha())
        object.__setattr__(self, "bh_limit", self.threshold_root(1.0))
        # scale 0 makes the defining bound vacuous, so the supremum is 1
        object.__setattr__(self, "plugin_limit",
                           1.0 if self.pi0 == 0.0 else self.threshold_root(self.pi0))

    @property
    def pi1(self):
        return 1.0 - self.pi0

    def cdf(self, t):
        """Mixture CDF F(t) = pi0*t + pi1*G(t)."""
        t = _check_unit(t, "t")
        out = self.pi0 * t + (1.0 - self.pi0) * self.alternative.cdf(t)
        return out if np.ndim(out) else float(out)

    def density(self, t):
        """Mixture density f(t) = pi0 + pi1*g(t)."""
        t = _check_unit(t, "t")
        out = self.pi0 + (1.0 - self.pi0) * self.alternative.density(t)
        return out if np.ndim(out) else float(out)

    def null_mass(self, t):
        """Mean of the null sub-CDF: t*pi0 (expectation of Lambda_n(t))."""
        t = _check_unit(t, "t")
        out = np.asarray(t) * self.pi0
        return out if out.ndim else float(out)

    def alt_mass(self, t):
        """Mean of the alternative sub-CDF: G(t)*pi1 (expectation of Delta_n(t))."""
        t = _check_unit(t, "t")
        out = np.asarray(self.alternative.cdf(t)) * (1.0 - self.pi0)
        return out if out.ndim else float(out)

    def _critical_alpha(self):
        if self.pi0 == 1.0:
            return 1.0
        if self.pi0_exact is not None and hasattr(self.alternative, "_critical_alpha_exact"):
            exact = self.alternative._critical_alpha_exact(self.pi0_exact)
            if exact is not None:
                return exact
        return 1.0 / (self.pi0 + (1.0 - self.pi0) * self.alternative.density_at_zero)

    def threshold_root(self, scale=1.0):
        """Largest t in [0,1] with t*scale/alpha <= F(t); 0 if none positive.

        scale=1 gives the BH population threshold, scale=pi0 the plug-in one.
        For the inverse-square family with pi0 = 1/2 the root has the closed
        form (1+a)^2/(2*scale/alpha - 1 + a) - a; otherwise the last sign
        change of F(t) - t*scale/alpha is located on a uniform grid and
        refined by bisection to width ROOT_TOL.
        """
        if not 0.0 < scale <= 1.0:
            raise ValueError("scale must lie in (0, 1]")
        if self.pi0 == 0.5 and isinstance(self.alternative, InverseSquareAlternative):
            a = self.alternative.a
            denom = 2.0 * scale / self.alpha - 1.0 + a
            if denom <= 0.0:
                # slope scale/alpha < 1, so t = 1 already satisfies the bound
                return 1.0
            root = (1.0 + a) ** 2 / denom - a
            return min(max(root, 0.0), 1.0)
        return self._root_by_scan(scale)

    def _root_by_scan(self, scale):
        slope = scale / self.alpha
        grid = np.linspace(0.0, 1.0, GRID_POINTS)
        ok = self.cdf(grid) - slope * grid >= 0.0
        last = int(np.nonzero(ok)[0][-1])          # index 0 is always true
        if last == GRID_POINTS - 1:
            return 1.0
        lo, hi = grid[last], grid[last + 1]
        while hi - lo > ROOT_TOL:
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) - slope * mid >= 0.0:
                lo = mid
            else:
                hi = mid
        return lo

    def boundary_constant(self):
        """c0 = -f'(0) / (2*sqrt(f(0))), the cube-root boundary-law constant.

        Raises ValueError when f'(0) >= 0 (e.g. under the pure null), where
        the boundary law does not apply.
        """
        slope = None
        if self.pi0_exact is not None and getattr(self.alternative, "a_exact", None) is not None:
            a = self.alternative.a_exact
            slope = float((1 - self.pi0_exact) * (-2 * (1 + a) ** 2 / a**2))
        elif getattr(self.alternative, "density_slope_at_zero", None) is not None:
            slope = (1.0 - self.pi0) * self.alternative.density_slope_at_zero
        if slope is None:
            h = SLOPE_FD_STEP
            slope = (self.density(h) - self.density(0.0)) / h
        if slope >= 0.0:
            raise ValueError("mixture density must strictly decrease at 0 "
                             f"(got f'(0) = {slope})")
        return -slope / (2.0 * np.sqrt(self.density(0.0)))


def reference_model(alpha=0.1, pi0=Fraction(1, 2), a=Fraction(1, 98)):
    """The default simulation model: pi0 = 1/2, inverse-square alternative
    with a = 1/98 (so g(0) = 100, criticality level exactly 2/101)."""
    return PopulationModel(pi0=pi0, alternative=InverseSquareAlternative(a), alpha=alpha)
