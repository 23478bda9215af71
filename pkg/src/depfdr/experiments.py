"""Monte Carlo experiments verifying the large-sample theory at desk scale.

Each experiment fans out independent replicates, every replicate drawing from
its own seed stream derived from (master seed, replicate index).  Aggregation
is order-independent, so `jobs > 1` changes wall time only: the CSV outputs
are byte-identical for any worker count.

Per-replicate timing is kept in memory for diagnostics but never serialized,
precisely to preserve that byte identity.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import processes
from .fields import FieldSpec, IsingParams, check_subcritical, clt_diagnostic, normal_qq_corr, realize
from .procedures import ProcedureConfig, bh_procedure, pi0_estimate, plugin_procedure
from .seeding import stream_seed


class PreconditionError(ValueError):
    """An experiment's standing hypothesis fails for the given parameters."""


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) and math.isnan(v):
        return "NA"
    return repr(float(v))


def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _map_replicates(worker, tasks, jobs):
    if jobs <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


@dataclass(frozen=True)
class ReplicateSummary:
    """Per-replicate record shared by the experiments' CSV outputs."""

    replicate: int
    stream: int
    delta1: float | None
    delta2: float | None
    nu_bh: float
    r: int
    fdp: float
    fnp: float
    pi0_hat: float
    seconds: float

    CSV_COLUMNS = ("replicate", "stream", "delta1", "delta2", "nu_bh", "r",
                   "fdp", "fnp", "pi0_hat")

    def csv_row(self):
        # timing deliberately excluded: outputs must be byte-reproducible
        return (self.replicate, self.stream, self.delta1, self.delta2,
                self.nu_bh, self.r, self.fdp, self.fnp, self.pi0_hat)


def _field_spec(beta, side, site_updates, pi1):
    """Ising spec for beta != 0; beta = 0 is an independent field, so the
    sampler is skipped in favor of the exact i.i.d. generator."""
    if beta == 0.0:
        return FieldSpec(kind="iid", dims=(side, side), pi1=pi1)
    return FieldSpec(kind="ising", dims=(side, side),
                     ising=IsingParams(beta=beta, side=side,
                                       site_updates=site_updates))


def _one_replicate(args):
    """Field -> p-values -> step-up run -> one ReplicateSummary."""
    (replicate, master, spec, model) = args
    t0 = time.perf_counter()
    stream = stream_seed(master, replicate)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    config = ProcedureConfig(alpha=model.alpha)
    res = bh_procedure(sample, config)
    nu0 = model.bh_limit
    if nu0 > 0.0:
        delta1 = res.fdp - model.alpha * model.pi0
        lam = processes.null_mass(sample, nu0)
        delta2 = (model.alpha / nu0) * (lam - nu0 * model.pi0)
    else:
        delta1 = delta2 = None
    pi0_hat = pi0_estimate(sample, config.bandwidth(sample.n))
    return ReplicateSummary(replicate=replicate, stream=stream,
                            delta1=delta1, delta2=delta2, nu_bh=res.nu,
                            r=res.r, fdp=res.fdp, fnp=res.fnp,
                            pi0_hat=pi0_hat,
                            seconds=time.perf_counter() - t0)


@dataclass(frozen=True)
class Table1Row:
    beta: float
    reps: int
    mean_delta1_sq: float
    se_delta1_sq: float
    mean_diff_sq: float
    se_diff_sq: float


@dataclass(frozen=True)
class Table1Result:
    rows: list
    replicates: dict      # beta -> list[ReplicateSummary]
    alpha: float
    side: int
    site_updates: int

    def summary_csv(self):
        header = ("beta", "reps", "mean_delta1_sq", "se_delta1_sq",
                  "mean_diff_sq", "se_diff_sq")
        return _csv(header, [(r.beta, r.reps, r.mean_delta1_sq, r.se_delta1_sq,
                              r.mean_diff_sq, r.se_diff_sq) for r in self.rows])

    def replicates_csv(self):
        header = ("beta",) + ReplicateSummary.CSV_COLUMNS
        rows = []
        for beta in sorted(self.replicates):
            for rep in self.replicates[beta]:
                rows.append((beta,) + rep.csv_row())
        return _csv(header, rows)


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else float("nan")
    return float(np.mean(values)), se


def table1_experiment(betas, reps, side, site_updates, model, seed, jobs=1):
    """Concentration of the realized FDP around alpha*pi0 across couplings.

    For each coupling, generates `reps` fields and p-value samples and
    records delta1 = FDP - alpha*pi0 together with its first-order proxy
    delta2 = (alpha/nu0) * [null_mass(nu0) - nu0*pi0]; reports the estimated
    second moments of delta1 and of the approximation error delta1 - delta2.
    """
    if reps < 2:
        raise PreconditionError("need at least 2 replicates")
    if model.alpha <= model.critical_alpha:
        raise PreconditionError(
            f"alpha = {model.alpha} must exceed the criticality level "
            f"{model.critical_alpha}; otherwise the population threshold is 0")
    for beta in betas:
        if not check_subcritical(beta):
            raise PreconditionError(f"beta = {beta} is not below the critical coupling")
        if beta != 0.0 and model.pi0 != 0.5:
            raise PreconditionError("spin-flip symmetry fixes pi0 = 1/2 for "
                                    "Ising fields; use a model with pi0 = 0.5")
    rows, replicates = [], {}
    for bi, beta in enumerate(betas):
        spec = _field_spec(beta, side, site_updates, model.pi1)
        tasks = [(bi * reps + r, seed, spec, model) for r in range(reps)]
        summaries = _map_replicates(_one_replicate, tasks, jobs)
        d1 = np.array([s.delta1 for s in summaries])
        d2 = np.array([s.delta2 for s in summaries])
        m1, se1 = _mean_se(d1**2)
        m2, se2 = _mean_se((d1 - d2) ** 2)
        rows.append(Table1Row(beta=beta, reps=reps, mean_delta1_sq=m1,
                              se_delta1_sq=se1, mean_diff_sq=m2, se_diff_sq=se2))
        replicates[beta] = summaries
    return Table1Result(rows=rows, replicates=replicates, alpha=model.alpha,
                        side=side, site_updates=site_updates)


def _criticality_replicate(args):
    (replicate, master, n, model) = args
    stream = stream_seed(master, replicate)
    spec = FieldSpec(kind="iid", dims=(n,), pi1=model.pi1)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    res = bh_procedure(sample, ProcedureConfig(alpha=model.alpha))
    return replicate, stream, res.r


@dataclass(frozen=True)
class CriticalityCell:
    alpha: float
    n: int
    reps: int
    median_r: float
    q95_r: float
    mean_r_over_n: float
    se_r_over_n: float
    max_r_over_n: float


@dataclass(frozen=True)
class CriticalityResult:
    cells: list
    replicates: dict      # (alpha, n) -> list[(replicate, stream, r)]

    def summary_csv(self):
        header = ("alpha", "n", "reps", "median_R", "q95_R",
                  "mean_R_over_n", "se_R_over_n", "max_R_over_n")
        return _csv(header, [(c.alpha, c.n, c.reps, c.median_r, c.q95_r,
                              c.mean_r_over_n, c.se_r_over_n,
                              c.max_r_over_n) for c in self.cells])

    def replicates_csv(self):
        header = ("alpha", "n", "replicate", "stream", "r")
        rows = []
        for (alpha, n) in sorted(self.replicates):
            for rep, stream, r in self.replicates[(alpha, n)]:
                rows.append((alpha, n, rep, stream, r))
        return _csv(header, rows)


def criticality_experiment(alphas, ns, reps, model_factory, seed, jobs=1):
    """Distribution of the rejection count across control levels and sizes.

    `model_factory(alpha)` builds the population model at each level, so the
    level grid can straddle the criticality threshold of a single family.
    """
    cells, replicates = [], {}
    task_base = 0
    for alpha in alphas:
        model = model_factory(alpha)
        for n in ns:
            tasks = [(task_base + r, seed, n, model) for r in range(reps)]
            task_base += reps
            out = _map_replicates(_criticality_replicate, tasks, jobs)
            rs = np.array([r for (_, _, r) in out], dtype=float)
            mean_rate, se_rate = _mean_se(rs / n)
            cells.append(CriticalityCell(
                alpha=alpha, n=n, reps=reps,
                median_r=float(np.median(rs)),
                q95_r=float(np.percentile(rs, 95)),
                mean_r_over_n=mean_rate,
                se_r_over_n=se_rate,
                max_r_over_n=float(np.max(rs / n))))
            replicates[(alpha, n)] = out
    return CriticalityResult(cells=cells, replicates=replicates)


def _boundary_replicate(args):
    (replicate, master, n, model) = args
    stream = stream_seed(master, replicate)
    spec = FieldSpec(kind="iid", dims=(n,), pi1=model.pi1)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    res = bh_procedure(sample, ProcedureConfig(alpha=model.alpha))
    return replicate, stream, res.r, n ** (1.0 / 3.0) * res.nu


def boundary_limit_cdf(z, c0):
    """Limit CDF of the rescaled threshold: Phi(c0 * z^{3/2}) for z >= 0.

    Right-continuous, with an atom of mass 1/2 at zero; 0 for z < 0.
    """
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 0.0, norm.cdf(c0 * np.maximum(z, 0.0) ** 1.5), 0.0)
    return out if out.ndim else float(out)


def simulate_boundary_limit(c0, reps, seed):
    """Direct draws from the limit law [max(N/c0, 0)]^{2/3}."""
    rng = np.random.default_rng(seed)
    return np.maximum(rng.standard_normal(reps) / c0, 0.0) ** (2.0 / 3.0)


def ks_to_boundary_limit(z_values, c0):
    """Exact sup-distance between the sample CDF and the limit CDF.

    Handles the atom at zero: the limit's left limit at 0 is 0, and tied
    sample values are collapsed so only true CDF values enter the supremum.
    """
    z = np.sort(np.asarray(z_values, dtype=float))
    m = z.size
    uniq, counts = np.unique(z, return_counts=True)
    cum = np.cumsum(counts) / m
    before = cum - counts / m
    right = boundary_limit_cdf(uniq, c0)
    left = np.where(uniq > 0.0, right, 0.0)
    return float(max(np.max(np.abs(cum - right)), np.max(np.abs(before - left))))


@dataclass(frozen=True)
class BoundaryResult:
    n: int
    reps: int
    alpha: float
    c0: float
    z_values: np.ndarray
    ks: float
    frac_zero: float
    se_frac_zero: float
    replicates: list

    def summary_csv(self):
        header = ("n", "reps", "alpha", "c0", "ks", "frac_zero",
                  "se_frac_zero")
        return _csv(header, [(self.n, self.reps, self.alpha, self.c0,
                              self.ks, self.frac_zero, self.se_frac_zero)])

    def replicates_csv(self):
        header = ("replicate", "stream", "r", "z")
        return _csv(header, self.replicates)


def boundary_experiment(n, reps, model, seed, jobs=1):
    """Law of n^{1/3} * (empirical threshold) at the critical control level.

    The model's alpha is replaced by its criticality level; requires a
    strictly decreasing mixture density at 0 (c0 > 0).
    """
    from .distributions import PopulationModel
    alpha_star = model.critical_alpha
    if not 0.0 < alpha_star < 1.0:
        raise PreconditionError("criticality level must be interior to (0, 1)")
    pi0 = model.pi0_exact if model.pi0_exact is not None else model.pi0
    crit_model = PopulationModel(pi0=pi0, alternative=model.alternative,
                                 alpha=alpha_star)
    c0 = crit_model.boundary_constant()
    tasks = [(r, seed, n, crit_model) for r in range(reps)]
    out = _map_replicates(_boundary_replicate, tasks, jobs)
    z = np.array([zz for (_, _, _, zz) in out])
    p0 = float(np.mean(z == 0.0))
    return BoundaryResult(n=n, reps=reps, alpha=alpha_star, c0=c0, z_values=z,
                          ks=ks_to_boundary_limit(z, c0),
                          frac_zero=p0,
                          se_frac_zero=math.sqrt(p0 * (1.0 - p0) / reps),
                          replicates=out)


def _bahadur_replicate(args):
    (replicate, master, n, model, denom) = args
    stream = stream_seed(master, replicate)
    spec = FieldSpec(kind="iid", dims=(n,), pi1=model.pi1)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    res = bh_procedure(sample, ProcedureConfig(alpha=model.alpha))
    nu0 = model.bh_limit
    first = res.nu - nu0
    linear = (processes.ecdf(sample, nu0) - nu0 / model.alpha) / denom
    return replicate, stream, first, first - linear


@dataclass(frozen=True)
class BahadurResult:
    ns: list
    reps: int
    rms_first: list
    rms_remainder: list
    mean_remainder: list
    se_remainder: list
    slope_first: float
    slope_remainder: float
    replicates: dict

    def summary_csv(self):
        header = ("n", "reps", "rms_first_order", "rms_remainder",
                  "mean_remainder", "se_remainder")
        rows = [(n, self.reps, f, r, m, s)
                for n, f, r, m, s in zip(self.ns, self.rms_first, self.rms_remainder,
                                         self.mean_remainder, self.se_remainder)]
        return _csv(header, rows)

    def replicates_csv(self):
        header = ("n", "replicate", "stream", "first_order", "remainder")
        rows = []
        for n in self.ns:
            for rep, stream, first, rem in self.replicates[n]:
                rows.append((n, rep, stream, first, rem))
        return _csv(header, rows)


def bahadur_experiment(ns, reps, model, seed, jobs=1):
    """Rate of the linearization remainder of the empirical threshold.

    Verifies that nu_hat - nu0 is approximated by
    [F_n(nu0) - nu0/alpha] / (1/alpha - f(nu0)) with an RMS error decaying
    markedly faster than n^{-1/2}; reports log-log slopes over the size grid.
    """
    nu0 = model.bh_limit
    f_nu0 = model.density(nu0)
    if not (1.0 / model.critical_alpha > 1.0 / model.alpha > f_nu0):
        raise PreconditionError(
            "need 1/critical_alpha > 1/alpha > f(nu0) "
            f"(got {1.0 / model.critical_alpha:.4g}, {1.0 / model.alpha:.4g}, "
            f"{f_nu0:.4g})")
    denom = 1.0 / model.alpha - f_nu0
    rms_first, rms_rem, mean_rem, se_rem, replicates = [], [], [], [], {}
    task_base = 0
    for n in ns:
        tasks = [(task_base + r, seed, n, model, denom) for r in range(reps)]
        task_base += reps
        out = _map_replicates(_bahadur_replicate, tasks, jobs)
        first = np.array([f for (_, _, f, _) in out])
        rem = np.array([rr for (_, _, _, rr) in out])
        rms_first.append(float(np.sqrt(np.mean(first**2))))
        rms_rem.append(float(np.sqrt(np.mean(rem**2))))
        m, s = _mean_se(rem)
        mean_rem.append(m)
        se_rem.append(s)
        replicates[n] = out
    logn = np.log(np.asarray(ns, dtype=float))
    slope_first = float(np.polyfit(logn, np.log(rms_first), 1)[0])
    slope_rem = float(np.polyfit(logn, np.log(rms_rem), 1)[0])
    return BahadurResult(ns=list(ns), reps=reps, rms_first=rms_first,
                         rms_remainder=rms_rem, mean_remainder=mean_rem,
                         se_remainder=se_rem, slope_first=slope_first,
                         slope_remainder=slope_rem, replicates=replicates)


def _clt_replicate(args):
    (replicate, master, spec, model, statistic) = args
    stream = stream_seed(master, replicate)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    res = bh_procedure(sample, ProcedureConfig(alpha=model.alpha))
    rootn = math.sqrt(sample.n)
    if statistic == "threshold":
        return replicate, stream, rootn * (res.nu - model.bh_limit)
    return replicate, stream, rootn * (res.fdp - model.alpha * model.pi0)


@dataclass(frozen=True)
class CltStatResult:
    statistic: str
    reps: int
    values: np.ndarray
    mean: float
    sd: float
    qq_corr: float
    skewness: float
    excess_kurtosis: float
    replicates: list

    def summary_csv(self):
        header = ("statistic", "reps", "mean", "sd", "qq_corr",
                  "skewness", "excess_kurtosis")
        return _csv(header, [(self.statistic, self.reps, self.mean, self.sd,
                              self.qq_corr, self.skewness, self.excess_kurtosis)])

    def replicates_csv(self):
        header = ("replicate", "stream", "value")
        return _csv(header, self.replicates)


def clt_experiment(statistic, spec, model, reps, seed, jobs=1):
    """Normality shape diagnostics for one of the root-n statistics.

    statistic: 'threshold' for root-n times the threshold error,
    'fdp' for root-n times the centered realized FDP, or 'count' for the
    standardized false-null count of the bare field (no p-values involved).
    The limit variances have no closed form, so only shape is summarized.
    """
    if statistic == "count":
        diag = clt_diagnostic(spec, reps, seed)
        values = diag.sums
        reps_out = [(r, stream_seed(seed, r), float(v)) for r, v in enumerate(values)]
    elif statistic in ("threshold", "fdp"):
        if model.bh_limit <= 0.0:
            raise PreconditionError("population threshold is 0; "
                                    "alpha must exceed the criticality level")
        tasks = [(r, seed, spec, model, statistic) for r in range(reps)]
        out = _map_replicates(_clt_replicate, tasks, jobs)
        values = np.array([v for (_, _, v) in out])
        reps_out = out
    else:
        raise ValueError("statistic must be 'threshold', 'fdp' or 'count'")
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    if sd == 0.0:
        skew = kurt = 0.0
    else:
        from scipy.stats import kurtosis, skew as skew_fn
        skew = float(skew_fn(values))
        kurt = float(kurtosis(values))
    return CltStatResult(statistic=statistic, reps=len(values), values=values,
                         mean=float(np.mean(values)), sd=sd,
                         qq_corr=normal_qq_corr(values),
                         skewness=skew, excess_kurtosis=kurt,
                         replicates=reps_out)


def _plugin_replicate(args):
    (replicate, master, n, model) = args
    stream = stream_seed(master, replicate)
    spec = FieldSpec(kind="iid", dims=(n,), pi1=model.pi1)
    field = realize(spec, stream_seed(stream, 0))
    sample = processes.draw_pvalues(field, model.alternative, stream_seed(stream, 1))
    config = ProcedureConfig(alpha=model.alpha)
    bh = bh_procedure(sample, config)
    pi = plugin_procedure(sample, config)
    gamma_pi = processes.fdp_process(sample, pi.nu)
    residual = gamma_pi - model.alpha - model.alpha * (1.0 - pi.pi0 / model.pi0)
    return (replicate, stream, bh.r, pi.r, bh.fdp, pi.fdp, gamma_pi,
            pi.pi0_raw, pi.pi0, residual)


@dataclass(frozen=True)
class PluginCell:
    n: int
    reps: int
    mean_gamma_plugin: float
    se_gamma_plugin: float
    mean_fdp_bh: float
    mean_fdp_plugin: float
    mean_extra_rejections: float
    frac_plugin_at_least_bh: float
    rms_residual: float

    def row(self):
        return (self.n, self.reps, self.mean_gamma_plugin, self.se_gamma_plugin,
                self.mean_fdp_bh, self.mean_fdp_plugin,
                self.mean_extra_rejections, self.frac_plugin_at_least_bh,
                self.rms_residual)


@dataclass(frozen=True)
class PluginResult:
    cells: list
    replicates: dict

    def summary_csv(self):
        header = ("n", "reps", "mean_gamma_plugin", "se_gamma_plugin",
                  "mean_fdp_bh", "mean_fdp_plugin", "mean_extra_rejections",
                  "frac_plugin_at_least_bh", "rms_residual")
        return _csv(header, [c.row() for c in self.cells])

    def replicates_csv(self):
        header = ("n", "replicate", "stream", "r_bh", "r_plugin", "fdp_bh",
                  "fdp_plugin", "gamma_plugin", "pi0_hat_raw", "pi0_hat",
                  "residual")
        rows = []
        for n in sorted(self.replicates):
            for rec in self.replicates[n]:
                rows.append((n,) + rec)
        return _csv(header, rows)


def plugin_experiment(ns, reps, model, seed, jobs=1):
    """Plug-in versus plain step-up: power gain and FDP recentering at alpha.

    Requires alpha/pi0 above the criticality level so the plug-in's
    population threshold is positive.  Reports, per sample size, the mean
    realized FDP of both procedures, the mean extra rejections, and the RMS
    of the second-order residual gamma(nu_plugin) - alpha - alpha*(1 - pi0_hat/pi0).
    """
    if model.pi0 <= 0.0:
        raise PreconditionError("plug-in comparison needs pi0 > 0")
    if model.alpha / model.pi0 <= model.critical_alpha:
        raise PreconditionError(
            f"alpha/pi0 = {model.alpha / model.pi0:.4g} must exceed the "
            f"criticality level {model.critical_alpha:.4g}")
    cells, replicates = [], {}
    task_base = 0
    for n in ns:
        tasks = [(task_base + r, seed, n, model) for r in range(reps)]
        task_base += reps
        out = _map_replicates(_plugin_replicate, tasks, jobs)
        r_bh = np.array([o[2] for o in out], dtype=float)
        r_pi = np.array([o[3] for o in out], dtype=float)
        fdp_bh = np.array([o[4] for o in out])
        fdp_pi = np.array([o[5] for o in out])
        gam = np.array([o[6] for o in out])
        resid = np.array([o[9] for o in out])
        mg, seg = _mean_se(gam)
        cells.append(PluginCell(
            n=n, reps=reps, mean_gamma_plugin=mg, se_gamma_plugin=seg,
            mean_fdp_bh=float(np.mean(fdp_bh)),
            mean_fdp_plugin=float(np.mean(fdp_pi)),
            mean_extra_rejections=float(np.mean(r_pi - r_bh)),
            frac_plugin_at_least_bh=float(np.mean(r_pi >= r_bh)),
            rms_residual=float(np.sqrt(np.mean(resid**2)))))
        replicates[n] = out
    return PluginResult(cells=cells, replicates=replicates)
