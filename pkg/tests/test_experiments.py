import math

import numpy as np
import pytest

from depfdr.distributions import InverseSquareAlternative, PopulationModel, reference_model
from depfdr.experiments import (
    PreconditionError,
    bahadur_experiment,
    boundary_experiment,
    boundary_limit_cdf,
    clt_experiment,
    criticality_experiment,
    ks_to_boundary_limit,
    plugin_experiment,
    simulate_boundary_limit,
    table1_experiment,
)
from depfdr.fields import FieldSpec, IsingParams

MODEL = reference_model()


def small_table1(jobs=1, seed=11, reps=30):
    return table1_experiment([0.0, 0.3], reps=reps, side=30,
                             site_updates=100_000, model=MODEL, seed=seed,
                             jobs=jobs)


class TestTable1:
    def test_delta1_equals_fdp_minus_target(self):
        res = small_table1()
        for rep in res.replicates[0.0]:
            assert rep.delta1 == pytest.approx(rep.fdp - 0.05, abs=1e-15)

    def test_mean_delta1_near_zero_for_independent_field(self):
        res = table1_experiment([0.0], reps=200, side=50,
                                site_updates=1, model=MODEL, seed=5, jobs=1)
        d1 = np.array([s.delta1 for s in res.replicates[0.0]])
        se = d1.std(ddof=1) / math.sqrt(d1.size)
        assert abs(d1.mean()) < 3 * se

    def test_errors_below_criticality(self):
        with pytest.raises(PreconditionError):
            table1_experiment([0.0], 10, 20, 1000,
                              reference_model(alpha=0.01), seed=1)

    def test_errors_at_supercritical_coupling(self):
        with pytest.warns(UserWarning), pytest.raises(PreconditionError):
            small_table1_bad()

    def test_csv_shape(self):
        res = small_table1(reps=5)
        summary = res.summary_csv().strip().split("\n")
        assert len(summary) == 3      # header + 2 couplings
        reps_csv = res.replicates_csv().strip().split("\n")
        assert len(reps_csv) == 1 + 2 * 5
        assert reps_csv[0].startswith("beta,replicate,stream,delta1")


def small_table1_bad():
    return table1_experiment([0.5], reps=5, side=10, site_updates=100,
                             model=MODEL, seed=1)


class TestReproducibility:
    def test_byte_identical_reruns(self):
        a = small_table1(seed=42, reps=8)
        b = small_table1(seed=42, reps=8)
        assert a.summary_csv() == b.summary_csv()
        assert a.replicates_csv() == b.replicates_csv()

    def test_jobs_do_not_change_output(self):
        a = small_table1(seed=42, reps=8, jobs=1)
        b = small_table1(seed=42, reps=8, jobs=3)
        assert a.summary_csv() == b.summary_csv()
        assert a.replicates_csv() == b.replicates_csv()

    def test_different_seed_changes_output(self):
        a = small_table1(seed=1, reps=5)
        b = small_table1(seed=2, reps=5)
        assert a.replicates_csv() != b.replicates_csv()


class TestCriticality:
    def test_supercritical_rate(self):
        factory = lambda alpha: reference_model(alpha=alpha)
        res = criticality_experiment([0.1], [50_000], reps=40,
                                     model_factory=factory, seed=3)
        cell = res.cells[0]
        want = MODEL.bh_limit / 0.1
        assert cell.mean_r_over_n == pytest.approx(want, rel=0.02)

    def test_subcritical_boundedness(self):
        factory = lambda alpha: reference_model(alpha=alpha)
        res = criticality_experiment([0.01], [10_000, 100_000], reps=150,
                                     model_factory=factory, seed=4)
        small, large = res.cells
        assert large.q95_r < 2 * small.q95_r
        assert large.max_r_over_n < 1e-3


class TestBoundary:
    def test_limit_cdf_atom(self):
        assert boundary_limit_cdf(0.0, 689.6) == 0.5
        assert boundary_limit_cdf(-0.1, 689.6) == 0.0

    def test_limit_median_of_positive_part(self):
        # quantile transform: the 0.75 point of the full law is the median
        # of the positive part
        from scipy.stats import norm
        c0 = MODEL.boundary_constant()
        z75 = (norm.ppf(0.75) / c0) ** (2 / 3)
        assert boundary_limit_cdf(z75, c0) == pytest.approx(0.75, abs=1e-12)

    def test_ks_of_simulated_limit_is_small(self):
        # the distance scale the tolerance was calibrated against: direct
        # draws from the limit law itself
        c0 = MODEL.boundary_constant()
        z = simulate_boundary_limit(c0, 1000, seed=9)
        assert ks_to_boundary_limit(z, c0) < 0.06

    def test_experiment_smoke(self):
        res = boundary_experiment(2000, reps=60, model=MODEL, seed=8)
        assert res.alpha == MODEL.critical_alpha
        assert 0.0 <= res.ks <= 1.0
        assert res.z_values.size == 60

    def test_ks_handles_ties_at_zero(self):
        # half the mass exactly at 0 matches the atom: distance stays small
        z = np.concatenate([np.zeros(500),
                            simulate_boundary_limit(689.6, 1000, 10)[
                                simulate_boundary_limit(689.6, 1000, 10) > 0][:500]])
        d = ks_to_boundary_limit(z, 689.6)
        assert d < 0.1


class TestBahadur:
    def test_rate_small_grid(self):
        res = bahadur_experiment([1000, 3000, 10_000], reps=150, model=MODEL,
                                 seed=12)
        assert res.slope_remainder <= -0.6
        assert -0.65 <= res.slope_first <= -0.35
        for m, s in zip(res.mean_remainder, res.se_remainder):
            assert abs(m) < 4 * s

    def test_hypothesis_chain_enforced(self):
        # below criticality the chain's first inequality fails (nu0 = 0)
        with pytest.raises(PreconditionError):
            bahadur_experiment([1000], 10, reference_model(alpha=0.01), seed=1)

    def test_chain_holds_near_criticality(self):
        # the mixture CDF is concave, so the density at the crossing always
        # sits below the line slope once alpha exceeds the criticality level
        m = reference_model(alpha=0.021)
        assert 1 / m.critical_alpha > 1 / m.alpha > m.density(m.bh_limit)


class TestCltExperiment:
    def test_threshold_statistic_shape(self):
        spec = FieldSpec(kind="iid", dims=(10_000,), pi1=0.5)
        res = clt_experiment("threshold", spec, MODEL, reps=300, seed=13)
        assert res.qq_corr > 0.99
        assert abs(res.skewness) < 0.3

    def test_count_statistic_matches_diagnostic(self):
        spec = FieldSpec(kind="iid", dims=(2500,), pi1=0.5)
        res = clt_experiment("count", spec, MODEL, reps=200, seed=14)
        assert 0.15 < np.var(res.values, ddof=1) < 0.35

    def test_degenerate_field_no_error(self):
        # all hypotheses false: the null mass path is identically zero and
        # diagnostics must still come back finite or NaN, never raise
        degenerate = PopulationModel(pi0=0.0,
                                     alternative=MODEL.alternative, alpha=0.1)
        spec = FieldSpec(kind="iid", dims=(500,), pi1=1.0)
        res = clt_experiment("fdp", spec, degenerate, reps=50, seed=15)
        assert res.values.size == 50

    def test_subcritical_threshold_errors(self):
        spec = FieldSpec(kind="iid", dims=(1000,), pi1=0.5)
        with pytest.raises(PreconditionError):
            clt_experiment("threshold", spec, reference_model(alpha=0.01),
                           reps=10, seed=1)


class TestPluginExperiment:
    def test_reference_model_small(self):
        res = plugin_experiment([20_000], reps=80, model=MODEL, seed=16)
        cell = res.cells[0]
        assert cell.mean_gamma_plugin == pytest.approx(0.1, abs=0.02)
        assert cell.frac_plugin_at_least_bh == 1.0
        assert cell.mean_fdp_bh == pytest.approx(0.05, abs=0.02)

    def test_residual_shrinks_with_n(self):
        res = plugin_experiment([2000, 50_000], reps=100, model=MODEL, seed=17)
        assert res.cells[1].rms_residual < res.cells[0].rms_residual

    def test_precondition(self):
        tight = PopulationModel(pi0=0.9, alternative=InverseSquareAlternative(),
                                alpha=0.015)
        with pytest.raises(PreconditionError):
            plugin_experiment([1000], 10, tight, seed=1)
