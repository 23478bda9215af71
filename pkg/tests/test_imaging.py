import numpy as np
import pytest

from depfdr.distributions import reference_model
from depfdr.fields import HypothesisField, IsingParams, gen_ising
from depfdr.imaging import (
    FN,
    FP,
    TN,
    TP,
    ClassificationGrid,
    diff_map,
    read_pgm,
    restore_field,
    write_pgm,
    write_ppm,
)
from depfdr.procedures import ProcedureConfig, bh_procedure
from depfdr.processes import PValueSample, draw_pvalues
from depfdr.seeding import stream_seed

MODEL = reference_model()
CONFIG = ProcedureConfig(alpha=0.1)


def lattice_sample(beta, side, seed, updates=250_000):
    truth = gen_ising(IsingParams(beta=beta, side=side, site_updates=updates),
                      stream_seed(seed, 0))
    sample = draw_pvalues(truth, MODEL.alternative, stream_seed(seed, 1))
    return truth, sample


class TestGoldens:
    def test_single_pixel_pgm(self):
        f = HypothesisField((1, 1), np.array([1]))
        assert write_pgm(f) == b"P5\n1 1\n255\n" + bytes([0])

    def test_two_pixel_ppm(self):
        grid = ClassificationGrid((1, 2), np.array([FP, FN]))
        assert write_ppm(grid) == b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 0, 255])

    def test_file_size_arithmetic(self):
        f = gen_ising(IsingParams(beta=0.2, side=50, site_updates=10_000), 3)
        data = write_pgm(f)
        assert len(data) == len(b"P5\n50 50\n255\n") + 2500


class TestRoundTrip:
    def test_pgm_round_trip(self):
        f = gen_ising(IsingParams(beta=0.3, side=20, site_updates=50_000), 7)
        back = read_pgm(write_pgm(f))
        assert back.dims == f.dims
        assert np.array_equal(back.values, f.values)

    def test_tiny_round_trip(self):
        f = HypothesisField((1, 2), np.array([1, 0]))
        back = read_pgm(write_pgm(f))
        assert back.dims == (1, 2)
        assert np.array_equal(back.values, f.values)


class TestDiffMap:
    def test_perfect_estimate(self):
        t = HypothesisField((2, 2), np.array([1, 0, 0, 1]))
        grid = diff_map(t, t)
        assert grid.count(FP) == 0 and grid.count(FN) == 0
        assert grid.count(TP) == 2 and grid.count(TN) == 2

    def test_all_false_positive(self):
        t = HypothesisField((2, 2), np.zeros(4, dtype=np.uint8))
        e = HypothesisField((2, 2), np.ones(4, dtype=np.uint8))
        assert diff_map(t, e).count(FP) == 4

    def test_truth_table(self):
        t = HypothesisField((1, 2), np.array([0, 1]))
        e = HypothesisField((1, 2), np.array([1, 1]))
        grid = diff_map(t, e)
        assert list(grid.labels) == [FP, TP]

    def test_dimension_mismatch(self):
        a = HypothesisField((1, 2), np.array([0, 1]))
        b = HypothesisField((2, 1), np.array([0, 1]))
        with pytest.raises(ValueError):
            diff_map(a, b)


class TestRestore:
    def test_all_large_pvalues_restore_empty(self):
        s = PValueSample(x=np.full(16, 0.99), dims=(4, 4))
        est = restore_field(s, CONFIG)
        assert est.num_false == 0

    def test_fp_count_equals_v(self):
        truth, sample = lattice_sample(0.3, 50, seed=101)
        est = restore_field(sample, CONFIG, procedure="bh")
        grid = diff_map(truth, est)
        res = bh_procedure(sample, CONFIG)
        assert grid.count(FP) == res.v
        assert grid.count(TP) + grid.count(FP) == res.r
        assert grid.count(TP) + grid.count(FN) == truth.num_false

    def test_color_counts_match_exactly(self):
        truth, sample = lattice_sample(0.44, 50, seed=102)
        est = restore_field(sample, CONFIG)
        grid = diff_map(truth, est)
        data = write_ppm(grid)
        pixels = np.frombuffer(data.split(b"255\n", 1)[1], dtype=np.uint8)
        pixels = pixels.reshape(-1, 3)
        red = int(np.sum((pixels == [255, 0, 0]).all(axis=1)))
        blue = int(np.sum((pixels == [0, 0, 255]).all(axis=1)))
        res = bh_procedure(sample, CONFIG)
        assert red == res.v
        fn_count = int(np.sum((truth.values == 1) & ~res.rejected))
        assert blue == fn_count

    def test_larger_alpha_reduces_false_negatives(self):
        # paired replicates on shared seeds: a looser level rejects a
        # superset, so false negatives can only shrink
        wins = 0
        for r in range(100):
            truth, sample = lattice_sample(0.3, 30, seed=200 + r, updates=100_000)
            e1 = restore_field(sample, ProcedureConfig(alpha=0.1))
            e2 = restore_field(sample, ProcedureConfig(alpha=0.15))
            fn1 = diff_map(truth, e1).count(FN)
            fn2 = diff_map(truth, e2).count(FN)
            wins += fn2 <= fn1
        assert wins >= 90

    def test_requires_square_lattice(self):
        s = PValueSample(x=np.array([0.1, 0.2, 0.3]))
        with pytest.raises(ValueError):
            restore_field(s, CONFIG)
