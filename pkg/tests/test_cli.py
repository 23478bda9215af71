import os

import numpy as np
import pytest

from depfdr.cli import run
from depfdr.fields import field_from_csv
from depfdr.imaging import read_pgm
from depfdr.processes import sample_from_csv


def invoke(argv, capsys):
    code = run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFieldCommand:
    def test_gen_iid(self, tmp_path, capsys):
        out = tmp_path / "f.csv"
        code, stdout, _ = invoke(["field", "gen-iid", "--pi1=0.5",
                                  "--dims=10x10", "--seed=3",
                                  f"--out={out}"], capsys)
        assert code == 0
        f = field_from_csv(out.read_text())
        assert f.dims == (10, 10)
        assert "num_false=" in stdout
        assert (tmp_path / "manifest.txt").exists()

    def test_gen_ising_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            code, _, _ = invoke(["field", "gen-ising", "--beta=0.3",
                                 "--side=12", "--updates=2000", "--seed=9",
                                 f"--out={out}"], capsys)
            assert code == 0
        assert a.read_text() == b.read_text()

    def test_gen_linear(self, tmp_path, capsys):
        out = tmp_path / "f.csv"
        code, _, _ = invoke(["field", "gen-linear", "--n=500", "--rho=0.5",
                             "--window=3", "--target-pi1=0.5", "--seed=2",
                             f"--out={out}"], capsys)
        assert code == 0
        assert field_from_csv(out.read_text()).n == 500


class TestPvaluesAndTest:
    def test_pipeline(self, tmp_path, capsys):
        fcsv = tmp_path / "f.csv"
        pcsv = tmp_path / "p.csv"
        invoke(["field", "gen-iid", "--pi1=0.5", "--dims=20x20", "--seed=1",
                f"--out={fcsv}"], capsys)
        code, _, _ = invoke(["pvalues", f"--field={fcsv}", "--seed=2",
                             f"--out={pcsv}"], capsys)
        assert code == 0
        sample = sample_from_csv(pcsv.read_text())
        assert sample.n == 400
        code, stdout, _ = invoke(["test", "bh", "--alpha=0.1",
                                  f"--pvals={pcsv}"], capsys)
        assert code == 0
        assert stdout.startswith("R=")

    def test_all_large_pvalues_summary(self, tmp_path, capsys):
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n" + "\n".join(["0.99"] * 20) + "\n")
        code, stdout, _ = invoke(["test", "bh", "--alpha=0.1",
                                  f"--pvals={pcsv}"], capsys)
        assert code == 0
        assert "R=0" in stdout
        assert "FDP=0" in stdout

    def test_results_csv_written(self, tmp_path, capsys):
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("h,x\n0,0.01\n1,0.02\n1,0.8\n")
        rcsv = tmp_path / "r.csv"
        code, _, _ = invoke(["test", "plugin", "--alpha=0.1",
                             f"--pvals={pcsv}", f"--out={rcsv}"], capsys)
        assert code == 0
        header = rcsv.read_text().splitlines()[0]
        assert header.startswith("run_id,procedure,n,alpha,R,V,FDP,FNP,nu")


class TestExitCodes:
    def test_unknown_flag_is_2(self, capsys):
        code, _, _ = invoke(["test", "bh", "--alpha=0.1", "--nope=1",
                             "--pvals=x.csv"], capsys)
        assert code == 2

    def test_alpha_range_is_2(self, tmp_path, capsys):
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n0.5\n")
        code, _, err = invoke(["test", "bh", "--alpha=1.5",
                               f"--pvals={pcsv}"], capsys)
        assert code == 2
        assert "alpha" in err

    def test_missing_file_is_2(self, capsys):
        code, _, _ = invoke(["test", "bh", "--alpha=0.1",
                             "--pvals=/nonexistent/p.csv"], capsys)
        assert code == 2

    def test_precondition_is_3(self, tmp_path, capsys):
        code, _, err = invoke(["exp", "table1", "--betas=0", "--reps=2",
                               "--side=10", "--updates=100", "--alpha=0.01",
                               "--seed=1", f"--out={tmp_path}"], capsys)
        assert code == 3
        assert "precondition" in err

    def test_success_is_0(self, tmp_path, capsys):
        code, _, _ = invoke(["exp", "table1", "--betas=0", "--reps=3",
                             "--side=10", "--updates=100", "--seed=1",
                             f"--out={tmp_path}"], capsys)
        assert code == 0


class TestConfigFile:
    def test_file_values_used(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=0.2\nseed=77\n")
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n0.01\n0.5\n0.9\n")
        rcsv = tmp_path / "r.csv"
        code, _, _ = invoke([f"--config={cfg}", "test", "bh",
                             f"--pvals={pcsv}", f"--out={rcsv}"], capsys)
        assert code == 0
        assert ",0.2," in rcsv.read_text().splitlines()[1]

    def test_flag_overrides_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=0.2\n")
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n0.01\n0.5\n0.9\n")
        rcsv = tmp_path / "r.csv"
        code, _, _ = invoke([f"--config={cfg}", "test", "bh", "--alpha=0.05",
                             f"--pvals={pcsv}", f"--out={rcsv}"], capsys)
        assert code == 0
        assert ",0.05," in rcsv.read_text().splitlines()[1]

    def test_unknown_key_is_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alhpa=0.2\n")
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n0.5\n")
        code, _, err = invoke([f"--config={cfg}", "test", "bh",
                               f"--pvals={pcsv}"], capsys)
        assert code == 2
        assert "alhpa" in err

    def test_bad_range_in_file_is_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=1.5\n")
        pcsv = tmp_path / "p.csv"
        pcsv.write_text("x\n0.5\n")
        code, _, _ = invoke([f"--config={cfg}", "test", "bh",
                             f"--pvals={pcsv}"], capsys)
        assert code == 2


class TestSeedEnv:
    def test_env_seed_used(self, tmp_path, capsys, monkeypatch):
        outs = []
        for seed_env in ("123", "123", "456"):
            monkeypatch.setenv("DEPFDR_SEED", seed_env)
            out = tmp_path / f"f{len(outs)}.csv"
            code, _, _ = invoke(["field", "gen-iid", "--pi1=0.5",
                                 "--dims=8x8", f"--out={out}"], capsys)
            assert code == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]
        assert outs[0] != outs[2]

    def test_flag_beats_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DEPFDR_SEED", "123")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        invoke(["field", "gen-iid", "--dims=8x8", "--seed=9", f"--out={a}"],
               capsys)
        monkeypatch.delenv("DEPFDR_SEED")
        invoke(["field", "gen-iid", "--dims=8x8", "--seed=9", f"--out={b}"],
               capsys)
        assert a.read_text() == b.read_text()


class TestExpCommands:
    def test_boundary_smoke(self, tmp_path, capsys):
        code, stdout, _ = invoke(["exp", "boundary", "--n=1000", "--reps=20",
                                  "--seed=5", f"--out={tmp_path}"], capsys)
        assert code == 0
        assert (tmp_path / "boundary.csv").exists()
        assert (tmp_path / "boundary_replicates.csv").exists()
        assert "ks=" in stdout

    def test_bahadur_smoke(self, tmp_path, capsys):
        code, stdout, _ = invoke(["exp", "bahadur", "--ns=1000,3000",
                                  "--reps=30", "--seed=5",
                                  f"--out={tmp_path}"], capsys)
        assert code == 0
        assert "slope" in stdout

    def test_clt_smoke(self, tmp_path, capsys):
        code, _, _ = invoke(["exp", "clt", "--stat=count", "--field=iid",
                             "--n=400", "--reps=120", "--seed=5",
                             f"--out={tmp_path}"], capsys)
        assert code == 0
        assert (tmp_path / "clt_count.csv").exists()

    def test_plugin_smoke(self, tmp_path, capsys):
        code, _, _ = invoke(["exp", "plugin", "--ns=2000", "--reps=20",
                             "--seed=5", f"--out={tmp_path}"], capsys)
        assert code == 0

    def test_criticality_smoke(self, tmp_path, capsys):
        code, _, _ = invoke(["exp", "criticality", "--alphas=0.1",
                             "--ns=2000", "--reps=10", "--seed=5",
                             f"--out={tmp_path}"], capsys)
        assert code == 0

    def test_table1_csv_rows(self, tmp_path, capsys):
        code, _, _ = invoke(["exp", "table1", "--betas=-0.3,0,0.3",
                             "--reps=4", "--side=10", "--updates=1000",
                             "--alpha=0.1", "--seed=7",
                             f"--out={tmp_path}"], capsys)
        assert code == 0
        lines = (tmp_path / "table1.csv").read_text().strip().splitlines()
        assert len(lines) == 4


class TestRestoreCommand:
    def test_writes_three_images(self, tmp_path, capsys):
        code, stdout, _ = invoke(["restore", "--beta=0.3", "--alpha=0.1",
                                  "--side=20", "--updates=20000", "--seed=1",
                                  f"--out={tmp_path}"], capsys)
        assert code == 0
        truth = read_pgm((tmp_path / "truth.pgm").read_bytes())
        restored = read_pgm((tmp_path / "restored.pgm").read_bytes())
        assert truth.dims == restored.dims == (20, 20)
        diff = (tmp_path / "diff.ppm").read_bytes()
        assert diff.startswith(b"P6\n20 20\n255\n")
        assert "FP=" in stdout and "FN=" in stdout

    def test_deterministic_outputs(self, tmp_path, capsys):
        args = ["restore", "--beta=0.2", "--side=15", "--updates=5000",
                "--seed=4"]
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        invoke(args + [f"--out={d1}"], capsys)
        invoke(args + [f"--out={d2}"], capsys)
        for name in ("truth.pgm", "restored.pgm", "diff.ppm"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


class TestJobsInvariance:
    def test_jobs_flag_does_not_change_bytes(self, tmp_path, capsys):
        base = ["exp", "bahadur", "--ns=500,1000", "--reps=12", "--seed=3"]
        d1, d2 = tmp_path / "j1", tmp_path / "j2"
        assert invoke(base + ["--jobs=1", f"--out={d1}"], capsys)[0] == 0
        assert invoke(base + ["--jobs=2", f"--out={d2}"], capsys)[0] == 0
        assert ((d1 / "bahadur_replicates.csv").read_text()
                == (d2 / "bahadur_replicates.csv").read_text())
