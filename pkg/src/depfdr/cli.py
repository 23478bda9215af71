"""Command-line interface.

Subcommands: field (gen-iid | gen-linear | gen-ising), pvalues,
test (bh | plugin), exp (table1 | criticality | boundary | bahadur | clt |
plugin), restore.  Outputs go to files, a one-line summary to stdout and
diagnostics to stderr; every run appends its fully resolved configuration to
a manifest.  Exit codes: 0 success, 2 bad flags/config, 3 violated
experiment precondition.
"""

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments, imaging, processes
from .distributions import InverseSquareAlternative, PopulationModel
from .experiments import PreconditionError
from .fields import (FieldSpec, IsingParams, LinearFieldParams, field_from_csv,
                     field_to_csv, gen_iid, gen_ising, gen_linear_indicator,
                     geometric_window)
from .procedures import ProcedureConfig, bh_procedure, plugin_procedure, results_to_csv
from .seeding import DEFAULT_MASTER_SEED


class ConfigError(ValueError):
    pass


def _positive_int(v, key):
    iv = int(v)
    if iv <= 0:
        raise ConfigError(f"{key} must be a positive integer (got {v})")
    return iv


def _unit_open(v, key):
    fv = float(v)
    if not 0.0 < fv < 1.0:
        raise ConfigError(f"{key} must lie strictly between 0 and 1 (got {v})")
    return fv


def _unit_closed(v, key):
    fv = float(v)
    if not 0.0 <= fv <= 1.0:
        raise ConfigError(f"{key} must lie in [0, 1] (got {v})")
    return fv


def _positive_float(v, key):
    fv = float(v)
    if fv <= 0.0:
        raise ConfigError(f"{key} must be positive (got {v})")
    return fv


# keys accepted in a config file, with their parsers
CONFIG_KEYS = {
    "alpha": lambda v: _unit_open(v, "alpha"),
    "pi0": lambda v: _unit_closed(v, "pi0"),
    "pi1": lambda v: _unit_closed(v, "pi1"),
    "a": lambda v: _positive_float(v, "a"),
    "side": lambda v: _positive_int(v, "side"),
    "seed": lambda v: int(v, 0) if isinstance(v, str) else int(v),
    "reps": lambda v: _positive_int(v, "reps"),
    "updates": lambda v: _positive_int(v, "updates"),
    "cb": lambda v: _positive_float(v, "cb"),
    "n": lambda v: _positive_int(v, "n"),
    "beta": float,
    "jobs": lambda v: _positive_int(v, "jobs"),
}

DEFAULTS = {
    "alpha": 0.1,
    "pi0": 0.5,
    "a": 1.0 / 98.0,
    "side": 50,
    "reps": 100,
    "updates": 1_250_000,
    "cb": 1.0,
    "beta": 0.3,
    "jobs": 1,
    "n": 10_000,
}


def parse_config_file(path):
    """Plain key=value lines; '#' starts a comment; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](val.strip())
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def resolve(args, key):
    """Flag > config file > DEPFDR_SEED (seed only) > built-in default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    file_values = getattr(args, "_config_values", {})
    if key in file_values:
        return file_values[key]
    if key == "seed":
        env = os.environ.get("DEPFDR_SEED")
        if env is not None:
            try:
                return int(env, 0)
            except ValueError as exc:
                raise ConfigError(f"DEPFDR_SEED is not an integer: {env!r}") from exc
        return DEFAULT_MASTER_SEED
    return DEFAULTS[key]


def _model(args):
    a = resolve(args, "a")
    pi0 = resolve(args, "pi0")
    # the default shape/pi0 are the exact rationals, not their float images
    if a == DEFAULTS["a"]:
        a = Fraction(1, 98)
    if pi0 == 0.5:
        pi0 = Fraction(1, 2)
    return PopulationModel(pi0=pi0, alternative=InverseSquareAlternative(a),
                           alpha=resolve(args, "alpha"))


def _csv_list(cast):
    def parse(text):
        return [cast(tok) for tok in text.split(",") if tok]
    return parse


def _dims(text):
    return tuple(int(tok) for tok in text.split("x"))


def _out_dir(args):
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out_dir, args, **extra):
    """Record the resolved configuration: stderr always, and a manifest.txt
    line in the output directory when the run produces files there."""
    keys = {k: v for k, v in sorted(vars(args).items())
            if not k.startswith("_") and k != "func" and v is not None}
    keys.update(extra)
    line = " ".join(f"{k}={v}" for k, v in sorted(keys.items()))
    print(f"config: {line}", file=sys.stderr)
    if out_dir is not None:
        with open(out_dir / "manifest.txt", "a") as fh:
            fh.write(line + "\n")


def _write(path, text):
    Path(path).write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def _g(v):
    return format(float(v), "g")


# ---------------------------------------------------------------- field

def cmd_field(args):
    seed = resolve(args, "seed")
    if args.generator == "gen-iid":
        pi1 = args.pi1
        if pi1 is None:
            pi1 = getattr(args, "_config_values", {}).get("pi1")
        if pi1 is None:
            pi1 = 1.0 - resolve(args, "pi0")
        field = gen_iid(pi1, args.dims or (resolve(args, "side"),) * 2, seed)
    elif args.generator == "gen-ising":
        params = IsingParams(beta=resolve(args, "beta"),
                             side=resolve(args, "side"),
                             site_updates=resolve(args, "updates"),
                             init=args.init)
        field = gen_ising(params, seed)
    else:
        if args.coeffs is not None:
            coeffs = np.asarray(args.coeffs, dtype=float)
            origin = args.origin
        else:
            coeffs = geometric_window(args.rho, args.window)
            origin = args.window
        if args.zstar is None and args.target_pi1 is None:
            args.target_pi1 = 0.5
        params = LinearFieldParams(coeffs=coeffs, origin=origin,
                                   z_star=args.zstar, target_pi1=args.target_pi1)
        field = gen_linear_indicator(params, args.n or resolve(args, "n"), seed)
    out = Path(args.out or "field.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    _write(out, field_to_csv(field))
    _manifest(out.parent, args, resolved_seed=seed)
    print(f"kind={field.kind} n={field.n} num_false={field.num_false}")
    return 0


# ---------------------------------------------------------------- pvalues

def cmd_pvalues(args):
    seed = resolve(args, "seed")
    field = field_from_csv(Path(args.field).read_text())
    a = resolve(args, "a")
    if a == DEFAULTS["a"]:
        a = Fraction(1, 98)
    sample = processes.draw_pvalues(field, InverseSquareAlternative(a), seed)
    out = Path(args.out or "pvalues.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    _write(out, processes.sample_to_csv(sample))
    _manifest(out.parent, args, resolved_seed=seed)
    print(f"n={sample.n} num_false={sample.num_false}")
    return 0


# ---------------------------------------------------------------- test

def cmd_test(args):
    sample = processes.sample_from_csv(Path(args.pvals).read_text())
    config = ProcedureConfig(alpha=resolve(args, "alpha"),
                             bandwidth_scale=resolve(args, "cb"))
    run = bh_procedure if args.procedure == "bh" else plugin_procedure
    res = run(sample, config)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _write(out, results_to_csv([res]))
        _manifest(out.parent, args)
    else:
        _manifest(None, args)
    fdp = "NA" if res.fdp is None else _g(res.fdp)
    fnp = "NA" if res.fnp is None else _g(res.fnp)
    print(f"R={res.r} FDP={fdp} FNP={fnp} nu={_g(res.nu)} pi0_hat={_g(res.pi0)}")
    return 0


# ---------------------------------------------------------------- exp

def _exp_common(args):
    return (resolve(args, "reps"), _model(args), resolve(args, "seed"),
            resolve(args, "jobs"))


def cmd_exp(args):
    out = _out_dir(args)
    reps, model, seed, jobs = _exp_common(args)
    _manifest(out, args, resolved_seed=seed, alpha=model.alpha)
    kind = args.experiment
    if kind == "table1":
        res = experiments.table1_experiment(
            args.betas or [-0.3, 0.0, 0.1, 0.2, 0.3, 0.4, 0.44],
            reps, resolve(args, "side"), resolve(args, "updates"),
            model, seed, jobs)
        _write(out / "table1.csv", res.summary_csv())
        _write(out / "table1_replicates.csv", res.replicates_csv())
        worst = max(r.mean_delta1_sq for r in res.rows)
        print(f"table1: {len(res.rows)} rows, max mean_delta1_sq={worst:.3g}")
    elif kind == "criticality":
        alphas = args.alphas or [0.1, 0.01]
        ns = args.ns or [10_000, 100_000]
        factory = lambda alpha: PopulationModel(
            pi0=model.pi0_exact if model.pi0_exact is not None else model.pi0,
            alternative=model.alternative, alpha=alpha)
        res = experiments.criticality_experiment(alphas, ns, reps, factory,
                                                 seed, jobs)
        _write(out / "criticality.csv", res.summary_csv())
        _write(out / "criticality_replicates.csv", res.replicates_csv())
        print(f"criticality: {len(res.cells)} cells")
    elif kind == "boundary":
        res = experiments.boundary_experiment(args.n or 100_000, reps, model,
                                              seed, jobs)
        _write(out / "boundary.csv", res.summary_csv())
        _write(out / "boundary_replicates.csv", res.replicates_csv())
        print(f"boundary: ks={res.ks:.4f} frac_zero={res.frac_zero:.4f}")
    elif kind == "bahadur":
        ns = args.ns or [1_000, 3_000, 10_000, 30_000, 100_000]
        res = experiments.bahadur_experiment(ns, reps, model, seed, jobs)
        _write(out / "bahadur.csv", res.summary_csv())
        _write(out / "bahadur_replicates.csv", res.replicates_csv())
        print(f"bahadur: remainder slope={res.slope_remainder:.3f} "
              f"first-order slope={res.slope_first:.3f}")
    elif kind == "clt":
        side = resolve(args, "side")
        if args.field == "ising":
            spec = FieldSpec(kind="ising", dims=(side, side),
                             ising=IsingParams(beta=resolve(args, "beta"),
                                               side=side,
                                               site_updates=resolve(args, "updates")))
        else:
            n = args.n or side * side
            spec = FieldSpec(kind="iid", dims=(n,), pi1=model.pi1)
        res = experiments.clt_experiment(args.stat, spec, model, reps, seed, jobs)
        _write(out / f"clt_{args.stat}.csv", res.summary_csv())
        _write(out / f"clt_{args.stat}_replicates.csv", res.replicates_csv())
        print(f"clt[{args.stat}]: qq_corr={res.qq_corr:.4f} "
              f"skewness={res.skewness:.3f}")
    else:
        ns = args.ns or [10_000, 100_000]
        res = experiments.plugin_experiment(ns, reps, model, seed, jobs)
        _write(out / "plugin.csv", res.summary_csv())
        _write(out / "plugin_replicates.csv", res.replicates_csv())
        last = res.cells[-1]
        print(f"plugin: mean_gamma={last.mean_gamma_plugin:.4f} "
              f"frac_plugin_at_least_bh={last.frac_plugin_at_least_bh:.3f}")
    return 0


# ---------------------------------------------------------------- restore

def cmd_restore(args):
    out = _out_dir(args)
    seed = resolve(args, "seed")
    model = _model(args)
    side = resolve(args, "side")
    params = IsingParams(beta=resolve(args, "beta"), side=side,
                         site_updates=resolve(args, "updates"))
    from .seeding import stream_seed
    truth = gen_ising(params, stream_seed(seed, 0))
    sample = processes.draw_pvalues(truth, model.alternative, stream_seed(seed, 1))
    config = ProcedureConfig(alpha=model.alpha, bandwidth_scale=resolve(args, "cb"))
    estimate = imaging.restore_field(sample, config, procedure=args.procedure)
    grid = imaging.diff_map(truth, estimate)
    (out / "truth.pgm").write_bytes(imaging.write_pgm(truth))
    (out / "restored.pgm").write_bytes(imaging.write_pgm(estimate))
    (out / "diff.ppm").write_bytes(imaging.write_ppm(grid))
    _manifest(out, args, resolved_seed=seed)
    print(f"restore: R={estimate.num_false} FP={grid.count(imaging.FP)} "
          f"FN={grid.count(imaging.FN)}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    top = argparse.ArgumentParser(
        prog="depfdr",
        description="FDR control under dependent hypothesis fields: "
                    "generators, procedures, experiments, imaging.")
    top.add_argument("--config", help="key=value config file; flags override it")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=lambda v: int(v, 0))
        p.add_argument("--out")

    p_field = sub.add_parser("field", help="generate a truth field CSV")
    p_field.add_argument("generator",
                         choices=["gen-iid", "gen-linear", "gen-ising"])
    p_field.add_argument("--pi1", type=float)
    p_field.add_argument("--pi0", type=float)
    p_field.add_argument("--dims", type=_dims)
    p_field.add_argument("--side", type=int)
    p_field.add_argument("--beta", type=float)
    p_field.add_argument("--updates", type=int)
    p_field.add_argument("--init", default="random",
                         choices=["random", "all-plus", "all-minus"])
    p_field.add_argument("--n", type=int)
    p_field.add_argument("--rho", type=float, default=0.5)
    p_field.add_argument("--window", type=int, default=4)
    p_field.add_argument("--coeffs", type=_csv_list(float))
    p_field.add_argument("--origin", type=int, default=0)
    p_field.add_argument("--zstar", type=float)
    p_field.add_argument("--target-pi1", dest="target_pi1", type=float)
    common(p_field)
    p_field.set_defaults(func=cmd_field)

    p_pv = sub.add_parser("pvalues", help="draw p-values for a field CSV")
    p_pv.add_argument("--field", required=True)
    p_pv.add_argument("--a", type=float)
    common(p_pv)
    p_pv.set_defaults(func=cmd_pvalues)

    p_test = sub.add_parser("test", help="run a procedure on a p-value CSV")
    p_test.add_argument("procedure", choices=["bh", "plugin"])
    p_test.add_argument("--pvals", required=True)
    p_test.add_argument("--alpha", type=float)
    p_test.add_argument("--cb", type=float)
    common(p_test)
    p_test.set_defaults(func=cmd_test)

    p_exp = sub.add_parser("exp", help="run a Monte Carlo experiment")
    p_exp.add_argument("experiment", choices=["table1", "criticality",
                                              "boundary", "bahadur", "clt",
                                              "plugin"])
    p_exp.add_argument("--betas", type=_csv_list(float))
    p_exp.add_argument("--alphas", type=_csv_list(float))
    p_exp.add_argument("--ns", type=_csv_list(int))
    p_exp.add_argument("--n", type=int)
    p_exp.add_argument("--reps", type=int)
    p_exp.add_argument("--side", type=int)
    p_exp.add_argument("--updates", type=int)
    p_exp.add_argument("--alpha", type=float)
    p_exp.add_argument("--pi0", type=float)
    p_exp.add_argument("--a", type=float)
    p_exp.add_argument("--cb", type=float)
    p_exp.add_argument("--jobs", type=int)
    p_exp.add_argument("--stat", default="fdp",
                       choices=["threshold", "fdp", "count"])
    p_exp.add_argument("--field", default="iid", choices=["iid", "ising"])
    p_exp.add_argument("--beta", type=float)
    common(p_exp)
    p_exp.set_defaults(func=cmd_exp)

    p_res = sub.add_parser("restore", help="truth/restored/diff images")
    p_res.add_argument("--beta", type=float)
    p_res.add_argument("--alpha", type=float)
    p_res.add_argument("--pi0", type=float)
    p_res.add_argument("--a", type=float)
    p_res.add_argument("--cb", type=float)
    p_res.add_argument("--side", type=int)
    p_res.add_argument("--updates", type=int)
    p_res.add_argument("--procedure", default="bh", choices=["bh", "plugin"])
    common(p_res)
    p_res.set_defaults(func=cmd_restore)
    return top


def run(argv=None):
    """Dispatch a CLI invocation; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config_values = parse_config_file(args.config) if args.config else {}
        args._config_values = config_values
        # eager range checks on flag-supplied core values
        for key in ("alpha", "pi0", "a", "cb"):
            if getattr(args, key, None) is not None:
                CONFIG_KEYS[key](getattr(args, key))
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            print(f"precondition violated: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
