"""Step-up testing, the plug-in refinement, and the empirical processes.

One dependent sample end to end: draw the field, draw p-values given the
field, run both procedures, and read the same numbers back off the
empirical processes evaluated at the data-driven threshold.
"""

import numpy as np

from depfdr import (
    IsingParams,
    ProcedureConfig,
    bh_procedure,
    draw_pvalues,
    ecdf,
    evaluate_processes,
    fdp_process,
    fnp_process,
    gen_ising,
    plugin_procedure,
    reference_model,
)

model = reference_model(alpha=0.1)
truth = gen_ising(IsingParams(beta=0.3, side=50, site_updates=1_250_000), seed=10)
sample = draw_pvalues(truth, model.alternative, seed=11)
print("n =", sample.n, " false hypotheses =", sample.num_false)

config = ProcedureConfig(alpha=0.1)
bh = bh_procedure(sample, config)
print("\nstep-up: R =", bh.r, " V =", bh.v, " FDP =", round(bh.fdp, 4),
      " FNP =", round(bh.fnp, 4))
print("empirical threshold nu =", round(bh.nu, 5),
      " population limit =", round(model.bh_limit, 5))

# the plug-in estimates the null fraction from the tail and loosens the slope
pi = plugin_procedure(sample, config)
print("\nplug-in: pi0_hat =", round(pi.pi0, 4), " R =", pi.r,
      " (extra rejections:", pi.r - bh.r, ")")
print("plug-in FDP =", round(pi.fdp, 4), "~ alpha, step-up FDP ~ alpha*pi0")

# process view: the false discovery process at the threshold IS the FDP
print("\nfdp_process(nu) == result.fdp:", fdp_process(sample, bh.nu) == bh.fdp)
print("fnp_process(nu) =", round(fnp_process(sample, bh.nu), 4))

# all five processes at chosen times
ev = evaluate_processes(sample, np.array([0.01, 0.05, bh.nu, 0.5]))
print("\n t      F_n     null    alt     FDP     FNP")
for i, t in enumerate(ev.t):
    print(f" {t:.3f}  {ev.ecdf[i]:.4f}  {ev.null_mass[i]:.4f}  "
          f"{ev.alt_mass[i]:.4f}  {ev.fdp[i]:.4f}  {ev.fnp[i]:.4f}")

# the ecdf is exact: counts divided once
print("\nF_n(1) =", ecdf(sample, 1.0))
