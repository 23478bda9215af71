"""Monte Carlo experiments at reduced scale.

Reproduces the concentration table (FDP around alpha*pi0 across couplings)
with fewer replicates and updates than the full run, then shows the
criticality dichotomy and the linearization-rate experiment.  The full-scale
versions live in the acceptance suite and behind the `depfdr exp` CLI.
"""

from depfdr import reference_model
from depfdr.experiments import (
    bahadur_experiment,
    criticality_experiment,
    plugin_experiment,
    table1_experiment,
)

model = reference_model(alpha=0.1)

# --- FDP concentration across couplings (reduced: 50 reps, 2.5e5 updates)
res = table1_experiment([-0.3, 0.0, 0.3, 0.44], reps=50, side=50,
                        site_updates=250_000, model=model, seed=100)
print("beta    E(d1^2)      E(|d1-d2|^2)")
for row in res.rows:
    print(f"{row.beta:5.2f}   {row.mean_delta1_sq:.3e}    {row.mean_diff_sq:.3e}")
print("dependence inflates the FDP variance; the first-order proxy d2")
print("tracks d1 to a few percent of its size.\n")

# --- criticality dichotomy: rejections grow linearly above 2/101, stay
# bounded below it
factory = lambda alpha: reference_model(alpha=alpha)
res = criticality_experiment([0.1, 0.01], [10_000, 50_000], reps=60,
                             model_factory=factory, seed=101)
print("alpha    n      median R   q95 R    mean R/n")
for c in res.cells:
    print(f"{c.alpha:5.2f}  {c.n:6d}   {c.median_r:8.0f} {c.q95_r:8.0f}"
          f"   {c.mean_r_over_n:.5f}")
print("target rate above criticality:", model.bh_limit / model.alpha, "\n")

# --- linearization rate of the empirical threshold
res = bahadur_experiment([1_000, 10_000, 100_000], reps=120, model=model,
                         seed=102)
print("first-order slope:", round(res.slope_first, 3), "(theory -1/2)")
print("remainder slope:  ", round(res.slope_remainder, 3), "(theory -3/4)\n")

# --- plug-in versus plain step-up
res = plugin_experiment([50_000], reps=100, model=model, seed=103)
cell = res.cells[0]
print("plug-in mean FDP:", round(cell.mean_fdp_plugin, 4), "~ alpha")
print("step-up mean FDP:", round(cell.mean_fdp_bh, 4), "~ alpha*pi0")
print("mean extra rejections:", round(cell.mean_extra_rejections, 1))
