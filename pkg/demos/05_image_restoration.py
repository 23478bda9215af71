"""Binary image restoration by pixel-wise multiple testing.

The hidden Ising field is an image; each pixel gets a p-value under the
conditional independence model and the FDR-controlling procedure restores
the image.  Difference maps color false positives red and false negatives
blue.  Writes truth.pgm / restored.pgm / diff.ppm into demo_restore/.
"""

from pathlib import Path

from depfdr import (
    FN,
    FP,
    IsingParams,
    ProcedureConfig,
    diff_map,
    draw_pvalues,
    gen_ising,
    reference_model,
    restore_field,
    write_pgm,
    write_ppm,
)
from depfdr.imaging import TN, TP
from depfdr.seeding import stream_seed

model = reference_model(alpha=0.1)
out = Path("demo_restore")
out.mkdir(exist_ok=True)

for beta in (0.3, 0.44):
    truth = gen_ising(IsingParams(beta=beta, side=50, site_updates=1_250_000),
                      stream_seed(7, int(beta * 100)))
    sample = draw_pvalues(truth, model.alternative,
                          stream_seed(8, int(beta * 100)))
    estimate = restore_field(sample, ProcedureConfig(alpha=0.1))
    grid = diff_map(truth, estimate)
    print(f"beta={beta}: true positives {grid.count(TP)}, "
          f"false positives {grid.count(FP)}, "
          f"false negatives {grid.count(FN)}, "
          f"true negatives {grid.count(TN)}")
    suffix = str(beta).replace(".", "")
    (out / f"truth_{suffix}.pgm").write_bytes(write_pgm(truth))
    (out / f"restored_{suffix}.pgm").write_bytes(write_pgm(estimate))
    (out / f"diff_{suffix}.ppm").write_bytes(write_ppm(grid))

print(f"\nimages in {out}/ (any PGM/PPM viewer opens them)")
print("raising alpha trades false negatives for false positives:")
for alpha in (0.1, 0.15):
    truth = gen_ising(IsingParams(beta=0.3, side=50, site_updates=1_250_000),
                      stream_seed(7, 30))
    sample = draw_pvalues(truth, model.alternative, stream_seed(8, 30))
    grid = diff_map(truth, restore_field(sample, ProcedureConfig(alpha=alpha)))
    print(f"  alpha={alpha}: FP={grid.count(FP)} FN={grid.count(FN)}")
