"""Bitmap rendering of truth fields, restored fields and difference maps.

Binary portable pixmaps only: PGM (P5) for 0/1 fields, PPM (P6) for the
four-way classification grid.  Byte formats are fixed so golden-file tests
can compare exact output.
"""

from dataclasses import dataclass

import numpy as np

from .fields import HypothesisField
from .procedures import bh_procedure, plugin_procedure

TN, TP, FP, FN = 0, 1, 2, 3

# pixel colors: correct sites in white/black, errors saturated
_PPM_COLORS = np.array([
    [255, 255, 255],   # TN
    [0, 0, 0],         # TP
    [255, 0, 0],       # FP: false positive
    [0, 0, 255],       # FN: false negative
], dtype=np.uint8)


@dataclass(frozen=True)
class ClassificationGrid:
    """Per-site labels {TN, TP, FP, FN} over a 2-d lattice."""

    dims: tuple
    labels: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if labels.ndim != 1 or labels.size != dims[0] * dims[1]:
            raise ValueError("labels must be flat with length prod(dims)")
        if labels.size and labels.max() > 3:
            raise ValueError("labels must be in {0, 1, 2, 3}")
        object.__setattr__(self, "labels", labels)

    def count(self, label):
        return int(np.sum(self.labels == label))


def restore_field(sample, config, procedure="bh"):
    """Estimated truth field: 1 exactly at the sites the procedure rejects."""
    if sample.dims is None or len(sample.dims) != 2 or sample.dims[0] != sample.dims[1]:
        raise ValueError("sample must carry square-lattice metadata")
    if procedure == "bh":
        result = bh_procedure(sample, config)
    elif procedure == "plugin":
        result = plugin_procedure(sample, config)
    else:
        raise ValueError("procedure must be 'bh' or 'plugin'")
    return HypothesisField(sample.dims, result.rejected.astype(np.uint8),
                           kind=f"restored-{procedure}",
                           params={"alpha": config.alpha})


def diff_map(truth, estimate):
    """Classify each site by the (truth, estimate) pair."""
    if truth.dims != estimate.dims:
        raise ValueError("fields have different dimensions")
    if len(truth.dims) != 2:
        raise ValueError("difference maps are defined for 2-d lattices")
    t = truth.values.astype(np.int8)
    e = estimate.values.astype(np.int8)
    labels = np.where(t == 1, np.where(e == 1, TP, FN),
                      np.where(e == 1, FP, TN)).astype(np.uint8)
    return ClassificationGrid(truth.dims, labels)


def _dims_2d(dims):
    if len(dims) == 1:
        return 1, dims[0]
    if len(dims) == 2:
        return dims
    raise ValueError("bitmaps are defined for 1-d and 2-d fields")


def write_pgm(field):
    """P5 bytes: `P5\\n<w> <h>\\n255\\n` then one byte per site, row-major.

    Value 1 renders black (0), value 0 white (255).
    """
    rows, cols = _dims_2d(field.dims)
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    pixels = np.where(field.values == 1, 0, 255).astype(np.uint8)
    return header + pixels.tobytes()


def write_ppm(grid):
    """P6 bytes: `P6\\n<w> <h>\\n255\\n` then 3 bytes per site, row-major."""
    rows, cols = grid.dims
    header = f"P6\n{cols} {rows}\n255\n".encode("ascii")
    return header + _PPM_COLORS[grid.labels].tobytes()


def read_pgm(data):
    """Inverse of write_pgm for the exact header layout it produces."""
    if not data.startswith(b"P5\n"):
        raise ValueError("not a P5 bitmap produced by write_pgm")
    rest = data[3:]
    dims_line, rest = rest.split(b"\n", 1)
    maxval_line, pixels = rest.split(b"\n", 1)
    cols, rows = (int(v) for v in dims_line.split())
    if maxval_line != b"255":
        raise ValueError("unsupported max value")
    raw = np.frombuffer(pixels, dtype=np.uint8, count=rows * cols)
    values = (raw == 0).astype(np.uint8)
    return HypothesisField((rows, cols), values, kind="file")
