"""Deterministic seed-stream derivation for replicate-level parallelism.

Every Monte Carlo replicate draws from its own 64-bit seed derived from
(master seed, replicate index).  The derivation is a pure integer function,
so results never depend on worker count or scheduling order, and an
implementation in any other language can reproduce the streams bit for bit.
"""

MASK64 = 0xFFFF_FFFF_FFFF_FFFF

# 2^64 / golden ratio, the usual sequence-spreading constant.
GOLDEN64 = 0x9E37_79B9_7F4A_7C15

DEFAULT_MASTER_SEED = 0x5EED_F00D


def mix64(z: int) -> int:
    """SplitMix64 avalanche finalizer: a bijective 64-bit scrambler."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB) & MASK64
    return z ^ (z >> 31)


def stream_seed(master: int, index: int) -> int:
    """Seed for stream `index` (replicate number, or a sub-stream id).

    Computed as mix64(master XOR (index+1)*GOLDEN64); the +1 keeps stream 0
    distinct from the raw master seed.
    """
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return mix64((master & MASK64) ^ (((index + 1) * GOLDEN64) & MASK64))
