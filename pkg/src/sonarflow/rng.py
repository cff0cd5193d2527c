"""Deterministic, portable random streams.

Streams are splitmix64 used in counter mode: output ``k`` of a stream seeded
with ``s`` is ``mix64(s + (k+1) * GOLDEN_GAMMA)`` (all arithmetic mod 2**64).
Because each output depends only on ``(seed, k)``, any slice of a stream can
be produced independently and fully vectorized, and consumers can address
sub-streams by absolute index instead of carrying sequential state.  The
algorithm is the splitmix64 generator of Steele, Lea & Vigna; the mixing
function is a xorshift-multiply finalizer, so streams are reproducible from
any language with 64-bit integer arithmetic.

Normal deviates use the Box-Muller transform with a fixed two-uniforms-per-
normal convention: normal ``k`` consumes uniforms ``2k`` and ``2k+1``.
"""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

_U64 = np.uint64


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise over a uint64 array."""
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def uint64_at(seed: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs ``start .. start+count-1`` of the stream."""
    if count < 0:
        raise ValueError("count must be >= 0")
    ks = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return mix64(_U64(seed & _MASK64) + ks * _U64(GOLDEN_GAMMA))


def uniforms_at(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform doubles in [0, 1): top 53 bits of each raw output."""
    return (uint64_at(seed, start, count) >> _U64(11)).astype(np.float64) * 2.0**-53


def normals_at(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normal deviates ``start .. start+count-1``.

    Normal ``k`` is ``sqrt(-2 ln(1-u_{2k})) * cos(2 pi u_{2k+1})``; the
    ``1-u`` guard keeps the log argument in (0, 1].
    """
    u = uniforms_at(seed, 2 * start, 2 * count)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    return r * np.cos(2.0 * np.pi * u[1::2])


def normals_at_indices(seed: int, indices: np.ndarray) -> np.ndarray:
    """Normal deviates at arbitrary (not necessarily contiguous) positions."""
    idx = np.asarray(indices, dtype=np.uint64)
    s = _U64(seed & _MASK64)
    two = _U64(2)
    raw0 = mix64(s + (two * idx + _U64(1)) * _U64(GOLDEN_GAMMA))
    raw1 = mix64(s + (two * idx + _U64(2)) * _U64(GOLDEN_GAMMA))
    u0 = (raw0 >> _U64(11)).astype(np.float64) * 2.0**-53
    u1 = (raw1 >> _U64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log1p(-u0)) * np.cos(2.0 * np.pi * u1)


def derive_seed(seed: int, *indices: int) -> int:
    """Fold indices into a seed to get an independent child stream."""
    out = seed & _MASK64
    for idx in indices:
        out = int(mix64(np.array([(out + (idx & _MASK64)) & _MASK64], dtype=np.uint64))[0])
    return out
