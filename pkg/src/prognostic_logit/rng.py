"""Counter-addressed random streams.

Each stream is a Philox-4x64 generator whose key is the 64-bit master seed and
whose starting counter encodes ``(tag, index, sub)``.  A stream is therefore a
pure function of those four integers: results never depend on which
replications ran before, or on which worker ran them.  Draw counts per stream
stay far below 2**64 blocks, so streams never overlap.

Only ``random_raw`` output is used; the conversions to uniforms, normals and
indices below are spelled out here so the bits are stable across numpy
versions.
"""
import numpy as np

from .normal import normal_quantile

__all__ = ["TAGS", "stream", "uniforms", "normals", "indices"]

TAGS = {"covariates": 1, "assignment": 2, "outcomes": 3, "bootstrap": 4}

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def stream(seed: int, tag: str, index: int = 0, sub: int = 0) -> np.random.Philox:
    counter = np.array([0, sub, index, TAGS[tag]], dtype=np.uint64)
    return np.random.Philox(counter=counter, key=int(seed) & _MASK64)


def uniforms(bitgen, size):
    """Uniforms on the open interval (0, 1), 53-bit resolution."""
    raw = bitgen.random_raw(size)
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * _TWO_M53


def normals(bitgen, size):
    """Standard normals by inversion of the CDF."""
    u = uniforms(bitgen, size)
    return normal_quantile(u.ravel()).reshape(np.shape(u))


def indices(bitgen, n, size):
    """Integers uniform on ``range(n)`` (multiply-shift on the top 32 bits)."""
    if not 0 < n < 2 ** 32:
        raise ValueError("n must lie in [1, 2**32)")
    raw = bitgen.random_raw(size) >> np.uint64(32)
    return ((raw * np.uint64(n)) >> np.uint64(32)).astype(np.int64)
