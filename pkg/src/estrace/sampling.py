"""Base samplers and sampling transforms for the evolution strategy.

Three interchangeable sources of standard-normal pre-image vectors:

* :class:`GaussianSampler` draws from a numpy Generator,
* :class:`HaltonSampler` maps the Halton sequence (first ``dim`` primes
  as bases, no scrambling) through the inverse normal CDF,
* :class:`SobolSampler` does the same with the Sobol sequence in natural
  (index) order, standard direction numbers, skipping the all-zeros
  point at index 0.

Both quasi-random samplers accept a ``start`` index so independent runs
can be decorrelated by a seeded offset without scrambling the sequence.
"""

import numpy as np
from scipy.special import ndtri

__all__ = [
    "GaussianSampler",
    "HaltonSampler",
    "SobolSampler",
    "make_sampler",
    "mirror_interleave",
    "orthogonalize",
]

# Primitive-polynomial degree, encoded coefficients, and initial
# direction values per dimension (standard Joe-Kuo table prefix).
# Dimension 1 is not table-driven: it is the base-2 van der Corput
# sequence, m_k = 1 for every k.
_SOBOL_TABLE = {
    2: (1, 0, (1,)),
    3: (2, 1, (1, 3)),
    4: (3, 1, (1, 3, 1)),
    5: (3, 2, (1, 1, 1)),
    6: (4, 1, (1, 1, 3, 3)),
    7: (4, 4, (1, 3, 5, 13)),
    8: (5, 2, (1, 1, 5, 5, 17)),
    9: (5, 4, (1, 1, 5, 5, 5)),
    10: (5, 7, (1, 1, 7, 11, 19)),
    11: (5, 11, (1, 1, 5, 1, 1)),
    12: (5, 13, (1, 1, 1, 3, 11)),
    13: (5, 14, (1, 3, 5, 5, 31)),
    14: (6, 1, (1, 3, 3, 9, 7, 49)),
    15: (6, 13, (1, 1, 1, 15, 21, 21)),
    16: (6, 16, (1, 3, 1, 13, 27, 49)),
    17: (6, 19, (1, 1, 1, 15, 7, 5)),
    18: (6, 22, (1, 3, 1, 15, 13, 25)),
    19: (6, 25, (1, 1, 5, 5, 19, 61)),
    20: (7, 1, (1, 3, 7, 11, 23, 15, 103)),
    21: (7, 4, (1, 3, 7, 13, 13, 15, 69)),
    22: (7, 7, (1, 1, 3, 13, 7, 35, 63)),
    23: (7, 8, (1, 3, 5, 9, 1, 25, 53)),
    24: (7, 14, (1, 3, 1, 13, 9, 35, 107)),
    25: (7, 19, (1, 3, 1, 5, 27, 61, 31)),
    26: (7, 21, (1, 1, 5, 11, 19, 41, 61)),
    27: (7, 28, (1, 3, 5, 3, 3, 13, 69)),
    28: (7, 31, (1, 1, 7, 13, 1, 19, 1)),
    29: (7, 32, (1, 3, 7, 5, 13, 19, 59)),
    30: (7, 37, (1, 1, 3, 9, 25, 29, 41)),
    31: (7, 41, (1, 3, 5, 13, 23, 1, 55)),
    32: (7, 42, (1, 3, 7, 3, 13, 59, 17)),
}

_SOBOL_BITS = 52  # resolution; indices must stay below 2**52
_MAX_SOBOL_DIM = max(_SOBOL_TABLE)

# spacing guard so the inverse CDF never sees exactly 0 or 1
_UNIT_LO = np.nextafter(0.0, 1.0)
_UNIT_HI = np.nextafter(1.0, 0.0)


def _sobol_direction_integers(dim_index):
    """Direction numbers v_1..v_BITS for one dimension, scaled by 2**BITS."""
    if dim_index == 1:
        return [1 << (_SOBOL_BITS - (j + 1)) for j in range(_SOBOL_BITS)]
    s, a, m_init = _SOBOL_TABLE[dim_index]
    m = list(m_init)
    for k in range(s, _SOBOL_BITS):
        # m_k = m_{k-s} XOR 2^s m_{k-s} XOR sum_i 2^i a_i m_{k-i}
        new = m[k - s] ^ (m[k - s] << s)
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                new ^= m[k - i] << i
        m.append(new)
    return [m[j] << (_SOBOL_BITS - (j + 1)) for j in range(_SOBOL_BITS)]


def _first_primes(k):
    primes = []
    candidate = 2
    while len(primes) < k:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def _radical_inverse(index, base):
    inv = 0.0
    denom = 1.0
    while index > 0:
        index, digit = divmod(index, base)
        denom *= base
        inv += digit / denom
    return inv


def _to_normal(u):
    return ndtri(np.clip(u, _UNIT_LO, _UNIT_HI))


class GaussianSampler:
    """Standard-normal vectors from a numpy Generator."""

    def __init__(self, dim, rng):
        self.dim = int(dim)
        self._rng = rng

    def draw(self, n):
        return self._rng.standard_normal((n, self.dim))


class HaltonSampler:
    """Halton sequence pushed through the inverse normal CDF.

    Bases are the first ``dim`` primes, unscrambled; the sequence index
    starts at ``start`` (>= 1) and advances by one per drawn vector.
    """

    def __init__(self, dim, start=1):
        if start < 1:
            raise ValueError("start index must be >= 1")
        self.dim = int(dim)
        self._bases = _first_primes(self.dim)
        self._index = int(start)

    def uniforms(self, n):
        """The next ``n`` raw points in the unit cube."""
        out = np.empty((n, self.dim))
        for row in range(n):
            for j, base in enumerate(self._bases):
                out[row, j] = _radical_inverse(self._index, base)
            self._index += 1
        return out

    def draw(self, n):
        return _to_normal(self.uniforms(n))


class SobolSampler:
    """Sobol sequence pushed through the inverse normal CDF.

    Natural-order generation: point ``i`` is the XOR of the direction
    numbers selected by the set bits of ``i``, so the first dimension
    follows the base-2 van der Corput sequence 1/2, 1/4, 3/4, 1/8, ...
    Index 0 (the all-zeros point) is excluded; ``start`` defaults to 1.
    """

    def __init__(self, dim, start=1):
        if dim > _MAX_SOBOL_DIM:
            raise ValueError(
                f"direction numbers embedded up to dimension {_MAX_SOBOL_DIM}, got {dim}"
            )
        if start < 1:
            raise ValueError("start index must be >= 1; index 0 is the all-zeros point")
        self.dim = int(dim)
        self._v = [_sobol_direction_integers(j + 1) for j in range(self.dim)]
        self._index = int(start)
        self._scale = float(1 << _SOBOL_BITS)

    def uniforms(self, n):
        """The next ``n`` raw points in the unit cube."""
        out = np.empty((n, self.dim))
        for row in range(n):
            i = self._index
            for j in range(self.dim):
                acc = 0
                k, bit = i, 0
                while k:
                    if k & 1:
                        acc ^= self._v[j][bit]
                    k >>= 1
                    bit += 1
                out[row, j] = acc / self._scale
            self._index += 1
        return out

    def draw(self, n):
        return _to_normal(self.uniforms(n))


def make_sampler(kind, dim, rng):
    """Build a base sampler by name.

    Quasi-random samplers get a seeded start offset in [1, 2**16] drawn
    from ``rng``: restarting an unscrambled sequence at index 1 for
    every run would make all runs of a configuration identical, so the
    offset is what carries the run seed into the sequence.
    """
    if kind == "gaussian":
        return GaussianSampler(dim, rng)
    if kind == "halton":
        return HaltonSampler(dim, start=1 + int(rng.integers(1 << 16)))
    if kind == "sobol":
        return SobolSampler(dim, start=1 + int(rng.integers(1 << 16)))
    raise ValueError(f"unknown base sampler {kind!r}")


def mirror_interleave(z):
    """Expand (k, dim) draws to (2k, dim) adjacent pairs (z_i, -z_i)."""
    z = np.asarray(z)
    out = np.empty((2 * z.shape[0], z.shape[1]))
    out[0::2] = z
    out[1::2] = -z
    return out


def orthogonalize(z):
    """Gram-Schmidt the first min(k, dim) rows, preserving their norms.

    Later rows (beyond dim) are returned unchanged.  Uses a QR
    factorization with the positive-diagonal sign convention, which
    coincides with classical Gram-Schmidt for full-rank input.
    """
    z = np.array(z, dtype=float)
    k = min(z.shape[0], z.shape[1])
    if k < 2:
        return z
    norms = np.linalg.norm(z[:k], axis=1)
    q, r = np.linalg.qr(z[:k].T)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    z[:k] = (q * signs).T * norms[:, None]
    return z
