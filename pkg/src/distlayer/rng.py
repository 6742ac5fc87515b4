"""Reproducible random streams.

Bits come from numpy's PCG64 keyed by a ``SeedSequence``; both algorithms are
frozen by numpy, so the streams below are identical across platforms and
releases. Conversions to floats are done here rather than through
``numpy.random.Generator`` so that they never change underneath us:

* uniform: top 53 bits of a raw 64-bit word, scaled by 2**-53, in [0, 1).
* normal: Box-Muller on consecutive uniform pairs (u1, u2); the first uses
  ``1 - u1`` so the logarithm never sees zero. Each pair yields
  ``r*cos(2*pi*u2)`` then ``r*sin(2*pi*u2)``.
"""

from __future__ import annotations

import numpy as np

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


class Stream:
    """A seeded stream of uniforms and standard normals.

    Extra integer ``keys`` derive independent sub-streams from one seed, e.g.
    ``Stream(seed, epoch)`` for per-epoch shuffles.
    """

    def __init__(self, seed: int, *keys: int):
        if int(seed) < 0 or any(int(k) < 0 for k in keys):
            raise ValueError("seeds and keys must be non-negative integers")
        self._bits = np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)]))

    def uniform(self, size) -> np.ndarray:
        n = int(np.prod(size))
        raw = self._bits.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) * _INV_2_53).reshape(size)

    def normal(self, size) -> np.ndarray:
        n = int(np.prod(size))
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(_TWO_PI * u2)
        z[1::2] = r * np.sin(_TWO_PI * u2)
        return z[:n].reshape(size)

    def choice(self, weights) -> int:
        """Index drawn with probability proportional to ``weights``."""
        cdf = np.cumsum(weights)
        u = self.uniform(1)[0] * cdf[-1]
        return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")
