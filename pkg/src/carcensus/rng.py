"""Portable pseudo-random generator.

A 64-bit linear congruential generator (Knuth's MMIX constants) with the top
53 bits of the state used for uniforms. Integer arithmetic only, so streams
are identical on every platform. Gaussians use the Box-Muller transform.
"""

import math

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    def __init__(self, seed=0):
        self.state = (int(seed) ^ 0x9E3779B97F4A7C15) & _MASK
        for _ in range(4):
            self.next_u64()
        self._spare = None

    def next_u64(self):
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def random(self):
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def randint(self, lo, hi):
        """Uniform integer in [lo, hi] inclusive."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        return lo + (self.next_u64() >> 11) % span

    def gauss(self, mu=0.0, sigma=1.0):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return mu + sigma * z
        u1 = 1.0 - self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * r * math.cos(2.0 * math.pi * u2)

    def poisson(self, lam):
        # Knuth's product method; fine for the small rates used here.
        limit = math.exp(-lam)
        k, p = 0, self.random()
        while p > limit:
            k += 1
            p *= self.random()
        return k

    def choice_index(self, cumulative):
        """Index drawn from a nondecreasing cumulative weight list."""
        u = self.random() * cumulative[-1]
        lo, hi = 0, len(cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if cumulative[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]
        return items

    def permutation(self, n):
        return self.shuffle(list(range(n)))
