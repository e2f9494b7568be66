"""Self-contained 64-bit PRNG so generated instances are reproducible anywhere.

The generator is splitmix64 (Steele, Lea & Flood's SplittableRandom finalizer).
Every derived draw below is specified exactly in terms of the raw 64-bit
stream, so a port in any language that implements `next_u64` identically will
emit bit-identical instances:

  next_u64:   state += 0x9E3779B97F4A7C15; z = state;
              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
              return z ^ (z >> 31)                       (all mod 2^64)
  uniform:    (next_u64 >> 11) * 2^-53                   in [0, 1)
  randint:    a + next_u64 % (b - a + 1)                 in {a, ..., b}
  normal:     Box-Muller; u1, u2 = uniform, uniform (u1 clamped to >= 2^-53),
              return sqrt(-2 ln u1) * cos(2 pi u2)

randint uses plain modulo reduction: the bias is irrelevant at desk scale and
rejection loops would make the draw count data-dependent.
"""

import math

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, a: int, b: int) -> int:
        """Integer uniform on {a, ..., b} inclusive."""
        if b < a:
            raise ValueError("empty range")
        return a + self.next_u64() % (b - a + 1)

    def normal(self) -> float:
        """Standard normal via Box-Muller (one value per two uniforms)."""
        u1 = max(self.uniform(), 2.0 ** -53)
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
