"""Seeded, portable randomness.

Every random quantity in the package derives from one 64-bit master seed.
Named streams are split off with splitmix64 so that pipeline stages consume
disjoint randomness: stream 0 feeds the partition hierarchy, stream 1 the
Lipschitz partitions, stream 2 pair sampling in the estimator.  Uniform reals
are 53-bit dyadic rationals, so results are bit-identical across platforms.
"""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1

STREAM_HIERARCHY = 0
STREAM_KPR = 1
STREAM_PAIRS = 2


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def derive_stream_seed(seed: int, stream: int) -> int:
    """Mix a master seed with a stream index into an independent 64-bit seed."""
    out, state = splitmix64(seed & _MASK64)
    for _ in range(stream + 1):
        out, state = splitmix64(state)
    return out


def stream_rng(seed: int, stream: int) -> random.Random:
    """Mersenne Twister generator seeded from the derived stream seed."""
    return random.Random(derive_stream_seed(seed, stream))


def uniform53(rng: random.Random) -> float:
    """Uniform dyadic rational in [0, 1) with 53 bits of precision."""
    return rng.getrandbits(53) / (1 << 53)


def rand_below(rng: random.Random, n: int) -> int:
    """Uniform integer in [0, n) by rejection sampling on getrandbits."""
    if n <= 0:
        raise ValueError("n must be positive")
    bits = n.bit_length()
    while True:
        r = rng.getrandbits(bits)
        if r < n:
            return r


def rand_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    """Fisher-Yates shuffle of range(n), explicit so the byte stream is pinned."""
    items = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rand_below(rng, i + 1)
        items[i], items[j] = items[j], items[i]
    return tuple(items)
