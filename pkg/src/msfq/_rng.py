"""Seeded xorshift-family PRNG (xoshiro256**) and deterministic seed derivation.

The simulation kernel embeds the same integer algorithm (see _kernel.py); this
module holds the reference implementation used for seeding, for the no-jit
fallback, and by tests. Streams are pure 64-bit integer arithmetic, so they are
identical on every platform. Doubles come from the top 53 bits, u = (x >> 11) *
2^-53, with u = 0 rejected so exponential holding times stay strictly positive.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
INV_2_53 = 2.0**-53


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def xoshiro_state(seed: int) -> list[int]:
    """Expand a 64-bit seed into the four xoshiro256** state words."""
    s = seed & MASK64
    words = []
    for _ in range(4):
        s, w = splitmix64(s)
        words.append(w)
    return words


def xoshiro_next(state: list[int]) -> int:
    """Advance xoshiro256** by one step, returning a 64-bit output."""
    s1 = state[1]
    x = (s1 * 5) & MASK64
    result = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
    t = (s1 << 17) & MASK64
    state[2] ^= state[0]
    state[3] ^= s1
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    s3 = state[3]
    state[3] = ((s3 << 45) | (s3 >> 19)) & MASK64
    return result


def next_uniform(state: list[int]) -> float:
    """Uniform double in (0, 1) from the xoshiro stream (zero rejected)."""
    u = 0.0
    while u == 0.0:
        u = (xoshiro_next(state) >> 11) * INV_2_53
    return u


def derive_seed(root: int, *branch: int) -> int:
    """Deterministic 64-bit sub-seed for the task identified by ``branch``.

    Mixes the root seed and the integer branch path through numpy's
    SeedSequence, so sub-streams are decorrelated and independent of worker
    count or scheduling order.
    """
    entropy = [root & MASK64] + [b & MASK64 for b in branch]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
