"""Hot simulation loop: the CTMC step-loop, jitted with numba when available.

The kernel draws one exponential candidate time per outgoing transition (the
per-transition minimum-time scheme) in the fixed emission order of
model.transitions(): queue-up, arrival-to-orbit, departure, retrial-success.
Random numbers come from an embedded xoshiro256** state (see _rng.py), so the
jitted and pure-Python paths consume identical integer streams. Set
MSFQ_NO_JIT=1 to force the pure-Python path.

Exit codes: 0 = reached the requested time, 1 = state cap exceeded,
2 = trajectory buffer full (caller drains the buffer and re-enters).
"""

from __future__ import annotations

import math
import os

import numpy as np

from ._rng import INV_2_53, MASK64

EXIT_TIME = 0
EXIT_DIVERGED = 1
EXIT_TRAJ_FULL = 2


def _next_double_impl(rng):
    # one xoshiro256** step over the uint64[4] state; zero rejected
    u = 0.0
    while u == 0.0:
        s1 = rng[1]
        x = s1 * np.uint64(5)
        out = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
        tt = s1 << np.uint64(17)
        rng[2] ^= rng[0]
        rng[3] ^= s1
        rng[1] ^= rng[2]
        rng[0] ^= rng[3]
        rng[2] ^= tt
        s3 = rng[3]
        rng[3] = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
        u = float(out >> np.uint64(11)) * INV_2_53
    return u


def _advance_impl(
    rng,
    i,
    j,
    t,
    until,
    lam,
    mu,
    mu0,
    ptable,
    sojourn,
    visits,
    cap,
    stride,
    executed,
    max_i,
    max_j,
    traj_t,
    traj_ij,
):
    traj_n = 0
    exit_code = 0
    while t < until:
        pj = ptable[j]
        best = np.inf
        bi = i
        bj = j
        r = lam * (1.0 - pj) + i * mu0 * pj
        if r > 0.0:
            best = -math.log1p(-_next_double(rng)) / r
            bi = i
            bj = j + 1
        r = lam * pj
        if r > 0.0:
            dt = -math.log1p(-_next_double(rng)) / r
            if dt < best:
                best = dt
                bi = i + 1
                bj = j + 1
        if j > 0:
            dt = -math.log1p(-_next_double(rng)) / mu
            if dt < best:
                best = dt
                bi = i
                bj = j - 1
        if i > 0:
            r = i * mu0 * (1.0 - pj)
            if r > 0.0:
                dt = -math.log1p(-_next_double(rng)) / r
                if dt < best:
                    best = dt
                    bi = i - 1
                    bj = j + 1
        if t + best >= until:
            # state holds through the window edge; memorylessness justifies
            # redrawing the pending holding time on the next advance
            sojourn[i, j] += until - t
            t = until
            break
        sojourn[i, j] += best
        t = t + best
        i = bi
        j = bj
        executed += 1
        visits[i, j] += 1
        if i > max_i:
            max_i = i
        if j > max_j:
            max_j = j
        if stride > 0 and executed % stride == 0:
            traj_t[traj_n] = t
            traj_ij[traj_n, 0] = i
            traj_ij[traj_n, 1] = j
            traj_n += 1
            if traj_n == traj_t.shape[0]:
                exit_code = 2
                break
        if i + j > cap:
            exit_code = 1
            break
    return i, j, t, executed, max_i, max_j, exit_code, traj_n


def _py_next_double(rng):
    # reference-path twin of _next_double_impl over the same uint64[4] array
    s0, s1, s2, s3 = (int(rng[0]), int(rng[1]), int(rng[2]), int(rng[3]))
    u = 0.0
    while u == 0.0:
        x = (s1 * 5) & MASK64
        out = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
        tt = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= tt
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        u = (out >> 11) * INV_2_53
    rng[0] = s0
    rng[1] = s1
    rng[2] = s2
    rng[3] = s3
    return u


def _load_kernel():
    if not os.environ.get("MSFQ_NO_JIT"):
        try:
            from numba import njit
        except ImportError:
            pass
        else:
            global _next_double
            _next_double = njit(cache=True)(_next_double_impl)
            return njit(cache=True)(_advance_impl)
    return _advance_impl


_next_double = _py_next_double
advance = _load_kernel()
