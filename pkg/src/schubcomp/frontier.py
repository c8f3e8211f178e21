"""Level-by-level frontiers of permutations held as uint8 row matrices.

A frontier is a pair ``(P, V)``: ``P`` has one permutation per row (values
1..n), ``V`` the matching coefficients.  ``sort_reduce`` orders rows by their
packed code (5 bits per position, position 1 lowest) and sums duplicates, so
the result is deterministic whatever order children were emitted in.
"""

import os

import numpy as np

from .errors import ResourceCapExceeded

INT64_SAFE = 2 ** 62


def default_frontier_cap(n: int) -> int:
    env = os.environ.get("SCHUBCOMP_MAX_FRONTIER")
    if env:
        return int(env)
    # about 8 GB at ~(n + 64) bytes per live entry incl. sort scratch
    return 8 * 10 ** 9 // (n + 64)


def row_keys(P):
    """(lo, hi) uint64 halves of the 128-bit packed code of each row.

    ``hi`` is None when everything fits in 64 bits (n <= 12).
    """
    m, n = P.shape
    E = P.astype(np.uint64)
    E -= np.uint64(1)
    lo = np.zeros(m, np.uint64)
    hi = np.zeros(m, np.uint64) if 5 * n > 64 else None
    for c in range(n):
        o = 5 * c
        col = E[:, c]
        if o + 5 <= 64:
            lo |= col << np.uint64(o)
        elif o >= 64:
            hi |= col << np.uint64(o - 64)
        else:  # straddles the word boundary
            lo |= col << np.uint64(o)
            hi |= col >> np.uint64(64 - o)
    return lo, hi


def sort_reduce(P, V):
    """Sort rows by packed code and add values of identical rows."""
    if len(P) == 0:
        return P, V
    lo, hi = row_keys(P)
    if hi is None:
        order = np.argsort(lo, kind="stable")
        slo = lo[order]
        start = np.empty(len(order), bool)
        start[0] = True
        np.not_equal(slo[1:], slo[:-1], out=start[1:])
    else:
        order = np.lexsort((lo, hi))
        slo, shi = lo[order], hi[order]
        start = np.empty(len(order), bool)
        start[0] = True
        start[1:] = (slo[1:] != slo[:-1]) | (shi[1:] != shi[:-1])
    idx = np.flatnonzero(start)
    P = P[order[idx]]
    V = np.add.reduceat(V[order], idx)
    return P, V


def ensure_capacity(V, fan_in: int):
    """Promote an int64 value array to Python ints before sums could overflow."""
    if V.dtype == np.int64 and len(V) and int(V.max()) > INT64_SAFE // max(fan_in, 1):
        return V.astype(object)
    return V


def check_cap(size: int, cap: int, what: str, partial=None):
    if size > cap:
        raise ResourceCapExceeded(f"{what}: frontier of {size} entries exceeds cap {cap}", partial)


def rows_to_perms(P):
    return [tuple(int(x) for x in row) for row in P]
