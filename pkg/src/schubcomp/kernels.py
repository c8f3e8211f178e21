"""Compiled inner loops shared by the BPD, move, sampler and CFTP modules.

Grids are int8 arrays of tile codes (see ``bpd.Tile``), rows from the north,
0-based.  ``colexit[c]`` is the 0-based row where the pipe entering the south
edge of column c leaves the east edge.  ``st`` holds [cross_count,
inversion_count].
"""

import numpy as np
from numba import njit

EMPTY, CROSS, HORIZ, VERT, RELBOW, JELBOW = 0, 1, 2, 3, 4, 5
N_, S_, E_, W_ = 1, 2, 4, 8
EDGES = np.array([0, 15, 12, 3, 6, 9], np.int64)

NO_FLIP, REJECTED, APPLIED = 0, 1, 2


@njit(cache=True)
def trace_forward(t, r, c, d):
    """Follow a pipe entering cell (r, c) through its S edge (d=0) or W edge
    (d=1) to the east boundary; -1 if the grid is malformed."""
    n = t.shape[0]
    while True:
        if c >= n:
            return r
        if r < 0:
            return -1
        k = t[r, c]
        if d == 0:
            if k == VERT or k == CROSS:
                r -= 1
            elif k == RELBOW:
                d = 1
                c += 1
            else:
                return -1
        else:
            if k == HORIZ or k == CROSS:
                c += 1
            elif k == JELBOW:
                d = 0
                r -= 1
            else:
                return -1


@njit(cache=True)
def trace_back(t, r, c, d):
    """South-boundary column of the pipe entering cell (r, c) through its
    S edge (d=0) or W edge (d=1); -1 if malformed."""
    n = t.shape[0]
    while True:
        if d == 0:
            if r == n - 1:
                return c
            r += 1
            k = t[r, c]
            if k == VERT or k == CROSS:
                d = 0
            elif k == JELBOW:
                d = 1
            else:
                return -1
        else:
            if c == 0:
                return -1
            c -= 1
            k = t[r, c]
            if k == HORIZ or k == CROSS:
                d = 1
            elif k == RELBOW:
                d = 0
            else:
                return -1


@njit(cache=True)
def boundary(t, colexit):
    """Fill colexit by tracing every pipe; False on a malformed grid."""
    n = t.shape[0]
    seen = np.zeros(n, np.bool_)
    for c in range(n):
        r = trace_forward(t, n - 1, c, 0)
        if r < 0 or seen[r]:
            return False
        seen[r] = True
        colexit[c] = r
    return True


@njit(cache=True)
def inversions(x):
    n = x.shape[0]
    s = 0
    for a in range(n):
        for b in range(a + 1, n):
            if x[a] > x[b]:
                s += 1
    return s


@njit(cache=True)
def count_crosses(t):
    n = t.shape[0]
    s = 0
    for r in range(n):
        for c in range(n):
            if t[r, c] == CROSS:
                s += 1
    return s


@njit(cache=True)
def window_code(t, r0, c0):
    return (t[r0, c0] * 216 + t[r0, c0 + 1] * 36
            + t[r0 + 1, c0] * 6 + t[r0 + 1, c0 + 1])


@njit(cache=True)
def flip_apply(t, colexit, st, r0, c0, up, table, kinds, require_reduced):
    """Flip the 2x2 window with NW cell (r0, c0) in direction ``up`` (1/0).

    Returns NO_FLIP when the window has no partner tiling in that direction,
    REJECTED when the result would be non-reduced (state restored) and
    APPLIED otherwise.  Only pipes entering the window are retraced.
    """
    code = window_code(t, r0, c0)
    new = table[code, up]
    if new < 0:
        return NO_FLIP
    old_nw, old_ne = t[r0, c0], t[r0, c0 + 1]
    old_sw, old_se = t[r0 + 1, c0], t[r0 + 1, c0 + 1]
    if kinds[code, up] == 0:
        # drip: no crossings on either side, pipes keep their endpoints
        t[r0, c0] = new // 216
        t[r0, c0 + 1] = (new // 36) % 6
        t[r0 + 1, c0] = (new // 6) % 6
        t[r0 + 1, c0 + 1] = new % 6
        return APPLIED

    # entry edges: S of the two bottom cells, W of the two left cells
    er = np.empty(4, np.int64)
    ec = np.empty(4, np.int64)
    ed = np.empty(4, np.int64)
    col = np.empty(4, np.int64)
    m = 0
    if EDGES[old_sw] & S_:
        er[m], ec[m], ed[m] = r0 + 1, c0, 0
        m += 1
    if EDGES[old_se] & S_:
        er[m], ec[m], ed[m] = r0 + 1, c0 + 1, 0
        m += 1
    if EDGES[old_nw] & W_:
        er[m], ec[m], ed[m] = r0, c0, 1
        m += 1
    if EDGES[old_sw] & W_:
        er[m], ec[m], ed[m] = r0 + 1, c0, 1
        m += 1
    for k in range(m):
        col[k] = trace_back(t, er[k], ec[k], ed[k])

    old_cross = ((old_nw == CROSS) + (old_ne == CROSS)
                 + (old_sw == CROSS) + (old_se == CROSS))
    t[r0, c0] = new // 216
    t[r0, c0 + 1] = (new // 36) % 6
    t[r0 + 1, c0] = (new // 6) % 6
    t[r0 + 1, c0 + 1] = new % 6
    new_cross = ((t[r0, c0] == CROSS) + (t[r0, c0 + 1] == CROSS)
                 + (t[r0 + 1, c0] == CROSS) + (t[r0 + 1, c0 + 1] == CROSS))

    newx = np.empty(4, np.int64)
    for k in range(m):
        newx[k] = trace_forward(t, er[k], ec[k], ed[k])

    # inversion change: pairs touching an affected pipe
    n = colexit.shape[0]
    affected = np.zeros(n, np.bool_)
    for k in range(m):
        affected[col[k]] = True
    dinv = 0
    for k in range(m):
        a = col[k]
        xo = colexit[a]
        xn = newx[k]
        for b in range(n):
            if affected[b]:
                continue
            y = colexit[b]
            if b > a:
                dinv += (xn > y) - (xo > y)
            else:
                dinv += (y > xn) - (y > xo)
    for k in range(m):
        for k2 in range(k + 1, m):
            a, b = col[k], col[k2]
            if a > b:
                a, b = b, a
                ia, ib = k2, k
            else:
                ia, ib = k, k2
            dinv += (newx[ia] > newx[ib]) - (colexit[a] > colexit[b])

    cross = st[0] + new_cross - old_cross
    inv = st[1] + dinv
    if require_reduced and cross != inv:
        t[r0, c0], t[r0, c0 + 1] = old_nw, old_ne
        t[r0 + 1, c0], t[r0 + 1, c0 + 1] = old_sw, old_se
        return REJECTED
    for k in range(m):
        colexit[col[k]] = newx[k]
    st[0] = cross
    st[1] = inv
    return APPLIED


# droop maps, indexed by tile code; -1 = not allowed
NORTH_DROOP = np.array([-1, VERT, EMPTY, -1, -1, -1], np.int64)
WEST_DROOP = np.array([-1, HORIZ, -1, EMPTY, -1, -1], np.int64)
SOUTH_DROOP = np.array([HORIZ, -1, -1, CROSS, -1, -1], np.int64)
EAST_DROOP = np.array([VERT, -1, CROSS, -1, -1, -1], np.int64)
NORTH_UNDROOP = np.array([HORIZ, -1, -1, CROSS, -1, -1], np.int64)
WEST_UNDROOP = np.array([VERT, -1, CROSS, -1, -1, -1], np.int64)
SOUTH_UNDROOP = np.array([-1, VERT, EMPTY, -1, -1, -1], np.int64)
EAST_UNDROOP = np.array([-1, HORIZ, -1, EMPTY, -1, -1], np.int64)


@njit(cache=True)
def rect_status(t, i1, i2, j1, j2):
    """1 if the rectangle is droopable, 2 if undroopable, else 0."""
    nw, ne, sw, se = t[i1, j1], t[i1, j2], t[i2, j1], t[i2, j2]
    if nw == RELBOW and se == EMPTY and ne == HORIZ and sw == VERT:
        mode = 1
    elif nw == EMPTY and se == JELBOW and ne == RELBOW and sw == RELBOW:
        mode = 2
    else:
        return 0
    for r in range(i1, i2 + 1):
        for c in range(j1, j2 + 1):
            if (r == i1 or r == i2) and (c == j1 or c == j2):
                continue
            k = t[r, c]
            if k == RELBOW or k == JELBOW:
                return 0
    return mode


@njit(cache=True)
def rect_apply(t, i1, i2, j1, j2, mode):
    if mode == 1:
        north, west, south, east = NORTH_DROOP, WEST_DROOP, SOUTH_DROOP, EAST_DROOP
        t[i1, j1], t[i2, j2], t[i1, j2], t[i2, j1] = EMPTY, JELBOW, RELBOW, RELBOW
    else:
        north, west, south, east = NORTH_UNDROOP, WEST_UNDROOP, SOUTH_UNDROOP, EAST_UNDROOP
        t[i1, j1], t[i2, j2], t[i1, j2], t[i2, j1] = RELBOW, EMPTY, HORIZ, VERT
    for c in range(j1 + 1, j2):
        t[i1, c] = north[t[i1, c]]
        t[i2, c] = south[t[i2, c]]
    for r in range(i1 + 1, i2):
        t[r, j1] = west[t[r, j1]]
        t[r, j2] = east[t[r, j2]]


@njit(cache=True)
def draw_offset(cdf, dmax, u):
    """Smallest k in 1..dmax with u < cdf[dmax, k-1]."""
    lo, hi = 0, dmax - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if u < cdf[dmax, mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo + 1


@njit(cache=True)
def one_step(t, colexit, st, u0, u1, u2, u3, p_flip, cdf, table, kinds, counts):
    """One sampler step from four uniforms; returns the outcome code
    (0 held flip, 1 rejected flip, 2 flip, 3 held rect, 4 droop, 5 undroop)."""
    n = t.shape[0]
    m = n - 1
    idx = int(u1 * (m * m))
    if idx >= m * m:
        idx = m * m - 1
    if u0 < p_flip:
        up = 1 if u2 < 0.5 else 0
        res = flip_apply(t, colexit, st, idx // m, idx % m, up, table, kinds, True)
        counts[res] += 1
        return res
    i2 = idx // m + 1
    j2 = idx % m + 1
    i1 = i2 - draw_offset(cdf, i2, u2)
    j1 = j2 - draw_offset(cdf, j2, u3)
    mode = rect_status(t, i1, i2, j1, j2)
    if mode:
        rect_apply(t, i1, i2, j1, j2, mode)
    counts[3 + mode] += 1
    return 3 + mode


@njit(cache=True)
def run_steps(t, colexit, st, U, p_flip, cdf, table, kinds, counts):
    for s in range(U.shape[0]):
        one_step(t, colexit, st, U[s, 0], U[s, 1], U[s, 2], U[s, 3],
                 p_flip, cdf, table, kinds, counts)


@njit(cache=True)
def height_into(t, h):
    n = t.shape[0]
    for i in range(n + 1):
        h[0, i] = 0
        h[i, 0] = 0
    for i in range(1, n + 1):
        rowsum = 0
        for j in range(1, n + 1):
            k = t[i - 1, j - 1]
            if k == RELBOW:
                rowsum += 1
            elif k == JELBOW:
                rowsum -= 1
            h[i, j] = h[i - 1, j] + rowsum


@njit(cache=True)
def collect(t, colexit, st, U, thin, p_flip, cdf, table, kinds, counts,
            pm_sum, h_sum, lengths, archive, codes, offset):
    """Run len(U) // thin samples of ``thin`` steps each, recording after each."""
    n = t.shape[0]
    h = np.zeros((n + 1, n + 1), np.int64)
    nsamp = U.shape[0] // thin
    for s in range(nsamp):
        base = s * thin
        for q in range(thin):
            one_step(t, colexit, st, U[base + q, 0], U[base + q, 1],
                     U[base + q, 2], U[base + q, 3], p_flip, cdf, table, kinds, counts)
        for c in range(n):
            pm_sum[colexit[c], c] += 1
        height_into(t, h)
        for i in range(n + 1):
            for j in range(n + 1):
                h_sum[i, j] += h[i, j]
        lengths[offset + s] = st[1]
        if archive.shape[0] > 0:
            for c in range(n):
                archive[offset + s, colexit[c]] = c + 1
        if codes.shape[0] > 0:
            code = 0
            for r in range(n):
                for c in range(n):
                    code = code * 6 + t[r, c]
            codes[offset + s] = code
