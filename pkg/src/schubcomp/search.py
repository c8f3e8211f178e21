"""Searching for permutations with large Upsilon.

``full_search`` sweeps all of S_n with two frontiers that meet in the middle:
one climbs from the identity using the descent recurrence read upwards (exact
integers, since the sum over ascents is divisible by the new length), the
other descends from w0 using the cotransition recurrence read downwards.

``optimal_layered`` uses the direct-sum factorization
Upsilon(u (+) v) = Upsilon(u) * Upsilon(1_m x v) together with a flagged
determinant for the shifted staircase 1_m x w0(b), and cross-checks the
winner with the cotransition recurrence when asked.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import frontier as fr
from .errors import ResourceCapExceeded
from .evaluate import upsilon
from .perm import LayeredSpec, Perm, as_perm, compositions, layered, pack


@dataclass
class SearchResult:
    n: int
    best_perm: Perm
    best_value: int
    method: str
    argmax: list = field(default_factory=list)
    per_level_max: list | None = None
    evaluated: int = 0
    budget_exhausted: bool = False

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "method": self.method,
            "best_perm": str(self.best_perm),
            "best_value": str(self.best_value),
            "argmax": [str(p) for p in self.argmax],
            "evaluated": self.evaluated,
            "budget_exhausted": self.budget_exhausted,
        }
        if self.per_level_max is not None:
            out["per_level_max"] = [
                {"length": L, "max": str(v), "argmax": [str(p) for p in ps]}
                for L, v, ps in self.per_level_max
            ]
        return out


# -- full search -------------------------------------------------------------

def _level_max(P, V):
    if len(V) == 0:
        return 0, []
    best = max(V) if V.dtype == object else V.max()
    hit = np.flatnonzero(V == best)
    perms = [Perm(tuple(int(x) for x in P[k])) for k in hit]
    return int(best), sorted(perms, key=lambda p: p.entries)


def _up_step(P, V, L):
    """Values at length L+1 from values at length L (identity side)."""
    n = P.shape[1]
    V = fr.ensure_capacity(V, n * n * n)
    kids, vals = [], []
    for c in range(n - 1):
        mask = P[:, c] < P[:, c + 1]
        if mask.any():
            C = P[mask]
            C[:, [c, c + 1]] = C[:, [c + 1, c]]
            kids.append(C)
            vals.append(V[mask] * (c + 1))
    P, S = fr.sort_reduce(np.concatenate(kids), np.concatenate(vals))
    if S.dtype == object:
        V = np.array([x // (L + 1) for x in S], dtype=object)
    else:
        V = S // (L + 1)
    return P, V


def _down_step(P, V):
    """Values at length L-1 from values at length L (w0 side).

    v at length L feeds u = v (a, b) when v covers u and a is the
    cotransition index of u, i.e. a <= i_v and a + v(b) <= n.
    """
    m, n = P.shape
    V = fr.ensure_capacity(V, n * n)
    pos = np.arange(1, n + 1)
    ok = (P + pos[None, :]) <= n
    iv = np.where(ok.any(axis=1), np.argmax(ok, axis=1), n)
    kids, vals = [], []
    for a in range(n - 1):
        live = iv >= a
        if not live.any():
            continue
        va = P[:, a]
        curmax = np.zeros(m, np.uint8)
        for b in range(a + 1, n):
            col = P[:, b]
            below = col < va
            valid = live & below & (col > curmax) & (a + 1 + col.astype(np.int64) <= n)
            if valid.any():
                r = np.flatnonzero(valid)
                C = P[r]
                C[:, a] = col[r]
                C[:, b] = va[r]
                kids.append(C)
                vals.append(V[r])
            np.maximum(curmax, np.where(below, col, curmax), out=curmax)
    return fr.sort_reduce(np.concatenate(kids), np.concatenate(vals))


def _up_gen(n, cap, record):
    P = np.array([list(range(1, n + 1))], np.uint8)
    V = np.array([1], np.int64)
    L = 0
    record(0, P, V)
    while True:
        yield L, len(P)
        P, V = _up_step(P, V, L)
        L += 1
        fr.check_cap(len(P), cap, "full_search ascending")
        record(L, P, V)


def _down_gen(n, cap, record):
    top = n * (n - 1) // 2
    P = np.array([list(range(n, 0, -1))], np.uint8)
    V = np.array([1], np.int64)
    L = top
    record(top, P, V)
    while True:
        yield L, len(P)
        P, V = _down_step(P, V)
        L -= 1
        fr.check_cap(len(P), cap, "full_search descending")
        record(L, P, V)


def full_search(n: int, frontier_cap=None, threads: int = 2) -> SearchResult:
    """Exact maximum of Upsilon over S_n, with per-level maxima.

    With ``threads >= 2`` the two frontiers run as cooperating threads that
    claim levels under a lock, so neither processes a level the other has
    already taken.  Otherwise one thread advances whichever frontier is
    currently smaller.
    """
    top = n * (n - 1) // 2
    if n == 1:
        e = Perm((1,))
        return SearchResult(1, e, 1, "full", [e], [(0, 1, [e])], 1)
    cap = frontier_cap or fr.default_frontier_cap(n)
    levels = {}
    lock = threading.Lock()
    claimed = {"up": 0, "down": top}
    errors = []

    def record(L, P, V):
        stats = _level_max(P, V) + (len(P),)
        with lock:
            levels[L] = stats

    def worker(gen, side):
        try:
            L, _ = next(gen)
            while True:
                with lock:
                    nxt = L + 1 if side == "up" else L - 1
                    if side == "up" and nxt >= claimed["down"]:
                        return
                    if side == "down" and nxt <= claimed["up"]:
                        return
                    claimed[side] = nxt
                L, _ = next(gen)
        except ResourceCapExceeded as exc:
            errors.append(exc)
            with lock:  # stop the partner too
                claimed["up"], claimed["down"] = top, 0

    up_it, down_it = _up_gen(n, cap, record), _down_gen(n, cap, record)
    if threads >= 2:
        ts = [threading.Thread(target=worker, args=(up_it, "up")),
              threading.Thread(target=worker, args=(down_it, "down"))]
        for t in ts:
            t.start()
        for t in ts:
            t.join()
    else:
        try:
            lu, su = next(up_it)
            ld, sd = next(down_it)
            while lu + 1 < ld:
                if su <= sd:
                    lu, su = next(up_it)
                else:
                    ld, sd = next(down_it)
        except ResourceCapExceeded as exc:
            errors.append(exc)

    per_level = [(L, levels[L][0], levels[L][1]) for L in sorted(levels)]
    if errors:
        raise ResourceCapExceeded(str(errors[0]), per_level) from errors[0]
    best = max(v for _, v, _ in per_level)
    argmax = sorted({p for _, v, ps in per_level if v == best for p in ps},
                    key=lambda p: p.entries)
    return SearchResult(n, argmax[0], best, "full", argmax, per_level,
                        evaluated=sum(levels[L][2] for L in levels))


# -- Cayley-ball search ------------------------------------------------------

def cayley_ball(center, radius: int) -> list:
    """All permutations within `radius` arbitrary transpositions of center,
    sorted by packed code (center included)."""
    center = as_perm(center)
    n = center.n
    seen = {pack(center): center.entries}
    layer = [center.entries]
    for _ in range(radius):
        nxt = []
        for w in layer:
            for a in range(n):
                for b in range(a + 1, n):
                    u = list(w)
                    u[a], u[b] = u[b], u[a]
                    code = pack(u)
                    if code not in seen:
                        seen[code] = tuple(u)
                        nxt.append(tuple(u))
        layer = nxt
    return [Perm(seen[c]) for c in sorted(seen)]


def _eval_exact(w):
    return upsilon(w, "cotransition", "exact").value


def neighborhood_search(center, radius: int, budget=None, threads: int = 1,
                        evaluator=None) -> SearchResult:
    """Best Upsilon within Cayley distance `radius` of `center`.

    ``budget`` caps the number of evaluations; the result is then the best
    found so far and flagged.  Candidates are visited in packed-code order.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    evaluator = evaluator or _eval_exact
    cands = cayley_ball(center, radius)
    exhausted = budget is not None and len(cands) > budget
    if exhausted:
        cands = cands[:budget]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(evaluator, cands))
    else:
        vals = [evaluator(w) for w in cands]
    best = max(vals)
    argmax = [w for w, v in zip(cands, vals) if v == best]
    return SearchResult(as_perm(center).n, argmax[0], best, "neighborhood", argmax,
                        evaluated=len(cands), budget_exhausted=exhausted)


# -- layered optimum ---------------------------------------------------------

def _bareiss_det(M) -> int:
    M = [list(r) for r in M]
    k = len(M)
    if k == 0:
        return 1
    sign, prev = 1, 1
    for c in range(k - 1):
        if M[c][c] == 0:
            swap = next((r for r in range(c + 1, k) if M[r][c] != 0), None)
            if swap is None:
                return 0
            M[c], M[swap] = M[swap], M[c]
            sign = -sign
        for r in range(c + 1, k):
            for j in range(c + 1, k):
                M[r][j] = (M[r][j] * M[c][c] - M[r][c] * M[c][j]) // prev
        prev = M[c][c]
    return sign * M[k - 1][k - 1]


def shifted_staircase_upsilon(m: int, b: int) -> int:
    """Upsilon of 1_m x w0(b): flagged staircase tableaux counted by a
    Jacobi-Trudi determinant of complete homogeneous evaluations."""
    k = b - 1
    if k <= 0:
        return 1

    def h(deg, flag):
        return 0 if deg < 0 else comb(flag + deg - 1, deg)

    lam = [b - 1 - i for i in range(k)]
    return _bareiss_det([[h(lam[i] - i + j, m + i + 1) for j in range(k)]
                         for i in range(k)])


def layered_upsilon(spec) -> int:
    blocks = spec.blocks if isinstance(spec, LayeredSpec) else tuple(spec)
    out, m = 1, 0
    for b in blocks:
        out *= shifted_staircase_upsilon(m, b)
        m += b
    return out


def optimal_layered(n: int, method: str = "product", verify: bool = False):
    """(spec, value) maximizing Upsilon over layered permutations of size n.

    Compositions are scanned lexicographically and the first maximum wins.
    ``method="cotransition"`` evaluates every layered permutation directly
    (practical for n <= 12); ``verify`` re-evaluates the winner that way.
    """
    if method == "product":
        score = layered_upsilon
    elif method == "cotransition":
        def score(c):
            return upsilon(layered(c), "cotransition", "exact").value
    else:
        raise ValueError(f"unknown method {method!r}")
    best_spec, best_val = None, -1
    for c in compositions(n):
        v = score(c)
        if v > best_val:
            best_spec, best_val = c, v
    if verify and method == "product":
        direct = upsilon(layered(best_spec), "cotransition", "exact").value
        if direct != best_val:
            raise AssertionError(f"factorized value {best_val} != direct {direct}")
    return LayeredSpec(best_spec), best_val
