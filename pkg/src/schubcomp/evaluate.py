"""Three recurrences for Upsilon_w = S_w(1, ..., 1).

* descent:      Upsilon_w = sum_{i in Des(w)} (i / l(w)) Upsilon_{w s_i},  Upsilon_e = 1
* transition:   Upsilon_w = Upsilon_v + sum_i Upsilon_{v (i, r)},  v = w (r, s);
                dominant permutations have Upsilon = 1
* cotransition: Upsilon_w = sum over covers v of w moving position i of Upsilon_v,
                Upsilon_{w0} = 1, with i = min{j : j + w(j) <= n}

Descent and cotransition run as breadth-first sort-reduce sweeps over whole
length levels (see ``frontier``).  Transition runs as an iterative depth-first
search with memoization, and cotransition can do the same.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import frontier as fr
from .errors import RationalOverflowError, ResourceCapExceeded
from .perm import Perm, as_perm, length, strip_trailing_fixed_points

FLOAT_EXACT_LIMIT = 2 ** 53
RATIONAL_LIMIT = 2 ** 127
MEMO_CAP = 2 ** 27
MEMO_CAP_FLOAT = 3 * 2 ** 26


class Arith(IntEnum):
    EXACT = 0
    RATIONAL = 1
    FLOAT = 2

    @classmethod
    def parse(cls, x) -> "Arith":
        if isinstance(x, cls):
            return x
        return cls[str(x).upper()]


@dataclass(frozen=True)
class EvalValue:
    """A computed Upsilon value and the backend that produced it.

    ``approximate`` is set for float results beyond 2^53, where the float no
    longer pins down a unique integer.
    """

    arith: Arith
    value: object
    approximate: bool = False

    @property
    def exact(self) -> bool:
        return self.arith != Arith.FLOAT

    def __int__(self):
        if self.arith == Arith.FLOAT:
            return int(round(self.value))
        return int(self.value)

    def decimal(self) -> str:
        """Decimal string; floats print their nearest integer when integral."""
        if self.arith == Arith.FLOAT:
            v = self.value
            if math.isfinite(v) and v == int(v):
                return str(int(v))
            return repr(v)
        if isinstance(self.value, Fraction):
            if self.value.denominator == 1:
                return str(self.value.numerator)
            return f"{self.value.numerator}/{self.value.denominator}"
        return str(self.value)

    def __str__(self):
        return self.decimal()


def _wrap(arith: Arith, v) -> EvalValue:
    if arith == Arith.FLOAT:
        v = float(v)
        return EvalValue(arith, v, approximate=abs(v) > FLOAT_EXACT_LIMIT)
    if arith == Arith.RATIONAL:
        v = Fraction(v)
        if v.denominator != 1:
            raise ArithmeticError(f"non-integral specialization {v}")
        return EvalValue(arith, v)
    return EvalValue(arith, int(v))


class MemoTable:
    """Dict with an entry ceiling; past the cap new inserts are dropped."""

    def __init__(self, cap: int = MEMO_CAP):
        self.cap = cap
        self.data = {}
        self.skipped = 0

    def get(self, key, default=None):
        return self.data.get(key, default)

    def __contains__(self, key):
        return key in self.data

    def put(self, key, value):
        if len(self.data) < self.cap or key in self.data:
            self.data[key] = value
        else:
            self.skipped += 1

    def __len__(self):
        return len(self.data)


# -- pivots ------------------------------------------------------------------

class TransitionPivot(NamedTuple):
    r: int
    s: int


def _pivot(w: tuple):
    """0-based (r, s) for the transition step, or None if w is dominant."""
    n = len(w)
    pm = [0] * n  # pm[r] = min(w[:r])
    m = n + 1
    for r in range(n):
        pm[r] = m
        if w[r] < m:
            m = w[r]
    for r in range(n - 1, 0, -1):
        lo, hi = pm[r], w[r]
        if lo >= hi:
            continue
        for s in range(n - 1, r, -1):
            if lo < w[s] < hi:
                return r, s
    return None


def transition_pivot(w) -> TransitionPivot | None:
    p = _pivot(tuple(w))
    if p is None:
        return None
    return TransitionPivot(p[0] + 1, p[1] + 1)


def _transition_children(w: tuple, r: int, s: int) -> list:
    v = list(w)
    v[r], v[s] = v[s], v[r]
    out = [tuple(v)]
    top = v[r]
    best = 0  # largest value below top seen between i and r, scanning leftwards
    for i in range(r - 1, -1, -1):
        x = v[i]
        if best < x < top:
            u = v.copy()
            u[i], u[r] = top, x
            out.append(tuple(u))
            best = x
    return out


def _cot_index(w: tuple) -> int:
    n = len(w)
    for j in range(n):
        if j + 1 + w[j] <= n:
            return j
    return -1


def cotransition_index(w) -> int:
    i = _cot_index(tuple(w))
    if i < 0:
        raise ValueError("the longest permutation has no cotransition index")
    return i + 1


def _cot_children(w: tuple, i: int) -> list:
    n = len(w)
    wi = w[i]
    out = []
    best = n + 1
    for b in range(i + 1, n):
        y = w[b]
        if wi < y < best:
            u = list(w)
            u[i], u[b] = y, wi
            out.append(tuple(u))
            best = y
    return out


# -- depth-first evaluators --------------------------------------------------

def _dfs(root: tuple, children_of, arith: Arith, memo: MemoTable):
    """Iterative post-order sum over a recursion DAG.

    ``children_of(w)`` returns None at a base case (value 1) or a child list.
    Frames keep the full child list so the stack never re-derives it.
    """
    one = 1.0 if arith == Arith.FLOAT else 1
    zero = 0.0 if arith == Arith.FLOAT else 0
    kids = children_of(root)
    if kids is None:
        return one
    stack = [[root, kids, 0, zero]]
    result = None
    while stack:
        frame = stack[-1]
        key, kids, idx, acc = frame
        if idx < len(kids):
            c = kids[idx]
            frame[2] = idx + 1
            val = memo.get(c)
            if val is None:
                ck = children_of(c)
                if ck is None:
                    val = one
                else:
                    stack.append([c, ck, 0, zero])
                    continue
            frame[3] = acc + val
        else:
            stack.pop()
            memo.put(key, acc)
            if stack:
                stack[-1][3] += acc
            else:
                result = acc
    return result


def upsilon_transition(w, arith="exact", memo_cap=None) -> EvalValue:
    """Upsilon_w by the transition recurrence.

    >>> upsilon_transition((1, 4, 3, 2)).value
    5
    """
    arith = Arith.parse(arith)
    if arith == Arith.RATIONAL:
        arith = Arith.EXACT
    w = strip_trailing_fixed_points(as_perm(w)).entries
    cap = memo_cap or (MEMO_CAP_FLOAT if arith == Arith.FLOAT else MEMO_CAP)

    def children_of(u):
        p = _pivot(u)
        if p is None:
            return None
        return _transition_children(u, *p)

    return _wrap(arith, _dfs(w, children_of, arith, MemoTable(cap)))


def _cotransition_dfs(w: tuple, arith: Arith, cap: int):
    def children_of(u):
        i = _cot_index(u)
        if i < 0:
            return None
        return _cot_children(u, i)

    return _dfs(w, children_of, arith, MemoTable(cap))


# -- breadth-first evaluators ------------------------------------------------

def _cotransition_bfs(w: tuple, arith: Arith, cap: int):
    n = len(w)
    top = n * (n - 1) // 2
    L = length(w)
    P = np.array([w], np.uint8)
    V = np.array([1.0 if arith == Arith.FLOAT else 1],
                 np.float64 if arith == Arith.FLOAT else np.int64)
    pos = np.arange(1, n + 1)
    while L < top:
        if arith != Arith.FLOAT:
            V = fr.ensure_capacity(V, top)
        m = len(P)
        i = np.argmax((P + pos[None, :]) <= n, axis=1)
        rows = np.arange(m)
        wi = P[rows, i]
        curmin = np.full(m, n + 1, np.uint8)
        kids, vals = [], []
        for b in range(1, n):
            col = P[:, b]
            above = (b > i) & (col > wi)
            valid = above & (col < curmin)
            if valid.any():
                r = np.flatnonzero(valid)
                C = P[r]
                C[np.arange(len(r)), i[r]] = col[r]
                C[:, b] = wi[r]
                kids.append(C)
                vals.append(V[r])
            np.minimum(curmin, np.where(above, col, curmin), out=curmin)
        C = np.concatenate(kids)
        fr.check_cap(len(C), cap, "cotransition")
        P, V = fr.sort_reduce(C, np.concatenate(vals))
        L += 1
    return V[0]


def _check_rational(V):
    for x in V:
        if abs(x.numerator) >= RATIONAL_LIMIT or x.denominator >= RATIONAL_LIMIT:
            raise RationalOverflowError(f"rational {x} exceeds 128 bits")


def _descent_bfs(w: tuple, arith: Arith, cap: int):
    n = len(w)
    L = length(w)
    P = np.array([w], np.uint8)
    if arith == Arith.FLOAT:
        V = np.array([1.0])
    else:
        V = np.array([Fraction(1)], dtype=object)
    while L > 0:
        kids, vals = [], []
        for c in range(n - 1):
            mask = P[:, c] > P[:, c + 1]
            if mask.any():
                C = P[mask]
                C[:, [c, c + 1]] = C[:, [c + 1, c]]
                kids.append(C)
                if arith == Arith.FLOAT:
                    # weight first, then scale: mirrors i/l(w) * Upsilon
                    vals.append(V[mask] * ((c + 1) / L))
                else:
                    vals.append(V[mask] * Fraction(c + 1, L))
        C = np.concatenate(kids)
        fr.check_cap(len(C), cap, "descent")
        P, V = fr.sort_reduce(C, np.concatenate(vals))
        if arith != Arith.FLOAT:
            _check_rational(V)
        L -= 1
    return V[0]


def upsilon_descent(w, arith="rational", frontier_cap=None) -> EvalValue:
    """Upsilon_w by the descent recurrence ("exact" is served by rationals).

    >>> upsilon_descent((2, 1, 4, 3)).value
    Fraction(3, 1)
    """
    arith = Arith.parse(arith)
    if arith == Arith.EXACT:
        arith = Arith.RATIONAL
    w = strip_trailing_fixed_points(as_perm(w)).entries
    if length(w) == 0:
        return _wrap(arith, 1)
    cap = frontier_cap or fr.default_frontier_cap(len(w))
    return _wrap(arith, _descent_bfs(w, arith, cap))


def upsilon_cotransition(w, arith="exact", mode="bfs", frontier_cap=None,
                         memo_cap=None) -> EvalValue:
    """Upsilon_w by the cotransition recurrence.

    >>> upsilon_cotransition((1, 4, 3, 2)).value
    5
    """
    arith = Arith.parse(arith)
    if arith == Arith.RATIONAL:
        arith = Arith.EXACT
    w = strip_trailing_fixed_points(as_perm(w)).entries
    if _cot_index(w) < 0:
        return _wrap(arith, 1)
    if mode == "dfs":
        cap = memo_cap or (MEMO_CAP_FLOAT if arith == Arith.FLOAT else MEMO_CAP)
        return _wrap(arith, _cotransition_dfs(w, arith, cap))
    if mode != "bfs":
        raise ValueError(f"unknown mode {mode!r}")
    cap = frontier_cap or fr.default_frontier_cap(len(w))
    return _wrap(arith, _cotransition_bfs(w, arith, cap))


FORMULAS = {
    "descent": upsilon_descent,
    "transition": upsilon_transition,
    "cotransition": upsilon_cotransition,
}


def upsilon(w, formula="cotransition", arith="exact", mode="bfs") -> EvalValue:
    if formula == "cotransition":
        return upsilon_cotransition(w, arith, mode)
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula {formula!r}")
    return FORMULAS[formula](w, arith)


def upsilon_int(w) -> int:
    """Shortcut used by the test suites and sampler diagnostics."""
    return upsilon_cotransition(w).value
