"""Brute-force counts used to validate the recurrences.

Both oracles work straight from definitions and share no code with the
recurrences beyond the Perm helpers.
"""

import itertools
import math
from collections import Counter
from fractions import Fraction

from .evaluate import Arith, EvalValue
from .perm import as_perm, length


def reduced_words(w):
    """Yield every reduced word (a_1, ..., a_l) with w = s_{a_1} ... s_{a_l}."""
    w = tuple(as_perm(w))

    def rec(u):
        u = list(u)
        if all(u[k] == k + 1 for k in range(len(u))):
            yield ()
            return
        for i in range(len(u) - 1):
            if u[i] > u[i + 1]:
                v = u.copy()
                v[i], v[i + 1] = v[i + 1], v[i]
                for word in rec(v):
                    yield word + (i + 1,)

    yield from rec(w)


def upsilon_reduced_words_oracle(w) -> EvalValue:
    w = as_perm(w)
    ell = length(w)
    total = sum(math.prod(word) for word in reduced_words(w))
    val = Fraction(total, math.factorial(ell))
    if val.denominator != 1:
        raise AssertionError(f"reduced-word average not integral for {w}: {val}")
    return EvalValue(Arith.EXACT, val.numerator)


def staircase_cells(n):
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i + j <= n]


def trace_pipe_dream(n, crosses):
    """Permutation read off a staircase pipe dream.

    The pipe entering row i from the west leaves through the top of column
    w(i).  Cells in ``crosses`` are crossings, other staircase cells are
    bumps, and antidiagonal cells (i + j = n + 1) turn the pipe north.
    """
    out = []
    for start in range(1, n + 1):
        r, c, east = start, 1, True
        while r >= 1:
            if r + c == n + 1:
                east = False
                r -= 1
                continue
            if (r, c) not in crosses:
                east = not east
            if east:
                c += 1
            else:
                r -= 1
        out.append(c)
    return tuple(out)


def upsilon_pipedream_oracle(w) -> EvalValue:
    """Count reduced pipe dreams with boundary permutation w (n <= 7)."""
    w = tuple(as_perm(w))
    n = len(w)
    ell = length(w)
    count = 0
    for chosen in itertools.combinations(staircase_cells(n), ell):
        # ell crossings producing a permutation of length ell means no pair
        # of pipes crosses twice
        if trace_pipe_dream(n, set(chosen)) == w:
            count += 1
    return EvalValue(Arith.EXACT, count)


def pipedream_census(n):
    """Reduced pipe dream counts for every w in S_n in one sweep."""
    cells = staircase_cells(n)
    tally = Counter()
    for mask in range(1 << len(cells)):
        chosen = {cells[k] for k in range(len(cells)) if mask >> k & 1}
        w = trace_pipe_dream(n, chosen)
        if length(w) == len(chosen):
            tally[w] += 1
    return dict(tally)
