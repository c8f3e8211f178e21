"""Why coupling from the past fails on reduced BPDs.

Everything here runs on an explicit state space: all RBPDs of a small n,
their lattice order, and a transition table ``table[state, update]`` for the
internal-rejection coupling (a chain takes the shared flip iff the flip
exists for it and keeps it reduced).  Update ``u`` encodes the vertex
``u // 2`` (row-major over the (n-1)^2 interior vertices) and the direction
``u % 2`` (1 = up).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import kernels as K
from .bpd import Bpd, b_id, b_w0, enumerate_asms, enumerate_rbpds, height, meet
from .moves import FLIP_KINDS, FLIP_TABLE, Direction, try_flip
from .stats import pearson_chi2


@dataclass(frozen=True)
class SharedUpdate:
    vertex: tuple
    direction: Direction

    def encode(self, n: int) -> int:
        i, j = self.vertex
        return 2 * ((i - 1) * (n - 1) + (j - 1)) + int(self.direction)

    @classmethod
    def decode(cls, u: int, n: int) -> "SharedUpdate":
        v, d = divmod(int(u), 2)
        return cls((v // (n - 1) + 1, v % (n - 1) + 1), Direction(d))


def internal_rejection_step(b: Bpd, update: SharedUpdate) -> Bpd:
    try_flip(b, update.vertex, update.direction)
    return b


class StateSpace:
    """All RBPDs of size n with order and coupled transition table."""

    def __init__(self, n: int):
        self.n = n
        self.states = enumerate_rbpds(n)
        self.index = {s.key(): k for k, s in enumerate(self.states)}
        H = np.array([height(s).ravel() for s in self.states])
        self.leq = (H[:, None, :] <= H[None, :, :]).all(axis=2)
        self.num_updates = 2 * (n - 1) ** 2
        self.table = np.empty((len(self.states), self.num_updates), np.int64)
        for k, s in enumerate(self.states):
            for u in range(self.num_updates):
                c = s.copy()
                internal_rejection_step(c, SharedUpdate.decode(u, n))
                self.table[k, u] = self.index[c.key()]
        self.low = self.index[b_w0(n).key()]
        self.high = self.index[b_id(n).key()]

    def __len__(self):
        return len(self.states)


_SPACES = {}


def state_space(n: int) -> StateSpace:
    if n not in _SPACES:
        _SPACES[n] = StateSpace(n)
    return _SPACES[n]


# -- monotonicity ------------------------------------------------------------

def count_monotonicity_violations(n: int):
    """(ordered pairs X <= Y, flip checks, violations) over all updates."""
    sp = state_space(n)
    xs, ys = np.nonzero(sp.leq)
    violations = 0
    for u in range(sp.num_updates):
        tx, ty = sp.table[xs, u], sp.table[ys, u]
        violations += int((~sp.leq[tx, ty]).sum())
    pairs = len(xs)
    return pairs, pairs * sp.num_updates, violations


def sublattice_failure_pairs(n: int = 4):
    """Unordered RBPD pairs whose lattice meet is not reduced."""
    rb = enumerate_rbpds(n)
    out = []
    for a in range(len(rb)):
        for b in range(a + 1, len(rb)):
            m = meet(rb[a], rb[b])
            if not m.is_reduced():
                out.append((rb[a], rb[b], m))
    return out


def non_reduced_asms(n: int):
    return [b for b in enumerate_asms(n) if not b.is_reduced()]


# -- naive CFTP --------------------------------------------------------------

@njit(cache=True)
def _run_from(table, start, log, T):
    x = start
    for k in range(T - 1, -1, -1):
        x = table[x, log[k]]
    return x


@njit(cache=True)
def _cftp(table, low, high, log, T0, max_T):
    """Doubling search; returns (state or -1 if the log is too short, T)."""
    T = T0
    while T <= max_T:
        if T > log.shape[0]:
            return -1, T
        x = _run_from(table, low, log, T)
        y = _run_from(table, high, log, T)
        if x == y:
            return x, T
        T *= 2
    return -2, T


@njit(cache=True)
def _replay_all(table, leq, low, high, log, T):
    """Run every state through the log; returns (final states, sandwich broken)."""
    N = table.shape[0]
    S = np.arange(N)
    x, y = low, high
    broken = False
    for k in range(T - 1, -1, -1):
        u = log[k]
        x = table[x, u]
        y = table[y, u]
        for s in range(N):
            S[s] = table[S[s], u]
            if not broken and not (leq[x, S[s]] and leq[S[s], y]):
                broken = True
    return S, broken


@dataclass
class CftpRun:
    T: int
    log: np.ndarray          # log[k] is the update at time -(k+1)
    coalesced: bool
    result: int | None       # state index
    space: StateSpace = field(repr=False)

    @property
    def state(self) -> Bpd | None:
        return None if self.result is None else self.space.states[self.result]


def naive_cftp_sample(n: int, rng, max_T: int = 1 << 22, space=None) -> CftpRun:
    """Backward doubling on the two extremal chains under internal rejection.

    Updates for times -T..-1 are drawn once and reused as T doubles; a
    doubling draws the updates for -2T..-(T+1).
    """
    sp = space or state_space(n)
    log = rng.integers(0, sp.num_updates, size=64)
    T = 1
    while True:
        res, T = _cftp(sp.table, sp.low, sp.high, log, T, max_T)
        if res == -1:
            log = np.concatenate([log, rng.integers(0, sp.num_updates, size=len(log))])
            continue
        if res == -2:
            return CftpRun(T, log, False, None, sp)
        return CftpRun(T, log[:T].copy(), True, int(res), sp)


def false_coalescence_trial(n: int, rng, space=None):
    """(false coalescence?, run).  Replays the update log from every RBPD."""
    sp = space or state_space(n)
    run = naive_cftp_sample(n, rng, space=sp)
    if not run.coalesced:
        raise RuntimeError("naive CFTP hit its horizon cap")
    finals, broken = _replay_all(sp.table, sp.leq, sp.low, sp.high, run.log, run.T)
    false = bool((finals != run.result).any())
    if false and not broken:
        raise AssertionError("false coalescence without any order violation")
    return false, run


def false_coalescence_rate(n: int, trials: int, rng):
    sp = state_space(n)
    hits = sum(false_coalescence_trial(n, rng, sp)[0] for _ in range(trials))
    return hits, trials


# -- bias of the naive output ------------------------------------------------

def perm_expected(n: int):
    """{perm: Upsilon_w} read off the enumerated RBPDs."""
    counts = {}
    for s in state_space(n).states:
        w = s.boundary_perm
        counts[w] = counts.get(w, 0) + 1
    return counts


def bias_chi_square(perm_samples, n: int = 4):
    """Pearson test of sampled boundary permutations against Upsilon_w / total."""
    obs = {}
    for p in perm_samples:
        obs[p] = obs.get(p, 0) + 1
    return bias_chi_square_counts(obs, n)


def bias_chi_square_counts(by_perm, n: int = 4):
    """Same test from a {perm: count} tally."""
    ups = perm_expected(n)
    perms = sorted(ups, key=lambda p: p.entries)
    total = sum(ups.values())
    trials = sum(by_perm.get(p, 0) for p in perms)
    expected = [trials * ups[p] / total for p in perms]
    return pearson_chi2([by_perm.get(p, 0) for p in perms], expected)


def naive_cftp_bias(n: int, trials: int, rng):
    """(chi2, df, p, counts by perm) for naive CFTP outputs."""
    sp = state_space(n)
    tally = np.zeros(len(sp), np.int64)
    for _ in range(trials):
        tally[naive_cftp_sample(n, rng, space=sp).result] += 1
    by_perm = {}
    for k, c in enumerate(tally):
        w = sp.states[k].boundary_perm
        by_perm[w] = by_perm.get(w, 0) + int(c)
    chi2, df, p = bias_chi_square_counts(by_perm, n)
    return chi2, df, p, by_perm


# -- coupled rejection (demonstration only) ----------------------------------

def coupled_rejection_step(bpds, update: SharedUpdate):
    """All chains flip iff the flip is legal for every chain.

    This keeps order but does not target the uniform distribution; it exists
    to show why it cannot be used.
    """
    warnings.warn("coupled rejection does not sample uniformly", stacklevel=2)
    trials = [b.copy() for b in bpds]
    ok = all(try_flip(t, update.vertex, update.direction) == K.APPLIED for t in trials)
    return trials if ok else [b.copy() for b in bpds]
