"""Uniform sampler over reduced BPDs: 2x2 flips mixed with rectangle moves.

A step consumes four uniforms (u0, u1, u2, u3):
  u0 < p_flip   -> flip at interior vertex int(u1 * (n-1)^2) (row-major),
                   direction up iff u2 < 1/2;
  otherwise     -> rectangle whose SE corner is cell int(u1 * (n-1)^2) of
                   {2..n}^2 (row-major), with row/column offsets drawn from
                   u2 and u3 by inverse CDF.
The proposal never looks at the current state, so every move and its inverse
are attempted with equal probability.  Rejected proposals hold the chain.

Randomness is numpy's Philox counter-based generator keyed by
``seed XOR chain`` so chains are independent and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import kernels as K
from .bpd import Bpd, b_id, b_w0, height
from .bpd import mixed_difference as _mixed
from .moves import FLIP_KINDS, FLIP_TABLE, Direction

_MASK64 = (1 << 64) - 1
CHUNK_STEPS = 1 << 14        # spot-check interval for caches and reducedness


class RectDist(IntEnum):
    GEOMETRIC = 0
    UNIFORM = 1
    LOG_UNIFORM = 2
    REVERSE_LOG_UNIFORM = 3

    @classmethod
    def parse(cls, x):
        if isinstance(x, cls):
            return x
        return cls[str(x).upper().replace("-", "_")]


def offset_weights(dist, dmax: int) -> np.ndarray:
    """Unnormalized weights for offsets 1..dmax."""
    k = np.arange(1, dmax + 1, dtype=float)
    dist = RectDist.parse(dist)
    if dist == RectDist.GEOMETRIC:
        return 0.5 ** k
    if dist == RectDist.UNIFORM:
        return np.ones(dmax)
    if dist == RectDist.LOG_UNIFORM:
        return 1.0 / k
    return 1.0 / (dmax + 1 - k)


def offset_pmf(dist, dmax: int) -> np.ndarray:
    w = offset_weights(dist, dmax)
    return w / w.sum()


def offset_cdf_table(dist, n: int) -> np.ndarray:
    """Row d holds the CDF of the offset law truncated at d (1 <= d <= n-1)."""
    cdf = np.ones((n, max(n - 1, 1)), float)
    for d in range(1, n):
        c = np.cumsum(offset_pmf(dist, d))
        c[-1] = 1.0
        cdf[d, :d] = c
    return cdf


def sample_offsets(rng, dist, dmax: int, size=None):
    """Offsets in 1..dmax by inverse CDF (the same rule the compiled step uses)."""
    if dmax < 1:
        raise ValueError("dmax must be >= 1")
    c = np.cumsum(offset_pmf(dist, dmax))
    c[-1] = 1.0
    return np.searchsorted(c, rng.random(size), side="right") + 1


def sample_offset(rng, dist, dmax: int) -> int:
    return int(sample_offsets(rng, dist, dmax))


@dataclass(frozen=True)
class ProposalConfig:
    flip_probability: float = 0.75
    rect_distribution: RectDist = RectDist.GEOMETRIC

    def __post_init__(self):
        if not 0.0 < self.flip_probability < 1.0:
            raise ValueError("flip_probability must lie in (0, 1)")
        object.__setattr__(self, "rect_distribution", RectDist.parse(self.rect_distribution))


@dataclass(frozen=True)
class Proposal:
    kind: str                # "flip" or "rect"
    vertex: tuple = None     # flips: 1-based interior vertex
    direction: Direction = None
    rect: tuple = None       # rects: 1-based (i1, i2, j1, j2)


def decode_proposal(u, n: int, config: ProposalConfig, cdf=None) -> Proposal:
    """Map four uniforms to a proposal exactly as the compiled step does."""
    m = n - 1
    idx = min(int(u[1] * m * m), m * m - 1)
    if u[0] < config.flip_probability:
        d = Direction.UP if u[2] < 0.5 else Direction.DOWN
        return Proposal("flip", (idx // m + 1, idx % m + 1), d)
    if cdf is None:
        cdf = offset_cdf_table(config.rect_distribution, n)
    i2, j2 = idx // m + 1, idx % m + 1          # 0-based SE cell
    i1 = i2 - K.draw_offset(cdf, i2, u[2])
    j1 = j2 - K.draw_offset(cdf, j2, u[3])
    return Proposal("rect", rect=(i1 + 1, i2 + 1, j1 + 1, j2 + 1))


def propose(rng, config: ProposalConfig, n: int) -> Proposal:
    if n < 2:
        raise ValueError("need n >= 2")
    return decode_proposal(rng.random(4), n, config)


def step(b: Bpd, rng, config: ProposalConfig = ProposalConfig(), cdf=None) -> int:
    """One step in place; returns the outcome code of the compiled step
    (0 no flip, 1 rejected flip, 2 flip, 3 no rect, 4 droop, 5 undroop)."""
    if cdf is None:
        cdf = offset_cdf_table(config.rect_distribution, b.n)
    u = rng.random(4)
    counts = np.zeros(6, np.int64)
    return int(K.one_step(b.tiles, b.colexit, b.st, u[0], u[1], u[2], u[3],
                          config.flip_probability, cdf, FLIP_TABLE, FLIP_KINDS, counts))


def traced_steps(b: Bpd, rng, config: ProposalConfig, steps: int) -> list:
    """Run ``steps`` steps in place, returning one JSON-ready record each."""
    cdf = offset_cdf_table(config.rect_distribution, b.n)
    counts = np.zeros(6, np.int64)
    log = []
    for s in range(steps):
        u = rng.random(4)
        prop = decode_proposal(u, b.n, config, cdf)
        res = K.one_step(b.tiles, b.colexit, b.st, u[0], u[1], u[2], u[3],
                         config.flip_probability, cdf, FLIP_TABLE, FLIP_KINDS, counts)
        rec = {"step": s, "kind": prop.kind}
        if prop.kind == "flip":
            rec["vertex"] = list(prop.vertex)
            rec["direction"] = prop.direction.name.lower()
            rec["accepted"] = res == K.APPLIED
        else:
            rec["rect"] = list(prop.rect)
            rec["accepted"] = res > 3
            if res > 3:
                rec["move"] = "droop" if res == 4 else "undroop"
        log.append(rec)
    return log


def make_rng(seed: int, chain: int = 0):
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(chain)) & _MASK64))


@dataclass
class ChainConfig:
    n: int
    seed: int = 0
    start: object = "w0"          # "w0", "id", or a Bpd
    burn_in_steps: int = 10_000_000
    thinning: int = 100_000
    sample_count: int = 0
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    archive: bool = False         # keep boundary permutation of every sample
    state_codes: bool = False     # keep base-6 tile codes (n <= 4)
    snapshots: int = 0            # keep heights of the last k samples
    debug: bool = False           # verify caches after every step

    def __post_init__(self):
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.sample_count < 0 or self.burn_in_steps < 0:
            raise ValueError("counts must be non-negative")
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.state_codes and self.n > 4:
            raise ValueError("state codes only fit for n <= 4")


@dataclass
class SampleStats:
    n: int
    B: int
    perm_matrix_sum: np.ndarray      # [i, j]: samples with w(i+1) = j+1
    height_sum: np.ndarray
    length_trace: np.ndarray
    archive: np.ndarray | None = None
    state_codes: np.ndarray | None = None
    snapshots: list = field(default_factory=list)
    move_counts: np.ndarray = field(default_factory=lambda: np.zeros(6, np.int64))

    @classmethod
    def empty(cls, n):
        return cls(n, 0, np.zeros((n, n), np.int64), np.zeros((n + 1, n + 1), np.int64),
                   np.zeros(0, np.int64))

    @property
    def perm_matrix_avg(self):
        return self.perm_matrix_sum / self.B

    @property
    def height_avg(self):
        return self.height_sum / self.B

    def mixed_difference(self):
        return mixed_difference(self.height_avg)

    def fluctuations(self):
        hbar = self.height_avg
        return [fluctuation(h, hbar) for h in self.snapshots]

    def merge(self, other: "SampleStats") -> "SampleStats":
        if other.n != self.n:
            raise ValueError("cannot merge stats of different n")

        def cat(a, b):
            if a is None or b is None:
                return None
            return np.concatenate([a, b])

        return SampleStats(
            self.n, self.B + other.B,
            self.perm_matrix_sum + other.perm_matrix_sum,
            self.height_sum + other.height_sum,
            np.concatenate([self.length_trace, other.length_trace]),
            cat(self.archive, other.archive), cat(self.state_codes, other.state_codes),
            self.snapshots + other.snapshots, self.move_counts + other.move_counts)


def merge_chains(by_chain: dict) -> SampleStats:
    """Combine per-chain stats in chain-index order."""
    keys = sorted(by_chain)
    out = by_chain[keys[0]]
    for k in keys[1:]:
        out = out.merge(by_chain[k])
    return out


def _start(config: ChainConfig) -> Bpd:
    s = config.start
    if isinstance(s, Bpd):
        if not s.is_reduced():
            raise ValueError("start BPD must be reduced")
        return s.copy()
    if s in ("w0", "rothe_w0"):
        return b_w0(config.n)
    if s in ("id", "rothe_id"):
        return b_id(config.n)
    raise ValueError(f"unknown start {s!r}")


def _check(b: Bpd):
    b.verify()
    if not b.is_reduced():
        raise AssertionError("chain left the reduced states")


def _advance(b, rng, steps, p, cdf, counts, debug):
    while steps > 0:
        k = min(steps, CHUNK_STEPS)
        U = rng.random((k, 4))
        if debug:
            for s in range(k):
                K.one_step(b.tiles, b.colexit, b.st, U[s, 0], U[s, 1], U[s, 2], U[s, 3],
                           p, cdf, FLIP_TABLE, FLIP_KINDS, counts)
                _check(b)
        else:
            K.run_steps(b.tiles, b.colexit, b.st, U, p, cdf, FLIP_TABLE, FLIP_KINDS, counts)
            _check(b)
        steps -= k


def run_chain(config: ChainConfig, chain: int = 0, bpd: Bpd | None = None) -> SampleStats:
    """Burn in, then record ``sample_count`` states spaced ``thinning`` steps apart."""
    n = config.n
    rng = make_rng(config.seed, chain)
    b = bpd.copy() if bpd is not None else _start(config)
    p = config.proposal.flip_probability
    cdf = offset_cdf_table(config.proposal.rect_distribution, n)
    stats = SampleStats.empty(n)
    counts = np.zeros(6, np.int64)
    _advance(b, rng, config.burn_in_steps, p, cdf, counts, config.debug)

    S, thin = config.sample_count, config.thinning
    lengths = np.zeros(S, np.int64)
    archive = np.zeros((S if config.archive else 0, n), np.int64)
    codes = np.zeros(S if config.state_codes else 0, np.int64)
    per_block = max(1, CHUNK_STEPS // thin)
    done = 0
    snaps = []
    while done < S:
        k = min(per_block, S - done)
        if config.debug or (config.snapshots and S - done - k < config.snapshots):
            # one sample at a time so intermediate states can be inspected
            for _ in range(k):
                _advance(b, rng, thin, p, cdf, counts, config.debug)
                for c in range(n):
                    stats.perm_matrix_sum[b.colexit[c], c] += 1
                h = height(b)
                stats.height_sum += h
                lengths[done] = b.st[1]
                if archive.shape[0]:
                    archive[done, b.colexit] = np.arange(1, n + 1)
                if codes.shape[0]:
                    codes[done] = _code(b)
                if S - done <= config.snapshots:
                    snaps.append(h)
                done += 1
            continue
        U = rng.random((k * thin, 4))
        K.collect(b.tiles, b.colexit, b.st, U, thin, p, cdf, FLIP_TABLE, FLIP_KINDS,
                  counts, stats.perm_matrix_sum, stats.height_sum, lengths, archive,
                  codes, done)
        _check(b)
        done += k
    stats.B = S
    stats.length_trace = lengths
    stats.archive = archive if config.archive else None
    stats.state_codes = codes if config.state_codes else None
    stats.snapshots = snaps
    stats.move_counts = counts
    return stats


def run_chains(config: ChainConfig, chains: int = 1):
    """Independent chains (stream ``seed XOR c``), merged in chain order."""
    return merge_chains({c: run_chain(config, c) for c in range(chains)})


def _code(b: Bpd) -> int:
    code = 0
    for k in b.tiles.ravel():
        code = code * 6 + int(k)
    return code


def state_code(b: Bpd) -> int:
    return _code(b)


# -- diagnostics -------------------------------------------------------------

def lag1_autocorrelation(trace) -> float:
    x = np.asarray(trace, float)
    if x.size < 3:
        raise ValueError("trace too short")
    a, b = x[:-1], x[1:]
    if a.std() == 0 or b.std() == 0:
        raise ValueError("autocorrelation undefined for a constant trace")
    return float(np.corrcoef(a, b)[0, 1])


def mixed_difference(hbar) -> np.ndarray:
    return _mixed(hbar)


def fluctuation(h, hbar) -> np.ndarray:
    h, hbar = np.asarray(h), np.asarray(hbar)
    if h.shape != hbar.shape:
        raise ValueError("dimension mismatch")
    return h - hbar


def _batch_var(x, batches=20):
    m = len(x) // batches
    if m < 1:
        return x.var(ddof=1) / len(x)
    means = x[: m * batches].reshape(batches, m).mean(axis=1)
    return means.var(ddof=1) / batches


def geweke_z(trace, first: float = 0.1, last: float = 0.5) -> float:
    """Compare the mean of the first and last parts of a trace (batch-means
    variances).  Diagnostic only."""
    x = np.asarray(trace, float)
    a = x[: int(len(x) * first)]
    b = x[len(x) - int(len(x) * last):]
    if len(a) < 2 or len(b) < 2:
        raise ValueError("trace too short")
    v = _batch_var(a) + _batch_var(b)
    if v == 0:
        return 0.0 if a.mean() == b.mean() else math.inf
    return float((a.mean() - b.mean()) / math.sqrt(v))
