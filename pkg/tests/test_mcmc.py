import math

import numpy as np
import pytest

from schubcomp import kernels as K
from schubcomp.bpd import asm_of, b_w0, enumerate_rbpds, height, rothe_bpd
from schubcomp.mcmc import (
    ChainConfig, ProposalConfig, RectDist, SampleStats, decode_proposal, fluctuation,
    geweke_z, lag1_autocorrelation, make_rng, merge_chains, mixed_difference,
    offset_cdf_table, offset_pmf, propose, run_chain, sample_offset, sample_offsets,
    state_code, step, traced_steps,
)
from schubcomp.moves import Direction

DISTS = list(RectDist)


def within_3sigma(counts, probs):
    counts = np.asarray(counts, float)
    N = counts.sum()
    sd = np.sqrt(N * probs * (1 - probs))
    return bool((np.abs(counts - N * probs) <= 3 * sd + 1e-9).all())


def test_offset_forced_at_one():
    rng = make_rng(1)
    for d in DISTS:
        assert all(sample_offset(rng, d, 1) == 1 for _ in range(20))


def test_geometric_pmf_two():
    assert np.allclose(offset_pmf("geometric", 2), [2 / 3, 1 / 3])


def test_offset_pmfs_shapes():
    k = np.arange(1, 11)
    assert np.allclose(offset_pmf("uniform", 10), np.full(10, 0.1))
    lu = 1 / k
    assert np.allclose(offset_pmf("log-uniform", 10), lu / lu.sum())
    assert np.allclose(offset_pmf("reverse-log-uniform", 10), (lu / lu.sum())[::-1])


@pytest.mark.parametrize("dist", DISTS)
def test_offset_frequencies(dist):
    x = sample_offsets(make_rng(3, int(dist)), dist, 10, size=1_000_000)
    counts = np.bincount(x, minlength=11)[1:]
    assert within_3sigma(counts, offset_pmf(dist, 10))


@pytest.mark.parametrize("dist", DISTS)
def test_kernel_inverse_cdf_agrees(dist):
    cdf = offset_cdf_table(dist, 12)
    u = np.linspace(0, 1, 2001, endpoint=False)
    for d in (1, 5, 11):
        c = np.cumsum(offset_pmf(dist, d))
        c[-1] = 1.0
        want = np.searchsorted(c, u, side="right") + 1
        got = np.array([K.draw_offset(cdf, d, x) for x in u])
        assert np.array_equal(want, got)


def test_flip_probability_bounds():
    with pytest.raises(ValueError):
        ProposalConfig(1.0)
    with pytest.raises(ValueError):
        ProposalConfig(0.0)


def test_n2_single_vertex_fair_directions():
    rng = make_rng(4)
    cfg = ProposalConfig()
    dirs = []
    for _ in range(20_000):
        p = propose(rng, cfg, 2)
        if p.kind == "flip":
            assert p.vertex == (1, 1)
            dirs.append(int(p.direction))
        else:
            assert p.rect == (1, 2, 1, 2)
    up = sum(dirs)
    assert abs(up - len(dirs) / 2) <= 3 * math.sqrt(len(dirs) / 4)


def test_proposal_split_and_corner_marginal():
    n, cfg = 5, ProposalConfig()
    rng = make_rng(5)
    kinds = np.zeros(2)
    corners = np.zeros((n - 1) ** 2)
    for u in rng.random((200_000, 4)):
        p = decode_proposal(u, n, cfg)
        if p.kind == "flip":
            kinds[0] += 1
        else:
            kinds[1] += 1
            i1, i2, j1, j2 = p.rect
            assert 1 <= i1 < i2 <= n and 1 <= j1 < j2 <= n
            corners[(i2 - 2) * (n - 1) + (j2 - 2)] += 1
    assert within_3sigma(kinds, np.array([0.75, 0.25]))
    assert within_3sigma(corners, np.full(len(corners), 1 / len(corners)))


def test_compiled_split_over_a_million_steps():
    st = run_chain(ChainConfig(6, seed=9, burn_in_steps=1_000_000, sample_count=0))
    flips, rects = st.move_counts[:3].sum(), st.move_counts[3:].sum()
    assert within_3sigma([flips, rects], np.array([0.75, 0.25]))


def test_down_flip_at_minimum_is_rejected():
    b = b_w0(4)
    before = b.copy()
    cdf = offset_cdf_table("geometric", 4)
    counts = np.zeros(6, np.int64)
    for u1 in np.linspace(0, 0.999, 9):
        K.one_step(b.tiles, b.colexit, b.st, 0.1, u1, 0.9, 0.0, 0.75, cdf,
                   *_tables(), counts)
    assert b == before


def _tables():
    from schubcomp.moves import FLIP_KINDS, FLIP_TABLE
    return FLIP_TABLE, FLIP_KINDS


def test_step_keeps_reduced():
    b = b_w0(6)
    rng = make_rng(2)
    for _ in range(2000):
        step(b, rng)
        assert b.is_reduced()
    b.verify()


def test_chain_visits_all_states_n4():
    codes = {state_code(s) for s in enumerate_rbpds(4)}
    st = run_chain(ChainConfig(4, seed=1, burn_in_steps=0, thinning=1,
                               sample_count=1_000_000, state_codes=True))
    assert set(np.unique(st.state_codes).tolist()) == codes


def test_moves_respect_invariants():
    b = rothe_bpd((3, 5, 1, 4, 2))
    rng = make_rng(8)
    cfg = ProposalConfig(0.5, "uniform")
    for _ in range(40):
        prev = b.copy()
        rec = traced_steps(b, rng, cfg, 25)
        # replay the batch one record at a time through the invariant checks
        b2 = prev
        for r in rec:
            h0 = height(b2)
            w0 = b2.boundary_perm
            if r["accepted"]:
                if r["kind"] == "flip":
                    i, j = r["vertex"]
                    d = Direction.UP if r["direction"] == "up" else Direction.DOWN
                    assert K.APPLIED == _try(b2, (i, j), d)
                    diff = height(b2) - h0
                    assert np.count_nonzero(diff) == 1 and abs(diff[i, j]) == 1
                else:
                    i1, i2, j1, j2 = r["rect"]
                    mode = 1 if r["move"] == "droop" else 2
                    K.rect_apply(b2.tiles, i1 - 1, i2 - 1, j1 - 1, j2 - 1, mode)
                    assert b2.boundary_perm == w0
            assert b2.is_reduced()
        assert b2 == b


def _try(b, v, d):
    from schubcomp.moves import try_flip
    return try_flip(b, v, d)


def test_empty_run():
    st = run_chain(ChainConfig(5, seed=0, burn_in_steps=100, sample_count=0))
    assert st.B == 0 and len(st.length_trace) == 0


def test_deterministic_given_seed():
    cfg = ChainConfig(8, seed=42, burn_in_steps=10_000, thinning=37, sample_count=300)
    a, b = run_chain(cfg), run_chain(cfg)
    assert np.array_equal(a.length_trace, b.length_trace)
    assert np.array_equal(a.height_sum, b.height_sum)
    c = run_chain(cfg, chain=1)
    assert not np.array_equal(a.length_trace, c.length_trace)


def test_debug_mode_matches_release():
    base = dict(n=5, seed=3, burn_in_steps=500, thinning=7, sample_count=50)
    a = run_chain(ChainConfig(**base))
    b = run_chain(ChainConfig(**base, debug=True))
    assert np.array_equal(a.length_trace, b.length_trace)


def test_snapshot_path_matches_block_path():
    base = dict(n=6, seed=5, burn_in_steps=1000, thinning=11, sample_count=40, archive=True)
    a = run_chain(ChainConfig(**base))
    b = run_chain(ChainConfig(**base, snapshots=5))
    assert np.array_equal(a.length_trace, b.length_trace)
    assert np.array_equal(a.archive, b.archive)
    assert len(b.snapshots) == 5


def test_stats_invariants_and_merge():
    cfg = ChainConfig(7, seed=11, burn_in_steps=5000, thinning=50, sample_count=400,
                      archive=True)
    parts = {c: run_chain(cfg, c) for c in range(3)}
    st = merge_chains(parts)
    assert st.B == 1200
    assert (st.perm_matrix_sum.sum(axis=0) == st.B).all()
    assert (st.perm_matrix_sum.sum(axis=1) == st.B).all()
    hb = st.height_avg
    n = 7
    assert np.allclose(hb[0], 0) and np.allclose(hb[:, 0], 0)
    assert np.allclose(hb[n], np.arange(n + 1)) and np.allclose(hb[:, n], np.arange(n + 1))
    assert math.isclose(st.mixed_difference().sum(), n)
    # merge order does not matter for the sums
    alt = parts[2].merge(parts[0]).merge(parts[1])
    assert np.array_equal(alt.perm_matrix_sum, st.perm_matrix_sum)
    assert np.array_equal(alt.height_sum, st.height_sum)
    # archive rows agree with the permutation matrix
    pm = np.zeros((n, n), np.int64)
    for row in st.archive:
        pm[np.arange(n), row - 1] += 1
    assert np.array_equal(pm, st.perm_matrix_sum)


def test_mixed_difference_and_fluctuation_single_sample():
    b = rothe_bpd((2, 4, 1, 3))
    h = height(b)
    assert np.array_equal(mixed_difference(h), asm_of(b))
    assert not fluctuation(h, h.astype(float)).any()
    with pytest.raises(ValueError):
        fluctuation(h, h[:-1])


def test_lag1_examples():
    assert math.isclose(lag1_autocorrelation([0, 1] * 50), -1.0)
    iid = make_rng(6).random(100_000)
    assert abs(lag1_autocorrelation(iid)) < 0.02
    with pytest.raises(ValueError):
        lag1_autocorrelation([3, 3, 3, 3])


def test_geweke_on_stationary_noise():
    z = geweke_z(make_rng(7).normal(size=20_000))
    assert abs(z) < 4


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="not reproduced at desk scale: at n = 20 and n = 30 "
                   "the geometric and uniform lag-1 values overlap within seed noise")
def test_geometric_decorrelates_faster_than_uniform():
    vals = {}
    for dist in ("geometric", "uniform"):
        cfg = ChainConfig(20, seed=2026, burn_in_steps=2_000_000, thinning=1000,
                          sample_count=5000, proposal=ProposalConfig(0.75, dist))
        vals[dist] = lag1_autocorrelation(run_chain(cfg).length_trace)
    assert vals["geometric"] < vals["uniform"]
