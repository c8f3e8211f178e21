import numpy as np
import pytest

from schubcomp import cftp
from schubcomp.bpd import b_id, b_w0, from_text, height, rothe_bpd
from schubcomp.mcmc import make_rng
from schubcomp.moves import Direction, try_flip
from schubcomp.perm import Perm


def test_update_encoding_roundtrip():
    n = 5
    for u in range(2 * (n - 1) ** 2):
        assert cftp.SharedUpdate.decode(u, n).encode(n) == u


def test_no_flip_leaves_state():
    b = b_id(4)
    out = cftp.internal_rejection_step(b.copy(), cftp.SharedUpdate((2, 2), Direction.UP))
    assert out == b


def test_order_breaking_pair():
    X, Y = rothe_bpd((3, 2, 1, 4)), rothe_bpd((3, 1, 2, 4))
    u = cftp.SharedUpdate((3, 3), Direction.DOWN)
    Xp = cftp.internal_rejection_step(X.copy(), u)
    Yp = cftp.internal_rejection_step(Y.copy(), u)
    assert Xp == X and Yp != Y
    assert (height(X) <= height(Y)).all()
    assert not (height(Xp) <= height(Yp)).all()


def test_state_space_table_matches_flip_semantics():
    sp = cftp.state_space(4)
    assert len(sp) == 41
    for k, s in enumerate(sp.states):
        for u in range(sp.num_updates):
            upd = cftp.SharedUpdate.decode(u, 4)
            c = s.copy()
            try_flip(c, upd.vertex, upd.direction)
            assert sp.states[sp.table[k, u]] == c
    assert sp.states[sp.low] == b_w0(4) and sp.states[sp.high] == b_id(4)


@pytest.mark.parametrize("n,expected", [(3, (26, 208, 0)), (4, (618, 11124, 16))])
def test_violation_counts(n, expected):
    assert cftp.count_monotonicity_violations(n) == expected


def test_sublattice_pairs():
    assert cftp.sublattice_failure_pairs(3) == []
    pairs = cftp.sublattice_failure_pairs(4)
    assert len(pairs) == 9
    star = from_text("..r-\n.r+-\nr+jr\n||r+")
    assert all(m == star for _, _, m in pairs)
    bad = cftp.non_reduced_asms(4)
    assert len(bad) == 1 and bad[0] == star


def test_naive_cftp_outputs_reduced_and_log_reuse():
    rng = make_rng(12)
    sp = cftp.state_space(4)
    for _ in range(200):
        run = cftp.naive_cftp_sample(4, rng, space=sp)
        assert run.coalesced and run.state.is_reduced()
        assert run.T & (run.T - 1) == 0 and len(run.log) == run.T
        # the final sweep from both extremes really ends at the result
        x = y = None
        x, y = sp.low, sp.high
        for k in range(run.T - 1, -1, -1):
            x, y = sp.table[x, run.log[k]], sp.table[y, run.log[k]]
        assert x == y == run.result
        # no shorter doubling horizon already coalesced
        if run.T > 1:
            h = run.T // 2
            x, y = sp.low, sp.high
            for k in range(h - 1, -1, -1):
                x, y = sp.table[x, run.log[k]], sp.table[y, run.log[k]]
            assert x != y


def test_log_prefix_stable_across_doublings():
    # the same stream drawn with a smaller initial buffer yields the same log
    a = cftp.naive_cftp_sample(4, make_rng(99))
    b = cftp.naive_cftp_sample(4, make_rng(99))
    assert a.T == b.T and np.array_equal(a.log, b.log)


def test_false_coalescence_none_at_n3():
    hits, trials = cftp.false_coalescence_rate(3, 1000, make_rng(3))
    assert hits == 0


def test_false_coalescence_sanity_n4():
    hits, trials = cftp.false_coalescence_rate(4, 5000, make_rng(4))
    assert 0.04 < hits / trials < 0.11


def test_expected_counts_table():
    ups = cftp.perm_expected(4)
    assert sum(ups.values()) == 41
    assert round(500_000 * ups[Perm((1, 4, 3, 2))] / 41) == 60_976
    assert round(500_000 * 1 / 41) == 12_195


def test_bias_statistic_on_exact_proportions():
    ups = cftp.perm_expected(4)
    samples = [w for w, k in ups.items() for _ in range(k * 100)]
    chi2, df, p = cftp.bias_chi_square(samples, 4)
    assert chi2 == pytest.approx(0.0) and df == 23 and p == pytest.approx(1.0)


def test_coupled_rejection_warns():
    with pytest.warns(UserWarning):
        out = cftp.coupled_rejection_step([b_w0(3), b_id(3)],
                                          cftp.SharedUpdate((1, 1), Direction.UP))
    assert len(out) == 2
