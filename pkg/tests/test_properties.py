"""Randomized property checks on permutations and flips."""

from hypothesis import given, settings
from hypothesis import strategies as st

from schubcomp.bpd import rothe_bpd
from schubcomp.evaluate import upsilon
from schubcomp.perm import (
    Perm, compose, inverse, length, pack, pack_compact, parse_permutation, unpack,
    unpack_compact,
)

perms = st.integers(1, 25).flatmap(lambda n: st.permutations(list(range(1, n + 1))))
small = st.integers(2, 7).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


@given(perms)
def test_pack_roundtrip(w):
    p = Perm(tuple(w))
    assert unpack(pack(p), p.n) == p
    if p.n <= 16:
        assert unpack_compact(pack_compact(p), p.n) == p


@given(perms)
def test_text_roundtrip(w):
    p = Perm(tuple(w))
    assert parse_permutation(",".join(map(str, p))) == p


@given(perms)
def test_inverse_involution_and_length(w):
    p = Perm(tuple(w))
    q = inverse(p)
    assert inverse(q) == p
    assert compose(p, q) == Perm.identity(p.n)
    assert length(q) == length(p)


@settings(max_examples=40, deadline=None)
@given(small)
def test_rothe_and_formula_agreement(w):
    b = rothe_bpd(tuple(w))
    assert b.is_reduced() and b.cross_count == length(w)
    vals = {upsilon(w, f, a).value for f, a in
            [("descent", "rational"), ("transition", "exact"), ("cotransition", "exact")]}
    assert len(vals) == 1
