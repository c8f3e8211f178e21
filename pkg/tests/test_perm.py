import itertools
import random

import pytest

from schubcomp.perm import (
    Perm, PermError, all_perms, apply_transposition, bruhat_covers, compose, compositions,
    descents, inverse, is_cover_pair, is_dominant, layered, layered_length, length, maj,
    pack, pack_compact, parse_permutation, rothe_diagram, strip_trailing_fixed_points,
    unpack, unpack_compact,
)


def test_parse_basic():
    assert parse_permutation("1,4,3,2") == Perm((1, 4, 3, 2))


def test_parse_whitespace():
    assert parse_permutation(" 3 , 1 , 4 , 2 ") == Perm((3, 1, 4, 2))


@pytest.mark.parametrize("text", ["2,2,1", "0,1,2", "1,2,4", "1,,2", "a,b", ""])
def test_parse_rejects(text):
    with pytest.raises(PermError):
        parse_permutation(text)


def test_size_cap():
    Perm(tuple(range(1, 26)))
    with pytest.raises(PermError):
        Perm(tuple(range(1, 27)))


def test_call_is_one_based():
    w = Perm((3, 1, 4, 2))
    assert [w(i) for i in range(1, 5)] == [3, 1, 4, 2]
    assert str(w) == "3,1,4,2"


@pytest.mark.parametrize("n", [5, 16, 25])
def test_pack_roundtrip(n):
    rng = random.Random(n)
    for _ in range(10_000):
        e = list(range(1, n + 1))
        rng.shuffle(e)
        w = Perm(tuple(e))
        assert unpack(pack(w), n) == w
        if n <= 16:
            assert unpack_compact(pack_compact(w), n) == w


def test_pack_layout():
    # position i stores w(i) - 1 in bits [5(i-1), 5i)
    assert pack((2, 1)) == 1
    assert pack((1, 2)) == 1 << 5


def test_pack_compact_cap():
    with pytest.raises(PermError):
        pack_compact(tuple(range(1, 18)))


def test_length_examples():
    assert length(Perm.identity(5)) == 0
    assert length(Perm.longest(6)) == 15
    assert length((1, 4, 3, 2)) == 3


def test_length_inverse_and_rothe_s5():
    for w in all_perms(5):
        assert length(w) == length(inverse(w))
        assert len(rothe_diagram(w)) == length(w)


def test_descents_and_maj():
    w = (3, 1, 4, 2)
    assert descents(w) == {1, 3}
    assert maj(w) == 4


def test_compose_inverse():
    for w in all_perms(4):
        assert compose(w, inverse(w)) == Perm.identity(4)


def test_transposition_and_covers_s4():
    for w in all_perms(4):
        brute = []
        for a, b in itertools.combinations(range(1, 5), 2):
            if length(apply_transposition(w, a, b)) == length(w) + 1:
                brute.append((a, b))
        assert bruhat_covers(w) == brute
        for a, b in brute:
            assert is_cover_pair(w, a, b)


def test_dominant():
    assert is_dominant((1, 2, 3))
    assert is_dominant((3, 2, 1))
    assert not is_dominant((1, 3, 2))


def test_strip_fixed_points():
    assert strip_trailing_fixed_points((2, 1, 3, 4)) == Perm((2, 1))
    assert strip_trailing_fixed_points((1, 2, 3)) == Perm((1,))


def test_layered_examples():
    assert layered((1, 2, 5)) == Perm((1, 3, 2, 8, 7, 6, 5, 4))
    assert layered((3,)) == Perm.longest(3)


def test_layered_length_matches():
    for n in range(1, 9):
        for c in compositions(n):
            assert layered_length(c) == length(layered(c))


def test_compositions_order_and_count():
    cs = list(compositions(4))
    assert len(cs) == 8
    assert cs == sorted(cs)
