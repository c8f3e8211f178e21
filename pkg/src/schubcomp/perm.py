"""Permutations in one-line notation.

Positions and values are 1-based throughout, so ``w(i)`` is ``w[i - 1]`` on the
underlying tuple.  Permutations are plain immutable values; anything that
needs the inverse repeatedly should compute it once and keep it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

MAX_N = 25
COMPACT_MAX_N = 16


class PermError(ValueError):
    pass


@dataclass(frozen=True)
class Perm:
    """A permutation of {1..n} stored as its one-line notation.

    >>> w = Perm((3, 1, 4, 2))
    >>> w(1), w.n, len(w)
    (3, 4, 4)
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", entries)
        n = len(entries)
        if n == 0 or n > MAX_N:
            raise PermError(f"permutation size must be in 1..{MAX_N}, got {n}")
        if sorted(entries) != list(range(1, n + 1)):
            raise PermError(f"not a bijection of 1..{n}: {entries}")

    @property
    def n(self) -> int:
        return len(self.entries)

    def __call__(self, i: int) -> int:
        return self.entries[i - 1]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __str__(self):
        return ",".join(map(str, self.entries))

    def __repr__(self):
        return f"Perm({self})"

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def longest(cls, n: int) -> "Perm":
        return cls(tuple(range(n, 0, -1)))


def as_perm(w) -> Perm:
    return w if isinstance(w, Perm) else Perm(tuple(w))


def parse_permutation(text: str) -> Perm:
    """Parse comma-separated one-line notation.

    >>> parse_permutation(" 3 , 1 , 4 , 2 ")
    Perm(3,1,4,2)
    """
    parts = [p.strip() for p in text.replace(" ", "").split(",")]
    if not parts or any(p == "" for p in parts):
        raise PermError(f"malformed permutation text: {text!r}")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise PermError(f"non-integer entry in {text!r}") from None
    return Perm(vals)


# -- packing -----------------------------------------------------------------

def pack(w: Sequence[int]) -> int:
    """128-bit code, 5 bits per position holding w(i) - 1."""
    code = 0
    for i, x in enumerate(w):
        code |= (x - 1) << (5 * i)
    return code


def unpack(code: int, n: int) -> Perm:
    return Perm(tuple(((code >> (5 * i)) & 31) + 1 for i in range(n)))


def pack_compact(w: Sequence[int]) -> int:
    """64-bit code, 4 bits per position; only for n <= 16."""
    if len(w) > COMPACT_MAX_N:
        raise PermError("compact packing needs n <= 16")
    code = 0
    for i, x in enumerate(w):
        code |= (x - 1) << (4 * i)
    return code


def unpack_compact(code: int, n: int) -> Perm:
    return Perm(tuple(((code >> (4 * i)) & 15) + 1 for i in range(n)))


# -- statistics --------------------------------------------------------------

def length(w: Sequence[int]) -> int:
    """Number of inversions.

    >>> length((3, 1, 4, 2))
    3
    """
    w = tuple(w)
    n = len(w)
    return sum(1 for i in range(n) for j in range(i + 1, n) if w[i] > w[j])


def descents(w: Sequence[int]) -> set:
    w = tuple(w)
    return {i + 1 for i in range(len(w) - 1) if w[i] > w[i + 1]}


def maj(w: Sequence[int]) -> int:
    return sum(descents(w))


def inverse(w: Sequence[int]) -> Perm:
    w = tuple(w)
    inv = [0] * len(w)
    for i, x in enumerate(w):
        inv[x - 1] = i + 1
    return Perm(tuple(inv))


def compose(u: Sequence[int], v: Sequence[int]) -> Perm:
    """(u v)(i) = u(v(i))."""
    u = tuple(u)
    return Perm(tuple(u[x - 1] for x in v))


def apply_transposition(w: Sequence[int], a: int, b: int) -> Perm:
    """w * (a, b): swap the entries in positions a and b."""
    w = list(w)
    n = len(w)
    if not (1 <= a < b <= n):
        raise PermError(f"need 1 <= a < b <= {n}, got ({a}, {b})")
    w[a - 1], w[b - 1] = w[b - 1], w[a - 1]
    return Perm(tuple(w))


def is_cover_pair(w: Sequence[int], a: int, b: int) -> bool:
    """True iff w * (a, b) covers w in Bruhat order (a < b, 1-based)."""
    x, y = w[a - 1], w[b - 1]
    if x > y:
        return False
    return not any(x < w[k] < y for k in range(a, b - 1))


def bruhat_covers(w: Sequence[int]) -> list:
    """All (a, b) with w * (a, b) covering w, in lexicographic order."""
    w = tuple(w)
    n = len(w)
    out = []
    for a in range(n):
        lo = w[a]
        best = n + 1  # smallest value above lo seen so far to the right
        for b in range(a + 1, n):
            y = w[b]
            if lo < y < best:
                out.append((a + 1, b + 1))
                best = y
    return out


def is_dominant(w: Sequence[int]) -> bool:
    """True iff w avoids the pattern 132."""
    w = tuple(w)
    n = len(w)
    prefix_min = n + 1
    for r in range(n):
        if prefix_min < w[r]:
            # look for s > r with prefix_min < w[s] < w[r]
            for s in range(r + 1, n):
                if prefix_min < w[s] < w[r]:
                    return False
        prefix_min = min(prefix_min, w[r])
    return True


def strip_trailing_fixed_points(w: Sequence[int]) -> Perm:
    w = tuple(w)
    k = len(w)
    while k > 0 and w[k - 1] == k:
        k -= 1
    if k == 0:
        return Perm((1,))
    return Perm(w[:k])


# -- layered permutations ----------------------------------------------------

@dataclass(frozen=True)
class LayeredSpec:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if not blocks or any(b < 1 for b in blocks):
            raise PermError(f"blocks must be positive: {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self):
        return sum(self.blocks)

    def __str__(self):
        return "(" + ",".join(map(str, self.blocks)) + ")"


def layered(spec) -> Perm:
    """Reverse each consecutive block of 1..n.

    >>> str(layered(LayeredSpec((1, 2, 5))))
    '1,3,2,8,7,6,5,4'
    """
    blocks = spec.blocks if isinstance(spec, LayeredSpec) else tuple(spec)
    out = []
    start = 0
    for b in blocks:
        out.extend(range(start + b, start, -1))
        start += b
    return Perm(tuple(out))


def layered_length(spec) -> int:
    blocks = spec.blocks if isinstance(spec, LayeredSpec) else tuple(spec)
    return sum(b * (b - 1) // 2 for b in blocks)


def compositions(n: int):
    """All compositions of n in lexicographic order."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


# -- Rothe diagram -----------------------------------------------------------

def rothe_diagram(w: Sequence[int]) -> set:
    """Cells (i, j) with w(i) > j and w^{-1}(j) > i."""
    w = tuple(w)
    winv = inverse(w).entries
    n = len(w)
    return {(i, j) for i in range(1, n + 1) for j in range(1, n + 1)
            if w[i - 1] > j and winv[j - 1] > i}


def all_perms(n: int) -> Iterable[Perm]:
    for t in itertools.permutations(range(1, n + 1)):
        yield Perm(t)
