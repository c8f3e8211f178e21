"""Bumpless pipe dreams on an n x n grid.

Pipes enter through every south edge and leave through every east edge.
Coordinates are (row, column) from the NW corner; the public API is 1-based,
the arrays are 0-based.  The boundary permutation w is read row -> column:
w(i) is the south column whose pipe exits at east row i, so that the Rothe
BPD of w reads back as w.
"""

from __future__ import annotations

import io
from enum import IntEnum

import numpy as np

from . import kernels as K
from .perm import MAX_N, Perm


class Tile(IntEnum):
    EMPTY = 0
    CROSS = 1
    HORIZONTAL = 2
    VERTICAL = 3
    RELBOW = 4
    JELBOW = 5


TILE_CHARS = ".+-|rj"
CHAR_TILE = {ch: k for k, ch in enumerate(TILE_CHARS)}
EDGE_SETS = {
    Tile.EMPTY: frozenset(),
    Tile.CROSS: frozenset("NSEW"),
    Tile.HORIZONTAL: frozenset("EW"),
    Tile.VERTICAL: frozenset("NS"),
    Tile.RELBOW: frozenset("SE"),
    Tile.JELBOW: frozenset("NW"),
}
EDGE_BITS = K.EDGES  # N=1, S=2, E=4, W=8


class BpdError(ValueError):
    pass


def _edges_ok(t) -> bool:
    n = t.shape[0]
    e = EDGE_BITS[t]
    if (e[0, :] & K.N_).any() or (e[:, 0] & K.W_).any():
        return False
    if not (e[n - 1, :] & K.S_).all() or not (e[:, n - 1] & K.E_).all():
        return False
    if ((e[:, :-1] & K.E_ > 0) != (e[:, 1:] & K.W_ > 0)).any():
        return False
    if ((e[:-1, :] & K.S_ > 0) != (e[1:, :] & K.N_ > 0)).any():
        return False
    return True


class Bpd:
    """Mutable BPD workspace with cached boundary and counts."""

    __slots__ = ("tiles", "colexit", "st")

    def __init__(self, tiles, colexit, st):
        self.tiles = tiles
        self.colexit = colexit
        self.st = st

    @classmethod
    def from_tiles(cls, tiles, check=True) -> "Bpd":
        t = np.ascontiguousarray(np.asarray(tiles, dtype=np.int8))
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise BpdError("tile grid must be square and non-empty")
        if check and (t.min() < 0 or t.max() > 5 or not _edges_ok(t)):
            raise BpdError("tile edges are inconsistent")
        colexit = np.empty(t.shape[0], np.int64)
        if not K.boundary(t, colexit):
            raise BpdError("pipes do not trace from south to east")
        st = np.array([K.count_crosses(t), K.inversions(colexit)], np.int64)
        return cls(t, colexit, st)

    @property
    def n(self) -> int:
        return self.tiles.shape[0]

    @property
    def cross_count(self) -> int:
        return int(self.st[0])

    @property
    def inversion_count(self) -> int:
        return int(self.st[1])

    @property
    def boundary_perm(self):
        """Perm for n <= MAX_N, plain tuple beyond (Perm is capped)."""
        return _as_boundary(self.colexit)

    def exit_row(self, column: int) -> int:
        """1-based east row where the pipe from south column ``column`` exits."""
        return int(self.colexit[column - 1]) + 1

    def is_reduced(self) -> bool:
        return self.st[0] == self.st[1]

    def tile(self, i: int, j: int) -> Tile:
        return Tile(int(self.tiles[i - 1, j - 1]))

    def copy(self) -> "Bpd":
        return Bpd(self.tiles.copy(), self.colexit.copy(), self.st.copy())

    def key(self) -> bytes:
        return self.tiles.tobytes()

    def __eq__(self, other):
        return isinstance(other, Bpd) and np.array_equal(self.tiles, other.tiles)

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Bpd(n={self.n}, w={self.boundary_perm}, crosses={self.cross_count})"

    def verify(self):
        """Recompute caches from scratch and compare (debug helper)."""
        fresh = Bpd.from_tiles(self.tiles)
        if not (np.array_equal(fresh.colexit, self.colexit)
                and np.array_equal(fresh.st, self.st)):
            raise AssertionError("cached boundary data out of sync with tiles")


# -- text form ---------------------------------------------------------------

def to_text(b: Bpd) -> str:
    return "\n".join("".join(TILE_CHARS[k] for k in row) for row in b.tiles)


def from_text(text: str) -> Bpd:
    rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
    try:
        grid = [[CHAR_TILE[ch] for ch in r] for r in rows]
    except KeyError as exc:
        raise BpdError(f"unknown tile character {exc}") from None
    if any(len(r) != len(grid) for r in grid):
        raise BpdError("tile text must be square")
    return Bpd.from_tiles(grid)


def _as_boundary(colexit):
    w = [0] * len(colexit)
    for c, r in enumerate(colexit):
        w[r] = c + 1
    return Perm(tuple(w)) if len(w) <= MAX_N else tuple(w)


def trace_boundary(b: Bpd):
    colexit = np.empty(b.n, np.int64)
    if not K.boundary(b.tiles, colexit):
        raise BpdError("malformed grid")
    return _as_boundary(colexit)


def is_reduced(b: Bpd) -> bool:
    colexit = np.empty(b.n, np.int64)
    if not K.boundary(b.tiles, colexit):
        raise BpdError("malformed grid")
    return K.count_crosses(b.tiles) == K.inversions(colexit)


# -- Rothe BPD ---------------------------------------------------------------

def rothe_bpd(w) -> Bpd:
    """Empty tiles on the Rothe diagram, r-elbows at (i, w(i)), and
    horizontal/vertical rays to the east and south of each elbow.  Accepts
    plain sequences beyond the Perm size cap."""
    w = tuple(int(x) for x in w)
    n = len(w)
    if sorted(w) != list(range(1, n + 1)):
        raise BpdError(f"not a permutation: {w}")
    hor = np.zeros((n, n), bool)
    ver = np.zeros((n, n), bool)
    t = np.zeros((n, n), np.int8)
    for i in range(n):
        j = w[i] - 1
        hor[i, j + 1:] = True
        ver[i + 1:, j] = True
    t[hor & ver] = Tile.CROSS
    t[hor & ~ver] = Tile.HORIZONTAL
    t[ver & ~hor] = Tile.VERTICAL
    for i in range(n):
        t[i, w[i] - 1] = Tile.RELBOW
    return Bpd.from_tiles(t)


def b_id(n: int) -> Bpd:
    return rothe_bpd(range(1, n + 1))


def b_w0(n: int) -> Bpd:
    return rothe_bpd(range(n, 0, -1))


# -- heights and ASMs --------------------------------------------------------

def asm_of(b: Bpd) -> np.ndarray:
    t = b.tiles
    return (t == Tile.RELBOW).astype(np.int64) - (t == Tile.JELBOW).astype(np.int64)


def height(b: Bpd) -> np.ndarray:
    """(n+1) x (n+1) corner sums of the ASM, h[i, j] for 0 <= i, j <= n."""
    h = np.zeros((b.n + 1, b.n + 1), np.int64)
    K.height_into(b.tiles, h)
    return h


def mixed_difference(h) -> np.ndarray:
    h = np.asarray(h)
    return h[1:, 1:] - h[:-1, 1:] - h[1:, :-1] + h[:-1, :-1]


def validate_asm(a) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if not np.isin(a, (-1, 0, 1)).all():
        return False
    for m in (a, a.T):
        ps = np.cumsum(m, axis=1)
        if not np.isin(ps, (0, 1)).all() or not (ps[:, -1] == 1).all():
            return False
    return True


def validate_height(h) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
        return False
    n = h.shape[0] - 1
    idx = np.arange(n + 1)
    if (h[0, :] != 0).any() or (h[:, 0] != 0).any():
        return False
    if (h[:, n] != idx).any() or (h[n, :] != idx).any():
        return False
    if not np.isin(np.diff(h, axis=0), (0, 1)).all():
        return False
    if not np.isin(np.diff(h, axis=1), (0, 1)).all():
        return False
    return validate_asm(mixed_difference(h))


_EDGES_TO_TILE = {0: Tile.EMPTY, 15: Tile.CROSS, 12: Tile.HORIZONTAL,
                  3: Tile.VERTICAL, 6: Tile.RELBOW, 9: Tile.JELBOW}


def bpd_from_height(h) -> Bpd:
    """Rebuild tiles: an edge is occupied iff h changes across it."""
    h = np.asarray(h, np.int64)
    if not validate_height(h):
        raise BpdError("not a valid height grid")
    nw, ne, sw, se = h[:-1, :-1], h[:-1, 1:], h[1:, :-1], h[1:, 1:]
    bits = ((ne != nw) * K.N_ + (se != sw) * K.S_ + (se != ne) * K.E_
            + (sw != nw) * K.W_)
    lut = np.full(16, -1, np.int64)
    for e, tile in _EDGES_TO_TILE.items():
        lut[e] = tile
    t = lut[bits]
    if (t < 0).any():
        raise BpdError("height grid produces an invalid tile")
    return Bpd.from_tiles(t.astype(np.int8))


def bpd_from_asm(a) -> Bpd:
    a = np.asarray(a, np.int64)
    if not validate_asm(a):
        raise BpdError("not an alternating sign matrix")
    n = a.shape[0]
    h = np.zeros((n + 1, n + 1), np.int64)
    h[1:, 1:] = a.cumsum(0).cumsum(1)
    return bpd_from_height(h)


def leq(a: Bpd, b: Bpd) -> bool:
    return bool((height(a) <= height(b)).all())


def meet(a: Bpd, b: Bpd) -> Bpd:
    return bpd_from_height(np.minimum(height(a), height(b)))


def join(a: Bpd, b: Bpd) -> Bpd:
    return bpd_from_height(np.maximum(height(a), height(b)))


# -- enumeration -------------------------------------------------------------

def enumerate_asms(n: int) -> list:
    """All n x n BPDs (equivalently ASMs), row-major lexicographic in the
    tile order Empty < Cross < Horizontal < Vertical < RElbow < JElbow."""
    if n < 1 or n > 7:
        raise ValueError("enumeration supported for 1 <= n <= 7")
    bits = [int(x) for x in EDGE_BITS]
    # tiles grouped by (has N, has W) -> list of (tile, has S, has E)
    options = {}
    for k in range(6):
        e = bits[k]
        key = (bool(e & K.N_), bool(e & K.W_))
        options.setdefault(key, []).append((k, bool(e & K.S_), bool(e & K.E_)))

    out = []
    grid = [[0] * n for _ in range(n)]

    def rows(r, north):
        if r == n:
            out.append(Bpd.from_tiles(grid, check=False))
            return
        south = [False] * n

        def cells(c, west):
            if c == n:
                if not west:  # east boundary must be occupied
                    return
                if r == n - 1 and not all(south):
                    return
                rows(r + 1, south.copy())
                return
            for k, s, e in options[(north[c], west)]:
                grid[r][c] = k
                south[c] = s
                cells(c + 1, e)

        cells(0, False)

    rows(0, [False] * n)
    return out


def enumerate_rbpds(n: int) -> list:
    return [b for b in enumerate_asms(n) if b.is_reduced()]


# -- CSV export --------------------------------------------------------------

def matrix_csv(m) -> str:
    """Row-major CSV with a header row of column indices."""
    m = np.asarray(m)
    buf = io.StringIO()
    buf.write(",".join(str(j) for j in range(m.shape[1])) + "\n")
    for row in m:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(int(x))
