"""Local moves on BPDs: 2x2 flips and rectangular droops/undroops.

The flip table is generated by brute force: every filling of a 2x2 window
with the six tiles whose internal edges agree is grouped by its eight outer
edges; two fillings with the same outer edges differ only in the height at
the centre vertex, by exactly one.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import kernels as K
from .bpd import Bpd, Tile, b_id, enumerate_asms, enumerate_rbpds, rothe_bpd
from .perm import as_perm, length


class FlipKind(IntEnum):
    DRIP = 0          # (a) no crossings involved
    CREATE = 1        # (b) a crossing appears or disappears
    RELOCATE = 2      # (c) a crossing moves within the window


class Direction(IntEnum):
    DOWN = 0
    UP = 1


def _window_edges(tiles):
    nw, ne, sw, se = (int(K.EDGES[k]) for k in tiles)
    return nw, ne, sw, se


def _consistent(tiles) -> bool:
    nw, ne, sw, se = _window_edges(tiles)
    return (bool(nw & K.E_) == bool(ne & K.W_) and bool(sw & K.E_) == bool(se & K.W_)
            and bool(nw & K.S_) == bool(sw & K.N_) and bool(ne & K.S_) == bool(se & K.N_))


def _outer(tiles):
    nw, ne, sw, se = _window_edges(tiles)
    return (nw & K.N_, ne & K.N_, nw & K.W_, sw & K.W_,
            sw & K.S_, se & K.S_, ne & K.E_, se & K.E_)


def _a(tile) -> int:
    return 1 if tile == Tile.RELBOW else -1 if tile == Tile.JELBOW else 0


def build_flip_pairs():
    """List of (down_tiles, up_tiles, kind) over all 2x2 windows."""
    groups = {}
    for tiles in itertools.product(range(6), repeat=4):
        if _consistent(tiles):
            groups.setdefault(_outer(tiles), []).append(tiles)
    pairs = []
    for fills in groups.values():
        if len(fills) == 1:
            continue
        if len(fills) != 2:
            raise AssertionError("a window boundary admits more than two fillings")
        x, y = fills
        # the centre height moves with the NW cell's ASM entry
        lo, hi = (x, y) if _a(x[0]) < _a(y[0]) else (y, x)
        assert _a(hi[0]) - _a(lo[0]) == 1
        cl, ch = lo.count(Tile.CROSS), hi.count(Tile.CROSS)
        if cl == 0 and ch == 0:
            kind = FlipKind.DRIP
        elif cl != ch:
            kind = FlipKind.CREATE
        else:
            kind = FlipKind.RELOCATE
        pairs.append((lo, hi, kind))
    pairs.sort()
    return pairs


FLIP_PAIRS = build_flip_pairs()


def _code(tiles):
    nw, ne, sw, se = tiles
    return nw * 216 + ne * 36 + sw * 6 + se


def _tables():
    table = np.full((1296, 2), -1, np.int64)
    kinds = np.full((1296, 2), -1, np.int64)
    for lo, hi, kind in FLIP_PAIRS:
        table[_code(lo), Direction.UP] = _code(hi)
        table[_code(hi), Direction.DOWN] = _code(lo)
        kinds[_code(lo), Direction.UP] = kind
        kinds[_code(hi), Direction.DOWN] = kind
    return table, kinds


FLIP_TABLE, FLIP_KINDS = _tables()


def _decode(code):
    return (Tile(code // 216), Tile(code // 36 % 6), Tile(code // 6 % 6), Tile(code % 6))


@dataclass(frozen=True)
class FlipMove:
    vertex: tuple        # (i, j), 1 <= i, j <= n - 1
    direction: Direction
    kind: FlipKind
    before: tuple        # (nw, ne, sw, se)
    after: tuple


@dataclass(frozen=True)
class DroopRect:
    i1: int
    i2: int
    j1: int
    j2: int
    mode: str = "droop"  # or "undroop"


def flip_available(b: Bpd, vertex, direction) -> FlipMove | None:
    i, j = vertex
    if not (1 <= i <= b.n - 1 and 1 <= j <= b.n - 1):
        raise ValueError(f"vertex {vertex} is not interior")
    d = Direction(int(direction))
    code = int(K.window_code(b.tiles, i - 1, j - 1))
    new = FLIP_TABLE[code, d]
    if new < 0:
        return None
    return FlipMove((i, j), d, FlipKind(int(FLIP_KINDS[code, d])), _decode(code), _decode(int(new)))


def _run_flip(b: Bpd, move: FlipMove, require_reduced: bool) -> int:
    i, j = move.vertex
    return int(K.flip_apply(b.tiles, b.colexit, b.st, i - 1, j - 1, int(move.direction),
                            FLIP_TABLE, FLIP_KINDS, require_reduced))


def apply_flip(b: Bpd, move: FlipMove) -> Bpd:
    """Apply in place (reducedness is not enforced here)."""
    if _run_flip(b, move, False) != K.APPLIED:
        raise ValueError(f"flip {move} not available")
    return b


def flip_preserves_reducedness(b: Bpd, move: FlipMove) -> bool:
    trial = b.copy()
    return _run_flip(trial, move, True) == K.APPLIED


def try_flip(b: Bpd, vertex, direction) -> int:
    """Apply the flip iff it exists and keeps b reduced; returns the kernel
    outcome (0 absent, 1 rejected, 2 applied)."""
    i, j = vertex
    return int(K.flip_apply(b.tiles, b.colexit, b.st, i - 1, j - 1, int(direction),
                            FLIP_TABLE, FLIP_KINDS, True))


# -- droops ------------------------------------------------------------------

def rect_mode(b: Bpd, rect) -> int:
    """1 droopable, 2 undroopable, 0 neither (1-based inclusive rect)."""
    i1, i2, j1, j2 = rect[:4] if not isinstance(rect, DroopRect) else (rect.i1, rect.i2, rect.j1, rect.j2)
    if not (1 <= i1 < i2 <= b.n and 1 <= j1 < j2 <= b.n):
        raise ValueError(f"bad rectangle {rect}")
    return int(K.rect_status(b.tiles, i1 - 1, i2 - 1, j1 - 1, j2 - 1))


def all_rects(n):
    for i1 in range(1, n + 1):
        for i2 in range(i1 + 1, n + 1):
            for j1 in range(1, n + 1):
                for j2 in range(j1 + 1, n + 1):
                    yield i1, i2, j1, j2


def droopable_rects(b: Bpd) -> list:
    return [DroopRect(*r, "droop") for r in all_rects(b.n) if rect_mode(b, r) == 1]


def undroopable_rects(b: Bpd) -> list:
    return [DroopRect(*r, "undroop") for r in all_rects(b.n) if rect_mode(b, r) == 2]


def _apply_rect(b: Bpd, rect: DroopRect, want: int) -> Bpd:
    if rect_mode(b, rect) != want:
        raise ValueError(f"rectangle {rect} does not admit this move")
    K.rect_apply(b.tiles, rect.i1 - 1, rect.i2 - 1, rect.j1 - 1, rect.j2 - 1, want)
    return b


def apply_droop(b: Bpd, rect: DroopRect) -> Bpd:
    return _apply_rect(b, rect, 1)


def apply_undroop(b: Bpd, rect: DroopRect) -> Bpd:
    return _apply_rect(b, rect, 2)


# -- stuck states, Rothe reduction ------------------------------------------

def is_stuck(b: Bpd) -> bool:
    """Reduced, not b_id, and no reducedness-preserving up flip."""
    n = b.n
    if np.array_equal(b.tiles, b_id(n).tiles):
        return False
    for i in range(1, n):
        for j in range(1, n):
            trial = b.copy()
            if try_flip(trial, (i, j), Direction.UP) == K.APPLIED:
                return False
    return True


def rothe_reducing_flip(w) -> FlipMove:
    """Type-(b) flip on the Rothe BPD of w removing one crossing: take the
    topmost cross in the leftmost column that has crosses, and flip the
    window whose SE cell is that cross."""
    w = as_perm(w)
    if length(w) == 0:
        raise ValueError("identity has no reducing flip")
    b = rothe_bpd(w)
    cols = np.flatnonzero((b.tiles == Tile.CROSS).any(axis=0))
    j = int(cols[0])
    i = int(np.flatnonzero(b.tiles[:, j] == Tile.CROSS)[0])
    move = flip_available(b, (i, j), Direction.UP)
    if move is None or move.kind != FlipKind.CREATE:
        raise AssertionError(f"no type-(b) flip at the chosen cross for {w}")
    return move


# -- connectivity ------------------------------------------------------------

def _neighbours(b: Bpd, flips=True, droops=False):
    n = b.n
    if flips:
        for i in range(1, n):
            for j in range(1, n):
                for d in (Direction.DOWN, Direction.UP):
                    c = b.copy()
                    if try_flip(c, (i, j), d) == K.APPLIED:
                        yield c
    if droops:
        for r in all_rects(n):
            mode = rect_mode(b, r)
            if mode:
                c = b.copy()
                K.rect_apply(c.tiles, r[0] - 1, r[1] - 1, r[2] - 1, r[3] - 1, mode)
                yield c


def components(states, flips=True, droops=False) -> int:
    """Number of connected components of the move graph on ``states``."""
    index = {s.key(): k for k, s in enumerate(states)}
    seen = [False] * len(states)
    comps = 0
    for start in range(len(states)):
        if seen[start]:
            continue
        comps += 1
        seen[start] = True
        queue = deque([states[start]])
        while queue:
            cur = queue.popleft()
            for nb in _neighbours(cur, flips, droops):
                k = index.get(nb.key())
                if k is None:
                    raise AssertionError("move left the state space")
                if not seen[k]:
                    seen[k] = True
                    queue.append(nb)
    return comps


def flip_connectivity_check(n: int, droops: bool = False) -> bool:
    return components(enumerate_rbpds(n), flips=True, droops=droops) == 1


def droop_reachable_from_rothe(n: int) -> bool:
    """Every RBPD is reachable from the Rothe BPD of its permutation by
    droops alone."""
    by_perm = {}
    for b in enumerate_rbpds(n):
        by_perm.setdefault(b.boundary_perm, set()).add(b.key())
    for w, targets in by_perm.items():
        start = rothe_bpd(w)
        seen = {start.key()}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for r in all_rects(n):
                if rect_mode(cur, r) == 1:
                    c = cur.copy()
                    K.rect_apply(c.tiles, r[0] - 1, r[1] - 1, r[2] - 1, r[3] - 1, 1)
                    if c.key() not in seen:
                        seen.add(c.key())
                        queue.append(c)
        if seen != targets:
            return False
    return True


def find_stuck(n: int) -> list:
    return [b for b in enumerate_rbpds(n) if is_stuck(b)]


def symmetry_classes(states) -> int:
    """Orbits under transposition, the one grid symmetry that keeps pipes
    entering south and leaving east (it inverts the boundary permutation)."""
    seen = set()
    classes = 0
    for b in states:
        k = b.key()
        if k in seen:
            continue
        classes += 1
        seen.add(k)
        seen.add(_transpose(b).key())
    return classes


def _transpose(b: Bpd) -> Bpd:
    # reflect across the main diagonal: rows <-> columns, N <-> W, S <-> E
    swap = np.array([Tile.EMPTY, Tile.CROSS, Tile.VERTICAL, Tile.HORIZONTAL,
                     Tile.RELBOW, Tile.JELBOW], np.int8)
    return Bpd.from_tiles(swap[b.tiles.T])
