"""Dyadic cell hierarchies over simple domains.

Cells are stored level by level as integer index arrays.  A cell of level
``j`` with index ``k`` covers ``origin + side * 2**-j * [k, k + 1]`` per axis,
so every corner is an exact dyadic rational.  Distances are evaluated on the
integer grid of the finest level and only scaled at the very end, which keeps
comparisons between equal distances deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np


class AlignmentError(ValueError):
    """A hole does not lie on the grid of the finest level."""


@dataclass(frozen=True)
class DomainSpec:
    """Interval, square or L-shape, optionally with rectangular holes.

    ``kind`` is one of ``"interval"``, ``"square"`` or ``"lshape"``.  The
    L-shape is the square of side ``size`` with its upper-right quadrant
    removed.  ``holes`` are axis-aligned boxes ``(x0, y0, x1, y1)`` in absolute
    coordinates.
    """

    kind: str
    size: float
    origin: tuple[float, ...] | None = None
    holes: tuple[tuple[float, float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("interval", "square", "lshape"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("domain size must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * self.dim)
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != self.dim:
            raise ValueError(f"origin must have {self.dim} coordinates")
        object.__setattr__(self, "origin", origin)
        holes = tuple(tuple(float(v) for v in h) for h in self.holes)
        object.__setattr__(self, "holes", holes)
        if holes and self.dim != 2:
            raise ValueError("holes are only supported in two dimensions")
        for h in holes:
            self._check_hole(h)
        for i in range(len(holes)):
            for k in range(i + 1, len(holes)):
                a, b = holes[i], holes[k]
                if a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]:
                    raise ValueError(f"holes {a} and {b} overlap")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @classmethod
    def interval(cls, length=1.0, origin=0.0):
        return cls("interval", length, (origin,))

    @classmethod
    def square(cls, side=1.0, origin=(0.0, 0.0)):
        return cls("square", side, tuple(origin))

    @classmethod
    def lshape(cls, side=1.0, holes=(), origin=(0.0, 0.0)):
        return cls("lshape", side, tuple(origin), tuple(holes))

    def _check_hole(self, h):
        x0, y0, x1, y1 = h
        ox, oy = self.origin
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate hole {h}")
        inside = ox < x0 and x1 < ox + self.size and oy < y0 and y1 < oy + self.size
        if not inside:
            raise ValueError(f"hole {h} is not strictly inside the domain")
        if self.kind == "lshape":
            cx, cy = ox + self.size / 2, oy + self.size / 2
            # strictly inside the L means clear of the removed quadrant
            if x1 > cx and y1 > cy:
                raise ValueError(f"hole {h} touches the removed quadrant")

    def excluded_boxes(self):
        """Boxes (absolute coordinates) that are not part of the domain."""
        boxes = list(self.holes)
        if self.kind == "lshape":
            ox, oy = self.origin
            half = self.size / 2
            boxes.append((ox + half, oy + half, ox + self.size, oy + self.size))
        return boxes


@dataclass(frozen=True)
class Cell:
    level: int
    index: tuple[int, ...]
    origin: tuple[float, ...]
    side: float

    @property
    def width(self) -> float:
        return self.side * 2.0 ** -self.level

    @property
    def box(self):
        """``(lower, upper)`` corner tuples."""
        w = self.width
        lo = tuple(o + k * w for o, k in zip(self.origin, self.index))
        hi = tuple(o + (k + 1) * w for o, k in zip(self.origin, self.index))
        return lo, hi

    @property
    def center(self):
        lo, hi = self.box
        return tuple(0.5 * (a + b) for a, b in zip(lo, hi))


@dataclass
class LevelCells:
    """All cells of one level, sorted lexicographically by index."""

    index: np.ndarray            # (m, n) int64
    parent: np.ndarray           # (m,) row in the previous level, -1 at the root
    child_ptr: np.ndarray        # (m + 1,) CSR pointers into the next level
    child_idx: np.ndarray

    def __len__(self):
        return len(self.index)

    def children(self, row):
        return self.child_idx[self.child_ptr[row]:self.child_ptr[row + 1]]


@dataclass
class CellTree:
    domain: DomainSpec
    max_level: int
    levels: list[LevelCells] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def side(self) -> float:
        return self.domain.size

    @property
    def n_leaves(self) -> int:
        return len(self.levels[-1])

    @property
    def leaf_width(self) -> float:
        return self.side * 2.0 ** -self.max_level

    def cell(self, level, row) -> Cell:
        idx = tuple(int(v) for v in self.levels[level].index[row])
        return Cell(level, idx, self.domain.origin, self.side)

    def cells(self, level):
        return [self.cell(level, r) for r in range(len(self.levels[level]))]

    def root(self) -> Cell:
        return self.cell(0, 0)

    def leaf_centers(self) -> np.ndarray:
        return self.centers(self.max_level)

    def centers(self, level) -> np.ndarray:
        w = self.side * 2.0 ** -level
        return np.asarray(self.domain.origin) + (self.levels[level].index + 0.5) * w

    def grid_boxes(self, level):
        """Cell boxes of ``level`` as integer ``(lo, hi)`` on the finest grid."""
        scale = 1 << (self.max_level - level)
        lo = self.levels[level].index * scale
        return lo, lo + scale

    def leaves_of(self, level, row) -> np.ndarray:
        """Leaf rows below a cell, in leaf order."""
        rows = np.array([row])
        for lev in range(level, self.max_level):
            lc = self.levels[lev]
            rows = np.concatenate([lc.children(r) for r in rows])
        return np.sort(rows)

    def ancestors(self, level) -> np.ndarray:
        """Row of the level-``level`` ancestor of every leaf."""
        rows = np.arange(self.n_leaves)
        for lev in range(self.max_level, level, -1):
            rows = self.levels[lev].parent[rows]
        return rows

    def leaf_ranges(self, level) -> np.ndarray:
        """Leaf rows below every cell of ``level``, padded with -1."""
        anc = self.ancestors(level)
        m = len(self.levels[level])
        counts = np.bincount(anc, minlength=m)
        order = np.argsort(anc, kind="stable")
        ptr = np.concatenate([[0], np.cumsum(counts)])
        out = np.full((m, counts.max()), -1, dtype=np.int64)
        pos = np.arange(len(order)) - ptr[anc[order]]
        out[anc[order], pos] = order
        return out


def _leaf_mask(domain: DomainSpec, J: int) -> np.ndarray:
    n = domain.dim
    m = 1 << J
    mask = np.ones((m,) * n, dtype=bool)
    w = domain.size / m
    for box in domain.excluded_boxes():
        lo = [(box[a] - domain.origin[a]) / w for a in range(n)]
        hi = [(box[a + n] - domain.origin[a]) / w for a in range(n)]
        for v in lo + hi:
            if abs(v - round(v)) > 1e-9:
                raise AlignmentError(
                    f"excluded box {box} is not aligned with the level-{J} grid")
        sl = tuple(slice(int(round(a)), int(round(b))) for a, b in zip(lo, hi))
        mask[sl] = False
    return mask


def build_dyadic_hierarchy(domain: DomainSpec, J: int) -> CellTree:
    """Build the nested cell hierarchy of levels ``0..J``.

    Leaves removed by a hole or the L-shape cut-out are dropped; a coarser cell
    is kept as long as one of its leaves survives.
    """
    if J < 0:
        raise ValueError("J must be non-negative")
    n = domain.dim
    mask = _leaf_mask(domain, J)
    idx = np.argwhere(mask).astype(np.int64)       # lexicographic already
    if len(idx) == 0:
        raise ValueError("domain has no cells at this level")
    indices = [idx]
    for _ in range(J):
        parent_idx = np.unique(indices[-1] // 2, axis=0)
        indices.append(parent_idx)
    indices.reverse()

    levels = []
    for j in range(J + 1):
        m = len(indices[j])
        if j == 0:
            parent = np.full(m, -1, dtype=np.int64)
        else:
            parent = _lookup(indices[j - 1], indices[j] // 2)
        levels.append(LevelCells(indices[j], parent, None, None))
    for j in range(J + 1):
        m = len(levels[j])
        if j == J:
            levels[j].child_ptr = np.zeros(m + 1, dtype=np.int64)
            levels[j].child_idx = np.zeros(0, dtype=np.int64)
            continue
        par = levels[j + 1].parent
        counts = np.bincount(par, minlength=m)
        levels[j].child_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        # children sorted lexicographically already, and parents are monotone in them
        levels[j].child_idx = np.argsort(par, kind="stable").astype(np.int64)
    assert n == idx.shape[1]
    return CellTree(domain, J, levels)


def _lookup(table, keys):
    """Row of each key in a lexicographically sorted integer table."""
    width = table.max() + 1 if table.size else 1
    n = table.shape[1]
    base = np.zeros(len(table), dtype=np.int64)
    qkey = np.zeros(len(keys), dtype=np.int64)
    for a in range(n):
        base = base * width + table[:, a]
        qkey = qkey * width + keys[:, a]
    pos = np.searchsorted(base, qkey)
    if np.any(base[np.minimum(pos, len(base) - 1)] != qkey):
        raise KeyError("cell index not found")
    return pos.astype(np.int64)


def _grid_gap2(a: Cell, b: Cell) -> tuple[int, int]:
    """Squared integer gap between two cells on a common dyadic grid."""
    L = max(a.level, b.level)
    sa, sb = 1 << (L - a.level), 1 << (L - b.level)
    g2 = 0
    for ka, kb in zip(a.index, b.index):
        lo_a, hi_a = ka * sa, (ka + 1) * sa
        lo_b, hi_b = kb * sb, (kb + 1) * sb
        gap = max(0, lo_b - hi_a, lo_a - hi_b)
        g2 += gap * gap
    return g2, L


def cell_distance(a: Cell, b: Cell) -> float:
    """Euclidean distance between the boxes of two cells (0 when touching)."""
    if a.side != b.side or a.origin != b.origin:
        raise ValueError("cells belong to different trees")
    g2, L = _grid_gap2(a, b)
    return sqrt(g2) * a.side * 2.0 ** -L


def cell_diameter(a: Cell) -> float:
    return a.width * sqrt(len(a.index))
