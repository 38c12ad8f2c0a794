import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavend.meshgeom import (AlignmentError, Cell, DomainSpec, build_dyadic_hierarchy,
                             cell_diameter, cell_distance)


def test_interval_counts():
    tree = build_dyadic_hierarchy(DomainSpec.interval(1.0), 5)
    assert [len(lc) for lc in tree.levels] == [1, 2, 4, 8, 16, 32]
    assert tree.n_leaves == 32
    assert tree.leaf_width == 1 / 32


def test_square_counts_and_children():
    tree = build_dyadic_hierarchy(DomainSpec.square(2.0), 3)
    assert [len(lc) for lc in tree.levels] == [1, 4, 16, 64]
    for lev in range(3):
        for row in range(len(tree.levels[lev])):
            kids = tree.levels[lev].children(row)
            assert len(kids) == 4
            assert np.all(tree.levels[lev + 1].parent[kids] == row)


def test_children_tile_parent_exactly():
    tree = build_dyadic_hierarchy(DomainSpec.square(3.0, (1.0, -2.0)), 3)
    parent = tree.cell(1, 2)
    (plo, phi) = parent.box
    kids = [tree.cell(2, r) for r in tree.levels[1].children(2)]
    area = sum(np.prod(np.subtract(k.box[1], k.box[0])) for k in kids)
    assert area == pytest.approx(np.prod(np.subtract(phi, plo)), rel=0, abs=1e-15)
    for k in kids:
        assert all(plo[a] <= k.box[0][a] and k.box[1][a] <= phi[a] for a in range(2))


def test_lshape_drops_quadrant():
    tree = build_dyadic_hierarchy(DomainSpec.lshape(1.0), 3)
    assert tree.n_leaves == 48
    assert len(tree.levels[1]) == 3
    centers = tree.leaf_centers()
    assert not np.any((centers[:, 0] > 0.5) & (centers[:, 1] > 0.5))


def test_holes_removed_and_coarse_cells_kept():
    dom = DomainSpec.lshape(1.0, holes=[(0.125, 0.125, 0.25, 0.25)])
    tree = build_dyadic_hierarchy(dom, 4)
    assert tree.n_leaves == 192 - 4
    # the level-3 cell covering the hole is gone, its level-2 parent survives
    assert len(tree.levels[3]) == 48 - 1
    assert len(tree.levels[2]) == 12


def test_misaligned_hole_rejected():
    dom = DomainSpec("square", 1.0, (0.0, 0.0), ((0.1, 0.1, 0.3, 0.3),))
    with pytest.raises(AlignmentError):
        build_dyadic_hierarchy(dom, 3)


@pytest.mark.parametrize("holes", [
    [(-0.1, 0.2, 0.3, 0.4)],                            # leaves the square
    [(0.1, 0.1, 0.3, 0.3), (0.2, 0.2, 0.4, 0.4)],       # overlap
    [(0.6, 0.6, 0.7, 0.7)],                             # inside the removed quadrant
])
def test_invalid_holes(holes):
    with pytest.raises(ValueError):
        DomainSpec.lshape(1.0, holes=holes)


def test_invalid_size():
    with pytest.raises(ValueError):
        DomainSpec.interval(0.0)


def test_distance_and_diameter_examples():
    o = (0.0, 0.0)
    a = Cell(2, (0, 0), o, 1.0)
    b = Cell(2, (3, 0), o, 1.0)
    c = Cell(3, (2, 2), o, 1.0)
    assert cell_distance(a, b) == 0.5
    assert cell_distance(a, c) == 0.0        # touching corner
    d = Cell(2, (2, 2), o, 1.0)
    assert cell_distance(a, d) == pytest.approx(math.sqrt(2) * 0.25, rel=1e-15)
    assert cell_diameter(a) == pytest.approx(math.sqrt(2) * 0.25)
    assert cell_diameter(Cell(4, (3,), (0.0,), 2.0)) == 0.125


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.data())
def test_distance_matches_float_boxes(la, lb, data):
    ka = tuple(data.draw(st.integers(0, (1 << la) - 1)) for _ in range(2))
    kb = tuple(data.draw(st.integers(0, (1 << lb) - 1)) for _ in range(2))
    a = Cell(la, ka, (0.0, 0.0), 1.0)
    b = Cell(lb, kb, (0.0, 0.0), 1.0)
    (alo, ahi), (blo, bhi) = a.box, b.box
    gap = [max(0.0, blo[i] - ahi[i], alo[i] - bhi[i]) for i in range(2)]
    assert cell_distance(a, b) == pytest.approx(math.hypot(*gap), abs=1e-15)
    assert cell_distance(a, b) == cell_distance(b, a)


def test_leaf_ranges_match_leaves_of():
    tree = build_dyadic_hierarchy(DomainSpec.lshape(1.0), 4)
    for lev in range(5):
        rng = tree.leaf_ranges(lev)
        for row in range(len(tree.levels[lev])):
            got = rng[row][rng[row] >= 0]
            assert np.array_equal(np.sort(got), tree.leaves_of(lev, row))
