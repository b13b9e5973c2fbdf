import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpreach.geometry import (
    HyperRectangle,
    PartitionGrid,
    bounding_box_of_union,
    contains,
    contains_points,
    intersects,
    partition,
    to_polytope,
)

EMPTY2 = HyperRectangle.empty(2)
UNIT = HyperRectangle([0, 0], [1, 1])


def test_contains_interior_boundary_and_empty():
    assert contains(UNIT, [0.5, 0.5])
    assert contains(UNIT, [1, 1])
    assert not contains(UNIT, [1.0000001, 0.5])
    assert not contains(EMPTY2, [0, 0])


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        contains(UNIT, [0.5])


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (([0, 0], [1, 1]), ([2, 2], [3, 3]), False),
        (([0, 0], [2, 2]), ([1, 1], [3, 3]), True),
        (([0, 0], [1, 1]), ([1, 0], [2, 1]), True),
    ],
)
def test_intersects(a, b, expected):
    assert intersects(HyperRectangle(*a), HyperRectangle(*b)) is expected


def test_intersects_empty_and_mismatch():
    assert not intersects(EMPTY2, UNIT)
    assert not intersects(EMPTY2, EMPTY2)
    with pytest.raises(ValueError):
        intersects(UNIT, HyperRectangle([0], [1]))


def test_partition_four_by_four():
    cells = partition(HyperRectangle([0, 0], [4, 4]), PartitionGrid((4, 4)))
    assert len(cells) == 16
    assert cells[0] == HyperRectangle([0, 0], [1, 1])
    assert cells[1] == HyperRectangle([0, 1], [1, 2])  # axis 0 varies slowest
    assert all(np.allclose(c.widths, 1.0) for c in cells)


def test_partition_identity_and_halving():
    assert partition(HyperRectangle([0], [1]), PartitionGrid((1,))) == [HyperRectangle([0], [1])]
    cells = partition(HyperRectangle([-1, 0], [1, 2]), PartitionGrid((2, 1)))
    assert cells == [HyperRectangle([-1, 0], [0, 2]), HyperRectangle([0, 0], [1, 2])]


def test_partition_errors():
    with pytest.raises(ValueError):
        partition(EMPTY2, PartitionGrid((1, 1)))
    with pytest.raises(ValueError):
        PartitionGrid((0, 2))
    with pytest.raises(ValueError):
        partition(UNIT, PartitionGrid((2,)))


def test_bounding_box_of_union():
    assert bounding_box_of_union([UNIT, HyperRectangle([2, 0], [3, 1])]) == HyperRectangle([0, 0], [3, 1])
    assert bounding_box_of_union([HyperRectangle.empty(1), HyperRectangle([0], [1])]) == HyperRectangle([0], [1])
    assert bounding_box_of_union([UNIT]) == UNIT
    assert bounding_box_of_union([EMPTY2, EMPTY2]).is_empty
    with pytest.raises(ValueError):
        bounding_box_of_union([])
    with pytest.raises(ValueError):
        bounding_box_of_union([UNIT, HyperRectangle([0], [1])])


def test_to_polytope():
    p = to_polytope(HyperRectangle([0], [1]))
    assert p.H.tolist() == [[1.0], [-1.0]]
    assert p.h.tolist() == [1.0, 0.0]
    p = to_polytope(HyperRectangle([-1, 3], [2, 4]))
    assert p.H.shape == (4, 2)
    assert p.h.tolist() == [2.0, 1.0, 4.0, -3.0]
    p = to_polytope(HyperRectangle([1], [1]))
    assert p.contains([1.0]) and not p.contains([1.0 + 1e-12])
    with pytest.raises(ValueError):
        to_polytope(EMPTY2)


def test_box_invariants():
    with pytest.raises(ValueError):
        HyperRectangle([1, 0], [0, 1])
    with pytest.raises(ValueError):
        HyperRectangle([0, 0], [1])
    assert HyperRectangle([1, 1], [1, 1]).volume() == 0.0
    with pytest.raises(ValueError):
        EMPTY2.lower


# ---------------------------------------------------------------- properties

finite = st.floats(min_value=-100, max_value=100, allow_nan=False)


@st.composite
def boxes(draw, dim=2):
    lo = np.array([draw(finite) for _ in range(dim)])
    w = np.array([draw(st.floats(min_value=0, max_value=50)) for _ in range(dim)])
    return HyperRectangle(lo, lo + w)


@settings(max_examples=200, deadline=None)
@given(boxes(), st.tuples(st.integers(1, 6), st.integers(1, 6)))
def test_partition_then_union_is_identity(box, r):
    cells = partition(box, PartitionGrid(r))
    assert len(cells) == r[0] * r[1]
    assert bounding_box_of_union(cells) == box


@settings(max_examples=100, deadline=None)
@given(st.lists(boxes(), min_size=1, max_size=5), st.integers(0, 2**32 - 1))
def test_union_box_contains_members(members, seed):
    hull = bounding_box_of_union(members)
    rng = np.random.default_rng(seed)
    for b in members:
        pts = rng.uniform(b.lower, b.upper, size=(20, 2))
        assert contains_points(hull, pts).all()
        assert contains(hull, b.lower) and contains(hull, b.upper)


@settings(max_examples=200, deadline=None)
@given(boxes(), boxes())
def test_intersects_symmetric_and_reflexive(a, b):
    assert intersects(a, b) == intersects(b, a)
    assert intersects(a, a)


@pytest.mark.parametrize("seed", range(5))
def test_polytope_membership_matches_box(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 5))
    lo = rng.uniform(-3, 0, dim)
    box = HyperRectangle(lo, lo + rng.uniform(0, 3, dim))
    poly = to_polytope(box)
    pts = rng.uniform(box.lower - 1, box.upper + 1, size=(10_000, dim))
    # include exact boundary points
    pts[:dim * 2] = np.vstack([box.lower, box.upper] * dim)[:dim * 2]
    by_poly = np.all(pts @ poly.H.T <= poly.h, axis=1)
    assert np.array_equal(by_poly, contains_points(box, pts))
