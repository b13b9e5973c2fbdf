"""Set representations: axis-aligned boxes and halfspace polytopes.

All sets are closed. The empty box is an explicit value (``HyperRectangle.empty``)
rather than a box with NaN or inverted bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class HyperRectangle:
    """Axis-aligned box ``{x : lower <= x <= upper}``.

    Use :meth:`empty` for the empty set of a given dimension. Degenerate boxes
    (``lower == upper`` on some axis) are valid, nonempty sets.
    """

    __slots__ = ("_lower", "_upper", "_dim", "_is_empty")

    def __init__(self, lower, upper):
        lower = _frozen(lower).reshape(-1)
        upper = _frozen(upper).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError(
                f"lower and upper must have the same length, got {lower.size} and {upper.size}"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError(f"lower exceeds upper: {lower} > {upper}")
        self._lower = lower
        self._upper = upper
        self._dim = lower.size
        self._is_empty = False

    @classmethod
    def empty(cls, dim: int) -> "HyperRectangle":
        box = cls.__new__(cls)
        box._lower = None
        box._upper = None
        box._dim = int(dim)
        box._is_empty = True
        return box

    @classmethod
    def from_center(cls, center, radius) -> "HyperRectangle":
        """Build the infinity-norm ball ``B_inf(center, radius)``."""
        center = np.asarray(center, dtype=float)
        radius = np.asarray(radius, dtype=float)
        if np.any(radius < 0):
            raise ValueError("radius must be nonnegative")
        return cls(center - radius, center + radius)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_empty(self) -> bool:
        return self._is_empty

    @property
    def lower(self) -> np.ndarray:
        if self._is_empty:
            raise ValueError("empty box has no bounds")
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        if self._is_empty:
            raise ValueError("empty box has no bounds")
        return self._upper

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def volume(self) -> float:
        if self._is_empty:
            return 0.0
        return float(np.prod(self.widths))

    def inflate(self, fraction: float) -> "HyperRectangle":
        """Grow every axis by ``fraction`` of its width on each side."""
        if self._is_empty:
            return self
        pad = fraction * self.widths
        return HyperRectangle(self.lower - pad, self.upper + pad)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HyperRectangle):
            return NotImplemented
        if self._dim != other._dim or self._is_empty != other._is_empty:
            return False
        if self._is_empty:
            return True
        return bool(np.array_equal(self._lower, other._lower) and np.array_equal(self._upper, other._upper))

    def __hash__(self):
        if self._is_empty:
            return hash(("empty", self._dim))
        return hash((self._lower.tobytes(), self._upper.tobytes()))

    def __repr__(self) -> str:
        if self._is_empty:
            return f"HyperRectangle.empty({self._dim})"
        return f"HyperRectangle({self._lower.tolist()}, {self._upper.tolist()})"


@dataclass(frozen=True)
class HPolytope:
    """Halfspace intersection ``{x : H x <= h}``."""

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = _frozen(self.H)
        h = _frozen(self.h).reshape(-1)
        if H.ndim != 2:
            raise ValueError("H must be a matrix")
        if H.shape[0] != h.size:
            raise ValueError(f"H has {H.shape[0]} rows but h has {h.size} entries")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(h))):
            raise ValueError("polytope data must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point has dimension {x.size}, polytope has {self.dim}")
        return bool(np.all(self.H @ x <= self.h + tol))


@dataclass(frozen=True)
class PartitionGrid:
    """Per-axis cell counts used to split a box into a uniform grid."""

    r: tuple

    def __post_init__(self):
        r = tuple(int(v) for v in self.r)
        if len(r) == 0:
            raise ValueError("partition grid needs at least one axis")
        if any(v < 1 for v in r):
            raise ValueError(f"partition counts must be >= 1, got {r}")
        object.__setattr__(self, "r", r)

    @property
    def dim(self) -> int:
        return len(self.r)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.r))


def _check_dims(*dims: int) -> None:
    if len(set(dims)) > 1:
        raise ValueError(f"dimension mismatch: {dims}")


def contains(box: HyperRectangle, x) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dims(box.dim, x.size)
    if box.is_empty:
        return False
    return bool(np.all(box.lower <= x) and np.all(x <= box.upper))


def contains_points(box: HyperRectangle, xs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`contains` over the rows of ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    _check_dims(box.dim, xs.shape[1])
    if box.is_empty:
        return np.zeros(xs.shape[0], dtype=bool)
    return np.all((xs >= box.lower) & (xs <= box.upper), axis=1)


def intersects(a: HyperRectangle, b: HyperRectangle) -> bool:
    _check_dims(a.dim, b.dim)
    if a.is_empty or b.is_empty:
        return False
    return bool(np.all(np.maximum(a.lower, b.lower) <= np.minimum(a.upper, b.upper)))


def partition(box: HyperRectangle, grid: PartitionGrid) -> list[HyperRectangle]:
    """Split ``box`` into ``prod(r)`` equal cells.

    Cells are ordered lexicographically with axis 0 varying slowest. Edges are
    computed by linear interpolation and the last edge on each axis is pinned to
    ``upper`` so the union reproduces the parent exactly.
    """
    if box.is_empty:
        raise ValueError("cannot partition an empty box")
    if not isinstance(grid, PartitionGrid):
        grid = PartitionGrid(tuple(grid))
    _check_dims(box.dim, grid.dim)
    edges = []
    for lo, hi, n in zip(box.lower, box.upper, grid.r):
        e = lo + (hi - lo) * (np.arange(n + 1) / n)
        e[0], e[-1] = lo, hi
        edges.append(e)
    cells = []
    for idx in itertools.product(*(range(n) for n in grid.r)):
        lo = [edges[ax][i] for ax, i in enumerate(idx)]
        hi = [edges[ax][i + 1] for ax, i in enumerate(idx)]
        cells.append(HyperRectangle(lo, hi))
    return cells


def bounding_box_of_union(boxes: Sequence[HyperRectangle]) -> HyperRectangle:
    boxes = list(boxes)
    if not boxes:
        raise ValueError("bounding box of an empty collection is undefined")
    _check_dims(*(b.dim for b in boxes))
    nonempty = [b for b in boxes if not b.is_empty]
    if not nonempty:
        return HyperRectangle.empty(boxes[0].dim)
    lower = np.min([b.lower for b in nonempty], axis=0)
    upper = np.max([b.upper for b in nonempty], axis=0)
    return HyperRectangle(lower, upper)


def to_polytope(box: HyperRectangle) -> HPolytope:
    """Two facets per axis, ``+e_i <= upper[i]`` then ``-e_i <= -lower[i]``."""
    if box.is_empty:
        raise ValueError("empty box has no halfspace representation")
    n = box.dim
    H = np.zeros((2 * n, n))
    h = np.empty(2 * n)
    for i in range(n):
        H[2 * i, i] = 1.0
        H[2 * i + 1, i] = -1.0
        h[2 * i] = box.upper[i]
        h[2 * i + 1] = -box.lower[i]
    return HPolytope(H, h)


def volume_of(boxes: Iterable[HyperRectangle]) -> float:
    return float(sum(b.volume() for b in boxes))
