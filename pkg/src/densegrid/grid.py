"""Product spaces, mixed-radix points, and bitset-backed subsets.

A grid covers coordinates [start, end); coordinate q ranges over
0..sizes[q-start]-1.  Cell indices put the FIRST coordinate least significant
(index = sum x_q * prod_{p<q} n_p), so fibers over a prefix are strided runs
and suffix slices are contiguous.  Subsets are immutable arbitrary-size
integer bitmasks: bit i is cell i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import BudgetExceededError, DomainError

#: Default cap on cells in a single grid (bits in one PointSet).
DEFAULT_CELL_BUDGET = 1 << 28


@dataclass(frozen=True)
class GridShape:
    """Coordinate range [start, start+len(sizes)) with per-coordinate sizes."""

    sizes: tuple[int, ...]
    start: int = 0

    def __init__(self, sizes: Sequence[int], start: int = 0,
                 cell_budget: int = DEFAULT_CELL_BUDGET):
        sizes = tuple(int(n) for n in sizes)
        if any(n < 1 for n in sizes):
            raise DomainError(f"coordinate sizes must be >= 1, got {sizes}")
        if prod(sizes) > cell_budget:
            raise BudgetExceededError(
                f"grid with {prod(sizes)} cells exceeds the {cell_budget}-cell budget"
            )
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "start", int(start))

    @property
    def end(self) -> int:
        return self.start + len(self.sizes)

    @property
    def total(self) -> int:
        return prod(self.sizes)

    def index_of(self, coords: Sequence[int]) -> int:
        if len(coords) != len(self.sizes):
            raise DomainError(
                f"expected {len(self.sizes)} coordinates, got {len(coords)}"
            )
        index = 0
        stride = 1
        for x, n in zip(coords, self.sizes):
            if not 0 <= x < n:
                raise DomainError(f"coordinate value {x} out of range [0, {n})")
            index += x * stride
            stride *= n
        return index

    def coords_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.total:
            raise DomainError(f"index {index} out of range [0, {self.total})")
        coords = []
        for n in self.sizes:
            coords.append(index % n)
            index //= n
        return tuple(coords)

    def prefix(self, cut: int) -> "GridShape":
        """Sub-shape over [start, cut)."""
        if not self.start <= cut <= self.end:
            raise DomainError(f"cut {cut} outside [{self.start}, {self.end}]")
        return GridShape(self.sizes[: cut - self.start], self.start)

    def suffix(self, cut: int) -> "GridShape":
        """Sub-shape over [cut, end)."""
        if not self.start <= cut <= self.end:
            raise DomainError(f"cut {cut} outside [{self.start}, {self.end}]")
        return GridShape(self.sizes[cut - self.start:], cut)


@dataclass(frozen=True)
class Point:
    shape: GridShape
    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(x) for x in self.coords))
        self.shape.index_of(self.coords)  # validates length and ranges


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable subset of a grid, stored as an integer bitmask."""

    shape: GridShape
    bits: int
    _count: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.shape.total:
            raise DomainError("bitmask has bits outside the grid")

    @classmethod
    def empty(cls, shape: GridShape) -> "PointSet":
        return cls(shape, 0)

    @classmethod
    def full(cls, shape: GridShape) -> "PointSet":
        return cls(shape, (1 << shape.total) - 1)

    @classmethod
    def from_indices(cls, shape: GridShape, indices: Iterable[int]) -> "PointSet":
        bits = 0
        total = shape.total
        for i in indices:
            if not 0 <= i < total:
                raise DomainError(f"cell index {i} out of range [0, {total})")
            bits |= 1 << i
        return cls(shape, bits)

    @classmethod
    def from_points(cls, shape: GridShape, points: Iterable[Sequence[int]]) -> "PointSet":
        return cls.from_indices(shape, (shape.index_of(tuple(p)) for p in points))

    def __len__(self) -> int:
        if self._count is None:
            object.__setattr__(self, "_count", self.bits.bit_count())
        return self._count

    def __contains__(self, point) -> bool:
        if isinstance(point, Point):
            point = point.coords
        return bool(self.bits >> self.shape.index_of(tuple(point)) & 1)

    def contains_index(self, index: int) -> bool:
        if not 0 <= index < self.shape.total:
            raise DomainError(f"index {index} out of range")
        return bool(self.bits >> index & 1)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PointSet) and self.shape == other.shape
                and self.bits == other.bits)

    def density(self) -> Fraction:
        return Fraction(len(self), self.shape.total)

    def intersection(self, other: "PointSet") -> "PointSet":
        self._require_same_shape(other)
        return PointSet(self.shape, self.bits & other.bits)

    def union(self, other: "PointSet") -> "PointSet":
        self._require_same_shape(other)
        return PointSet(self.shape, self.bits | other.bits)

    def difference(self, other: "PointSet") -> "PointSet":
        self._require_same_shape(other)
        return PointSet(self.shape, self.bits & ~other.bits)

    def issubset(self, other: "PointSet") -> bool:
        self._require_same_shape(other)
        return self.bits & ~other.bits == 0

    def _require_same_shape(self, other: "PointSet") -> None:
        if self.shape != other.shape:
            raise DomainError(f"shape mismatch: {self.shape} vs {other.shape}")

    def indices(self) -> list[int]:
        return np.flatnonzero(self.to_bool_array()).tolist()

    def iter_indices(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def smallest_indices(self, count: int) -> list[int]:
        """The `count` smallest member cell indices; DomainError if fewer exist."""
        out = []
        bits = self.bits
        for _ in range(count):
            if not bits:
                raise DomainError(f"set has fewer than {count} members")
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def points(self) -> list[Point]:
        return [Point(self.shape, self.shape.coords_of(i)) for i in self.indices()]

    def to_bool_array(self) -> np.ndarray:
        """0/1 uint8 array of length shape.total, cell i at position i."""
        total = self.shape.total
        raw = self.bits.to_bytes((total + 7) // 8, "little")
        return np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                             bitorder="little")[:total]

    @classmethod
    def from_bool_array(cls, shape: GridShape, arr: np.ndarray) -> "PointSet":
        if arr.shape != (shape.total,):
            raise DomainError(f"array length {arr.shape} != grid total {shape.total}")
        packed = np.packbits(arr.astype(np.uint8), bitorder="little").tobytes()
        return cls(shape, int.from_bytes(packed, "little"))


@dataclass(frozen=True)
class SubgridWitness:
    """Per-coordinate value subsets (I_q) certifying a product containment.

    subsets[j] lists the chosen values at coordinate start+j, strictly
    increasing.
    """

    start: int
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "subsets", tuple(tuple(int(v) for v in s) for s in self.subsets)
        )
        for j, s in enumerate(self.subsets):
            if not s:
                raise DomainError(f"coordinate {self.start + j} has an empty subset")
            if any(b <= a for a, b in zip(s, s[1:])) or s[0] < 0:
                raise DomainError(
                    f"subset at coordinate {self.start + j} must be strictly "
                    f"increasing and nonnegative, got {s}"
                )

    @property
    def end(self) -> int:
        return self.start + len(self.subsets)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.subsets)


def index_of(point: Point) -> int:
    return point.shape.index_of(point.coords)


def point_of(shape: GridShape, index: int) -> Point:
    return Point(shape, shape.coords_of(index))


def density(d: PointSet) -> Fraction:
    return d.density()


def restrict(x: Point, c: int) -> Point:
    """Initial segment of x over [start, c); requires start < c <= end."""
    if not x.shape.start < c <= x.shape.end:
        raise DomainError(f"cut {c} outside ({x.shape.start}, {x.shape.end}]")
    return Point(x.shape.prefix(c), x.coords[: c - x.shape.start])


def fiber(d: PointSet, x: Point) -> PointSet:
    """The set {y : x ++ y in d}, over the coordinates of d past those of x.

    x must share d's starting coordinate.  An empty x returns d itself; a
    full-length x gives a set over the empty product (one cell, set iff
    x in d).
    """
    if x.shape.start != d.shape.start:
        raise DomainError(
            f"prefix starts at {x.shape.start}, set starts at {d.shape.start}"
        )
    cut = x.shape.end
    if cut > d.shape.end:
        raise DomainError(f"prefix ends at {cut}, past the set's end {d.shape.end}")
    if d.shape.sizes[: len(x.coords)] != x.shape.sizes:
        raise DomainError("prefix coordinate sizes disagree with the set's")
    out_shape = d.shape.suffix(cut)
    stride = x.shape.total
    offset = x.shape.index_of(x.coords)
    if stride == 1:
        return PointSet(out_shape, d.bits)
    arr = d.to_bool_array()
    return PointSet.from_bool_array(out_shape, arr[offset::stride])


def fibers_by_first_coordinate(d: PointSet) -> list[PointSet]:
    """All fibers over single values of d's first coordinate, in value order.

    One bulk unpack instead of one per fiber; matters when d is large.
    """
    if not d.shape.sizes:
        raise DomainError("set has no coordinates to fiber over")
    n0 = d.shape.sizes[0]
    out_shape = d.shape.suffix(d.shape.start + 1)
    arr = d.to_bool_array().reshape(-1, n0)
    return [PointSet.from_bool_array(out_shape, np.ascontiguousarray(arr[:, x]))
            for x in range(n0)]


def concat_sets(a: PointSet, b: PointSet) -> PointSet:
    """{x ++ y : x in a, y in b} over the combined coordinate range."""
    if a.shape.end != b.shape.start:
        raise DomainError(
            f"ranges not contiguous: [{a.shape.start},{a.shape.end}) then "
            f"[{b.shape.start},{b.shape.end})"
        )
    out_shape = GridShape(a.shape.sizes + b.shape.sizes, a.shape.start)
    stride = a.shape.total
    ia = np.flatnonzero(a.to_bool_array())
    ib = np.flatnonzero(b.to_bool_array())
    out = np.zeros(out_shape.total, dtype=np.uint8)
    if ia.size and ib.size:
        out[(ia[None, :] + stride * ib[:, None]).ravel()] = 1
    return PointSet.from_bool_array(out_shape, out)


def contains_product(d: PointSet, witness: SubgridWitness,
                     prefix: Optional[PointSet] = None) -> bool:
    """Whether (prefix ++) the witness product lies inside d.

    The witness must start where d starts (or where `prefix` ends) and cover
    at least d's remaining coordinates; extra trailing subsets are ignored, so
    one long witness can be checked against every level of a family.
    """
    if prefix is None:
        if witness.start != d.shape.start:
            raise DomainError(
                f"witness starts at {witness.start}, set starts at {d.shape.start}"
            )
        prefix_indices: Sequence[int] = (0,)
        stride = 1
    else:
        if prefix.shape.start != d.shape.start:
            raise DomainError("prefix must start where the set starts")
        if prefix.shape.end != witness.start:
            raise DomainError(
                f"prefix ends at {prefix.shape.end}, witness starts at {witness.start}"
            )
        if prefix.shape.sizes != d.shape.sizes[: len(prefix.shape.sizes)]:
            raise DomainError("prefix coordinate sizes disagree with the set's")
        prefix_indices = prefix.indices()
        stride = prefix.shape.total
    needed = d.shape.end - witness.start
    if needed < 0 or needed > len(witness.subsets):
        raise DomainError(
            f"witness covers [{witness.start},{witness.end}), set needs "
            f"[{witness.start},{d.shape.end})"
        )
    suffix_sizes = d.shape.sizes[witness.start - d.shape.start:]
    for j, subset in enumerate(witness.subsets[:needed]):
        if subset[-1] >= suffix_sizes[j]:
            raise DomainError(
                f"witness value {subset[-1]} out of range at coordinate "
                f"{witness.start + j} (size {suffix_sizes[j]})"
            )
    bits = d.bits
    for combo in itertools.product(*witness.subsets[:needed]):
        suffix_index = 0
        s = 1
        for x, n in zip(combo, suffix_sizes):
            suffix_index += x * s
            s *= n
        base = stride * suffix_index
        for p in prefix_indices:
            if not bits >> (p + base) & 1:
                return False
    return True
