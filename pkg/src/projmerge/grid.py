"""Discrete grids [N]^t, part labelings, and axis-parallel projections.

Cells are stored row-major with axis 0 slowest (numpy C order), so the flat
index of cell ``(x_0, ..., x_{t-1})`` is ``sum(x_i * N**(t-1-i))``.  Sizes are
exact integers and fractions are :class:`fractions.Fraction`; floats appear
only when rendering.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_CELLS = 2**62
# cells per slab when scanning big grids; bounds peak temporary memory
_SLAB_CELLS = 1 << 24


@dataclass(frozen=True)
class GridDims:
    t: int
    side: int

    def __post_init__(self):
        if not isinstance(self.t, (int, np.integer)) or self.t < 1:
            raise PreconditionError(f"t must be a positive integer, got {self.t!r}")
        if not isinstance(self.side, (int, np.integer)) or self.side < 1:
            raise PreconditionError(f"side must be a positive integer, got {self.side!r}")
        if self.side**self.t > MAX_CELLS:
            raise DimensionError(f"[{self.side}]^{self.t} has too many cells to index")

    @property
    def n_cells(self) -> int:
        return self.side**self.t

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.t

    def cells(self):
        """Iterate all cells in row-major order."""
        return itertools.product(range(self.side), repeat=self.t)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CellMask:
    dims: GridDims
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.size != self.dims.n_cells:
            raise DimensionError(f"mask has {bits.size} bits, grid has {self.dims.n_cells} cells")
        object.__setattr__(self, "bits", _readonly(bits.reshape(self.dims.shape).copy()))

    @classmethod
    def from_cells(cls, dims: GridDims, cells: Iterable[Sequence[int]]) -> "CellMask":
        bits = np.zeros(dims.shape, dtype=bool)
        for cell in cells:
            if len(cell) != dims.t or not all(0 <= v < dims.side for v in cell):
                raise DimensionError(f"cell {tuple(cell)} is outside [{dims.side}]^{dims.t}")
            bits[tuple(cell)] = True
        return cls(dims, bits)

    @classmethod
    def full(cls, dims: GridDims) -> "CellMask":
        return cls(dims, np.ones(dims.shape, dtype=bool))

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __or__(self, other: "CellMask") -> "CellMask":
        self._same(other)
        return CellMask(self.dims, self.bits | other.bits)

    def __and__(self, other: "CellMask") -> "CellMask":
        self._same(other)
        return CellMask(self.dims, self.bits & other.bits)

    def issubset(self, other: "CellMask") -> bool:
        self._same(other)
        return not np.any(self.bits & ~other.bits)

    def _same(self, other):
        if self.dims != other.dims:
            raise DimensionError("masks live on different grids")

    def __eq__(self, other):
        return (
            isinstance(other, CellMask)
            and self.dims == other.dims
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.dims, self.bits.tobytes()))


@dataclass(frozen=True, order=True)
class AxisSubset:
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise PreconditionError("an axis subset needs at least one axis")
        if any(i < 0 for i in idx):
            raise DimensionError(f"negative axis index in {idx}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise PreconditionError(f"axis indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def s(self) -> int:
        return len(self.indices)

    def check(self, t: int) -> None:
        if self.indices[-1] >= t:
            raise DimensionError(f"axis {self.indices[-1]} out of range for t={t}")

    def complement(self, t: int) -> tuple:
        return tuple(a for a in range(t) if a not in self.indices)

    def __str__(self):
        return "{" + ",".join(map(str, self.indices)) + "}"


def axis_subsets(t: int, s: int) -> list:
    """All size-``s`` axis subsets of ``range(t)`` in lexicographic order."""
    if not 1 <= s <= t:
        raise PreconditionError(f"projection dimension s={s} must satisfy 1 <= s <= t={t}")
    return [AxisSubset(c) for c in itertools.combinations(range(t), s)]


@dataclass(frozen=True, eq=False)
class ProjectionImage:
    axes: AxisSubset
    side: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        shape = (self.side,) * self.axes.s
        if bits.shape != shape:
            raise DimensionError(f"image shape {bits.shape} does not match {shape}")
        object.__setattr__(self, "bits", _readonly(bits.copy()))

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.size, self.side**self.axes.s)

    def points(self):
        return [tuple(int(v) for v in p) for p in np.argwhere(self.bits)]

    def issubset(self, other: "ProjectionImage") -> bool:
        return self.axes == other.axes and not np.any(self.bits & ~other.bits)

    def __or__(self, other: "ProjectionImage") -> "ProjectionImage":
        if self.axes != other.axes or self.side != other.side:
            raise DimensionError("images over different axes")
        return ProjectionImage(self.axes, self.side, self.bits | other.bits)

    def __eq__(self, other):
        return (
            isinstance(other, ProjectionImage)
            and self.axes == other.axes
            and self.side == other.side
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.axes, self.side, self.bits.tobytes()))


def _label_dtype(c: int):
    return np.uint8 if c <= 256 else np.int64


@dataclass(frozen=True, eq=False)
class PartLabeling:
    """A c-part labeling of [N]^t; ``labels`` has shape ``dims.shape``."""

    dims: GridDims
    c: int
    labels: np.ndarray

    def __post_init__(self):
        if self.c < 1:
            raise PreconditionError(f"part count must be positive, got {self.c}")
        labels = np.asarray(self.labels)
        if labels.size != self.dims.n_cells:
            raise DimensionError(
                f"{labels.size} labels given for {self.dims.n_cells} cells"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.c):
            raise PreconditionError(f"labels must lie in 0..{self.c - 1}")
        dtype = _label_dtype(self.c)
        if labels.dtype != dtype or labels.shape != self.dims.shape or labels.flags.writeable:
            labels = labels.astype(dtype).reshape(self.dims.shape)
        object.__setattr__(self, "labels", _readonly(labels))

    @property
    def flat(self) -> np.ndarray:
        return self.labels.reshape(-1)

    def part_mask(self, part: int) -> CellMask:
        if not 0 <= part < self.c:
            raise PreconditionError(f"part {part} out of range for c={self.c}")
        return CellMask(self.dims, self.labels == part)

    def part_sizes(self) -> list:
        counts = np.bincount(self.flat, minlength=self.c)
        return [int(v) for v in counts]

    def label_string(self) -> str:
        if self.c > len(DIGITS):
            raise PreconditionError(f"digit strings support at most {len(DIGITS)} parts")
        table = np.frombuffer(DIGITS.encode("ascii"), dtype=np.uint8)
        return table[self.flat].tobytes().decode("ascii")

    @classmethod
    def from_string(cls, t: int, n: int, c: int, labels: str) -> "PartLabeling":
        dims = GridDims(t, n)
        if len(labels) != dims.n_cells:
            raise DimensionError(f"label string has length {len(labels)}, expected {dims.n_cells}")
        lookup = np.full(256, 255, dtype=np.int64)
        for value, ch in enumerate(DIGITS[:c]):
            lookup[ord(ch)] = value
        raw = np.frombuffer(labels.encode("ascii"), dtype=np.uint8)
        values = lookup[raw]
        if np.any(values >= c):
            raise PreconditionError(f"label string has a digit outside base {c}")
        return cls(dims, c, values)

    def to_dict(self) -> dict:
        return {"t": self.dims.t, "n": self.dims.side, "c": self.c, "labels": self.label_string()}

    @classmethod
    def from_dict(cls, data: dict) -> "PartLabeling":
        missing = {"t", "n", "c", "labels"} - set(data)
        if missing:
            raise PreconditionError(f"partition file is missing {sorted(missing)}")
        return cls.from_string(int(data["t"]), int(data["n"]), int(data["c"]), str(data["labels"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "PartLabeling":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return (
            isinstance(other, PartLabeling)
            and self.dims == other.dims
            and self.c == other.c
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash((self.dims, self.c, self.labels.tobytes()))


def project(mask: CellMask, axes: AxisSubset) -> ProjectionImage:
    """Image of ``mask`` after deleting every axis outside ``axes``."""
    axes.check(mask.dims.t)
    drop = axes.complement(mask.dims.t)
    bits = mask.bits.any(axis=drop) if drop else mask.bits
    return ProjectionImage(axes, mask.dims.side, bits)


def _presence_dtype(c: int):
    if c <= 8:
        return np.uint8
    if c <= 16:
        return np.uint16
    if c <= 32:
        return np.uint32
    if c <= 64:
        return np.uint64
    return None


def presence_maps(p: PartLabeling, subsets: Sequence[AxisSubset]) -> dict:
    """For each axis subset, an array over [N]^s of bitmasks of the parts seen there.

    Bit ``b`` of entry ``q`` is set iff part ``b`` has a cell projecting onto
    ``q``.  Large grids are scanned in slabs along axis 0.
    """
    dims = p.dims
    dtype = _presence_dtype(p.c)
    if dtype is None:
        raise PreconditionError("presence maps support at most 64 parts")
    for U in subsets:
        U.check(dims.t)
    N, t = dims.side, dims.t
    out = {U: np.zeros((N,) * U.s, dtype=dtype) for U in subsets}
    rows = max(1, _SLAB_CELLS // max(1, N ** (t - 1)))
    one = dtype(1)
    for start in range(0, N, rows):
        stop = min(N, start + rows)
        bits = np.left_shift(one, p.labels[start:stop].astype(dtype))
        for U in subsets:
            drop = U.complement(t)
            red = np.bitwise_or.reduce(bits, axis=drop) if drop else bits
            if 0 in U.indices:
                out[U][start:stop] = red
            else:
                out[U] |= red
    return out


@dataclass(frozen=True)
class ProjectionEntry:
    part: int
    axes: AxisSubset
    size: int
    fraction: Fraction

    @property
    def fraction_float(self) -> float:
        return float(self.fraction)

    def to_dict(self) -> dict:
        return {
            "part": self.part,
            "axes": list(self.axes.indices),
            "size": self.size,
            "fraction": f"{self.fraction.numerator}/{self.fraction.denominator}",
            "fraction_float": self.fraction_float,
        }


def projection_sizes(p: PartLabeling, s: int) -> np.ndarray:
    """Integer array ``sizes[part, k]`` for the k-th subset of ``axis_subsets(t, s)``."""
    subsets = axis_subsets(p.dims.t, s)
    maps = presence_maps(p, subsets)
    sizes = np.zeros((p.c, len(subsets)), dtype=np.int64)
    for k, U in enumerate(subsets):
        pres = maps[U]
        for part in range(p.c):
            sizes[part, k] = np.count_nonzero(pres & pres.dtype.type(1 << part))
    return sizes


def projection_fraction_table(p: PartLabeling, s: int) -> list:
    """One :class:`ProjectionEntry` per (part, axis subset), part-major."""
    subsets = axis_subsets(p.dims.t, s)
    sizes = projection_sizes(p, s)
    total = p.dims.side**s
    return [
        ProjectionEntry(part, U, int(sizes[part, k]), Fraction(int(sizes[part, k]), total))
        for part in range(p.c)
        for k, U in enumerate(subsets)
    ]


@dataclass(frozen=True)
class MaxProjection:
    size: int
    part: int
    axes: AxisSubset
    fraction: Fraction


def max_projection(p: PartLabeling, s: int) -> MaxProjection:
    """Largest projection; ties go to the smallest part, then the smallest axis subset."""
    best = None
    for entry in projection_fraction_table(p, s):
        if best is None or entry.size > best.size:
            best = entry
    return MaxProjection(best.size, best.part, best.axes, best.fraction)


def column_index(dims: GridDims, s: int) -> np.ndarray:
    """``col[k, cell]`` = row-major index in [N]^s of ``cell`` projected onto subset k.

    This is the per-column lookup the search engine updates incrementally.
    """
    subsets = axis_subsets(dims.t, s)
    coords = np.indices(dims.shape).reshape(dims.t, -1)
    col = np.zeros((len(subsets), dims.n_cells), dtype=np.int64)
    for k, U in enumerate(subsets):
        for a in U.indices:
            col[k] = col[k] * dims.side + coords[a]
    return col


def n_axis_subsets(t: int, s: int) -> int:
    return comb(t, s)
