"""Named partitions of [N]^t: majority, golden ratio, product and threshold schemes."""

from __future__ import annotations

import enum
import math
from typing import Callable, Sequence

import numpy as np

from .bounds import GOLDEN_U
from .errors import PreconditionError
from .grid import GridDims, PartLabeling, _SLAB_CELLS, _label_dtype

_U8 = np.arange(3, dtype=np.uint8)


class GrVariant(enum.Enum):
    FIGURE = "figure"
    LITERAL = "literal"


def discretize(theta: float, n: int) -> int:
    """Grid index for continuous threshold ``theta`` in [0, 1], rounding halves up."""
    return math.floor(theta * n + 0.5)


def _build(dims: GridDims, c: int, rule: Callable) -> PartLabeling:
    """Evaluate ``rule`` on open index grids slab by slab (axis 0 slowest)."""
    N, t = dims.side, dims.t
    labels = np.empty(dims.shape, dtype=_label_dtype(c))
    rows = max(1, _SLAB_CELLS // max(1, N ** (t - 1)))
    for start in range(0, N, rows):
        stop = min(N, start + rows)
        coords = np.ogrid[(slice(start, stop),) + (slice(0, N),) * (t - 1)]
        labels[start:stop] = np.broadcast_to(rule(*coords), labels[start:stop].shape)
    return PartLabeling(dims, c, labels)


def _high(coord, n):
    # coordinate lies in the upper half: x >= N/2
    return (2 * coord >= n).astype(np.uint8)


def maj3_partition(n: int) -> PartLabeling:
    """Two parts by majority of the three upper-half indicators; needs even ``n``."""
    if n < 2 or n % 2:
        raise PreconditionError(f"majority scheme needs an even side length, got {n}")
    return _build(GridDims(3, n), 2, lambda x, y, z: (_high(x, n) + _high(y, n) + _high(z, n)) >= 2)


def gr3_partition(n: int, variant: GrVariant | str = GrVariant.FIGURE) -> PartLabeling:
    """Golden-ratio three-part scheme.

    The ``figure`` variant follows the drawn construction, whose largest
    2-dimensional projection tends to u = (sqrt 5 - 1)/2.  The ``literal``
    variant follows the printed case definition, which has two parts covering
    far more than u of some face.
    """
    variant = GrVariant(variant)
    if n < 2:
        raise PreconditionError(f"golden ratio scheme needs n >= 2, got {n}")
    k = discretize(GOLDEN_U, n)
    half = (n + 1) // 2
    if variant is GrVariant.FIGURE:
        def rule(x, y, z):
            blue = (x >= n - k) & (z < k)
            rest = np.where(y < half, _U8[1], _U8[2])
            return np.where(blue, _U8[0], rest)
    else:
        def rule(x, y, z):
            first = (x >= k) & (y >= k)
            second = (x < k) & (y < k) & (z < half)
            return np.where(first, _U8[0], np.where(second, _U8[1], _U8[2]))
    return _build(GridDims(3, n), 3, rule)


def product_partition(n: int, t: int, k: int) -> PartLabeling:
    """``k**t`` box parts; part id is the row-major tuple of per-axis block indices."""
    if k < 1 or n % k:
        raise PreconditionError(f"split count k={k} must divide n={n}")
    c = k**t

    def rule(*coords):
        label = 0
        for x in coords:
            label = label * k + (x * k) // n
        return label

    return _build(GridDims(t, n), c, rule)


def threshold_partition(n: int, t: int, c: int, cutoffs: Sequence[int]) -> PartLabeling:
    """Band partition on the number of coordinates in the upper half.

    A cell whose upper-half count is ``h`` gets the number of cutoffs ``<= h``.
    """
    cutoffs = [int(v) for v in cutoffs]
    if len(cutoffs) != c - 1:
        raise PreconditionError(f"{c} parts need {c - 1} cutoffs, got {len(cutoffs)}")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise PreconditionError(f"cutoffs must be strictly increasing, got {cutoffs}")
    if cutoffs and (cutoffs[0] < 0 or cutoffs[-1] > t):
        raise PreconditionError(f"cutoffs must lie in [0, {t}]")
    bands = np.asarray(cutoffs, dtype=np.int64)

    def rule(*coords):
        h = sum(_high(x, n) for x in coords)
        return np.searchsorted(bands, h, side="right")

    return _build(GridDims(t, n), c, rule)


SCHEMES = ("maj3", "gr3-figure", "gr3-literal", "product", "threshold")


def build_scheme(name: str, n: int, t: int = 3, c: int = 2, k: int = 2, cutoffs=None) -> PartLabeling:
    """Dispatch by scheme name as used on the command line."""
    if name == "maj3":
        return maj3_partition(n)
    if name == "gr3-figure":
        return gr3_partition(n, GrVariant.FIGURE)
    if name == "gr3-literal":
        return gr3_partition(n, GrVariant.LITERAL)
    if name == "product":
        return product_partition(n, t, k)
    if name == "threshold":
        if cutoffs is None:
            cutoffs = [t // 2 + 1] if c == 2 else list(range(1, c))
        return threshold_partition(n, t, c, cutoffs)
    raise PreconditionError(f"unknown scheme {name!r}; expected one of {', '.join(SCHEMES)}")
