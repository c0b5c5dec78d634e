"""Min-max projection search over all c-part labelings of a small grid.

The exhaustive engine is a depth-first branch and bound over cells in
row-major order.  Per-column counters (one per part, axis subset and point of
[N]^s) are updated incrementally, so assigning a cell costs O(C(t, s)).  A
branch is cut as soon as some projection reaches the best complete value
found so far; projections only grow as cells are added, so the cut is sound.
Labels are tried in increasing order, which makes the first optimum found the
lexicographically smallest one.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, check_budget
from .grid import GridDims, PartLabeling, column_index, max_projection, n_axis_subsets

EXHAUSTIVE_BUDGET = 2**34

SYMMETRIES = ("none", "fix-first-cell", "part-relabel", "coordinate-perms")
MODES = ("exhaustive", "anneal")
_NORM_POWER = 8


@dataclass(frozen=True)
class Schedule:
    initial_temperature: float = 2.0
    cooling: float = 0.9995
    steps: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise PreconditionError(f"cooling factor must lie in (0, 1), got {self.cooling}")
        if self.steps < 0:
            raise PreconditionError("steps must be non-negative")
        if self.initial_temperature <= 0:
            raise PreconditionError("initial temperature must be positive")

    @classmethod
    def for_steps(cls, steps: int, initial_temperature: float = 2.0, final_temperature: float = 0.01):
        """Geometric schedule that cools from the initial to the final temperature."""
        cooling = (final_temperature / initial_temperature) ** (1.0 / max(1, steps))
        return cls(initial_temperature, min(cooling, 1.0 - 1e-12), steps)


@dataclass(frozen=True)
class SearchConfig:
    dims: GridDims
    c: int
    s: int
    mode: str = "exhaustive"
    symmetry: frozenset = field(default_factory=lambda: frozenset({"part-relabel"}))
    rng_seed: int = 0
    schedule: Schedule = field(default_factory=Schedule)
    shards: int = 1
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "symmetry", frozenset(self.symmetry))
        if self.c < 1:
            raise PreconditionError(f"part count must be positive, got {self.c}")
        if not 1 <= self.s <= self.dims.t:
            raise PreconditionError(f"need 1 <= s <= t, got s={self.s}, t={self.dims.t}")
        if self.mode not in MODES:
            raise PreconditionError(f"mode must be one of {MODES}, got {self.mode!r}")
        unknown = self.symmetry - set(SYMMETRIES)
        if unknown:
            raise PreconditionError(f"unknown symmetries {sorted(unknown)}")
        if not 0 <= self.rng_seed < 2**64:
            raise PreconditionError("rng_seed must be a 64-bit unsigned integer")
        if self.shards < 1 or self.workers < 1:
            raise PreconditionError("shards and workers must be positive")


@dataclass(frozen=True)
class SearchResult:
    minmax_value: int
    witness: PartLabeling
    states_visited: int
    certified: bool
    s: int

    def __post_init__(self):
        actual = max_projection(self.witness, self.s).size
        if actual != self.minmax_value:
            raise AssertionError(
                f"witness has max projection {actual}, result claims {self.minmax_value}"
            )

    def to_dict(self) -> dict:
        return {
            "minmax_value": self.minmax_value,
            "states_visited": self.states_visited,
            "certified": self.certified,
            "s": self.s,
            "witness": self.witness.to_dict(),
        }


def _restricted_growth_count(n: int, c: int) -> int:
    """Number of label strings of length n using <= c parts in first-occurrence order."""
    # stirling[k] = S(i, k) for the current length i
    stirling = [1] + [0] * c
    for _ in range(n):
        nxt = [0] * (c + 1)
        for k in range(1, c + 1):
            nxt[k] = k * stirling[k] + stirling[k - 1]
        stirling = nxt
    return sum(stirling[1:]) if n else 1


def state_count(dims: GridDims, c: int, symmetry) -> int:
    """Labelings left to enumerate after the label-order symmetry reductions."""
    n = dims.n_cells
    if "part-relabel" in symmetry:
        return _restricted_growth_count(n, c)
    if "fix-first-cell" in symmetry:
        return c ** (n - 1)
    return c**n


class _Engine:
    """Incremental projection counters shared by the exhaustive and local searches."""

    def __init__(self, dims: GridDims, c: int, s: int):
        col = column_index(dims, s)
        self.n = dims.n_cells
        self.c = c
        self.n_sub = col.shape[0]
        self.n_cols = dims.side**s
        block = self.n_sub * self.n_cols
        # offsets[i][k]: flat counter index of cell i in subset k, for part 0
        self.offsets = [
            [(k, k * self.n_cols + int(col[k, i])) for k in range(self.n_sub)] for i in range(self.n)
        ]
        self.block = block
        self.counts = [0] * (c * block)
        self.sizes = [0] * (c * self.n_sub)

    def add(self, cell: int, part: int) -> int:
        """Assign; return the largest size among the touched projections."""
        counts, sizes = self.counts, self.sizes
        base_c, base_s = part * self.block, part * self.n_sub
        top = 0
        for k, off in self.offsets[cell]:
            j = base_c + off
            if counts[j] == 0:
                sizes[base_s + k] += 1
            counts[j] += 1
            if sizes[base_s + k] > top:
                top = sizes[base_s + k]
        return top

    def remove(self, cell: int, part: int) -> None:
        counts, sizes = self.counts, self.sizes
        base_c, base_s = part * self.block, part * self.n_sub
        for k, off in self.offsets[cell]:
            j = base_c + off
            counts[j] -= 1
            if counts[j] == 0:
                sizes[base_s + k] -= 1


def _dfs(dims: GridDims, c: int, s: int, prefix: tuple, bound: int, growth: bool):
    """Branch and bound below a fixed prefix.

    Returns ``(value, labels, nodes)`` for the lexicographically smallest
    labeling whose max projection is the least value ``< bound`` in this
    subtree, or ``(None, None, nodes)`` if every labeling reaches ``bound``.
    """
    eng = _Engine(dims, c, s)
    n = eng.n
    labels = [-1] * n
    cur_max = [0] * (n + 1)
    max_used = [-1] * (n + 1)
    top = 0
    for i, part in enumerate(prefix):
        labels[i] = part
        top = max(top, eng.add(i, part))
        cur_max[i + 1] = top
        max_used[i + 1] = max(max_used[i], part)
    best, best_labels, nodes = bound, None, 0
    start = len(prefix)
    if top >= best:
        return None, None, nodes
    if start == n:
        return top, list(labels), nodes
    d = start
    labels[d] = -1
    while d >= start:
        part = labels[d]
        if part >= 0:
            eng.remove(d, part)
        part += 1
        limit = c - 1
        if growth and max_used[d] + 1 < limit:
            limit = max_used[d] + 1
        if part > limit:
            labels[d] = -1
            d -= 1
            continue
        labels[d] = part
        nodes += 1
        m = max(cur_max[d], eng.add(d, part))
        if m >= best:
            continue
        if d == n - 1:
            best, best_labels = m, list(labels)
            continue
        cur_max[d + 1] = m
        max_used[d + 1] = max(max_used[d], part)
        d += 1
        labels[d] = -1
    if best_labels is None:
        return None, None, nodes
    return best, best_labels, nodes


def _valid_prefixes(n: int, c: int, length: int, symmetry):
    growth = "part-relabel" in symmetry
    fix_first = "fix-first-cell" in symmetry or growth
    out = []
    for prefix in itertools.product(range(c), repeat=length):
        if fix_first and length and prefix[0] != 0:
            continue
        if growth:
            seen = -1
            ok = True
            for v in prefix:
                if v > seen + 1:
                    ok = False
                    break
                seen = max(seen, v)
            if not ok:
                continue
        out.append(prefix)
    return out


def shard_prefixes(cfg: SearchConfig) -> list:
    """Shortest label prefixes, in lexicographic order, giving at least ``cfg.shards`` shards."""
    n = cfg.dims.n_cells
    length = 1 if ("fix-first-cell" in cfg.symmetry or "part-relabel" in cfg.symmetry) else 0
    prefixes = _valid_prefixes(n, cfg.c, length, cfg.symmetry)
    while len(prefixes) < cfg.shards and length < n:
        length += 1
        prefixes = _valid_prefixes(n, cfg.c, length, cfg.symmetry)
    return prefixes


def _run_shard(args):
    dims, c, s, prefix, bound, growth = args
    return _dfs(dims, c, s, prefix, bound, growth)


def exhaustive_minmax(cfg: SearchConfig) -> SearchResult:
    """Certified minimum over all labelings of the maximum s-dim projection."""
    dims = cfg.dims
    check_budget(
        f"exhaustive search over [{dims.side}]^{dims.t} with {cfg.c} parts",
        state_count(dims, cfg.c, cfg.symmetry),
        EXHAUSTIVE_BUDGET,
    )
    growth = "part-relabel" in cfg.symmetry
    # every labeling has max projection <= N^s, so N^s + 1 admits them all
    bound = dims.side**cfg.s + 1
    prefixes = shard_prefixes(cfg)
    jobs = [(dims, cfg.c, cfg.s, p, bound, growth) for p in prefixes]
    workers = min(cfg.workers, len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_shard, jobs))
    else:
        results = [_run_shard(job) for job in jobs]
    nodes = sum(r[2] for r in results)
    found = [(r[0], r[1]) for r in results if r[0] is not None]
    value, labels = min(found)
    witness = PartLabeling(dims, cfg.c, np.asarray(labels))
    return SearchResult(value, witness, nodes, True, cfg.s)


def local_search_minmax(cfg: SearchConfig) -> SearchResult:
    """Simulated annealing over single-cell relabels.

    Candidates are ranked by (max projection, sum of squared projection
    sizes).  The walk itself is guided by the 8-norm of the size vector, a
    smooth surrogate for the max that still sees moves which shrink a
    non-maximal projection.  Deterministic for a fixed ``rng_seed``.
    """
    if cfg.mode != "anneal":
        raise PreconditionError("local search needs mode='anneal'")
    dims, c, s = cfg.dims, cfg.c, cfg.s
    n = dims.n_cells
    if c == 1:
        witness = PartLabeling(dims, 1, np.zeros(n, dtype=np.uint8))
        return SearchResult(dims.side**s, witness, 0, False, s)
    rng = np.random.default_rng(cfg.rng_seed)
    labels = [int(v) for v in rng.integers(c, size=n)]
    eng = _Engine(dims, c, s)
    for i, part in enumerate(labels):
        eng.add(i, part)
    sizes = eng.sizes
    def energy():
        return math.fsum(float(v) ** _NORM_POWER for v in sizes) ** (1.0 / _NORM_POWER)

    steps = cfg.schedule.steps
    cells = rng.integers(n, size=steps)
    shifts = rng.integers(1, c, size=steps)
    coins = rng.random(steps)
    current = energy()
    best_key = (max(sizes), sum(v * v for v in sizes))
    best_labels = list(labels)
    temperature = cfg.schedule.initial_temperature
    for step in range(steps):
        cell = int(cells[step])
        old = labels[cell]
        new = (old + int(shifts[step])) % c
        eng.remove(cell, old)
        eng.add(cell, new)
        proposed = energy()
        delta = proposed - current
        if delta <= 0 or coins[step] < math.exp(-delta / temperature):
            labels[cell] = new
            current = proposed
            key = (max(sizes), sum(v * v for v in sizes))
            if key < best_key:
                best_key, best_labels = key, list(labels)
        else:
            eng.remove(cell, new)
            eng.add(cell, old)
        temperature *= cfg.schedule.cooling
    witness = PartLabeling(dims, c, np.asarray(best_labels))
    return SearchResult(best_key[0], witness, steps, False, s)


def run_search(cfg: SearchConfig) -> SearchResult:
    if cfg.mode == "exhaustive":
        return exhaustive_minmax(cfg)
    return local_search_minmax(cfg)


def _first_occurrence_relabel(flat: np.ndarray, c: int) -> np.ndarray:
    mapping = np.full(c, -1, dtype=np.int64)
    nxt = 0
    for v in flat:
        if mapping[v] < 0:
            mapping[v] = nxt
            nxt += 1
            if nxt == c:
                break
    mapping[mapping < 0] = np.arange(nxt, c)[: int(np.sum(mapping < 0))]
    return mapping[flat]


def apply_symmetry(p: PartLabeling, perm=None, flips=(), relabel=None) -> PartLabeling:
    """Permute axes (``perm[i]`` is the source axis of new axis i), reverse axes, rename parts."""
    arr = p.labels
    if perm is not None:
        arr = np.transpose(arr, perm)
    for axis in flips:
        arr = np.flip(arr, axis=axis)
    arr = np.ascontiguousarray(arr)
    if relabel is not None:
        arr = np.asarray(relabel, dtype=np.int64)[arr]
    return PartLabeling(p.dims, p.c, arr)


def geometric_symmetries(t: int):
    """All (perm, flips) pairs: t! coordinate permutations times 2^t reversals."""
    for perm in itertools.permutations(range(t)):
        for mask in range(2**t):
            yield perm, tuple(a for a in range(t) if mask >> a & 1)


def canonicalize(p: PartLabeling) -> PartLabeling:
    """Lexicographically least labeling in the orbit under parts, axes and reversals."""
    best = None
    for perm, flips in geometric_symmetries(p.dims.t):
        moved = apply_symmetry(p, perm, flips).flat.astype(np.int64)
        candidate = _first_occurrence_relabel(moved, p.c).astype(np.uint8 if p.c <= 256 else np.int64)
        key = candidate.tobytes() if p.c <= 256 else tuple(candidate)
        if best is None or key < best[0]:
            best = (key, candidate)
    return PartLabeling(p.dims, p.c, best[1])


def symmetry_count(t: int, c: int) -> int:
    return math.factorial(c) * math.factorial(t) * 2**t

