"""Somewhere-random sources, extracting mergers and multimergers at micro scale.

A merger is stored as a full truth table ``E[x_1, ..., x_t, j]`` with values
in ``range(m_vals)``.  A source is described by the set of coordinates that
are jointly uniform and a deterministic adversary that fills in the others.
Every probability and distance here is an exact :class:`Fraction`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionError, PreconditionError, check_budget
from .grid import DIGITS, AxisSubset, GridDims, PartLabeling, axis_subsets

ADVERSARY_BUDGET = 2**30
FLAT_SOURCE_BUDGET = 2**20
# explicit enumeration materialises one row per adversary
ENUMERATION_BUDGET = 2**22


def as_fraction(value) -> Fraction:
    """Exact rational for ints, Fractions, strings like '1/4', and floats by their decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class MergerTable:
    n_vals: int
    t: int
    d_vals: int
    m_vals: int
    table: np.ndarray

    def __post_init__(self):
        for name in ("n_vals", "t", "d_vals", "m_vals"):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be positive")
        shape = (self.n_vals,) * self.t + (self.d_vals,)
        table = np.asarray(self.table)
        if table.size != math.prod(shape):
            raise DimensionError(f"table has {table.size} entries, expected {math.prod(shape)}")
        table = table.astype(np.int64).reshape(shape)
        if table.size and (table.min() < 0 or table.max() >= self.m_vals):
            raise PreconditionError(f"table entries must lie in 0..{self.m_vals - 1}")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, n_vals: int, t: int, d_vals: int, m_vals: int, fn: Callable) -> "MergerTable":
        """Tabulate ``fn(cell, j)`` over all cells and seeds."""
        table = np.empty((n_vals,) * t + (d_vals,), dtype=np.int64)
        for cell in itertools.product(range(n_vals), repeat=t):
            for j in range(d_vals):
                table[cell + (j,)] = fn(cell, j)
        return cls(n_vals, t, d_vals, m_vals, table)

    @property
    def seedless(self) -> bool:
        return self.d_vals == 1

    def __call__(self, cell: Sequence[int], j: int = 0) -> int:
        return int(self.table[tuple(cell) + (j,)])

    def digit_string(self) -> str:
        if self.m_vals > len(DIGITS):
            raise PreconditionError(f"digit strings support at most {len(DIGITS)} output values")
        return "".join(DIGITS[v] for v in self.table.reshape(-1))

    def to_dict(self) -> dict:
        return {
            "n_vals": self.n_vals,
            "t": self.t,
            "d_vals": self.d_vals,
            "m_vals": self.m_vals,
            "table": self.digit_string(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MergerTable":
        missing = {"n_vals", "t", "d_vals", "m_vals", "table"} - set(data)
        if missing:
            raise PreconditionError(f"merger file is missing {sorted(missing)}")
        m_vals = int(data["m_vals"])
        digits = str(data["table"])
        lookup = {ch: v for v, ch in enumerate(DIGITS[:m_vals])}
        try:
            values = [lookup[ch] for ch in digits]
        except KeyError as exc:
            raise PreconditionError(f"table digit {exc.args[0]!r} outside base {m_vals}") from None
        return cls(int(data["n_vals"]), int(data["t"]), int(data["d_vals"]), m_vals, np.asarray(values))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "MergerTable":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return (
            isinstance(other, MergerTable)
            and (self.n_vals, self.t, self.d_vals, self.m_vals)
            == (other.n_vals, other.t, other.d_vals, other.m_vals)
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.n_vals, self.t, self.d_vals, self.m_vals, self.table.tobytes()))


@dataclass(frozen=True)
class Distribution:
    weights: tuple

    def __post_init__(self):
        weights = tuple(as_fraction(w) for w in self.weights)
        if not weights:
            raise PreconditionError("a distribution needs at least one outcome")
        if any(w < 0 for w in weights):
            raise PreconditionError("probabilities must be non-negative")
        if sum(weights) != 1:
            raise PreconditionError(f"probabilities sum to {sum(weights)}, not 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls((Fraction(1, k),) * k)

    @classmethod
    def point(cls, k: int, outcome: int) -> "Distribution":
        return cls(tuple(Fraction(int(i == outcome)) for i in range(k)))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "Distribution":
        total = sum(int(c) for c in counts)
        return cls(tuple(Fraction(int(c), total) for c in counts))

    @property
    def outcome_count(self) -> int:
        return len(self.weights)


def statistical_distance(p: Distribution, q: Distribution) -> Fraction:
    if p.outcome_count != q.outcome_count:
        raise DimensionError(f"supports differ: {p.outcome_count} vs {q.outcome_count} outcomes")
    return sum((abs(a - b) for a, b in zip(p.weights, q.weights)), Fraction(0)) / 2


@dataclass(frozen=True, eq=False)
class AdversaryStrategy:
    """Total map from assignments of the uniform coordinates to the remaining ones.

    ``completion[u]`` lists the values of the non-uniform coordinates (in
    increasing axis order) when the uniform coordinates take the ``u``-th
    assignment of [N]^s in row-major order.
    """

    n_vals: int
    s: int
    completion: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.completion, dtype=np.int64)
        rows = self.n_vals**self.s
        if comp.ndim == 1:
            comp = comp.reshape(rows, -1) if rows else comp
        if comp.shape[0] != rows:
            raise DimensionError(f"adversary defines {comp.shape[0]} of {rows} uniform assignments")
        if comp.size and (comp.min() < 0 or comp.max() >= self.n_vals):
            raise PreconditionError(f"adversary values must lie in 0..{self.n_vals - 1}")
        comp.flags.writeable = False
        object.__setattr__(self, "completion", comp)

    @property
    def free(self) -> int:
        return self.completion.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, AdversaryStrategy)
            and (self.n_vals, self.s) == (other.n_vals, other.s)
            and np.array_equal(self.completion, other.completion)
        )

    def __hash__(self):
        return hash((self.n_vals, self.s, self.completion.tobytes()))


@dataclass(frozen=True)
class SourceSpec:
    """A t-part s-where random source: ``uniform_set`` is uniform, the rest follow ``adversary``."""

    t: int
    uniform_set: AxisSubset
    adversary: AdversaryStrategy

    def __post_init__(self):
        uniform = self.uniform_set
        if not isinstance(uniform, AxisSubset):
            uniform = AxisSubset(tuple(uniform))
            object.__setattr__(self, "uniform_set", uniform)
        uniform.check(self.t)
        if self.adversary.s != uniform.s or self.adversary.free != self.t - uniform.s:
            raise DimensionError("adversary shape does not match the uniform coordinate set")

    @classmethod
    def from_function(cls, n_vals: int, t: int, uniform_set, fn: Callable) -> "SourceSpec":
        """``fn(u)`` maps a tuple of uniform values to a tuple of the remaining values."""
        uniform = uniform_set if isinstance(uniform_set, AxisSubset) else AxisSubset(tuple(uniform_set))
        rows = [tuple(fn(u)) for u in itertools.product(range(n_vals), repeat=uniform.s)]
        comp = np.asarray(rows, dtype=np.int64).reshape(n_vals**uniform.s, t - uniform.s)
        return cls(t, uniform, AdversaryStrategy(n_vals, uniform.s, comp))

    def cells(self) -> np.ndarray:
        """Array of shape (N^s, t): the full cell produced from each uniform assignment."""
        n = self.adversary.n_vals
        uniform = np.asarray(list(itertools.product(range(n), repeat=self.uniform_set.s)), dtype=np.int64)
        out = np.empty((len(uniform), self.t), dtype=np.int64)
        out[:, list(self.uniform_set.indices)] = uniform
        rest = self.uniform_set.complement(self.t)
        if rest:
            out[:, list(rest)] = self.adversary.completion
        return out

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "uniform_set": list(self.uniform_set.indices),
            "completion": self.adversary.completion.tolist(),
        }


def output_distribution(E: MergerTable, source: SourceSpec, j: int = 0) -> Distribution:
    """Exact distribution of ``E(X, j)`` for the source ``X``."""
    if source.t != E.t or source.adversary.n_vals != E.n_vals:
        raise DimensionError("source and merger shapes differ")
    cells = source.cells()
    values = E.table[tuple(cells.T) + (j,)]
    return Distribution.from_counts(np.bincount(values, minlength=E.m_vals))


def _outputs_by_uniform(E: MergerTable, U: AxisSubset) -> np.ndarray:
    """``out[u, c, j]`` = E at uniform assignment u, completion c, seed j."""
    moved = np.moveaxis(E.table, list(U.indices), list(range(U.s)))
    return moved.reshape(E.n_vals**U.s, E.n_vals ** (E.t - U.s), E.d_vals)


def _completion_rows(n_vals: int, free: int) -> np.ndarray:
    return np.asarray(list(itertools.product(range(n_vals), repeat=free)), dtype=np.int64).reshape(
        n_vals**free, free
    )


# ---------------------------------------------------------------------------
# seedless binary multimergers and partitions


def multimerger_from_partition(p: PartLabeling) -> MergerTable:
    if p.c != 2:
        raise PreconditionError(f"a one-bit multimerger needs a 2-part labeling, got c={p.c}")
    return MergerTable(p.dims.side, p.dims.t, 1, 2, p.labels.reshape(p.dims.shape + (1,)))


def partition_from_multimerger(E: MergerTable) -> PartLabeling:
    if E.d_vals != 1 or E.m_vals != 2:
        raise PreconditionError("need a seedless merger with one output bit")
    return PartLabeling(GridDims(E.t, E.n_vals), 2, E.table[..., 0])


@dataclass(frozen=True)
class MultimergerError:
    sd: Fraction
    part: int
    axes: AxisSubset
    fraction: Fraction
    source: SourceSpec


def _require_seedless_binary(E: MergerTable):
    if E.d_vals != 1 or E.m_vals != 2:
        raise PreconditionError(f"need D=1 and M=2, got D={E.d_vals}, M={E.m_vals}")


def multimerger_sd_exact(E: MergerTable, s: int) -> MultimergerError:
    """Worst statistical distance from uniform over all s-where sources.

    For output bit ``b`` and uniform set ``U`` the adversary completes each
    uniform assignment into ``E^{-1}(b)`` whenever it can, so ``Pr[E = b]``
    equals the fraction of [N]^s covered by the projection of ``E^{-1}(b)``.
    """
    _require_seedless_binary(E)
    best = None
    for U in axis_subsets(E.t, s):
        out = _outputs_by_uniform(E, U)[..., 0]
        rows = _completion_rows(E.n_vals, E.t - s)
        for b in (0, 1):
            hit = out == b
            covered = hit.any(axis=1)
            frac = Fraction(int(covered.sum()), out.shape[0])
            if best is None or frac > best[0]:
                # first completion landing in E^-1(b), else completion 0
                choice = np.argmax(hit, axis=1)
                adversary = AdversaryStrategy(E.n_vals, s, rows[choice])
                best = (frac, b, U, SourceSpec(E.t, U, adversary))
    frac, b, U, source = best
    return MultimergerError(max(frac - Fraction(1, 2), Fraction(0)), b, U, frac, source)


def enumerate_adversary_outcomes(E: MergerTable, U: AxisSubset, j: int = 0) -> np.ndarray:
    """Output counts for every deterministic adversary over uniform set ``U``.

    Returns an array of shape (Q^P, M): one histogram per adversary, where
    P = N^s uniform assignments and Q = N^(t-s) completions each.  Adversaries
    are listed in ``itertools.product`` order of their completion indices.
    """
    out = _outputs_by_uniform(E, U)[..., j]
    P, Q = out.shape
    check_budget("adversary enumeration", Q**P, ENUMERATION_BUDGET)
    choices = np.indices((Q,) * P).reshape(P, -1).T if P else np.zeros((1, 0), dtype=np.int64)
    values = out[np.arange(P)[None, :], choices]
    hist = np.zeros((choices.shape[0], E.m_vals), dtype=np.int64)
    for z in range(E.m_vals):
        hist[:, z] = np.count_nonzero(values == z, axis=1)
    return hist


def brute_force_multimerger_sd(E: MergerTable, s: int) -> Fraction:
    """Max over every uniform set and every deterministic adversary of SD(E(X), uniform)."""
    if E.d_vals != 1:
        raise PreconditionError("brute-force multimerger check needs a seedless table")
    best = Fraction(0)
    M = E.m_vals
    for U in axis_subsets(E.t, s):
        hist = enumerate_adversary_outcomes(E, U)
        P = E.n_vals**s
        # SD = sum_z |M h_z - P| / (2 P M)
        num = int(np.abs(M * hist - P).sum(axis=1).max())
        best = max(best, Fraction(num, 2 * P * M))
    return best


@dataclass(frozen=True)
class Counterexample:
    source: SourceSpec
    output: int
    sd: Fraction
    branch: str


def seedless_counterexample(E: MergerTable) -> Counterexample:
    """A somewhere-random source on which a seedless 2-input merger outputs a constant.

    Either every column ``y`` has some ``x`` with ``E(x, y) = 0``, and then
    ``X = g(Y)`` with ``Y`` uniform forces output 0; or some column ``y`` is
    all ones, and then ``Y = y`` with ``X`` uniform forces output 1.
    """
    _require_seedless_binary(E)
    if E.t != 2:
        raise PreconditionError(f"the counterexample is for two-part sources, got t={E.t}")
    grid = E.table[..., 0]
    zero = grid == 0
    has_zero = zero.any(axis=0)
    if has_zero.all():
        g = np.argmax(zero, axis=0)
        source = SourceSpec(2, AxisSubset((1,)), AdversaryStrategy(E.n_vals, 1, g[:, None]))
        output, branch = 0, "second-uniform"
    else:
        y = int(np.argmin(has_zero))
        fixed = np.full((E.n_vals, 1), y, dtype=np.int64)
        source = SourceSpec(2, AxisSubset((0,)), AdversaryStrategy(E.n_vals, 1, fixed))
        output, branch = 1, "first-uniform"
    dist = output_distribution(E, source)
    sd = statistical_distance(dist, Distribution.uniform(2))
    if dist != Distribution.point(2, output) or sd != Fraction(1, 2):
        raise AssertionError("constructed adversary did not force a constant output")
    return Counterexample(source, output, sd, branch)


def majority_table(t: int, n_vals: int = 2) -> MergerTable:
    """Seedless E(x_1..x_t) = majority of the top bits (x_i >= N/2)."""
    if t < 1:
        raise PreconditionError("t must be positive")
    idx = np.indices((n_vals,) * t)
    high = (2 * idx >= n_vals).sum(axis=0)
    table = (2 * high > t).astype(np.int64)
    return MergerTable(n_vals, t, 1, 2, table[..., None])


def majority_multimerger_error(t: int) -> Fraction:
    """Exact worst error of the top-bit majority against (t-1)-where sources.

    With one coordinate adversarial the best attack fixes its top bit to the
    target value, giving ``Pr[Bin(t-1, 1/2) <= (t-1)/2] - 1/2``.
    """
    if t < 3 or t % 2 == 0:
        raise PreconditionError(f"t must be odd and at least 3, got {t}")
    k = t - 1
    lower = sum(math.comb(k, i) for i in range(k // 2 + 1))
    return Fraction(lower, 2**k) - Fraction(1, 2)


# ---------------------------------------------------------------------------
# seeded mergers: exhaustive adversarial verification


@dataclass(frozen=True)
class MergerVerdict:
    passed: bool
    eps: Fraction
    worst_source: SourceSpec
    bad_seed_fraction: Fraction
    worst_seed_sd: Fraction
    weak_error: Fraction
    strategies: int
    outcome_classes: int
    method: str = "exact"

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "eps": str(self.eps),
            "bad_seed_fraction": str(self.bad_seed_fraction),
            "worst_seed_sd": str(self.worst_seed_sd),
            "weak_error": str(self.weak_error),
            "strategies": self.strategies,
            "outcome_classes": self.outcome_classes,
            "method": self.method,
            "worst_source": self.worst_source.to_dict(),
        }


def _seed_stats(hist: np.ndarray, P: int, M: int, eps: Fraction):
    """Per-adversary statistics from histograms ``hist[..., j, z]``.

    Returns (bad seed count, worst per-seed SD numerator, total SD numerator);
    SD numerators are over the common denominator 2 P M.
    """
    dev = np.abs(M * hist - P).sum(axis=-1)  # shape (..., D)
    # seed j is bad iff dev_j / (2 P M) > eps
    bad = (dev * eps.denominator > eps.numerator * 2 * P * M).sum(axis=-1)
    return bad, dev.max(axis=-1), dev.sum(axis=-1)


def _check_uniform_set(E: MergerTable, U: AxisSubset, eps: Fraction):
    """Exact search over deterministic adversaries for one uniform set.

    Two adversaries are interchangeable when they yield the same per-seed
    output histograms, so the search runs over reachable histograms: a
    dynamic program adds one uniform assignment at a time, keeping one
    representative completion path for each histogram reached.
    """
    out = _outputs_by_uniform(E, U)
    P, Q, D = out.shape
    M = E.m_vals
    slots = D * M
    radix = P + 1
    # each (seed, output) slot is a digit in base P+1; a profile adds one per seed
    choices = []
    for u in range(P):
        seen = {}
        for c in range(Q):
            key = tuple(int(v) for v in out[u, c])
            if key not in seen:
                seen[key] = (sum(radix ** (j * M + z) for j, z in enumerate(key)), c)
        choices.append(list(seen.values()))
    layers = []
    states = {0: None}
    for u in range(P):
        nxt = {}
        for state in states:
            for delta, c in choices[u]:
                new = state + delta
                if new not in nxt:
                    nxt[new] = (state, c)
        layers.append(nxt)
        states = nxt
    final = list(states)
    hist = np.zeros((len(final), D, M), dtype=np.int64)
    for i, code in enumerate(final):
        for slot in range(slots):
            code, digit = divmod(code, radix)
            hist[i, slot // M, slot % M] = digit
    bad, worst_dev, total_dev = _seed_stats(hist, P, M, eps)
    order = np.lexsort((-np.arange(len(final)), total_dev, bad))
    pick = int(order[-1])
    # walk the back-pointers to recover one adversary realising the pick
    completion_idx = [0] * P
    state = final[pick]
    for u in range(P - 1, -1, -1):
        prev, c = layers[u][state]
        completion_idx[u] = c
        state = prev
    rows = _completion_rows(E.n_vals, E.t - U.s)
    source = SourceSpec(E.t, U, AdversaryStrategy(E.n_vals, U.s, rows[completion_idx]))
    denom = 2 * P * M
    return {
        "bad": int(bad[pick]),
        "source": source,
        "worst_seed_sd": Fraction(int(worst_dev.max()), denom),
        "weak": Fraction(int(total_dev.max()), denom * D),
        "key": (int(bad[pick]), int(total_dev[pick])),
        "classes": len(final),
        "strategies": Q**P,
    }


def _uniform_sets(E: MergerTable, s: int, uniform_sets):
    if uniform_sets is None:
        return axis_subsets(E.t, s)
    out = [u if isinstance(u, AxisSubset) else AxisSubset(tuple(u)) for u in uniform_sets]
    for U in out:
        U.check(E.t)
    return out


def is_eps_merger_exhaustive(E: MergerTable, eps, s: int = 1, uniform_sets=None) -> MergerVerdict:
    """Strong-form check against every deterministic adversary.

    Passes iff for every uniform coordinate set and every adversary, at most
    an ``eps`` fraction of seeds give an output more than ``eps`` from uniform.
    ``weak_error`` is the largest distance of the joint (seed, output) pair
    from uniform, reported alongside.
    """
    eps = as_fraction(eps)
    subsets = _uniform_sets(E, s, uniform_sets)
    for U in subsets:
        check_budget(
            f"adversaries for uniform set {U}",
            (E.n_vals ** (E.t - U.s)) ** (E.n_vals**U.s),
            ADVERSARY_BUDGET,
        )
    best = None
    strategies = classes = 0
    weak = worst_seed = Fraction(0)
    for U in subsets:
        res = _check_uniform_set(E, U, eps)
        strategies += res["strategies"]
        classes += res["classes"]
        weak = max(weak, res["weak"])
        worst_seed = max(worst_seed, res["worst_seed_sd"])
        if best is None or res["key"] > best["key"]:
            best = res
    bad_fraction = Fraction(best["bad"], E.d_vals)
    return MergerVerdict(
        passed=bad_fraction <= eps,
        eps=eps,
        worst_source=best["source"],
        bad_seed_fraction=bad_fraction,
        worst_seed_sd=worst_seed,
        weak_error=weak,
        strategies=strategies,
        outcome_classes=classes,
    )


def brute_force_merger_check(E: MergerTable, eps, s: int = 1):
    """Oracle: list every adversary map explicitly.

    Returns ``(passed, worst bad-seed fraction, worst per-seed SD, weak error)``.
    """
    eps = as_fraction(eps)
    M, D = E.m_vals, E.d_vals
    worst_bad, worst_dev, worst_total = 0, 0, 0
    P = None
    for U in axis_subsets(E.t, s):
        hists = np.stack([enumerate_adversary_outcomes(E, U, j) for j in range(D)], axis=1)
        P = E.n_vals**U.s
        bad, dev, total = _seed_stats(hists, P, M, eps)
        worst_bad = max(worst_bad, int(bad.max()))
        worst_dev = max(worst_dev, int(dev.max()))
        worst_total = max(worst_total, int(total.max()))
    denom = 2 * P * M
    frac = Fraction(worst_bad, D)
    return frac <= eps, frac, Fraction(worst_dev, denom), Fraction(worst_total, denom * D)


def heuristic_merger_check(E: MergerTable, eps, s: int = 1, restarts: int = 20, rng_seed: int = 0, uniform_sets=None):
    """Hill-climbing adversary search for tables too large to enumerate.

    Can only refute: returns ``("failed", source, bad fraction)`` when it finds
    an adversary with more than ``eps`` bad seeds, else ``("unknown", best, fraction)``.
    """
    eps = as_fraction(eps)
    rng = np.random.default_rng(rng_seed)
    best = None
    for U in _uniform_sets(E, s, uniform_sets):
        out = _outputs_by_uniform(E, U)
        P, Q, D = out.shape
        M = E.m_vals
        onehot = np.eye(M, dtype=np.int64)[out]  # (P, Q, D, M)

        def score(choice):
            hist = onehot[np.arange(P), choice].sum(axis=0)
            bad, _, total = _seed_stats(hist, P, M, eps)
            return int(bad), int(total)

        for _ in range(restarts):
            choice = rng.integers(Q, size=P)
            current = score(choice)
            improved = True
            while improved:
                improved = False
                for u in range(P):
                    keep = choice[u]
                    for c in range(Q):
                        if c == keep:
                            continue
                        choice[u] = c
                        trial = score(choice)
                        if trial > current:
                            current, keep, improved = trial, c, True
                    choice[u] = keep
            if best is None or current > best[0]:
                rows = _completion_rows(E.n_vals, E.t - U.s)
                best = (current, SourceSpec(E.t, U, AdversaryStrategy(E.n_vals, U.s, rows[choice])))
    fraction = Fraction(best[0][0], E.d_vals)
    return ("failed" if fraction > eps else "unknown"), best[1], fraction


# ---------------------------------------------------------------------------
# truncate-then-extract construction


def truncate_and_extract(ext: MergerTable, n: int) -> MergerTable:
    """Lift an extractor on m-bit parts to n-bit parts by keeping the top m bits of each."""
    m = ext.n_vals.bit_length() - 1
    if ext.n_vals != 1 << m:
        raise PreconditionError(f"extractor part size {ext.n_vals} is not a power of two")
    if n < m:
        raise PreconditionError(f"cannot truncate {n}-bit parts to {m} bits")
    idx = np.arange(1 << n) >> (n - m)
    grids = np.ix_(*([idx] * ext.t), np.arange(ext.d_vals))
    return MergerTable(1 << n, ext.t, ext.d_vals, ext.m_vals, ext.table[grids])


def flat_sources(points: int, size: int) -> np.ndarray:
    """Every ``size``-subset of ``range(points)`` as rows of an index array."""
    total = math.comb(points, size)
    check_budget("flat source enumeration", total, FLAT_SOURCE_BUDGET)
    return np.asarray(list(itertools.combinations(range(points), size)), dtype=np.int64).reshape(total, size)


def _extractor_accepts(batch: np.ndarray, sources: np.ndarray, M: int, eps: Fraction) -> np.ndarray:
    """Strong-extractor test for a batch of tables ``batch[b, x, j]``.

    Accept when every flat source has average per-seed SD at most ``eps``.
    """
    B, K, D = batch.shape
    size = sources.shape[1]
    ok = np.ones(B, dtype=bool)
    limit = eps.numerator * 2 * size * M * D
    for src in sources:
        rows = batch[:, src, :]  # (B, size, D)
        dev = np.zeros(B, dtype=np.int64)
        for z in range(M):
            counts = np.count_nonzero(rows == z, axis=1)  # (B, D)
            dev += np.abs(M * counts - size).sum(axis=1)
        ok &= dev * eps.denominator <= limit
        if not ok.any():
            break
    return ok


@dataclass(frozen=True)
class ExtractorSearch:
    table: MergerTable | None
    tested: int
    candidates: int
    exhaustive: bool
    index: int | None = None

    @property
    def found(self) -> bool:
        return self.table is not None


def _digits(indices: np.ndarray, base: int, length: int) -> np.ndarray:
    out = np.empty((len(indices), length), dtype=np.int64)
    rem = indices.astype(object) if base**length >= 2**63 else indices.copy()
    for pos in range(length - 1, -1, -1):
        out[:, pos] = np.asarray(rem % base, dtype=np.int64)
        rem = rem // base
    return out


def find_extractor(m: int, t: int, d: int, eps, trials: int | None = None, rng_seed: int = 0, batch: int = 4096) -> ExtractorSearch:
    """Search tables Ext: [2^m]^t x [2^d] -> [2^m] for a strong (m, eps)-extractor.

    When ``trials`` is None or covers the whole space every candidate is
    tried in index order (the table whose digit string, read as a base-2^m
    number, equals the index); otherwise ``trials`` random tables are drawn.
    """
    eps = as_fraction(eps)
    side, M, D = 1 << m, 1 << m, 1 << d
    K = side**t
    cells = K * D
    total = M**cells
    sources = flat_sources(K, side)
    exhaustive = trials is None or trials >= total
    rng = np.random.default_rng(rng_seed)
    count = total if exhaustive else trials
    tested = 0
    while tested < count:
        size = min(batch, count - tested)
        if exhaustive:
            idx = np.arange(tested, tested + size, dtype=np.int64)
            tables = _digits(idx, M, cells)
        else:
            tables = rng.integers(M, size=(size, cells))
        ok = _extractor_accepts(tables.reshape(size, K, D), sources, M, eps)
        if ok.any():
            first = int(np.argmax(ok))
            table = MergerTable(side, t, D, M, tables[first])
            return ExtractorSearch(table, tested + first + 1, total, exhaustive, tested + first if exhaustive else None)
        tested += size
    return ExtractorSearch(None, tested, total, exhaustive)


def count_extractors(m: int, t: int, d: int, eps, batch: int = 4096) -> int:
    """Number of accepted tables in the full candidate space (oracle for small cases)."""
    eps = as_fraction(eps)
    side, M, D = 1 << m, 1 << m, 1 << d
    K = side**t
    cells = K * D
    total = M**cells
    check_budget("extractor candidate enumeration", total, ADVERSARY_BUDGET)
    sources = flat_sources(K, side)
    accepted = 0
    for start in range(0, total, batch):
        idx = np.arange(start, min(total, start + batch), dtype=np.int64)
        tables = _digits(idx, M, cells).reshape(len(idx), K, D)
        accepted += int(_extractor_accepts(tables, sources, M, eps).sum())
    return accepted


__all__ = [
    "AdversaryStrategy",
    "BudgetExceeded",
    "Counterexample",
    "Distribution",
    "ExtractorSearch",
    "MergerTable",
    "MergerVerdict",
    "MultimergerError",
    "SourceSpec",
    "as_fraction",
    "brute_force_merger_check",
    "brute_force_multimerger_sd",
    "count_extractors",
    "enumerate_adversary_outcomes",
    "find_extractor",
    "flat_sources",
    "heuristic_merger_check",
    "is_eps_merger_exhaustive",
    "majority_multimerger_error",
    "majority_table",
    "multimerger_from_partition",
    "multimerger_sd_exact",
    "output_distribution",
    "partition_from_multimerger",
    "seedless_counterexample",
    "statistical_distance",
    "truncate_and_extract",
]
