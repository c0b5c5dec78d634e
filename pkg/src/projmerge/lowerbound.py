"""Abnormal conductors and micro-scale merger nonexistence checks."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionError, PreconditionError, budget, check_budget
from .mergers import MergerTable, as_fraction, is_eps_merger_exhaustive

SUBSET_BUDGET = 2**20
TABLE_BUDGET = 2**20
MONTE_CARLO_SAMPLES = 100_000
# two-sided Hoeffding interval at this confidence
CONFIDENCE = 0.95


@dataclass(frozen=True, eq=False)
class Conductor:
    n_vals: int
    d_vals: int
    m_vals: int
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.size != self.n_vals * self.d_vals:
            raise DimensionError(f"table has {table.size} entries, expected {self.n_vals * self.d_vals}")
        table = table.reshape(self.n_vals, self.d_vals)
        if table.size and (table.min() < 0 or table.max() >= self.m_vals):
            raise PreconditionError(f"entries must lie in 0..{self.m_vals - 1}")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def slice_of(cls, E: MergerTable, y: int) -> "Conductor":
        """``E(., y, .)`` for a two-part merger."""
        if E.t != 2:
            raise PreconditionError(f"slices are taken of two-part mergers, got t={E.t}")
        return cls(E.n_vals, E.d_vals, E.m_vals, E.table[:, y, :])

    def edge_counts(self) -> np.ndarray:
        """``counts[x, z]`` = number of seeds j with C(x, j) = z."""
        counts = np.zeros((self.n_vals, self.m_vals), dtype=np.int64)
        for x in range(self.n_vals):
            counts[x] = np.bincount(self.table[x], minlength=self.m_vals)
        return counts

    def to_merger(self) -> MergerTable:
        return MergerTable(self.n_vals, 1, self.d_vals, self.m_vals, self.table)

    def to_dict(self) -> dict:
        return self.to_merger().to_dict()

    @classmethod
    def from_dict(cls, data: dict) -> "Conductor":
        E = MergerTable.from_dict(data)
        if E.t != 1:
            raise PreconditionError(f"a conductor file has t=1, got t={E.t}")
        return cls(E.n_vals, E.d_vals, E.m_vals, E.table.reshape(E.n_vals, E.d_vals))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Conductor":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MissProfile:
    subset: tuple
    hits: tuple
    totally_misses: tuple
    mostly_misses: tuple

    @property
    def any_mostly(self) -> bool:
        return any(self.mostly_misses)


def _check_subset(C: Conductor, S: Sequence[int]) -> tuple:
    S = tuple(sorted({int(z) for z in S}))
    if S and (S[0] < 0 or S[-1] >= C.m_vals):
        raise PreconditionError(f"S must be a subset of 0..{C.m_vals - 1}")
    return S


def miss_profile(C: Conductor, S: Sequence[int]) -> MissProfile:
    """Hit counts into S, with x mostly missing S iff hits < (1/2)(|S|/M) D."""
    S = _check_subset(C, S)
    member = np.zeros(C.m_vals, dtype=bool)
    member[list(S)] = True
    hits = member[C.table].sum(axis=1)
    # hits < |S| D / (2M), cleared of denominators
    mostly = 2 * hits * C.m_vals < len(S) * C.d_vals
    return MissProfile(
        subset=S,
        hits=tuple(int(h) for h in hits),
        totally_misses=tuple(bool(h == 0) for h in hits),
        mostly_misses=tuple(bool(m) for m in mostly),
    )


@dataclass(frozen=True)
class AbnormalityEstimate:
    probability: Fraction
    exact: bool
    subsets: int
    samples: int = 0
    half_width: float = 0.0

    @property
    def interval(self) -> tuple:
        p = float(self.probability)
        return max(0.0, p - self.half_width), min(1.0, p + self.half_width)

    def to_dict(self) -> dict:
        out = {
            "probability": str(self.probability),
            "probability_float": float(self.probability),
            "exact": self.exact,
            "subsets": self.subsets,
        }
        if not self.exact:
            out.update(samples=self.samples, half_width=self.half_width, interval=list(self.interval))
        return out


def _subset_size(C: Conductor, lam) -> int:
    lam = as_fraction(lam)
    size = lam * C.m_vals
    if size.denominator != 1 or not 0 < size <= C.m_vals:
        raise PreconditionError(f"lambda*M must be an integer in 1..{C.m_vals}, got {size}")
    return int(size)


def _mostly_missed(counts: np.ndarray, members: np.ndarray, C: Conductor) -> np.ndarray:
    """For each subset row of ``members`` (0/1 over [M]): does some x mostly miss it?"""
    k = int(members[0].sum())
    hits = members @ counts.T  # (subsets, N)
    return (2 * hits * C.m_vals < k * C.d_vals).any(axis=1)


def abnormality_monte_carlo(C: Conductor, lam, samples: int = MONTE_CARLO_SAMPLES, rng_seed: int = 0, chunk: int = 20_000) -> AbnormalityEstimate:
    """Sampled estimate of Pr_S[some x mostly misses S] with a Hoeffding half-width."""
    k = _subset_size(C, lam)
    if samples < 1:
        raise PreconditionError("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    counts = C.edge_counts()
    hit = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        order = np.argsort(rng.random((size, C.m_vals)), axis=1)[:, :k]
        members = np.zeros((size, C.m_vals), dtype=np.int64)
        np.put_along_axis(members, order, 1, axis=1)
        hit += int(_mostly_missed(counts, members, C).sum())
        done += size
    half = math.sqrt(math.log(2.0 / (1.0 - CONFIDENCE)) / (2.0 * samples))
    return AbnormalityEstimate(Fraction(hit, samples), False, math.comb(C.m_vals, k), samples, half)


def abnormality_probability(C: Conductor, lam, samples: int = MONTE_CARLO_SAMPLES, rng_seed: int = 0) -> AbnormalityEstimate:
    """Pr over uniformly random lambda*M-subsets S that some x mostly misses S.

    Exact by enumerating every S when the count fits the budget, otherwise
    a Monte Carlo estimate (``exact`` is then False).
    """
    k = _subset_size(C, lam)
    total = math.comb(C.m_vals, k)
    if total > budget(SUBSET_BUDGET):
        return abnormality_monte_carlo(C, lam, samples, rng_seed)
    counts = C.edge_counts()
    missed = 0
    combos = itertools.combinations(range(C.m_vals), k)
    while True:
        block = list(itertools.islice(combos, 65536))
        if not block:
            break
        members = np.zeros((len(block), C.m_vals), dtype=np.int64)
        np.put_along_axis(members, np.asarray(block, dtype=np.int64), 1, axis=1)
        missed += int(_mostly_missed(counts, members, C).sum())
    return AbnormalityEstimate(Fraction(missed, total), True, total)


def is_abnormal(C: Conductor, gamma, lam) -> bool:
    """(gamma, lambda)-abnormal iff Pr_S[some x mostly misses S] < 1 - gamma."""
    est = abnormality_probability(C, lam)
    if not est.exact:
        raise BudgetExceeded("abnormality subsets", est.subsets, budget(SUBSET_BUDGET))
    return est.probability < 1 - as_fraction(gamma)


def find_abnormal_slice(E: MergerTable, gamma, lam, eps) -> int | None:
    """First y whose slice E(., y, .) is (gamma, lambda)-abnormal, or None.

    Requires 0 < gamma < lambda/2 - eps; for an eps-merger some slice must qualify.
    """
    gamma, lam, eps = as_fraction(gamma), as_fraction(lam), as_fraction(eps)
    if not 0 < gamma < lam / 2 - eps:
        raise PreconditionError(f"need 0 < gamma < lambda/2 - eps, got gamma={gamma}, lambda={lam}, eps={eps}")
    if E.t != 2:
        raise PreconditionError(f"need a two-part merger, got t={E.t}")
    for y in range(E.n_vals):
        if is_abnormal(Conductor.slice_of(E, y), gamma, lam):
            return y
    return None


@dataclass(frozen=True)
class NonexistenceVerdict:
    nonexistent: bool
    tables_checked: int
    total_tables: int
    witness: MergerTable | None = None

    def to_dict(self) -> dict:
        return {
            "nonexistent": self.nonexistent,
            "tables_checked": self.tables_checked,
            "total_tables": self.total_tables,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def exhaustive_merger_nonexistence(N: int, D: int, M: int, eps) -> NonexistenceVerdict:
    """True iff no table [N]^2 x [D] -> [M] is an eps-merger (strong form, s=1).

    Tables are tried in the order of their digit strings; the first passing
    one is returned as witness.
    """
    eps = as_fraction(eps)
    cells = N * N * D
    total = M**cells
    if eps >= 1:
        return NonexistenceVerdict(False, 0, total)
    check_budget("merger tables", total, TABLE_BUDGET)
    for index, digits in enumerate(itertools.product(range(M), repeat=cells)):
        E = MergerTable(N, 2, D, M, np.asarray(digits, dtype=np.int64))
        if is_eps_merger_exhaustive(E, eps).passed:
            return NonexistenceVerdict(False, index + 1, total, E)
    return NonexistenceVerdict(True, total, total)


__all__ = [
    "AbnormalityEstimate",
    "Conductor",
    "MissProfile",
    "NonexistenceVerdict",
    "abnormality_monte_carlo",
    "abnormality_probability",
    "exhaustive_merger_nonexistence",
    "find_abnormal_slice",
    "is_abnormal",
    "miss_profile",
]
