"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import io
import itertools
import json
import math
import time
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from projmerge.bounds import GOLDEN_U, discrete_bound, set_intersection_sides, shearer_discrete_bound, solve_eta0
from projmerge.cli import main as cli_main
from projmerge.grid import (
    AxisSubset,
    CellMask,
    GridDims,
    PartLabeling,
    axis_subsets,
    max_projection,
    project,
    projection_sizes,
)
from projmerge.lowerbound import Conductor, abnormality_monte_carlo, abnormality_probability, find_abnormal_slice
from projmerge.mergers import (
    Distribution,
    MergerTable,
    brute_force_multimerger_sd,
    find_extractor,
    is_eps_merger_exhaustive,
    majority_multimerger_error,
    majority_table,
    multimerger_from_partition,
    multimerger_sd_exact,
    output_distribution,
    seedless_counterexample,
    statistical_distance,
    truncate_and_extract,
)
from projmerge.schemes import gr3_partition, maj3_partition
from projmerge.search import SearchConfig, apply_symmetry, exhaustive_minmax, geometric_symmetries

FIXTURES = Path(__file__).parent / "fixtures"
TRIALS = 10_000


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, json.loads(out.getvalue()) if out.getvalue() else None


def report(number, title, checks, elapsed, limit):
    """Print one line and return overall success."""
    ok = all(passed for _, passed in checks) and elapsed < limit
    failed = [name for name, passed in checks if not passed]
    if elapsed >= limit:
        failed.append(f"runtime {elapsed:.2f}s >= {limit}s")
    status = "PASS" if ok else "FAIL"
    detail = "" if ok else "  failing: " + "; ".join(failed)
    print(f"[{status}] criterion {number:2d} {title} ({elapsed:.2f}s){detail}", flush=True)
    return ok


# --- criteria -----------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    code, env = cli("verify-scheme", "maj3", "--n", "10")
    elapsed = time.perf_counter() - start
    res = env["results"]
    sizes = [e["size"] for e in res["projections"]]
    return report(1, "MAJ_3 tightness at N=10", [
        ("exit code 0", code == 0),
        ("six projections of size 75", sizes == [75] * 6),
        ("bound 75 = 3/4 * 100", res["bound"]["size"] == 75 == discrete_bound(Fraction(3, 4), 10, 2)),
        ("verdict TIGHT", res["verdict"] == "TIGHT"),
    ], elapsed, 1.0)


def _all_labelings_minmax(n, t, c, s):
    subsets = [tuple(a for a in range(t) if a not in U.indices) for U in axis_subsets(t, s)]
    best = None
    for labels in itertools.product(range(c), repeat=n**t):
        arr = np.asarray(labels).reshape((n,) * t)
        worst = max(int((arr == b).any(axis=drop).sum()) for b in range(c) for drop in subsets)
        best = worst if best is None else min(best, worst)
    return best


def criterion_2():
    start = time.perf_counter()
    res = exhaustive_minmax(SearchConfig(GridDims(3, 2), 2, 2, symmetry=()))
    brute = _all_labelings_minmax(2, 3, 2, 2)
    elapsed = time.perf_counter() - start
    return report(2, "exhaustive optimum N=2, c=2", [
        ("certified", res.certified),
        ("min-max 3", res.minmax_value == 3),
        ("matches ceil(3/4 * 4)", res.minmax_value == discrete_bound(Fraction(3, 4), 2, 2)),
        ("matches all 2^8 labelings", brute == 3),
    ], elapsed, 1.0)


def criterion_3():
    start = time.perf_counter()
    res = exhaustive_minmax(SearchConfig(GridDims(3, 3), 2, 2, shards=8, workers=8))
    elapsed = time.perf_counter() - start
    fixture = json.loads((FIXTURES / "minmax_n3_c2.json").read_text())
    lower = discrete_bound(Fraction(3, 4), 3, 2)
    return report(3, f"exhaustive N=3, c=2 (v={res.minmax_value})", [
        ("certified", res.certified),
        ("7 <= v <= 8", lower == 7 and 7 <= res.minmax_value <= 8),
        ("matches fixture", res.minmax_value == fixture["minmax_value"]),
        ("fixture witness", res.witness == PartLabeling.from_dict(fixture["witness"])),
    ], elapsed, 30 * 60)


def criterion_4():
    start = time.perf_counter()
    code_f, fig = cli("verify-scheme", "gr3-figure", "--n", "1000")
    code_l, lit = cli("verify-scheme", "gr3-literal", "--n", "1000")
    elapsed = time.perf_counter() - start
    fig_max = fig["results"]["max"]["fraction_float"]
    lit_res = lit["results"]
    lit_max = lit_res["max"]["fraction_float"]
    return report(4, f"golden ratio scheme (figure {fig_max:.6f}, literal max {lit_max:.6f})", [
        ("figure within 0.005 of 0.61803", abs(fig_max - 0.61803) <= 0.005),
        ("literal max projection ~ 0.854", abs(lit_max - 0.854) <= 0.005),
        ("literal discrepancy note", bool(lit_res["notes"]) and "discrepancy" in lit_res["notes"][0]),
        ("exit codes 0", code_f == 0 and code_l == 0),
    ], elapsed, 10.0)


def criterion_5():
    start = time.perf_counter()
    consts = solve_eta0(1e-9)
    code, env = cli("solve-constants")
    elapsed = time.perf_counter() - start
    res = env["results"]
    return report(5, "bound constants", [
        ("eta0 within 5e-4 of 0.5264", abs(consts.eta0 - 0.5264) <= 5e-4),
        ("u(eta0) within 7e-4 of 0.6237", abs(consts.u_of_eta0 - 0.6237) <= 7e-4),
        ("lambda* = 0.8416 +- 0.003", abs(consts.lambda_star - 0.8416) <= 3e-3),
        ("published 0.856 reported alongside", res["published"]["lambda_star"] == 0.856 and "0.856" in res["notes"][0]),
    ], elapsed, 1.0)


def criterion_6():
    start = time.perf_counter()
    res = exhaustive_minmax(SearchConfig(GridDims(3, 2), 3, 2))
    eta0 = solve_eta0(1e-12).eta0
    elapsed = time.perf_counter() - start
    return report(6, "exhaustive optimum N=2, c=3", [
        ("certified", res.certified),
        ("min-max 3", res.minmax_value == 3),
        ("at least ceil(eta0 * 4)", res.minmax_value >= discrete_bound(eta0, 2, 2) == 3),
    ], elapsed, 1.0)


def criterion_7():
    start = time.perf_counter()
    p = maj3_partition(2)
    E = multimerger_from_partition(p)
    res = multimerger_sd_exact(E, 2)
    brute = brute_force_multimerger_sd(E, 2)
    achieved = output_distribution(E, res.source)
    elapsed = time.perf_counter() - start
    return report(7, "partition / multimerger bridge", [
        ("sd = 1/4", res.sd == Fraction(1, 4)),
        ("sd = max projection - 1/2", res.sd == max_projection(p, 2).fraction - Fraction(1, 2)),
        ("sd = max over enumerated adversaries", res.sd == brute),
        ("witness achieves it", statistical_distance(achieved, Distribution.uniform(2)) == res.sd),
    ], elapsed, 1.0)


def criterion_8():
    start = time.perf_counter()
    checks = [
        ("t=3 gives 1/4", majority_multimerger_error(3) == Fraction(1, 4)),
        ("t=5 gives 3/16", majority_multimerger_error(5) == Fraction(3, 16)),
        ("<= 1/sqrt(t) for odd t <= 21", all(majority_multimerger_error(t) <= 1 / math.sqrt(t) for t in range(3, 22, 2))),
    ]
    for t in (3, 5):
        E = majority_table(t)
        value = majority_multimerger_error(t)
        checks.append((f"exhaustive adversaries agree at t={t}", brute_force_multimerger_sd(E, t - 1) == value == multimerger_sd_exact(E, t - 1).sd))
    elapsed = time.perf_counter() - start
    return report(8, "majority multimerger error", checks, elapsed, 5.0)


def criterion_9():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    exact = 0
    for _ in range(1000):
        E = MergerTable(8, 2, 1, 2, rng.integers(2, size=64))
        cex = seedless_counterexample(E)
        dist = output_distribution(E, cex.source)
        exact += statistical_distance(dist, Distribution.uniform(2)) == Fraction(1, 2)
    elapsed = time.perf_counter() - start
    return report(9, "seedless impossibility on 1000 tables", [("all achieved SD exactly 1/2", exact == 1000)], elapsed, 10.0)


def criterion_10():
    start = time.perf_counter()
    found = find_extractor(1, 2, 2, Fraction(1, 4))
    verdict = None
    if found.found:
        wrapped = truncate_and_extract(found.table, 3)
        verdict = is_eps_merger_exhaustive(wrapped, Fraction(1, 4))
    seedless = find_extractor(1, 2, 0, Fraction(1, 4))
    elapsed = time.perf_counter() - start
    detail = "n/a" if verdict is None else str(verdict.bad_seed_fraction)
    return report(10, f"truncate-then-extract (bad-seed fraction {detail})", [
        ("extractor found", found.found),
        ("wrapped merger passes at eps=1/4", verdict is not None and verdict.passed),
        ("d=0 not found over all candidates", not seedless.found and seedless.tested == seedless.candidates),
    ], elapsed, 300.0)


def _parity_merger():
    def fn(cell, j):
        a, b = cell[0] >> 1, cell[1] >> 1
        return (a, b, a ^ b)[j]

    return MergerTable.from_function(4, 2, 3, 2, fn)


def criterion_11():
    start = time.perf_counter()
    C = Conductor(8, 2, 4, np.random.default_rng(6).integers(4, size=16))
    exact = abnormality_probability(C, Fraction(1, 2))
    mc = abnormality_monte_carlo(C, Fraction(1, 2), samples=100_000, rng_seed=0)
    checks = [
        ("exact enumeration", exact.exact),
        ("Monte Carlo within 0.02", abs(float(mc.probability) - float(exact.probability)) <= 0.02),
    ]
    E = _parity_merger()
    eps = Fraction(1, 3)
    verdict = is_eps_merger_exhaustive(E, eps)
    checks.append(("micro merger verified", verdict.passed))
    tested = 0
    for lam in (Fraction(k, E.m_vals) for k in range(1, E.m_vals + 1)):
        for gamma in (Fraction(i, 100) for i in range(1, 50)):
            if not 0 < gamma < lam / 2 - eps:
                continue
            tested += 1
            checks.append((f"slice at gamma={gamma}, lambda={lam}", find_abnormal_slice(E, gamma, lam, eps) is not None))
    checks.append(("admissible grid non-empty", tested > 0))
    elapsed = time.perf_counter() - start
    return report(11, f"abnormal conductors ({tested} admissible points)", checks, elapsed, 120.0)


# --- criterion 12: randomized property suites ------------------------------------


def _random_labeling(rng, max_cells=64):
    while True:
        t = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        if n**t <= max_cells:
            break
    c = int(rng.integers(1, 6))
    return PartLabeling(GridDims(t, n), c, rng.integers(c, size=n**t)), int(rng.integers(1, t + 1))


def suite_shearer(rng):
    bad = 0
    for _ in range(TRIALS):
        p, s = _random_labeling(rng)
        if projection_sizes(p, s).max() < shearer_discrete_bound(p.c, s, p.dims.t, p.dims.side):
            bad += 1
    return bad


def _adversarial_two_part(rng, n):
    """Random labelings mixed with perturbed majority and slab labelings."""
    kind = rng.integers(3)
    if kind == 0 or n % 2:
        return rng.integers(2, size=(n, n, n))
    if kind == 1:
        base = maj3_partition(n).labels.astype(np.int64)
    else:
        base = (np.indices((n, n, n)).sum(axis=0) >= rng.integers(1, 3 * n)).astype(np.int64)
    flips = rng.random(base.shape) < rng.random() * 0.1
    return np.where(flips, 1 - base, base)


def suite_two_part(rng):
    bad = 0
    for _ in range(TRIALS):
        n = int(rng.integers(1, 6))
        p = PartLabeling(GridDims(3, n), 2, _adversarial_two_part(rng, n))
        if projection_sizes(p, 2).max() < discrete_bound(Fraction(3, 4), n, 2):
            bad += 1
    return bad


def suite_three_part(rng):
    eta0 = solve_eta0(1e-12).eta0
    bad = 0
    for _ in range(TRIALS):
        n = int(rng.integers(1, 6))
        if rng.random() < 0.5:
            labels = rng.integers(3, size=(n, n, n))
        else:
            labels = gr3_partition(max(n, 2)).labels.astype(np.int64)[:n, :n, :n]
            labels = np.where(rng.random(labels.shape) < 0.05, rng.integers(3, size=labels.shape), labels)
        p = PartLabeling(GridDims(3, n), 3, labels)
        if projection_sizes(p, 2).max() < discrete_bound(eta0, n, 2):
            bad += 1
    return bad


def suite_projection(rng):
    bad = 0
    for _ in range(TRIALS):
        t = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        dims = GridDims(t, n)
        a = CellMask(dims, rng.random(dims.shape) < rng.random())
        b = CellMask(dims, rng.random(dims.shape) < rng.random())
        s = int(rng.integers(1, t + 1))
        U = AxisSubset(tuple(sorted(rng.choice(t, size=s, replace=False).tolist())))
        union = project(a | b, U)
        if not project(a, U).issubset(union) or union != project(a, U) | project(b, U):
            bad += 1
    return bad


def suite_set_intersection(rng):
    bad = 0
    for _ in range(TRIALS):
        size = int(rng.integers(1, 40))
        u, v, w = rng.random((3, size)) < rng.random()
        lhs, rhs = set_intersection_sides(u, v, w)
        if lhs < rhs:
            bad += 1
    return bad


def suite_symmetry(rng):
    bad = 0
    groups = {t: list(geometric_symmetries(t)) for t in range(1, 4)}
    for _ in range(TRIALS):
        t = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        c = int(rng.integers(1, 4))
        p = PartLabeling(GridDims(t, n), c, rng.integers(c, size=n**t))
        perm, flips = groups[t][int(rng.integers(len(groups[t])))]
        q = apply_symmetry(p, perm, flips, relabel=rng.permutation(c))
        s = int(rng.integers(1, t + 1))
        if sorted(projection_sizes(p, s).ravel()) != sorted(projection_sizes(q, s).ravel()):
            bad += 1
    return bad


SUITES = [
    ("Shearer bound", suite_shearer),
    ("two-part 3/4 bound", suite_two_part),
    ("three-part eta0 bound", suite_three_part),
    ("projection monotonicity/union", suite_projection),
    ("set intersection inequality", suite_set_intersection),
    ("symmetry soundness", suite_symmetry),
]


def criterion_12():
    start = time.perf_counter()
    checks = []
    for k, (name, suite) in enumerate(SUITES):
        violations = suite(np.random.default_rng(1000 + k))
        checks.append((f"{name}: {violations} violations in {TRIALS} trials", violations == 0))
    elapsed = time.perf_counter() - start
    return report(12, f"property suites ({len(SUITES)} x {TRIALS} trials)", checks, elapsed, 120.0)


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 13)])
def test_criterion(criterion, capsys):
    with capsys.disabled():
        ok = criterion()
    assert ok


if __name__ == "__main__":
    results = [criterion() for criterion in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
