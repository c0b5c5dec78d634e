"""Projection bound constants: Shearer fractions, u(a), eta0 and lambda*.

eta0 is the root of

    (2 - 3 eta) * u(eta) + (3 eta - 1) = 4 - 6 eta,      u(a) = 2 - 2 sqrt(1 - a),

on [1/2, 2/3].  With this right-hand side the root reproduces both published
decimals (eta0 ~ 0.5264, u(eta0) ~ 0.6237).  The alternative right-hand side
(4 - eta)/6 is available through ``literal=True``; its root is near 0.414 and
matches neither.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import PreconditionError

GOLDEN_U = (math.sqrt(5.0) - 1.0) / 2.0

PUBLISHED_ETA0 = 0.5264
PUBLISHED_U_OF_ETA0 = 0.6237
PUBLISHED_LAMBDA_STAR = 0.856

CONSISTENT_BRACKET = (0.5, 2.0 / 3.0)
LITERAL_BRACKET = (0.0, 2.0 / 3.0)
# the printed form changes sign a second time inside the stated range [1/2, 1]
LITERAL_UPPER_BRACKET = (2.0 / 3.0, 1.0)
MAX_ITERATIONS = 200


def shearer_bound(c: int, s: int, t: int) -> float:
    """Fraction (1/c)^(s/t) that some s-dim projection of some part must reach."""
    if c < 1:
        raise PreconditionError(f"part count must be positive, got {c}")
    if not 1 <= s <= t:
        raise PreconditionError(f"need 1 <= s <= t, got s={s}, t={t}")
    return (1.0 / c) ** (s / t)


def shearer_discrete_bound(c: int, s: int, t: int, n: int) -> int:
    """Exact ceil((1/c)^(s/t) * n^s), i.e. the least k with k^t * c^s >= n^(s t)."""
    shearer_bound(c, s, t)
    target = n ** (s * t)
    k = max(0, math.floor(shearer_bound(c, s, t) * n**s) - 2)
    while k**t * c**s < target:
        k += 1
    return k


def discrete_bound(fraction, n: int, s: int) -> int:
    """Exact ceiling of ``fraction * n**s``; floats are converted without rounding."""
    frac = Fraction(fraction)
    if not 0 <= frac <= 1:
        raise PreconditionError(f"fraction must lie in [0, 1], got {fraction}")
    return math.ceil(frac * n**s)


def set_intersection_sides(u, v, w) -> tuple:
    """Both sides of |U|+|V|+|W| >= 2|T| - (unique parts) + |U & V & W| for boolean arrays.

    Counting each element of T by how many of the sets hold it shows the two
    sides are in fact equal.
    """
    u, v, w = (np.asarray(a, dtype=bool) for a in (u, v, w))
    if not u.shape == v.shape == w.shape:
        raise PreconditionError("sets must share one universe")
    union = u | v | w
    unique = (u & ~(v | w)) | (v & ~(w | u)) | (w & ~(u | v))
    lhs = int(u.sum() + v.sum() + w.sum())
    rhs = 2 * int(union.sum()) - int(unique.sum()) + int((u & v & w).sum())
    return lhs, rhs


def u_fn(a: float) -> float:
    if not 0.0 <= a <= 1.0:
        raise PreconditionError(f"u is defined on [0, 1], got {a}")
    return 2.0 - 2.0 * math.sqrt(1.0 - a)


def eta_equation(eta: float, literal: bool = False) -> float:
    """Left side minus right side of the eta0 equation."""
    lhs = (2.0 - 3.0 * eta) * u_fn(eta) + (3.0 * eta - 1.0)
    rhs = (4.0 - eta) / 6.0 if literal else 4.0 - 6.0 * eta
    return lhs - rhs


@dataclass(frozen=True)
class BoundConstants:
    u_golden: float
    eta0: float
    u_of_eta0: float
    lambda_star: float
    solver_tolerance: float
    solver_iterations: int
    equation: str = "consistent"
    bracket: tuple = CONSISTENT_BRACKET

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bracket"] = list(self.bracket)
        return out


def bisect(fn, lo: float, hi: float, tolerance: float, max_iter: int = MAX_ITERATIONS):
    """Bisection for a sign change of ``fn`` on [lo, hi].

    Stops once ``|fn(mid)| <= tolerance`` or the bracket stops shrinking.
    Returns ``(root, iterations, trace)``; ``trace`` lists every bracket visited.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo, 0, [(lo, hi)]
    if f_hi == 0.0:
        return hi, 0, [(lo, hi)]
    if (f_lo < 0) == (f_hi < 0):
        raise PreconditionError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    trace = [(lo, hi)]
    mid = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if abs(f_mid) <= tolerance or mid in (lo, hi):
            return mid, it, trace
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        trace.append((lo, hi))
    return mid, max_iter, trace


def solve_eta0(tolerance: float = 1e-9, literal: bool = False) -> BoundConstants:
    if not tolerance > 0:
        raise PreconditionError(f"tolerance must be positive, got {tolerance}")
    bracket = LITERAL_BRACKET if literal else CONSISTENT_BRACKET
    eta, iterations, _ = bisect(lambda e: eta_equation(e, literal), *bracket, tolerance)
    return BoundConstants(
        u_golden=GOLDEN_U,
        eta0=eta,
        u_of_eta0=u_fn(eta),
        lambda_star=4.0 - 6.0 * eta,
        solver_tolerance=tolerance,
        solver_iterations=iterations,
        equation="literal" if literal else "consistent",
        bracket=bracket,
    )


def consistency_report(tolerance: float = 1e-12) -> dict:
    """Compare both equation forms against the three published decimals."""
    solved = solve_eta0(tolerance)
    literal = solve_eta0(tolerance, literal=True)
    upper, _, _ = bisect(lambda e: eta_equation(e, True), *LITERAL_UPPER_BRACKET, tolerance)
    return {
        "published": {
            "eta0": PUBLISHED_ETA0,
            "u_of_eta0": PUBLISHED_U_OF_ETA0,
            "lambda_star": PUBLISHED_LAMBDA_STAR,
        },
        "consistent_form": {
            "eta0": solved.eta0,
            "u_of_eta0": solved.u_of_eta0,
            "lambda_star": solved.lambda_star,
            "matches_eta0": abs(solved.eta0 - PUBLISHED_ETA0) <= 5e-4,
            "matches_u_of_eta0": abs(solved.u_of_eta0 - PUBLISHED_U_OF_ETA0) <= 7e-4,
            "matches_lambda_star": abs(solved.lambda_star - PUBLISHED_LAMBDA_STAR) <= 3e-3,
        },
        "literal_form": {
            "eta0": literal.eta0,
            "u_of_eta0": literal.u_of_eta0,
            "matches_eta0": abs(literal.eta0 - PUBLISHED_ETA0) <= 5e-4,
            "matches_u_of_eta0": abs(literal.u_of_eta0 - PUBLISHED_U_OF_ETA0) <= 7e-4,
            "root_in_upper_range": upper,
        },
        "note": (
            "4 - 6*eta0 evaluates to about 0.8416 at eta0 ~ 0.5264, not the published 0.856; "
            "the (4 - eta)/6 right-hand side has roots near 0.414 and 0.954."
        ),
    }

