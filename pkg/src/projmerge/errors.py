"""Exception types and enumeration budgets shared by all modules."""

import os


class DimensionError(ValueError):
    """Shapes or axis indices that do not fit together."""


class PreconditionError(ValueError):
    """An argument outside the domain an operation accepts."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its state budget.

    ``estimate`` carries the number of states the caller asked for.
    """

    def __init__(self, what, estimate, budget):
        self.what = what
        self.estimate = estimate
        self.budget = budget
        super().__init__(f"{what}: {estimate} states exceeds budget {budget}")


BUDGET_ENV = "PROJMERGE_BUDGET"


def budget(default):
    """Return the enumeration cap, honouring the PROJMERGE_BUDGET override."""
    raw = os.environ.get(BUDGET_ENV)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise PreconditionError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise PreconditionError(f"{BUDGET_ENV} must be non-negative")
    return value


def check_budget(what, estimate, default):
    cap = budget(default)
    if estimate > cap:
        raise BudgetExceeded(what, estimate, cap)
