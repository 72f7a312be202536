"""Dense linear programming backed by the HiGHS dual simplex in scipy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

LP_TOL = 1e-8
DEFAULT_MAX_VARS = 20_000


class Infeasible(Exception):
    """The requested program or flow has no feasible solution."""


class Unbounded(Exception):
    pass


class SolverLimit(Exception):
    """The instance exceeds the configured size cap."""


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    ineq_duals: np.ndarray
    eq_duals: np.ndarray
    reduced_costs: np.ndarray
    slack: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    upper_duals: np.ndarray


def simplex_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    bounds=(0, None),
    max_vars: int | None = None,
) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and bounds.

    Returns an optimal basic solution with its dual values (HiGHS sign
    convention: ``c = A_ub.T y_ub + A_eq.T y_eq + reduced_costs``).
    """
    c = np.asarray(c, dtype=float)
    if max_vars is not None and c.size > max_vars:
        raise SolverLimit(f"LP with {c.size} variables exceeds the cap of {max_vars}")
    if A_ub is not None and np.asarray(A_ub).size == 0:
        A_ub, b_ub = None, None
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:
        raise Unbounded(res.message)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    ineq = getattr(res, "ineqlin", None)
    eq = getattr(res, "eqlin", None)
    lower = getattr(res, "lower", None)
    upper = getattr(res, "upper", None)
    lo, hi = _bound_arrays(bounds, c.size)
    return LPResult(
        x=np.asarray(res.x),
        fun=float(res.fun),
        ineq_duals=np.asarray(ineq.marginals) if ineq is not None and A_ub is not None else np.zeros(0),
        eq_duals=np.asarray(eq.marginals) if eq is not None and A_eq is not None else np.zeros(0),
        reduced_costs=np.asarray(lower.marginals) if lower is not None else np.zeros_like(c),
        slack=np.asarray(res.slack) if A_ub is not None else np.zeros(0),
        lower=lo,
        upper=hi,
        upper_duals=np.asarray(upper.marginals) if upper is not None else np.zeros_like(c),
    )


def _bound_arrays(bounds, n: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(bounds, tuple) and len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [bounds] * n
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    return lo, hi


def complementary_slackness_gap(res: LPResult) -> float:
    """Largest product of a dual value with its primal slack."""
    gap = 0.0
    if res.ineq_duals.size:
        gap = max(gap, float(np.max(np.abs(res.ineq_duals * res.slack))))
    for duals, room in ((res.reduced_costs, res.x - res.lower), (res.upper_duals, res.upper - res.x)):
        finite = np.isfinite(room)
        if finite.any():
            gap = max(gap, float(np.max(np.abs(duals[finite] * room[finite]))))
    return gap
