"""Exact constrained clustering cost: min over consistent assignments.

Dispatch: the simplex (any outlier mass) and laminar matroids without
outliers go through min-cost flow; everything else is solved as a dense LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constraints import StructureConstraint
from .flow import min_cost_flow
from .lp import DEFAULT_MAX_VARS, Infeasible, SolverLimit, simplex_lp
from .metric import WeightedPointSet, check_power

__all__ = [
    "CostResult",
    "Infeasible",
    "SolverLimit",
    "eval_cost_sigma",
    "min_cost_assignment",
    "robust_cost",
    "sample_feasible_capacity",
    "check_assignment",
]

FEAS_TOL = 1e-8


@dataclass
class CostResult:
    value: float
    sigma: np.ndarray
    solver: str


def power_cost_matrix(P: WeightedPointSet, C, z: float) -> np.ndarray:
    return P.distances(np.asarray(C)) ** check_power(z)


def eval_cost_sigma(P: WeightedPointSet, C, sigma, z: float) -> float:
    sigma = np.asarray(sigma, dtype=float)
    D = power_cost_matrix(P, C, z)
    if sigma.shape != D.shape:
        raise ValueError(f"assignment shape {sigma.shape} does not match {D.shape}")
    return float(np.sum(sigma * D))


def check_assignment(sigma, weights, B: StructureConstraint, h, tol: float = 1e-7) -> bool:
    """Row sums within weights, column sums equal to ``h``, rows inside ``s_p * B``."""
    sigma = np.asarray(sigma, dtype=float)
    weights = np.asarray(weights, dtype=float)
    scale = max(1.0, float(weights.sum()))
    if np.any(sigma < -tol * scale):
        return False
    rows = sigma.sum(axis=1)
    if np.any(rows > weights + tol * scale):
        return False
    if np.abs(sigma.sum(axis=0) - np.asarray(h)).max() > tol * scale:
        return False
    for row, s in zip(sigma, rows):
        if s > tol * scale and not B.contains(row / s, tol * scale / s):
            return False
    return True


def _resolve_outliers(P: WeightedPointSet, h: np.ndarray, m: float | None) -> float:
    total = P.total_weight
    mass = float(h.sum())
    scale = max(1.0, total)
    if m is None:
        m = total - mass
    if m < -FEAS_TOL * scale or m > total + FEAS_TOL * scale:
        raise Infeasible("outlier mass outside [0, w(P)]")
    if abs(total - m - mass) > FEAS_TOL * scale:
        raise Infeasible("capacities must sum to w(P) - m")
    return max(0.0, float(m))


def min_cost_assignment(
    P: WeightedPointSet,
    C,
    B: StructureConstraint,
    h,
    z: float,
    m: float | None = None,
    solver: str = "auto",
    max_vars: int = DEFAULT_MAX_VARS,
) -> CostResult:
    """``cost_z(P, C, B, h)``: cheapest assignment with column sums ``h``.

    ``m`` defaults to ``w(P) - sum(h)``. ``solver`` may force ``"flow"`` or
    ``"lp"`` (flow is only available for the simplex and laminar matroids
    without outliers).
    """
    h = np.asarray(h, dtype=float)
    D = power_cost_matrix(P, C, z)
    if h.shape != (D.shape[1],) or B.k != D.shape[1]:
        raise ValueError("capacity vector, centers and constraint disagree on k")
    if np.any(h < -FEAS_TOL * max(1.0, P.total_weight)):
        raise Infeasible("negative capacity")
    h = np.clip(h, 0.0, None)
    m = _resolve_outliers(P, h, m)
    if not B.capacity_feasible(h, P.total_weight, m, tol=1e-7):
        raise Infeasible("capacities outside (w(P) - m) * B")
    if h.sum() > 0:
        h = h * ((P.total_weight - m) / h.sum())  # remove float drift before exact routing
    no_outliers = m <= FEAS_TOL * max(1.0, P.total_weight)
    flow_ok = B.is_simplex or (B.is_laminar_matroid and no_outliers)
    if solver == "auto":
        solver = "flow" if flow_ok else "lp"
    if solver == "flow":
        if not flow_ok:
            raise ValueError("flow solver does not cover this constraint")
        if B.is_simplex:
            sigma = _simplex_flow(D, P.weights, h, m)
        else:
            sigma = _laminar_flow(D, P.weights, h, B)
    elif solver == "lp":
        sigma = _dense_lp(D, P.weights, h, B, max_vars)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return CostResult(float(np.sum(sigma * D)), sigma, solver)


def dual_prices(D: np.ndarray, w: np.ndarray, h: np.ndarray, rounds: int = 6) -> np.ndarray:
    """Approximate transportation duals by coordinate ascent.

    Each point picks ``argmin_c D[p, c] - y[c]``; ``y[c]`` is moved so that
    center ``c`` receives about ``h[c]``. Any ``y`` yields a starting flow
    without negative residual cycles, so accuracy only affects speed.
    """
    n, k = D.shape
    y = np.zeros(k)
    if k == 1 or n == 0:
        return y
    for _ in range(rounds):
        for c in range(k):
            shifted = D - y
            shifted[:, c] = np.inf
            margin = D[:, c] - shifted.min(axis=1)
            order = np.argsort(margin, kind="stable")
            cum = np.cumsum(w[order])
            pos = int(np.searchsorted(cum, h[c] - 1e-12 * max(1.0, cum[-1])))
            if pos >= n:
                y[c] = margin[order[-1]] + 1.0
            elif pos == 0 and h[c] <= 0:
                y[c] = margin[order[0]] - 1.0
            else:
                hi = margin[order[pos]]
                lo = margin[order[pos + 1]] if pos + 1 < n else hi + 1.0
                y[c] = 0.5 * (hi + lo)
    return y


def _simplex_flow(D: np.ndarray, w: np.ndarray, h: np.ndarray, m: float) -> np.ndarray:
    n, k = D.shape
    # nodes: points [0, n), centers [n, n + k), outlier sink n + k
    tail = [np.repeat(np.arange(n), k)]
    head = [n + np.tile(np.arange(k), n)]
    cap = [np.repeat(w, k)]
    cost = [D.ravel()]
    supply = np.concatenate([w, -h, [-m]])
    if m > 0:
        tail.append(np.arange(n))
        head.append(np.full(n, n + k))
        cap.append(w)
        cost.append(np.zeros(n))
        shift = dual_prices(np.column_stack([D, np.zeros(n)]), w, np.append(h, m))
        choice = np.argmin(np.column_stack([D, np.zeros(n)]) - shift, axis=1)
    else:
        choice = np.argmin(D - dual_prices(D, w, h), axis=1)
    x0 = np.zeros(n * (k + (m > 0)))
    to_center = choice < k
    x0[np.flatnonzero(to_center) * k + choice[to_center]] = w[to_center]
    if m > 0:
        x0[n * k + np.flatnonzero(~to_center)] = w[~to_center]
    res = min_cost_flow(
        n + k + 1,
        np.concatenate(tail),
        np.concatenate(head),
        np.concatenate(cap),
        np.concatenate(cost),
        supply,
        x0=x0,
    )
    return res.flow[: n * k].reshape(n, k)


def _laminar_flow(D: np.ndarray, w: np.ndarray, h: np.ndarray, B: StructureConstraint) -> np.ndarray:
    """Per-point copies of the laminar tree, capacities ``w_p * rank(A) / r``."""
    M = B.matroid
    n, k = D.shape
    sets = [a for a, _ in M.family]  # children before parents; the ground set is last
    ranks = np.array([ra for _, ra in M.family], dtype=float) / M.r
    pos = {a: i for i, a in enumerate(sets)}
    root = pos[M.ground]
    parent = np.array([pos[M._lam_parent[a]] if a != M.ground else -1 for a in sets])
    leaf_of = np.array([next(pos[a] for a in sets if a >> c & 1) for c in range(k)])
    single = np.array([M.rank(1 << c) for c in range(k)], dtype=float) / M.r
    q = len(sets)
    # per point: tree node i sits at p * q + i (the root doubles as the point node)
    tree_nonroot = np.array([i for i in range(q) if i != root], dtype=np.int64)
    base = np.arange(n)[:, None] * q
    centers0 = n * q
    tail = np.concatenate([(base + parent[tree_nonroot]).ravel(), (base + leaf_of).ravel()])
    head = np.concatenate([(base + tree_nonroot).ravel(), np.tile(centers0 + np.arange(k), n)])
    cap = np.concatenate([np.outer(w, ranks[tree_nonroot]).ravel(), np.outer(w, single).ravel()])
    cost = np.concatenate([np.zeros(n * len(tree_nonroot)), D.ravel()])
    supply = np.zeros(n * q + k)
    supply[base.ravel() + root] = w
    supply[centers0:] = -h

    # greedy warm start: fill the nearest centers first within the tree caps
    x_tree = np.zeros((n, len(tree_nonroot)))
    x_leaf = np.zeros((n, k))
    chains = []
    for c in range(k):
        chain, node = [], leaf_of[c]
        while node != -1:
            chain.append(node)
            node = parent[node]
        chains.append(chain)
    slot = {node: j for j, node in enumerate(tree_nonroot)}
    order = np.argsort(D - dual_prices(D, w, h), axis=1, kind="stable")
    for p in range(n):
        room = ranks * w[p]
        for c in order[p]:
            amount = min(single[c] * w[p], min(room[node] for node in chains[c]))
            if amount <= 0:
                continue
            x_leaf[p, c] = amount
            for node in chains[c]:
                room[node] -= amount
                if node != root:
                    x_tree[p, slot[node]] += amount
    x0 = np.concatenate([x_tree.ravel(), x_leaf.ravel()])
    x0 = np.minimum(np.clip(x0, 0.0, None), cap)
    res = min_cost_flow(n * q + k, tail, head, cap, cost, supply, x0=x0)
    return res.flow[n * len(tree_nonroot) :].reshape(n, k)


def _dense_lp(D: np.ndarray, w: np.ndarray, h: np.ndarray, B: StructureConstraint, max_vars: int) -> np.ndarray:
    n, k = D.shape
    if n * k + n > max_vars:
        raise SolverLimit(f"LP needs {n * k + n} variables, cap is {max_vars}")
    G, g = B.rows()
    # row sums s_p are eliminated: s_p = sum_c sigma(p, c)
    row_sum = sp.kron(sp.identity(n), sp.csr_matrix(np.ones((1, k))))
    blocks = [row_sum]
    rhs = [w]
    if G.shape[0]:
        per_row = sp.csr_matrix(G - np.outer(g, np.ones(k)))  # G x - g * sum(x) <= 0
        blocks.append(sp.kron(sp.identity(n), per_row))
        rhs.append(np.zeros(n * G.shape[0]))
    A_ub = sp.vstack(blocks).tocsr()
    A_eq = sp.kron(sp.csr_matrix(np.ones((1, n))), sp.identity(k)).tocsr()
    res = simplex_lp(D.ravel(), A_ub=A_ub, b_ub=np.concatenate(rhs), A_eq=A_eq, b_eq=h)
    return np.clip(res.x.reshape(n, k), 0.0, None)


def robust_cost(P: WeightedPointSet, c, m: float, z: float) -> float:
    """Single-center cost after discarding the ``m`` farthest mass (fractionally)."""
    z = check_power(z)
    total = P.total_weight
    if m < 0 or m > total + 1e-12 * max(1.0, total):
        raise ValueError("m must lie in [0, w(P)]")
    if len(P) == 0:
        return 0.0
    centers = np.asarray([c]) if np.ndim(c) == 0 else np.asarray(c)[None, :]
    d = P.distances(centers)[:, 0] ** z
    order = np.argsort(-d, kind="stable")
    kept = P.weights[order].copy()
    drop = float(m)
    for i in range(len(kept)):
        if drop <= 0:
            break
        take = min(kept[i], drop)
        kept[i] -= take
        drop -= take
    return float(np.dot(kept, d[order]))


def sample_feasible_capacity(
    B: StructureConstraint, total: float, m: float, rng: np.random.Generator, max_vertices: int = 64
) -> np.ndarray:
    """``(total - m)`` times a Dirichlet mixture of vertices of ``B``."""
    if m < 0 or m > total:
        raise ValueError("need 0 <= m <= total")
    if B.kind == "knapsack":
        verts = B.sample_vertices(rng, B.k + 1)
    else:
        verts = B.vertices()
        if len(verts) > max_vertices:
            verts = verts[rng.choice(len(verts), size=max_vertices, replace=False)]
    mix = rng.dirichlet(np.ones(len(verts)))
    return (total - m) * (mix @ verts)

