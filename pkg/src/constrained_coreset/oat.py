"""Optimal assignment transportation (OAT) inside a structure constraint.

Two independent routes are provided: a combinatorial one that moves vertex
distributions of a matroid basis polytope along strong augmenting paths, and
an exact LP over assignments that serves as the brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constraints import StructureConstraint
from .lp import simplex_lp
from .matroid import (
    Matroid,
    check_distribution,
    distribution_point,
    find_strong_augmenting_path,
    is_in_base_polytope,
    path_decompose,
    popcount,
)

MASS_TOL = 1e-13


def _as_matroid(B) -> Matroid:
    if isinstance(B, Matroid):
        return B
    if isinstance(B, StructureConstraint) and B.kind == "matroid":
        return B.matroid
    raise TypeError("augmenting-path transport needs a matroid constraint")


@dataclass
class OATResult:
    mu: dict[int, float]
    coupling: dict[tuple[int, int], float]
    moved: float
    path_cost: float
    longest_path: int
    steps: int

    def __iter__(self):
        # allows ``mu2, kappa, moved = oat_transport(...)``
        return iter((self.mu, self.coupling, self.moved))


def oat_transport(B, h, h_target, mu: dict, tol: float = 1e-10) -> OATResult:
    """Move the vertex distribution ``mu`` of ``h`` to one of ``h_target``.

    Works in unscaled basis-polytope coordinates (``sum(h) = rank``). The
    coupling pairs each original basis with the bases its mass ends up on;
    ``moved`` is its L1 transport cost.
    """
    M = _as_matroid(B)
    mu = check_distribution(M, mu)
    h = np.asarray(h, dtype=float)
    h_target = np.asarray(h_target, dtype=float)
    if np.abs(distribution_point(M, mu) - h).max() > 1e-8:
        raise ValueError("mu does not represent h")
    if not is_in_base_polytope(M, h_target, 1e-8):
        raise ValueError("target is outside the basis polytope")

    # columns[current basis][original basis] = mass
    columns: dict[int, dict[int, float]] = {I: {I: w} for I, w in mu.items()}
    current = dict(mu)
    path_cost = 0.0
    longest = 0
    steps = 0

    points = path_decompose(M, distribution_point(M, mu), h_target)
    for before, after in zip(points[:-1], points[1:]):
        delta_vec = after - before
        s = int(np.argmax(delta_vec))
        t = int(np.argmin(delta_vec))
        remaining = float(delta_vec[s])
        while remaining > tol:
            path = find_strong_augmenting_path(M, current, s, t)
            exchanges = path.batched_exchanges()
            tau = min(remaining, min(current[I] for I in exchanges))
            for I, new in exchanges.items():
                _shift(columns, current, I, new, tau)
            remaining -= tau
            path_cost += 2 * path.length * tau
            longest = max(longest, path.length)
            steps += 1

    coupling: dict[tuple[int, int], float] = {}
    for cur, col in columns.items():
        for orig, w in col.items():
            if w > MASS_TOL:
                coupling[(orig, cur)] = coupling.get((orig, cur), 0.0) + w
    moved = sum(w * popcount(a ^ b) for (a, b), w in coupling.items())
    final = {I: w for I, w in current.items() if w > MASS_TOL}
    return OATResult(final, coupling, moved, path_cost, longest, steps)


def _shift(columns, current, I: int, new: int, tau: float) -> None:
    have = current[I]
    col = columns[I]
    dest = columns.setdefault(new, {})
    if tau >= have * (1 - 1e-12):
        for orig, w in col.items():
            dest[orig] = dest.get(orig, 0.0) + w
        del columns[I]
        del current[I]
        current[new] = current.get(new, 0.0) + have
        return
    frac = tau / have
    for orig in list(col):
        part = col[orig] * frac
        col[orig] -= part
        dest[orig] = dest.get(orig, 0.0) + part
    current[I] = have - tau
    current[new] = current.get(new, 0.0) + tau


def coupling_marginals(coupling: dict) -> tuple[dict[int, float], dict[int, float]]:
    left: dict[int, float] = {}
    right: dict[int, float] = {}
    for (a, b), w in coupling.items():
        left[a] = left.get(a, 0.0) + w
        right[b] = right.get(b, 0.0) + w
    return left, right


# exact LP oracle ---------------------------------------------------------------


def _check_assignment(B: StructureConstraint, h, sigma) -> tuple[np.ndarray, np.ndarray]:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[1] != B.k:
        raise ValueError("assignment has the wrong number of columns")
    if np.any(sigma < -1e-12):
        raise ValueError("assignment must be nonnegative")
    h = np.asarray(h, dtype=float)
    scale = max(1.0, float(np.abs(h).sum()))
    if np.abs(sigma.sum(axis=0) - h).max() > 1e-8 * scale:
        raise ValueError("assignment column sums differ from h")
    return np.clip(sigma, 0.0, None), h


def oat_exact_lp_solution(B: StructureConstraint, h, h_target, sigma) -> tuple[float, np.ndarray]:
    """Cheapest ``sigma'`` consistent with ``(B, h_target)`` keeping row sums."""
    sigma, h = _check_assignment(B, h, sigma)
    h_target = np.asarray(h_target, dtype=float)
    rows = sigma.sum(axis=1)
    if abs(h_target.sum() - rows.sum()) > 1e-8 * max(1.0, rows.sum()):
        raise ValueError("h and h_target carry different mass")
    n, k = sigma.shape
    nk = n * k
    G, g = B.rows()
    q = G.shape[0]
    I = sp.identity(nk, format="csr")
    # variables: [sigma' (nk), t (nk)]
    blocks = [
        sp.hstack([I, -I]),  # sigma' - t <= sigma
        sp.hstack([-I, -I]),  # -sigma' - t <= -sigma
    ]
    b_parts = [sigma.ravel(), -sigma.ravel()]
    if q:
        per_row = sp.kron(sp.identity(n), sp.csr_matrix(G))
        blocks.append(sp.hstack([per_row, sp.csr_matrix((n * q, nk))]))
        b_parts.append(np.kron(rows, g))
    A_ub = sp.vstack(blocks).tocsr()
    b_ub = np.concatenate(b_parts)
    row_sum = sp.kron(sp.identity(n), sp.csr_matrix(np.ones((1, k))))
    col_sum = sp.kron(sp.csr_matrix(np.ones((1, n))), sp.identity(k))
    A_eq = sp.hstack([sp.vstack([row_sum, col_sum]), sp.csr_matrix((n + k, nk))]).tocsr()
    b_eq = np.concatenate([rows, h_target])
    cost = np.concatenate([np.zeros(nk), np.ones(nk)])
    res = simplex_lp(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)
    return res.fun, np.clip(res.x[:nk].reshape(n, k), 0.0, None)


def oat_exact_lp(B: StructureConstraint, h, h_target, sigma) -> float:
    return oat_exact_lp_solution(B, h, h_target, sigma)[0]


# Lipschitz-constant estimation -----------------------------------------------------


def random_consistent_assignment(B: StructureConstraint, rng: np.random.Generator, rows: int | None = None):
    """``(sigma, h)`` with ``sigma`` rows in ``s_p * B`` and total mass 1."""
    rows = rows if rows is not None else int(rng.integers(1, B.k + 2))
    verts = B.sample_vertices(rng, rows * 2)
    mix = rng.dirichlet(np.full(2, 0.5), size=rows)
    points = mix[:, :1] * verts[:rows] + mix[:, 1:] * verts[rows:]
    mass = rng.dirichlet(np.ones(rows))
    sigma = mass[:, None] * points
    return sigma, sigma.sum(axis=0)


def random_body_point(B: StructureConstraint, rng: np.random.Generator) -> np.ndarray:
    verts = B.sample_vertices(rng, B.k + 1)
    return rng.dirichlet(np.ones(len(verts))) @ verts


def lip_ratio_search(B: StructureConstraint, trials: int, rng_seed: int = 0) -> tuple[float, dict | None]:
    """Largest observed ``OAT / ||h - h'||_1`` over random instances.

    Targets are drawn at random distances from ``h`` (including very short
    moves, where worst cases tend to live). The result lower-bounds Lip(B).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(rng_seed)
    best, witness = 0.0, None
    for _ in range(trials):
        sigma, h = random_consistent_assignment(B, rng)
        far = random_body_point(B, rng)
        step = float(10 ** rng.uniform(-3, 0))
        h_target = h + step * (far - h)
        gap = float(np.abs(h - h_target).sum())
        if gap < 1e-12:
            continue
        value = oat_exact_lp(B, h, h_target, sigma)
        ratio = value / gap
        if ratio > best:
            best = ratio
            witness = {"h": h, "h_target": h_target, "sigma": sigma, "oat": value, "ratio": ratio}
    return best, witness


@dataclass
class KnapsackInstance:
    U: float
    A: np.ndarray
    h: np.ndarray
    h_target: np.ndarray
    sigma: np.ndarray
    oat: float
    ratio: float

    @property
    def constraint(self) -> StructureConstraint:
        return StructureConstraint.knapsack(self.A)


def knapsack_lip_instance(U: float) -> KnapsackInstance:
    """A two-row knapsack body whose OAT ratio exceeds ``U``."""
    if not U > 0:
        raise ValueError("U must be positive")
    a = (10 * U + 2) / (5 * U + 3)
    b = 4 / (5 * U + 3)
    A = np.array([[a, b, 0.0], [a, 0.0, b]])
    h = np.array([0.5, 0.25, 0.25])
    h_target = np.array([0.5 + 1 / (10 * U), 0.25 - 1 / (20 * U), 0.25 - 1 / (20 * U)])
    sigma = np.array([[0.25, 0.25, 0.0], [0.25, 0.0, 0.25]])
    B = StructureConstraint.knapsack(A)
    value = oat_exact_lp(B, h, h_target, sigma)
    return KnapsackInstance(U, A, h, h_target, sigma, value, value / float(np.abs(h - h_target).sum()))


# transport between scaled bodies -------------------------------------------------------


def extend_transport(B: StructureConstraint, a: float, b: float, h, h_target, sigma) -> np.ndarray:
    """Turn ``sigma ~ (a*B, h)`` into some ``sigma' ~ (b*B, h_target)``.

    Transports inside ``a*B`` towards ``(a/b) * h_target`` and then shrinks
    by ``b/a``; the movement is at most ``3 * Lip(B) * ||h - h_target||_1``.
    """
    if b <= 0 or a < b:
        raise ValueError("need a >= b > 0")
    h = np.asarray(h, dtype=float)
    h_target = np.asarray(h_target, dtype=float)
    if abs(h.sum() - a) > 1e-8 * max(1.0, a) or abs(h_target.sum() - b) > 1e-8 * max(1.0, b):
        raise ValueError("h must have mass a and h_target mass b")
    _, pi = oat_exact_lp_solution(B, h, (a / b) * h_target, sigma)
    return (b / a) * pi
