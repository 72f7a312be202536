"""Approximate centers, outlier extraction and the ring/group decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric import (
    NEG_INF,
    MetricSpace,
    WeightedPointSet,
    check_power,
    ring_indices,
)


def _as_centers(centers) -> np.ndarray:
    c = np.asarray(centers)
    if c.ndim == 0:
        c = c[None]
    return c


def _single(center) -> np.ndarray:
    c = np.asarray(center)
    return c[None] if c.ndim == 0 else c[None, :]


def nearest_center(P: WeightedPointSet, centers) -> tuple[np.ndarray, np.ndarray]:
    """Index of the closest center per point (ties to the lowest index) and the distance."""
    D = P.distances(_as_centers(centers))
    idx = np.argmin(D, axis=1)
    return idx, D[np.arange(len(P)), idx]


def trimmed_cost(dz: np.ndarray, w: np.ndarray, m: float) -> float:
    """``sum w * dz`` after removing the ``m`` mass with largest ``dz`` (fractionally)."""
    order = np.argsort(-dz, kind="stable")
    cum = np.cumsum(w[order])
    kept = np.clip(cum - m, 0.0, w[order])
    return float(np.dot(kept, dz[order]))


# tri-criteria approximation ------------------------------------------------------


@dataclass
class ApproxSolution:
    """Centers (point ids or coordinates), the outlier set and the induced clusters.

    ``labels[j]`` is the cluster of ``P.ids[j]``, or -1 for outliers.
    """

    points: WeightedPointSet
    centers: np.ndarray
    labels: np.ndarray
    m: float
    z: float
    alpha: float | None = None
    beta: float = 1.0
    gamma: float = 1.0
    cost: float = 0.0
    boundary_overshoot: float = 0.0

    @property
    def outlier_mask(self) -> np.ndarray:
        return self.labels < 0

    @property
    def outliers(self) -> WeightedPointSet:
        return self.points.subset(self.outlier_mask)

    @property
    def n_clusters(self) -> int:
        return len(self.centers)

    def cluster(self, i: int) -> WeightedPointSet:
        return self.points.subset(self.labels == i)

    def center(self, i: int):
        return self.centers[i]


def _dz_sampling(P: WeightedPointSet, count: int, m: float, z: float, rng: np.random.Generator) -> np.ndarray:
    w = P.weights
    n = len(P)
    first_pool = rng.choice(n, size=min(32, n), replace=False, p=w / w.sum())
    pool_pts = P.ids[first_pool]
    D = P.space.distances(pool_pts, pool_pts) ** z
    frac = m / P.total_weight
    scores = [trimmed_cost(D[:, j], w[first_pool], frac * w[first_pool].sum()) for j in range(len(first_pool))]
    chosen = [int(first_pool[int(np.argmin(scores))])]
    best = P.distances(P.ids[chosen])[:, 0] ** z
    while len(chosen) < count:
        prob = w * best
        if m > 0:
            # ignore the m farthest mass so planted outliers do not attract centers
            order = np.argsort(-best, kind="stable")
            cum = np.cumsum(w[order])
            prob[order[cum - w[order] < m]] = 0.0
        prob[chosen] = 0.0
        if prob.sum() <= 0:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        else:
            nxt = int(rng.choice(n, p=prob / prob.sum()))
        chosen.append(nxt)
        best = np.minimum(best, P.distances(P.ids[[nxt]])[:, 0] ** z)
    return np.array(chosen)


def tri_criteria_approx(
    P: WeightedPointSet,
    k: int,
    m: float,
    z: float,
    rng: np.random.Generator,
    beta: int = 8,
    restarts: int = 3,
    gamma: float = 1.0,
) -> ApproxSolution:
    """Adaptive ``D^z`` seeding of ``beta * k`` centers, best of ``restarts`` runs.

    Candidates are scored by their cost with ``gamma * m`` outlier mass
    removed; the returned clusters use exactly ``m`` outliers.
    """
    z = check_power(z)
    n = len(P)
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= |P|")
    if not 0 <= m < P.total_weight:
        raise ValueError("need 0 <= m < w(P)")
    count = min(beta * k, n)
    best_pos, best_cost = None, math.inf
    for _ in range(max(1, restarts)):
        pos = np.arange(n) if count == n else _dz_sampling(P, count, gamma * m, z, rng)
        _, d = nearest_center(P, P.ids[pos])
        score = trimmed_cost(d**z, P.weights, gamma * m)
        if score < best_cost:
            best_pos, best_cost = pos, score
        if count == n:
            break
    centers = P.ids[np.sort(best_pos)]
    return approx_from_centers(P, centers, m, z, beta=count / k, gamma=gamma)


def approx_from_centers(
    P: WeightedPointSet, centers, m: float, z: float, beta: float = 1.0, gamma: float = 1.0
) -> ApproxSolution:
    """Build the outlier set and clusters for externally supplied centers."""
    centers = _as_centers(centers)
    out_mask, overshoot = extract_outliers(P, centers, m, z)
    labels, _ = nearest_center(P, centers)
    labels = labels.astype(np.int64)
    labels[out_mask] = -1
    _, d = nearest_center(P, centers)
    cost = float(np.dot(P.weights[~out_mask], d[~out_mask] ** z))
    return ApproxSolution(P, centers, labels, float(m), z, beta=beta, gamma=gamma, cost=cost, boundary_overshoot=overshoot)


def extract_outliers(P: WeightedPointSet, centers, m: float, z: float) -> tuple[np.ndarray, float]:
    """Mask of the farthest points holding ``m`` mass, ties to the lowest id.

    Whole points are removed; the returned overshoot is the extra mass taken
    when ``m`` does not align with point weights.
    """
    total = P.total_weight
    if m < 0 or m > total + 1e-9:
        raise ValueError("m must lie in [0, w(P)]")
    mask = np.zeros(len(P), dtype=bool)
    if m <= 0 or len(P) == 0:
        return mask, 0.0
    _, d = nearest_center(P, centers)
    order = np.lexsort((P.ids, -d))
    cum = np.cumsum(P.weights[order])
    take = int(np.searchsorted(cum, m - 1e-9 * max(1.0, total))) + 1
    take = min(take, len(P))
    mask[order[:take]] = True
    return mask, float(cum[take - 1] - m)


# rings and groups ---------------------------------------------------------------------


@dataclass
class Ring:
    cluster: int
    index: float  # integer or NEG_INF
    members: WeightedPointSet
    center: object
    cost: float
    lam: float = 0.0

    @property
    def outer_radius(self) -> float:
        return 0.0 if self.index == NEG_INF else 2.0 ** self.index


@dataclass
class Group:
    cluster: int
    l: float
    r: float
    members: WeightedPointSet
    center: object
    cost: float
    ring_indices: list = field(default_factory=list)


@dataclass
class Decomposition:
    cluster: int
    center: object
    cost: float
    threshold: float
    rings: list[Ring]  # every nonempty ring
    heavy: list[Ring]
    groups: list[Group]
    light_runs: int


def ring_threshold(cost: float, k: int, z: float, eps: float) -> float:
    return (eps / (6 * z)) ** z * cost / (k * math.log(48 * z / eps))


def decompose_rings_groups(Q: WeightedPointSet, c, k: int, z: float, eps: float, cluster: int = 0) -> Decomposition:
    """Split ``Q`` into heavy dyadic rings around ``c`` and greedy groups of light rings."""
    z = check_power(z)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if len(Q) == 0:
        raise ValueError("empty cluster")
    d = Q.distances(_single(c))[:, 0]
    dz = d**z
    idx = ring_indices(d)
    total = float(np.dot(Q.weights, dz))
    T = ring_threshold(total, k, z, eps)
    rings = []
    for j in np.unique(idx):  # ascending, -inf first
        sel = idx == j
        cost = float(np.dot(Q.weights[sel], dz[sel]))
        lam = cost / total if total > 0 else 1.0
        rings.append(Ring(cluster, float(j), Q.subset(sel), c, cost, lam))
    heavy, groups, runs = [], [], 0
    current: list[Ring] = []
    current_cost = 0.0
    in_run = False

    def close():
        nonlocal current, current_cost
        if current:
            ids = np.concatenate([r.members.ids for r in current])
            ws = np.concatenate([r.members.weights for r in current])
            groups.append(
                Group(
                    cluster,
                    current[0].index,
                    current[-1].index,
                    WeightedPointSet(Q.space, ids, ws),
                    c,
                    current_cost,
                    [r.index for r in current],
                )
            )
        current, current_cost = [], 0.0

    for ring in rings:
        if ring.cost >= T:
            close()
            in_run = False
            heavy.append(ring)
            continue
        if not in_run:
            runs += 1
            in_run = True
        if current and current_cost + ring.cost > T:
            close()
        current.append(ring)
        current_cost += ring.cost
    close()
    return Decomposition(cluster, c, total, T, rings, heavy, groups, runs)


def check_decomposition(Q: WeightedPointSet, dec: Decomposition, z: float, k: int, eps: float) -> dict[str, bool]:
    """Exact partition, threshold sides, ring membership and count bounds."""
    parts = [r.members.ids for r in dec.heavy] + [g.members.ids for g in dec.groups]
    got = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
    partition = got.shape == Q.ids.shape and bool(np.all(got == np.sort(Q.ids)))
    T = dec.threshold
    heavy_ok = all(r.cost >= T for r in dec.heavy)
    groups_ok = all(g.cost <= T * (1 + 1e-12) for g in dec.groups)
    members_ok = True
    for r in dec.heavy:
        dd = r.members.distances(_single(dec.center))[:, 0]
        if r.index == NEG_INF:
            members_ok &= bool(np.all(dd == 0))
        else:
            members_ok &= bool(np.all((dd > 2.0 ** (r.index - 1)) & (dd <= 2.0**r.index)))
    intervals = sorted((g.l, g.r) for g in dec.groups)
    disjoint = all(a[1] < b[0] for a, b in zip(intervals, intervals[1:]))
    heavy_bound = (6 * z / eps) ** z * k * math.log(48 * z / eps)
    count_ok = len(dec.heavy) <= heavy_bound + 1e-9
    group_bound = (2 * dec.cost / T if T > 0 else 0) + dec.light_runs
    return {
        "partition": partition,
        "heavy_above_threshold": heavy_ok,
        "groups_below_threshold": groups_ok,
        "ring_membership": members_ok,
        "group_intervals_disjoint": disjoint,
        "heavy_count_bound": count_ok,
        "group_count_bound": len(dec.groups) <= group_bound + 1e-9,
    }


# two-point coresets -------------------------------------------------------------------


@dataclass
class TwoPointCoreset:
    close_id: int
    far_id: int
    close_weight: float
    far_weight: float
    lam: np.ndarray

    def as_points(self, space: MetricSpace) -> WeightedPointSet:
        ids, ws = [], []
        for pid, wt in ((self.close_id, self.close_weight), (self.far_id, self.far_weight)):
            if wt > 0:
                ids.append(pid)
                ws.append(wt)
        return WeightedPointSet.merged(space, ids, ws)


def two_point_coreset(G, c, z: float) -> TwoPointCoreset:
    """Closest and farthest members reweighted so mass and single-center cost match."""
    members = G.members if isinstance(G, Group) else G
    if len(members) == 0:
        raise ValueError("empty group")
    z = check_power(z)
    d = members.distances(_single(c))[:, 0]
    close = int(np.lexsort((members.ids, d))[0])
    far = int(np.lexsort((members.ids, -d))[0])
    dc, df = d[close] ** z, d[far] ** z
    if df - dc <= 0:
        lam = np.ones(len(members))
    else:
        lam = np.clip((df - d**z) / (df - dc), 0.0, 1.0)
    w = members.weights
    w_close = float(np.dot(lam, w))
    w_far = float(np.dot(1 - lam, w))
    return TwoPointCoreset(int(members.ids[close]), int(members.ids[far]), w_close, w_far, lam)


# ring levels -------------------------------------------------------------------------


def center_distances(space: MetricSpace, C, a) -> np.ndarray:
    """Distances from each center in ``C`` to the point ``a`` (ids or coordinates)."""
    C = _as_centers(C)
    a = np.asarray(a)
    if space.is_euclidean:
        cc = space.locate(C) if C.ndim == 1 and C.dtype.kind in "iu" else np.atleast_2d(C.astype(float))
        aa = space.locate(a[None]) if a.ndim == 0 else a[None, :].astype(float)
        return np.linalg.norm(cc - aa, axis=1)
    return space.matrix[np.asarray(C, dtype=np.int64), int(a)]


def _level_sets(space, C, center, r: float, eps: float, z: float):
    d = center_distances(space, C, center)
    far = d >= 48 * z * r / eps
    close = d <= eps * r / (48 * z)
    return d, far, close


def ring_level(R: Ring, C, eps: float, z: float) -> int:
    """Number of centers neither far from nor close to the ring's center."""
    if R.index == NEG_INF:
        return 0
    r = 2.0 ** (R.index - 1)
    _, far, close = _level_sets(R.members.space, C, R.center, r, eps, z)
    return int(len(far) - far.sum() - close.sum())


def project_centers(space: MetricSpace, C, center, r: float, eps: float, z: float, h=None):
    """Snap far and close centers onto ``center``; also return the far-center cost term."""
    C = _as_centers(C)
    d, far, close = _level_sets(space, C, center, r, eps, z)
    snap = far | close
    projected = C.copy()
    projected[snap] = center
    phi = 0.0
    if h is not None:
        phi = float(np.dot(np.asarray(h, dtype=float)[far], d[far] ** z))
    return projected, phi
