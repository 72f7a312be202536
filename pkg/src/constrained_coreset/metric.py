"""Metric spaces, z-power costs, dyadic rings and triangle-inequality helpers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

NEG_INF = -math.inf
"""Ring index of the points sitting exactly on the center."""

TOL = 1e-9
TRIANGLE_CHECK_MAX_N = 512


def ring_key(index: float) -> str:
    """Serialize a ring index; the center ring becomes ``"-inf"``."""
    return "-inf" if index == NEG_INF else str(int(index))


def parse_ring_key(text: str) -> float:
    return NEG_INF if text == "-inf" else int(text)


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite metric: Euclidean coordinates or an explicit distance matrix.

    Centers passed to :meth:`distances` are either a 1-D array of point ids or,
    for Euclidean spaces only, a 2-D array of arbitrary coordinates.
    """

    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None
    check_triangle: bool | None = None
    _n: int = field(init=False, repr=False)

    def __post_init__(self):
        if (self.coords is None) == (self.matrix is None):
            raise ValueError("exactly one of coords or matrix must be given")
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.ndim != 2 or not np.all(np.isfinite(c)):
                raise ValueError("coords must be a finite (n, d) array")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
            object.__setattr__(self, "_n", c.shape[0])
            return
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("explicit metric must be a square matrix")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("distances must be finite and nonnegative")
        scale = max(1.0, float(m.max(initial=0.0)))
        if np.any(np.abs(np.diag(m)) > TOL * scale):
            raise ValueError("explicit metric needs a zero diagonal")
        if np.any(np.abs(m - m.T) > TOL * scale):
            raise ValueError("explicit metric must be symmetric")
        n = m.shape[0]
        check = self.check_triangle if self.check_triangle is not None else n <= TRIANGLE_CHECK_MAX_N
        if check:
            for k in range(n):
                # d(i,j) <= d(i,k) + d(k,j) for every pivot k
                if np.any(m > m[:, k][:, None] + m[k, :][None, :] + TOL * scale):
                    raise ValueError("explicit metric violates the triangle inequality")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_n", n)

    @classmethod
    def euclidean(cls, points) -> "MetricSpace":
        return cls(coords=np.asarray(points, dtype=float))

    @classmethod
    def explicit(cls, matrix, check_triangle: bool | None = None) -> "MetricSpace":
        return cls(matrix=np.asarray(matrix, dtype=float), check_triangle=check_triangle)

    @property
    def n(self) -> int:
        return self._n

    @property
    def is_euclidean(self) -> bool:
        return self.coords is not None

    @property
    def d(self) -> int | None:
        return self.coords.shape[1] if self.coords is not None else None

    def _check_ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self._n):
            raise IndexError("point id out of range")
        return ids

    def dist(self, a: int, b: int) -> float:
        a, b = (int(x) for x in self._check_ids([a, b]))
        if self.matrix is not None:
            return float(self.matrix[a, b])
        return float(np.linalg.norm(self.coords[a] - self.coords[b]))

    def locate(self, centers) -> np.ndarray:
        """Coordinates of ``centers`` (ids or coordinates); Euclidean only."""
        if self.coords is None:
            raise TypeError("explicit metrics have no coordinates")
        centers = np.asarray(centers)
        if centers.ndim == 1:
            return self.coords[self._check_ids(centers)]
        return np.asarray(centers, dtype=float).reshape(-1, self.coords.shape[1])

    def distances(self, ids, centers) -> np.ndarray:
        """Distance matrix of shape ``(len(ids), len(centers))``."""
        ids = self._check_ids(ids)
        centers = np.asarray(centers)
        if centers.ndim == 1 and centers.dtype.kind in "iu":
            cids = self._check_ids(centers)
            if self.matrix is not None:
                return self.matrix[np.ix_(ids, cids)]
            ccoords = self.coords[cids]
        else:
            if self.coords is None:
                raise TypeError("explicit metrics only accept center ids")
            ccoords = np.asarray(centers, dtype=float).reshape(-1, self.coords.shape[1])
        diff = self.coords[ids][:, None, :] - ccoords[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def diameter(self, ids=None) -> float:
        ids = np.arange(self._n) if ids is None else self._check_ids(ids)
        if ids.size == 0:
            return 0.0
        if self.matrix is not None:
            return float(self.matrix[np.ix_(ids, ids)].max())
        pts = self.coords[ids]
        if len(pts) > 2000:
            # bounding-box diagonal: within a factor sqrt(d) of the true diameter
            return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).max())


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Point ids into a :class:`MetricSpace` with positive weights."""

    space: MetricSpace
    ids: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if ids.shape != w.shape:
            raise ValueError("ids and weights differ in length")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be positive and finite")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("point ids must be distinct")
        self.space._check_ids(ids)
        ids.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, space: MetricSpace, ids=None) -> "WeightedPointSet":
        ids = np.arange(space.n) if ids is None else np.asarray(ids)
        return cls(space, ids, np.ones(len(ids)))

    @classmethod
    def merged(cls, space: MetricSpace, ids, weights) -> "WeightedPointSet":
        """Build a set from possibly repeated ids by summing their weights."""
        ids = np.asarray(ids, dtype=np.int64)
        uniq, inv = np.unique(ids, return_inverse=True)
        w = np.zeros(len(uniq))
        np.add.at(w, inv, np.asarray(weights, dtype=float))
        return cls(space, uniq, w)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def subset(self, mask_or_index) -> "WeightedPointSet":
        return WeightedPointSet(self.space, self.ids[mask_or_index], self.weights[mask_or_index])

    def distances(self, centers) -> np.ndarray:
        return self.space.distances(self.ids, centers)


def check_power(z: float) -> float:
    z = float(z)
    if not z >= 1:
        raise ValueError("z must be >= 1")
    return z


def dist(space: MetricSpace, a: int, b: int) -> float:
    return space.dist(a, b)


def power_dist(space: MetricSpace, z: float, a: int, b: int) -> float:
    return space.dist(a, b) ** check_power(z)


def cost_to_center(P: WeightedPointSet, c, z: float) -> float:
    """Single-center cost: sum of w(p) * d(p, c)^z. Empty sets cost 0."""
    z = check_power(z)
    if len(P) == 0:
        return 0.0
    centers = np.asarray([c]) if np.ndim(c) == 0 else np.asarray(c)[None, :]
    d = P.distances(centers)[:, 0]
    return float(np.dot(P.weights, d**z))


def ring_index_of_distance(d: float) -> float:
    """The unique i with 2^(i-1) < d <= 2^i, or NEG_INF for d == 0."""
    if d < 0:
        raise ValueError("distance must be nonnegative")
    if d == 0:
        return NEG_INF
    mant, exp = math.frexp(d)  # d = mant * 2**exp, mant in [0.5, 1)
    return exp - 1 if mant == 0.5 else exp


def ring_index(space: MetricSpace, center: int, p: int) -> float:
    return ring_index_of_distance(space.dist(center, p))


def ring_indices(distances: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ring_index_of_distance`, as floats with -inf for zero."""
    d = np.asarray(distances, dtype=float)
    out = np.full(d.shape, NEG_INF)
    pos = d > 0
    mant, exp = np.frexp(d[pos])
    out[pos] = np.where(mant == 0.5, exp - 1, exp)
    return out


def gen_triangle_check(da_c: float, db_c: float, da_b: float, z: float, t: float) -> tuple[float, float]:
    """Right-hand sides of the two generalized triangle inequalities.

    ``bound1`` upper-bounds ``da_b**z`` and ``bound2`` upper-bounds
    ``|da_c**z - db_c**z|``.
    """
    z = check_power(z)
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    if min(da_c, db_c, da_b) < 0:
        raise ValueError("distances must be nonnegative")
    bound1 = (1 + t) ** (z - 1) * da_c**z + (1 + 1 / t) ** (z - 1) * db_c**z
    bound2 = t * da_c**z + (3 * z / t) ** (z - 1) * da_b**z
    return bound1, bound2


def euclidean_grid_net(center, radius: float, spacing: float, max_points: int = 200_000) -> np.ndarray:
    """Axis-aligned grid covering ``Ball(center, radius)``.

    Every ball point lies within ``spacing * sqrt(d) / 2`` of a returned point.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.shape[0]
    if d > 3:
        raise ValueError("grid nets are limited to d <= 3")
    if radius < 0 or spacing <= 0:
        raise ValueError("need radius >= 0 and spacing > 0")
    steps = max(0, math.ceil(radius / spacing - 0.5))
    if (2 * steps + 1) ** d > max_points:
        raise ValueError(f"grid net would exceed {max_points} points")
    axis = np.arange(-steps, steps + 1) * spacing
    offsets = np.array(list(itertools.product(axis, repeat=d))).reshape(-1, d)
    keep = np.linalg.norm(offsets, axis=1) <= radius + spacing + TOL
    return center[None, :] + offsets[keep]
