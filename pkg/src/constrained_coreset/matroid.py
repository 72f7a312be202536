"""Matroids on a small ground set, their basis polytopes and exchange structure.

Subsets of the ground set ``E = {0, ..., k-1}`` are encoded as int bitmasks
throughout; helpers :func:`mask` and :func:`members` convert.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

POLY_TOL = 1e-9
MAX_EXPLICIT_K = 16
EXHAUSTIVE_CHECK_K = 12


class NoPath(Exception):
    """No augmenting path exists in the exchange graph."""


def mask(elements) -> int:
    if isinstance(elements, (int, np.integer)):
        return int(elements)
    out = 0
    for e in elements:
        out |= 1 << int(e)
    return out


def members(m: int) -> list[int]:
    out = []
    i = 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out


def popcount(m: int) -> int:
    return bin(m).count("1")


def _popcounts(k: int) -> np.ndarray:
    subsets = np.arange(1 << k, dtype=np.int64)
    pc = np.zeros(1 << k, dtype=np.int64)
    for i in range(k):
        pc += (subsets >> i) & 1
    return pc


def subset_sums(x: np.ndarray) -> np.ndarray:
    """``out[A] = sum(x[i] for i in A)`` for every bitmask A."""
    k = len(x)
    out = np.zeros(1 << k)
    for i in range(k):
        half = 1 << i
        out = out.reshape(-1, 2 * half)
        out[:, half:] += x[i]
        out = out.reshape(-1)
    return out


class Matroid:
    """A matroid given by a laminar capacity family or an explicit rank table.

    Uniform and partition matroids are stored as laminar families. For the
    laminar kinds the capacities are normalized to the true ranks, and the
    implicit singleton bounds ``x_e <= 1`` complete the polytope description.
    """

    def __init__(self, k: int, kind: str, family=None, rank_table=None, validate: bool = True):
        self.k = int(k)
        self.kind = kind
        self.ground = (1 << self.k) - 1
        if kind == "explicit":
            if self.k > MAX_EXPLICIT_K:
                raise ValueError(f"explicit matroids are limited to k <= {MAX_EXPLICIT_K}")
            table = np.asarray(rank_table, dtype=np.int64).ravel()
            if table.shape != (1 << self.k,):
                raise ValueError("rank table must list all 2^k subsets")
            self.rank_table = table
            if validate and self.k <= EXHAUSTIVE_CHECK_K:
                self._validate_rank_table()
            self.family = None
        else:
            self._init_laminar(family, validate)
            self.rank_table = None
        self.r = self.rank(self.ground)
        self._bases = None
        self._constraint_sets = None

    # constructors -------------------------------------------------------

    @classmethod
    def uniform(cls, k: int, r: int) -> "Matroid":
        if not 0 <= r <= k:
            raise ValueError("need 0 <= r <= k")
        return cls(k, "uniform", family=[((1 << k) - 1, r)])

    @classmethod
    def partition(cls, k: int, blocks, caps) -> "Matroid":
        blocks = [mask(b) for b in blocks]
        if len(blocks) != len(caps):
            raise ValueError("one capacity per block")
        union = 0
        for b in blocks:
            if union & b:
                raise ValueError("partition blocks must be disjoint")
            union |= b
        if union != (1 << k) - 1:
            raise ValueError("partition blocks must cover the ground set")
        family = list(zip(blocks, (int(c) for c in caps)))
        family.append(((1 << k) - 1, k))
        return cls(k, "partition", family=family)

    @classmethod
    def laminar(cls, k: int, family) -> "Matroid":
        """``family`` is a list of ``(subset, capacity)`` pairs."""
        fam = [(mask(s), int(u)) for s, u in family]
        return cls(k, "laminar", family=fam)

    @classmethod
    def explicit(cls, k: int, rank_table, validate: bool = True) -> "Matroid":
        return cls(k, "explicit", rank_table=rank_table, validate=validate)

    @classmethod
    def from_bases(cls, k: int, bases) -> "Matroid":
        """Explicit matroid from its list of bases (validated)."""
        bases = np.array(sorted({mask(b) for b in bases}), dtype=np.int64)
        if bases.size == 0:
            raise ValueError("a matroid has at least one basis")
        subsets = np.arange(1 << k, dtype=np.int64)
        pc = _popcounts(k)
        table = np.zeros(1 << k, dtype=np.int64)
        for b in bases:
            np.maximum(table, pc[subsets & b], out=table)
        m = cls(k, "explicit", rank_table=table)
        if sorted(m.bases()) != bases.tolist():
            raise ValueError("the given sets are not the bases of a matroid")
        return m

    # laminar machinery --------------------------------------------------

    def _init_laminar(self, family, validate):
        caps: dict[int, int] = {}
        for s, u in family:
            if s == 0 or s & ~self.ground:
                raise ValueError("family sets must be nonempty subsets of E")
            if u < 0:
                raise ValueError("capacities must be nonnegative")
            caps[s] = min(u, caps.get(s, u))
        caps.setdefault(self.ground, self.k)
        sets = sorted(caps, key=lambda s: (popcount(s), s))
        if validate:
            for a, b in itertools.combinations(sets, 2):
                inter = a & b
                if inter and inter != a and inter != b:
                    raise ValueError("family is not laminar")
        parent = {}
        for i, s in enumerate(sets):
            parent[s] = next((t for t in sets[i + 1 :] if t & s == s), None)
        children = {s: [c for c in sets if parent[c] == s] for s in sets}
        self._lam_sets = sets  # children before parents
        self._lam_caps = caps
        self._lam_parent = parent
        self._lam_children = children
        self._lam_own = {s: s & ~self._union(children[s]) for s in sets}
        # normalize capacities to true ranks so the polytope description is tight
        self.family = [(s, self._laminar_rank(s)) for s in sets]

    @staticmethod
    def _union(sets) -> int:
        out = 0
        for s in sets:
            out |= s
        return out

    def _laminar_rank(self, a: int) -> int:
        val = {}
        for s in self._lam_sets:
            inner = sum(val[c] for c in self._lam_children[s]) + popcount(a & self._lam_own[s])
            val[s] = min(self._lam_caps[s], inner)
        return val[self.ground]

    def _validate_rank_table(self):
        t = self.rank_table
        k = self.k
        if t[0] != 0:
            raise ValueError("rank of the empty set must be 0")
        subsets = np.arange(1 << k)
        for e in range(k):
            bit = 1 << e
            without = subsets[(subsets & bit) == 0]
            inc = t[without | bit] - t[without]
            if np.any((inc < 0) | (inc > 1)):
                raise ValueError("rank must be monotone with unit increments")
        for e, f in itertools.combinations(range(k), 2):
            both = (1 << e) | (1 << f)
            a = subsets[(subsets & both) == 0]
            if np.any(t[a | (1 << e)] + t[a | (1 << f)] < t[a | both] + t[a]):
                raise ValueError("rank function is not submodular")

    @property
    def depth(self) -> int:
        """Length of the longest chain in the laminar family (ending at E)."""
        if self.family is None:
            raise TypeError("depth is defined for laminar kinds only")
        depth = {}
        for s in reversed(self._lam_sets):  # parents first
            p = self._lam_parent[s]
            depth[s] = 1 if p is None else depth[p] + 1
        return max(depth.values())

    # oracle -------------------------------------------------------------

    def rank(self, a) -> int:
        a = mask(a)
        if a & ~self.ground:
            raise ValueError("subset outside the ground set")
        if self.rank_table is not None:
            return int(self.rank_table[a])
        return self._laminar_rank(a)

    def is_independent(self, a) -> bool:
        a = mask(a)
        return self.rank(a) == popcount(a)

    def is_basis(self, a) -> bool:
        a = mask(a)
        return popcount(a) == self.r and self.is_independent(a)

    def bases(self) -> list[int]:
        if self._bases is None:
            out = []
            for combo in itertools.combinations(range(self.k), self.r):
                b = mask(combo)
                if self.is_independent(b):
                    out.append(b)
            self._bases = out
        return list(self._bases)

    def rank_all(self) -> np.ndarray:
        """Rank of every subset, indexed by bitmask."""
        if self.rank_table is not None:
            return self.rank_table
        return np.array([self._laminar_rank(a) for a in range(1 << self.k)], dtype=np.int64)

    def closure(self, a) -> int:
        a = mask(a)
        ra = self.rank(a)
        out = a
        for e in range(self.k):
            if not a >> e & 1 and self.rank(a | 1 << e) == ra:
                out |= 1 << e
        return out

    def constraint_sets(self) -> list[tuple[int, int]]:
        """Sets ``A`` whose inequalities ``x(A) <= rank(A)`` describe P_M.

        Laminar kinds: the family plus singletons. Explicit kind: every
        proper flat. ``E`` itself is included; it carries the equality.
        """
        if self._constraint_sets is None:
            if self.family is not None:
                sets = dict(self.family)
                for e in range(self.k):
                    sets.setdefault(1 << e, self.rank(1 << e))
            else:
                ranks = self.rank_table
                sets = {}
                for a in range(1, 1 << self.k):
                    if self.closure(a) == a:
                        sets[a] = int(ranks[a])
                sets[self.ground] = self.r
            self._constraint_sets = sorted(sets.items())
        return list(self._constraint_sets)

    def __repr__(self):
        return f"Matroid(kind={self.kind!r}, k={self.k}, rank={self.r})"


# base polytope ----------------------------------------------------------------


def rank(M: Matroid, A) -> int:
    return M.rank(A)


def _check_vector(M: Matroid, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (M.k,):
        raise ValueError(f"expected a vector of length {M.k}")
    return x


def is_in_base_polytope(M: Matroid, x, tol: float = POLY_TOL) -> bool:
    x = _check_vector(M, x)
    if np.any(x < -tol) or abs(x.sum() - M.r) > tol:
        return False
    if M.rank_table is not None:
        sums = subset_sums(x)
        return bool(np.all(sums <= M.rank_table + tol))
    for a, ra in M.constraint_sets():
        if x[members(a)].sum() > ra + tol:
            return False
    return True


def _slacks(M: Matroid, x: np.ndarray) -> list[tuple[int, float]]:
    """``(A, rank(A) - x(A))`` over the describing constraint sets."""
    if M.rank_table is not None:
        sums = subset_sums(x)
        return [(a, float(M.rank_table[a] - sums[a])) for a in range(1, 1 << M.k)]
    return [(a, ra - float(x[members(a)].sum())) for a, ra in M.constraint_sets()]


def tight_sets(M: Matroid, x, tol: float = POLY_TOL) -> list[int]:
    x = _check_vector(M, x)
    return [a for a, s in _slacks(M, x) if s <= tol]


def smallest_tight_set(M: Matroid, x, j: int, tol: float = POLY_TOL) -> int:
    """Intersection of all tight sets containing ``j`` (itself tight)."""
    out = M.ground
    for a in tight_sets(M, x, tol):
        if a >> j & 1:
            out &= a
    return out


# exchange structure -------------------------------------------------------------


def exchange_set(M: Matroid, I, a: int) -> list[int]:
    """Elements ``b`` of basis ``I`` such that ``I + a - b`` is independent."""
    I = mask(I)
    if I >> a & 1:
        raise ValueError("element already in the basis")
    if not M.is_basis(I):
        raise ValueError("I is not a basis")
    with_a = I | 1 << a
    return [b for b in members(I) if M.is_independent(with_a & ~(1 << b))]


def check_distribution(M: Matroid, mu: dict, tol: float = 1e-9) -> dict[int, float]:
    mu = {mask(b): float(w) for b, w in mu.items() if w > 0}
    if not mu:
        raise ValueError("empty vertex distribution")
    if abs(sum(mu.values()) - 1) > tol:
        raise ValueError("vertex masses must sum to 1")
    for b in mu:
        if not M.is_basis(b):
            raise ValueError(f"{members(b)} is not a basis")
    return mu


def distribution_point(M: Matroid, mu: dict) -> np.ndarray:
    h = np.zeros(M.k)
    for b, w in mu.items():
        h[members(b)] += w
    return h


def build_exchange_graph(M: Matroid, mu: dict) -> list[tuple[int, int, int]]:
    """Edges ``(a, b, I)``: ``I`` in the support, ``a`` not in ``I``, ``I + a - b`` independent."""
    if not mu:
        raise ValueError("empty support")
    edges = []
    for I in sorted(mask(b) for b, w in mu.items() if w > 0):
        for a in range(M.k):
            if I >> a & 1:
                continue
            for b in exchange_set(M, I, a):
                edges.append((a, b, I))
    return edges


@dataclass(frozen=True)
class AugmentingPath:
    bases: tuple[int, ...]  # I_1 .. I_m
    elements: tuple[int, ...]  # a_0 = s .. a_m = t
    strong: bool

    @property
    def length(self) -> int:
        return len(self.bases)

    def batched_exchanges(self) -> dict[int, int]:
        """Map each distinct basis to ``I + {a_(i-1)} - {a_i}`` over its positions."""
        out = {}
        for i, I in enumerate(self.bases, start=1):
            cur = out.get(I, I)
            out[I] = (cur | 1 << self.elements[i - 1]) & ~(1 << self.elements[i])
        return out


def is_weak_path(M: Matroid, path: AugmentingPath, mu: dict) -> bool:
    for i, I in enumerate(path.bases, start=1):
        if mu.get(I, 0) <= 0:
            return False
        a_prev, a_i = path.elements[i - 1], path.elements[i]
        if I >> a_prev & 1 or not I >> a_i & 1:
            return False
        if not M.is_independent((I | 1 << a_prev) & ~(1 << a_i)):
            return False
    return True


def is_strong_path(M: Matroid, path: AugmentingPath, mu: dict) -> bool:
    if not is_weak_path(M, path, mu):
        return False
    if len(set(path.elements)) != len(path.elements):
        return False
    return all(M.is_basis(new) for new in path.batched_exchanges().values())


def find_strong_augmenting_path(M: Matroid, mu: dict, s: int, t: int) -> AugmentingPath:
    """Shortest ``s -> t`` path in the exchange graph of ``mu``.

    A shortest weak augmenting path is automatically strong; this is checked
    before returning.
    """
    if s == t:
        raise ValueError("source and target must differ")
    support = sorted(mask(b) for b, w in mu.items() if w > 0)
    if not support:
        raise ValueError("empty support")
    adj: dict[int, list[tuple[int, int]]] = {}
    for a, b, I in build_exchange_graph(M, {I: 1.0 for I in support}):
        adj.setdefault(a, []).append((b, I))
    prev: dict[int, tuple[int, int]] = {s: (-1, -1)}
    queue = deque([s])
    while queue and t not in prev:
        a = queue.popleft()
        for b, I in adj.get(a, ()):
            if b not in prev:
                prev[b] = (a, I)
                queue.append(b)
    if t not in prev:
        raise NoPath(f"no exchange path from {s} to {t}")
    elements, bases = [t], []
    node = t
    while node != s:
        a, I = prev[node]
        bases.append(I)
        elements.append(a)
        node = a
    path = AugmentingPath(tuple(reversed(bases)), tuple(reversed(elements)), strong=True)
    if not is_strong_path(M, path, {I: 1.0 for I in support}):
        raise RuntimeError("shortest augmenting path failed the strong exchange check")
    return path


# path decomposition ------------------------------------------------------------------


def path_decompose(M: Matroid, h, h_target, tol: float = POLY_TOL, max_steps: int = 100_000) -> list[np.ndarray]:
    """Points ``h = h^(0), ..., h^(m) = h_target`` of P_M, consecutive ones
    differing in exactly two coordinates, with total L1 movement equal to
    ``||h - h_target||_1``.
    """
    h = _check_vector(M, h).copy()
    target = _check_vector(M, h_target)
    if not (is_in_base_polytope(M, h, 10 * tol) and is_in_base_polytope(M, target, 10 * tol)):
        raise ValueError("both endpoints must lie in the basis polytope")
    out = [h.copy()]
    for _ in range(max_steps):
        diff = h - target
        diff[np.abs(diff) <= tol] = 0.0
        plus = np.flatnonzero(diff > 0)
        minus = np.flatnonzero(diff < 0)
        if plus.size == 0 or minus.size == 0:
            break
        slacks = _slacks(M, h)
        tight = [a for a, s in slacks if s <= tol]
        choice = None
        for j in minus:
            sj = M.ground
            for a in tight:
                if a >> j & 1:
                    sj &= a
            hits = [i for i in plus if sj >> i & 1]
            if hits:
                choice = (int(j), int(hits[0]))
                break
        if choice is None:
            raise RuntimeError("no exchangeable pair: target outside the polytope?")
        j, i = choice
        step = min(diff[i], -diff[j])
        for a, s in slacks:
            if a >> j & 1 and not a >> i & 1:
                step = min(step, s)
        h[j] += step
        h[i] -= step
        for e in (i, j):
            if abs(h[e] - target[e]) <= tol:
                h[e] = target[e]
        out.append(h.copy())
    else:
        raise RuntimeError("path decomposition did not converge")
    if len(out) > 1:
        # absorb residual round-off into the last point
        out[-1] = target.copy()
    return out


def random_basis_distribution(M: Matroid, rng: np.random.Generator, support: int | None = None) -> dict[int, float]:
    """Dirichlet-weighted distribution over a random subset of bases."""
    bases = M.bases()
    size = min(len(bases), support if support is not None else M.k + 1)
    pick = rng.choice(len(bases), size=size, replace=False)
    weights = rng.dirichlet(np.ones(size))
    return {bases[int(p)]: float(w) for p, w in zip(pick, weights)}


def rank_table_hex(M: Matroid) -> str:
    return "".join(f"{int(r):02x}" for r in M.rank_all())


def rank_table_from_hex(k: int, text: str) -> np.ndarray:
    if len(text) != 2 << k:
        raise ValueError("rank table must have two hex digits per subset")
    return np.array([int(text[i : i + 2], 16) for i in range(0, len(text), 2)], dtype=np.int64)
