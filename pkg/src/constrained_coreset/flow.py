"""Min-cost flow by successive shortest paths with node potentials.

The network is given as parallel arc arrays. An optional starting flow ``x0``
(within capacities, nodes may be unbalanced) lets callers hand in a cheap
pseudoflow so that only the remaining imbalance is routed by Dijkstra.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numba
import numpy as np

from .lp import Infeasible

_OK, _NO_PATH, _NEG_CYCLE = 0, 1, 2


@dataclass
class FlowResult:
    flow: np.ndarray
    cost: float
    potential: np.ndarray


@numba.njit(cache=True)
def _residual(a, tail, head, cap, cost, x):
    e = a >> 1
    if a & 1 == 0:
        return head[e], cap[e] - x[e], cost[e]
    return tail[e], x[e], -cost[e]


@numba.njit(cache=True)
def _ssp(n_nodes, tail, head, cap, cost, x, excess, eps):
    m = tail.shape[0]
    # CSR adjacency of residual arcs: arc 2e leaves tail[e], arc 2e+1 leaves head[e]
    deg = np.zeros(n_nodes + 1, dtype=np.int64)
    for e in range(m):
        deg[tail[e] + 1] += 1
        deg[head[e] + 1] += 1
    for v in range(n_nodes):
        deg[v + 1] += deg[v]
    adj = np.empty(2 * m, dtype=np.int64)
    fill = deg[:-1].copy()
    for e in range(m):
        adj[fill[tail[e]]] = 2 * e
        fill[tail[e]] += 1
        adj[fill[head[e]]] = 2 * e + 1
        fill[head[e]] += 1

    # initial potentials: shortest distances from a virtual root (SPFA)
    pot = np.zeros(n_nodes)
    in_queue = np.ones(n_nodes, dtype=np.bool_)
    relax_count = np.zeros(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes + 1, dtype=np.int64)
    for v in range(n_nodes):
        queue[v] = v
    qh, qt, qsize = 0, n_nodes % (n_nodes + 1), n_nodes
    while qsize > 0:
        u = queue[qh]
        qh = (qh + 1) % (n_nodes + 1)
        qsize -= 1
        in_queue[u] = False
        for idx in range(deg[u], deg[u + 1]):
            a = adj[idx]
            v, r, c = _residual(a, tail, head, cap, cost, x)
            if r > eps and pot[u] + c < pot[v] - 1e-12 * (1.0 + abs(pot[v])):
                pot[v] = pot[u] + c
                relax_count[v] += 1
                if relax_count[v] > n_nodes:
                    return _NEG_CYCLE, pot
                if not in_queue[v]:
                    in_queue[v] = True
                    queue[qt] = v
                    qt = (qt + 1) % (n_nodes + 1)
                    qsize += 1

    dist = np.empty(n_nodes)
    done = np.zeros(n_nodes, dtype=np.bool_)
    pred = np.empty(n_nodes, dtype=np.int64)
    for s in range(n_nodes):
        while excess[s] > eps:
            dist[:] = np.inf
            done[:] = False
            dist[s] = 0.0
            pred[s] = -1
            heap = [(0.0, s)]
            target = -1
            while len(heap) > 0:
                d, u = heapq.heappop(heap)
                if done[u]:
                    continue
                done[u] = True
                if excess[u] < -eps:
                    target = u
                    break
                for idx in range(deg[u], deg[u + 1]):
                    a = adj[idx]
                    v, r, c = _residual(a, tail, head, cap, cost, x)
                    if r <= eps or done[v]:
                        continue
                    nd = d + c + pot[u] - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        pred[v] = a
                        heapq.heappush(heap, (nd, v))
            if target < 0:
                return _NO_PATH, pot
            bound = dist[target]
            for v in range(n_nodes):
                if done[v]:
                    pot[v] += dist[v]
                elif dist[v] < bound:
                    pot[v] += dist[v]
                else:
                    pot[v] += bound
            # bottleneck along the path
            delta = min(excess[s], -excess[target])
            v = target
            while v != s:
                a = pred[v]
                w, r, c = _residual(a, tail, head, cap, cost, x)
                if r < delta:
                    delta = r
                e = a >> 1
                v = tail[e] if a & 1 == 0 else head[e]
            v = target
            while v != s:
                a = pred[v]
                e = a >> 1
                if a & 1 == 0:
                    x[e] += delta
                    v = tail[e]
                else:
                    x[e] -= delta
                    v = head[e]
            excess[s] -= delta
            excess[target] += delta
    return _OK, pot


def min_cost_flow(n_nodes: int, tail, head, cap, cost, supply, x0=None) -> FlowResult:
    """Cheapest flow meeting ``supply`` (positive = source, negative = sink).

    Raises :class:`Infeasible` when the supplies cannot be routed.
    """
    tail = np.ascontiguousarray(tail, dtype=np.int64)
    head = np.ascontiguousarray(head, dtype=np.int64)
    cap = np.ascontiguousarray(cap, dtype=float)
    cost = np.ascontiguousarray(cost, dtype=float)
    supply = np.asarray(supply, dtype=float)
    if supply.shape != (n_nodes,):
        raise ValueError("one supply value per node")
    if not (tail.shape == head.shape == cap.shape == cost.shape):
        raise ValueError("arc arrays differ in length")
    if tail.size and (min(tail.min(), head.min()) < 0 or max(tail.max(), head.max()) >= n_nodes):
        raise ValueError("arc endpoint out of range")
    if np.any(cap < 0) or not np.all(np.isfinite(cost)):
        raise ValueError("capacities must be nonnegative and costs finite")
    scale = max(1.0, float(np.abs(supply).sum()))
    if abs(supply.sum()) > 1e-9 * scale:
        raise Infeasible("supplies do not balance")
    x = np.zeros(tail.size) if x0 is None else np.array(x0, dtype=float)
    if np.any(x < 0) or np.any(x > cap + 1e-12 * scale):
        raise ValueError("starting flow violates capacities")
    excess = supply.copy()
    np.subtract.at(excess, tail, x)
    np.add.at(excess, head, x)
    status, pot = _ssp(n_nodes, tail, head, cap, cost, x, excess, 1e-12 * scale)
    if status == _NEG_CYCLE:
        raise ValueError("starting flow admits a negative residual cycle")
    if status == _NO_PATH:
        raise Infeasible("no augmenting path to a deficit node")
    return FlowResult(x, float(np.dot(cost, x)), pot)


def reduced_cost_violation(res: FlowResult, tail, head, cap, cost, tol: float = 1e-9) -> float:
    """Most negative reduced cost over residual arcs (0 when optimal)."""
    tail = np.asarray(tail)
    head = np.asarray(head)
    rc = np.asarray(cost) + res.potential[tail] - res.potential[head]
    fwd = np.asarray(cap) - res.flow > tol
    back = res.flow > tol
    worst = 0.0
    if fwd.any():
        worst = min(worst, float(rc[fwd].min()))
    if back.any():
        worst = min(worst, float((-rc[back]).min()))
    return worst
