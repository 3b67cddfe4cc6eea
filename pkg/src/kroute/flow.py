"""Max-flow / min-cut primitives on :class:`MultiGraph`.

All routines share one Dinic implementation on an arc list.  An undirected edge of
capacity c becomes a pair of opposite arcs, each of capacity c, that act as each
other's residual.  The returned min cut is the source side reachable in the final
residual network, which is the unique inclusion-minimal minimum cut.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import INF, MultiGraph, ValidationError

_EPS = 1e-9


class FlowContractError(ValueError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class FlowResult:
    value: float
    cut_edges: frozenset
    source_side: frozenset


class Network:
    """Residual network with paired arcs (arc ``a`` and ``a ^ 1`` are mates)."""

    __slots__ = ("n", "head", "cap", "adj", "exact")

    def __init__(self, n: int, exact: bool = True):
        self.n = n
        self.head: list[int] = []
        self.cap: list = []
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.exact = exact

    def add_node(self) -> int:
        self.adj.append([])
        self.n += 1
        return self.n - 1

    def add_edge(self, u: int, v: int, cap, directed: bool = False) -> int:
        """Add an edge; returns the id of the forward arc."""
        a = len(self.head)
        self.head.append(v)
        self.cap.append(cap)
        self.head.append(u)
        self.cap.append(0 if directed else cap)
        self.adj[u].append(a)
        self.adj[v].append(a + 1)
        return a

    def _levels(self, s: int, t: int):
        eps = 0 if self.exact else _EPS
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        head, cap, adj = self.head, self.cap, self.adj
        while queue:
            u = queue.popleft()
            for a in adj[u]:
                v = head[a]
                if level[v] < 0 and cap[a] > eps:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int, limit=None):
        """Dinic; stops early once the flow reaches ``limit`` (if given)."""
        if s == t:
            raise FlowContractError("source equals sink")
        eps = 0 if self.exact else _EPS
        head, cap, adj = self.head, self.cap, self.adj
        total = 0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                # iterative DFS for one blocking-flow augmenting path
                path: list[int] = []
                u = s
                while u != t:
                    lst = adj[u]
                    i = it[u]
                    while i < len(lst):
                        a = lst[i]
                        v = head[a]
                        if cap[a] > eps and level[v] == level[u] + 1:
                            break
                        i += 1
                    it[u] = i
                    if i == len(lst):
                        if not path:
                            break
                        level[u] = -1
                        a = path.pop()
                        u = head[a ^ 1]
                        it[u] += 1
                        continue
                    path.append(lst[i])
                    u = head[lst[i]]
                if u != t:
                    break
                push = min(cap[a] for a in path)
                if limit is not None:
                    push = min(push, limit - total)
                for a in path:
                    cap[a] -= push
                    cap[a ^ 1] += push
                total += push
                if limit is not None and total >= limit:
                    return total

    def reachable(self, s: int) -> set[int]:
        eps = 0 if self.exact else _EPS
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for a in self.adj[u]:
                v = self.head[a]
                if v not in seen and self.cap[a] > eps:
                    seen.add(v)
                    stack.append(v)
        return seen


# -- weightings ------------------------------------------------------------------


def edge_weights(g: MultiGraph, weighting) -> tuple[list, bool]:
    """Per-edge capacities for a weighting name or explicit sequence; infinities resolved.

    Returns the weights and whether they are exact (integers or fractions).
    """
    if isinstance(weighting, str):
        if weighting == "unit":
            raw = [1] * g.m
        elif weighting == "capacity":
            raw = [e.capacity for e in g.edges]
        elif weighting == "cost":
            raw = [INF if e.cost == INF else e.cost for e in g.edges]
        else:
            raise FlowContractError(f"unknown weighting {weighting!r}")
    else:
        raw = list(weighting)
        if len(raw) != g.m:
            raise FlowContractError("weight vector length must equal edge count")
    finite_sum = sum(w for w in raw if w != INF)
    big = finite_sum + 1
    if all(w == INF or float(w).is_integer() for w in raw):
        return [int(big) if w == INF else int(w) for w in raw], True
    if all(w == INF or isinstance(w, (int, Fraction)) for w in raw):
        return [Fraction(big) if w == INF else Fraction(w) for w in raw], True
    return [float(big) if w == INF else float(w) for w in raw], False


def _alive(mask: Iterable[int] | None, size: int) -> list[bool]:
    flags = [True] * size
    if mask is not None:
        for i in mask:
            flags[i] = False
    return flags


def _check_pair(g: MultiGraph, s: int, t: int):
    if s == t:
        raise FlowContractError("s must differ from t")
    if not (0 <= s < g.node_count and 0 <= t < g.node_count):
        raise FlowContractError("node id out of range")


def max_flow_min_cut(g: MultiGraph, s: int, t: int, weighting="capacity", *,
                     removed_edges: Iterable[int] | None = None,
                     nodes: Iterable[int] | None = None) -> FlowResult:
    """Max flow and the source-minimal min cut between s and t.

    ``removed_edges`` are ignored; ``nodes`` (if given) restricts to the induced subgraph.
    """
    _check_pair(g, s, t)
    weights, exact = edge_weights(g, weighting)
    alive = _alive(removed_edges, g.m)
    inside = None
    if nodes is not None:
        inside = set(nodes)
        if s not in inside or t not in inside:
            raise FlowContractError("s and t must lie in the node subset")
    net = Network(g.node_count, exact)
    arc_of: dict[int, int] = {}
    for idx, e in enumerate(g.edges):
        if not alive[idx] or e.u == e.v:
            continue
        if inside is not None and (e.u not in inside or e.v not in inside):
            continue
        arc_of[idx] = net.add_edge(e.u, e.v, weights[idx])
    value = net.max_flow(s, t)
    side = net.reachable(s)
    cut = frozenset(idx for idx in arc_of
                    if (g.edges[idx].u in side) != (g.edges[idx].v in side))
    cut_cap = sum(weights[idx] for idx in cut)
    tol = 0 if exact else 1e-7 * max(1.0, abs(value))
    assert abs(cut_cap - value) <= tol, "max-flow / min-cut mismatch"
    return FlowResult(value, cut, frozenset(side))


def edge_connectivity(g: MultiGraph, s: int, t: int, *, removed_edges=None, nodes=None,
                      limit=None) -> int:
    """Edge-disjoint s-t paths; a capacity-b edge counts as b parallel edges."""
    _check_pair(g, s, t)
    alive = _alive(removed_edges, g.m)
    inside = set(nodes) if nodes is not None else None
    net = Network(g.node_count, True)
    for idx, e in enumerate(g.edges):
        if alive[idx] and e.u != e.v and (inside is None or (e.u in inside and e.v in inside)):
            net.add_edge(e.u, e.v, e.capacity)
    if inside is not None and (s not in inside or t not in inside):
        return 0
    return net.max_flow(s, t, limit)


def node_connectivity(g: MultiGraph, s: int, t: int, *, removed_edges=None, removed_nodes=None,
                      nodes=None, limit=None) -> int:
    """Internally node-disjoint s-t paths via node splitting.

    Each direct s-t edge contributes one path per parallel copy (its capacity).
    """
    _check_pair(g, s, t)
    n = g.node_count
    alive = _alive(removed_edges, g.m)
    dead = set(removed_nodes or ())
    if s in dead or t in dead:
        raise FlowContractError("cannot remove an endpoint of the queried pair")
    inside = set(nodes) if nodes is not None else None
    if inside is not None and (s not in inside or t not in inside):
        return 0

    def ok(v):
        return v not in dead and (inside is None or v in inside)

    big = sum(e.capacity for e in g.edges) + n + 1
    net = Network(2 * n, True)
    # node v: in-copy v, out-copy v + n; terminals are not split
    for v in range(n):
        if v not in (s, t) and ok(v):
            net.add_edge(v, v + n, 1, directed=True)

    def out(v):
        return v if v in (s, t) else v + n

    for idx, e in enumerate(g.edges):
        u, v = e.u, e.v
        if not alive[idx] or u == v or not ok(u) or not ok(v):
            continue
        if {u, v} == {s, t}:
            net.add_edge(s, t, e.capacity, directed=True)
            continue
        net.add_edge(out(u), v, big, directed=True)
        net.add_edge(out(v), u, big, directed=True)
    return net.max_flow(s, t, limit)


@dataclass(frozen=True)
class IsolatingCut:
    terminal: int
    edges: frozenset
    cost: float


def isolating_cuts(g: MultiGraph, terminals: Sequence[int], weighting="cost", *,
                   removed_edges=None) -> tuple[list[IsolatingCut], float]:
    """Minimum cut separating each terminal from the others (super-sink construction)."""
    terminals = list(terminals)
    if len(terminals) < 2:
        raise FlowContractError("need at least two terminals")
    weights, exact = edge_weights(g, weighting)
    alive = _alive(removed_edges, g.m)
    big = sum(w for idx, w in enumerate(weights) if alive[idx]) + 1
    cuts: list[IsolatingCut] = []
    for ti in terminals:
        net = Network(g.node_count + 1, exact)
        sink = g.node_count
        arcs = {}
        for idx, e in enumerate(g.edges):
            if alive[idx] and e.u != e.v:
                arcs[idx] = net.add_edge(e.u, e.v, weights[idx])
        for tj in terminals:
            if tj != ti:
                net.add_edge(tj, sink, big, directed=True)
        value = net.max_flow(ti, sink)
        side = net.reachable(ti)
        cut = frozenset(idx for idx in arcs if (g.edges[idx].u in side) != (g.edges[idx].v in side))
        cost = sum(weights[idx] for idx in cut)
        tol = 0 if exact else 1e-7 * max(1.0, abs(value))
        assert abs(cost - value) <= tol, "isolating cut mismatch"
        cuts.append(IsolatingCut(ti, cut, cost))
    return cuts, sum(c.cost for c in cuts)


class _DisjointSets:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def max_cost_spanning_forest(g: MultiGraph) -> frozenset:
    """Edges outside a maximum-cost spanning forest (Kruskal; infinite edges first).

    Raises :class:`InfeasibleError` when infinite-cost edges alone close a cycle.
    """
    order = sorted(range(g.m), key=lambda i: (g.edges[i].cost != INF, -float(g.edges[i].cost)
                                              if g.edges[i].cost != INF else 0.0, i))
    ds = _DisjointSets(g.node_count)
    removed = []
    for idx in order:
        e = g.edges[idx]
        if ds.union(e.u, e.v):
            continue
        if e.cost == INF:
            raise InfeasibleError(f"infinite-cost edge {idx} lies on a cycle of infinite-cost edges")
        removed.append(idx)
    return frozenset(removed)


def flow_tree(g: MultiGraph, *, removed_edges=None) -> list[tuple[int, int, int]]:
    """Gusfield's equivalent-flow tree for capacity-weighted edge connectivity.

    Returns tree edges (v, parent[v], connectivity) for v = 1..n-1; the connectivity
    of any pair equals the minimum weight on their tree path.
    """
    n = g.node_count
    parent = [0] * n
    weight = [0] * n
    for v in range(1, n):
        res = max_flow_min_cut(g, v, parent[v], "capacity", removed_edges=removed_edges)
        weight[v] = res.value
        for w in range(v + 1, n):
            if w in res.source_side and parent[w] == parent[v]:
                parent[w] = v
    return [(v, parent[v], int(weight[v])) for v in range(1, n)]
