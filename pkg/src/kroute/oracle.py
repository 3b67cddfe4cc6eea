"""Exact ground truth: feasibility checks, brute-force cuts, remainder bounds, source problems.

Three exact search strategies back :func:`brute_force_cut`:

* ``enumerate`` -- subsets of deletable elements in (cost, sorted ids) order; the first
  feasible one is the answer, which also makes the tie-break lexicographic.
* ``branch`` -- depth-first branch and bound.  A violated pair with more than
  ``threshold`` units of flow forces the deletion of some deletable element on the flow;
  branch j deletes the j-th such element and keeps the earlier ones.
* ``symmetry`` -- for gadgets whose deletable edges fall into interchangeable groups,
  search over per-group deletion counts.  Feasibility is monotone in each count, so for
  every prefix of counts a staircase walk over the last two groups finds the cheapest
  completion.
"""

from __future__ import annotations

import heapq
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import maximum_flow

from . import flow
from .algorithms import CutSolution, residual_connectivities, violation_factor
from .graph import INF, CutInstance
from .reductions import MinRepInstance, SsveInstance, VcInstance

DEFAULT_MAX_ELEMENTS = 22


class OracleSizeError(ValueError):
    pass


class OracleContractError(ValueError):
    pass


@dataclass
class FeasibilityReport:
    connectivities: list
    threshold: int
    violation: float
    forbidden: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.forbidden and all(c <= self.threshold for c in self.connectivities)

    def feasible_at(self, threshold: int) -> bool:
        return not self.forbidden and all(c <= threshold for c in self.connectivities)


def _removed_of(sol) -> frozenset:
    return frozenset(sol.removed if isinstance(sol, CutSolution) else sol)


def check_feasible(inst: CutInstance, sol, threshold: int) -> FeasibilityReport:
    """Residual connectivity of every pair after deleting ``sol``; forbidden deletions are recorded."""
    if threshold < 0:
        raise OracleContractError("threshold must be nonnegative")
    removed = _removed_of(sol)
    g = inst.graph
    size = g.node_count if inst.deletes_nodes else g.m
    bad = [x for x in removed if not 0 <= x < size]
    if bad:
        raise OracleContractError(f"solution references unknown elements {sorted(bad)}")
    forbidden = []
    costs = g.node_cost_floats() if inst.deletes_nodes else g.cost_floats()
    for x in sorted(removed):
        if costs[x] == INF:
            forbidden.append({"element": x, "reason": "infinite cost"})
    if inst.deletes_nodes:
        for x in sorted(removed & inst.endpoint_set()):
            forbidden.append({"element": x, "reason": "terminal"})
    conns = residual_connectivities(inst, removed)
    return FeasibilityReport(conns, threshold, violation_factor(conns, inst.k), forbidden)


def deletable_elements(inst: CutInstance) -> list[int]:
    g = inst.graph
    if inst.deletes_nodes:
        ends = inst.endpoint_set()
        costs = g.node_cost_floats()
        return [v for v in range(g.node_count) if v not in ends and costs[v] != INF]
    return [i for i, e in enumerate(g.edges) if e.cost != INF and e.u != e.v]


def _exact_costs(inst: CutInstance) -> list:
    g = inst.graph
    if inst.deletes_nodes:
        return [Fraction(c) if c != INF else INF for c in g.node_costs]
    return [e.cost if e.cost == INF else Fraction(e.cost) for e in g.edges]


def _all_nodes_allpairs(inst: CutInstance) -> bool:
    return (inst.variant == "allpairs" and not inst.node_connectivity
            and len(set(inst.terminals)) == inst.graph.node_count)


def _feasible(inst: CutInstance, removed, threshold: int) -> bool:
    if _all_nodes_allpairs(inst):
        return all(w <= threshold for _, _, w in flow.flow_tree(inst.graph, removed_edges=frozenset(removed)))
    return all(c <= threshold for c in residual_connectivities(inst, removed, limit=threshold + 1))


def _solution(inst: CutInstance, removed, threshold: int, method: str, stats: dict) -> CutSolution:
    removed = frozenset(removed)
    conns = residual_connectivities(inst, removed)
    costs = inst.graph.node_cost_floats() if inst.deletes_nodes else inst.graph.cost_floats()
    return CutSolution("brute", inst.variant, removed, float(sum(costs[x] for x in removed)), threshold,
                       conns, violation_factor(conns, inst.k),
                       "nodes" if inst.deletes_nodes else "edges", params=dict(stats, method=method))


# -- cost-ordered enumeration ------------------------------------------------------------


def _enumerate(inst, threshold, order, costs, fixed=()):
    """First feasible subset in (cost, sorted ids) order; ``fixed`` is always included."""
    base = sum((costs[x] for x in fixed), Fraction(0))
    checks = 0
    heap = [(base, tuple(sorted(fixed)), -1)]
    while heap:
        cost, ids, last = heapq.heappop(heap)
        checks += 1
        if _feasible(inst, ids, threshold):
            return cost, ids, checks
        nxt = last + 1
        if nxt < len(order):
            e = order[nxt]
            heapq.heappush(heap, (cost + costs[e], tuple(sorted(ids + (e,))), nxt))
            if last >= 0:
                prev = order[last]
                swapped = tuple(sorted(tuple(x for x in ids if x != prev) + (e,)))
                heapq.heappush(heap, (cost - costs[prev] + costs[e], swapped, nxt))
    return None, None, checks


def _enumerate_job(args):
    inst, threshold, order, costs, fixed = args
    return _enumerate(inst, threshold, order, costs, fixed)


# -- branch and bound ------------------------------------------------------------------------


def _flow_elements(inst: CutInstance, removed, s, t, limit) -> tuple[int, list[int]]:
    """Flow value (capped at ``limit``) and the elements its paths use."""
    g = inst.graph
    n = g.node_count
    removed = set(removed)
    if inst.node_connectivity:
        net = flow.Network(2 * n, True)
        node_arc = {}
        for v in range(n):
            if v in (s, t) or (inst.deletes_nodes and v in removed):
                continue
            node_arc[v] = net.add_edge(v, v + n, 1, directed=True)

        def out(v):
            return v if v in (s, t) else v + n

        big = g.m + n + 1
        edge_arcs = {}
        for idx, e in enumerate(g.edges):
            if e.u == e.v or (not inst.deletes_nodes and idx in removed):
                continue
            if inst.deletes_nodes and (e.u in removed or e.v in removed):
                continue
            if {e.u, e.v} == {s, t}:
                edge_arcs[idx] = [net.add_edge(s, t, e.capacity, directed=True)]
                continue
            edge_arcs[idx] = [net.add_edge(out(e.u), e.v, big, directed=True),
                              net.add_edge(out(e.v), e.u, big, directed=True)]
        value = net.max_flow(s, t, limit)
        if inst.deletes_nodes:
            used = [v for v, a in node_arc.items() if net.cap[a] == 0]
        else:
            used = [idx for idx, arcs in edge_arcs.items() if any(net.cap[a ^ 1] > 0 for a in arcs)]
        return value, used
    net = flow.Network(n, True)
    arcs = {}
    for idx, e in enumerate(g.edges):
        if idx in removed or e.u == e.v:
            continue
        arcs[idx] = net.add_edge(e.u, e.v, e.capacity)
    value = net.max_flow(s, t, limit)
    used = [idx for idx, a in arcs.items() if net.cap[a] != g.edges[idx].capacity]
    return value, used


def _violations(inst: CutInstance, removed, threshold) -> list[tuple[int, int]]:
    """Violated pairs; all-pairs instances use an equivalent-flow tree."""
    if _all_nodes_allpairs(inst):
        tree = flow.flow_tree(inst.graph, removed_edges=frozenset(removed))
        return [(v, p) for v, p, w in tree if w > threshold]
    conns = residual_connectivities(inst, removed, limit=threshold + 1)
    return [pair for pair, c in zip(inst.pairs(), conns) if c > threshold]


def _branch(inst, threshold, costs, deletable, upper):
    best_cost, best_set = upper
    deletable = set(deletable)
    stats = {"nodes": 0}

    def blockers(removed, kept):
        viol = _violations(inst, removed, threshold)
        if not viol:
            return None, 0
        sets = []
        for s, t in viol:
            _, used = _flow_elements(inst, removed, s, t, threshold + 1)
            cand = sorted(x for x in used if x in deletable and x not in kept and x not in removed)
            sets.append(cand)
        # disjoint packing gives a lower bound on the remaining cost
        taken: set = set()
        lb = 0
        for cand in sorted(sets, key=len):
            if not cand:
                return [], math.inf
            if taken.isdisjoint(cand):
                taken.update(cand)
                lb += min(costs[x] for x in cand)
        first = min(sets, key=lambda c: (len(c), c))
        return first, lb

    def dfs(removed: frozenset, kept: frozenset, cost):
        nonlocal best_cost, best_set
        stats["nodes"] += 1
        cand, lb = blockers(removed, kept)
        if cand is None:
            if best_cost is None or cost < best_cost or (cost == best_cost and sorted(removed) < sorted(best_set)):
                best_cost, best_set = cost, removed
            return
        if best_cost is not None and cost + lb >= best_cost:
            return
        cand = sorted(cand, key=lambda x: (costs[x], x))
        for j, x in enumerate(cand):
            dfs(removed | {x}, kept | frozenset(cand[:j]), cost + costs[x])

    dfs(frozenset(), frozenset(), Fraction(0))
    return best_cost, best_set, stats


# -- symmetry mode -----------------------------------------------------------------------------


class _ScipyFlow:
    """Single-pair capacitated max flow on a fixed graph with per-edge switches."""

    def __init__(self, inst: CutInstance):
        g = inst.graph
        self.n = g.node_count
        rows, cols, caps = [], [], []
        for e in g.edges:
            if e.u == e.v:
                rows.append(0)
                cols.append(0)
                caps.append(0)
            rows += [e.u, e.v]
            cols += [e.v, e.u]
            caps += [e.capacity, e.capacity]
        self.rows = np.array([r for e in g.edges if e.u != e.v for r in (e.u, e.v)], dtype=np.int32)
        self.cols = np.array([c for e in g.edges if e.u != e.v for c in (e.v, e.u)], dtype=np.int32)
        self.caps = np.array([e.capacity for e in g.edges if e.u != e.v for _ in (0, 1)], dtype=np.int32)
        self.index = {}
        pos = 0
        for idx, e in enumerate(g.edges):
            if e.u != e.v:
                self.index[idx] = pos
                pos += 2

    def value(self, s, t, removed) -> int:
        caps = self.caps.copy()
        for idx in removed:
            p = self.index.get(idx)
            if p is not None:
                caps[p] = 0
                caps[p + 1] = 0
        mat = csr_array((caps, (self.rows, self.cols)), shape=(self.n, self.n))
        mat.sum_duplicates()
        return int(maximum_flow(mat, s, t).flow_value)


def _is_automorphism(g, perm: dict) -> bool:
    def key(u, v, e):
        a, b = perm.get(u, u), perm.get(v, v)
        return (min(a, b), max(a, b), e.cost, e.capacity)

    before = sorted((min(e.u, e.v), max(e.u, e.v), e.cost, e.capacity) for e in g.edges)
    after = sorted(key(e.u, e.v, e) for e in g.edges)
    return before == after


def verify_groups(inst: CutInstance, groups: Sequence[Sequence[int]]) -> bool:
    """Check that swapping the free endpoints of consecutive group members is an automorphism."""
    g = inst.graph
    for grp in groups:
        for e1, e2 in zip(grp, grp[1:]):
            a, b = g.edges[e1], g.edges[e2]
            shared = {a.u, a.v} & {b.u, b.v}
            if len(shared) != 1 or a.cost != b.cost:
                return False
            w = shared.pop()
            x = a.v if a.u == w else a.u
            y = b.v if b.u == w else b.u
            if not _is_automorphism(g, {x: y, y: x}):
                return False
    return True


def _symmetry(inst, threshold, costs, groups):
    if inst.variant not in ("single", "edge") or inst.r != 1 or inst.node_connectivity:
        raise OracleContractError("symmetry mode handles single-pair edge-connectivity instances")
    if not verify_groups(inst, groups):
        raise OracleContractError("groups are not interchangeable")
    s, t = inst.commodities[0]
    solver = _ScipyFlow(inst)
    groups = [list(gp) for gp in groups]
    weights = [costs[gp[0]] for gp in groups]
    stats = {"flows": 0}

    def feasible(counts):
        removed = [e for gp, c in zip(groups, counts) for e in gp[:c]]
        stats["flows"] += 1
        return solver.value(s, t, removed) <= threshold

    best = None
    G = len(groups)
    if G == 0:
        return (Fraction(0), ()) if feasible(()) else None, stats
    head = groups[:-2] if G >= 2 else []
    for prefix in itertools.product(*(range(len(gp) + 1) for gp in head)):
        pcost = sum((weights[j] * c for j, c in enumerate(prefix)), Fraction(0))
        if G == 1:
            for c in range(len(groups[0]) + 1):
                if feasible((c,)):
                    cand = (weights[0] * c, (c,))
                    best = cand if best is None or cand[0] < best[0] else best
                    break
            continue
        n1, n2 = len(groups[-2]), len(groups[-1])
        w1, w2 = weights[-2], weights[-1]
        c2 = n2
        for c1 in range(n1 + 1):
            if not feasible(prefix + (c1, c2)):
                continue
            while c2 > 0 and feasible(prefix + (c1, c2 - 1)):
                c2 -= 1
            cost = pcost + w1 * c1 + w2 * c2
            if best is None or cost < best[0]:
                best = (cost, prefix + (c1, c2))
            if c2 == 0:
                break
    if best is None:
        return None, stats
    cost, counts = best
    removed = tuple(sorted(e for gp, c in zip(groups, counts) for e in gp[:c]))
    return (cost, removed), stats


# -- public entry ------------------------------------------------------------------------------


def brute_force_cut(inst: CutInstance, threshold: int, *, method: str = "enumerate",
                    max_elements: int = DEFAULT_MAX_ELEMENTS, upper=None, groups=None,
                    jobs: int | None = None) -> CutSolution:
    """Minimum-cost deletion set leaving every pair at connectivity <= ``threshold``.

    ``method='enumerate'`` refuses more than ``max_elements`` deletable elements.
    ``branch`` accepts an optional ``upper`` feasible set to seed the bound.
    ``symmetry`` needs ``groups`` of interchangeable deletable edges.
    """
    if threshold < 0:
        raise OracleContractError("threshold must be nonnegative")
    if any(e.u == e.v for e in inst.graph.edges):
        raise OracleContractError("self-loops are not supported")
    costs = _exact_costs(inst)
    deletable = deletable_elements(inst)
    if method == "enumerate":
        if len(deletable) > max_elements:
            raise OracleSizeError(f"{len(deletable)} deletable elements exceed the limit {max_elements}")
        order = sorted(deletable, key=lambda x: (costs[x], x))
        jobs = jobs or int(os.environ.get("KROUTE_JOBS", "1") or 1)
        if jobs > 1 and len(order) >= 4:
            bits = min(len(order) - 1, max(1, math.ceil(math.log2(jobs))))
            head, rest = order[:bits], order[bits:]
            tasks = []
            for mask in range(1 << bits):
                fixed = tuple(head[j] for j in range(bits) if mask >> j & 1)
                tasks.append((inst, threshold, rest, costs, fixed))
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_enumerate_job, tasks))
            found = [(c, ids) for c, ids, _ in results if c is not None]
            checks = sum(r[2] for r in results)
            if not found:
                raise flow.InfeasibleError("no feasible finite-cost deletion set")
            cost, ids = min(found)
        else:
            cost, ids, checks = _enumerate(inst, threshold, order, costs)
            if cost is None:
                raise flow.InfeasibleError("no feasible finite-cost deletion set")
        return _solution(inst, ids, threshold, "enumerate", {"checks": checks})
    if method == "branch":
        up = None, None
        if upper is not None:
            upper = frozenset(upper)
            if not _feasible(inst, upper, threshold):
                raise OracleContractError("upper-bound witness is infeasible")
            up = sum((costs[x] for x in upper), Fraction(0)), upper
        cost, best, stats = _branch(inst, threshold, costs, deletable, up)
        if cost is None:
            raise flow.InfeasibleError("no feasible finite-cost deletion set")
        return _solution(inst, best, threshold, "branch", stats)
    if method == "symmetry":
        if groups is None:
            raise OracleContractError("symmetry mode needs element groups")
        grouped = {e for gp in groups for e in gp}
        singles = [[x] for x in deletable if x not in grouped]
        found, stats = _symmetry(inst, threshold, costs, list(groups) + singles)
        if found is None:
            raise flow.InfeasibleError("no feasible finite-cost deletion set")
        return _solution(inst, found[1], threshold, "symmetry", stats)
    raise OracleContractError(f"unknown method {method!r}")


def remainder_multiway_bound(inst: CutInstance, sol) -> frozenset:
    """Extra edges that turn a feasible k-route multiway cut into a multiway cut."""
    if inst.variant != "multiway":
        raise OracleContractError("remainder bound applies to multiway instances")
    removed = set(_removed_of(sol))
    k1 = inst.k - 1
    g = inst.graph
    if not _feasible(inst, removed, k1):
        raise OracleContractError("solution is not feasible at k - 1")
    extra: set = set()
    terms = list(inst.terminals)
    while True:
        gone = removed | extra
        comp = _components(g, gone)
        pair = next(((a, b) for a, b in itertools.combinations(terms, 2) if comp[a] == comp[b]), None)
        if pair is None:
            break
        res = flow.max_flow_min_cut(g, pair[0], pair[1], "capacity", removed_edges=gone)
        if res.value > k1:
            raise AssertionError("remainder pair exceeds k - 1")
        extra |= res.cut_edges
    r = len(terms)
    if len(extra) > k1 * max(r - 1, 0):
        raise AssertionError(f"|E-bar| = {len(extra)} exceeds (k-1)(r-1) = {k1 * (r - 1)}")
    return frozenset(extra)


def _components(g, removed) -> list[int]:
    parent = list(range(g.node_count))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for idx, e in enumerate(g.edges):
        if idx not in removed:
            a, b = find(e.u), find(e.v)
            if a != b:
                parent[max(a, b)] = min(a, b)
    return [find(v) for v in range(g.node_count)]


# -- source problems -------------------------------------------------------------------------


def brute_source_problems(problem) -> tuple[int, object]:
    """Exact optimum and witness for an SSVE, MinRep or vertex-cover source."""
    if isinstance(problem, SsveInstance):
        if problem.n_u > 12:
            raise OracleSizeError("SSVE brute force handles |U| <= 12")
        best = None
        for size in range(problem.min_size, problem.n_u + 1):
            for S in itertools.combinations(range(problem.n_u), size):
                val = len(problem.neighbours(S))
                if best is None or val < best[0]:
                    best = (val, frozenset(S))
        return best
    if isinstance(problem, MinRepInstance):
        if problem.n_l1 > 3 or problem.n_l2 > 3 or problem.n_u > 4 or problem.n_w > 4:
            raise OracleSizeError("MinRep brute force handles label sets <= 3 and <= 4 vertices per side")
        return _minrep_brute(problem)
    if isinstance(problem, VcInstance):
        if problem.n > 16:
            raise OracleSizeError("vertex-cover brute force handles <= 16 vertices")
        for size in range(problem.n + 1):
            for C in itertools.combinations(range(problem.n), size):
                if problem.is_cover(C):
                    return size, frozenset(C)
    raise OracleContractError("unknown source problem")


def _minrep_brute(p: MinRepInstance):
    subsets_u = sorted((frozenset(c) for r in range(p.n_l1 + 1) for c in itertools.combinations(range(p.n_l1), r)),
                       key=lambda s: (len(s), sorted(s)))
    subsets_w = sorted((frozenset(c) for r in range(p.n_l2 + 1) for c in itertools.combinations(range(p.n_l2), r)),
                       key=lambda s: (len(s), sorted(s)))
    verts = [("u", u) for u in range(p.n_u)] + [("w", w) for w in range(p.n_w)]
    best = [None]
    labels_u = [frozenset()] * p.n_u
    labels_w = [frozenset()] * p.n_w

    def rec(i, cost):
        if best[0] is not None and cost >= best[0][0]:
            return
        if i == len(verts):
            if not p.covers(labels_u, labels_w):
                best[0] = (cost, (tuple(labels_u), tuple(labels_w)))
            return
        side, x = verts[i]
        for sub in (subsets_u if side == "u" else subsets_w):
            if side == "u":
                labels_u[x] = sub
            else:
                labels_w[x] = sub
            rec(i + 1, cost + len(sub))
        if side == "u":
            labels_u[x] = frozenset()
        else:
            labels_w[x] = frozenset()

    rec(0, 0)
    return best[0]
