"""Approximation algorithms for k-route cuts, and exact all-pairs cuts for k <= 2.

The four LP-rounding routines share one carving engine (:class:`_Carver`): repeatedly
pick the lowest-index commodity that is still too well connected inside the current
region S, grow a ball around its source, carve the lighter side A out of S, cut the
boundary, and recurse on every carved set with the commodities it contains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import flow
from .graph import INF, CutInstance, TERMINAL_VARIANTS
from .lp import FractionalSolution, solve_relaxation
from .regiongrow import NodeMetric, SubdividedGraph, find_radius

REL_TOL = 1e-9


class AlgorithmContractError(ValueError):
    pass


class CertificateError(AssertionError):
    pass


@dataclass
class RecursionNode:
    region: frozenset
    commodities: tuple
    depth: int = 0
    children: list = field(default_factory=list)
    removed: frozenset = frozenset()  # elements cut anywhere in this subtree
    cost: float = 0.0

    def subtree_depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.subtree_depth() for c in self.children)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class CutSolution:
    algorithm: str
    variant: str
    removed: frozenset
    cost: float
    threshold: int
    per_commodity_connectivity: list
    violation: float
    element: str = "edges"
    trace: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    lp_value: float | None = None
    params: dict = field(default_factory=dict)
    recursion: RecursionNode | None = None

    @property
    def feasible(self) -> bool:
        return all(c <= self.threshold for c in self.per_commodity_connectivity)


# -- shared helpers ----------------------------------------------------------------


def element_kind(inst: CutInstance) -> str:
    return "nodes" if inst.deletes_nodes else "edges"


def removal_cost(inst: CutInstance, removed) -> float:
    if inst.deletes_nodes:
        costs = inst.graph.node_cost_floats()
    else:
        costs = inst.graph.cost_floats()
    return float(sum(costs[x] for x in removed))


def residual_connectivities(inst: CutInstance, removed, limit=None) -> list[int]:
    """Connectivity of every commodity pair after deleting ``removed``.

    Edge variants count edge-disjoint paths (capacities as multiplicities); ``ednode``
    and ``ndnode`` count internally node-disjoint paths.  A pair with a deleted
    endpoint counts as disconnected.
    """
    g = inst.graph
    out = []
    removed = frozenset(removed)
    for s, t in inst.pairs():
        if inst.deletes_nodes:
            if s in removed or t in removed:
                out.append(0)
                continue
            out.append(flow.node_connectivity(g, s, t, removed_nodes=removed, limit=limit))
        elif inst.variant == "ednode":
            out.append(flow.node_connectivity(g, s, t, removed_edges=removed, limit=limit))
        else:
            out.append(flow.edge_connectivity(g, s, t, removed_edges=removed, limit=limit))
    return out


def violation_factor(conns: Sequence[int], k: int) -> float:
    if k == 1:
        return 0.0 if all(c == 0 for c in conns) else math.inf
    return max((c / (k - 1) for c in conns), default=0.0)


def finish(inst: CutInstance, algorithm: str, removed, threshold: int, **extra) -> CutSolution:
    removed = frozenset(removed)
    kind = element_kind(inst)
    costs = inst.graph.node_cost_floats() if kind == "nodes" else inst.graph.cost_floats()
    for x in removed:
        if costs[x] == INF:
            raise AssertionError(f"{algorithm} removed infinite-cost element {x}")
    conns = residual_connectivities(inst, removed)
    sol = CutSolution(algorithm, inst.variant, removed, removal_cost(inst, removed), threshold,
                      conns, violation_factor(conns, inst.k), kind, **extra)
    if not sol.feasible:
        raise AssertionError(f"{algorithm} output violates its threshold {threshold}: {conns}")
    return sol


def connectivity_threshold(gamma: float, k: int) -> int:
    """Smallest integer connectivity that counts as at least gamma*(k-1) (never below 1)."""
    return max(1, math.ceil(gamma * (k - 1) - 1e-12))


def _require_unit_capacity(inst: CutInstance, name: str):
    if any(e.capacity != 1 for e in inst.graph.edges):
        raise AlgorithmContractError(f"{name} requires unit capacities")


# -- LP-rounding carving engine -------------------------------------------------------


class _Carver:
    """Recursive region carving shared by two_mc, kmc_unit, ed_two_nmc and nd_knmc_unit."""

    def __init__(self, inst: CutInstance, frac: FractionalSolution, mode: str, gamma: float | None):
        self.inst = inst
        self.frac = frac
        self.mode = mode
        self.gamma = gamma
        self.pairs = list(inst.pairs())
        self.r = inst.r
        self.beta = frac.beta
        self.opt = frac.objective
        if mode in ("2mc", "kmc"):
            self.src = SubdividedGraph(inst, frac)
        else:
            self.src = NodeMetric(inst, frac)
        if mode in ("2mc", "ed2"):
            self.threshold = 2
            self.alpha = 0.5
            self.variant = "basic"
            self.constant = 4.0
        else:
            self.threshold = connectivity_threshold(gamma, inst.k)
            self.alpha = gamma ** -0.5
            self.variant = "total"
            self.constant = 2.0 * gamma / (math.sqrt(gamma) - 1.0) ** 2
        g = inst.graph
        self.n = g.node_count
        self.costs = g.node_cost_floats() if mode == "nd" else g.cost_floats()
        self.trace: list = []
        self.carves: list = []
        self.certificates: list = []

    # connectivity of pair i inside the region, per the mode's notion
    def _connected(self, i: int, S) -> bool:
        s, t = self.pairs[i]
        g = self.inst.graph
        thr = self.threshold
        if self.mode in ("2mc", "kmc"):
            r = self.r
            dead = []
            for e_id, e in enumerate(g.edges):
                lo, hi = min(e.u, e.v), max(e.u, e.v)
                if lo not in S or hi not in S:
                    dead.append(e_id)
                    continue
                base = self.n + e_id * r
                if any(base + j not in S for j in range(r)):
                    dead.append(e_id)
            nodes = [v for v in range(self.n) if v in S]
            return flow.edge_connectivity(g, s, t, removed_edges=dead, nodes=nodes, limit=thr) >= thr
        nodes = [v for v in range(self.n) if v in S]
        return flow.node_connectivity(g, s, t, nodes=nodes, limit=thr) >= thr

    def _pairs_inside(self, T, region) -> list[int]:
        return [j for j in T if self.pairs[j][0] in region and self.pairs[j][1] in region]

    def _element_cost(self, x) -> float:
        if self.mode in ("2mc", "kmc"):
            return self.src.seg_cost(x)
        return self.costs[x]

    def run(self) -> RecursionNode:
        root = RecursionNode(self.src.all_nodes(), tuple(range(len(self.pairs))), 0)
        self._solve(root)
        self._certify(root)
        return root

    def _solve(self, node: RecursionNode):
        S = set(node.region)
        T = list(node.commodities)
        N = len(T)
        removed: set = set()
        carved: list[frozenset] = []
        active = [i for i in T if self._connected(i, S)]
        while active:
            i = active[0]
            s, t = self.pairs[i]
            Sf = frozenset(S)
            rho, proof, geom = find_radius(self.src, i, s, Sf, self.alpha, variant=self.variant,
                                           gamma=self.gamma, guard=t)
            if not proof.ok:
                raise CertificateError(f"radius proof failed for commodity {i}: {proof.checks}")
            ball = geom.ball
            if self.mode in ("2mc", "kmc"):
                side_test = ball
            else:
                side_test = ball | frozenset(geom.y_boundary)
            take_ball = len(self._pairs_inside(T, side_test)) <= N / 2
            A = ball if take_ball else geom.anti_ball
            if self.mode in ("2mc", "kmc"):
                boundary = sorted(geom.x_boundary + geom.y_boundary)
                if self.mode == "2mc" and boundary:
                    keep = min(boundary, key=lambda sid: (-self.src.seg_cost(sid), self.src.parent(sid), sid))
                    cut = [sid for sid in boundary if sid != keep]
                else:
                    cut = boundary
                child = A
            elif self.mode == "ed2":
                cut = list(geom.x_boundary)
                child = A | frozenset(geom.y_boundary)
            else:
                cut = sorted(set(geom.x_boundary) | set(geom.y_boundary))
                child = A
            removed.update(cut)
            carved.append(child)
            S -= A
            record = {
                "depth": node.depth, "commodity": i, "center": s, "rho": rho,
                "side": "ball" if take_ball else "anti_ball", "region_size": len(Sf),
                "carved_size": len(child), "cut": sorted(cut), "x_cost": proof.x_cost,
                "y_count": proof.y_count, "q": proof.q, "checks": dict(proof.checks),
            }
            self.trace.append(record)
            self.carves.append(proof)
            active = [j for j in T if self._connected(j, S)]
        for A in carved:
            child = RecursionNode(A, tuple(self._pairs_inside(T, A)), node.depth + 1)
            node.children.append(child)
            self._solve(child)
            removed |= child.removed
        node.removed = frozenset(removed)
        node.cost = float(sum(self._element_cost(x) for x in removed))

    def _certify(self, root: RecursionNode):
        ll = math.log(math.log(math.e * (self.r + 1)))
        for node in root.walk():
            d = node.subtree_depth()
            if self.opt <= 0:
                ok = not node.removed
                self.certificates.append({"name": "cost_bound", "depth": node.depth, "subtree_depth": d,
                                          "lhs": node.cost, "rhs": 0.0, "pass": ok})
                if not ok:
                    raise CertificateError("zero LP optimum but a nonempty cut")
                continue
            vx = self.src.region_volume(node.region)
            rhs = (self.constant * (self.beta * len(node.commodities) + vx)
                   * (d + math.log(self.r * vx / self.opt)) * ll)
            ok = node.cost <= rhs * (1 + REL_TOL)
            self.certificates.append({"name": "cost_bound", "depth": node.depth, "subtree_depth": d,
                                      "lhs": node.cost, "rhs": rhs, "pass": ok})
            if not ok:
                raise CertificateError(f"cost bound fails at depth {node.depth}: {node.cost} > {rhs}")
            for child in node.children:
                if len(child.commodities) > max(len(node.commodities) / 2, 0):
                    raise CertificateError("child holds more than half of its parent's commodities")


def _lp_for(inst: CutInstance, frac, which: str) -> FractionalSolution:
    if frac is None:
        return solve_relaxation(inst, which)
    if frac.which != which:
        raise AlgorithmContractError(f"expected a solution of relaxation {which}")
    return frac


def _carve(inst, frac, mode, gamma, name) -> CutSolution:
    carver = _Carver(inst, frac, mode, gamma)
    root = carver.run()
    if mode in ("2mc", "kmc"):
        removed = carver.src.to_parents(root.removed)
    else:
        removed = root.removed
    flags = []
    if mode == "nd":
        endpoints = inst.endpoint_set()
        hit = sorted(endpoints & set(removed))
        if hit:
            flags.append({"name": "terminal_removed", "nodes": hit})
    threshold = carver.threshold - 1
    certs = list(carver.certificates)
    certs.append({"name": "radius_bounds", "carves": len(carver.carves),
                  "pass": all(p.ok for p in carver.carves)})
    certs.append({"name": "y_count", "carves": len(carver.carves),
                  "pass": all(p.y_count < p.q for p in carver.carves)})
    params = {"gamma": gamma} if gamma is not None else {}
    params["alpha"] = carver.alpha
    params["depth"] = root.subtree_depth()
    if flags:
        # a removed terminal is outside the problem's rules; report it instead of asserting
        removed_set = frozenset(removed)
        conns = residual_connectivities(inst, removed_set)
        return CutSolution(name, inst.variant, removed_set, removal_cost(inst, removed_set), threshold,
                           conns, violation_factor(conns, inst.k), element_kind(inst), carver.trace,
                           certs, flags, frac.objective, params, root)
    return finish(inst, name, removed, threshold, trace=carver.trace, certificates=certs, flags=flags,
                  lp_value=frac.objective, params=params, recursion=root)


def two_mc(inst: CutInstance, frac: FractionalSolution | None = None) -> CutSolution:
    """2-route multicut: every pair ends at most 1-edge-connected."""
    if inst.k != 2:
        raise AlgorithmContractError("two_mc needs k = 2")
    frac = _lp_for(inst, frac, "P")
    return _carve(inst, frac, "2mc", None, "2mc")


def kmc_unit(inst: CutInstance, gamma: float, frac: FractionalSolution | None = None) -> CutSolution:
    """Unit-cost k-route multicut; pairs end below ceil(gamma (k-1)) edge-disjoint paths."""
    if not gamma > 1:
        raise AlgorithmContractError("kmc_unit needs gamma > 1")
    if any(c != 1 for c in inst.graph.cost_floats()):
        raise AlgorithmContractError("kmc_unit needs unit edge costs")
    frac = _lp_for(inst, frac, "P")
    return _carve(inst, frac, "kmc", gamma, "kmc")


def ed_two_nmc(inst: CutInstance, frac: FractionalSolution | None = None) -> CutSolution:
    """Edge deletion, node connectivity, k = 2."""
    if inst.variant != "ednode":
        raise AlgorithmContractError("ed_two_nmc needs the ednode variant")
    if inst.k != 2:
        raise AlgorithmContractError("ed_two_nmc needs k = 2")
    frac = _lp_for(inst, frac, "P2")
    return _carve(inst, frac, "ed2", None, "ed2nmc")


def nd_knmc_unit(inst: CutInstance, gamma: float, frac: FractionalSolution | None = None) -> CutSolution:
    """Node deletion, node connectivity, unit node costs."""
    if inst.variant != "ndnode":
        raise AlgorithmContractError("nd_knmc_unit needs the ndnode variant")
    if not gamma > 1:
        raise AlgorithmContractError("nd_knmc_unit needs gamma > 1")
    ends = inst.endpoint_set()
    costs = inst.graph.node_cost_floats()
    if any(costs[v] != 1 for v in range(inst.graph.node_count) if v not in ends):
        raise AlgorithmContractError("nd_knmc_unit needs unit costs on non-terminal nodes")
    frac = _lp_for(inst, frac, "P3")
    return _carve(inst, frac, "nd", gamma, "ndknmc")


# -- combinatorial multiway routines ---------------------------------------------------


def _multiway_checks(inst: CutInstance, gamma: float, name: str):
    if inst.variant != "multiway":
        raise AlgorithmContractError(f"{name} needs the multiway variant")
    if not gamma > 2:
        raise AlgorithmContractError(f"{name} needs gamma > 2")
    _require_unit_capacity(inst, name)
    if inst.graph.has_self_loops():
        raise AlgorithmContractError("self-loops are not supported")


def kmwc_unit(inst: CutInstance, gamma: float = 3.0, fast: bool = False) -> CutSolution:
    """Unit-cost k-route multiway cut via isolating cuts and terminal dropping."""
    _multiway_checks(inst, gamma, "kmwc_unit")
    if any(c != 1 for c in inst.graph.cost_floats()):
        raise AlgorithmContractError("kmwc_unit needs unit edge costs")
    k1 = inst.k - 1
    limit = 2 * gamma * k1 if fast else gamma * k1
    terms = list(inst.terminals)
    removed: frozenset = frozenset()
    trace = []
    while len(terms) >= 2:
        cuts, total = flow.isolating_cuts(inst.graph, terms, "unit")
        rec = {"terminals": list(terms), "total": total}
        if total >= gamma * k1 * len(terms):
            removed = frozenset().union(*(c.edges for c in cuts))
            rec["action"] = "union"
            trace.append(rec)
            break
        if fast:
            drop = [c.terminal for c in cuts if c.cost <= limit]
        else:
            drop = [next(c.terminal for c in cuts if c.cost < limit)]
        rec["action"] = "drop"
        rec["dropped"] = drop
        trace.append(rec)
        terms = [t for t in terms if t not in drop]
    threshold = math.floor(limit + 1e-12) if fast else max(0, math.ceil(limit - 1e-12) - 1)
    bound = 2 * gamma / (gamma - 2)
    return finish(inst, "kmwc-unit", removed, threshold, trace=trace,
                  params={"gamma": gamma, "fast": fast, "cost_factor": bound})


def harmonic(r: int) -> float:
    return sum(1.0 / j for j in range(1, r + 1))


def _opt_guesses(costs: Sequence[float], eps: float) -> list[float]:
    finite = [c for c in costs if c != INF and c > 0]
    if not finite:
        return [0.0]
    lo, hi = min(finite), sum(finite)
    out = []
    c = lo
    while c < hi:
        out.append(c)
        c *= 1 + eps
    out.append(hi)
    return out


def kmwc_general(inst: CutInstance, gamma: float = 4.0, eps: float = 0.01) -> CutSolution:
    """k-route multiway cut with general costs via truncated isolating cuts and OPT guessing."""
    _multiway_checks(inst, gamma, "kmwc_general")
    if not eps > 0:
        raise AlgorithmContractError("epsilon must be positive")
    g = inst.graph
    costs = g.cost_floats()
    k1 = inst.k - 1
    alpha = 2.0 / (gamma - 2.0)
    r = len(inst.terminals)
    threshold = math.floor(gamma * k1 + 1e-12)
    factor = 2 * gamma / (gamma - 2) * harmonic(r)
    params = {"gamma": gamma, "epsilon": eps, "alpha": alpha}
    # zero optimum: deleting the free edges already suffices
    free = frozenset(i for i, c in enumerate(costs) if c == 0)
    if all(c <= k1 for c in residual_connectivities(inst, free, limit=k1 + 1)):
        return finish(inst, "kmwc", free, threshold, params=dict(params, guess=0.0),
                      certificates=[{"name": "cost_bound", "lhs": 0.0, "rhs": 0.0, "pass": True}])
    for guess in _opt_guesses(costs, eps):
        attempt = _kmwc_attempt(inst, costs, guess, alpha, k1, gamma)
        if attempt is None:
            continue
        removed, trace = attempt
        cost = float(sum(costs[i] for i in removed))
        rhs = guess * factor
        cert = {"name": "cost_bound", "lhs": cost, "rhs": rhs, "pass": cost <= rhs * (1 + REL_TOL)}
        if not cert["pass"]:
            raise CertificateError(f"kmwc cost {cost} exceeds {rhs}")
        return finish(inst, "kmwc", removed, threshold, trace=trace, certificates=[cert],
                      params=dict(params, guess=guess))
    raise flow.InfeasibleError("no finite-cost k-route multiway cut exists")


def _kmwc_attempt(inst, costs, guess, alpha, k1, gamma):
    g = inst.graph
    terms = list(inst.terminals)
    removed: set = set()
    trace = []
    while len(terms) > 1:
        rp = len(terms)
        lam = alpha * guess / (k1 * rp) if k1 > 0 else INF
        weights = [min(c, lam) for c in costs]
        cuts, total = flow.isolating_cuts(g, terms, weights, removed_edges=removed)
        budget = 2 * (1 + alpha) * guess
        if total > budget * (1 + REL_TOL) + 1e-12:
            return None
        best = min(cuts, key=lambda c: c.cost)
        cheap = {e for e in best.edges if costs[e] <= lam}
        if any(costs[e] == INF for e in best.edges):
            return None
        expensive = len(best.edges) - len(cheap)
        if expensive > gamma * k1 + 1e-12:
            return None
        removed |= cheap
        trace.append({"terminal": best.terminal, "truncation": lam, "total": total,
                      "added": sorted(cheap), "expensive": expensive})
        terms.remove(best.terminal)
    return frozenset(removed), trace


# -- all pairs ----------------------------------------------------------------------


def allpairs_exact(inst: CutInstance) -> CutSolution:
    """Exact all-pairs cut for k in {1, 2}; harder k are APX-hard."""
    if inst.variant != "allpairs":
        raise AlgorithmContractError("allpairs_exact needs the allpairs variant")
    if inst.k >= 3:
        raise AlgorithmContractError("all-pairs cut with k >= 3 is APX-hard; no exact routine")
    _require_unit_capacity(inst, "allpairs_exact")
    g = inst.graph
    if inst.k == 1:
        if any(e.cost == INF for e in g.edges if e.u != e.v):
            raise flow.InfeasibleError("an infinite-cost edge joins two terminals")
        removed = frozenset(range(g.m))
    else:
        removed = flow.max_cost_spanning_forest(g)
    return finish(inst, "allpairs", removed, inst.k - 1)


# -- dispatch -----------------------------------------------------------------------

ALGORITHMS = {
    "kmwc-unit": ("multiway",),
    "kmwc": ("multiway",),
    "2mc": ("edge", "single"),
    "kmc": ("edge", "single"),
    "ed2nmc": ("ednode",),
    "ndknmc": ("ndnode",),
    "allpairs": ("allpairs",),
}

DEFAULT_GAMMA = {"kmwc-unit": 3.0, "kmwc": 4.0, "kmc": None, "ndknmc": None}


def solve(inst: CutInstance, alg: str, gamma: float | None = None, eps: float = 0.01,
          frac: FractionalSolution | None = None, fast: bool = False) -> CutSolution:
    if alg not in ALGORITHMS:
        raise AlgorithmContractError(f"unknown algorithm {alg!r}")
    if inst.variant not in ALGORITHMS[alg]:
        raise AlgorithmContractError(f"algorithm {alg} does not handle variant {inst.variant}")
    if gamma is None and alg in ("kmc", "ndknmc"):
        gamma = inst.k / (inst.k - 1) if inst.k > 1 else 2.0
    if alg == "kmwc-unit":
        return kmwc_unit(inst, 3.0 if gamma is None else gamma, fast)
    if alg == "kmwc":
        return kmwc_general(inst, 4.0 if gamma is None else gamma, eps)
    if alg == "2mc":
        return two_mc(inst, frac)
    if alg == "kmc":
        return kmc_unit(inst, gamma, frac)
    if alg == "ed2nmc":
        return ed_two_nmc(inst, frac)
    if alg == "ndknmc":
        return nd_knmc_unit(inst, gamma, frac)
    return allpairs_exact(inst)
