"""Balls, boundaries and volumes in LP-induced metrics, and the deterministic radius search.

Two kinds of geometry source are supported:

* :class:`SubdividedGraph` for relaxation ``P``: every edge e = (lo, hi), lo <= hi, is
  replaced by the chain lo - w_0 - ... - w_{r-1} - hi of r+1 segments.  Segment 0 is
  the x-segment (length x_e under every metric); segment j >= 1 carries y^{j-1}_e under
  metric j-1 and length 0 under all other metrics.  Interior node w_j of edge e has id
  n + e*r + j; segment j of edge e has id e*(r+1) + j.
* :class:`NodeMetric` for ``P2`` (stepping u -> v costs x_uv + y^i_v) and ``P3``
  (stepping u -> v costs x_v + y^i_v).  No subdivision.

Distances are always restricted to the region S.  Inside-edge volume terms use the
element's own x value, so V <= V^x(S) holds and V, V-bar are monotone with jumps only
in the direction the telescoping argument tolerates.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph import CutInstance
from .lp import FractionalSolution

BISECT_TOL = 1e-12
REL_TOL = 1e-9
FD_MIN_WIDTH = 1e-9


class RegionContractError(ValueError):
    pass


class RadiusSearchError(RuntimeError):
    pass


def _cx(c: float, x: float) -> float:
    """c * x with 0 * inf = 0 (infinite-cost elements carry x = 0)."""
    return 0.0 if x == 0 else c * x


def lnln_er(r: int) -> float:
    return math.log(math.log(math.e * (r + 1)))


def cq_cost(costs: Sequence[tuple[int, float]] | dict, q: int) -> float:
    """Cost of all but the q-1 most expensive elements (ties by lower id kept first)."""
    if q < 1:
        raise RegionContractError("q must be >= 1")
    items = list(costs.items()) if isinstance(costs, dict) else list(costs)
    if len(items) < q:
        return 0.0
    items.sort(key=lambda it: (-it[1], it[0]))
    return float(sum(c for _, c in items[q - 1:]))


@dataclass(frozen=True)
class BallGeometry:
    commodity: int
    center: int
    rho: float
    region: frozenset
    ball: frozenset
    anti_ball: frozenset
    x_boundary: tuple  # segment ids (P), edge ids (P2), node ids (P3)
    y_boundary: tuple  # segment ids (P), node ids (P2/P3)
    volume: float
    anti_volume: float
    x_cost: float      # cost of the x-boundary
    boundary_cost: float  # cost of the full boundary
    region_volume: float  # V^x(S)


class SubdividedGraph:
    kind = "P"

    def __init__(self, inst: CutInstance, frac: FractionalSolution):
        if frac.which != "P":
            raise RegionContractError("subdivision needs a solution of relaxation P")
        g = inst.graph
        if g.has_self_loops():
            raise RegionContractError("self-loops are not supported")
        if len(frac.x) != g.m or len(frac.y) != inst.r or any(len(row) != g.m for row in frac.y):
            raise RegionContractError("fractional solution shape mismatch")
        self.inst = inst
        self.frac = frac
        self.n_orig = g.node_count
        self.m = g.m
        self.r = inst.r
        self.k = inst.k
        self.beta = frac.beta
        self.node_count = self.n_orig + self.m * self.r
        self.costs = g.cost_floats()
        segs = []
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.node_count)]
        for e_id, e in enumerate(g.edges):
            lo, hi = min(e.u, e.v), max(e.u, e.v)
            chain = [lo] + [self.n_orig + e_id * self.r + j for j in range(self.r)] + [hi]
            for j in range(self.r + 1):
                sid = e_id * (self.r + 1) + j
                a, b = chain[j], chain[j + 1]
                segs.append((a, b, e_id, j))
                adj[a].append((b, sid))
                adj[b].append((a, sid))
        self.segments = segs
        self.adj = adj

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    def original_nodes(self) -> range:
        return range(self.n_orig)

    def parent(self, sid: int) -> int:
        return self.segments[sid][2]

    def to_parents(self, sids: Iterable[int]) -> list[int]:
        return sorted({self.segments[s][2] for s in sids})

    def seg_length(self, sid: int, i: int) -> float:
        _, _, e_id, j = self.segments[sid]
        if j == 0:
            return self.frac.x[e_id]
        if j - 1 == i:
            return self.frac.y[i][e_id]
        return 0.0

    def seg_cost(self, sid: int) -> float:
        return self.costs[self.segments[sid][2]]

    def is_x(self, sid: int) -> bool:
        return self.segments[sid][3] == 0

    def is_y(self, sid: int, i: int) -> bool:
        return self.segments[sid][3] - 1 == i

    def all_nodes(self) -> frozenset:
        return frozenset(range(self.node_count))

    def induced_segments(self, S) -> list[int]:
        return [sid for sid, (a, b, _, _) in enumerate(self.segments) if a in S and b in S]

    def region_volume(self, S) -> float:
        vol = self.beta
        for sid in self.induced_segments(S):
            if self.is_x(sid):
                vol += _cx(self.seg_cost(sid), self.frac.x[self.segments[sid][2]])
        return vol

    def distances(self, i: int, z: int, S) -> list[float]:
        dist = [math.inf] * self.node_count
        dist[z] = 0.0
        heap = [(0.0, z)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, sid in self.adj[u]:
                if v not in S:
                    continue
                nd = d + self.seg_length(sid, i)
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def breakpoints(self, i: int, dist, S) -> list[float]:
        return sorted({dist[v] for v in S if math.isfinite(dist[v])})

    def evaluate(self, i: int, z: int, S, dist, rho: float) -> BallGeometry:
        ball = frozenset(v for v in S if dist[v] <= rho)
        anti = frozenset(S) - ball
        vol = avol = self.beta
        xb, yb = [], []
        xcost = full = 0.0
        for sid in self.induced_segments(S):
            a, b, e_id, j = self.segments[sid]
            c = self.costs[e_id]
            x = self.frac.x[e_id]
            ina, inb = a in ball, b in ball
            if ina and inb:
                if j == 0:
                    vol += _cx(c, x)
            elif not ina and not inb:
                if j == 0:
                    avol += _cx(c, x)
            else:
                u, v = (a, b) if ina else (b, a)
                full += c
                if j == 0:
                    xb.append(sid)
                    xcost += c
                    vol += c * (rho - dist[u])
                    avol += c * (dist[v] - rho)
                elif j - 1 == i:
                    yb.append(sid)
                else:
                    raise AssertionError("zero-length segment on the boundary")
        return BallGeometry(i, z, rho, frozenset(S), ball, anti, tuple(xb), tuple(yb), vol, avol,
                            xcost, full, self.region_volume(S))


class NodeMetric:
    """Asymmetric node-length metric of relaxation P2 or P3."""

    def __init__(self, inst: CutInstance, frac: FractionalSolution):
        if frac.which not in ("P2", "P3"):
            raise RegionContractError("node metric needs a solution of P2 or P3")
        g = inst.graph
        if g.has_self_loops():
            raise RegionContractError("self-loops are not supported")
        self.kind = frac.which
        self.inst = inst
        self.frac = frac
        self.n = self.node_count = g.node_count
        self.r = inst.r
        self.k = inst.k
        self.beta = frac.beta
        xlen = g.m if self.kind == "P2" else g.node_count
        if len(frac.x) != xlen or len(frac.y) != inst.r or any(len(row) != g.node_count for row in frac.y):
            raise RegionContractError("fractional solution shape mismatch")
        self.costs = g.cost_floats() if self.kind == "P2" else g.node_cost_floats()
        self.edges = [(e.u, e.v) for e in g.edges]
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for e_id, (u, v) in enumerate(self.edges):
            adj[u].append((v, e_id))
            adj[v].append((u, e_id))
        self.adj = adj

    def all_nodes(self) -> frozenset:
        return frozenset(range(self.n))

    def step(self, i: int, e_id: int, v: int) -> float:
        y = self.frac.y[i][v]
        if self.kind == "P2":
            return self.frac.x[e_id] + y
        return self.frac.x[v] + y

    def region_volume(self, S) -> float:
        vol = self.beta
        if self.kind == "P2":
            for e_id, (u, v) in enumerate(self.edges):
                if u in S and v in S:
                    vol += _cx(self.costs[e_id], self.frac.x[e_id])
        else:
            for v in S:
                vol += _cx(self.costs[v], self.frac.x[v])
        return vol

    def distances(self, i: int, z: int, S) -> list[float]:
        dist = [math.inf] * self.n
        dist[z] = 0.0
        heap = [(0.0, z)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, e_id in self.adj[u]:
                if v not in S:
                    continue
                nd = d + self.step(i, e_id, v)
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def breakpoints(self, i: int, dist, S) -> list[float]:
        pts = set()
        y = self.frac.y[i]
        for v in S:
            d = dist[v]
            if not math.isfinite(d):
                continue
            pts.add(d)
            pts.add(d - y[v])
            if self.kind == "P3":
                pts.add(d - y[v] - self.frac.x[v])
        return sorted(pts)

    def evaluate(self, i: int, z: int, S, dist, rho: float) -> BallGeometry:
        y = self.frac.y[i]
        S = frozenset(S)
        ball = frozenset(v for v in S if dist[v] <= rho)
        gamma_y = frozenset(v for v in S if rho < dist[v] <= rho + y[v])
        vol = avol = self.beta
        if self.kind == "P2":
            anti = S - ball - gamma_y
            xb = []
            xcost = 0.0
            for e_id, (a, b) in enumerate(self.edges):
                if a not in S or b not in S:
                    continue
                c, x = self.costs[e_id], self.frac.x[e_id]
                if a in ball and b in ball:
                    vol += _cx(c, x)
                elif (a in ball and b in gamma_y) or (b in ball and a in gamma_y):
                    vol += _cx(c, x)
                elif a in ball or b in ball:
                    u, w = (a, b) if a in ball else (b, a)
                    xb.append(e_id)
                    xcost += c
                    vol += c * (rho - dist[u])
                    avol += c * (dist[w] - rho - y[w])
                elif a in gamma_y and b in gamma_y:
                    pass
                else:
                    avol += _cx(c, x)
            return BallGeometry(i, z, rho, S, ball, anti, tuple(xb), tuple(sorted(gamma_y)), vol, avol,
                                xcost, xcost, self.region_volume(S))
        x = self.frac.x
        gamma_x = frozenset(v for v in S if rho + y[v] < dist[v] <= rho + y[v] + x[v])
        anti = S - ball - gamma_y - gamma_x
        for v in ball | gamma_y:
            vol += _cx(self.costs[v], x[v])
        for v in anti | gamma_y:
            avol += _cx(self.costs[v], x[v])
        xcost = 0.0
        for v in gamma_x:
            c = self.costs[v]
            xcost += c
            vol += c * (rho - (dist[v] - x[v] - y[v]))
            avol += c * (dist[v] - y[v] - rho)
        ycost = sum(self.costs[v] for v in gamma_y)
        return BallGeometry(i, z, rho, S, ball, anti, tuple(sorted(gamma_x)), tuple(sorted(gamma_y)),
                            vol, avol, xcost, xcost + ycost, self.region_volume(S))

    def neighbours(self, B, S) -> frozenset:
        """Graph-based boundary: nodes of S outside B adjacent to B."""
        out = set()
        for u, v in self.edges:
            if u in B and v in S and v not in B:
                out.add(v)
            if v in B and u in S and u not in B:
                out.add(u)
        return frozenset(out)


def subdivide(inst: CutInstance, frac: FractionalSolution) -> SubdividedGraph:
    return SubdividedGraph(inst, frac)


def make_source(inst: CutInstance, frac: FractionalSolution):
    return SubdividedGraph(inst, frac) if frac.which == "P" else NodeMetric(inst, frac)


def commodity_distances(source, i: int, z: int, S) -> list[float]:
    S = frozenset(S)
    if z not in S:
        raise RegionContractError("center must lie in the region")
    return source.distances(i, z, S)


def ball_and_boundary(source, i: int, z: int, S, rho: float, beta: float | None = None) -> BallGeometry:
    if not 0.0 <= rho:
        raise RegionContractError("radius must be nonnegative")
    if beta is not None and beta != source.beta:
        raise RegionContractError("beta is fixed by the fractional solution")
    S = frozenset(S)
    dist = commodity_distances(source, i, z, S)
    return source.evaluate(i, z, S, dist, rho)


# -- radius search ----------------------------------------------------------------


@dataclass
class RadiusProof:
    rho: float
    variant: str
    alpha: float
    q: int
    interval: tuple[float, float]
    x_cost: float
    boundary_cost: float
    y_count: int
    volume: float
    anti_volume: float
    region_volume: float
    rhs_volume: float
    rhs_anti_volume: float
    factor: float
    total_factor: float | None = None
    rhs_total_volume: float | None = None
    rhs_total_anti_volume: float | None = None
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _side(vol: float, vmax: float) -> float:
    if vol <= 0:
        return 0.0
    return vol * math.log(math.e * vmax / vol)


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + REL_TOL * max(1.0, abs(rhs))


def _prove(geom: BallGeometry, variant: str, alpha: float, q: int, gamma: float | None, r: int,
           interval) -> RadiusProof:
    a, b = interval
    ll = lnln_er(r)
    factor = 2.0 / ((1.0 - alpha) * (b - a))
    vmax = geom.region_volume
    rv = factor * _side(geom.volume, vmax) * ll
    ra = factor * _side(geom.anti_volume, vmax) * ll
    proof = RadiusProof(geom.rho, variant, alpha, q, (a, b), geom.x_cost, geom.boundary_cost,
                        len(geom.y_boundary), geom.volume, geom.anti_volume, vmax, rv, ra, factor)
    proof.checks = {
        "volume": _leq(geom.x_cost, rv),
        "anti_volume": _leq(geom.x_cost, ra),
        "y_count": len(geom.y_boundary) < q,
    }
    if variant == "total":
        tf = 2.0 * gamma / (math.sqrt(gamma) - 1.0) ** 2 / (b - a)
        proof.total_factor = tf
        proof.rhs_total_volume = tf * _side(geom.volume, vmax) * ll
        proof.rhs_total_anti_volume = tf * _side(geom.anti_volume, vmax) * ll
        proof.checks["total_volume"] = _leq(geom.boundary_cost, proof.rhs_total_volume)
        proof.checks["total_anti_volume"] = _leq(geom.boundary_cost, proof.rhs_total_anti_volume)
    return proof


def find_radius(source, i: int, z: int, S, alpha: float, *, variant: str = "basic",
                gamma: float | None = None, interval=(0.0, 1.0), guard: int | None = None,
                trace: list | None = None) -> tuple[float, RadiusProof, BallGeometry]:
    """Lowest-ρ radius meeting the volume, anti-volume and y-count bounds.

    ``variant='total'`` additionally bounds the whole boundary with the
    2γ/(√γ-1)² factor.  ``guard`` (usually t_i) caps the search below its distance.
    """
    if not 0.0 < alpha < 1.0:
        raise RegionContractError("alpha must lie in (0, 1)")
    if variant not in ("basic", "total"):
        raise RegionContractError(f"unknown variant {variant!r}")
    if variant == "total" and (gamma is None or gamma <= 1.0):
        raise RegionContractError("the total variant needs gamma > 1")
    S = frozenset(S)
    dist = commodity_distances(source, i, z, S)
    a, b = interval
    hi = b
    if guard is not None:
        hi = min(hi, dist[guard])
    if not hi > a:
        raise RadiusSearchError("empty search interval")
    q = math.ceil((source.k - 1) / alpha - 1e-12) if source.k > 1 else 1
    q = max(q, 1)
    r = source.r
    pts = [a] + [p for p in source.breakpoints(i, dist, S) if a < p < hi] + [hi]
    ll = lnln_er(r)
    factor = 2.0 / ((1.0 - alpha) * (b - a))
    tfactor = 2.0 * gamma / (math.sqrt(gamma) - 1.0) ** 2 / (b - a) if variant == "total" else None
    for lo_p, hi_p in zip(pts, pts[1:]):
        if hi_p - lo_p <= 4 * BISECT_TOL:
            continue
        mid = 0.5 * (lo_p + hi_p)
        geom = source.evaluate(i, z, S, dist, mid)
        vmax = geom.region_volume
        slope = geom.x_cost

        def vol_at(rho):
            return geom.volume + slope * (rho - mid)

        def avol_at(rho):
            return geom.anti_volume - slope * (rho - mid)

        ycount_ok = len(geom.y_boundary) < q

        def v_ok(rho):
            sv = _side(vol_at(rho), vmax) * ll
            ok = geom.x_cost <= factor * sv
            if tfactor is not None:
                ok = ok and geom.boundary_cost <= tfactor * sv
            return ok

        def a_ok(rho):
            sa = _side(avol_at(rho), vmax) * ll
            ok = geom.x_cost <= factor * sa
            if tfactor is not None:
                ok = ok and geom.boundary_cost <= tfactor * sa
            return ok

        record = {"lo": lo_p, "hi": hi_p, "x_cost": geom.x_cost, "y_count": len(geom.y_boundary),
                  "volume_mid": geom.volume, "anti_volume_mid": geom.anti_volume, "feasible": False}
        inner_lo, inner_hi = lo_p + BISECT_TOL, hi_p - BISECT_TOL
        if ycount_ok and v_ok(inner_hi) and a_ok(inner_lo):
            # smallest rho with v_ok (v-side RHS nondecreasing)
            if v_ok(inner_lo):
                left = inner_lo
            else:
                l, h = inner_lo, inner_hi
                while h - l > BISECT_TOL:
                    m_ = 0.5 * (l + h)
                    if v_ok(m_):
                        h = m_
                    else:
                        l = m_
                left = h
            # largest rho with a_ok (anti-side RHS nonincreasing)
            if a_ok(inner_hi):
                right = inner_hi
            else:
                l, h = inner_lo, inner_hi
                while h - l > BISECT_TOL:
                    m_ = 0.5 * (l + h)
                    if a_ok(m_):
                        l = m_
                    else:
                        h = m_
                right = l
            if left <= right:
                rho = 0.5 * (left + right)
                final = source.evaluate(i, z, S, dist, rho)
                proof = _prove(final, variant, alpha, q, gamma, r, (a, b))
                record.update(feasible=proof.ok, rho=rho, left=left, right=right)
                if trace is not None:
                    trace.append(record)
                if proof.ok:
                    return rho, proof, final
                continue
        if trace is not None:
            trace.append(record)
    raise RadiusSearchError(f"no feasible radius for commodity {i} around {z}")


# -- region-growing integral diagnostic ----------------------------------------------


def _lnln(v: float) -> float:
    return math.log(math.log(v))


def region_growing_integral_check(source, i: int, z: int, S, interval=(0.0, 1.0),
                                  fd_step: float = 1e-6, fd_tol: float = 1e-4) -> dict:
    """Closed-form evaluation of both expected-ratio bounds over [a, b).

    Each smooth subinterval contributes a difference of ln ln terms.  Also checks the
    volume derivative against the x-boundary cost by central differences.
    """
    S = frozenset(S)
    dist = commodity_distances(source, i, z, S)
    a, b = interval
    if source.beta <= 0:
        raise RegionContractError("integral check needs beta > 0")
    va = source.evaluate(i, z, S, dist, a)
    vb = source.evaluate(i, z, S, dist, b)
    Vb, Vbar_a = vb.volume, va.anti_volume
    pts = [a] + [p for p in source.breakpoints(i, dist, S) if a < p < b] + [b]
    lhs1 = lhs2 = 0.0
    fd_worst = 0.0
    fd_ok = True
    monotone_ok = True
    segments = 0
    for lo_p, hi_p in zip(pts, pts[1:]):
        width = hi_p - lo_p
        if width <= 0:
            continue
        segments += 1
        mid = 0.5 * (lo_p + hi_p)
        geom = source.evaluate(i, z, S, dist, mid)
        L = geom.x_cost
        v_lo = geom.volume - L * (mid - lo_p)
        v_hi = geom.volume + L * (hi_p - mid)
        a_lo = geom.anti_volume + L * (mid - lo_p)
        a_hi = geom.anti_volume - L * (hi_p - mid)
        if v_hi > Vb * (1 + REL_TOL) or a_lo > Vbar_a * (1 + REL_TOL):
            monotone_ok = False
        if L > 0:
            lhs1 += _lnln(math.e * Vb / v_lo) - _lnln(math.e * Vb / min(v_hi, Vb))
            lhs2 += _lnln(math.e * Vbar_a / max(a_hi, 1e-300)) - _lnln(math.e * Vbar_a / min(a_lo, Vbar_a))
        h = min(fd_step, width / 4)
        # slivers between float-equal breakpoints are too thin to difference
        if width > FD_MIN_WIDTH:
            plus = source.evaluate(i, z, S, dist, mid + h)
            minus = source.evaluate(i, z, S, dist, mid - h)
            d_v = (plus.volume - minus.volume) / (2 * h)
            d_a = (plus.anti_volume - minus.anti_volume) / (2 * h)
            scale = max(abs(L), 1e-12)
            err = max(abs(d_v - L), abs(d_a + L)) / scale if L > 0 else max(abs(d_v), abs(d_a))
            fd_worst = max(fd_worst, err)
            if L > 0 and err > fd_tol:
                fd_ok = False
            if L == 0 and err > 1e-6:
                fd_ok = False
    scale = 1.0 / (b - a)
    lhs1 *= scale
    lhs2 *= scale
    rhs1 = scale * _lnln(math.e * Vb / va.volume)
    rhs2 = scale * _lnln(math.e * Vbar_a / max(vb.anti_volume, 1e-300))
    ok1 = lhs1 <= rhs1 * (1 + REL_TOL) + 1e-12
    ok2 = lhs2 <= rhs2 * (1 + REL_TOL) + 1e-12
    return {"lhs_volume": lhs1, "rhs_volume": rhs1, "lhs_anti_volume": lhs2, "rhs_anti_volume": rhs2,
            "subintervals": segments, "fd_worst": fd_worst, "fd_ok": fd_ok, "monotone_ok": monotone_ok,
            "pass": ok1 and ok2 and fd_ok and monotone_ok}
