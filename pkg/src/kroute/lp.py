"""LP relaxations in compact potential form, two solvers, and a feasibility validator.

Relaxations:

* ``P``      edge deletion, edge connectivity: lengths x_e + y^i_e per commodity.
* ``Pprime`` multiway / all-pairs: one potential family per terminal, shared y,
  budget sum_e y_e <= (k-1)(r-1).
* ``P2``     edge deletion, node connectivity: stepping u -> v costs x_e + y^i_v.
* ``P3``     node deletion: stepping u -> v costs x_v + y^i_v; x fixed to 0 at every
  terminal, y^i fixed to 0 at commodity i's own endpoints.

For every commodity (or terminal) i the potentials d^i satisfy d^i_source = 0,
d^i_sink >= 1 and d^i_v <= d^i_u + len(u -> v) for every edge in both directions, so
d^i lower-bounds the shortest-path distance and the model is equivalent to the
path-indexed formulation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .graph import INF, CutInstance

EPS_LP = 1e-9
EPS_FEAS = 1e-7
PIVOT_TOL = 1e-12

RELAXATIONS = ("P", "Pprime", "P2", "P3")
_VARIANT_OF = {"P": ("edge", "single"), "Pprime": ("multiway", "allpairs"),
               "P2": ("ednode",), "P3": ("ndnode",)}


class LPContractError(ValueError):
    pass


class LPSolverError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """min c.x subject to rows (coef dict, relation, rhs), x >= 0, optional fixings."""

    names: list[str]
    objective: list[float]
    rows: list[tuple[dict[int, float], str, float]] = field(default_factory=list)
    fixed: dict[int, float] = field(default_factory=dict)
    which: str = ""
    layout: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str, cost: float = 0.0) -> int:
        self.names.append(name)
        self.objective.append(cost)
        return len(self.names) - 1

    def add_row(self, coefs: dict[int, float], rel: str, rhs: float):
        if rel not in ("<=", ">=", "="):
            raise LPContractError(f"bad relation {rel!r}")
        if not all(math.isfinite(v) for v in coefs.values()) or not math.isfinite(rhs):
            raise LPContractError("constraint data must be finite")
        self.rows.append((coefs, rel, rhs))


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    objective: float | None = None
    values: list[float] | None = None
    solver: str = ""


@dataclass
class FractionalSolution:
    which: str
    x: list[float]
    y: list[list[float]]
    objective: float
    beta: float
    pairs: list[tuple[int, int]]
    solver: str = ""


def _check_common(inst: CutInstance, which: str):
    if which not in RELAXATIONS:
        raise LPContractError(f"unknown relaxation {which!r}")
    if inst.variant not in _VARIANT_OF[which]:
        raise LPContractError(f"relaxation {which} does not match variant {inst.variant}")
    g = inst.graph
    if g.has_self_loops():
        raise LPContractError("self-loops are not supported")
    if any(e.capacity != 1 for e in g.edges):
        raise LPContractError("relaxations require unit capacities")
    if which in ("P2", "P3"):
        # a surviving direct s-t edge is one allowed path, yet both LPs force its length to 1
        for s, t in inst.commodities:
            if any({e.u, e.v} == {s, t} for e in g.edges):
                raise LPContractError("node-connectivity relaxations need nonadjacent commodity endpoints")


def build_relaxation(inst: CutInstance, which: str) -> LinearProgram:
    _check_common(inst, which)
    g = inst.graph
    n, m = g.node_count, g.m
    lp = LinearProgram([], [], which=which)
    node_based = which == "P3"
    xcount = n if node_based else m
    xcost = g.node_cost_floats() if node_based else g.cost_floats()
    xs = [lp.add_var(f"x_{j}", 0.0 if math.isinf(xcost[j]) else xcost[j]) for j in range(xcount)]
    for j in range(xcount):
        if math.isinf(xcost[j]):
            lp.fixed[xs[j]] = 0.0
    if node_based:
        for v in inst.endpoint_set():
            lp.fixed[xs[v]] = 0.0

    if which == "Pprime":
        terms = list(inst.terminals)
        ys = [lp.add_var(f"y_0_{e}") for e in range(m)]
        families = []
        for j, tj in enumerate(terms[:-1]):
            ds = [lp.add_var(f"d_{j}_{v}") for v in range(n)]
            lp.fixed[ds[tj]] = 0.0
            for tl in terms[j + 1:]:
                lp.add_row({ds[tl]: 1.0}, ">=", 1.0)
            for e_id, e in enumerate(g.edges):
                for a, b in ((e.u, e.v), (e.v, e.u)):
                    lp.add_row({ds[b]: 1.0, ds[a]: -1.0, xs[e_id]: -1.0, ys[e_id]: -1.0}, "<=", 0.0)
            families.append(ds)
        budget = (inst.k - 1) * max(len(terms) - 1, 0)
        lp.add_row({y: 1.0 for y in ys}, "<=", float(budget))
        lp.layout = {"x": xs, "y": [ys], "d": families}
        return lp

    ycount = m if which == "P" else n
    yvars, dvars = [], []
    for i, (s, t) in enumerate(inst.commodities):
        ys = [lp.add_var(f"y_{i}_{j}") for j in range(ycount)]
        ds = [lp.add_var(f"d_{i}_{v}") for v in range(n)]
        lp.fixed[ds[s]] = 0.0
        lp.add_row({ds[t]: 1.0}, ">=", 1.0)
        if which in ("P2", "P3"):
            lp.fixed[ys[s]] = 0.0
            lp.fixed[ys[t]] = 0.0
        for e_id, e in enumerate(g.edges):
            for a, b in ((e.u, e.v), (e.v, e.u)):
                if which == "P":
                    length = {xs[e_id]: -1.0, ys[e_id]: -1.0}
                elif which == "P2":
                    length = {xs[e_id]: -1.0, ys[b]: -1.0}
                else:
                    length = {xs[b]: -1.0, ys[b]: -1.0}
                row = {ds[b]: 1.0, ds[a]: -1.0}
                for var, coef in length.items():
                    row[var] = row.get(var, 0.0) + coef
                lp.add_row(row, "<=", 0.0)
        lp.add_row({y: 1.0 for y in ys}, "<=", float(inst.k - 1))
        yvars.append(ys)
        dvars.append(ds)
    lp.layout = {"x": xs, "y": yvars, "d": dvars}
    return lp


# -- solvers ----------------------------------------------------------------------


def _solve_highs(lp: LinearProgram) -> LPResult:
    nv = lp.num_vars
    ub_r, ub_c, ub_v, b_ub = [], [], [], []
    eq_r, eq_c, eq_v, b_eq = [], [], [], []
    for coefs, rel, rhs in lp.rows:
        sign = -1.0 if rel == ">=" else 1.0
        if rel == "=":
            row = len(b_eq)
            for j, a in coefs.items():
                eq_r.append(row), eq_c.append(j), eq_v.append(a)
            b_eq.append(rhs)
        else:
            row = len(b_ub)
            for j, a in coefs.items():
                ub_r.append(row), ub_c.append(j), ub_v.append(sign * a)
            b_ub.append(sign * rhs)
    bounds = [(lp.fixed[j], lp.fixed[j]) if j in lp.fixed else (0.0, None) for j in range(nv)]
    kwargs = {}
    if b_ub:
        kwargs["A_ub"] = coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), nv)).tocsr()
        kwargs["b_ub"] = np.array(b_ub)
    if b_eq:
        kwargs["A_eq"] = coo_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), nv)).tocsr()
        kwargs["b_eq"] = np.array(b_eq)
    res = linprog(np.array(lp.objective, dtype=float), bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10}, **kwargs)
    if res.status == 2:
        return LPResult("infeasible", solver="highs")
    if res.status == 3:
        return LPResult("unbounded", solver="highs")
    if res.status != 0:
        raise LPSolverError(f"highs failed: {res.message}")
    values = [float(v) for v in res.x]
    return LPResult("optimal", float(res.fun), values, "highs")


def _solve_exact(lp: LinearProgram) -> LPResult:
    """Two-phase dense tableau simplex over the rationals with Bland's rule."""
    nv = lp.num_vars
    free = [j for j in range(nv) if j not in lp.fixed]
    col_of = {j: k for k, j in enumerate(free)}
    fixed = {j: Fraction(v) for j, v in lp.fixed.items()}
    rows = []
    for coefs, rel, rhs in lp.rows:
        r = Fraction(rhs)
        row = {}
        for j, a in coefs.items():
            if j in fixed:
                r -= Fraction(a) * fixed[j]
            elif a:
                row[col_of[j]] = Fraction(a)
        if not row:
            ok = (r >= 0 if rel == "<=" else r <= 0 if rel == ">=" else r == 0)
            if not ok:
                return LPResult("infeasible", solver="exact")
            continue
        rows.append((row, rel, r))
    nf = len(free)
    # columns: structural | slack/surplus | artificial
    slack_cols, art_cols = [], []
    ncols = nf
    norm_rows = []
    for row, rel, r in rows:
        s_col = None
        if rel in ("<=", ">="):
            s_col = ncols
            ncols += 1
        norm_rows.append((row, rel, r, s_col))
    tableau = []
    basis = []
    for row, rel, r, s_col in norm_rows:
        line = [Fraction(0)] * ncols
        for k, a in row.items():
            line[k] = a
        if s_col is not None:
            line[s_col] = Fraction(1) if rel == "<=" else Fraction(-1)
        rhs = r
        if rhs < 0:
            line = [-a for a in line]
            rhs = -rhs
        tableau.append(line + [rhs])
        if s_col is not None and line[s_col] == 1:
            basis.append(s_col)
        else:
            basis.append(None)
    total = ncols
    for idx, b in enumerate(basis):
        if b is None:
            basis[idx] = total
            art_cols.append(total)
            total += 1
    width = total
    for idx, line in enumerate(tableau):
        rhs = line[-1]
        full = line[:-1] + [Fraction(0)] * (width - ncols)
        if basis[idx] >= ncols:
            full[basis[idx]] = Fraction(1)
        tableau[idx] = full + [rhs]

    def run(cost: list[Fraction], allowed: int) -> str:
        while True:
            # reduced costs
            red = list(cost) + [Fraction(0)]
            for i, b in enumerate(basis):
                cb = cost[b]
                if cb:
                    line = tableau[i]
                    for j in range(width + 1):
                        if line[j]:
                            red[j] -= cb * line[j]
            enter = next((j for j in range(allowed) if red[j] < 0 and j not in basis), None)
            if enter is None:
                return "optimal"
            best, leave = None, None
            for i, line in enumerate(tableau):
                a = line[enter]
                if a > 0:
                    ratio = line[-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded"
            piv = tableau[leave][enter]
            pline = [a / piv for a in tableau[leave]]
            tableau[leave] = pline
            for i, line in enumerate(tableau):
                if i != leave and line[enter]:
                    f = line[enter]
                    tableau[i] = [a - f * p for a, p in zip(line, pline)]
            basis[leave] = enter

    if art_cols:
        phase1 = [Fraction(0)] * width
        for j in art_cols:
            phase1[j] = Fraction(1)
        run(phase1, width)
        infeas = sum(tableau[i][-1] for i, b in enumerate(basis) if b in art_cols)
        if infeas > 0:
            return LPResult("infeasible", solver="exact")
        # drive remaining zero-level artificials out of the basis
        for i, b in enumerate(list(basis)):
            if b in art_cols:
                j = next((j for j in range(ncols) if tableau[i][j] != 0), None)
                if j is None:
                    continue
                piv = tableau[i][j]
                pline = [a / piv for a in tableau[i]]
                tableau[i] = pline
                for r_i, line in enumerate(tableau):
                    if r_i != i and line[j]:
                        f = line[j]
                        tableau[r_i] = [a - f * p for a, p in zip(line, pline)]
                basis[i] = j
    cost = [Fraction(0)] * width
    for j in free:
        cost[col_of[j]] = Fraction(lp.objective[j])
    for j in art_cols:
        # artificials left basic at zero are redundant rows; keep them pinned
        cost[j] = Fraction(0)
    status = run(cost, ncols)
    if status == "unbounded":
        return LPResult("unbounded", solver="exact")
    sol = [Fraction(0)] * width
    for i, b in enumerate(basis):
        sol[b] = tableau[i][-1]
    values = [0.0] * nv
    exact_values = [Fraction(0)] * nv
    for j in range(nv):
        exact_values[j] = fixed[j] if j in fixed else sol[col_of[j]]
        values[j] = float(exact_values[j])
    obj = sum(Fraction(lp.objective[j]) * exact_values[j] for j in range(nv))
    res = LPResult("optimal", float(obj), values, "exact")
    res.exact_values = exact_values
    res.exact_objective = obj
    return res


def solve_lp(lp: LinearProgram, method: str = "auto") -> LPResult:
    """Solve ``lp``; ``method`` is ``highs``, ``exact`` or ``auto`` (highs, exact fallback)."""
    if method == "exact":
        return _solve_exact(lp)
    if method not in ("highs", "auto"):
        raise LPContractError(f"unknown method {method!r}")
    try:
        res = _solve_highs(lp)
    except LPSolverError:
        if method == "highs":
            raise
        return _solve_exact(lp)
    if res.status == "optimal" and method == "auto":
        if _max_violation(lp, res.values) > EPS_LP * max(1.0, abs(res.objective)):
            return _solve_exact(lp)
    return res


def _max_violation(lp: LinearProgram, values: Sequence[float]) -> float:
    worst = 0.0
    for coefs, rel, rhs in lp.rows:
        lhs = sum(a * values[j] for j, a in coefs.items())
        if rel == "<=":
            worst = max(worst, lhs - rhs)
        elif rel == ">=":
            worst = max(worst, rhs - lhs)
        else:
            worst = max(worst, abs(lhs - rhs))
    worst = max([worst] + [-v for v in values])
    return worst


def solve_relaxation(inst: CutInstance, which: str | None = None, method: str = "auto") -> FractionalSolution:
    """Build, solve and unpack the relaxation matching ``inst.variant``."""
    if which is None:
        which = default_relaxation(inst)
    lp = build_relaxation(inst, which)
    res = solve_lp(lp, method)
    if res.status != "optimal":
        raise LPSolverError(f"relaxation {which} is {res.status}")
    vals = res.values
    x = [max(0.0, vals[j]) for j in lp.layout["x"]]
    y = [[max(0.0, vals[j]) for j in ys] for ys in lp.layout["y"]]
    obj = max(0.0, res.objective)
    pairs = inst.pairs()
    r = inst.r if inst.r > 0 else 1
    return FractionalSolution(which, x, y, obj, obj / r, pairs, res.solver)


def default_relaxation(inst: CutInstance) -> str:
    for which, variants in _VARIANT_OF.items():
        if inst.variant in variants:
            return which
    raise LPContractError(f"no relaxation for variant {inst.variant}")


# -- validation -------------------------------------------------------------------


def _dijkstra(n: int, adj: list[list[tuple[int, float]]], src: int) -> list[float]:
    dist = [math.inf] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def induced_lengths(inst: CutInstance, frac: FractionalSolution, i: int) -> list[list[tuple[int, float]]]:
    """Directed adjacency with the length of stepping along each edge under metric i."""
    g = inst.graph
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.node_count)]
    which = frac.which
    yi = frac.y[0] if which == "Pprime" else frac.y[i]
    for e_id, e in enumerate(g.edges):
        for a, b in ((e.u, e.v), (e.v, e.u)):
            if which in ("P", "Pprime"):
                w = frac.x[e_id] + yi[e_id]
            elif which == "P2":
                w = frac.x[e_id] + yi[b]
            else:
                w = frac.x[b] + yi[b]
            adj[a].append((b, w))
    return adj


def validate_fractional(inst: CutInstance, frac: FractionalSolution, which: str | None = None) -> dict:
    which = which or frac.which
    if which != frac.which:
        raise LPContractError("relaxation tag mismatch")
    g = inst.graph
    n = g.node_count
    path_slack = math.inf
    budget_slack = math.inf
    fix_slack = 0.0
    if which == "Pprime":
        terms = list(inst.terminals)
        for j, tj in enumerate(terms):
            dist = _dijkstra(n, induced_lengths(inst, frac, 0), tj)
            for tl in terms[j + 1:]:
                path_slack = min(path_slack, dist[tl] - 1.0)
        budget_slack = (inst.k - 1) * (len(terms) - 1) - sum(frac.y[0])
    else:
        for i, (s, t) in enumerate(inst.commodities):
            dist = _dijkstra(n, induced_lengths(inst, frac, i), s)
            path_slack = min(path_slack, dist[t] - 1.0)
            budget_slack = min(budget_slack, (inst.k - 1) - sum(frac.y[i]))
            if which in ("P2", "P3"):
                fix_slack = min(fix_slack, -abs(frac.y[i][s]), -abs(frac.y[i][t]))
        if which == "P3":
            for v in inst.endpoint_set():
                fix_slack = min(fix_slack, -abs(frac.x[v]))
    nonneg = min([0.0] + list(frac.x) + [v for row in frac.y for v in row])
    if math.isinf(path_slack):
        path_slack = 1e300
    report = {
        "path": path_slack,
        "budget": budget_slack,
        "fixings": fix_slack,
        "nonnegativity": nonneg,
    }
    feasible = all(v >= -EPS_FEAS for v in report.values())
    return {"feasible": feasible, "slack": report}


# -- model dump -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v)) if not float(v).is_integer() else str(int(v))


def write_lp_model(lp: LinearProgram) -> str:
    """Model text in the CPLEX LP file format."""
    out = [f"\\ relaxation {lp.which}", "Minimize"]
    terms = [f"{_fmt(c)} {lp.names[j]}" for j, c in enumerate(lp.objective) if c]
    out.append(" obj: " + (" + ".join(terms) if terms else "0 " + lp.names[0]))
    out.append("Subject To")
    for r_id, (coefs, rel, rhs) in enumerate(lp.rows):
        parts = []
        for j in sorted(coefs):
            a = coefs[j]
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(a))} {lp.names[j]}")
        expr = " ".join(parts).lstrip("+ ")
        out.append(f" c{r_id}: {expr} {rel} {_fmt(rhs)}")
    out.append("Bounds")
    for j in sorted(lp.fixed):
        out.append(f" {lp.names[j]} = {_fmt(lp.fixed[j])}")
    out.append("End")
    return "\n".join(out) + "\n"
