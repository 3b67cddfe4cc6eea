"""Hardness gadgets as instance generators with two-way solution mappings.

Three constructions:

* :func:`ssve_to_kmic` -- small-set vertex expansion to single-pair k-route cut on a
  capacitated graph.
* :func:`minrep_to_edknmc` -- MinRep label cover to edge-deletion k-route node multicut.
* :func:`vc_to_allpairs` -- vertex cover to k-route all-pairs cut (k >= 3).

Each returns a :class:`ReductionArtifact` whose ``layout`` dict records where every
gadget node and edge lives, so the mappings are plain id arithmetic.

Source formats (``#`` comments allowed)::

    ssve <|U|> <|V|> <alpha>        # alpha as a fraction or decimal, e.g. 1/2
    e <u> <v>                       # u in [0,|U|), v in [0,|V|)

    minrep <|U|> <|W|> <|L1|> <|L2|>
    e <u> <w> <pi(0)> ... <pi(|L1|-1)>

    vc <n> <m>
    e <u> <v>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import flow
from .graph import INF, CutInstance, Edge, MultiGraph, ParseError


class ReductionContractError(ValueError):
    pass


@dataclass(frozen=True)
class SsveInstance:
    n_u: int
    n_v: int
    edges: tuple  # (u, v) pairs
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if not 0 < self.alpha <= 1:
            raise ReductionContractError("alpha must lie in (0, 1]")
        for u, v in self.edges:
            if not (0 <= u < self.n_u and 0 <= v < self.n_v):
                raise ReductionContractError(f"edge ({u}, {v}) out of range")
        if len(set(self.edges)) != len(self.edges):
            raise ReductionContractError("duplicate edge")

    @property
    def min_size(self) -> int:
        return math.ceil(self.alpha * self.n_u)

    def neighbours(self, S: Iterable[int]) -> frozenset:
        S = set(S)
        return frozenset(v for u, v in self.edges if u in S)


@dataclass(frozen=True)
class MinRepInstance:
    n_u: int
    n_w: int
    n_l1: int
    n_l2: int
    edges: tuple  # (u, w, pi) with pi a tuple of length n_l1 over range(n_l2)

    def __post_init__(self):
        edges = tuple((int(u), int(w), tuple(int(b) for b in pi)) for u, w, pi in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, w, pi in edges:
            if not (0 <= u < self.n_u and 0 <= w < self.n_w):
                raise ReductionContractError(f"edge ({u}, {w}) out of range")
            if len(pi) != self.n_l1 or any(not 0 <= b < self.n_l2 for b in pi):
                raise ReductionContractError("constraint map must be total from L1 into L2")

    def covers(self, labels_u: Sequence, labels_w: Sequence) -> list[int]:
        """Indices of edges left uncovered by the labeling."""
        bad = []
        for idx, (u, w, pi) in enumerate(self.edges):
            if not any(pi[a] in labels_w[w] for a in labels_u[u]):
                bad.append(idx)
        return bad


@dataclass(frozen=True)
class VcInstance:
    n: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for u, v in edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ReductionContractError(f"bad edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ReductionContractError("source graph must be simple")
            seen.add(key)

    def is_cover(self, cover) -> bool:
        cover = set(cover)
        return all(u in cover or v in cover for u, v in self.edges)


@dataclass
class ReductionArtifact:
    kind: str
    instance: CutInstance
    source: object
    layout: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)


class _Builder:
    def __init__(self):
        self.n = 0
        self.edges: list[Edge] = []

    def node(self) -> int:
        self.n += 1
        return self.n - 1

    def edge(self, u, v, cost=INF, cap=1) -> int:
        self.edges.append(Edge(u, v, cost, cap))
        return len(self.edges) - 1

    def graph(self) -> MultiGraph:
        return MultiGraph(self.n, tuple(self.edges))


# -- SSVE -> k-route cut ----------------------------------------------------------------


def ssve_to_kmic(src: SsveInstance) -> ReductionArtifact:
    """Clique gadget: N = 2|U||V|+1, k = floor(|U|(1-alpha)) + N|E| + 1.

    Layout: U nodes 0..|U|-1; clique K(v) occupies |U| + v*N .. |U| + (v+1)*N - 1;
    then s, t, a, b.  Zero capacities (isolated vertices) are omitted.
    """
    if not src.edges:
        raise ReductionContractError("SSVE source needs at least one edge")
    nu, nv, E = src.n_u, src.n_v, src.edges
    N = 2 * nu * nv + 1
    slack = math.floor(nu * (1 - src.alpha))
    k = slack + N * len(E) + 1
    deg_u = [sum(1 for u, _ in E if u == x) for x in range(nu)]
    deg_v = [sum(1 for _, v in E if v == y) for y in range(nv)]
    bld = _Builder()
    u_nodes = [bld.node() for _ in range(nu)]
    cliques = [[bld.node() for _ in range(N)] for _ in range(nv)]
    s, t, a, b = bld.node(), bld.node(), bld.node(), bld.node()
    for K in cliques:
        for i in range(N):
            for j in range(i + 1, N):
                bld.edge(K[i], K[j])
    ux_edges = {}
    for u, v in E:
        for x in cliques[v]:
            ux_edges[(u, x)] = bld.edge(u_nodes[u], x)
    su_edges = [bld.edge(s, u) for u in u_nodes]
    xt_edges = [[bld.edge(x, t, 1) for x in K] for K in cliques]
    bt = bld.edge(b, t, INF, len(E) * N)
    bu_edges = [bld.edge(b, u_nodes[u], INF, deg_u[u] * N) if deg_u[u] else None for u in range(nu)]
    sa = bld.edge(s, a, INF, len(E) * N)
    ax_edges = [[bld.edge(a, x, INF, deg_v[v]) for x in cliques[v]] if deg_v[v] else [] for v in range(nv)]
    inst = CutInstance(bld.graph(), ((s, t),), k, "single")
    layout = {"u": u_nodes, "cliques": cliques, "s": s, "t": t, "a": a, "b": b,
              "xt_edges": xt_edges, "ux_edges": ux_edges, "su_edges": su_edges, "bt": bt,
              "bu_edges": bu_edges, "sa": sa, "ax_edges": ax_edges}
    return ReductionArtifact("ssve", inst, src, layout, {"N": N, "k": k, "slack": slack})


def _max_st_flow(inst: CutInstance, removed) -> int:
    s, t = inst.commodities[0]
    return flow.edge_connectivity(inst.graph, s, t, removed_edges=removed)


def map_ssve_solutions(art: ReductionArtifact, direction: str, witness):
    """``forward``: S subset of U -> edge set; ``backward``: edge set -> S subset of U."""
    src: SsveInstance = art.source
    lay = art.layout
    N, k = art.params["N"], art.params["k"]
    if direction == "forward":
        S = sorted(set(witness))
        if len(S) < src.min_size:
            raise ReductionContractError(f"|S| = {len(S)} is below alpha |U| = {src.min_size}")
        gamma = src.neighbours(S)
        removed = frozenset(e for v in sorted(gamma) for e in lay["xt_edges"][v])
        value = _max_st_flow(art.instance, removed)
        if value > k - 1:
            raise AssertionError(f"forward map infeasible: flow {value} > {k - 1}")
        return removed
    if direction != "backward":
        raise ReductionContractError(f"unknown direction {direction!r}")
    F = frozenset(witness)
    costs = art.instance.graph.cost_floats()
    if any(costs[e] == INF for e in F):
        raise ReductionContractError("cut contains an infinite-cost edge")
    value = _max_st_flow(art.instance, F)
    if value > k - 1:
        raise ReductionContractError(f"cut is infeasible: flow value {value} > {k - 1}")
    slack = art.params["slack"]
    structured = set()
    for v, group in enumerate(lay["xt_edges"]):
        kept = [e for e in group if e not in F]
        if len(kept) <= slack:
            structured.update(group)
    structured = frozenset(structured)
    value = _max_st_flow(art.instance, structured)
    if value > k - 1:
        raise AssertionError(f"structuring broke feasibility: flow {value}")
    S = _residual_side(art, structured)
    gamma = src.neighbours(S)
    if len(S) < src.min_size:
        raise AssertionError("backward map produced a set below the size floor")
    if len(gamma) * N > len(structured):
        raise AssertionError("backward map lost the cost bound")
    return frozenset(S)


def _residual_side(art: ReductionArtifact, removed: frozenset) -> list[int]:
    """Preload the N|E| canonical paths, finish the max flow, read S off the source side."""
    g = art.instance.graph
    lay = art.layout
    src: SsveInstance = art.source
    net = flow.Network(g.node_count, True)
    arc = {}
    for idx, e in enumerate(g.edges):
        if idx in removed:
            continue
        arc[idx] = net.add_edge(e.u, e.v, e.capacity)

    def push(idx, frm):
        a = arc[idx]
        if g.edges[idx].u != frm:
            a ^= 1
        net.cap[a] -= 1
        net.cap[a ^ 1] += 1

    u_nodes = lay["u"]
    for u, v in src.edges:
        for pos, x in enumerate(lay["cliques"][v]):
            push(lay["sa"], lay["s"])
            push(lay["ax_edges"][v][pos], lay["a"])
            push(lay["ux_edges"][(u, x)], x)
            push(lay["bu_edges"][u], u_nodes[u])
            push(lay["bt"], lay["b"])
    net.max_flow(lay["s"], lay["t"])
    side = net.reachable(lay["s"])
    return [u for u in range(src.n_u) if u_nodes[u] in side]


# -- MinRep -> ED-kNMC ----------------------------------------------------------------


def minrep_to_edknmc(src: MinRepInstance, closure: bool = True) -> ReductionArtifact:
    """Cycle gadgets per constraint edge, padded so every pair needs k node-disjoint paths.

    Layout keys: ``label_u[u][a]`` / ``label_w[w][b]`` edge ids of the unit label edges,
    ``pairs[e] = (s_e, t_e)``, ``k_e`` list.

    The padding neighbourhood of each gadget is closed under the padding itself, so it
    separates the gadget from the rest of the graph.  ``closure=False`` pads only the
    neighbours within the union of gadgets; gadgets sharing a vertex then leak paths
    through each other's terminals and the cost equivalence breaks.
    """
    if not src.edges:
        raise ReductionContractError("MinRep source needs at least one edge")
    bld = _Builder()
    label_u, label_w, lnodes_u, lnodes_w = {}, {}, {}, {}

    def u_label(u, a):
        if (u, a) not in label_u:
            x, xb = bld.node(), bld.node()
            lnodes_u[(u, a)] = (x, xb)
            label_u[(u, a)] = bld.edge(x, xb, 1)
        return lnodes_u[(u, a)]

    def w_label(w, b):
        if (w, b) not in label_w:
            x, xb = bld.node(), bld.node()
            lnodes_w[(w, b)] = (x, xb)
            label_w[(w, b)] = bld.edge(x, xb, 1)
        return lnodes_w[(w, b)]

    for u in range(src.n_u):
        for a in range(src.n_l1):
            u_label(u, a)
    for w in range(src.n_w):
        for b in range(src.n_l2):
            w_label(w, b)

    def split(x, y, gadget):
        mid = bld.node()
        gadget.add(mid)
        bld.edge(x, mid)
        bld.edge(mid, y)

    pairs, gadgets, classes = [], [], []
    for u, w, pi in src.edges:
        s_e, t_e = bld.node(), bld.node()
        gadget = {s_e, t_e}
        nonempty = []
        for b in range(src.n_l2):
            cls = [a for a in range(src.n_l1) if pi[a] == b]
            if not cls:
                continue
            nonempty.append(b)
            prev = s_e
            for a in cls:
                x, xb = lnodes_u[(u, a)]
                gadget.update((x, xb))
                split(prev, x, gadget)
                prev = xb
            p0, pm, p1 = bld.node(), bld.node(), bld.node()
            gadget.update((p0, pm, p1))
            split(prev, p0, gadget)
            bld.edge(p0, pm)
            bld.edge(pm, p1)
            bld.edge(pm, t_e)
            y, yb = lnodes_w[(w, b)]
            gadget.update((y, yb))
            split(p1, y, gadget)
            split(yb, s_e, gadget)
        pairs.append((s_e, t_e))
        gadgets.append(gadget)
        classes.append(nonempty)
    adjacency: dict[int, set] = {}

    def link(x, y):
        bld.edge(x, y)
        adjacency.setdefault(x, set()).add(y)
        adjacency.setdefault(y, set()).add(x)

    for e in bld.edges:
        adjacency.setdefault(e.u, set()).add(e.v)
        adjacency.setdefault(e.v, set()).add(e.u)

    def boundary(gadget):
        out = set()
        for x in gadget:
            out |= adjacency.get(x, set())
        return out - gadget

    gamma_sets = [set() for _ in pairs]
    rounds = [boundary(gd) for gd in gadgets]
    while True:
        # a padding path through v makes s_e, t_e neighbours of v's gadget; with
        # closure=True those new neighbours are padded too, until nothing changes
        for i, (s_e, t_e) in enumerate(pairs):
            for v in sorted(rounds[i] - gamma_sets[i]):
                gamma_sets[i].add(v)
                link(s_e, v)
                link(v, t_e)
        if not closure:
            break
        rounds = [boundary(gd) for gd in gadgets]
        if all(rounds[i] <= gamma_sets[i] for i in range(len(pairs))):
            break
    gamma_sets = [sorted(gs) for gs in gamma_sets]
    k_e = [len(classes[i]) + len(gamma_sets[i]) for i in range(len(pairs))]
    k = max(k_e)
    for i, (s_e, t_e) in enumerate(pairs):
        for _ in range(k - k_e[i]):
            pad = bld.node()
            bld.edge(s_e, pad)
            bld.edge(pad, t_e)
    inst = CutInstance(bld.graph(), tuple(pairs), k, "ednode")
    layout = {"label_u": label_u, "label_w": label_w, "pairs": pairs, "k_e": k_e,
              "gamma": gamma_sets, "classes": classes}
    return ReductionArtifact("minrep", inst, src, layout, {"k": k, "r": len(pairs), "closure": closure})


def map_minrep_solutions(art: ReductionArtifact, direction: str, witness):
    """``forward``: labeling (labels_u, labels_w) -> edge set; ``backward``: edge set -> labeling."""
    src: MinRepInstance = art.source
    lay = art.layout
    if direction == "forward":
        labels_u, labels_w = witness
        removed = frozenset([lay["label_u"][(u, a)] for u in range(src.n_u) for a in sorted(labels_u[u])]
                            + [lay["label_w"][(w, b)] for w in range(src.n_w) for b in sorted(labels_w[w])])
        return removed
    if direction != "backward":
        raise ReductionContractError(f"unknown direction {direction!r}")
    Z = frozenset(witness)
    costs = art.instance.graph.cost_floats()
    if any(costs[e] == INF for e in Z):
        raise ReductionContractError("cut contains an infinite-cost edge")
    labels_u = [frozenset(a for a in range(src.n_l1) if lay["label_u"][(u, a)] in Z) for u in range(src.n_u)]
    labels_w = [frozenset(b for b in range(src.n_l2) if lay["label_w"][(w, b)] in Z) for w in range(src.n_w)]
    return labels_u, labels_w


def minrep_pair_connectivity(art: ReductionArtifact, removed) -> list[int]:
    g = art.instance.graph
    return [flow.node_connectivity(g, s, t, removed_edges=removed) for s, t in art.layout["pairs"]]


# -- vertex cover -> all-pairs ---------------------------------------------------------


def vc_to_allpairs(src: VcInstance, k: int = 3) -> ReductionArtifact:
    """Path-and-triangle gadget; a cover of size p gives an all-pairs cut of cost 2|E| + p.

    For k > 3 every infinite path link and every a_v - a_{v+1} link is repeated k-2 times.
    Layout: ``path[v]`` node list (a_v first, b_v last), ``unit[v]`` edge id of (a_v, b_v)
    or None for isolated vertices, ``sigma[e]`` node, ``sigma_links[e][x]`` the two edge ids
    joining sigma_e to the path link of endpoint x.
    """
    if k < 3:
        raise ReductionContractError("k < 3 is polynomial; use allpairs_exact instead")
    bld = _Builder()
    incident = [[idx for idx, (u, v) in enumerate(src.edges) if v == x or u == x] for x in range(src.n)]
    path, unit, link_pos = [], [], {}
    for v in range(src.n):
        nodes = [bld.node()]
        for pos, e_idx in enumerate(incident[v]):
            nodes.append(bld.node())
            for _ in range(k - 2):
                bld.edge(nodes[-2], nodes[-1])
            link_pos[(e_idx, v)] = (nodes[-2], nodes[-1])
        path.append(nodes)
        unit.append(bld.edge(nodes[0], nodes[-1], 1) if incident[v] else None)
    for v in range(src.n - 1):
        a0, a1 = path[v][0], path[v + 1][0]
        mid = bld.node()
        for _ in range(k - 2):
            bld.edge(a0, a1)
        bld.edge(a0, mid)
        bld.edge(mid, a1)
    sigma, sigma_links = [], []
    for e_idx, (u, v) in enumerate(src.edges):
        z = bld.node()
        links = {}
        for x in (u, v):
            p, q = link_pos[(e_idx, x)]
            links[x] = (bld.edge(z, p, 1), bld.edge(z, q, 1))
        sigma.append(z)
        sigma_links.append(links)
    g = bld.graph()
    inst = CutInstance(g, (), k, "allpairs", tuple(range(g.node_count)))
    layout = {"path": path, "unit": unit, "sigma": sigma, "sigma_links": sigma_links}
    return ReductionArtifact("vc", inst, src, layout, {"k": k, "offset": 2 * len(src.edges)})


def map_vc_solutions(art: ReductionArtifact, direction: str, witness):
    """``forward``: cover -> link set of cost 2|E| + |cover|; ``backward``: feasible cut -> cover."""
    src: VcInstance = art.source
    lay = art.layout
    if direction == "forward":
        cover = set(witness)
        if not src.is_cover(cover):
            raise ReductionContractError("witness is not a vertex cover")
        removed = set(lay["unit"][v] for v in cover if lay["unit"][v] is not None)
        for e_idx, (u, v) in enumerate(src.edges):
            other = v if u in cover else u
            removed.update(lay["sigma_links"][e_idx][other])
        return frozenset(removed)
    if direction != "backward":
        raise ReductionContractError(f"unknown direction {direction!r}")
    F = set(witness)
    costs = art.instance.graph.cost_floats()
    if any(costs[e] == INF for e in F):
        raise ReductionContractError("cut contains an infinite-cost edge")
    for e_idx, (u, v) in enumerate(src.edges):
        links = lay["sigma_links"][e_idx]
        full = [x for x in sorted((u, v)) if set(links[x]) <= F]
        if not full:
            raise ReductionContractError(f"cut leaves sigma node of edge {e_idx} attached to two paths")
        keep = full[0]
        other = v if keep == u else u
        if F & set(links[other]):
            F -= set(links[other])
            F.add(lay["unit"][other])
    cover = frozenset(v for v in range(src.n) if lay["unit"][v] is not None and lay["unit"][v] in F)
    if not src.is_cover(cover):
        raise AssertionError("backward map did not produce a cover")
    return cover


# -- source parsing / writing -------------------------------------------------------------


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def parse_source(text: str):
    rows = list(_lines(text))
    if not rows:
        raise ParseError(1, "empty source document")
    no, head = rows[0]
    kind = head[0]
    try:
        if kind == "ssve":
            if len(head) != 4:
                raise ParseError(no, "expected: ssve <|U|> <|V|> <alpha>")
            edges = [(int(r[1]), int(r[2])) for _, r in rows[1:] if r[0] == "e"]
            return SsveInstance(int(head[1]), int(head[2]), tuple(edges), Fraction(head[3]))
        if kind == "minrep":
            if len(head) != 5:
                raise ParseError(no, "expected: minrep <|U|> <|W|> <|L1|> <|L2|>")
            edges = [(int(r[1]), int(r[2]), tuple(int(x) for x in r[3:])) for _, r in rows[1:] if r[0] == "e"]
            return MinRepInstance(int(head[1]), int(head[2]), int(head[3]), int(head[4]), tuple(edges))
        if kind == "vc":
            if len(head) != 3:
                raise ParseError(no, "expected: vc <n> <m>")
            edges = [(int(r[1]), int(r[2])) for _, r in rows[1:] if r[0] == "e"]
            if len(edges) != int(head[2]):
                raise ParseError(no, f"header promises {head[2]} edges, found {len(edges)}")
            return VcInstance(int(head[1]), tuple(edges))
    except (ValueError, IndexError) as exc:
        if isinstance(exc, (ParseError, ReductionContractError)):
            raise
        raise ParseError(no, str(exc)) from exc
    raise ParseError(no, f"unknown source kind {kind!r}")


def write_source(src) -> str:
    if isinstance(src, SsveInstance):
        out = [f"ssve {src.n_u} {src.n_v} {src.alpha}"] + [f"e {u} {v}" for u, v in src.edges]
    elif isinstance(src, MinRepInstance):
        out = [f"minrep {src.n_u} {src.n_w} {src.n_l1} {src.n_l2}"]
        out += ["e {} {} {}".format(u, w, " ".join(map(str, pi))) for u, w, pi in src.edges]
    elif isinstance(src, VcInstance):
        out = [f"vc {src.n} {len(src.edges)}"] + [f"e {u} {v}" for u, v in src.edges]
    else:
        raise ReductionContractError("unknown source type")
    return "\n".join(out) + "\n"


def reduce_source(src, k: int | None = None) -> ReductionArtifact:
    if isinstance(src, SsveInstance):
        return ssve_to_kmic(src)
    if isinstance(src, MinRepInstance):
        return minrep_to_edknmc(src)
    if isinstance(src, VcInstance):
        return vc_to_allpairs(src, 3 if k is None else k)
    raise ReductionContractError("unknown source type")
