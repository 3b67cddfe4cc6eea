"""Multigraph data model, the ``kroute`` instance format, and random instances.

Instance format (UTF-8 text, ``#`` starts a comment)::

    kroute <variant> <n> <m> <r> <k>
    e <u> <v> <cost|inf> [capacity]        # m lines, edge id = order of appearance
    c <s> <t>                               # r lines, or for multiway/allpairs:
    T <t1> <t2> ...                         # one terminal line
    w <v> <cost|inf>                        # node costs (ndnode variant only)

Variants: ``edge`` (edge deletion, edge connectivity), ``ednode`` (edge deletion,
node connectivity), ``ndnode`` (node deletion, node connectivity), ``multiway``,
``allpairs`` and ``single`` (one pair, capacities honoured).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence, Union

INF = math.inf

Cost = Union[Fraction, float]  # Fraction for finite values, math.inf for undeletable

VARIANTS = ("edge", "ednode", "ndnode", "multiway", "allpairs", "single")
TERMINAL_VARIANTS = ("multiway", "allpairs")


class ParseError(ValueError):
    """Malformed instance document; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ValueError):
    """Structurally well-formed input that violates a model invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def parse_cost(token: str) -> Cost:
    if token == "inf":
        return INF
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"bad cost literal {token!r}") from None
    if value < 0:
        raise ValueError(f"negative cost {token!r}")
    return value


def format_cost(value: Cost) -> str:
    """Exact decimal rendering of a cost (denominator must be 2^a 5^b)."""
    if value == INF:
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"cost {value} has no finite decimal expansion")
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}".rstrip("0").rstrip(".")


def _as_cost(value) -> Cost:
    if isinstance(value, str):
        return parse_cost(value)
    if value == INF:
        return INF
    if isinstance(value, float):
        value = Fraction(str(value))
    return Fraction(value)


class Edge(NamedTuple):
    u: int
    v: int
    cost: Cost
    capacity: int = 1


@dataclass(frozen=True)
class MultiGraph:
    node_count: int
    edges: tuple[Edge, ...] = ()
    node_costs: tuple[Cost, ...] | None = None

    def __post_init__(self):
        edges = tuple(Edge(int(e[0]), int(e[1]), _as_cost(e[2]), int(e[3]) if len(e) > 3 else 1)
                      for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.node_costs is not None:
            object.__setattr__(self, "node_costs", tuple(_as_cost(c) for c in self.node_costs))
        if self.node_count < 0:
            raise ValidationError("node_count", "must be nonnegative")
        for idx, e in enumerate(edges):
            for end in (e.u, e.v):
                if not 0 <= end < self.node_count:
                    raise ValidationError(f"edges[{idx}]", f"endpoint {end} out of range")
            if e.cost != INF and e.cost < 0:
                raise ValidationError(f"edges[{idx}]", "negative cost")
            if e.capacity < 1:
                raise ValidationError(f"edges[{idx}]", "capacity must be a positive integer")
        if self.node_costs is not None:
            if len(self.node_costs) != self.node_count:
                raise ValidationError("node_costs", "length must equal node_count")
            if any(c != INF and c < 0 for c in self.node_costs):
                raise ValidationError("node_costs", "negative cost")

    @property
    def m(self) -> int:
        return len(self.edges)

    def cost_floats(self) -> list[float]:
        return [float(e.cost) for e in self.edges]

    def node_cost_floats(self) -> list[float]:
        if self.node_costs is None:
            raise ValidationError("node_costs", "graph has no node costs")
        return [float(c) for c in self.node_costs]

    def incident(self) -> list[list[int]]:
        """Edge ids incident to each node (self-loops listed once)."""
        inc: list[list[int]] = [[] for _ in range(self.node_count)]
        for idx, e in enumerate(self.edges):
            inc[e.u].append(idx)
            if e.v != e.u:
                inc[e.v].append(idx)
        return inc

    def has_self_loops(self) -> bool:
        return any(e.u == e.v for e in self.edges)


@dataclass(frozen=True)
class CutInstance:
    graph: MultiGraph
    commodities: tuple[tuple[int, int], ...] = ()
    k: int = 1
    variant: str = "edge"
    terminals: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "commodities", tuple((int(s), int(t)) for s, t in self.commodities))
        object.__setattr__(self, "terminals", tuple(int(t) for t in self.terminals))
        n = self.graph.node_count
        if self.variant not in VARIANTS:
            raise ValidationError("variant", f"unknown variant {self.variant!r}")
        if self.k < 1:
            raise ValidationError("k", "must be >= 1")
        for idx, (s, t) in enumerate(self.commodities):
            if not (0 <= s < n and 0 <= t < n):
                raise ValidationError(f"commodities[{idx}]", "node id out of range")
            if s == t:
                raise ValidationError(f"commodities[{idx}]", "s must differ from t")
        for t in self.terminals:
            if not 0 <= t < n:
                raise ValidationError("terminals", f"node id {t} out of range")
        if len(set(self.terminals)) != len(self.terminals):
            raise ValidationError("terminals", "duplicate terminal")
        if self.variant in TERMINAL_VARIANTS:
            if self.commodities:
                raise ValidationError("commodities", f"{self.variant} stores terminals, not pairs")
            if self.variant == "multiway" and len(self.terminals) < 1:
                raise ValidationError("terminals", "multiway needs at least one terminal")
        else:
            if self.terminals:
                raise ValidationError("terminals", f"{self.variant} takes explicit pairs")
            if not self.commodities:
                raise ValidationError("commodities", "need at least one commodity")
            if self.variant == "single" and len(self.commodities) != 1:
                raise ValidationError("commodities", "single-pair variant takes exactly one pair")
        if self.variant == "ndnode" and self.graph.node_costs is None:
            raise ValidationError("node_costs", "node-deletion variant requires node costs")

    @property
    def r(self) -> int:
        if self.variant in TERMINAL_VARIANTS:
            return len(self.terminals)
        return len(self.commodities)

    def pairs(self) -> list[tuple[int, int]]:
        """Explicit commodity list; terminal variants expand to all terminal pairs."""
        if self.variant in TERMINAL_VARIANTS:
            return list(itertools.combinations(self.terminals, 2))
        return list(self.commodities)

    @property
    def node_connectivity(self) -> bool:
        return self.variant in ("ednode", "ndnode")

    @property
    def deletes_nodes(self) -> bool:
        return self.variant == "ndnode"

    def endpoint_set(self) -> set[int]:
        return {v for pair in self.pairs() for v in pair} | set(self.terminals)


# -- parsing / writing ---------------------------------------------------------


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line, f"expected integer for {what}, got {tok!r}") from None


def parse_instance(text: str) -> CutInstance:
    header = None
    edges: list[Edge] = []
    pairs: list[tuple[int, int]] = []
    terminals: list[int] | None = None
    node_costs: dict[int, Cost] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if header is None:
            if tok[0] != "kroute" or len(tok) != 6:
                raise ParseError(lineno, "header must be 'kroute <variant> <n> <m> <r> <k>'")
            if tok[1] not in VARIANTS:
                raise ParseError(lineno, f"unknown variant {tok[1]!r}")
            header = (tok[1], *(_int(t, lineno, name) for t, name in zip(tok[2:], "nmrk")))
            continue
        kind = tok[0]
        if kind == "e":
            if len(tok) not in (4, 5):
                raise ParseError(lineno, "edge line is 'e <u> <v> <cost|inf> [capacity]'")
            try:
                cost = parse_cost(tok[3])
            except ValueError as exc:
                raise ValidationError(f"edge {len(edges)} cost", str(exc)) from None
            cap = _int(tok[4], lineno, "capacity") if len(tok) == 5 else 1
            edges.append(Edge(_int(tok[1], lineno, "u"), _int(tok[2], lineno, "v"), cost, cap))
        elif kind == "c":
            if len(tok) != 3:
                raise ParseError(lineno, "commodity line is 'c <s> <t>'")
            pairs.append((_int(tok[1], lineno, "s"), _int(tok[2], lineno, "t")))
        elif kind == "T":
            if terminals is not None:
                raise ParseError(lineno, "duplicate terminal line")
            terminals = [_int(t, lineno, "terminal") for t in tok[1:]]
        elif kind == "w":
            if len(tok) != 3:
                raise ParseError(lineno, "node cost line is 'w <v> <cost|inf>'")
            v = _int(tok[1], lineno, "v")
            try:
                node_costs[v] = parse_cost(tok[2])
            except ValueError as exc:
                raise ValidationError(f"node {v} cost", str(exc)) from None
        else:
            raise ParseError(lineno, f"unknown record type {kind!r}")
    if header is None:
        raise ParseError(1, "missing header")
    variant, n, m, r, k = header
    if len(edges) != m:
        raise ValidationError("m", f"header declares {m} edges, found {len(edges)}")
    costs = None
    if node_costs:
        missing = [v for v in range(n) if v not in node_costs]
        if missing or any(not 0 <= v < n for v in node_costs):
            raise ValidationError("node_costs", "need exactly one w line per node")
        costs = tuple(node_costs[v] for v in range(n))
    graph = MultiGraph(n, tuple(edges), costs)
    if variant in TERMINAL_VARIANTS:
        if pairs:
            raise ValidationError("commodities", f"{variant} takes a T line, not c lines")
        if terminals is None:
            if variant == "multiway":
                raise ValidationError("terminals", "multiway needs a T line")
            terminals = list(range(n))
        if len(terminals) != r:
            raise ValidationError("r", f"header declares r={r}, T line has {len(terminals)}")
        return CutInstance(graph, (), k, variant, tuple(terminals))
    if terminals is not None:
        raise ValidationError("terminals", f"{variant} takes c lines, not a T line")
    if len(pairs) != r:
        raise ValidationError("r", f"header declares r={r}, found {len(pairs)} commodities")
    return CutInstance(graph, tuple(pairs), k, variant)


def write_instance(inst: CutInstance) -> str:
    g = inst.graph
    lines = [f"kroute {inst.variant} {g.node_count} {g.m} {inst.r} {inst.k}"]
    for e in g.edges:
        rec = f"e {e.u} {e.v} {format_cost(e.cost)}"
        if e.capacity != 1:
            rec += f" {e.capacity}"
        lines.append(rec)
    if inst.variant in TERMINAL_VARIANTS:
        lines.append(" ".join(["T", *map(str, inst.terminals)]))
    else:
        lines.extend(f"c {s} {t}" for s, t in inst.commodities)
    if g.node_costs is not None:
        lines.extend(f"w {v} {format_cost(c)}" for v, c in enumerate(g.node_costs))
    return "\n".join(lines) + "\n"


# -- random instances ------------------------------------------------------------


def _draw_cost(rng: random.Random, cost_range) -> Fraction:
    lo, hi = cost_range
    return Fraction(rng.randint(int(lo), int(hi)))


def _draw_pairs(rng: random.Random, n: int, r: int, avoid=frozenset()) -> list[tuple[int, int]]:
    pool = [p for p in itertools.combinations(range(n), 2) if p not in avoid]
    if r > len(pool):
        raise ValidationError("r", f"only {len(pool)} distinct pairs on {n} nodes")
    return [tuple(p) for p in rng.sample(pool, r)]


def _finish(rng, n, edges, params, pairs=None) -> CutInstance:
    variant = params.get("variant", "edge")
    k = int(params.get("k", 2))
    r = int(params.get("r", 1))
    node_costs = None
    if variant == "ndnode":
        node_costs = tuple(_draw_cost(rng, params.get("node_cost_range", (1, 1))) for _ in range(n))
    graph = MultiGraph(n, tuple(edges), node_costs)
    if variant in TERMINAL_VARIANTS:
        terms = tuple(range(n)) if variant == "allpairs" else tuple(sorted(rng.sample(range(n), r)))
        return CutInstance(graph, (), k, variant, terms)
    if pairs is None:
        # node-connectivity relaxations need nonadjacent endpoints, so never draw adjacent ones
        avoid = (frozenset((min(e.u, e.v), max(e.u, e.v)) for e in edges)
                 if variant in ("ndnode", "ednode") else frozenset())
        pairs = _draw_pairs(rng, n, r, avoid)
    return CutInstance(graph, tuple(pairs), k, variant)


def generate_instance(model: str, params: dict, seed: int) -> CutInstance:
    """Random instance from ``gnp``, ``grid`` or ``planted``; pure in its arguments.

    Common params: ``r``, ``k``, ``variant``, ``cost_range`` (inclusive integer
    range, default (1, 1)).  ``gnp``: ``n``, ``p``.  ``grid``: ``width``,
    ``height`` (node id = row * width + col).  ``planted``: ``cluster_sizes``,
    ``crossing`` (edges between consecutive clusters, round robin), ``p_in``
    (intra-cluster edge probability, default 1).  Cluster j occupies a contiguous
    block of ids; commodities always straddle two clusters.
    """
    rng = random.Random(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cost_range = params.get("cost_range", (1, 1))
    if model == "gnp":
        n, p = int(params["n"]), float(params["p"])
        if n < 2:
            raise ValidationError("n", "need n >= 2")
        if not 0.0 <= p <= 1.0:
            raise ValidationError("p", "edge probability must lie in [0, 1]")
        edges = [Edge(u, v, _draw_cost(rng, cost_range))
                 for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
        return _finish(rng, n, edges, params)
    if model == "grid":
        w, h = int(params["width"]), int(params["height"])
        if w < 1 or h < 1 or w * h < 2:
            raise ValidationError("width", "grid needs at least 2 nodes")
        edges = []
        for row in range(h):
            for col in range(w):
                v = row * w + col
                if col + 1 < w:
                    edges.append(Edge(v, v + 1, _draw_cost(rng, cost_range)))
                if row + 1 < h:
                    edges.append(Edge(v, v + w, _draw_cost(rng, cost_range)))
        return _finish(rng, w * h, edges, params)
    if model == "planted":
        sizes = [int(s) for s in params["cluster_sizes"]]
        crossing = int(params["crossing"])
        p_in = float(params.get("p_in", 1.0))
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValidationError("cluster_sizes", "need at least two nonempty clusters")
        if crossing < 1:
            raise ValidationError("crossing", "need at least one crossing edge")
        if not 0.0 <= p_in <= 1.0:
            raise ValidationError("p_in", "edge probability must lie in [0, 1]")
        starts = list(itertools.accumulate([0] + sizes))
        n = starts[-1]
        edges = []
        for j, size in enumerate(sizes):
            block = range(starts[j], starts[j] + size)
            edges.extend(Edge(u, v, _draw_cost(rng, cost_range))
                         for u, v in itertools.combinations(block, 2) if rng.random() < p_in)
        for c in range(crossing):
            a = c % (len(sizes) - 1) if len(sizes) > 2 else 0
            u = rng.randrange(starts[a], starts[a + 1])
            v = rng.randrange(starts[a + 1], starts[a + 2])
            edges.append(Edge(u, v, _draw_cost(rng, cost_range)))
        r = int(params.get("r", 1))
        cluster_of = [j for j, size in enumerate(sizes) for _ in range(size)]
        pool = [(u, v) for u, v in itertools.combinations(range(n), 2) if cluster_of[u] != cluster_of[v]]
        pairs = [tuple(p) for p in rng.sample(pool, min(r, len(pool)))]
        return _finish(rng, n, edges, params, pairs=pairs)
    raise ValidationError("model", f"unknown model {model!r}")


def planted_crossing_edges(inst: CutInstance, cluster_sizes: Sequence[int]) -> list[int]:
    """Edge ids joining different clusters of a ``planted`` instance."""
    cluster_of = [j for j, size in enumerate(cluster_sizes) for _ in range(size)]
    return [idx for idx, e in enumerate(inst.graph.edges) if cluster_of[e.u] != cluster_of[e.v]]


def induced_edges(g: MultiGraph, nodes: Iterable[int]) -> list[int]:
    """E(S): ids of edges with both endpoints in ``nodes``."""
    inside = set(nodes)
    return [idx for idx, e in enumerate(g.edges) if e.u in inside and e.v in inside]
