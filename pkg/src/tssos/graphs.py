"""Term-sparsity graphs on monomial bases and their chordal extensions.

Nodes are basis monomials.  Two distinct monomials are linked when their sum
is a support exponent we care about; every node is implicitly linked to
itself, so the diagonal (squares of basis monomials) is always part of a
graph's support.  Edges are stored as a frozenset of index pairs (i, j) with
i < j against the graded lex order of the basis.

The sparse relaxation machinery iterates two steps: a support extension that
adds any edge whose sum is already realized by the current graph, and a
chordal extension that completes the result into a chordal graph.  Running
the pair to a fixed point gives the graph sequence the block structure of the
relaxations is read from.

Chordal extension modes:

* ``approx_min``: leave the graph alone when it is already chordal (checked
  by maximum cardinality search); otherwise add fill edges along a
  minimum-degree elimination ordering, breaking degree ties by lowest node
  index so runs are reproducible.
* ``min_fill``: same shape, but the elimination picks the node that creates
  the fewest fill edges at each step.
* ``block_closure``: complete every connected component (the coarsest chordal
  extension; cheap, bigger blocks).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .basis import MonomialBasis, standard_basis
from .poly import Exponent, Polynomial, PopProblem

Edge = Tuple[int, int]

EXTENSION_MODES = ("approx_min", "min_fill", "block_closure")


class MonomialGraph:
    """A graph over the monomials of a basis, self-loops implicit."""

    __slots__ = ("basis", "edges")

    def __init__(self, basis: MonomialBasis, edges: Iterable[Edge]):
        n = len(basis)
        norm = set()
        for i, j in edges:
            if i == j:
                continue  # self-loops are implicit
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range for {n} nodes")
            norm.add((min(i, j), max(i, j)))
        self.basis = basis
        self.edges: FrozenSet[Edge] = frozenset(norm)

    @property
    def n_nodes(self) -> int:
        return len(self.basis)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return True
        return (min(i, j), max(i, j)) in self.edges

    def adjacency(self) -> Dict[int, Set[int]]:
        adj: Dict[int, Set[int]] = {i: set() for i in range(self.n_nodes)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def support(self) -> Set[Exponent]:
        """All exponents realized as a sum of two adjacent nodes.

        The diagonal contributes 2*beta for every node beta, matching the
        implicit self-loops.
        """
        monos = self.basis.monos
        out = {tuple(2 * a for a in m) for m in monos}
        for i, j in self.edges:
            out.add(tuple(x + y for x, y in zip(monos[i], monos[j])))
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MonomialGraph)
            and self.basis == other.basis
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"MonomialGraph(nodes={self.n_nodes}, edges={self.n_edges})"


def tsp_graph(
    f: Polynomial,
    basis: MonomialBasis,
    extra_support: Iterable[Exponent] = (),
) -> MonomialGraph:
    """Initial sparsity graph: link monomials whose sum hits the support.

    The target set is supp(f), any extra support exponents (constraint
    supports in the constrained setting), and all doubled basis monomials.
    """
    monos = basis.monos
    target = set(f.support())
    target.update(tuple(a) for a in extra_support)
    target.update(tuple(2 * x for x in m) for m in monos)
    edges = []
    r = len(monos)
    for i in range(r):
        mi = monos[i]
        for j in range(i + 1, r):
            s = tuple(x + y for x, y in zip(mi, monos[j]))
            if s in target:
                edges.append((i, j))
    return MonomialGraph(basis, edges)


def support_extension(graph: MonomialGraph) -> MonomialGraph:
    """Add every edge whose sum is already realized by the graph."""
    monos = graph.basis.monos
    supp = graph.support()
    edges = set(graph.edges)
    r = len(monos)
    for i in range(r):
        mi = monos[i]
        for j in range(i + 1, r):
            if (i, j) in edges:
                continue
            if tuple(x + y for x, y in zip(mi, monos[j])) in supp:
                edges.add((i, j))
    return MonomialGraph(graph.basis, edges)


# -- chordality ------------------------------------------------------------


def _mcs_order(adj: Dict[int, Set[int]]) -> List[int]:
    """Maximum cardinality search visit order (ties to the lowest index)."""
    n = len(adj)
    weight = [0] * n
    seen = [False] * n
    order = []
    for _ in range(n):
        v = max((w, -u) for u, w in enumerate(weight) if not seen[u])[1]
        v = -v
        seen[v] = True
        order.append(v)
        for u in adj[v]:
            if not seen[u]:
                weight[u] += 1
    return order


def peo(graph: MonomialGraph) -> Optional[List[int]]:
    """A perfect elimination ordering, or None if the graph is not chordal.

    The reverse of an MCS visit order is a perfect elimination ordering
    exactly when the graph is chordal; the candidate is verified directly.
    """
    adj = graph.adjacency()
    order = list(reversed(_mcs_order(adj)))
    pos = {v: p for p, v in enumerate(order)}
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        first = min(later, key=lambda u: pos[u])
        rest = set(later) - {first}
        if not rest <= adj[first]:
            return None
    return order


def is_chordal(graph: MonomialGraph) -> bool:
    return peo(graph) is not None


def _connected_components(adj: Dict[int, Set[int]]) -> List[List[int]]:
    seen = set()
    comps = []
    for start in range(len(adj)):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def _elimination_fill(adj: Dict[int, Set[int]], rule: str) -> Set[Edge]:
    """Fill edges produced by a greedy elimination ordering.

    rule 'degree' picks the node of minimum current degree, rule 'fill' the
    node whose neighborhood needs the fewest new edges.  Ties go to the
    lowest index.
    """
    work = {v: set(nb) for v, nb in adj.items()}
    alive = sorted(work)
    fills: Set[Edge] = set()
    while alive:
        if rule == "degree":
            v = min(alive, key=lambda u: (len(work[u]), u))
        else:
            def fill_count(u: int) -> int:
                nbs = list(work[u])
                missing = 0
                for a in range(len(nbs)):
                    for b in range(a + 1, len(nbs)):
                        if nbs[b] not in work[nbs[a]]:
                            missing += 1
                return missing

            v = min(alive, key=lambda u: (fill_count(u), u))
        nbs = sorted(work[v])
        for a in range(len(nbs)):
            for b in range(a + 1, len(nbs)):
                p, q = nbs[a], nbs[b]
                if q not in work[p]:
                    work[p].add(q)
                    work[q].add(p)
                    fills.add((min(p, q), max(p, q)))
        for u in nbs:
            work[u].discard(v)
        del work[v]
        alive.remove(v)
    return fills


def chordal_extension(graph: MonomialGraph, mode: str = "approx_min") -> MonomialGraph:
    """Extend a graph to a chordal supergraph.

    Already-chordal graphs are returned unchanged in the elimination modes,
    so trees, complete graphs and other chordal inputs keep their exact edge
    set.
    """
    if mode not in EXTENSION_MODES:
        raise ValueError(f"unknown extension mode {mode!r}; pick one of {EXTENSION_MODES}")
    adj = graph.adjacency()
    if mode == "block_closure":
        edges = set(graph.edges)
        for comp in _connected_components(adj):
            for a in range(len(comp)):
                for b in range(a + 1, len(comp)):
                    edges.add((comp[a], comp[b]))
        return MonomialGraph(graph.basis, edges)
    if is_chordal(graph):
        return graph
    rule = "degree" if mode == "approx_min" else "fill"
    fills = _elimination_fill(adj, rule)
    return MonomialGraph(graph.basis, set(graph.edges) | fills)


# -- maximal cliques --------------------------------------------------------


@dataclass(frozen=True)
class CliqueDecomposition:
    """Maximal cliques of a chordal graph, as sorted node index tuples."""

    basis: MonomialBasis
    cliques: Tuple[Tuple[int, ...], ...]

    @property
    def sizes(self) -> List[int]:
        return sorted((len(c) for c in self.cliques), reverse=True)

    @property
    def max_clique(self) -> int:
        return max(len(c) for c in self.cliques) if self.cliques else 0

    def monomials(self, which: int) -> List[Exponent]:
        return [self.basis.monos[i] for i in self.cliques[which]]


def maximal_cliques(graph: MonomialGraph) -> CliqueDecomposition:
    """Enumerate maximal cliques along a perfect elimination ordering.

    Raises ValueError when the graph is not chordal: callers must extend
    first.
    """
    order = peo(graph)
    if order is None:
        raise ValueError("graph is not chordal; apply chordal_extension first")
    adj = graph.adjacency()
    pos = {v: p for p, v in enumerate(order)}
    candidates = []
    for v in order:
        c = frozenset({v} | {u for u in adj[v] if pos[u] > pos[v]})
        candidates.append(c)
    # drop candidates contained in another one
    candidates.sort(key=len, reverse=True)
    kept: List[FrozenSet[int]] = []
    for c in candidates:
        if not any(c <= k for k in kept):
            kept.append(c)
    cliques = sorted(tuple(sorted(c)) for c in kept)
    return CliqueDecomposition(graph.basis, tuple(cliques))


# -- graph iterations --------------------------------------------------------


@dataclass
class GraphSequence:
    """Graphs per iteration order; levels[k][j] is constraint j's graph.

    Unconstrained sequences have a single entry per level (j = 0).  Level 0
    holds the raw sparsity pattern; levels >= 1 are chordal.  stabilized_at
    is the smallest k >= 1 whose level is a fixed point of the iteration,
    or None if that was not reached within the computed range.
    """

    levels: List[List[MonomialGraph]]
    mode: str
    stabilized_at: Optional[int]

    @property
    def order(self) -> int:
        return len(self.levels) - 1

    @property
    def graphs(self) -> List[List[MonomialGraph]]:
        return self.levels

    def at(self, k: int) -> List[MonomialGraph]:
        return self.levels[k]


def _levels_equal(a: List[MonomialGraph], b: List[MonomialGraph]) -> bool:
    return len(a) == len(b) and all(x.edges == y.edges for x, y in zip(a, b))


def iterate_unconstrained(
    f: Polynomial,
    basis: MonomialBasis,
    k: int = 1,
    mode: str = "approx_min",
    probe_stabilization: bool = True,
) -> GraphSequence:
    """Run the support-extension / chordal-extension loop k times.

    Nestedness across k is automatic: the support extension always contains
    its argument and the chordal extension only adds edges.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    g0 = tsp_graph(f, basis)
    levels = [[g0]]
    stabilized = None
    cur = g0
    steps = k if not probe_stabilization else k + 1
    for step in range(1, steps + 1):
        nxt = chordal_extension(support_extension(cur), mode)
        if nxt.edges == cur.edges:
            stabilized = max(1, step - 1)
            break
        if step <= k:
            levels.append([nxt])
        cur = nxt
    while len(levels) < k + 1:
        levels.append([cur])
    return GraphSequence(levels=levels, mode=mode, stabilized_at=stabilized)


def iterate_constrained(
    pop: PopProblem,
    d_hat: int,
    k: int = 1,
    mode: str = "approx_min",
    moment_basis: MonomialBasis | None = None,
    seed: GraphSequence | None = None,
    probe_stabilization: bool = True,
) -> GraphSequence:
    """Graph iteration for a constrained relaxation of order d_hat.

    The moment graph (j = 0) lives on monomials of degree <= d_hat (or on a
    caller-provided shrunken basis); each constraint g_j gets a graph on
    monomials of degree <= d_hat - ceil(deg(g_j)/2).  Per iteration the
    moment graph is support-extended and the constraint graphs are rebuilt
    from the previous moment support: g_j links {beta, gamma} whenever some
    exponent of g_j shifted by beta + gamma lands in that support.  Each
    graph is seeded with its predecessor's edges before the chordal
    extension, which keeps the levels nested even though the extension
    heuristic is not monotone by itself.

    A seed sequence from a lower relaxation order can be supplied to keep
    graphs nested across d_hat as well; its edges are embedded by monomial
    identity and unioned in at every level.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    f = pop.objective
    n = pop.nvars
    d_min = (f.degree() + 1) // 2
    half_degs = [(g.degree() + 1) // 2 for g in pop.constraints]
    if half_degs:
        d_min = max(d_min, max(half_degs))
    if d_hat < d_min:
        raise ValueError(f"relaxation order {d_hat} below minimum {d_min}")
    b0 = moment_basis if moment_basis is not None else standard_basis(n, d_hat)
    if (0,) * n not in b0:
        raise ValueError("constant monomial missing from the moment basis")
    loc_bases = [standard_basis(n, d_hat - dj) for dj in half_degs]
    extra = set()
    for g in pop.constraints:
        extra |= g.support()

    def embedded_seed_edges(level: int, j: int, target_basis: MonomialBasis) -> Set[Edge]:
        if seed is None:
            return set()
        lv = min(level, len(seed.levels) - 1)
        if j >= len(seed.levels[lv]):
            return set()
        src = seed.levels[lv][j]
        out: Set[Edge] = set()
        for a, b in src.edges:
            ma, mb = src.basis.monos[a], src.basis.monos[b]
            if ma in target_basis and mb in target_basis:
                ia, ib = target_basis.index(ma), target_basis.index(mb)
                out.add((min(ia, ib), max(ia, ib)))
        return out

    g0 = tsp_graph(f, b0, extra_support=extra)
    if seed is not None:
        g0 = MonomialGraph(b0, set(g0.edges) | embedded_seed_edges(0, 0, b0))
    placeholders = [MonomialGraph(bj, ()) for bj in loc_bases]
    levels: List[List[MonomialGraph]] = [[g0] + placeholders]
    stabilized = None
    steps = k if not probe_stabilization else k + 1
    for step in range(1, steps + 1):
        prev = levels[min(step - 1, len(levels) - 1)]
        moment_prev = prev[0]
        moment_supp = moment_prev.support()
        new_level = []
        edges0 = set(support_extension(moment_prev).edges)
        edges0 |= embedded_seed_edges(step, 0, b0)
        new_moment = chordal_extension(MonomialGraph(b0, edges0), mode)
        new_level.append(new_moment)
        for j, g in enumerate(pop.constraints):
            bj = loc_bases[j]
            monos = bj.monos
            gsupp = sorted(g.support())
            edges = set(prev[j + 1].edges)
            for a in range(len(monos)):
                for b in range(a + 1, len(monos)):
                    if (a, b) in edges:
                        continue
                    base_sum = tuple(x + y for x, y in zip(monos[a], monos[b]))
                    for ga in gsupp:
                        if tuple(x + y for x, y in zip(ga, base_sum)) in moment_supp:
                            edges.add((a, b))
                            break
            edges |= embedded_seed_edges(step, j + 1, bj)
            new_graph = chordal_extension(MonomialGraph(bj, edges), mode)
            new_level.append(new_graph)
        if step >= 2 and _levels_equal(new_level, levels[-1]):
            stabilized = step - 1
            break
        if step <= k:
            levels.append(new_level)
        else:
            break
    while len(levels) < k + 1:
        levels.append(levels[-1])
    return GraphSequence(levels=levels, mode=mode, stabilized_at=stabilized)


def clique_report(graph: MonomialGraph, stabilized: bool) -> dict:
    """Census of a chordal graph's cliques in plain JSON-friendly form."""
    dec = maximal_cliques(graph)
    return {
        "clique_sizes": dec.sizes,
        "max_clique": dec.max_clique,
        "n_edges": graph.n_edges,
        "stabilized": bool(stabilized),
    }
