import itertools
import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest

from tssos.basis import MonomialBasis, newton_half_basis, standard_basis
from tssos.graphs import (
    EXTENSION_MODES,
    MonomialGraph,
    chordal_extension,
    clique_report,
    is_chordal,
    iterate_constrained,
    iterate_unconstrained,
    maximal_cliques,
    peo,
    support_extension,
    tsp_graph,
)
from tssos.poly import Polynomial, parse_polynomial, parse_pop

EX33 = (
    "x1^2 - 2*x1*x2 + 3*x2^2 - 2*x1^2*x2 + 2*x1^2*x2^2 - 2*x2*x3 + 6*x3^2"
    " + 18*x2^2*x3 - 54*x2*x3^2 + 142*x2^2*x3^2"
)


def to_nx(g: MonomialGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n_nodes))
    h.add_edges_from(g.edges)
    return h


def random_monomial_graph(rng, n_nodes=8, p=0.3):
    basis = MonomialBasis(1, [(i,) for i in range(n_nodes)])
    edges = [
        (i, j)
        for i in range(n_nodes)
        for j in range(i + 1, n_nodes)
        if rng.random() < p
    ]
    return MonomialGraph(basis, edges)


def test_monomial_graph_normalizes_edges():
    basis = standard_basis(1, 3)
    g = MonomialGraph(basis, [(2, 0), (0, 2), (1, 1)])
    assert g.edges == frozenset({(0, 2)})
    assert g.has_edge(1, 1)  # implicit self-loop
    assert not g.has_edge(0, 1)
    with pytest.raises(ValueError):
        MonomialGraph(basis, [(0, 9)])


def test_graph_support_includes_diagonal():
    basis = MonomialBasis(1, [(0,), (1,), (3,)])
    g = MonomialGraph(basis, [(0, 2)])
    assert g.support() == {(0,), (2,), (6,), (3,)}


def test_tsp_graph_running_example_edges():
    f = parse_polynomial(EX33, 3)
    basis = newton_half_basis(f)
    names = {m: i for i, m in enumerate(basis.monos)}
    one, x1, x2, x3 = names[(0, 0, 0)], names[(1, 0, 0)], names[(0, 1, 0)], names[(0, 0, 1)]
    x1x2, x2x3 = names[(1, 1, 0)], names[(0, 1, 1)]
    want = {
        tuple(sorted(e))
        for e in [
            (one, x1x2),
            (one, x2x3),
            (x1, x2),
            (x1, x1x2),
            (x2, x3),
            (x2, x2x3),
            (x3, x2x3),
        ]
    }
    g0 = tsp_graph(f, basis)
    assert g0.edges == frozenset(want)


def test_tsp_graph_links_all_doubled_basis_sums():
    # beta + gamma = 2*delta with delta a basis member must be an edge even
    # when the support misses it
    f = parse_polynomial("x1^4 + x2^4", 2)
    basis = standard_basis(2, 2)
    g = tsp_graph(f, basis)
    i = basis.index((0, 0))
    j = basis.index((2, 0))
    k = basis.index((0, 2))
    assert g.has_edge(i, j)  # 1 * x1^2 = (x1)^2
    assert g.has_edge(j, k)  # x1^2 * x2^2 = (x1 x2)^2


def test_support_extension_fixed_point_on_tsp_graphs():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        d = int(rng.integers(1, 3))
        pool = standard_basis(n, 2 * d).monos
        pick = [m for m in pool if rng.random() < 0.3]
        f = Polynomial.zero(n)
        for m in pick:
            f = f + Polynomial.monomial(n, m, 1.0)
        if not f.support():
            continue
        g0 = tsp_graph(f, standard_basis(n, d))
        assert support_extension(g0).edges == g0.edges


def test_support_extension_adds_realized_sums():
    basis = MonomialBasis(1, [(0,), (1,), (2,)])
    # only edge 0-2: support holds 2 = 0+2, plus diagonal {0, 2, 4}
    g = MonomialGraph(basis, [(0, 2)])
    se = support_extension(g)
    # 1+1 = 2 is realized, so the pair (1, 1) is a loop (implicit); edge
    # (0, 2) realizes 2 which equals 1+1 -> nothing new between distinct
    # nodes except (0,2) itself; node 1 pairs: 0+1=1 not in support,
    # 1+2=3 not in support
    assert se.edges == g.edges
    g2 = MonomialGraph(basis, [(1, 2)])  # support gains 3 = 1+2
    se2 = support_extension(g2)
    # 0+... 0 pairs: 0+1=1 no, 0+2=2 yes via diagonal of node 1
    assert se2.has_edge(0, 2)


def test_chordal_extension_identity_on_chordal_graphs():
    rng = np.random.default_rng(17)
    for _ in range(20):
        g = random_monomial_graph(rng, n_nodes=9, p=0.25)
        h = to_nx(g)
        if not nx.is_chordal(h):
            # complete a cycle to make it chordal via networkx, then re-wrap
            filled, _ = nx.complete_to_chordal_graph(h)
            g = MonomialGraph(g.basis, filled.edges())
        for mode in ("approx_min", "min_fill"):
            ext = chordal_extension(g, mode)
            assert ext.edges == g.edges, mode


def test_chordal_extension_produces_chordal_supergraphs():
    rng = np.random.default_rng(23)
    for trial in range(25):
        g = random_monomial_graph(rng, n_nodes=10, p=0.3)
        for mode in EXTENSION_MODES:
            ext = chordal_extension(g, mode)
            assert g.edges <= ext.edges
            assert nx.is_chordal(to_nx(ext)), mode
            assert is_chordal(ext) == nx.is_chordal(to_nx(ext))


def test_six_cycle_gets_three_fills():
    basis = MonomialBasis(1, [(i,) for i in range(6)])
    cycle = MonomialGraph(basis, [(i, (i + 1) % 6) for i in range(6)])
    for mode in ("approx_min", "min_fill"):
        ext = chordal_extension(cycle, mode)
        assert len(ext.edges) == 9, mode  # 6 cycle edges + 3 fills
    block = chordal_extension(cycle, "block_closure")
    assert len(block.edges) == 15  # one complete component


def test_block_closure_completes_components():
    basis = MonomialBasis(1, [(i,) for i in range(7)])
    g = MonomialGraph(basis, [(0, 1), (1, 2), (4, 5)])
    ext = chordal_extension(g, "block_closure")
    dec = maximal_cliques(ext)
    assert sorted(dec.cliques) == [(0, 1, 2), (3,), (4, 5), (6,)]


def test_unknown_mode_rejected():
    basis = MonomialBasis(1, [(0,), (1,)])
    g = MonomialGraph(basis, [])
    with pytest.raises(ValueError):
        chordal_extension(g, "different")


def test_maximal_cliques_match_networkx():
    rng = np.random.default_rng(31)
    for trial in range(25):
        g = random_monomial_graph(rng, n_nodes=10, p=0.35)
        ext = chordal_extension(g, "approx_min")
        mine = {frozenset(c) for c in maximal_cliques(ext).cliques}
        ref = {frozenset(c) for c in nx.find_cliques(to_nx(ext))}
        assert mine == ref


def test_maximal_cliques_requires_chordal():
    basis = MonomialBasis(1, [(i,) for i in range(4)])
    c4 = MonomialGraph(basis, [(0, 1), (1, 2), (2, 3), (0, 3)])
    with pytest.raises(ValueError):
        maximal_cliques(c4)


def test_peo_is_a_perfect_elimination_ordering():
    rng = np.random.default_rng(41)
    for trial in range(10):
        g = random_monomial_graph(rng, n_nodes=9, p=0.3)
        ext = chordal_extension(g, "min_fill")
        order = peo(ext)
        assert sorted(order) == list(range(ext.n_nodes))
        adj = ext.adjacency()
        pos = {v: i for i, v in enumerate(order)}
        for idx, v in enumerate(order):
            later = [u for u in adj[v] if pos[u] > idx]
            if not later:
                continue
            first = min(later, key=lambda u: pos[u])
            rest = set(later) - {first}
            assert rest <= adj[first]


def f_n_polynomial(n):
    total = Polynomial.zero(n)
    for i in range(1, n + 1):
        xi = Polynomial.variable(n, i)
        total = total + xi * xi + xi * xi * xi * xi
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            d = Polynomial.variable(n, i) - Polynomial.variable(n, k)
            total = total + (d * d) * (d * d)
    return total


def test_coupled_quartic_family_census():
    for n in (3, 4, 6):
        f = f_n_polynomial(n)
        basis = standard_basis(n, 2)
        g0 = tsp_graph(f, basis)
        assert is_chordal(g0)
        g1 = chordal_extension(g0, "approx_min")
        assert g1.edges == g0.edges
        census = Counter(maximal_cliques(g0).sizes)
        assert census == Counter({3: n * (n - 1) // 2, 1: n, n + 1: 1})


def test_mixed_parity_example_census():
    f = parse_polynomial(
        "1 + x1^4 + x2^4 + x3^4 - x1^2*x2^2 - x1^2*x3^2 - x2^2*x3^2 + x2*x3", 3
    )
    g0 = tsp_graph(f, standard_basis(3, 2))
    assert is_chordal(g0)
    assert sorted(maximal_cliques(g0).sizes, reverse=True) == [4, 2, 2, 1, 1, 1]


def test_same_sign_type_pairs_are_adjacent():
    rng = np.random.default_rng(8)
    for n, d in ((2, 2), (3, 2), (2, 3)):
        basis = standard_basis(n, d)
        pool = standard_basis(n, 2 * d).monos
        pick = [m for m in pool if rng.random() < 0.15]
        f = Polynomial.constant(n, 1.0)
        for m in pick:
            f = f + Polynomial.monomial(n, m, 1.0)
        g = tsp_graph(f, basis)
        for i, j in itertools.combinations(range(len(basis)), 2):
            bi, bj = basis.monos[i], basis.monos[j]
            if all((a + b) % 2 == 0 for a, b in zip(bi, bj)):
                assert g.has_edge(i, j)


def test_iterate_unconstrained_running_example():
    f = parse_polynomial(EX33, 3)
    basis = newton_half_basis(f)
    seq = iterate_unconstrained(f, basis, k=3)
    assert seq.stabilized_at == 1
    assert len(seq.at(1)) == 1
    assert seq.at(1)[0].edges == seq.at(3)[0].edges
    assert len(seq.at(1)[0].edges) == 9  # 7 pattern edges + 2 fills


def test_iterate_unconstrained_monotone_edges():
    rng = np.random.default_rng(6)
    for trial in range(6):
        n = int(rng.integers(2, 4))
        pool = standard_basis(n, 4).monos
        pick = [m for m in pool if rng.random() < 0.2]
        f = Polynomial.constant(n, 1.0)
        for m in pick:
            f = f + Polynomial.monomial(n, m, float(rng.normal()))
        basis = standard_basis(n, 2)
        seq = iterate_unconstrained(f, basis, k=4)
        for k in range(1, 4):
            assert seq.at(k)[0].edges <= seq.at(k + 1)[0].edges
        if seq.stabilized_at is not None:
            s = seq.stabilized_at
            assert seq.at(s)[0].edges == seq.at(min(s + 1, 4))[0].edges


def test_iterate_constrained_shapes_and_nesting():
    pop = parse_pop(
        "vars 2\nx1^4 + x2^4 - x1*x2 + 1\nsubject to\n1 - x1^2 - x2^2\n"
    )
    seq = iterate_constrained(pop, d_hat=2, k=3)
    assert all(len(level) == 2 for level in seq.levels)
    for j in (0, 1):
        for k in range(1, 3):
            assert seq.at(k)[j].edges <= seq.at(k + 1)[j].edges
    # moment basis N^2_2, localizing basis N^2_1
    assert len(seq.at(1)[0].basis) == 6
    assert len(seq.at(1)[1].basis) == 3


def test_iterate_constrained_rejects_low_order():
    pop = parse_pop("vars 1\nx1^4\nsubject to\n1 - x1^2\n")
    with pytest.raises(ValueError):
        iterate_constrained(pop, d_hat=1, k=1)


def test_iterate_constrained_seed_embedding_gives_inclusion():
    pop = parse_pop(
        "vars 2\nx1^4 + x2^4 - x1^3*x2 + 0.5\nsubject to\n1 - x1^2 - x2^2\n"
    )
    low = iterate_constrained(pop, d_hat=2, k=2)
    high = iterate_constrained(pop, d_hat=3, k=2, seed=low)
    for k in (1, 2):
        for j in (0, 1):
            lo_basis = low.at(k)[j].basis
            hi_basis = high.at(k)[j].basis
            for a, b in low.at(k)[j].edges:
                ma, mb = lo_basis.monos[a], lo_basis.monos[b]
                ia, ib = hi_basis.index(ma), hi_basis.index(mb)
                assert high.at(k)[j].has_edge(ia, ib)


def test_clique_report_shape():
    f = parse_polynomial(EX33, 3)
    basis = newton_half_basis(f)
    seq = iterate_unconstrained(f, basis, k=1)
    rep = clique_report(seq.at(1)[0], stabilized=True)
    assert rep["max_clique"] == 3
    assert rep["clique_sizes"] == [3, 3, 3, 3]
    assert rep["n_edges"] == 9
    assert rep["stabilized"] is True
