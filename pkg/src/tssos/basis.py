"""Monomial bases for Gram matrix representations.

Three ways to pick the rows/columns of a Gram matrix for f:

* the standard basis, all monomials of degree <= d;
* the Newton half-polytope basis, lattice points beta with 2*beta inside the
  convex hull of supp(f) together with the origin (the origin participates
  because we always represent f - lambda, which has a constant term);
* a shrunken basis obtained by repeatedly discarding monomials that can never
  pair up into the support, optionally interleaved with the sparsity-graph
  machinery for constrained problems.

Bases are value objects: a sorted tuple of exponents plus an index lookup.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import linprog

from .poly import Exponent, Polynomial, PopProblem, grlex_key, monomials_up_to

STANDARD_BASIS_CAP = 10 ** 7
NEWTON_LP_TOL = 1e-9


class MonomialBasis:
    """An ordered set of exponents, graded lex, with O(1) index lookup."""

    __slots__ = ("nvars", "monos", "_index")

    def __init__(self, nvars: int, monos: Iterable[Exponent]):
        dedup = {tuple(int(a) for a in m) for m in monos}
        for m in dedup:
            if len(m) != nvars or any(a < 0 for a in m):
                raise ValueError(f"bad exponent {m} for {nvars} variables")
        self.nvars = nvars
        self.monos: Tuple[Exponent, ...] = tuple(sorted(dedup, key=grlex_key))
        self._index: Dict[Exponent, int] = {m: i for i, m in enumerate(self.monos)}

    def __len__(self) -> int:
        return len(self.monos)

    def __iter__(self):
        return iter(self.monos)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MonomialBasis)
            and self.nvars == other.nvars
            and self.monos == other.monos
        )

    def __hash__(self):
        return hash((self.nvars, self.monos))

    def index(self, alpha: Exponent) -> int:
        return self._index[tuple(alpha)]

    def exponent_set(self) -> Set[Exponent]:
        return set(self.monos)

    def __repr__(self) -> str:
        return f"MonomialBasis(nvars={self.nvars}, size={len(self)})"


def standard_basis(nvars: int, degree: int) -> MonomialBasis:
    """All monomials of total degree <= degree."""
    if nvars < 1 or degree < 0:
        raise ValueError("need nvars >= 1 and degree >= 0")
    count = math.comb(nvars + degree, degree)
    if count > STANDARD_BASIS_CAP:
        raise ValueError(
            f"standard basis would have {count} monomials "
            f"(more than the {STANDARD_BASIS_CAP} cap); "
            "reduce the degree or variable count"
        )
    return MonomialBasis(nvars, monomials_up_to(nvars, degree))


def _in_half_polytope(beta: Exponent, points: np.ndarray) -> bool:
    """Is 2*beta a convex combination of the rows of points?

    Decided by LP feasibility: find lambda >= 0 with sum(lambda) = 1 and
    points^T lambda = 2*beta.
    """
    target = 2 * np.asarray(beta, dtype=float)
    npts = points.shape[0]
    a_eq = np.vstack([points.T, np.ones((1, npts))])
    b_eq = np.concatenate([target, [1.0]])
    res = linprog(
        c=np.zeros(npts),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": NEWTON_LP_TOL},
    )
    return res.status == 0


def newton_half_basis(f: Polynomial) -> MonomialBasis:
    """Lattice points of half the Newton polytope of f (origin included).

    The candidates are all beta with 2*beta in conv(supp(f) union {0});
    the origin joins the hull because the representation target is always
    f - lambda with a constant present.  A single-monomial objective is
    handled separately: x^alpha is a square exactly when alpha is even.
    """
    supp = f.support()
    if not supp:
        raise ValueError("zero polynomial has no Newton polytope")
    if len(supp) == 1:
        (alpha,) = supp
        if any(a % 2 for a in alpha):
            raise ValueError("objective cannot be SOS: single monomial of odd exponent")
        return MonomialBasis(f.nvars, [tuple(a // 2 for a in alpha)])
    pts = sorted(supp | {(0,) * f.nvars}, key=grlex_key)
    points = np.array(pts, dtype=float)
    half_deg = max(sum(a) for a in supp) // 2
    comp_max = points.max(axis=0)
    deg_max = points.sum(axis=1).max()
    kept = []
    for beta in monomials_up_to(f.nvars, half_deg):
        doubled = np.asarray(beta) * 2
        if (doubled > comp_max).any() or doubled.sum() > deg_max:
            continue
        if _in_half_polytope(beta, points):
            kept.append(beta)
    return MonomialBasis(f.nvars, kept)


def generate_basis(
    support: Iterable[Exponent],
    base: MonomialBasis | Iterable[Exponent],
    nvars: int | None = None,
    max_steps: int | None = None,
) -> List[MonomialBasis]:
    """Increasing chain of sub-bases that can still reach the support.

    Starting from B_0 empty, step p keeps every pair {beta, gamma} of the
    base whose sum lies in the support or in 2*B_{p-1}.  The chain B_1,
    B_2, ... is returned up to stabilization (B_p == B_{p-1}) or up to
    max_steps entries.  The last element is the useful shrunken basis.
    """
    if isinstance(base, MonomialBasis):
        nvars = base.nvars
        base_set = base.exponent_set()
    else:
        base_set = {tuple(m) for m in base}
        if nvars is None:
            raise ValueError("nvars required when base is a raw exponent set")
    supp = {tuple(a) for a in support}
    base_list = sorted(base_set, key=grlex_key)
    chain: List[MonomialBasis] = []
    prev: Set[Exponent] = set()
    while True:
        targets = supp | {tuple(2 * a for a in m) for m in prev}
        cur: Set[Exponent] = set()
        for t in targets:
            for beta in base_list:
                gamma = tuple(x - y for x, y in zip(t, beta))
                if any(g < 0 for g in gamma):
                    continue
                if gamma in base_set:
                    cur.add(beta)
                    cur.add(gamma)
        if cur == prev and chain:
            break
        chain.append(MonomialBasis(nvars, cur))
        if cur == prev:
            break
        prev = cur
        if max_steps is not None and len(chain) >= max_steps:
            break
    return chain


def reduce_basis_unconstrained(f: Polynomial, base: MonomialBasis | None = None) -> MonomialBasis:
    """Stabilized shrunken basis for representing f - lambda.

    Defaults to shrinking the Newton half-polytope basis against
    supp(f) plus the origin.
    """
    if base is None:
        base = newton_half_basis(f)
    support = f.support() | {(0,) * f.nvars}
    chain = generate_basis(support, base)
    return chain[-1]


def reduce_basis_constrained(
    pop: PopProblem,
    d_hat: int,
    k: int = 1,
    mode: str = "approx_min",
) -> MonomialBasis:
    """Shrink the moment basis of a constrained relaxation to a fixed point.

    Alternates two steps until the basis stops changing: run the sparsity
    graph iteration at order k with the current moment basis, then keep only
    basis elements that can pair into supp(f), or into supp(g_j) shifted by
    products within some clique of g_j's graph.  Only the j = 0 basis is
    shrunk; localizing bases stay standard.
    """
    from .graphs import iterate_constrained, maximal_cliques

    f = pop.objective
    n = pop.nvars
    basis0 = standard_basis(n, d_hat)
    origin = (0,) * n
    while True:
        seq = iterate_constrained(pop, d_hat, k=k, mode=mode, moment_basis=basis0)
        target = f.support() | {origin}
        for j, g in enumerate(pop.constraints, start=1):
            graph = seq.graphs[-1][j]
            sums: Set[Exponent] = set()
            for clique in maximal_cliques(graph).cliques:
                members = [graph.basis.monos[i] for i in clique]
                for a in members:
                    for b in members:
                        sums.add(tuple(x + y for x, y in zip(a, b)))
            for ga in g.support():
                for s in sums:
                    target.add(tuple(x + y for x, y in zip(ga, s)))
        chain = generate_basis(target, basis0)
        new_basis = chain[-1]
        if new_basis == basis0:
            return basis0
        basis0 = new_basis
