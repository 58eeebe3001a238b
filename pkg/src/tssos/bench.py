"""Benchmark problem families and the end-to-end relaxation pipeline.

The named families are standard unconstrained test polynomials (Broyden
banded and tridiagonal systems as sums of squared residuals, generalized
Rosenbrock with and without pairwise coupling terms, a chained singular
function with coupling) plus two random families:

* randpoly1(n, 2d, t, p): pick each monomial of degree <= d independently
  with probability p, deal the picks onto t polynomials with coefficients
  uniform in [-1, 1], and square-sum them; the result is SOS by
  construction.
* randpoly2(n, 2d, s): a coercive polynomial c_0 + sum_i c_i x_i^{2d} plus
  s - n - 1 distinct lower-degree terms with coefficients in [-1, 1]; its
  Newton polytope is the scaled standard simplex, so the half-polytope
  basis is exactly the degree-d standard basis.

Index conventions for the chain-structured families follow the common
benchmark definitions: sums touching x_{i-1} start at i = 2, and the
tridiagonal boundary residuals drop the out-of-range neighbors.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .assembly import (
    assemble_sparse_constrained,
    assemble_sparse_unconstrained,
    solve_relaxation,
)
from .basis import (
    newton_half_basis,
    reduce_basis_constrained,
    reduce_basis_unconstrained,
    standard_basis,
)
from .graphs import iterate_constrained, iterate_unconstrained, maximal_cliques
from .poly import Polynomial, PopProblem
from .solver import SolverConfig

FAMILIES = (
    "randpoly1",
    "randpoly2",
    "broyden_banded",
    "broyden_tridiagonal",
    "gen_rosenbrock",
    "mod_gen_rosenbrock",
    "mod_chained_singular",
)

CONSTRAINT_SETS = ("none", "unit_ball", "unit_hypercube")


def _var(n: int, i: int) -> Polynomial:
    return Polynomial.variable(n, i)


def broyden_banded(n: int) -> Polynomial:
    """Sum of squared Broyden banded residuals; global minimum 0."""
    if n < 2:
        raise ValueError("broyden_banded needs n >= 2")
    total = Polynomial.zero(n)
    for i in range(1, n + 1):
        xi = _var(n, i)
        p = xi * (Polynomial.constant(n, 2.0) + 5.0 * xi * xi) + Polynomial.constant(n, 1.0)
        for j in range(max(1, i - 5), min(n, i + 1) + 1):
            if j == i:
                continue
            xj = _var(n, j)
            p = p - (Polynomial.constant(n, 1.0) + xj) * xj
        total = total + p * p
    return total


def broyden_tridiagonal(n: int) -> Polynomial:
    """Squared tridiagonal residuals with zero boundary neighbors."""
    if n < 2:
        raise ValueError("broyden_tridiagonal needs n >= 2")
    total = Polynomial.zero(n)
    one = Polynomial.constant(n, 1.0)
    three = Polynomial.constant(n, 3.0)
    for i in range(1, n + 1):
        xi = _var(n, i)
        p = (three - 2.0 * xi) * xi + one
        if i > 1:
            p = p - _var(n, i - 1)
        if i < n:
            p = p - 2.0 * _var(n, i + 1)
        total = total + p * p
    return total


def gen_rosenbrock(n: int) -> Polynomial:
    """1 + sum_{i=2..n} 100(x_i - x_{i-1}^2)^2 + (1 - x_i)^2."""
    if n < 2:
        raise ValueError("gen_rosenbrock needs n >= 2")
    total = Polynomial.constant(n, 1.0)
    one = Polynomial.constant(n, 1.0)
    for i in range(2, n + 1):
        xi = _var(n, i)
        prev = _var(n, i - 1)
        t1 = xi - prev * prev
        t2 = one - xi
        total = total + 100.0 * t1 * t1 + t2 * t2
    return total


def _pairwise_coupling(n: int) -> Polynomial:
    total = Polynomial.zero(n)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            xi2 = _var(n, i) * _var(n, i)
            xj2 = _var(n, j) * _var(n, j)
            total = total + xi2 * xj2
    return total


def mod_gen_rosenbrock(n: int) -> Polynomial:
    return gen_rosenbrock(n) + _pairwise_coupling(n)


def mod_chained_singular(n: int) -> Polynomial:
    """Chained singular terms over odd i plus pairwise coupling."""
    if n < 4 or n % 2:
        raise ValueError("mod_chained_singular needs even n >= 4")
    total = _pairwise_coupling(n)
    for i in range(1, n - 2, 2):
        x0, x1, x2, x3 = (_var(n, i + k) for k in range(4))
        a = x0 + 10.0 * x1
        b = x2 - x3
        c = x1 - 2.0 * x2
        d = x0 - 10.0 * x3
        total = total + a * a + 5.0 * b * b + (c * c) * (c * c) + 10.0 * (d * d) * (d * d)
    return total


def randpoly1(n: int, deg: int, terms: int, prob: float, seed: int) -> Polynomial:
    if deg % 2 or deg < 2:
        raise ValueError("randpoly1 degree must be even and >= 2")
    if not 0 < prob <= 1:
        raise ValueError("prob must be in (0, 1]")
    rng = np.random.default_rng(seed)
    from .poly import monomials_up_to

    candidates = monomials_up_to(n, deg // 2)
    picked: List = []
    while not picked:
        mask = rng.random(len(candidates)) < prob
        picked = [m for m, keep in zip(candidates, mask) if keep]
    owner = rng.integers(0, terms, size=len(picked))
    coeffs = rng.uniform(-1.0, 1.0, size=len(picked))
    parts = [Polynomial.zero(n) for _ in range(terms)]
    for m, o, c in zip(picked, owner, coeffs):
        parts[o] = parts[o] + Polynomial.monomial(n, m, float(c))
    total = Polynomial.zero(n)
    for p in parts:
        total = total + p * p
    return total


def randpoly2(n: int, deg: int, terms: int, seed: int) -> Polynomial:
    if deg % 2 or deg < 2:
        raise ValueError("randpoly2 degree must be even and >= 2")
    if terms < n + 1:
        raise ValueError("randpoly2 needs at least n + 1 terms")
    rng = np.random.default_rng(seed)
    from .poly import monomials_up_to

    total = Polynomial.constant(n, float(rng.uniform(0.0, 1.0)))
    for i in range(1, n + 1):
        e = [0] * n
        e[i - 1] = deg
        total = total + Polynomial.monomial(n, tuple(e), float(rng.uniform(0.0, 1.0)))
    pool = [m for m in monomials_up_to(n, deg - 1) if any(m)]
    extra = terms - n - 1
    if extra > len(pool):
        raise ValueError(f"randpoly2 cannot place {extra} extra terms in {len(pool)} slots")
    idx = rng.choice(len(pool), size=extra, replace=False)
    for i in sorted(int(t) for t in idx):
        total = total + Polynomial.monomial(n, pool[i], float(rng.uniform(-1.0, 1.0)))
    return total


def constraint_set(name: str, n: int) -> Tuple[Polynomial, ...]:
    if name == "none":
        return ()
    one = Polynomial.constant(n, 1.0)
    if name == "unit_ball":
        g = one
        for i in range(1, n + 1):
            g = g - _var(n, i) * _var(n, i)
        return (g,)
    if name == "unit_hypercube":
        return tuple(one - _var(n, i) * _var(n, i) for i in range(1, n + 1))
    raise ValueError(f"unknown constraint set {name!r}; pick one of {CONSTRAINT_SETS}")


@dataclass
class BenchSpec:
    family: str
    n: int
    deg: Optional[int] = None  # total degree 2d for the random families
    terms: Optional[int] = None  # t for randpoly1, s for randpoly2
    prob: Optional[float] = None
    constraint: str = "none"
    d_hat: Optional[int] = None
    k_max: int = 1
    mode: str = "approx_min"
    basis: Optional[str] = None
    side: str = "sos"
    seed: int = 0


def generate(spec: BenchSpec) -> PopProblem:
    fam = spec.family
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {fam!r}; pick one of {FAMILIES}")
    if fam == "randpoly1":
        if spec.deg is None or spec.terms is None or spec.prob is None:
            raise ValueError("randpoly1 needs --deg, --terms and --prob")
        f = randpoly1(spec.n, spec.deg, spec.terms, spec.prob, spec.seed)
    elif fam == "randpoly2":
        if spec.deg is None or spec.terms is None:
            raise ValueError("randpoly2 needs --deg and --terms")
        f = randpoly2(spec.n, spec.deg, spec.terms, spec.seed)
    elif fam == "broyden_banded":
        f = broyden_banded(spec.n)
    elif fam == "broyden_tridiagonal":
        f = broyden_tridiagonal(spec.n)
    elif fam == "gen_rosenbrock":
        f = gen_rosenbrock(spec.n)
    elif fam == "mod_gen_rosenbrock":
        f = mod_gen_rosenbrock(spec.n)
    else:
        f = mod_chained_singular(spec.n)
    return PopProblem(f, constraint_set(spec.constraint, spec.n))


@dataclass
class RunOptions:
    d_hat: Optional[int] = None
    k_max: int = 1
    mode: str = "approx_min"
    basis: str = "newton"  # newton | standard | reduced (moment basis choice)
    side: str = "sos"
    order: Optional[int] = None  # standard-basis half degree override (unconstrained)
    config: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class BenchRow:
    instance: str
    k: int
    bs: Optional[int]
    rbs: Optional[int]
    mc: object  # int, or [moment, localizing] for constrained runs
    n_equalities: int
    bound: float
    status: str
    seconds: float
    stabilized: bool

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "k": self.k,
            "bs": self.bs,
            "rbs": self.rbs,
            "mc": self.mc,
            "n_eq": self.n_equalities,
            "opt": self.bound,
            "status": self.status,
            "time": round(self.seconds, 4),
            "stabilized": self.stabilized,
        }


def min_half_degree(pop: PopProblem) -> int:
    d = (pop.objective.degree() + 1) // 2
    for g in pop.constraints:
        d = max(d, (g.degree() + 1) // 2)
    return d


def unconstrained_basis(f: Polynomial, choice: str, order: Optional[int] = None):
    """Resolve the basis flag; returns (basis, bs, rbs)."""
    if choice == "standard":
        half = order if order is not None else (f.degree() + 1) // 2
        b = standard_basis(f.nvars, half)
        return b, len(b), None
    newton = newton_half_basis(f)
    if choice == "newton":
        return newton, len(newton), None
    if choice == "reduced":
        reduced = reduce_basis_unconstrained(f, newton)
        return reduced, len(newton), len(reduced)
    raise ValueError(f"unknown basis choice {choice!r}")


def run_pop(pop: PopProblem, opts: RunOptions, instance: str = "problem") -> List[BenchRow]:
    """Assemble and solve the sparse relaxation at every order 1..k_max."""
    rows: List[BenchRow] = []
    if pop.constraints:
        d_hat = opts.d_hat if opts.d_hat is not None else min_half_degree(pop)
        moment_basis = None
        rbs = None
        if opts.basis == "reduced":
            moment_basis = reduce_basis_constrained(pop, d_hat, k=opts.k_max, mode=opts.mode)
            rbs = len(moment_basis)
        elif opts.basis == "newton":
            raise ValueError("the half-polytope basis applies to unconstrained problems only")
        elif opts.basis != "standard":
            raise ValueError(f"unknown basis choice {opts.basis!r}")
        seq = iterate_constrained(pop, d_hat, k=opts.k_max, mode=opts.mode, moment_basis=moment_basis)
        bs = len(seq.levels[0][0].basis)
        for k in range(1, opts.k_max + 1):
            graphs = seq.at(k)
            t0 = time.perf_counter()
            sdp = assemble_sparse_constrained(pop, d_hat, graphs, side=opts.side)
            res = solve_relaxation(sdp, opts.config)
            dt = time.perf_counter() - t0
            mc0 = maximal_cliques(graphs[0]).max_clique
            mcl = max((maximal_cliques(g).max_clique for g in graphs[1:]), default=0)
            rows.append(
                BenchRow(
                    instance=instance,
                    k=k,
                    bs=bs,
                    rbs=rbs,
                    mc=[mc0, mcl],
                    n_equalities=sdp.n_equalities,
                    bound=res.bound,
                    status=res.status,
                    seconds=dt,
                    stabilized=seq.stabilized_at is not None and k >= seq.stabilized_at,
                )
            )
    else:
        f = pop.objective
        basis, bs, rbs = unconstrained_basis(f, opts.basis, opts.order)
        seq = iterate_unconstrained(f, basis, k=opts.k_max, mode=opts.mode)
        for k in range(1, opts.k_max + 1):
            graph = seq.at(k)[0]
            t0 = time.perf_counter()
            sdp = assemble_sparse_unconstrained(f, basis, graph, side=opts.side)
            res = solve_relaxation(sdp, opts.config)
            dt = time.perf_counter() - t0
            rows.append(
                BenchRow(
                    instance=instance,
                    k=k,
                    bs=bs,
                    rbs=rbs,
                    mc=maximal_cliques(graph).max_clique,
                    n_equalities=sdp.n_equalities,
                    bound=res.bound,
                    status=res.status,
                    seconds=dt,
                    stabilized=seq.stabilized_at is not None and k >= seq.stabilized_at,
                )
            )
    return rows


def run_pipeline(spec: BenchSpec) -> List[BenchRow]:
    pop = generate(spec)
    basis = spec.basis
    if basis is None:
        if pop.constraints:
            basis = "standard"
        elif spec.family == "randpoly1":
            basis = "reduced"
        elif spec.family == "randpoly2":
            basis = "newton"
        else:
            basis = "standard"
    opts = RunOptions(
        d_hat=spec.d_hat,
        k_max=spec.k_max,
        mode=spec.mode,
        basis=basis,
        side=spec.side,
    )
    label = f"{spec.family}(n={spec.n}" + (f", seed={spec.seed})" if spec.family.startswith("rand") else ")")
    return run_pop(pop, opts, instance=label)


def sample_minimum(pop: PopProblem, count: int = 10000, seed: int = 0, spread: float = 1.5) -> float:
    """Smallest objective value over random feasible sample points.

    Any valid relaxation bound must sit below this (up to tolerance); used
    as a sanity check, never as a solver.
    """
    rng = np.random.default_rng(seed)
    n = pop.nvars
    best = np.inf
    found = 0
    tries = 0
    while found < count and tries < 50 * count:
        tries += 1
        if pop.constraints:
            x = rng.uniform(-1.0, 1.0, size=n)
        else:
            x = rng.normal(0.0, spread, size=n)
        if all(g.evaluate(x) >= 0 for g in pop.constraints):
            found += 1
            v = pop.objective.evaluate(x)
            if v < best:
                best = v
    if not found:
        raise ValueError("could not sample any feasible point")
    return float(best)


def emit_table(rows: Sequence[BenchRow], fmt: str = "markdown") -> str:
    dicts = [r.to_dict() for r in rows]
    if fmt == "json":
        return json.dumps(dicts, indent=2)
    headers = ["instance", "k", "bs", "rbs", "mc", "n_eq", "opt", "status", "time", "stabilized"]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=headers)
        writer.writeheader()
        for d in dicts:
            writer.writerow(d)
        return buf.getvalue()
    if fmt == "markdown":
        def cell(v):
            if isinstance(v, float):
                return f"{v:.6g}"
            return str(v)

        lines = ["| " + " | ".join(headers) + " |",
                 "| " + " | ".join("---" for _ in headers) + " |"]
        for d in dicts:
            lines.append("| " + " | ".join(cell(d[h]) for h in headers) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")
