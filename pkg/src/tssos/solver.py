"""Block-diagonal semidefinite programming by a primal-dual interior point.

Solves the standard pair

    (P)  min <C, X>   s.t.  <A_i, X> = b_i,  X in S+ (block diagonal)
    (D)  max b'y      s.t.  sum_i y_i A_i + S = C,  S in S+

with an infeasible-start path-following method.  Search directions are the
usual XZ (HKM) directions with a Mehrotra predictor-corrector; the Schur
complement M[i,j] = sum_b tr(A_i X A_j S^{-1}) is symmetric positive definite
whenever the constraint matrices are linearly independent, and a tiny
diagonal regularization keeps the Cholesky factorization alive near
degeneracy.

All constraint data is sparse (block, row, col, value) with row <= col and
symmetric semantics: an off-diagonal entry v stands for v at (row, col) and
at (col, row).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

Entry = Tuple[int, int, int, float]  # (block, row, col, value), row <= col


@dataclass
class CanonicalSdp:
    """Standard-form data: objective entries, constraint entries, rhs."""

    block_sizes: Tuple[int, ...]
    c_entries: Tuple[Entry, ...]
    a_entries: Tuple[Tuple[Entry, ...], ...]  # one tuple per constraint
    b: Tuple[float, ...]

    @property
    def n_constraints(self) -> int:
        return len(self.a_entries)

    def validate(self):
        nb = len(self.block_sizes)
        for ent in self.c_entries:
            self._check_entry(ent, nb)
        for row in self.a_entries:
            if not row:
                raise ValueError("constraint with no coefficients")
            for ent in row:
                self._check_entry(ent, nb)
        if len(self.b) != len(self.a_entries):
            raise ValueError("rhs length mismatch")

    def _check_entry(self, ent: Entry, nb: int):
        blk, r, c, _ = ent
        if not 0 <= blk < nb:
            raise ValueError(f"entry block {blk} out of range")
        s = self.block_sizes[blk]
        if not (0 <= r <= c < s):
            raise ValueError(f"entry ({r},{c}) out of range for block size {s}")


@dataclass
class SolverConfig:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.98
    verbose: bool = False


@dataclass
class SolverSolution:
    status: str  # optimal | max_iter | infeasible | unbounded | numerical
    x_blocks: List[np.ndarray]
    s_blocks: List[np.ndarray]
    y: np.ndarray
    primal_obj: float
    dual_obj: float
    iterations: int
    residuals: Dict[str, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "status": self.status,
                "primal_obj": self.primal_obj,
                "dual_obj": self.dual_obj,
                "iters": self.iterations,
                "residuals": self.residuals,
            },
            indent=2,
        )


def _dense_sym(size: int, entries: Sequence[Tuple[int, int, float]]) -> np.ndarray:
    m = np.zeros((size, size))
    for r, c, v in entries:
        m[r, c] += v
        if r != c:
            m[c, r] += v
    return m


class _BlockData:
    """Per-block dense stacks of the constraint matrices touching it."""

    def __init__(self, size: int, c_mat: np.ndarray, gidx: np.ndarray, stack: np.ndarray):
        self.size = size
        self.c = c_mat
        self.gidx = gidx  # global constraint indices, shape (k,)
        self.stack = stack  # shape (k, size, size)
        self.flat = stack.reshape(len(gidx), -1) if len(gidx) else np.zeros((0, size * size))


def _prepare_blocks(prob: CanonicalSdp) -> List[_BlockData]:
    nb = len(prob.block_sizes)
    per_block_c: List[List[Tuple[int, int, float]]] = [[] for _ in range(nb)]
    for blk, r, c, v in prob.c_entries:
        per_block_c[blk].append((r, c, v))
    per_block_rows: List[Dict[int, List[Tuple[int, int, float]]]] = [dict() for _ in range(nb)]
    for i, row in enumerate(prob.a_entries):
        for blk, r, c, v in row:
            per_block_rows[blk].setdefault(i, []).append((r, c, v))
    out = []
    for blk, size in enumerate(prob.block_sizes):
        cmat = _dense_sym(size, per_block_c[blk])
        items = sorted(per_block_rows[blk].items())
        gidx = np.array([i for i, _ in items], dtype=int)
        stack = np.zeros((len(items), size, size))
        for pos, (_, ents) in enumerate(items):
            stack[pos] = _dense_sym(size, ents)
        out.append(_BlockData(size, cmat, gidx, stack))
    return out


def _apply_a(blocks: List[_BlockData], xs: List[np.ndarray], m: int) -> np.ndarray:
    out = np.zeros(m)
    for bd, x in zip(blocks, xs):
        if len(bd.gidx):
            out[bd.gidx] += bd.flat @ x.reshape(-1)
    return out


def _apply_at(blocks: List[_BlockData], y: np.ndarray) -> List[np.ndarray]:
    outs = []
    for bd in blocks:
        if len(bd.gidx):
            outs.append(np.einsum("k,kij->ij", y[bd.gidx], bd.stack))
        else:
            outs.append(np.zeros((bd.size, bd.size)))
    return outs


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx >= 0 (x assumed positive definite)."""
    try:
        lo = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    w = np.linalg.solve(lo, np.linalg.solve(lo, dx).T)
    lam = np.linalg.eigvalsh(0.5 * (w + w.T)).min()
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _chol_solve(m: np.ndarray, rhs: np.ndarray) -> Optional[np.ndarray]:
    """Solve m x = rhs with a Cholesky factor, jittering only on failure.

    One pass of iterative refinement keeps the solve accurate when m turns
    ill-conditioned near the central path's end, which otherwise leaves a
    feasibility residual floor around sqrt(eps).
    """
    jitter = 0.0
    base = 1e-14 * (1.0 + np.abs(np.diag(m)).max())
    eye = np.eye(m.shape[0])
    for _ in range(8):
        try:
            lo = np.linalg.cholesky(m + jitter * eye if jitter else m)
        except np.linalg.LinAlgError:
            jitter = base if jitter == 0.0 else jitter * 100.0
            continue
        x = np.linalg.solve(lo.T, np.linalg.solve(lo, rhs))
        r = rhs - m @ x
        x += np.linalg.solve(lo.T, np.linalg.solve(lo, r))
        return x
    return None


def solve_canonical(prob: CanonicalSdp, config: SolverConfig | None = None) -> SolverSolution:
    cfg = config or SolverConfig()
    prob.validate()
    m = prob.n_constraints
    blocks = _prepare_blocks(prob)
    sizes = prob.block_sizes
    total_dim = sum(sizes)
    b = np.array(prob.b, dtype=float)

    if m == 0:
        # min <C, X> over X >= 0: zero if C is PSD, otherwise unbounded below.
        lam_min = min(
            (np.linalg.eigvalsh(bd.c).min() if bd.size else 0.0) for bd in blocks
        ) if blocks else 0.0
        status = "optimal" if lam_min >= -1e-12 else "unbounded"
        xs = [np.zeros((s, s)) for s in sizes]
        return SolverSolution(
            status=status,
            x_blocks=xs,
            s_blocks=[bd.c.copy() for bd in blocks],
            y=np.zeros(0),
            primal_obj=0.0,
            dual_obj=0.0,
            iterations=0,
            residuals={"gap": 0.0, "primal": 0.0, "dual": 0.0},
        )

    norm_b = np.linalg.norm(b)
    norm_c = math.sqrt(sum(float((bd.c ** 2).sum()) for bd in blocks))
    norm_a = []
    for row in prob.a_entries:
        sq = sum(v * v * (1.0 if r == c else 2.0) for _, r, c, v in row)
        norm_a.append(math.sqrt(sq))
    eta_p = max(10.0, math.sqrt(total_dim))
    eta_d = max(10.0, math.sqrt(total_dim), norm_c / max(1.0, math.sqrt(total_dim)))
    for i in range(m):
        eta_p = max(eta_p, (1.0 + abs(b[i])) / (1.0 + norm_a[i]))

    xs = [eta_p * np.eye(s) for s in sizes]
    ss = [eta_d * np.eye(s) for s in sizes]
    y = np.zeros(m)

    status = "max_iter"
    iters = 0
    residuals = {"gap": np.inf, "primal": np.inf, "dual": np.inf}
    pobj = dobj = 0.0
    best = None  # (err, xs, ss, y, pobj, dobj, residuals)
    stall = 0

    for it in range(1, cfg.max_iters + 1):
        iters = it
        pobj = sum(float(np.tensordot(bd.c, x)) for bd, x in zip(blocks, xs))
        dobj = float(b @ y)
        gap = sum(float(np.tensordot(x, s)) for x, s in zip(xs, ss))
        mu = gap / total_dim

        aty = _apply_at(blocks, y)
        rd = [bd.c - at - s for bd, at, s in zip(blocks, aty, ss)]
        rp = b - _apply_a(blocks, xs, m)

        rel_gap = gap / (1.0 + abs(pobj) + abs(dobj))
        rp_norm = np.linalg.norm(rp) / (1.0 + norm_b)
        rd_norm = math.sqrt(sum(float((r ** 2).sum()) for r in rd)) / (1.0 + norm_c)
        residuals = {"gap": float(rel_gap), "primal": float(rp_norm), "dual": float(rd_norm)}

        if cfg.verbose:
            print(f"iter {it:3d}  pobj {pobj: .9e}  dobj {dobj: .9e}  "
                  f"gap {rel_gap:.2e}  rp {rp_norm:.2e}  rd {rd_norm:.2e}")

        if rel_gap <= cfg.tol_gap and rp_norm <= cfg.tol_feas and rd_norm <= cfg.tol_feas:
            status = "optimal"
            break

        # near the numerical floor the step error can undo feasibility
        # faster than progress is made; remember the best iterate and stop
        # once a long window brings no improvement
        err = max(rel_gap, rp_norm, rd_norm)
        if best is None or err < 0.9 * best[0]:
            best = (err, [x.copy() for x in xs], [s.copy() for s in ss],
                    y.copy(), pobj, dobj, dict(residuals))
            stall = 0
        else:
            stall += 1
            if stall >= 15:
                status = "numerical"
                break

        # divergence heuristics
        xnorm = max(float(np.abs(x).max()) for x in xs)
        ynorm = float(np.abs(y).max()) if m else 0.0
        if xnorm > 1e13:
            status = "unbounded" if rp_norm <= 1e-6 else "numerical"
            break
        if ynorm > 1e13:
            status = "infeasible" if rd_norm <= 1e-6 else "numerical"
            break

        sinvs = []
        ok = True
        for s in ss:
            try:
                lo = np.linalg.cholesky(s)
            except np.linalg.LinAlgError:
                ok = False
                break
            inv = np.linalg.solve(lo.T, np.linalg.solve(lo, np.eye(s.shape[0])))
            sinvs.append(0.5 * (inv + inv.T))
        if not ok:
            status = "numerical"
            break

        # Schur complement
        schur = np.zeros((m, m))
        for bd, x, sinv in zip(blocks, xs, sinvs):
            k = len(bd.gidx)
            if not k:
                continue
            t = np.matmul(np.matmul(x[None], bd.stack), sinv[None])
            tt = np.transpose(t, (0, 2, 1)).reshape(k, -1)
            local = bd.flat @ tt.T
            schur[np.ix_(bd.gidx, bd.gidx)] += local
        schur = 0.5 * (schur + schur.T)

        def direction(sigma_mu: float, corr: Optional[List[np.ndarray]]):
            rhs = b.copy()
            aux = []
            for bd, x, sinv, rdb in zip(blocks, xs, sinvs, rd):
                u = x @ rdb @ sinv
                if sigma_mu:
                    u = u - sigma_mu * sinv
                if corr is not None:
                    u = u + corr[len(aux)] @ sinv
                aux.append(u)
            rhs += _apply_a(blocks, aux, m)
            dy = _chol_solve(schur, rhs)
            if dy is None:
                return None
            dss = [rdb - at for rdb, at in zip(rd, _apply_at(blocks, dy))]
            dxs = []
            for bd, x, sinv, dsb, u in zip(blocks, xs, sinvs, dss, aux):
                raw = -x - x @ dsb @ sinv
                if sigma_mu:
                    raw = raw + sigma_mu * sinv
                if corr is not None:
                    raw = raw - corr[len(dxs)] @ sinv
                dxs.append(0.5 * (raw + raw.T))
            return dxs, dy, dss

        got = direction(0.0, None)
        if got is None:
            status = "numerical"
            break
        dx_aff, dy_aff, ds_aff = got

        ap_aff = min(1.0, min((_max_step(x, dx) for x, dx in zip(xs, dx_aff)), default=1.0))
        ad_aff = min(1.0, min((_max_step(s, ds) for s, ds in zip(ss, ds_aff)), default=1.0))
        gap_aff = sum(
            float(np.tensordot(x + ap_aff * dx, s + ad_aff * ds))
            for x, dx, s, ds in zip(xs, dx_aff, ss, ds_aff)
        )
        mu_aff = max(gap_aff, 0.0) / total_dim
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        # keep complementarity from racing far below the remaining
        # infeasibility; a mu much smaller than the residuals ruins the
        # Schur conditioning before feasibility can catch up
        if rel_gap < max(rp_norm, rd_norm):
            sigma = max(sigma, 0.5)

        corr = [dx @ ds for dx, ds in zip(dx_aff, ds_aff)]
        got = direction(sigma * mu, corr)
        if got is None:
            status = "numerical"
            break
        dxs, dy, dss = got

        tau = cfg.step_fraction
        ap = min(1.0, tau * min((_max_step(x, dx) for x, dx in zip(xs, dxs)), default=np.inf))
        ad = min(1.0, tau * min((_max_step(s, ds) for s, ds in zip(ss, dss)), default=np.inf))
        if ap <= 1e-12 and ad <= 1e-12:
            status = "numerical"
            break
        xs = [0.5 * ((x + ap * dx) + (x + ap * dx).T) for x, dx in zip(xs, dxs)]
        ss = [0.5 * ((s + ad * ds) + (s + ad * ds).T) for s, ds in zip(ss, dss)]
        y = y + ad * dy

    if status != "optimal" and best is not None:
        cur_err = max(residuals.values())
        if best[0] < cur_err:
            _, xs, ss, y, pobj, dobj, residuals = best

    return SolverSolution(
        status=status,
        x_blocks=xs,
        s_blocks=ss,
        y=y,
        primal_obj=pobj,
        dual_obj=dobj,
        iterations=iters,
        residuals=residuals,
    )
