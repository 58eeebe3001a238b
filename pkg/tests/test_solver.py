import numpy as np
import pytest

from tssos.solver import CanonicalSdp, SolverConfig, SolverSolution, solve_canonical


def entries_from_matrix(blk, mat, tol=0.0):
    """Upper-triangle sparse entries of a symmetric matrix."""
    out = []
    n = mat.shape[0]
    for r in range(n):
        for c in range(r, n):
            v = float(mat[r, c])
            if abs(v) > tol or (r == c and not out):
                out.append((blk, r, c, v))
    return tuple(out)


def dense_from_entries(sizes, entries):
    mats = [np.zeros((s, s)) for s in sizes]
    for blk, r, c, v in entries:
        mats[blk][r, c] += v
        if r != c:
            mats[blk][c, r] += v
    return mats


def blockdiag(mats):
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    ofs = 0
    for m in mats:
        k = m.shape[0]
        out[ofs : ofs + k, ofs : ofs + k] = m
        ofs += k
    return out


def random_instance(rng, sizes, m):
    """A strictly feasible primal-dual pair with known interior points."""

    def rand_psd(s, shift):
        q = rng.normal(size=(s, s))
        return q @ q.T + shift * np.eye(s)

    a_mats = []
    for _ in range(m):
        row = [rng.normal(size=(s, s)) for s in sizes]
        a_mats.append([0.5 * (w + w.T) for w in row])
    x_star = [rand_psd(s, 0.5) for s in sizes]
    s_star = [rand_psd(s, 0.5) for s in sizes]
    y_star = rng.normal(size=m)
    b = tuple(
        float(sum(np.tensordot(ab, xb) for ab, xb in zip(arow, x_star)))
        for arow in a_mats
    )
    c_mats = [sb.copy() for sb in s_star]
    for yi, arow in zip(y_star, a_mats):
        for blk, ab in enumerate(arow):
            c_mats[blk] += yi * ab
    prob = CanonicalSdp(
        block_sizes=tuple(sizes),
        c_entries=tuple(
            e for blk, cm in enumerate(c_mats) for e in entries_from_matrix(blk, cm)
        ),
        a_entries=tuple(
            tuple(e for blk, ab in enumerate(arow) for e in entries_from_matrix(blk, ab))
            for arow in a_mats
        ),
        b=b,
    )
    feas_p = float(sum(np.tensordot(cm, xb) for cm, xb in zip(c_mats, x_star)))
    feas_d = float(np.dot(b, y_star))
    return prob, feas_p, feas_d


def admm_solve(prob, iters=30000, tol=5e-8):
    """Boundary point method, an independent check on the interior point.

    Dual augmented Lagrangian with alternating y / S updates and the
    multiplier X recovered as sigma * (S - V); X stays PSD by construction.
    """
    sizes = prob.block_sizes
    c = blockdiag(dense_from_entries(sizes, prob.c_entries))
    a = np.array(
        [blockdiag(dense_from_entries(sizes, row)) for row in prob.a_entries]
    )
    b = np.array(prob.b, dtype=float)
    m, n = len(b), c.shape[0]
    avec = a.reshape(m, -1)
    gram = avec @ avec.T
    lo = np.linalg.cholesky(gram + 1e-12 * np.eye(m))

    def proj_psd(w):
        vals, vecs = np.linalg.eigh(0.5 * (w + w.T))
        pos = vals > 0
        return (vecs[:, pos] * vals[pos]) @ vecs[:, pos].T

    x = np.zeros((n, n))
    s = np.zeros((n, n))
    sigma = max(1.0, np.linalg.norm(b)) / max(1.0, np.linalg.norm(c))
    nb, nc = 1.0 + np.linalg.norm(b), 1.0 + np.linalg.norm(c)
    for it in range(iters):
        rhs = avec @ (c - s).ravel() + (b - avec @ x.ravel()) / sigma
        y = np.linalg.solve(lo.T, np.linalg.solve(lo, rhs))
        v = c - (avec.T @ y).reshape(n, n) - x / sigma
        s = proj_psd(v)
        x_new = sigma * (s - v)
        rd = np.linalg.norm(x_new - x) / (sigma * nc)
        x = x_new
        rp = np.linalg.norm(avec @ x.ravel() - b) / nb
        if rp < tol and rd < tol:
            break
        if it % 100 == 99:
            if rp > 10 * rd:
                sigma *= 0.7
            elif rd > 10 * rp:
                sigma *= 1.3
    return float(np.tensordot(c, x)), float(b @ y), rp, rd


def test_one_by_one_equality():
    prob = CanonicalSdp(
        block_sizes=(1,),
        c_entries=((0, 0, 0, 1.0),),
        a_entries=(((0, 0, 0, 1.0),),),
        b=(1.0,),
    )
    sol = solve_canonical(prob)
    assert sol.status == "optimal"
    assert abs(sol.primal_obj - 1.0) < 1e-7
    assert abs(sol.dual_obj - 1.0) < 1e-7
    assert abs(sol.x_blocks[0][0, 0] - 1.0) < 1e-7


def test_trace_min_with_fixed_offdiagonal():
    # min X11 + X22 with X12 = 1: optimum 2 at X = ones
    prob = CanonicalSdp(
        block_sizes=(2,),
        c_entries=((0, 0, 0, 1.0), (0, 1, 1, 1.0)),
        a_entries=(((0, 0, 1, 1.0),),),
        b=(2.0,),
    )
    sol = solve_canonical(prob)
    assert sol.status == "optimal"
    assert abs(sol.primal_obj - 2.0) < 1e-7
    assert abs(sol.x_blocks[0][0, 1] - 1.0) < 1e-6
    assert abs(sol.y[0] - 1.0) < 1e-6


def test_zero_constraints_shortcut():
    psd = CanonicalSdp((2,), ((0, 0, 0, 1.0), (0, 1, 1, 2.0)), (), ())
    sol = solve_canonical(psd)
    assert sol.status == "optimal" and sol.primal_obj == 0.0
    indef = CanonicalSdp((2,), ((0, 0, 1, 1.0),), (), ())
    assert solve_canonical(indef).status == "unbounded"


def test_random_instances_reach_kkt_accuracy():
    rng = np.random.default_rng(2024)
    shapes = [((2,), 1), ((3,), 2), ((3, 2), 3), ((4,), 4), ((2, 2, 3), 5), ((5,), 6)]
    for trial in range(30):
        sizes, m = shapes[trial % len(shapes)]
        prob, feas_p, feas_d = random_instance(rng, sizes, m)
        sol = solve_canonical(prob)
        assert sol.status == "optimal", (trial, sol.status, sol.residuals)
        # weak duality sandwich against the known feasible pair
        assert sol.primal_obj <= feas_p + 1e-6 * (1 + abs(feas_p))
        assert sol.dual_obj >= feas_d - 1e-6 * (1 + abs(feas_d))
        gap = abs(sol.primal_obj - sol.dual_obj)
        assert gap <= 1e-6 * (1 + abs(sol.primal_obj) + abs(sol.dual_obj))
        # primal feasibility recomputed from scratch
        a_mats = [dense_from_entries(sizes, row) for row in prob.a_entries]
        rp = np.array(
            [
                sum(np.tensordot(ab, xb) for ab, xb in zip(arow, sol.x_blocks)) - bi
                for arow, bi in zip(a_mats, prob.b)
            ]
        )
        assert np.linalg.norm(rp) <= 1e-6 * (1 + np.linalg.norm(prob.b))
        # dual feasibility and conic membership
        c_mats = dense_from_entries(sizes, prob.c_entries)
        for blk in range(len(sizes)):
            resid = c_mats[blk] - sol.s_blocks[blk]
            for i, arow in enumerate(a_mats):
                resid -= sol.y[i] * arow[blk]
            assert np.abs(resid).max() <= 1e-6 * (1 + np.abs(c_mats[blk]).max())
            assert np.linalg.eigvalsh(sol.x_blocks[blk]).min() >= -1e-7
            assert np.linalg.eigvalsh(sol.s_blocks[blk]).min() >= -1e-7


def test_agrees_with_boundary_point_method():
    rng = np.random.default_rng(7)
    for trial in range(6):
        sizes, m = [((3,), 2), ((2, 2), 3), ((4,), 3)][trial % 3]
        prob, _, _ = random_instance(rng, sizes, m)
        sol = solve_canonical(prob)
        assert sol.status == "optimal"
        ref_p, ref_d, rp, rd = admm_solve(prob)
        assert rp < 1e-6 and rd < 1e-6, "oracle failed to converge"
        scale = 1 + abs(ref_p)
        assert abs(sol.primal_obj - ref_p) <= 1e-4 * scale
        assert abs(sol.dual_obj - ref_d) <= 1e-4 * scale


def test_infeasible_primal_is_flagged():
    # X11 = -1 contradicts positive semidefiniteness
    prob = CanonicalSdp(
        block_sizes=(2,),
        c_entries=((0, 0, 0, 1.0), (0, 1, 1, 1.0)),
        a_entries=(((0, 0, 0, 1.0),),),
        b=(-1.0,),
    )
    sol = solve_canonical(prob)
    assert sol.status in ("infeasible", "numerical")
    assert sol.status == "infeasible"


def test_unbounded_primal_is_flagged():
    # min -X22 subject to X11 = 1
    prob = CanonicalSdp(
        block_sizes=(2,),
        c_entries=((0, 1, 1, -1.0),),
        a_entries=(((0, 0, 0, 1.0),),),
        b=(1.0,),
    )
    sol = solve_canonical(prob)
    assert sol.status in ("unbounded", "numerical")
    assert sol.status == "unbounded"


def test_solver_is_deterministic():
    rng = np.random.default_rng(99)
    prob, _, _ = random_instance(rng, (3, 2), 4)
    a = solve_canonical(prob)
    b = solve_canonical(prob)
    assert a.primal_obj == b.primal_obj
    assert a.dual_obj == b.dual_obj
    assert a.iterations == b.iterations
    assert all(np.array_equal(x1, x2) for x1, x2 in zip(a.x_blocks, b.x_blocks))


def test_validate_rejects_bad_data():
    with pytest.raises(ValueError):
        CanonicalSdp((2,), ((1, 0, 0, 1.0),), (), ()).validate()
    with pytest.raises(ValueError):
        CanonicalSdp((2,), ((0, 1, 0, 1.0),), (), ()).validate()
    with pytest.raises(ValueError):
        CanonicalSdp((2,), ((0, 0, 2, 1.0),), (), ()).validate()
    with pytest.raises(ValueError):
        CanonicalSdp((2,), (), ((),), (0.0,)).validate()
    with pytest.raises(ValueError):
        CanonicalSdp((2,), (), (((0, 0, 0, 1.0),),), (0.0, 1.0)).validate()


def test_max_iter_status_when_budget_too_small():
    rng = np.random.default_rng(5)
    prob, _, _ = random_instance(rng, (3,), 2)
    sol = solve_canonical(prob, SolverConfig(max_iters=2))
    assert sol.status == "max_iter"
    assert sol.iterations == 2


def test_solution_json_fields():
    prob = CanonicalSdp(
        block_sizes=(1,),
        c_entries=((0, 0, 0, 1.0),),
        a_entries=(((0, 0, 0, 1.0),),),
        b=(1.0,),
    )
    sol = solve_canonical(prob)
    import json

    payload = json.loads(sol.to_json())
    assert payload["status"] == "optimal"
    assert abs(payload["primal_obj"] - 1.0) < 1e-8
    assert set(payload["residuals"]) == {"gap", "primal", "dual"}
