import numpy as np
import pytest

from oracles import RecordingStream, per_step_identity_residuals
from rekgs.dense import DenseMatrix
from rekgs.errors import ArgumentError, SubspaceError
from rekgs.problems import Problem, generate_problem
from rekgs.sampling import RngStream, ScriptedIndices, problem_rng
from rekgs.solvers import (
    Algorithm,
    ErrorRecord,
    IterationTrace,
    initial_state,
    regs_e_run,
    regs_mnr_run,
    rek_s_run,
    rek_zf_run,
    rgs_run,
    rgs_step,
    rk_null_step,
    rk_run,
    rk_step,
    run,
)


def _err(problem, state):
    d = state.estimate() - problem.x_star
    return float(d @ d)


def _gen(m, n, r, consistent, seed=0, s1=2.0):
    return generate_problem(m, n, r, s1, 1.0, consistent=consistent, rng=problem_rng(seed, 100 + r))


# --- single steps -------------------------------------------------------------

def test_rk_step_examples():
    I = DenseMatrix(np.eye(2))
    assert np.array_equal(rk_step(I, np.array([3.0, 5.0]), np.zeros(2), 0), [3.0, 0.0])
    x = np.array([1.0, 4.0])
    assert np.array_equal(rk_step(I, np.array([1.0, 0.0]), x, 0), x)
    np.testing.assert_allclose(rk_step(DenseMatrix([[1.0, 1.0]]), np.array([2.0]), np.zeros(2), 0), [1.0, 1.0])


def test_rk_null_step_examples():
    A = DenseMatrix(np.array([[3.0], [4.0]]))
    np.testing.assert_allclose(rk_null_step(A, np.array([1.0, 0.0]), 0), [16 / 25, -12 / 25], atol=1e-15)
    np.testing.assert_allclose(rk_null_step(A, np.array([-4.0, 3.0]), 0), [-4.0, 3.0])
    np.testing.assert_allclose(rk_null_step(A, np.array([3.0, 4.0]), 0), [0.0, 0.0], atol=1e-15)


def test_rgs_step_examples():
    I = DenseMatrix(np.eye(2))
    b = np.array([3.0, 5.0])
    x, res = rgs_step(I, b, np.zeros(2), -b, 1)
    assert np.array_equal(x, [0.0, 5.0]) and np.array_equal(res, [-3.0, 0.0])
    x2, _ = rgs_step(I, b, x, res, 1)
    assert np.array_equal(x2, x)
    A = DenseMatrix(np.array([[1.0], [1.0]]))
    x, res = rgs_step(A, np.array([1.0, 3.0]), np.zeros(1), np.array([-1.0, -3.0]), 0)
    np.testing.assert_allclose(x, [2.0])
    np.testing.assert_allclose(res, [1.0, -1.0])


def test_zero_row_and_column_rejected():
    A = DenseMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ArgumentError):
        rk_step(A, np.ones(2), np.zeros(2), 1)
    with pytest.raises(ArgumentError):
        rk_null_step(A, np.zeros(2), 1)
    with pytest.raises(ArgumentError):
        rgs_step(A, np.ones(2), np.zeros(2), -np.ones(2), 1)


def test_projection_identities(rng):
    A = DenseMatrix(rng.standard_normal((7, 4)))
    b = rng.standard_normal(7)
    for _ in range(50):
        i, j = rng.integers(7), rng.integers(4)
        x = rk_step(A, b, rng.standard_normal(4), i)
        assert abs(A.row(i) @ x - b[i]) <= 1e-10 * max(abs(b[i]), 1.0)
        z = rk_null_step(A, rng.standard_normal(7), j)
        assert abs(A.col(j) @ z) <= 1e-10 * np.linalg.norm(z)


# --- hand checks with forced indices -------------------------------------------

def _tiny():
    return Problem.from_system(np.array([[1.0], [2.0]]), np.array([1.0, 4.0]))


def test_rek_s_single_iteration_by_hand():
    p = _tiny()
    st = rek_s_run(p, 1, ScriptedIndices([0, 1]))
    # z = b - (9/5) (1, 2); row 1 then uses z_1 = 0.4
    np.testing.assert_allclose(st.z, [-0.8, 0.4], atol=1e-15)
    np.testing.assert_allclose(st.x, [(4.0 - 0.4) / 4.0 * 2.0], atol=1e-15)
    np.testing.assert_allclose(st.x, p.x_star, atol=1e-15)


def test_rek_zf_uses_previous_z():
    p = _tiny()
    st = rek_zf_run(p, 1, ScriptedIndices([0, 1]))
    np.testing.assert_allclose(st.z, [-0.8, 0.4], atol=1e-15)
    # b_1 - z_1 with the old z_1 = b_1 leaves x at zero
    np.testing.assert_allclose(st.x, [0.0], atol=1e-15)
    st = rek_zf_run(p, 2, ScriptedIndices([0, 1, 0, 1]))
    np.testing.assert_allclose(st.x, [1.8], atol=1e-14)


def test_regs_single_iteration_by_hand():
    p = Problem.from_system(np.array([[1.0, 1.0]]), np.array([2.0]))
    st = regs_e_run(p, 1, ScriptedIndices([0, 0]))
    # x -> (2, 0); z -> projection of 0 onto {a^T z = a^T x = 2} = (1, 1)
    np.testing.assert_allclose(st.x, [2.0, 0.0])
    np.testing.assert_allclose(st.z, [1.0, 1.0])
    st = regs_mnr_run(p, 1, ScriptedIndices([0, 0]))
    np.testing.assert_allclose(st.x - st.z, [1.0, 1.0])


# --- convergence on the four system types ----------------------------------------

def test_rek_zf_consistent_full_rank():
    p = _gen(20, 10, 10, True)
    assert _err(p, rek_zf_run(p, 2000, RngStream(1))) < 1e-8


def test_rek_zf_inconsistent_deficient():
    p = _gen(20, 10, 6, False)
    assert _err(p, rek_zf_run(p, 5000, RngStream(1))) < 1e-6


def test_rek_s_consistent_deficient():
    p = _gen(20, 10, 5, True)
    assert _err(p, rek_s_run(p, 3000, RngStream(2))) < 1e-6


def test_rek_s_identity_system():
    p = Problem.from_system(np.eye(4), np.array([1.0, -2.0, 3.0, 0.5]))
    st = rek_s_run(p, 200, RngStream(0))
    np.testing.assert_allclose(st.x, p.b, atol=1e-12)


def test_regs_mnr_underdetermined():
    p = _gen(10, 20, 10, True)
    assert _err(p, regs_mnr_run(p, 5000, RngStream(3))) < 1e-6


def test_regs_e_identity_system():
    p = Problem.from_system(np.eye(4), np.array([1.0, -2.0, 3.0, 0.5]))
    np.testing.assert_allclose(regs_e_run(p, 200, RngStream(0)).z, p.b, atol=1e-12)


def test_regs_e_inconsistent():
    p = _gen(20, 10, 10, False)
    assert _err(p, regs_e_run(p, 3000, RngStream(4))) < 1e-6
    p = _gen(20, 10, 6, False)
    assert _err(p, regs_e_run(p, 5000, RngStream(4))) < 1e-6


def test_rk_consistent_full_rank():
    p = _gen(20, 10, 10, True)
    assert _err(p, rk_run(p, 2000, RngStream(5))) < 1e-8


def test_rk_plateaus_on_inconsistent():
    p = _gen(20, 10, 10, False)
    rk = np.mean([_err(p, rk_run(p, 3000, RngStream(6, t))) for t in range(5)])
    rek = np.mean([_err(p, rek_s_run(p, 3000, RngStream(6, t))) for t in range(5)])
    assert rk > 10 * rek
    assert rk > 1e-3 * (p.x_star @ p.x_star)


def test_rgs_contrast_on_rank_deficient():
    p = _gen(20, 10, 6, True)
    tr = IterationTrace()
    rgs_run(p, 5000, RngStream(7), tr, record_every=100)
    assert tr.errors[-1] > 1e-2 * tr.errors[0]
    assert tr.aux[-1] < 1e-10 * tr.aux[0]


def test_rgs_consistent_full_rank():
    p = _gen(20, 10, 10, True)
    assert _err(p, rgs_run(p, 2000, RngStream(8))) < 1e-8


def test_rgs_residual_refresh_keeps_residual_exact():
    p = _gen(12, 6, 6, False)
    st = rgs_run(p, 10 * 12 * 3 + 7, RngStream(9))
    np.testing.assert_allclose(st.residual, p.A.entries @ st.x - p.b, atol=1e-12)


# --- structural properties ------------------------------------------------------

@pytest.mark.parametrize("alg", ["rek_zf", "rek_s", "regs_e"])
def test_subspace_confinement(alg):
    p = _gen(15, 10, 6, False, seed=3)
    V, U = p.factors.V, p.factors.U
    worst = []

    def hook(record, state):
        if alg.startswith("rek"):
            d = state.x - p.x_star
            e = state.z - p.resid_star
            worst.append(np.linalg.norm(e - U @ (U.T @ e)) / max(np.linalg.norm(p.b), 1e-300))
        else:
            d = state.z - p.x_star
        worst.append(np.linalg.norm(d - V @ (V.T @ d)) / np.linalg.norm(p.x_star))

    run(alg, p, 2000, RngStream(1), hook)
    assert max(worst) < 1e-8


@pytest.mark.parametrize("alg", ["rek_s", "regs_e"])
def test_per_step_identities(alg):
    defects = []
    for seed in range(3):
        p = _gen(15, 8, 5, seed % 2 == 0, seed=seed)
        defects.append(per_step_identity_residuals(p, alg, 500, RngStream(seed)))
    assert np.max(np.concatenate(defects)) < 1e-9


def test_regs_mnr_equals_regs_e():
    for seed in range(5):
        p = _gen(20, 10, 6 + seed, seed % 2 == 0, seed=seed)
        a, b = [], []
        run("regs_mnr", p, 1000, RngStream(seed), lambda r, s: a.append(s.estimate().copy()))
        run("regs_e", p, 1000, RngStream(seed), lambda r, s: b.append(s.estimate().copy()))
        assert np.max(np.abs(np.array(a) - np.array(b))) < 1e-8


def test_rek_s_and_regs_e_share_the_trajectory():
    # from the default starts, REK-S x^k and REGS-E z^k obey the same recursion
    for seed in range(5):
        p = _gen(15, 9, 5 + seed, seed % 2 == 1, seed=seed)
        a, b = [], []
        run("rek_s", p, 800, RngStream(seed), lambda r, s: a.append(s.estimate().copy()))
        run("regs_e", p, 800, RngStream(seed), lambda r, s: b.append(s.estimate().copy()))
        assert np.max(np.abs(np.array(a) - np.array(b))) < 1e-9


def test_null_vectors_are_fixed_by_every_row_projection():
    for seed in range(20):
        p = _gen(12, 8, 4, True, seed=seed)
        A = p.A.entries
        V = p.factors.V
        v = problem_rng(seed, 1).standard_normal(8)
        v -= V @ (V.T @ v)
        probs = p.A.row_norms_sq / p.A.frob_sq
        expect = sum(pi * np.sum((v - (a @ v) / (a @ a) * a) ** 2) for pi, a in zip(probs, A))
        assert abs(expect - v @ v) <= 1e-10 * (v @ v)


def _rgs_conditional(p, x):
    A = p.A
    res = A.entries @ x - p.b
    out = 0.0
    for j in range(A.cols):
        _, r = rgs_step(A, p.b, x, res, j)
        e = r + p.resid_star
        out += A.col_norms_sq[j] / A.frob_sq * (e @ e)
    e0 = res + p.resid_star
    return out, e0 @ e0


@pytest.mark.parametrize("flat", [False, True])
def test_rgs_residual_contraction(flat):
    p = generate_problem(14, 9, 6, 1.0 if flat else 2.0, 1.0, consistent=False, rng=problem_rng(21))
    rho = 1 - p.spectral.sigma_min_nonzero ** 2 / p.A.frob_sq
    g = problem_rng(22)
    for _ in range(25):
        x = g.standard_normal(9)
        nxt, cur = _rgs_conditional(p, x)
        assert nxt <= rho * cur + 1e-10 * cur
        if flat:
            assert abs(nxt - rho * cur) <= 1e-10 * cur


# --- runner contract ------------------------------------------------------------------

def test_trace_hook_schedule():
    p = _gen(10, 6, 6, True)
    tr = IterationTrace()
    run("rek_s", p, 25, RngStream(0), tr, record_every=10)
    assert tr.ks.tolist() == [0, 10, 20, 25]
    d = p.x_star
    assert tr.errors[0] == d @ d
    with pytest.raises(ArgumentError):
        tr(ErrorRecord(3, 0.0))


def test_trace_does_not_change_iterates():
    p = _gen(10, 6, 4, False)
    a = run("regs_e", p, 137, RngStream(4))
    b = run("regs_e", p, 137, RngStream(4), IterationTrace(), record_every=7)
    assert np.array_equal(a.z, b.z) and a.k == b.k == 137


def test_resume_from_state():
    p = _gen(10, 6, 4, False)
    rng = RngStream(2)
    st = run("rek_s", p, 60, rng)
    st = run("rek_s", p, 40, rng, state=st)
    ref = run("rek_s", p, 100, RngStream(2))
    assert st.k == 100 and np.array_equal(st.x, ref.x)


def test_zero_iterations():
    p = _gen(10, 6, 6, True)
    tr = IterationTrace()
    st = run("rgs", p, 0, RngStream(0), tr)
    assert st.k == 0 and tr.ks.tolist() == [0]
    with pytest.raises(ArgumentError):
        run("rgs", p, -1, RngStream(0))
    with pytest.raises(ArgumentError):
        run("rgs", p, 1, RngStream(0), record_every=0)


def test_initial_state_defaults_and_validation():
    p = _gen(12, 8, 5, False)
    st = initial_state(p, "rek_s")
    assert np.array_equal(st.z, p.b) and not st.x.any()
    st = initial_state(p, "regs_mnr")
    assert st.z.shape == (8,) and not st.z.any()
    V = p.factors.V
    off = np.ones(8) - V @ (V.T @ np.ones(8))
    with pytest.raises(SubspaceError):
        initial_state(p, "rek_s", x0=off)
    with pytest.raises(SubspaceError):
        initial_state(p, "regs_e", z0=off)
    with pytest.raises(SubspaceError):
        initial_state(p, "rek_s", z0=p.b + p.resid_star)
    initial_state(p, "rek_s", x0=V @ np.ones(5), z0=p.b + p.A.entries @ np.ones(8))
    initial_state(p, "regs_mnr", x0=off, z0=off + V[:, 0])
    with pytest.raises(ArgumentError):
        initial_state(p, "rk", z0=np.zeros(12))
    with pytest.raises(ArgumentError):
        initial_state(p, "rk", x0=np.zeros(3))


def test_algorithm_parse():
    assert Algorithm.parse("REK-S") is Algorithm.REK_S
    assert Algorithm.parse("regs_e") is Algorithm.REGS_E
    with pytest.raises(ArgumentError):
        Algorithm.parse("cgls")


def test_recorded_draw_order_is_column_then_row():
    p = Problem.from_system(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), np.ones(2))
    rec = RecordingStream(RngStream(0))
    # column 2 is zero and must never be drawn; rows are 0..1, columns 0..1
    run("rek_s", p, 50, rec)
    assert len(rec.drawn) == 100 and max(rec.drawn) <= 1
