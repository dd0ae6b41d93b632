import itertools

import numpy as np
import pytest

from l1subspace.core import (
    AdaptiveBeta,
    DataMatrix,
    FixedBeta,
    SignMatrix,
    SolverConfig,
    StiefelPoint,
    objective_h,
    sign_select,
)
from l1subspace.errors import (
    DomainError,
    FeasibilityError,
    InfeasibleBoundError,
    SelectionError,
    ShapeError,
)
from l1subspace.linalg import random_stiefel
from l1subspace.solvers import (
    adaptive_beta,
    check_alpha_condition,
    criticality_residual,
    extrapolate,
    gamma_star,
    solve,
    sufficient_decrease_check,
    update_P,
    update_Q,
)


def centered(values):
    values = np.asarray(values, dtype=float)
    return DataMatrix(values - values.mean(axis=1, keepdims=True), centered=True)


def random_centered(d, n, rng):
    return centered(rng.standard_normal((d, n)))


# ---------------------------------------------------------------------------
# extrapolate


def test_extrapolate_gamma_zero_is_projector():
    Q = random_stiefel(5, 2, 3)
    E = extrapolate(Q, random_stiefel(5, 2, 4), 0.0)
    assert np.array_equal(E, Q.values @ Q.values.T)


def test_extrapolate_equal_arguments():
    Q = random_stiefel(4, 2, 8)
    E = extrapolate(Q, Q, 0.7)
    assert np.allclose(E, Q.values @ Q.values.T, atol=1e-15)


def test_extrapolate_axis_fixture():
    # frozen: Q = e1, Q_prev = e2, gamma = 1 gives diag(2, -1)
    Q = StiefelPoint([[1.0], [0.0]])
    Q_prev = StiefelPoint([[0.0], [1.0]])
    E = extrapolate(Q, Q_prev, 1.0)
    assert np.array_equal(E, [[2.0, 0.0], [0.0, -1.0]])


def test_extrapolate_is_symmetric():
    rng = np.random.default_rng(12)
    Q = random_stiefel(6, 3, rng)
    Qp = random_stiefel(6, 3, rng)
    E = extrapolate(Q, Qp, 0.5)
    assert np.linalg.norm(E - E.T) <= 1e-10


def test_extrapolate_domain_and_shape_errors():
    Q = StiefelPoint([[1.0], [0.0]])
    with pytest.raises(DomainError):
        extrapolate(Q, Q, 1.5)
    with pytest.raises(ShapeError):
        extrapolate(Q, StiefelPoint([[1.0], [0.0], [0.0]]), 0.5)


# ---------------------------------------------------------------------------
# update_P


def test_update_p_zero_data_keeps_signs():
    X = DataMatrix(np.zeros((2, 3)), centered=True)
    P = SignMatrix([[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])
    out = update_P(P, X, np.eye(2), 0.5)
    assert np.array_equal(out.values, P.values)


def test_update_p_huge_alpha_keeps_signs():
    rng = np.random.default_rng(2)
    X = DataMatrix(rng.uniform(-1.0, 1.0, size=(3, 4)))
    P = SignMatrix(np.where(rng.standard_normal((4, 3)) >= 0, 1.0, -1.0))
    out = update_P(P, X, np.eye(3), 1e12)
    assert np.array_equal(out.values, P.values)


def test_update_p_minimizes_prox_objective():
    # enumeration oracle over all sign matrices of the proximal objective
    rng = np.random.default_rng(7)
    for _ in range(5):
        n, d = 2, 2
        X = DataMatrix(rng.standard_normal((d, n)))
        E = rng.standard_normal((d, d))
        E = (E + E.T) / 2.0
        P_cur = np.where(rng.standard_normal((n, d)) >= 0, 1.0, -1.0)
        alpha = float(rng.uniform(0.2, 3.0))
        T = X.values.T @ E

        def prox_obj(P):
            return -np.vdot(P, T) + 0.5 * alpha * np.linalg.norm(P - P_cur) ** 2

        best = min(
            prox_obj(np.array(bits, dtype=float).reshape(n, d))
            for bits in itertools.product([-1.0, 1.0], repeat=n * d)
        )
        got = update_P(SignMatrix(P_cur), X, E, alpha)
        assert prox_obj(got.values) == pytest.approx(best, abs=1e-12)


def test_update_p_errors():
    X = DataMatrix(np.zeros((2, 3)))
    P = SignMatrix(np.ones((3, 2)))
    with pytest.raises(DomainError):
        update_P(P, X, np.eye(2), 0.0)
    with pytest.raises(ShapeError):
        update_P(P, X, np.eye(3), 1.0)
    with pytest.raises(ShapeError):
        update_P(SignMatrix(np.ones((2, 2))), X, np.eye(2), 1.0)


# ---------------------------------------------------------------------------
# update_Q


def test_update_q_zero_data_returns_same_point():
    X = DataMatrix(np.zeros((3, 4)))
    Q = random_stiefel(3, 2, 5)
    P = SignMatrix(np.ones((4, 3)))
    out = update_Q(Q, P, X, 2.0)
    assert out is Q


def test_update_q_k1_closed_form():
    rng = np.random.default_rng(9)
    X = DataMatrix(rng.standard_normal((4, 6)))
    Q = random_stiefel(4, 1, rng)
    P = SignMatrix(np.where(rng.standard_normal((6, 4)) >= 0, 1.0, -1.0))
    beta = 3.0
    XP = X.values @ P.values
    S = XP + XP.T
    M = Q.values + (S @ Q.values) / beta
    got = update_Q(Q, P, X, beta)
    assert np.allclose(got.values, M / np.linalg.norm(M), atol=1e-12)


def test_update_q_maximizes_procrustes_objective():
    rng = np.random.default_rng(21)
    X = DataMatrix(rng.standard_normal((5, 7)))
    Q = random_stiefel(5, 2, rng)
    P = SignMatrix(np.where(rng.standard_normal((7, 5)) >= 0, 1.0, -1.0))
    beta = 4.0
    XP = X.values @ P.values
    M = Q.values + ((XP + XP.T) @ Q.values) / beta
    got = update_Q(Q, P, X, beta)
    best = float(np.vdot(got.values, M))
    for _ in range(500):
        Z, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        assert float(np.vdot(Z, M)) <= best + 1e-8


def test_update_q_errors():
    X = DataMatrix(np.zeros((2, 3)))
    Q = StiefelPoint([[1.0], [0.0]])
    with pytest.raises(DomainError):
        update_Q(Q, SignMatrix(np.ones((3, 2))), X, 0.0)
    with pytest.raises(ShapeError):
        update_Q(Q, SignMatrix(np.ones((2, 2))), X, 1.0)


# ---------------------------------------------------------------------------
# step-size rules


def test_gamma_star_zero_data():
    assert gamma_star(1.0, 1.0, DataMatrix(np.zeros((2, 2)))) == 1.0


def test_gamma_star_values():
    X = DataMatrix([[1.0, 0.0], [0.0, 0.0]])  # spectral norm exactly 1
    assert gamma_star(8.0, 1.0, X) == pytest.approx(1.0, rel=1e-5)
    assert gamma_star(4.0, 1.0, X) == pytest.approx(0.5, rel=1e-5)
    assert gamma_star(16.0, 1.0, X) == 1.0  # capped at one


def test_gamma_star_domain_errors():
    X = DataMatrix(np.eye(2))
    with pytest.raises(DomainError):
        gamma_star(0.0, 1.0, X)
    with pytest.raises(DomainError):
        gamma_star(1.0, -2.0, X)


def test_adaptive_beta_zero_data():
    X = DataMatrix(np.zeros((2, 3)))
    P = SignMatrix(np.ones((3, 2)))
    assert adaptive_beta(X, P, 2.0, 100.0) == 3.0


def test_adaptive_beta_known_norm():
    # X P = [[10]] so the spectral norm is exactly 10 and b = 1.5*2 + 20
    X = DataMatrix([[10.0]])
    P = SignMatrix([[1.0]])
    assert adaptive_beta(X, P, 2.0, 100.0) == pytest.approx(23.0, rel=1e-6)
    with pytest.raises(InfeasibleBoundError):
        adaptive_beta(X, P, 2.0, 20.0)


# ---------------------------------------------------------------------------
# stationarity diagnostics


def test_criticality_zero_for_full_k():
    # with K = d the projector is the identity and the gradient is normal
    rng = np.random.default_rng(3)
    X = DataMatrix(rng.standard_normal((3, 5)))
    Q = StiefelPoint(np.eye(3))
    T = (X.values.T @ Q.values) @ Q.values.T
    P = SignMatrix(sign_select(T, np.ones_like(T)))
    assert criticality_residual(Q, P, X) <= 1e-10


def test_criticality_selection_error():
    X = DataMatrix(np.eye(2))
    Q = StiefelPoint([[1.0], [0.0]])
    P = SignMatrix([[-1.0, 1.0], [1.0, 1.0]])  # disagrees at the (0,0) entry
    with pytest.raises(SelectionError):
        criticality_residual(Q, P, X)


def test_criticality_zero_data():
    X = DataMatrix(np.zeros((2, 2)))
    Q = StiefelPoint([[1.0], [0.0]])
    P = SignMatrix(np.ones((2, 2)))
    assert criticality_residual(Q, P, X) == 0.0


def test_check_alpha_condition_thresholds():
    X = DataMatrix(np.diag([3.0, 2.0]))
    Q = StiefelPoint(np.eye(2))
    assert check_alpha_condition(X, Q, 1.0)
    assert not check_alpha_condition(X, Q, 2.0)  # strict inequality
    assert not check_alpha_condition(X, Q, 2.5)
    assert check_alpha_condition(DataMatrix(np.zeros((2, 2))), Q, 5.0)
    with pytest.raises(DomainError):
        check_alpha_condition(X, Q, 0.0)


# ---------------------------------------------------------------------------
# solve


def practical_config(**kw):
    base = dict(alpha=1e-6, beta_mode=FixedBeta(10.0), gamma=1.0,
                max_iters=2000, tol=1e-6, seed=0)
    base.update(kw)
    return SolverConfig(**base)


def test_solve_zero_data_one_sweep():
    X = DataMatrix(np.zeros((3, 5)), centered=True)
    Q0 = random_stiefel(3, 2, 0)
    rep = solve(X, practical_config(), Q0)
    assert rep.iterations == 1
    assert rep.stop_reason == "tolerance"
    assert np.array_equal(rep.final_Q.values, Q0.values)
    assert rep.final_objective == 0.0
    assert rep.criticality == 0.0
    assert len(rep.trace) == 2


def test_solve_huge_tol_stops_immediately():
    rng = np.random.default_rng(1)
    X = random_centered(6, 12, rng)
    rep = solve(X, practical_config(tol=1e9), random_stiefel(6, 2, 2))
    assert rep.iterations == 1
    assert rep.stop_reason == "tolerance"


def test_solve_max_iters_stop():
    rng = np.random.default_rng(2)
    X = random_centered(6, 12, rng)
    rep = solve(X, practical_config(max_iters=3, tol=1e-30), random_stiefel(6, 2, 2))
    assert rep.stop_reason == "max_iters"
    assert rep.iterations == 3
    assert len(rep.trace) == 4


def test_solve_requires_centered():
    X = DataMatrix(np.ones((2, 3)))
    with pytest.raises(FeasibilityError):
        solve(X, practical_config(), StiefelPoint([[1.0], [0.0]]))


def test_solve_rejects_bad_init_shapes():
    rng = np.random.default_rng(3)
    X = random_centered(4, 8, rng)
    with pytest.raises(ShapeError):
        solve(X, practical_config(), random_stiefel(5, 2, 0))
    with pytest.raises(ShapeError):
        solve(X, practical_config(), random_stiefel(4, 2, 0),
              SignMatrix(np.ones((7, 4))))


def test_solve_k_cannot_exceed_n():
    rng = np.random.default_rng(4)
    X = random_centered(6, 2, rng)
    with pytest.raises(ShapeError):
        solve(X, practical_config(), random_stiefel(6, 3, 0))


def test_solve_is_deterministic():
    rng = np.random.default_rng(5)
    X = random_centered(8, 20, rng)
    Q0 = random_stiefel(8, 2, 1)
    a = solve(X, practical_config(max_iters=40, tol=1e-30), Q0)
    b = solve(X, practical_config(max_iters=40, tol=1e-30), Q0)
    assert a.trace.phi == b.trace.phi
    assert a.trace.gap[1:] == b.trace.gap[1:]
    assert np.array_equal(a.final_Q.values, b.final_Q.values)
    assert np.array_equal(a.final_P.values, b.final_P.values)


def test_solve_objective_never_worse_than_start():
    rng = np.random.default_rng(6)
    X = random_centered(10, 30, rng)
    Q0 = random_stiefel(10, 3, 7)
    rep = solve(X, practical_config(), Q0)
    assert rep.trace.h[-1] <= rep.trace.h[0] + 1e-9


def test_palm_specialization_is_bit_identical():
    # gamma = 0 must match a hand-rolled loop of the two plain updates
    rng = np.random.default_rng(0)
    X = random_centered(8, 20, rng)
    Q0 = random_stiefel(8, 2, 1)
    cfg = practical_config(alpha=1e-4, beta_mode=FixedBeta(5.0), gamma=0.0,
                           max_iters=15, tol=1e-14)
    rep = solve(X, cfg, Q0)

    T0 = (X.values.T @ Q0.values) @ Q0.values.T
    P = SignMatrix(sign_select(T0, np.ones((20, 8))))
    Q = Q0
    qs = [Q0.values]
    for _ in range(rep.iterations):
        P = update_P(P, X, Q.values @ Q.values.T, 1e-4)
        Q = update_Q(Q, P, X, 5.0)
        qs.append(Q.values)
    for k, snap in zip(rep.trace.snapshot_iters, rep.trace.q_snapshots):
        assert np.array_equal(snap, qs[k])
    assert np.array_equal(rep.final_P.values, P.values)


def test_solve_restart_from_converged_point_stays_put():
    # a converged run restarted at its own output must stop in one sweep
    rng = np.random.default_rng(5)
    Q_true = random_stiefel(12, 2, 99)
    X = centered(Q_true.values @ rng.standard_normal((2, 30)))
    tight = practical_config(tol=1e-12, max_iters=20000)
    first = solve(X, tight, random_stiefel(12, 2, 0))
    assert first.stop_reason == "tolerance"
    again = solve(X, practical_config(max_iters=50), first.final_Q, first.final_P)
    assert again.iterations == 1
    assert again.stop_reason == "tolerance"
    assert np.allclose(again.final_Q.values, first.final_Q.values, atol=1e-9)
    assert again.criticality <= 1e-6


def test_solve_tight_tolerance_reaches_stationarity():
    rng = np.random.default_rng(11)
    X = random_centered(16, 60, rng)
    rep = solve(X, practical_config(tol=1e-10, max_iters=20000),
                random_stiefel(16, 3, 1))
    assert rep.stop_reason == "tolerance"
    assert np.isfinite(rep.criticality)
    assert rep.criticality <= 1e-6 * (1.0 + np.linalg.norm(X.values))


# ---------------------------------------------------------------------------
# theory mode


def theory_config(**kw):
    base = dict(alpha=1e-6, beta_mode=AdaptiveBeta(1.0, 1e9), gamma=1.0,
                max_iters=150, tol=1e-8, seed=0, theory_mode=True)
    base.update(kw)
    return SolverConfig(**base)


def test_theory_mode_potential_decreases():
    rng = np.random.default_rng(17)
    X = random_centered(10, 40, rng)
    rep = solve(X, theory_config(), random_stiefel(10, 2, 3))
    phi = np.asarray(rep.trace.phi)
    assert np.all(np.diff(phi) <= 1e-9 * (1.0 + np.abs(phi[:-1])))
    assert rep.trace.gamma_star is not None


def test_sufficient_decrease_check_clean_run():
    rng = np.random.default_rng(19)
    X = random_centered(10, 40, rng)
    cfg = theory_config()
    rep = solve(X, cfg, random_stiefel(10, 2, 4))
    out = sufficient_decrease_check(rep.trace, cfg)
    assert out.violations == ()
    assert out.violations_weak == ()
    assert out.checked == rep.iterations
    assert 0.0 <= out.kappa1_weak <= out.kappa1


def test_sufficient_decrease_check_flags_doctored_trace():
    rng = np.random.default_rng(23)
    X = random_centered(8, 24, rng)
    cfg = theory_config(max_iters=30)
    rep = solve(X, cfg, random_stiefel(8, 2, 5))
    rep.trace.phi[3] = rep.trace.phi[2] + 1.0  # inject an increase
    out = sufficient_decrease_check(rep.trace, cfg)
    assert 3 in out.violations or 4 in out.violations


def test_sufficient_decrease_check_requires_theory_mode():
    rng = np.random.default_rng(29)
    X = random_centered(6, 12, rng)
    cfg = practical_config(max_iters=10, tol=1e-30)
    rep = solve(X, cfg, random_stiefel(6, 2, 6))
    with pytest.raises(DomainError):
        sufficient_decrease_check(rep.trace, cfg)


def test_theory_mode_gamma_is_capped():
    rng = np.random.default_rng(31)
    X = random_centered(8, 20, rng)
    cfg = theory_config(max_iters=40)
    rep = solve(X, cfg, random_stiefel(8, 2, 7))
    assert rep.trace.gamma_star <= 1.0
    # the run must still behave like a descent method near the cap
    assert rep.trace.phi[-1] <= rep.trace.phi[0]
