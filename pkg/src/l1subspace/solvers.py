"""Alternating proximal scheme for the two-block L1 projection objective.

One sweep updates the sign block by an exact proximal step (an entrywise
sign with ties kept) and the Stiefel block by a linearized proximal step
whose solution is an orthogonal Procrustes problem, solved by the polar
factor.  A quadratic extrapolation of the projector Q Q^T accelerates the
sign step; gamma = 0 recovers the plain scheme.

Two parameter regimes are supported.  The practical regime takes a fixed
Q-step parameter beta and any gamma in [0, 1].  The theory regime derives
beta each sweep from the current sign block and caps gamma strictly below
gamma_star, which makes the recorded potential provably decrease; the
sufficient_decrease_check audit verifies that on a finished trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AdaptiveBeta,
    DataMatrix,
    IterateTriple,
    SignMatrix,
    SolverConfig,
    StiefelPoint,
    objective_h,
    objective_l,
    sign_select,
)
from .errors import (
    DomainError,
    FeasibilityError,
    InfeasibleBoundError,
    SelectionError,
    ShapeError,
)
from .linalg import polar_factor, spectral_norm

# iterations whose index exceeds this are snapshot-thinned to every tenth
SNAPSHOT_DENSE_LIMIT = 10_000
# entries of X^T Q Q^T at or below this magnitude count as zero
ZERO_TOL = 1e-12
# margin by which theory mode keeps gamma strictly below gamma_star
GAMMA_MARGIN = 1e-12


@dataclass
class RunTrace:
    """Per-iteration diagnostics of one run.

    Entry k describes iterate k; entry 0 is the starting point, so the step
    fields hold nan there.  ``gap[k]`` is the full triple step
    ||C^k - C^{k-1}||_F including the trailing Q block.  Q snapshots are kept
    for every iteration up to ``SNAPSHOT_DENSE_LIMIT`` and every tenth one
    beyond that.
    """

    phi: list[float] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    dP: list[float] = field(default_factory=list)
    dQ: list[float] = field(default_factory=list)
    gap: list[float] = field(default_factory=list)
    wall: list[float] = field(default_factory=list)
    snapshot_iters: list[int] = field(default_factory=list)
    q_snapshots: list[np.ndarray] = field(default_factory=list)
    gamma_star: float | None = None
    final_criticality: float | None = None

    def __len__(self):
        return len(self.phi)


@dataclass(frozen=True)
class DecreaseReport:
    """Audit of the per-sweep potential decrease on a theory-mode trace.

    ``kappa1`` builds the decrease constant from the upper beta bound; the
    weaker ``kappa1_weak`` uses the lower bound, which is what the descent
    derivation itself supports, so both readings can be checked.
    """

    kappa1: float
    kappa1_weak: float
    violations: tuple[int, ...]
    violations_weak: tuple[int, ...]
    checked: int


@dataclass(frozen=True)
class RunReport:
    """Outcome of one solve: final blocks, diagnostics, and the trace."""

    final_P: SignMatrix
    final_Q: StiefelPoint
    final_objective: float
    trace: RunTrace
    criticality: float
    alpha_condition_holds: bool
    stop_reason: str
    iterations: int
    wall_time: float
    final_gap: float
    tev: float | None = None


@dataclass
class SolverState:
    """Mutable loop state: counter, current triple, extrapolated projector,
    and the Q-step parameter used in the latest sweep."""

    k: int
    C: IterateTriple
    E: np.ndarray | None
    beta_k: float | None


def extrapolate(Q: StiefelPoint, Q_prev: StiefelPoint, gamma: float) -> np.ndarray:
    """Extrapolated projector E = Q Q^T + gamma (Q Q^T - Q_prev Q_prev^T)."""
    if not (isinstance(gamma, (int, float)) and 0.0 <= gamma <= 1.0):
        raise DomainError(f"gamma must lie in [0, 1], got {gamma!r}")
    if Q_prev.values.shape != Q.values.shape:
        raise ShapeError(
            f"Q_prev shape {Q_prev.values.shape} differs from Q shape {Q.values.shape}"
        )
    G = Q.values @ Q.values.T
    if gamma == 0.0:
        return G
    return G + gamma * (G - Q_prev.values @ Q_prev.values.T)


def update_P(P: SignMatrix, X: DataMatrix, E: np.ndarray, alpha: float) -> SignMatrix:
    """Proximal sign step: entrywise sign of P + X^T E / alpha, keeping ties.

    This is the exact minimizer of -<P', X^T E> + (alpha/2) ||P' - P||_F^2
    over sign matrices P'.
    """
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be positive and finite, got {alpha!r}")
    E = np.asarray(E, dtype=float)
    if E.shape != (X.d, X.d):
        raise ShapeError(f"E must be {X.d} x {X.d}, got {E.shape}")
    if P.values.shape != (X.n, X.d):
        raise ShapeError(f"P must be {X.n} x {X.d}, got {P.values.shape}")
    return SignMatrix(sign_select(P.values + (X.values.T @ E) / alpha, P.values))


def update_Q(Q: StiefelPoint, P_next: SignMatrix, X: DataMatrix, beta: float) -> StiefelPoint:
    """Procrustes step: polar factor of Q + (S Q) / beta with S = XP + (XP)^T.

    This maximizes <Q', S Q + beta Q> over the Stiefel manifold, i.e. the
    linearized objective plus the proximal coupling to the previous Q.
    """
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be positive and finite, got {beta!r}")
    if P_next.values.shape != (X.n, X.d):
        raise ShapeError(f"P must be {X.n} x {X.d}, got {P_next.values.shape}")
    if Q.d != X.d:
        raise ShapeError(f"Q has {Q.d} rows but X has {X.d} rows")
    XP = X.values @ P_next.values
    S = XP + XP.T
    if not S.any():
        return Q
    M = Q.values + (S @ Q.values) / beta
    return StiefelPoint(polar_factor(M))


def gamma_star(alpha_star: float, beta_star: float, X: DataMatrix, seed: int = 0) -> float:
    """Extrapolation cap gamma* = min(1, alpha_star beta_star / (8 ||X||^2))."""
    for name, value in (("alpha_star", alpha_star), ("beta_star", beta_star)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")
    norm = spectral_norm(X.values, tol=1e-6, seed=seed)
    if norm == 0.0:
        return 1.0
    return min(1.0, alpha_star * beta_star / (8.0 * norm * norm))


def adaptive_beta(
    X: DataMatrix, P: SignMatrix, beta_star: float, beta_sup: float, seed: int = 0
) -> float:
    """Theory-mode Q-step parameter (3/2) beta_star + 2 ||X P||_2.

    Raises InfeasibleBoundError when the value would exceed beta_sup.
    """
    if not (isinstance(beta_star, (int, float)) and math.isfinite(beta_star) and beta_star > 0):
        raise DomainError(f"beta_star must be positive and finite, got {beta_star!r}")
    if P.values.shape != (X.n, X.d):
        raise ShapeError(f"P must be {X.n} x {X.d}, got {P.values.shape}")
    b = 1.5 * beta_star + 2.0 * spectral_norm(X.values @ P.values, tol=1e-6, seed=seed)
    if b > beta_sup:
        raise InfeasibleBoundError(
            f"adaptive beta {b:.6g} exceeds the configured bound beta_sup = {beta_sup:.6g}"
        )
    return b


def criticality_residual(Q: StiefelPoint, P: SignMatrix, X: DataMatrix) -> float:
    """Stationarity measure at (P, Q): tangent part of the objective gradient.

    With S = XP + P^T X^T and G = -S Q, the residual is
    ||G - Q sym(Q^T G)||_F, the distance of G from the normal cone at Q.
    P must agree with sign(X^T Q Q^T) wherever that matrix is nonzero
    (entries with magnitude at most ``ZERO_TOL`` count as zero).
    """
    if Q.d != X.d or P.values.shape != (X.n, X.d):
        raise ShapeError(
            f"inconsistent shapes: X is {X.d} x {X.n}, Q is {Q.d} x {Q.k}, "
            f"P is {P.values.shape}"
        )
    T = (X.values.T @ Q.values) @ Q.values.T
    nz = np.abs(T) > ZERO_TOL
    if not np.array_equal(np.sign(T)[nz], P.values[nz]):
        bad = int(np.sum(np.sign(T)[nz] != P.values[nz]))
        raise SelectionError(
            f"P disagrees with sign(X^T Q Q^T) at {bad} nonzero entries"
        )
    XP = X.values @ P.values
    G = -(XP + XP.T) @ Q.values
    QtG = Q.values.T @ G
    R = G - Q.values @ ((QtG + QtG.T) / 2.0)
    return float(np.linalg.norm(R))


def check_alpha_condition(X: DataMatrix, Q: StiefelPoint, alpha_star: float) -> bool:
    """Post-hoc step-size test: alpha_star below the smallest nonzero entry
    magnitude of X^T Q Q^T.  Vacuously true when that matrix is zero."""
    if not (isinstance(alpha_star, (int, float)) and math.isfinite(alpha_star) and alpha_star > 0):
        raise DomainError(f"alpha_star must be positive and finite, got {alpha_star!r}")
    if Q.d != X.d:
        raise ShapeError(f"Q has {Q.d} rows but X has {X.d} rows")
    T = (X.values.T @ Q.values) @ Q.values.T
    mags = np.abs(T)
    nz = mags > ZERO_TOL
    if not nz.any():
        return True
    return alpha_star < float(mags[nz].min())


def _record(trace, snapshots, k, phi, h, dP, dQ, gap, wall, Q):
    trace.phi.append(phi)
    trace.h.append(h)
    trace.dP.append(dP)
    trace.dQ.append(dQ)
    trace.gap.append(gap)
    trace.wall.append(wall)
    if snapshots and (k <= SNAPSHOT_DENSE_LIMIT or k % 10 == 0):
        trace.snapshot_iters.append(k)
        trace.q_snapshots.append(Q.values)


def solve(
    X: DataMatrix,
    config: SolverConfig,
    init_Q: StiefelPoint,
    init_P: SignMatrix | None = None,
    *,
    snapshots: bool = True,
) -> RunReport:
    """Run the alternating scheme from (init_P, init_Q) until the triple step
    drops below config.tol or config.max_iters sweeps have run.

    X must be centered.  When init_P is omitted it starts from
    sign(X^T Q0 Q0^T) with ties broken to +1.  Identical inputs produce
    identical reports; the only nondeterministic field is wall time.
    """
    if not X.centered:
        raise FeasibilityError("solve requires a centered data matrix")
    if init_Q.d != X.d:
        raise ShapeError(f"init_Q has {init_Q.d} rows but X has {X.d} rows")
    if init_Q.k > min(X.d, X.n):
        raise ShapeError(
            f"K = {init_Q.k} exceeds min(d, n) = {min(X.d, X.n)}"
        )
    t0 = time.perf_counter()

    Q = init_Q
    if init_P is None:
        T0 = (X.values.T @ Q.values) @ Q.values.T
        P = SignMatrix(sign_select(T0, np.ones((X.n, X.d))))
    else:
        if init_P.values.shape != (X.n, X.d):
            raise ShapeError(
                f"init_P must be {X.n} x {X.d}, got {init_P.values.shape}"
            )
        P = init_P

    gamma = float(config.gamma)
    trace = RunTrace()
    if config.theory_mode:
        gs = gamma_star(config.alpha, config.beta_mode.beta_star, X, seed=config.seed)
        gamma = max(0.0, min(gamma, gs - GAMMA_MARGIN))
        assert gamma < gs
        trace.gamma_star = gs

    state = SolverState(k=0, C=IterateTriple(P, Q, Q), E=None, beta_k=None)
    h0 = objective_h(P, Q, X)
    _record(trace, snapshots, 0, h0, h0, math.nan, math.nan, math.nan,
            time.perf_counter() - t0, Q)

    beta_star_phi = config.beta_star
    dQ_prev = 0.0
    stop_reason = "max_iters"
    final_gap = math.nan
    for k in range(1, config.max_iters + 1):
        C = state.C
        state.E = extrapolate(C.Q, C.Q_prev, gamma)
        P_next = update_P(C.P, X, state.E, config.alpha)
        if isinstance(config.beta_mode, AdaptiveBeta):
            bm = config.beta_mode
            state.beta_k = max(
                adaptive_beta(X, C.P, bm.beta_star, bm.beta_sup, seed=config.seed),
                adaptive_beta(X, P_next, bm.beta_star, bm.beta_sup, seed=config.seed),
            )
        else:
            state.beta_k = config.beta_mode.value
        Q_next = update_Q(C.Q, P_next, X, state.beta_k)

        dP = float(np.linalg.norm(P_next.values - C.P.values))
        dQ = float(np.linalg.norm(Q_next.values - C.Q.values))
        gap = math.sqrt(dP * dP + dQ * dQ + dQ_prev * dQ_prev)
        state.C = IterateTriple(P_next, Q_next, C.Q)
        state.k = k

        hk = objective_h(P_next, Q_next, X)
        phik = hk + 0.5 * beta_star_phi * dQ * dQ
        _record(trace, snapshots, k, phik, hk, dP, dQ, gap,
                time.perf_counter() - t0, Q_next)

        if gap < config.tol:
            stop_reason = "tolerance"
            final_gap = gap
            break
        dQ_prev = dQ
        final_gap = gap

    P, Q = state.C.P, state.C.Q
    try:
        crit = criticality_residual(Q, P, X)
    except SelectionError:
        crit = math.nan
    trace.final_criticality = crit
    return RunReport(
        final_P=P,
        final_Q=Q,
        final_objective=objective_l(Q, X),
        trace=trace,
        criticality=crit,
        alpha_condition_holds=check_alpha_condition(X, Q, config.alpha),
        stop_reason=stop_reason,
        iterations=state.k,
        wall_time=time.perf_counter() - t0,
        final_gap=final_gap,
    )


def sufficient_decrease_check(
    trace: RunTrace, config: SolverConfig, X: DataMatrix | None = None
) -> DecreaseReport:
    """Audit Phi(C^k) - Phi(C^{k-1}) <= -kappa1 ||C^k - C^{k-1}||_F^2 on a
    theory-mode trace, with slack 1e-9 (1 + |Phi|) per comparison.

    gamma_star comes from the trace when present, otherwise it is recomputed
    from X.  Returns the violating iteration indices under both readings of
    the constant.
    """
    if not config.theory_mode:
        raise DomainError("the decrease guarantee only covers theory-mode runs")
    bm = config.beta_mode
    gs = trace.gamma_star
    if gs is None:
        if X is None:
            raise DomainError("trace lacks gamma_star; pass X to recompute it")
        gs = gamma_star(config.alpha, bm.beta_star, X, seed=config.seed)
    alpha_term = config.alpha * (1.0 - gs) / 2.0
    kappa1 = min(alpha_term, bm.beta_sup / 4.0)
    kappa1_weak = min(alpha_term, bm.beta_star / 4.0)
    violations, violations_weak = [], []
    for k in range(1, len(trace.phi)):
        lhs = trace.phi[k] - trace.phi[k - 1]
        slack = 1e-9 * (1.0 + abs(trace.phi[k - 1]))
        g2 = trace.gap[k] * trace.gap[k]
        if lhs > -kappa1 * g2 + slack:
            violations.append(k)
        if lhs > -kappa1_weak * g2 + slack:
            violations_weak.append(k)
    return DecreaseReport(
        kappa1=kappa1,
        kappa1_weak=kappa1_weak,
        violations=tuple(violations),
        violations_weak=tuple(violations_weak),
        checked=max(len(trace.phi) - 1, 0),
    )
