"""Sum-capacity evaluation, interference whitening, and quadratic-form capacities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import PositionVector, Scenario, UserConfig, as_positions, channel_matrix
from .errors import ContractViolation, DomainError
from .numkit import check_hermitian, hermitianize, logdet_hpd, min_eigval

PSD_TOL = 1e-9


@dataclass(frozen=True)
class TxCovariance:
    """Hermitian PSD transmit covariance with trace bounded by its budget."""

    Q: np.ndarray
    budget: float

    def __post_init__(self):
        q = np.array(np.asarray(self.Q, dtype=complex))
        check_hermitian(q, "transmit covariance")
        if min_eigval(q) < -PSD_TOL:
            raise ContractViolation("transmit covariance is not PSD within tolerance")
        if float(np.trace(q).real) > self.budget + PSD_TOL:
            raise ContractViolation(
                f"trace {float(np.trace(q).real):.6g} exceeds budget {self.budget:.6g}"
            )
        q.setflags(write=False)
        object.__setattr__(self, "Q", q)


@dataclass
class SolveReport:
    """Outcome of one solver run.

    objective_trace is non-decreasing for the monotone algorithms; mm_traces
    collects the penalized-objective traces of any inner majorization loops,
    each of which is non-decreasing on its own.
    """

    capacity_bits: float
    covariances: list
    positions: list
    objective_trace: list
    rank_residuals: list
    iterations: int
    runtime_ms: float
    mm_traces: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def max_rank_residual(self) -> float:
        return max(self.rank_residuals, default=0.0)


def as_covariance_matrix(q) -> np.ndarray:
    """Coerce a TxCovariance or array-like to a complex matrix."""
    if isinstance(q, TxCovariance):
        return np.asarray(q.Q, dtype=complex)
    return np.atleast_2d(np.asarray(q, dtype=complex))


def _check_feasible(user: UserConfig, q: np.ndarray, w: np.ndarray) -> None:
    if q.shape != (user.N, user.N):
        raise ContractViolation(f"covariance shape {q.shape} does not match N={user.N}")
    check_hermitian(q, "transmit covariance")
    if min_eigval(q) < -PSD_TOL:
        raise ContractViolation("transmit covariance is not PSD within tolerance")
    if float(np.trace(q).real) > user.P + PSD_TOL:
        raise ContractViolation("transmit covariance exceeds the power budget")
    if w.size != user.N:
        raise ContractViolation(f"expected {user.N} positions, got {w.size}")
    if np.unique(w).size != w.size:
        raise ContractViolation("antenna positions must be pairwise distinct")
    if w.min() < 0.0 or w.max() > user.W:
        raise ContractViolation(f"positions must lie within [0, {user.W}]")


def sum_capacity(scenario: Scenario, qs, ws, *, validate: bool = True) -> float:
    """log2 det(sum_u G_u(w_u) Q_u G_u(w_u)^H + I), in bits."""
    if len(qs) != scenario.U or len(ws) != scenario.U:
        raise ContractViolation("need one covariance and one position vector per user")
    total = np.eye(scenario.M, dtype=complex)
    for user, q_in, w_in in zip(scenario.users, qs, ws):
        q = as_covariance_matrix(q_in)
        w = as_positions(w_in)
        if validate:
            _check_feasible(user, q, w)
        g = channel_matrix(user, w, scenario.M)
        total = total + g @ q @ g.conj().T
    return logdet_hpd(hermitianize(total))


def interference_matrix(scenario: Scenario, qs, ws, u: int) -> np.ndarray:
    """Covariance of interference-plus-noise seen past user u:
    sum_{u' != u} G Q G^H + I."""
    total = np.eye(scenario.M, dtype=complex)
    for v, (user, q_in, w_in) in enumerate(zip(scenario.users, qs, ws)):
        if v == u:
            continue
        q = as_covariance_matrix(q_in)
        g = channel_matrix(user, as_positions(w_in), scenario.M)
        total = total + g @ q @ g.conj().T
    return hermitianize(total)


def whitening_factor(omega) -> np.ndarray:
    """R with R^H R = Omega^{-1}, built by inverting the eigenvalues of Omega."""
    omega = check_hermitian(np.asarray(omega, dtype=complex), "interference covariance")
    vals, vecs = np.linalg.eigh(hermitianize(omega))
    if vals[0] <= 0.0:
        raise DomainError("interference covariance must be positive definite")
    return (vecs / np.sqrt(vals)).conj().T


def effective_channel(scenario: Scenario, omega, u: int, w) -> np.ndarray:
    """Interference-whitened channel of user u at positions w.

    The result satisfies (eff)^H (eff) = G^H Omega^{-1} G, so
    log2|eff Q eff^H + I| + log2|Omega| recovers the sum capacity.
    """
    return whitening_factor(omega) @ channel_matrix(scenario.users[u], w, scenario.M)


def c0_value(gains, P: float, M: int) -> float:
    """Large-array capacity limit log2(sum_l P*M*|gain_l|^2 + 1)."""
    return float(np.log2(P * M * float(np.sum(np.abs(np.asarray(gains)) ** 2)) + 1.0))


def c0_large_m(user: UserConfig, M: int) -> float:
    """Large-array limit of the single-user single-antenna capacity."""
    return c0_value(user.paths.gains, user.P, M)


def quadratic_capacity_grid(psi, thetas, ws) -> np.ndarray:
    """Vectorized log2(a(w)^T Psi a(w)^* + 1) over positions, a_l = exp(-2j pi w cos theta_l)."""
    psi = np.asarray(psi, dtype=complex)
    ws = np.atleast_1d(np.asarray(ws, dtype=float))
    a = np.exp(-2j * np.pi * np.outer(ws, np.cos(np.asarray(thetas, dtype=float))))
    vals = np.real(np.einsum("gl,lk,gk->g", a, psi, a.conj()))
    return np.log2(np.maximum(vals, 0.0) + 1.0)


def quadratic_capacity_1ant(psi, thetas, w: float) -> float:
    """Single-antenna capacity term log2(a^T Psi a^* + 1) at position w.

    Psi must be PSD; the value is the position-dependent part of the rate and
    is nonnegative.
    """
    psi = check_hermitian(np.asarray(psi, dtype=complex), "quadratic form weight")
    scale = max(1.0, float(np.max(np.abs(psi))) if psi.size else 0.0)
    if min_eigval(psi) < -PSD_TOL * scale:
        raise DomainError("quadratic form weight must be PSD")
    return float(quadratic_capacity_grid(psi, thetas, [float(w)])[0])
