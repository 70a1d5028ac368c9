"""Rank-one relaxation machinery shared by the joint position optimizers.

The position of an antenna enters the rate only through the outer product of
its per-path phase vector, a rank-one PSD matrix with constant diagonal. The
relaxation drops the rank-one requirement, keeps the elliptope constraints
(PSD, fixed diagonal), and restores low rank through a penalty on the gap
between the nuclear and spectral norms, driven to zero by a
majorization-minimization loop. Solved blocks are mapped back to grid
positions by nearest-outer-product search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import scipy.linalg

from .errors import (
    ContractViolation,
    DomainError,
    InfeasibleMappingError,
    NonconvergenceError,
)
from .numkit import (
    LN2,
    check_hermitian,
    dominant_eig,
    elliptope_project,
    hermitianize,
    min_eigval,
)

FEAS_TOL = 1e-9

MM_INNER_TOL = 1e-8
MM_OUTER_TOL = 1e-8
MM_MAX_OUTER = 50
MM_MAX_INNER = 300
ARMIJO_FACTOR = 1e-4
MIN_STEP = 1e-12

TAU_CAP = 128.0
TAU_RESIDUAL_GATE = 1e-3


@dataclass(frozen=True)
class RankOneBlock:
    """Hermitian PSD matrix with constant diagonal ``diag_value``.

    Despite the name the stored matrix may have higher rank mid-optimization;
    rank_residual measures how far from rank one it is.
    """

    J: np.ndarray
    diag_value: float

    def __post_init__(self):
        j = np.array(np.asarray(self.J, dtype=complex))
        check_hermitian(j, "rank-one block")
        if np.max(np.abs(np.diag(j).real - self.diag_value)) > FEAS_TOL or np.max(
            np.abs(np.diag(j).imag)
        ) > FEAS_TOL:
            raise ContractViolation("block diagonal deviates from its fixed value")
        if min_eigval(j) < -FEAS_TOL:
            raise ContractViolation("block is not PSD within tolerance")
        j.setflags(write=False)
        object.__setattr__(self, "J", j)

    @property
    def L(self) -> int:
        return int(self.J.shape[0])


def j_outer(w: float, thetas, diag_value: float = 1.0) -> RankOneBlock:
    """Exactly rank-one block of the phase vector at position w.

    Entry (l, l') is diag_value * exp(2j pi w (cos theta_l - cos theta_l'));
    the trace is L * diag_value.
    """
    b = np.exp(2j * np.pi * float(w) * np.cos(np.asarray(thetas, dtype=float)))
    j = diag_value * np.outer(b, b.conj())
    np.fill_diagonal(j, diag_value)
    return RankOneBlock(j, float(diag_value))


def rank_residual(block) -> float:
    """Nuclear norm minus spectral norm; zero iff the matrix is rank one.

    For a feasible (PSD, fixed-diagonal) block this equals the trace
    L * diag_value minus the largest eigenvalue.
    """
    j = block.J if isinstance(block, RankOneBlock) else np.asarray(block, dtype=complex)
    vals = np.abs(np.linalg.eigvalsh(hermitianize(j)))
    return float(vals.sum() - vals.max())


def _as_block_matrix(blk) -> np.ndarray:
    return np.asarray(blk.J if isinstance(blk, RankOneBlock) else blk, dtype=complex)


def _logdet_hpd_fast(h) -> float:
    """Unvalidated Cholesky log2-det for the solver hot path."""
    chol = scipy.linalg.cholesky(h, lower=True, check_finite=False)
    return float(2.0 * np.sum(np.log2(np.real(np.diag(chol)))))


def mm_elliptope_solve(
    factors,
    diag_values,
    tau: float,
    init,
    *,
    inner_tol: float = MM_INNER_TOL,
    outer_tol: float = MM_OUTER_TOL,
    max_outer: int = MM_MAX_OUTER,
    max_inner: int = MM_MAX_INNER,
    adapt_tau: bool = False,
    step_state: dict | None = None,
):
    """Penalized majorization-minimization over a product of elliptopes.

    Maximizes

        log2| sum_b E_b J_b E_b^H + I |  -  tau * sum_b (||J_b||_* - ||J_b||_2)

    over blocks J_b constrained to {PSD, diag = diag_values[b]}. ``factors``
    are the sandwich matrices E_b (one per block, shared first dimension).

    Each outer round fixes v_b, the dominant eigenvector of the current block,
    which makes tau * v_b^H J_b v_b a tight linear minorant of the spectral
    norm term; the nuclear norm is constant on the elliptope, so the inner
    problem is the concave surrogate

        log2| sum_b E_b J_b E_b^H + I |  +  tau * sum_b v_b^H J_b v_b,

    maximized by monotone projected gradient ascent with Nesterov
    extrapolation and adaptive restart. Steps are found by backtracking
    (halving from 1.0) against the quadratic sufficient-increase condition,
    feasibility is restored by elliptope_project, and a momentum step is kept
    only when it improves on the incumbent, so accepted iterates never
    decrease the surrogate. The penalized objective is therefore
    non-decreasing across outer rounds.

    The log-det term and its gradients are evaluated on whichever side of the
    determinant identity |I + E J E^H| = |I + J E^H E| is smaller, so the
    cost per step is independent of a large ambient dimension.

    Returns (blocks, trace) where trace holds the penalized objective at the
    start and after every outer round. Raises ContractViolation for an
    infeasible initial point and NonconvergenceError if an inner loop exhausts
    ``max_inner`` gradient steps while still making progress; a
    projected-stationary point (no ascent direction) counts as converged.

    With ``adapt_tau`` the penalty doubles (capped at 128) after any outer
    round that leaves a block residual above 1e-3; off by default, and the
    trace is then only comparable between consecutive rounds at equal tau.

    ``step_state`` lets a caller that solves a sequence of related programs
    (the covariance/position alternation) carry the accepted line-search step
    across calls instead of probing from 1.0 every time; the dict's "step"
    entry is read on entry and updated on return.
    """
    factors = [np.atleast_2d(np.asarray(e, dtype=complex)) for e in factors]
    diag_values = [float(c) for c in diag_values]
    if not (len(factors) == len(diag_values) == len(init)):
        raise ContractViolation("factors, diag_values, and init must align")
    m = factors[0].shape[0]
    if any(e.shape[0] != m for e in factors):
        raise ContractViolation("all factors must share their first dimension")
    if tau <= 0:
        raise ContractViolation("penalty factor tau must be positive")

    blocks = []
    for e, c, blk in zip(factors, diag_values, init):
        j = hermitianize(_as_block_matrix(blk))
        if j.shape != (e.shape[1], e.shape[1]):
            raise ContractViolation("block size does not match its factor")
        # RankOneBlock construction validates elliptope feasibility.
        RankOneBlock(j, c)
        blocks.append(j)

    sizes = [e.shape[1] for e in factors]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    small_side = min(m, total)

    if small_side == m:
        eye = np.eye(m, dtype=complex)

        def _gram(js):
            out = eye.copy()
            for e, j in zip(factors, js):
                out = out + e @ j @ e.conj().T
            return hermitianize(out)

        def logdet_term(js):
            try:
                return _logdet_hpd_fast(_gram(js))
            except scipy.linalg.LinAlgError as exc:
                raise DomainError("log-det argument is not positive definite") from exc

        def logdet_gradients(js):
            inv_total = hermitianize(np.linalg.inv(_gram(js)))
            return [hermitianize(e.conj().T @ inv_total @ e) / LN2 for e in factors]

    else:
        stacked = np.hstack(factors)
        s_gram = hermitianize(stacked.conj().T @ stacked)
        eye_t = np.eye(total, dtype=complex)

        def _shifted(js):
            blk = np.zeros((total, total), dtype=complex)
            for b, j in enumerate(js):
                blk[offsets[b]:offsets[b + 1], offsets[b]:offsets[b + 1]] = j
            return eye_t + blk @ s_gram

        def logdet_term(js):
            sign, val = np.linalg.slogdet(_shifted(js))
            if sign.real <= 0:
                raise DomainError("log-det argument is not positive definite")
            return float(val) / LN2

        def logdet_gradients(js):
            x = s_gram @ np.linalg.inv(_shifted(js))
            return [
                hermitianize(x[offsets[b]:offsets[b + 1], offsets[b]:offsets[b + 1]]) / LN2
                for b in range(len(factors))
            ]

    def objective(js):
        return logdet_term(js) - tau * sum(rank_residual(j) for j in js)

    def surrogate(js, vs):
        lin = sum(float(np.real(v.conj() @ j @ v)) for j, v in zip(js, vs))
        return logdet_term(js) + tau * lin

    def gradients(js, vs):
        # At extrapolated (possibly infeasible) points the factorization may
        # fail; the caller treats that as a rejected trial.
        return [
            g + tau * np.outer(v, v.conj())
            for g, v in zip(logdet_gradients(js), vs)
        ]

    def project_step(js, grads, t):
        return [
            elliptope_project(j + t * g, c) for j, g, c in zip(js, grads, diag_values)
        ]

    trace = [objective(blocks)]
    step = 1.0 if step_state is None else float(step_state.get("step", 1.0))
    for _ in range(max_outer):
        vs = [dominant_eig(j)[1] for j in blocks]
        f_cur = surrogate(blocks, vs)
        x_prev = blocks
        z = blocks
        momentum = 1.0
        for it in range(max_inner):
            plain = z is blocks
            try:
                grads = gradients(z, vs)
                f_z = f_cur if plain else surrogate(z, vs)
            except (np.linalg.LinAlgError, DomainError):
                z = blocks
                momentum = 1.0
                continue
            cand = None
            ascent = 0.0
            move2 = 0.0
            while step >= MIN_STEP:
                try:
                    cand = project_step(z, grads, step)
                except NonconvergenceError:
                    step /= 2.0
                    cand = None
                    continue
                ascent = sum(
                    float(np.sum((g.conj() * (cj - jz)).real))
                    for g, jz, cj in zip(grads, z, cand)
                )
                move2 = sum(float(np.linalg.norm(cj - jz) ** 2) for jz, cj in zip(z, cand))
                f_cand = surrogate(cand, vs)
                ok_quad = f_cand >= f_z + ascent - move2 / (2.0 * step) - 1e-12 * max(1.0, abs(f_z))
                ok_armijo = f_cand >= f_z + ARMIJO_FACTOR * ascent
                if ok_quad or ok_armijo:
                    break
                step /= 2.0
                cand = None
            if cand is None:
                break
            if plain and move2 <= 1e-24 * max(1.0, abs(f_cur)):
                break  # projected-stationary: no ascent direction left
            momentum_next = (1.0 + np.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
            if f_cand >= f_cur:
                improvement = f_cand - f_cur
                new_blocks = cand
                new_val = f_cand
            else:
                improvement = 0.0
                new_blocks = blocks
                new_val = f_cur
            z = [
                xn + (momentum / momentum_next) * (cj - xn)
                + ((momentum - 1.0) / momentum_next) * (xn - xo)
                for xn, cj, xo in zip(new_blocks, cand, x_prev)
            ]
            x_prev = blocks
            blocks = new_blocks
            f_cur = new_val
            momentum = momentum_next
            step = min(2.0 * step, 1.0)
            if improvement < inner_tol:
                if plain:
                    break  # a full step from the incumbent barely moved: converged
                z = blocks
                momentum = 1.0  # restart and let a plain step decide
        else:
            raise NonconvergenceError(
                f"surrogate ascent exceeded {max_inner} gradient steps",
                best=[RankOneBlock(j, c) for j, c in zip(blocks, diag_values)],
            )
        val = objective(blocks)
        trace.append(val)
        if val - trace[-2] < outer_tol:
            break
        if adapt_tau:
            residuals = [rank_residual(j) for j in blocks]
            if max(residuals) > TAU_RESIDUAL_GATE:
                tau = min(2.0 * tau, TAU_CAP)

    if step_state is not None:
        step_state["step"] = step
    out = [RankOneBlock(j, c) for j, c in zip(blocks, diag_values)]
    return out, trace


def map_positions(blocks, thetas_per_block, grid, exclusion=()) -> list[float]:
    """Map relaxed blocks to distinct grid positions, nearest outer product first.

    For each block in order, picks the unclaimed grid point whose exact
    rank-one block is closest in Frobenius norm (ties toward the smallest
    position) and claims it for the following blocks. ``exclusion`` seeds the
    claimed set. Raises InfeasibleMappingError when fewer free points remain
    than blocks.
    """
    grid = np.asarray(grid, dtype=float)
    taken = {float(x) for x in exclusion}
    free = sum(1 for g in grid if float(g) not in taken)
    if free < len(blocks):
        raise InfeasibleMappingError(
            f"{free} free grid points cannot host {len(blocks)} antennas"
        )
    out = []
    for blk, thetas in zip(blocks, thetas_per_block):
        j = _as_block_matrix(blk)
        diag_value = float(blk.diag_value) if isinstance(blk, RankOneBlock) else float(
            np.mean(np.diag(j).real)
        )
        best_w = None
        best_d = np.inf
        for g in grid:
            gf = float(g)
            if gf in taken:
                continue
            d = float(np.linalg.norm(j_outer(gf, thetas, diag_value).J - j))
            if d < best_d:
                best_d = d
                best_w = gf
        taken.add(best_w)
        out.append(best_w)
    return out
