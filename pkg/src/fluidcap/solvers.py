"""Top-level optimization algorithms and reference benchmarks.

Every solver returns a SolveReport whose covariance/position pairs are
feasible: covariances PSD with trace within budget, positions inside their
apertures and pairwise distinct. Reported capacities never exceed
waterfill.capacity_upper_bound on the same scenario.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .capacity import (
    SolveReport,
    TxCovariance,
    interference_matrix,
    sum_capacity,
    whitening_factor,
)
from .channel import (
    BS_SPACING,
    PositionVector,
    Scenario,
    UserConfig,
    as_positions,
    channel_matrix,
    rx_steering_matrix,
    tx_steering_matrix,
)
from .closedform import single_user_position_update
from .errors import BudgetError, ConfigError
from .numkit import hermitianize, logdet_hpd, psd_sqrt
from .rankone import j_outer, map_positions, mm_elliptope_solve, rank_residual
from .waterfill import iterative_waterfill, waterfill_p2p

DEFAULT_TAU = 2.0

SINGLE_ANTENNA_TOL = 1e-8
SINGLE_ANTENNA_MAX_SWEEPS = 100
MULTI_ANTENNA_TOL = 1e-6
MULTI_ANTENNA_MAX_SWEEPS = 50

# Budget for the inexact relaxation solves inside the covariance/position
# alternation; the blocks are re-solved on every round anyway.
CORE_MM_MAX_OUTER = 8
CORE_MM_OUTER_TOL = 1e-6

ES_GUARD = 10_000_000


def default_positions(user: UserConfig) -> np.ndarray:
    """Evenly spaced initial positions spanning the aperture (a single antenna
    sits at 0)."""
    if user.N == 1:
        return np.zeros(1)
    return np.linspace(0.0, user.W, user.N)


def es_grid(W: float, step: float) -> np.ndarray:
    """Search positions {0, step, 2*step, ...} clipped into [0, W]."""
    if step <= 0:
        raise ConfigError("search step must be positive")
    count = int(math.floor(W / step + 1e-9)) + 1
    return np.minimum(np.arange(count) * step, W)


def _report(scenario, qs, ws, trace, iterations, t0, *, residuals=None, mm_traces=None, extra=None):
    """Assemble a SolveReport; the final validated capacity evaluation also
    certifies feasibility of every (Q, w) pair."""
    capacity = sum_capacity(scenario, qs, ws, validate=True)
    covs = [TxCovariance(np.asarray(q, dtype=complex), user.P)
            for q, user in zip(qs, scenario.users)]
    pos = [PositionVector(as_positions(w)) for w in ws]
    return SolveReport(
        capacity_bits=capacity,
        covariances=covs,
        positions=pos,
        objective_trace=list(trace),
        rank_residuals=list(residuals or []),
        iterations=int(iterations),
        runtime_ms=(time.perf_counter() - t0) * 1e3,
        mm_traces=[list(t) for t in (mm_traces or [])],
        extra=dict(extra or {}),
    )


def _require_single_antenna(scenario: Scenario, solver: str) -> None:
    if any(u.N != 1 for u in scenario.users):
        raise ConfigError(f"{solver} requires a single-antenna terminal for every user")


def _full_power_1x1(scenario: Scenario):
    return [np.array([[user.P]], dtype=complex) for user in scenario.users]


def alg1_alternating(scenario: Scenario, init_ws=None) -> SolveReport:
    """Alternating per-user position optimization for single-antenna users.

    Everyone transmits at full power; users are cycled, each applying the
    one-path/two-path/grid position update against the interference of the
    others, until a full sweep improves the capacity by less than 1e-8 bits.
    The capacity trace is non-decreasing.
    """
    t0 = time.perf_counter()
    _require_single_antenna(scenario, "the alternating position solver")
    if init_ws is None:
        init_ws = [default_positions(u) for u in scenario.users]
    ws = [as_positions(w) for w in init_ws]
    qs = _full_power_1x1(scenario)
    cap = sum_capacity(scenario, qs, ws, validate=False)
    trace = [cap]
    sweeps = 0
    for _ in range(SINGLE_ANTENNA_MAX_SWEEPS):
        sweeps += 1
        for u, user in enumerate(scenario.users):
            omega = interference_matrix(scenario, qs, ws, u)
            ws[u] = np.array([single_user_position_update(user, omega, user.K)])
        cap_new = sum_capacity(scenario, qs, ws, validate=False)
        trace.append(cap_new)
        done = cap_new - cap < SINGLE_ANTENNA_TOL
        cap = cap_new
        if done:
            break
    return _report(scenario, qs, ws, trace, sweeps, t0)


def alg2_joint(scenario: Scenario, tau: float = DEFAULT_TAU, init_ws=None) -> SolveReport:
    """Joint position optimization for single-antenna users via the rank-one
    relaxation.

    All users' phase-vector blocks (unit diagonal) are optimized together by
    the penalized majorization loop and then mapped independently to each
    user's grid; every user transmits at full power. The mapped solution is
    returned as-is, and the capacity of the initial positions is kept in
    extra["initial_capacity_bits"] since the mapping carries no improvement
    guarantee.
    """
    t0 = time.perf_counter()
    _require_single_antenna(scenario, "the joint rank-one solver")
    if init_ws is None:
        init_ws = [default_positions(u) for u in scenario.users]
    ws0 = [as_positions(w) for w in init_ws]
    qs = _full_power_1x1(scenario)
    cap0 = sum_capacity(scenario, qs, ws0, validate=False)

    blocks = [j_outer(float(w[0]), user.paths.aod, 1.0)
              for w, user in zip(ws0, scenario.users)]
    factors = [
        np.sqrt(user.P * scenario.M)
        * (rx_steering_matrix(user.paths.aoa, scenario.M) * user.paths.gains)
        for user in scenario.users
    ]
    blocks, trace = mm_elliptope_solve(factors, [1.0] * scenario.U, tau, blocks)

    ws = []
    for blk, user in zip(blocks, scenario.users):
        w = map_positions([blk], [user.paths.aod], user.grid())
        ws.append(np.array(w))
    residuals = [rank_residual(b) for b in blocks]
    return _report(
        scenario, qs, ws, trace, len(trace) - 1, t0,
        residuals=residuals, mm_traces=[trace],
        extra={"initial_capacity_bits": cap0},
    )


def _single_user_joint_core(receive_factor, user, M, tau, init_w):
    """Alternating covariance/position optimization of one multi-antenna user.

    ``receive_factor`` is the m x L matrix B of the channel model
    sqrt(M*N) * B diag(gains) A_T(w)^H: the receive steering matrix for an
    isolated user, or its interference-whitened version inside the multiuser
    loop. Alternates between water-filling the receive-side covariance of the
    reciprocal channel and re-solving the per-antenna blocks (diagonal 1/N) by
    the penalized majorization loop, then maps the blocks to distinct grid
    positions and water-fills the actual channel there.

    Returns (q, w, value, mm_traces, alternation_trace, rounds, residuals)
    where value = log2|G(w) Q G(w)^H + I| on the factored channel.
    """
    b = np.atleast_2d(np.asarray(receive_factor, dtype=complex))
    gains = user.paths.gains
    aod = user.paths.aod
    n_ant = user.N
    scale = np.sqrt(M * n_ant)
    bg = b * gains
    m = b.shape[0]
    eye_m = np.eye(m, dtype=complex)

    def channel_at(w):
        return scale * bg @ tx_steering_matrix(aod, w).conj().T

    def g_hat(blocks):
        cols = []
        for blk in blocks:
            vals, vecs = np.linalg.eigh(blk.J)
            cols.append(np.sqrt(max(float(vals[-1]), 0.0)) * vecs[:, -1])
        return scale * bg @ np.column_stack(cols)

    w_init = as_positions(init_w)
    blocks = [j_outer(float(wn), aod, 1.0 / n_ant) for wn in w_init]
    mm_traces = []
    alt_trace = []
    prev = None
    rounds = 0
    step_state = {}
    for _ in range(MULTI_ANTENNA_MAX_SWEEPS):
        rounds += 1
        ghat = g_hat(blocks)
        f_mat = waterfill_p2p(ghat.conj().T, user.P).Q
        phi = hermitianize(M * n_ant * (bg.conj().T @ f_mat @ bg))
        root = psd_sqrt(phi)
        blocks, tr = mm_elliptope_solve(
            [root] * n_ant, [1.0 / n_ant] * n_ant, tau, blocks,
            max_outer=CORE_MM_MAX_OUTER, outer_tol=CORE_MM_OUTER_TOL,
            step_state=step_state,
        )
        mm_traces.append(tr)
        ghat = g_hat(blocks)
        val = logdet_hpd(
            hermitianize(np.eye(n_ant, dtype=complex) + ghat.conj().T @ f_mat @ ghat)
        )
        alt_trace.append(val)
        if prev is not None and abs(val - prev) < MULTI_ANTENNA_TOL:
            break
        prev = val

    ws = map_positions(blocks, [aod] * n_ant, user.grid())
    w_arr = np.asarray(ws, dtype=float)
    g_final = channel_at(w_arr)
    q_cov = waterfill_p2p(g_final, user.P)
    value = logdet_hpd(hermitianize(eye_m + g_final @ q_cov.Q @ g_final.conj().T))
    residuals = [rank_residual(blk) for blk in blocks]
    return q_cov.Q, w_arr, value, mm_traces, alt_trace, rounds, residuals


def alg3_single_user(scenario: Scenario, init_w=None, tau: float = DEFAULT_TAU) -> SolveReport:
    """Joint covariance/position optimization for one multi-antenna user."""
    t0 = time.perf_counter()
    if scenario.U != 1:
        raise ConfigError("the single-user joint solver requires exactly one user")
    user = scenario.users[0]
    if init_w is None:
        init_w = default_positions(user)
    b = rx_steering_matrix(user.paths.aoa, scenario.M)
    q, w, _, mm_traces, alt_trace, rounds, residuals = _single_user_joint_core(
        b, user, scenario.M, tau, init_w
    )
    return _report(
        scenario, [q], [w], alt_trace, rounds, t0,
        residuals=residuals, mm_traces=mm_traces,
    )


def alg4_multiuser(scenario: Scenario, init_ws=None, tau: float = DEFAULT_TAU) -> SolveReport:
    """General multiuser solver: per-user joint updates on the whitened channel.

    Covariances are initialized by iterative water-filling at the starting
    positions; each user is then re-optimized against the others' interference
    and an update is accepted only if the sum capacity improves, so the
    capacity trace is non-decreasing and the result never falls below its
    initialization.
    """
    t0 = time.perf_counter()
    if init_ws is None:
        init_ws = [default_positions(u) for u in scenario.users]
    ws = [as_positions(w) for w in init_ws]
    channels = [channel_matrix(u, w, scenario.M) for u, w in zip(scenario.users, ws)]
    covs = iterative_waterfill(channels, [u.P for u in scenario.users])
    qs = [c.Q for c in covs]
    cap = sum_capacity(scenario, qs, ws, validate=False)
    trace = [cap]
    mm_all = []
    residuals = [0.0] * scenario.U
    sweeps = 0
    for _ in range(MULTI_ANTENNA_MAX_SWEEPS):
        sweeps += 1
        sweep_start = cap
        for u, user in enumerate(scenario.users):
            omega = interference_matrix(scenario, qs, ws, u)
            white = whitening_factor(omega)
            b = white @ rx_steering_matrix(user.paths.aoa, scenario.M)
            q_new, w_new, _, mm_traces, _, _, resid = _single_user_joint_core(
                b, user, scenario.M, tau, ws[u]
            )
            mm_all.extend(mm_traces)
            cand_qs = list(qs)
            cand_ws = list(ws)
            cand_qs[u] = q_new
            cand_ws[u] = w_new
            cap_new = sum_capacity(scenario, cand_qs, cand_ws, validate=False)
            if cap_new > cap:
                qs, ws, cap = cand_qs, cand_ws, cap_new
                residuals[u] = max(resid, default=0.0)
            trace.append(cap)
        if cap - sweep_start < MULTI_ANTENNA_TOL:
            break
    return _report(
        scenario, qs, ws, trace, sweeps, t0,
        residuals=residuals, mm_traces=mm_all,
    )


def benchmark_fixed(scenario: Scenario) -> SolveReport:
    """Fixed half-wavelength arrays starting at position 0, iterative
    water-filling for the covariances."""
    t0 = time.perf_counter()
    for user in scenario.users:
        if (user.N - 1) * BS_SPACING > user.W:
            raise ConfigError(
                f"half-wavelength layout of {user.N} antennas exceeds aperture {user.W}"
            )
    ws = [np.arange(u.N) * BS_SPACING for u in scenario.users]
    channels = [channel_matrix(u, w, scenario.M) for u, w in zip(scenario.users, ws)]
    covs, trace = iterative_waterfill(
        channels, [u.P for u in scenario.users], with_trace=True
    )
    qs = [c.Q for c in covs]
    return _report(scenario, qs, ws, trace, len(trace), t0)


def benchmark_es(scenario: Scenario, step: float | None = None) -> SolveReport:
    """Exhaustive search over all users' position combinations (single-antenna
    users, full power).

    The grid capacity is evaluated through the determinant identity
    |I_M + B B^H| = |I_U + B^H B| on the stacked scaled channel vectors, which
    makes the per-combination cost independent of M.
    """
    t0 = time.perf_counter()
    _require_single_antenna(scenario, "exhaustive position search")
    grids = [es_grid(u.W, step if step is not None else u.W / u.K) for u in scenario.users]
    total = math.prod(len(g) for g in grids)
    if total > ES_GUARD:
        raise BudgetError(f"{total} position combinations exceed the search guard")
    # Per-user channel vectors over their grids, scaled by sqrt(P).
    mats = []
    for user, grid in zip(scenario.users, grids):
        a_r = rx_steering_matrix(user.paths.aoa, scenario.M)
        phases = np.exp(2j * np.pi * np.outer(np.cos(user.paths.aod), grid))
        mats.append(
            np.sqrt(user.P * scenario.M) * (a_r * user.paths.gains) @ phases
        )
    best_val = -np.inf
    best_idx = None
    eye_u = np.eye(scenario.U)
    for idx in itertools.product(*(range(len(g)) for g in grids)):
        b = np.column_stack([mats[u][:, i] for u, i in enumerate(idx)])
        sign, logdet = np.linalg.slogdet(eye_u + b.conj().T @ b)
        val = logdet / math.log(2.0)
        if val > best_val:
            best_val = val
            best_idx = idx
    ws = [np.array([grids[u][i]]) for u, i in enumerate(best_idx)]
    qs = _full_power_1x1(scenario)
    return _report(scenario, qs, ws, [best_val], total, t0)


def benchmark_iwf_es(scenario: Scenario, step: float | None = None) -> SolveReport:
    """Water-filling plus exhaustive search over distinct position combinations
    for a single multi-antenna user.

    Every combination of distinct grid points is scored at its own
    water-filled covariance, so the chosen combination is a joint fixed point
    of the water-filling and search halves and matches brute-force enumeration
    exactly.
    """
    t0 = time.perf_counter()
    if scenario.U != 1:
        raise ConfigError("joint exhaustive position search is limited to one user")
    user = scenario.users[0]
    grid = es_grid(user.W, step if step is not None else user.W / user.K)
    n_combos = math.comb(len(grid), user.N)
    if n_combos > ES_GUARD:
        raise BudgetError(f"{n_combos} position combinations exceed the search guard")
    best_val = -np.inf
    best_w = None
    best_q = None
    for combo in itertools.combinations(range(len(grid)), user.N):
        w = grid[list(combo)]
        g = channel_matrix(user, w, scenario.M)
        q = waterfill_p2p(g, user.P).Q
        val = logdet_hpd(
            hermitianize(np.eye(scenario.M, dtype=complex) + g @ q @ g.conj().T)
        )
        if val > best_val:
            best_val = val
            best_w = w
            best_q = q
    return _report(scenario, [best_q], [best_w], [best_val], n_combos, t0)


def benchmark_simplified_iwf_es(scenario: Scenario, step: float | None = None) -> SolveReport:
    """Coordinate-wise variant: water-filling alternated with one-antenna-at-a-
    time grid moves (remaining antennas fixed, distinctness enforced).

    Each half-step is a maximization given the rest, so the capacity trace is
    non-decreasing.
    """
    t0 = time.perf_counter()
    grids = [es_grid(u.W, step if step is not None else u.W / u.K) for u in scenario.users]
    ws = [default_positions(u) for u in scenario.users]
    channels = [channel_matrix(u, w, scenario.M) for u, w in zip(scenario.users, ws)]
    covs = iterative_waterfill(channels, [u.P for u in scenario.users])
    qs = [c.Q for c in covs]
    cap = sum_capacity(scenario, qs, ws, validate=False)
    trace = [cap]
    sweeps = 0
    for _ in range(MULTI_ANTENNA_MAX_SWEEPS):
        sweeps += 1
        sweep_start = cap
        for u, user in enumerate(scenario.users):
            omega = interference_matrix(scenario, qs, ws, u)
            qs[u] = waterfill_p2p(
                whitening_factor(omega) @ channel_matrix(user, ws[u], scenario.M),
                user.P,
            ).Q
            # omega already holds the others' interference plus noise.
            for n in range(user.N):
                others = {float(x) for i, x in enumerate(ws[u]) if i != n}
                current = float(ws[u][n])
                candidates = [current] + [
                    float(g) for g in grids[u]
                    if float(g) not in others and float(g) != current
                ]
                best_w = current
                best_val = -np.inf
                for w_cand in candidates:
                    w_trial = ws[u].copy()
                    w_trial[n] = w_cand
                    g = channel_matrix(user, w_trial, scenario.M)
                    val = logdet_hpd(hermitianize(omega + g @ qs[u] @ g.conj().T))
                    if val > best_val:
                        best_val = val
                        best_w = w_cand
                ws[u][n] = best_w
            cap = sum_capacity(scenario, qs, ws, validate=False)
            trace.append(cap)
        if cap - sweep_start < MULTI_ANTENNA_TOL:
            break
    return _report(scenario, qs, ws, trace, sweeps, t0)


ALGORITHMS = ("alg1", "alg2", "alg3", "alg4", "fixed", "es", "iwf-es", "siwf-es")


def run_algorithm(
    name: str, scenario: Scenario, *, tau: float = DEFAULT_TAU, step: float | None = None
) -> SolveReport:
    """Dispatch a solver or benchmark by its CLI name."""
    if name == "alg1":
        return alg1_alternating(scenario)
    if name == "alg2":
        return alg2_joint(scenario, tau=tau)
    if name == "alg3":
        return alg3_single_user(scenario, tau=tau)
    if name == "alg4":
        return alg4_multiuser(scenario, tau=tau)
    if name == "fixed":
        return benchmark_fixed(scenario)
    if name == "es":
        return benchmark_es(scenario, step=step)
    if name == "iwf-es":
        return benchmark_iwf_es(scenario, step=step)
    if name == "siwf-es":
        return benchmark_simplified_iwf_es(scenario, step=step)
    raise ConfigError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")
