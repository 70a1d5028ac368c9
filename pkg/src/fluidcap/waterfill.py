"""Water-filling power allocation and the convex bound solvers built on it."""

from __future__ import annotations

import numpy as np

from .capacity import TxCovariance, whitening_factor
from .channel import Scenario, rx_steering_matrix
from .errors import ContractViolation, NonconvergenceError
from .numkit import hermitianize, logdet_hpd

SV_RTOL = 1e-12
IWF_TOL = 1e-8
IWF_MAX_CYCLES = 200


def waterfill_p2p(g, budget: float) -> TxCovariance:
    """Covariance maximizing log2|G Q G^H + I| subject to Q PSD, tr(Q) <= budget.

    The allocation is built on the right singular vectors of G. The water
    level is found exactly by shrinking the active set over the sorted channel
    modes (no bisection): with inverse gains 1/s_k^2 in ascending order, the
    largest k for which mu = (budget + sum_{i<=k} 1/s_i^2) / k clears 1/s_k^2
    defines the active set, and p_i = mu - 1/s_i^2 spends the budget exactly.
    A zero channel (or zero budget) yields the zero covariance.
    """
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    if budget < 0:
        raise ContractViolation("power budget must be nonnegative")
    n = g.shape[1]
    zero = TxCovariance(np.zeros((n, n), dtype=complex), float(budget))
    if budget == 0.0 or not np.any(g):
        return zero
    _, svals, vh = np.linalg.svd(g, full_matrices=False)
    cutoff = svals[0] * SV_RTOL
    svals = svals[svals > cutoff]
    if svals.size == 0:
        return zero
    inv_gain = 1.0 / (svals**2)  # ascending
    k = inv_gain.size
    while k > 1:
        mu = (budget + float(inv_gain[:k].sum())) / k
        if mu >= inv_gain[k - 1]:
            break
        k -= 1
    mu = (budget + float(inv_gain[:k].sum())) / k
    powers = mu - inv_gain[:k]
    v = vh[:k].conj().T
    q = hermitianize((v * powers) @ v.conj().T)
    return TxCovariance(q, float(budget))


def mac_capacity(channels, qs) -> float:
    """log2 det(sum_u G_u Q_u G_u^H + I) for raw channel matrices."""
    m = np.asarray(channels[0]).shape[0]
    total = np.eye(m, dtype=complex)
    for g, q in zip(channels, qs):
        g = np.asarray(g, dtype=complex)
        total = total + g @ np.asarray(q, dtype=complex) @ g.conj().T
    return logdet_hpd(hermitianize(total))


def iterative_waterfill(
    channels,
    budgets,
    *,
    tol: float = IWF_TOL,
    max_cycles: int = IWF_MAX_CYCLES,
    with_trace: bool = False,
):
    """Cyclic per-user water-filling against interference-whitened channels.

    Each update water-fills one user against R G_u where R^H R inverts the
    interference-plus-noise covariance of the others, so the sum capacity is
    non-decreasing along the cycle. Stops when a full cycle improves the sum
    capacity by less than ``tol`` bits; raises NonconvergenceError (best
    iterates attached) if ``max_cycles`` is exhausted first.
    """
    channels = [np.atleast_2d(np.asarray(g, dtype=complex)) for g in channels]
    budgets = [float(b) for b in budgets]
    if len(channels) != len(budgets):
        raise ContractViolation("need one budget per channel")
    m = channels[0].shape[0]
    if any(g.shape[0] != m for g in channels):
        raise ContractViolation("all channels must share the receive dimension")
    qs = [np.zeros((g.shape[1], g.shape[1]), dtype=complex) for g in channels]
    trace = []
    prev = 0.0
    for _ in range(max_cycles):
        for u, (g, budget) in enumerate(zip(channels, budgets)):
            omega = np.eye(m, dtype=complex)
            for v, (gv, qv) in enumerate(zip(channels, qs)):
                if v != u:
                    omega = omega + gv @ qv @ gv.conj().T
            r = whitening_factor(omega)
            qs[u] = waterfill_p2p(r @ g, budget).Q
        cur = mac_capacity(channels, qs)
        trace.append(cur)
        if abs(cur - prev) < tol:
            covs = [TxCovariance(q, b) for q, b in zip(qs, budgets)]
            return (covs, trace) if with_trace else covs
        prev = cur
    covs = [TxCovariance(q, b) for q, b in zip(qs, budgets)]
    raise NonconvergenceError(
        f"iterative water-filling did not converge within {max_cycles} cycles",
        best=(covs, trace) if with_trace else covs,
    )


def _path_domain_channels(scenario: Scenario):
    """Per-user M x L channels sqrt(M*N) A_R diag(gains) used by both bounds."""
    out = []
    for user in scenario.users:
        a_r = rx_steering_matrix(user.paths.aoa, scenario.M)
        out.append(np.sqrt(scenario.M * user.N) * (a_r * user.paths.gains))
    return out


def capacity_upper_bound(scenario: Scenario) -> float:
    """Upper bound on the maximum sum capacity: the path-domain MAC optimum
    with per-user budgets inflated to L*P."""
    channels = _path_domain_channels(scenario)
    budgets = [u.L * u.P for u in scenario.users]
    covs = iterative_waterfill(channels, budgets)
    return mac_capacity(channels, [c.Q for c in covs])


def capacity_approx(scenario: Scenario) -> float:
    """Large-N approximation of the maximum sum capacity: the path-domain MAC
    optimum with the true budgets P."""
    channels = _path_domain_channels(scenario)
    budgets = [u.P for u in scenario.users]
    covs = iterative_waterfill(channels, budgets)
    return mac_capacity(channels, [c.Q for c in covs])
