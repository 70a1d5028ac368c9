"""Single-antenna position optimizers.

For a single-antenna user the position-dependent part of the rate is
log2(a(w)^T Psi a(w)^* + 1) with a_l(w) = exp(-2j pi w cos theta_l) and Psi a
PSD weight built from the receive geometry, the path gains, and the
interference whitening. With one path the rate does not depend on w; with two
paths the quadratic form collapses to a sinusoid in w and the maximizer has a
closed form; with more paths the aperture grid is searched exhaustively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import quadratic_capacity_1ant, quadratic_capacity_grid, whitening_factor
from .channel import UserConfig, rx_steering_matrix
from .errors import ContractViolation, DegeneratePathError
from .numkit import hermitianize


def psi_matrix(user: UserConfig, M: int, omega=None) -> np.ndarray:
    """PSD weight P*M * diag(g)^H A_R^H Omega^{-1} A_R diag(g) of the quadratic
    capacity form; ``omega=None`` means an identity interference covariance.

    Built as a Gram matrix of the whitened, gain-scaled steering columns so it
    is PSD by construction.
    """
    a_r = rx_steering_matrix(user.paths.aoa, M)
    cols = a_r * user.paths.gains
    if omega is not None:
        omega = np.asarray(omega, dtype=complex)
        if omega.shape != (M, M):
            raise ContractViolation(f"interference covariance must be {M}x{M}")
        cols = whitening_factor(omega) @ cols
    return hermitianize(user.P * M * (cols.conj().T @ cols))


@dataclass(frozen=True)
class TwoPathParams:
    """Parameters of the two-path sinusoidal rate curve.

    The rate term is 2*Im(psi2)*sin(rho w) + 2*Re(psi2)*cos(rho w) + psi1 +
    psi3 + 1 inside the log, with rho = 2 pi (cos theta_1 - cos theta_2).
    ``w0`` is the smallest nonnegative stationary maximizer of the sinusoid
    (None when Im(psi2) = 0, where the separate cosine branch applies and the
    arctangent would be singular).
    """

    psi1: float
    psi2: complex
    psi3: float
    rho: float
    mu: float | None
    w0: float | None

    @classmethod
    def from_psi(cls, psi, thetas) -> "TwoPathParams":
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != (2, 2):
            raise ContractViolation("two-path weight matrix must be 2x2")
        thetas = np.asarray(thetas, dtype=float)
        rho = float(2.0 * np.pi * (math.cos(thetas[0]) - math.cos(thetas[1])))
        if rho == 0.0:
            raise DegeneratePathError("coincident departure angles: rate does not depend on w")
        psi2 = complex(psi[0, 1])
        im, re = psi2.imag, psi2.real
        if im == 0.0:
            return cls(float(psi[0, 0].real), psi2, float(psi[1, 1].real), rho, None, None)
        mu = math.atan(re / im)
        # Smallest w >= 0 with rho*w + mu hitting the maximizing phase of
        # +-|psi2| sin(rho w + mu): pi/2 (mod 2 pi) when Im(psi2) > 0, else
        # -pi/2 (mod 2 pi), approached upward for rho > 0 and downward for
        # rho < 0.
        if im > 0.0:
            w0 = (np.pi / 2 - mu) / rho if rho > 0 else (-3 * np.pi / 2 - mu) / rho
        else:
            w0 = (3 * np.pi / 2 - mu) / rho if rho > 0 else (-np.pi / 2 - mu) / rho
        return cls(float(psi[0, 0].real), psi2, float(psi[1, 1].real), rho, mu, float(w0))


def two_path_w_star(params: TwoPathParams, W: float, capacity_at) -> float:
    """Globally optimal antenna position on [0, W] for a two-path user.

    When Im(psi2) = 0 the rate is a pure cosine: the maximizer is 0 for
    Re(psi2) >= 0, the half period pi/|rho| if it fits the aperture, and W
    otherwise. Otherwise the stationary maximizer w0 is lifted by whole
    periods into [0, W] (smallest representative wins); if no period fits,
    capacity_at decides between the endpoints.
    """
    if params.rho == 0.0:
        raise DegeneratePathError("coincident departure angles: rate does not depend on w")
    im = params.psi2.imag
    if im == 0.0:
        if params.psi2.real >= 0.0:
            return 0.0
        half = np.pi / abs(params.rho)
        if half <= W:
            return float(half)
        return float(W)
    period = 2.0 * np.pi / abs(params.rho)
    base = params.w0 % period
    if base <= W:
        return float(base)
    return 0.0 if capacity_at(0.0) >= capacity_at(W) else float(W)


def grid_best_w(user: UserConfig, omega, K: int) -> tuple[float, float]:
    """Exhaustive search of the rate term over the grid {0, W/K, ..., W}.

    Returns the best position and its quadratic-form capacity term; ties go to
    the smallest position.
    """
    omega = np.asarray(omega, dtype=complex)
    psi = psi_matrix(user, omega.shape[0], omega)
    grid = np.linspace(0.0, user.W, K + 1)
    caps = quadratic_capacity_grid(psi, user.paths.aod, grid)
    i = int(np.argmax(caps))
    return float(grid[i]), float(caps[i])


def single_user_position_update(user: UserConfig, omega, K: int) -> float:
    """Best position of one single-antenna user against fixed interference.

    Dispatch: one path -> 0 (the rate is position-invariant); two paths ->
    closed form; otherwise grid search. Starting from a grid position, the
    updated position never decreases the rate.
    """
    if user.L == 1:
        return 0.0
    if user.L == 2:
        omega = np.asarray(omega, dtype=complex)
        psi = psi_matrix(user, omega.shape[0], omega)
        try:
            params = TwoPathParams.from_psi(psi, user.paths.aod)
        except DegeneratePathError:
            return 0.0
        return two_path_w_star(
            params, user.W, lambda w: quadratic_capacity_1ant(psi, user.paths.aod, w)
        )
    return grid_best_w(user, omega, K)[0]
