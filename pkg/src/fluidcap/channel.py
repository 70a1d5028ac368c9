"""Scenario types, steering vectors, channel matrices, and scenario I/O.

All lengths are measured in wavelengths (the wavelength is fixed to 1) and
the base-station uniform linear array has half-wavelength spacing. Noise is
normalized to the identity, so a user's linear power budget P doubles as its
SNR: snr_db = 10*log10(P).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation, DomainError

WAVELENGTH = 1.0
BS_SPACING = 0.5


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PathSet:
    """Propagation paths of one user: complex gains and arrival/departure angles."""

    gains: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray

    def __post_init__(self):
        gains = _readonly(np.asarray(self.gains, dtype=complex).ravel())
        aoa = _readonly(np.asarray(self.aoa, dtype=float).ravel())
        aod = _readonly(np.asarray(self.aod, dtype=float).ravel())
        if gains.size < 1:
            raise ConfigError("a path set needs at least one path")
        if not (gains.size == aoa.size == aod.size):
            raise ConfigError("gains, aoa, and aod must have matching lengths")
        for name, ang in (("aoa", aoa), ("aod", aod)):
            if np.any(ang < 0.0) or np.any(ang > np.pi):
                raise ConfigError(f"{name} angles must lie in [0, pi]")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "aoa", aoa)
        object.__setattr__(self, "aod", aod)

    @property
    def L(self) -> int:
        return int(self.gains.size)


@dataclass(frozen=True)
class UserConfig:
    """One user's terminal: N repositionable antennas on an aperture of length W.

    P is the linear (noise-normalized) power budget and K the quantization
    level of the aperture, giving the candidate grid {0, W/K, ..., W}.
    """

    N: int
    W: float
    P: float
    K: int
    paths: PathSet

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("antenna count N must be at least 1")
        if not self.W > 0:
            raise ConfigError("aperture length W must be positive")
        if not self.P > 0:
            raise ConfigError("power budget P must be positive")
        if self.K < self.N:
            raise ConfigError(
                f"quantization level K={self.K} cannot place N={self.N} distinct antennas"
            )

    @property
    def L(self) -> int:
        return self.paths.L

    def grid(self) -> np.ndarray:
        """Candidate antenna positions {0, W/K, 2W/K, ..., W}."""
        return np.linspace(0.0, self.W, self.K + 1)


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: BS array size plus per-user configurations."""

    M: int
    users: tuple

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("BS antenna count M must be at least 1")
        users = tuple(self.users)
        if not users:
            raise ConfigError("a scenario needs at least one user")
        object.__setattr__(self, "users", users)

    @property
    def U(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class PositionVector:
    """Pairwise-distinct antenna positions of one user."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).ravel()
        if pos.size < 1:
            raise ContractViolation("a position vector needs at least one entry")
        if not np.all(np.isfinite(pos)):
            raise ContractViolation("positions must be finite")
        if np.unique(pos).size != pos.size:
            raise ContractViolation("antenna positions must be pairwise distinct")
        object.__setattr__(self, "positions", _readonly(pos))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.positions, dtype=dtype)

    def check_box(self, W: float) -> None:
        if float(self.positions.min()) < 0.0 or float(self.positions.max()) > W:
            raise ContractViolation(f"positions must lie within [0, {W}]")

    @property
    def N(self) -> int:
        return int(self.positions.size)


def as_positions(w) -> np.ndarray:
    """Coerce a PositionVector, scalar, or array-like to a 1-D float array."""
    if isinstance(w, PositionVector):
        return np.asarray(w.positions, dtype=float)
    return np.atleast_1d(np.asarray(w, dtype=float)).ravel()


def steering_rx(beta: float, M: int) -> np.ndarray:
    """Unit-norm receive steering vector of the half-wavelength ULA."""
    if not 0.0 <= beta <= np.pi:
        raise DomainError(f"arrival angle {beta} outside [0, pi]")
    m = np.arange(M)
    return np.exp(-2j * np.pi * BS_SPACING * m * np.cos(beta)) / np.sqrt(M)


def steering_tx(theta: float, w) -> np.ndarray:
    """Unit-norm transmit steering vector for antennas at positions ``w``."""
    if not 0.0 <= theta <= np.pi:
        raise DomainError(f"departure angle {theta} outside [0, pi]")
    w = as_positions(w)
    return np.exp(-2j * np.pi * w * np.cos(theta)) / np.sqrt(w.size)


def rx_steering_matrix(aoa, M: int) -> np.ndarray:
    """M x L matrix whose columns are receive steering vectors."""
    return np.column_stack([steering_rx(float(b), M) for b in np.atleast_1d(aoa)])


def tx_steering_matrix(aod, w) -> np.ndarray:
    """N x L matrix whose columns are transmit steering vectors."""
    return np.column_stack([steering_tx(float(t), w) for t in np.atleast_1d(aod)])


def channel_matrix(user: UserConfig, w, M: int) -> np.ndarray:
    """M x N channel sqrt(M*N) * A_R diag(gains) A_T(w)^H."""
    w = as_positions(w)
    if w.size != user.N:
        raise ContractViolation(f"expected {user.N} positions, got {w.size}")
    a_r = rx_steering_matrix(user.paths.aoa, M)
    a_t = tx_steering_matrix(user.paths.aod, w)
    return np.sqrt(M * user.N) * (a_r * user.paths.gains) @ a_t.conj().T


@dataclass(frozen=True)
class ScenarioDims:
    """Shape parameters for generated scenarios; defaults follow the standard
    simulation setup (K = 100 grid points, 10 dB SNR, 10-wavelength aperture,
    5 paths)."""

    U: int = 1
    M: int = 16
    N: int = 1
    L: int = 5
    W: float = 10.0
    K: int = 100
    snr_db: float = 10.0


def random_scenario(seed, dims: ScenarioDims) -> Scenario:
    """Deterministic random scenario for a seed.

    Angles are i.i.d. uniform on [0, pi]; path gains are i.i.d. circularly
    symmetric complex Gaussian with variance 1/L per path, so the expected
    channel energy per user is one and P = 10**(snr_db/10) is the SNR. The
    draws do not depend on M, so scenarios that differ only in M share their
    path realizations seed by seed.
    """
    if dims.K < dims.N:
        raise ConfigError(f"K={dims.K} cannot place N={dims.N} distinct antennas")
    rng = np.random.default_rng(seed)
    power = 10.0 ** (dims.snr_db / 10.0)
    users = []
    for _ in range(dims.U):
        aoa = rng.uniform(0.0, np.pi, dims.L)
        aod = rng.uniform(0.0, np.pi, dims.L)
        gains = (rng.standard_normal(dims.L) + 1j * rng.standard_normal(dims.L)) * np.sqrt(
            1.0 / (2.0 * dims.L)
        )
        users.append(
            UserConfig(N=dims.N, W=dims.W, P=power, K=dims.K, paths=PathSet(gains, aoa, aod))
        )
    return Scenario(M=dims.M, users=tuple(users))


def scenario_to_dict(scenario: Scenario) -> dict:
    """JSON-ready representation of a scenario."""
    return {
        "M": scenario.M,
        "users": [
            {
                "N": u.N,
                "W_lambda": u.W,
                "P": u.P,
                "K": u.K,
                "paths": [
                    {
                        "gain_re": float(g.real),
                        "gain_im": float(g.imag),
                        "aoa_rad": float(a),
                        "aod_rad": float(d),
                    }
                    for g, a, d in zip(u.paths.gains, u.paths.aoa, u.paths.aod)
                ],
            }
            for u in scenario.users
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a scenario from its JSON representation."""
    try:
        users = []
        for entry in data["users"]:
            paths = entry["paths"]
            gains = np.array([p["gain_re"] + 1j * p["gain_im"] for p in paths])
            aoa = np.array([p["aoa_rad"] for p in paths])
            aod = np.array([p["aod_rad"] for p in paths])
            users.append(
                UserConfig(
                    N=int(entry["N"]),
                    W=float(entry["W_lambda"]),
                    P=float(entry["P"]),
                    K=int(entry["K"]),
                    paths=PathSet(gains, aoa, aod),
                )
            )
        return Scenario(M=int(data["M"]), users=tuple(users))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario document: {exc}") from exc


def write_scenario(scenario: Scenario, fp) -> None:
    """Write a scenario as JSON to a path or open text file."""
    doc = scenario_to_dict(scenario)
    if hasattr(fp, "write"):
        json.dump(doc, fp, indent=2)
        fp.write("\n")
    else:
        with open(fp, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")


def read_scenario(fp) -> Scenario:
    """Read a scenario from a JSON path or open text file."""
    if hasattr(fp, "read"):
        data = json.load(fp)
    else:
        with open(fp, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    return scenario_from_dict(data)
