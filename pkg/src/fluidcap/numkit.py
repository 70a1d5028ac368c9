"""Complex Hermitian linear-algebra kernel.

Base-2 log-determinants, dominant eigenpairs, PSD square roots, and the
Dykstra projection onto the elliptope (PSD matrices with a fixed diagonal).
Everything here is a pure function of its inputs and safe to call from
concurrent workers.

All log-determinants and capacities in this package are in bits, i.e.
logarithms are base 2.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ContractViolation, DomainError, NonconvergenceError

LN2 = float(np.log(2.0))

#: Relative tolerance for accepting a matrix as Hermitian.
HERMITIAN_RTOL = 1e-8

#: Relative tie window when picking the dominant eigenvalue.
EIG_TIE_RTOL = 1e-11

DYKSTRA_MAX_SWEEPS = 500
DYKSTRA_TOL = 1e-10


def hermitianize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^H) / 2, which is Hermitian to the last bit."""
    return (a + a.conj().T) / 2


def check_hermitian(a, name: str = "matrix") -> np.ndarray:
    """Validate that ``a`` is square and Hermitian within tolerance."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    tol = HERMITIAN_RTOL * max(1.0, scale)
    if not np.allclose(a, a.conj().T, rtol=0.0, atol=tol):
        raise ContractViolation(f"{name} is not Hermitian")
    return a


def logdet_hpd(h) -> float:
    """log2 det(H) for Hermitian positive definite H, in bits.

    Raises ContractViolation for non-Hermitian input and DomainError when the
    Cholesky factorization fails (the message names the offending pivot).
    """
    h = check_hermitian(np.asarray(h, dtype=complex), "logdet_hpd input")
    try:
        chol = scipy.linalg.cholesky(hermitianize(h), lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise DomainError(f"matrix is not positive definite: {exc}") from exc
    return float(2.0 * np.sum(np.log2(np.real(np.diag(chol)))))


def dominant_eig(h) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a Hermitian matrix and a unit-norm eigenvector.

    Ties within EIG_TIE_RTOL (relative) are broken toward the lowest index of
    the eigendecomposition basis, which keeps the result deterministic.
    """
    h = check_hermitian(np.asarray(h, dtype=complex), "dominant_eig input")
    vals, vecs = np.linalg.eigh(hermitianize(h))
    top = vals[-1]
    tol = EIG_TIE_RTOL * max(1.0, abs(top))
    idx = int(np.argmax(vals >= top - tol))
    vec = vecs[:, idx]
    return float(vals[idx]), vec / np.linalg.norm(vec)


def min_eigval(a) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(hermitianize(np.asarray(a, dtype=complex)))[0])


def psd_sqrt(a) -> np.ndarray:
    """Hermitian square root of a PSD matrix; negative rounding noise is clipped."""
    vals, vecs = np.linalg.eigh(hermitianize(np.asarray(a, dtype=complex)))
    vals = np.clip(vals, 0.0, None)
    return hermitianize((vecs * np.sqrt(vals)) @ vecs.conj().T)


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _HAVE_NUMBA = False


def _dykstra_python(x, diag_value, tol, max_sweeps):
    (heevr,) = scipy.linalg.get_lapack_funcs(("heevr",), (x,))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    cur = x
    for _ in range(max_sweeps):
        a = hermitianize(cur + p)
        vals, vecs, _, _, info = heevr(a)
        if info != 0:
            vals, vecs = np.linalg.eigh(a)
        if vals[0] >= 0.0:
            y = a
        else:
            np.clip(vals, 0.0, None, out=vals)
            y = hermitianize((vecs * vals) @ vecs.conj().T)
        p = cur + p - y
        nxt = y + q
        np.fill_diagonal(nxt, diag_value)
        q = y + q - nxt
        diff = nxt - cur
        delta = float(np.sqrt(np.vdot(diff, diff).real))
        cur = nxt
        if delta < tol:
            return cur, True
    return cur, False


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _dykstra_numba(x, diag_value, tol, max_sweeps):  # pragma: no cover - jitted
        n = x.shape[0]
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        cur = x.copy()
        for _ in range(max_sweeps):
            a = cur + p
            a = (a + np.conj(a.T)) / 2.0
            vals, vecs = np.linalg.eigh(a)
            if vals[0] >= 0.0:
                y = a
            else:
                y = np.zeros_like(a)
                for k in range(n):
                    v = vals[k]
                    if v > 0.0:
                        for i in range(n):
                            for j in range(n):
                                y[i, j] += v * vecs[i, k] * np.conj(vecs[j, k])
                y = (y + np.conj(y.T)) / 2.0
            p = cur + p - y
            nxt = y + q
            for i in range(n):
                nxt[i, i] = diag_value
            q = y + q - nxt
            delta = 0.0
            for i in range(n):
                for j in range(n):
                    d = nxt[i, j] - cur[i, j]
                    delta += d.real * d.real + d.imag * d.imag
            cur = nxt
            if np.sqrt(delta) < tol:
                return cur, True
        return cur, False


def elliptope_project(x, diag_value: float) -> np.ndarray:
    """Project onto {M PSD, diag(M) = diag_value * 1} in Frobenius norm.

    Dykstra alternating projections between the PSD cone and the affine
    fixed-diagonal set. The returned matrix has its diagonal set exactly and
    a minimum eigenvalue no smaller than -1e-9. A feasible input is returned
    unchanged. Raises NonconvergenceError (carrying the best iterate) if the
    sweep cap is reached before the successive-iterate change drops below
    DYKSTRA_TOL.

    This sits on the innermost hot path of the relaxation solvers; the sweep
    loop is jit-compiled when numba is available.
    """
    if diag_value <= 0:
        raise ContractViolation("diag_value must be positive")
    x = hermitianize(check_hermitian(np.asarray(x, dtype=complex), "elliptope_project input"))
    if _HAVE_NUMBA:
        out, converged = _dykstra_numba(
            np.ascontiguousarray(x), float(diag_value), DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS
        )
    else:
        out, converged = _dykstra_python(x, float(diag_value), DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS)
    if not converged:
        raise NonconvergenceError(
            f"elliptope projection did not converge within {DYKSTRA_MAX_SWEEPS} sweeps",
            best=out,
        )
    return out
