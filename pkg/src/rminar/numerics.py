"""Small dense linear algebra used throughout the package.

The matrices handled here are tiny ((p+1) x (p+1) normal equations,
p^2 x p^2 second-moment matrices), so every routine is a thin, checked
wrapper around numpy / scipy with the error semantics the rest of the
package relies on.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import NoConvergence, SingularMatrix

__all__ = ["solve", "kronecker", "spectral_radius", "nnls"]

_PIVOT_TOL = 1e-12


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises SingularMatrix when a pivot is smaller than 1e-12 times the
    largest entry of its row.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    n, m = A.shape
    if n != m:
        raise ValueError("solve requires a square matrix")
    if b.shape[0] != n:
        raise ValueError("dimension mismatch between A and b")
    if n == 0:
        return np.zeros_like(b)
    row_scale = np.max(np.abs(A), axis=1)
    if np.any(row_scale == 0.0):
        raise SingularMatrix("matrix has an all-zero row")
    # Row-equilibrate so the pivot test is relative to each row's scale.
    As = A / row_scale[:, None]
    with warnings.catch_warnings():
        # an exactly singular factor is reported through SingularMatrix below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(As, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < _PIVOT_TOL:
        raise SingularMatrix("pivot below 1e-12 of row scale")
    bs = b / row_scale if b.ndim == 1 else b / row_scale[:, None]
    x = scipy.linalg.lu_solve((lu, piv), bs, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("solution is not finite")
    return x


def kronecker(A, B) -> np.ndarray:
    """Kronecker product: block matrix with blocks ``A[i, j] * B``."""
    return np.kron(np.atleast_2d(np.asarray(A, dtype=float)),
                   np.atleast_2d(np.asarray(B, dtype=float)))


def spectral_radius(A) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("spectral_radius requires a square matrix")
    if A.size == 0:
        return 0.0
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(eig)))


def nnls(A, b, *, return_active: bool = False, maxiter: int | None = None):
    """Nonnegative least squares ``min ||A x - b||_2`` subject to ``x >= 0``.

    The Lawson-Hanson active-set solution is polished by re-solving the
    normal equations on the passive set, so the free coordinates satisfy
    the stationarity condition to rounding error.

    With ``return_active=True`` also returns the boolean mask of
    coordinates held at zero by the constraint.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != b.shape[0]:
        raise ValueError("A.rows must equal b.length")
    k = A.shape[1]
    # scipy's solver works on the raw scale; column scaling keeps it
    # well-conditioned when regressors span many orders of magnitude.
    col_scale = np.sqrt(np.sum(A * A, axis=0))
    if np.any(col_scale == 0.0):
        raise SingularMatrix("design has an all-zero column")
    As = A / col_scale
    try:
        z, _ = scipy.optimize.nnls(As, b, maxiter=maxiter if maxiter else 50 * k)
    except RuntimeError as exc:
        raise NoConvergence(f"active-set iteration cap reached: {exc}") from exc
    x = z / col_scale
    passive = x > 0
    if np.any(passive):
        Ap = A[:, passive]
        xp = solve(Ap.T @ Ap, Ap.T @ b)
        if np.all(xp > 0):
            x = np.zeros(k)
            x[passive] = xp
    active = ~(x > 0)
    x[active] = 0.0
    if return_active:
        return x, active
    return x
