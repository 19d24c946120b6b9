"""Dense complex linear algebra used throughout the package.

Thin, validated wrappers around LAPACK (through SciPy): general
eigendecomposition with residual and conditioning diagnostics, the matrix
exponential and LU-based linear solves.  Matrices are plain ``numpy``
arrays of ``complex128``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import NumericalError, SingularMatrixError, SizeError

MAX_EIG_DIM = 2048
EIG_RESIDUAL_TOL = 1e-10
EIGVEC_COND_LIMIT = 1e8


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a 2-d complex array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectrum and eigenvectors of a general square matrix.

    Attributes
    ----------
    eigenvalues : ndarray, shape (N,)
    right_vectors : ndarray, shape (N, N)
        Column ``i`` is the unit-norm right eigenvector of ``eigenvalues[i]``.
    left_vectors : ndarray or None
        Column ``i`` satisfies ``u_i^H A = lambda_i u_i^H``.
    residuals : ndarray, shape (N,)
        ``||A v_i - lambda_i v_i||`` for each pair.
    condition : float
        2-norm condition number of ``right_vectors``; large values flag
        (nearly) defective matrices.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray | None
    residuals: np.ndarray
    condition: float

    @property
    def ill_conditioned(self) -> bool:
        return not self.condition < EIGVEC_COND_LIMIT

    def sorted(self, key=None) -> "EigenDecomposition":
        """Return a copy with pairs reordered by ``key(eigenvalues)``.

        Defaults to ordering by real part, then imaginary part.
        """
        lam = self.eigenvalues
        order = np.lexsort((lam.imag, lam.real)) if key is None else np.argsort(key(lam), kind="stable")
        left = None if self.left_vectors is None else self.left_vectors[:, order]
        return EigenDecomposition(lam[order], self.right_vectors[:, order], left,
                                  self.residuals[order], self.condition)


def eig(a, *, left: bool = False, tol: float = EIG_RESIDUAL_TOL) -> EigenDecomposition:
    """Full eigendecomposition of a general complex matrix.

    Raises
    ------
    SizeError
        If the matrix is larger than ``MAX_EIG_DIM``.
    NumericalError
        If LAPACK fails to converge, or some residual exceeds
        ``tol * ||A||``.  The exception's ``partial`` holds the
        decomposition when one was obtained.

    Notes
    -----
    Balancing inside ``zgeev`` can break down when entries span hundreds
    of orders of magnitude.  On a failed residual check the
    decomposition is retried once with entries below ``eps * ||A||``
    set to zero (a change inside the backward-error floor); residuals
    are always measured against the original matrix.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if n > MAX_EIG_DIM:
        raise SizeError(f"eig: dimension {n} exceeds {MAX_EIG_DIM}")
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny) if n else np.finfo(float).tiny
    dec = _geev(a, a, left)
    if dec.residuals.max(initial=0.0) > tol * scale:
        tiny = np.abs(a) < np.finfo(float).eps * scale
        if np.any(tiny & (a != 0)):
            retry = _geev(np.where(tiny, 0, a), a, left)
            if retry.residuals.max() < dec.residuals.max():
                dec = retry
    worst = float(dec.residuals.max(initial=0.0))
    if worst > tol * scale:
        raise NumericalError(
            f"eig: residual {worst:.3e} exceeds {tol:.1e}*||A|| = {tol * scale:.3e}",
            partial=dec, report={"max_residual": worst, "norm": scale},
        )
    return dec


def _geev(work: np.ndarray, a: np.ndarray, left: bool) -> EigenDecomposition:
    """Decompose ``work``; residuals are taken against ``a``."""
    try:
        if left:
            lam, vl, vr = sla.eig(work, left=True, right=True, check_finite=False)
        else:
            lam, vr = sla.eig(work, check_finite=False)
            vl = None
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eig: QR iteration did not converge ({exc})") from exc
    vr = vr / np.linalg.norm(vr, axis=0)
    if vl is not None:
        vl = vl / np.linalg.norm(vl, axis=0)
    residuals = np.linalg.norm(a @ vr - vr * lam, axis=0)
    with np.errstate(over="ignore", divide="ignore"):
        cond = float(np.linalg.cond(vr)) if a.shape[0] else 1.0
    if not np.isfinite(cond):
        cond = np.inf
    return EigenDecomposition(lam, vr, vl, residuals, cond)


def eigvals(a) -> np.ndarray:
    """Eigenvalues only (no residual bookkeeping)."""
    a = as_matrix(a, square=True)
    try:
        return sla.eigvals(a, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigvals: QR iteration did not converge ({exc})") from exc


def expm(a) -> np.ndarray:
    """Matrix exponential by Padé scaling and squaring."""
    a = as_matrix(a, square=True)
    with np.errstate(over="ignore", invalid="ignore"):
        out = sla.expm(a)
    if not np.all(np.isfinite(out)):
        raise NumericalError(
            f"expm: overflow (||A||_1 = {np.linalg.norm(a, 1):.3e})",
            report={"norm1": float(np.linalg.norm(a, 1))},
        )
    return out


def solve(a, b, *, tol: float = 1e-13) -> np.ndarray:
    """Solve ``a @ x = b`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix.  A pivot with magnitude at most
    ``tol * max|a_ij|`` raises :class:`SingularMatrixError`.
    """
    a = as_matrix(a, square=True)
    b = np.asarray(b)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"solve: shape mismatch {a.shape} vs {b.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # reported below as an error
        lu, piv = sla.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(a).max(initial=0.0)
    smallest = float(pivots.min(initial=np.inf))
    if scale == 0.0 or smallest <= tol * scale:
        raise SingularMatrixError(f"solve: matrix singular to tolerance (pivot {smallest:.3e})", smallest)
    return sla.lu_solve((lu, piv), b, check_finite=False)


def set_distance(a, b) -> float:
    """Largest distance in the optimal one-to-one pairing of two point sets.

    Used to compare spectra as multisets irrespective of ordering.
    """
    a = np.ravel(np.asarray(a, dtype=complex))
    b = np.ravel(np.asarray(b, dtype=complex))
    if a.size != b.size:
        raise ValueError(f"set sizes differ: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
