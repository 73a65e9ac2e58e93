"""Dense symmetric kernels: solve, polar factor, eigendecomposition.

Everything here is small (dimension <= ~64) and dense. The heavy lifting is
delegated to LAPACK via numpy/scipy; this module owns the contracts around
it: symmetry validation, condition thresholds, sign conventions, and the
error taxonomy.
"""

import numpy as np
import scipy.linalg

from .errors import NoConvergence, RankDeficient, SingularHessian

COND_LIMIT = 1e12
PIVOT_FLOOR = 1e-14
SYM_RTOL = 1e-10


def _as_square_symmetric(A, rtol=SYM_RTOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix, got shape %r" % (A.shape,))
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric within %g relative" % rtol)
    return A


def condition_estimate(H) -> float:
    """Spectral condition number estimate |lambda|_max / |lambda|_min."""
    H = np.asarray(H, dtype=float)
    lam = np.abs(np.linalg.eigvalsh(H))
    if lam[-1] == 0.0:
        return np.inf
    lmin = lam.min()
    return np.inf if lmin == 0.0 else float(lam.max() / lmin)


def symmetric_solve(H, b) -> np.ndarray:
    """Solve H s = b for symmetric H via a pivoted LDL^T factorisation.

    Raises SingularHessian when the spectral condition estimate exceeds
    COND_LIMIT or the smallest |eigenvalue| underflows PIVOT_FLOOR * ||H||.
    """
    H = _as_square_symmetric(H)
    b = np.asarray(b, dtype=float)
    if b.shape != (H.shape[0],):
        raise ValueError("rhs length %r does not match matrix dimension %d"
                         % (b.shape, H.shape[0]))
    lam = np.abs(np.linalg.eigvalsh(H))
    lmax = float(lam.max())
    lmin = float(lam.min())
    if lmax == 0.0 or lmin < PIVOT_FLOOR * lmax or lmax / lmin > COND_LIMIT:
        raise SingularHessian(
            "condition estimate %.3e exceeds limits" %
            (np.inf if lmin == 0.0 else lmax / lmin))
    return scipy.linalg.solve(H, b, assume_a="sym")


def polar_factor(M) -> np.ndarray:
    """Orthonormal polar factor U = M (M^T M)^{-1/2} of an n x p matrix.

    U is the Frobenius-closest matrix with orthonormal columns. Computed
    through the eigendecomposition of M^T M (p is tiny in every use here, so
    no numerically fragile regime arises).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise ValueError("expected n x p with n >= p, got shape %r" % (M.shape,))
    s, Q = np.linalg.eigh(M.T @ M)
    smax = float(s[-1])
    if smax <= 0.0:
        raise RankDeficient("matrix has no positive singular value")
    smin = np.sqrt(max(float(s[0]), 0.0))
    if smin <= 1e-12 * np.sqrt(smax):
        raise RankDeficient(
            "smallest singular value %.3e below rank threshold" % smin)
    return M @ (Q * (1.0 / np.sqrt(s))) @ Q.T


def symmetric_eigen(A):
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric A.

    Eigenvector signs are fixed so the first component of each column whose
    magnitude is above 1e-12 is positive, making ground-truth comparisons
    deterministic.
    """
    A = _as_square_symmetric(A)
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence("eigensolver did not converge") from exc
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        idx = np.nonzero(np.abs(col) > 1e-12)[0]
        if idx.size and col[idx[0]] < 0.0:
            V[:, k] = -col
    return lam, V
