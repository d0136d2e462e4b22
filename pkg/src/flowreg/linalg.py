"""Small dense real linear algebra used throughout the package.

Matrices and vectors are plain ``numpy`` float arrays. The SVD is a one-sided
Jacobi sweep, which keeps tiny singular values to high relative accuracy and
is more than fast enough for the matrix sizes used by the oracles.
"""
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    'DimensionError', 'NumericallySingularWarning', 'SvdConvergenceError',
    'SvdFactors', 'as_matrix', 'as_vector', 'matvec', 'matvec_t', 'svd',
    'singular_values', 'spectral_norm', 'condition_number',
    'is_numerically_singular', 'DEFAULT_RANK_TOL',
]

DEFAULT_RANK_TOL = 1e-12

# one-sided Jacobi is O(n^3) per sweep in Python loops over column pairs;
# above this size the LAPACK driver is used instead
JACOBI_MAX_COLS = 160


class DimensionError(ValueError):
    pass


class SvdConvergenceError(RuntimeError):
    def __init__(self, sweeps):
        super().__init__('Jacobi SVD did not converge after {} sweeps'.format(sweeps))
        self.sweeps = sweeps


class NumericallySingularWarning(RuntimeWarning):
    pass


def as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise DimensionError('expected a nonempty 2-d matrix, got shape {}'.format(A.shape))
    if not np.all(np.isfinite(A)):
        raise ValueError('matrix has non-finite entries')
    return A


def as_vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError('expected a nonempty 1-d vector, got shape {}'.format(x.shape))
    if not np.all(np.isfinite(x)):
        raise ValueError('vector has non-finite entries')
    return x


def matvec(A, x):
    A, x = as_matrix(A), as_vector(x)
    if A.shape[1] != x.shape[0]:
        raise DimensionError('cannot multiply {} matrix by vector of length {}'.format(A.shape, x.shape[0]))
    return A @ x


def matvec_t(A, y):
    """Return ``A.T @ y``."""
    A, y = as_matrix(A), as_vector(y)
    if A.shape[0] != y.shape[0]:
        raise DimensionError('cannot multiply transpose of {} matrix by vector of length {}'.format(A.shape, y.shape[0]))
    return A.T @ y


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = U diag(s) V^T`` with ``k = min(m, n)`` triplets.

    Attributes
    ----------
    s : ndarray, shape (k,)
        Singular values, nonincreasing.
    U : ndarray, shape (m, k)
    V : ndarray, shape (n, k)
    rank : int
        Number of singular values above ``rank_tol * s[0]``.
    """
    s: np.ndarray
    U: np.ndarray
    V: np.ndarray
    rank: int

    @property
    def sigma_max(self):
        return float(self.s[0])


def _jacobi_svd(A, tol=1e-15, max_sweeps=60):
    m, n = A.shape
    # work on a unit-max-entry copy so squared column norms neither under- nor overflow
    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        scale = 1.0
    W = np.array(A / scale, order='F')
    V = np.eye(n, order='F')
    # columns this far below the Frobenius norm are treated as exact zeros;
    # rotating them only churns underflowed products
    negligible = 1e-280 * float(np.sum(W * W))
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp, wq = W[:, p], W[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if gamma == 0.0 or min(alpha, beta) <= negligible:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha) * np.sqrt(beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                if t == 0.0:
                    continue
                rotated = True
                c = 1.0 / np.hypot(1.0, t)
                sn = c * t
                wp_old = wp.copy()
                wp *= c
                wp -= sn * wq
                wq *= c
                wq += sn * wp_old
                vp, vq = V[:, p], V[:, q]
                vp_old = vp.copy()
                vp *= c
                vp -= sn * vq
                vq *= c
                vq += sn * vp_old
        if not rotated:
            break
    else:
        raise SvdConvergenceError(max_sweeps)

    s = np.linalg.norm(W, axis=0)
    order = np.argsort(-s, kind='stable')
    s, W, V = s[order], W[:, order], V[:, order]
    U = np.zeros_like(W)
    # same cut as the rotation skip, so every kept column was orthogonalised
    nz = s * s > negligible if negligible > 0 else s > 0
    U[:, nz] = W[:, nz] / s[nz]
    # columns for zero singular values: complete to an orthonormal set
    if not np.all(nz):
        U = _complete_orthonormal(U, nz)
    s[~nz] = 0.0
    return s * scale, U, V


def _complete_orthonormal(U, keep):
    m, k = U.shape
    basis = [U[:, j] for j in range(k) if keep[j]]
    out = U.copy()
    e = 0
    for j in range(k):
        if keep[j]:
            continue
        while True:
            v = np.zeros(m)
            v[e % m] = 1.0
            e += 1
            for b in basis:
                v -= (b @ v) * b
            for b in basis:
                v -= (b @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                break
        v /= nv
        basis.append(v)
        out[:, j] = v
    return out


def svd(A, rank_tol=DEFAULT_RANK_TOL, method='auto'):
    """Thin singular value decomposition.

    ``method`` is ``'jacobi'`` (one-sided Jacobi), ``'lapack'`` or ``'auto'``,
    which picks Jacobi for matrices with at most ``JACOBI_MAX_COLS`` columns.
    """
    A = as_matrix(A)
    if method == 'auto':
        method = 'jacobi' if min(A.shape) <= JACOBI_MAX_COLS else 'lapack'
    if method == 'jacobi':
        if A.shape[0] >= A.shape[1]:
            s, U, V = _jacobi_svd(A)
        else:
            s, V, U = _jacobi_svd(A.T)
    elif method == 'lapack':
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        V = Vt.T
    else:
        raise ValueError('unknown SVD method {!r}'.format(method))
    rank = int(np.count_nonzero(s > rank_tol * s[0])) if s[0] > 0 else 0
    return SvdFactors(s=s, U=U, V=V, rank=rank)


def singular_values(A, method='auto'):
    return svd(A, method=method).s


def spectral_norm(A, tol=1e-15, max_iter=10000, seed=0):
    """Largest singular value by power iteration on ``A^T A``.

    Uses a seeded random start so results are reproducible. Returns 0 for
    the zero matrix.
    """
    A = as_matrix(A)
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; restart from a fresh draw
            v = rng.standard_normal(A.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(np.sqrt(est))


def is_numerically_singular(s, rank_tol=DEFAULT_RANK_TOL):
    s = np.asarray(s)
    return bool(s[-1] <= rank_tol * s[0])


def condition_number(A, rank_tol=DEFAULT_RANK_TOL, method='auto'):
    """Ratio of the largest to the smallest singular value.

    When the smallest singular value is below ``rank_tol`` times the largest,
    the ratio is still returned but a :class:`NumericallySingularWarning` is
    issued.
    """
    s = svd(A, method=method).s
    if s[0] == 0.0:
        warnings.warn('zero matrix', NumericallySingularWarning, stacklevel=2)
        return float('inf')
    if is_numerically_singular(s, rank_tol):
        warnings.warn('matrix is numerically singular (sigma_min/sigma_max = {:.3e})'.format(s[-1] / s[0]),
                      NumericallySingularWarning, stacklevel=2)
    if s[-1] == 0.0:
        return float('inf')
    return float(s[0] / s[-1])
