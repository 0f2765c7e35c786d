"""Dense and sparse linear algebra used throughout the package.

Dense matrices are plain ``numpy`` arrays and sparse matrices are
``scipy.sparse.csr_matrix`` instances; the helpers below validate them and
provide the handful of factorizations the certification pipeline needs:
SVD, least squares, the Moore-Penrose pseudoinverse, a basic (minimal
support) solution of underdetermined systems and a Hager-Higham estimate
of ``||A^{-1}||_1``.
"""
import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from nodalcert.errors import (ConvergenceError, NoSolution, RankDeficient,
                              Singular)

logger = logging.getLogger(__name__)

#: relative singular value cutoff for declaring rank deficiency
RANK_TOL = 1e-12

#: sweep cap of the 1-norm estimator
ONENORM_MAX_SWEEPS = 5


def as_dense(A):
    """Return ``A`` as a finite 2-D float array."""
    if sp.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError('expected a 2-D array, got shape %s' % (A.shape,))
    if not np.all(np.isfinite(A)):
        raise ValueError('matrix has non-finite entries')
    return A


def as_csr(A):
    """Return ``A`` as a CSR matrix with sorted, duplicate-free indices."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError('matrix has non-finite entries')
    return A


def svd(A):
    """Thin singular value decomposition ``A = U diag(s) Vt``.

    Singular values come back sorted in descending order.

    Raises
    ------
    ConvergenceError
        If the underlying LAPACK driver does not converge.
    """
    A = as_dense(A)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as err:
        raise ConvergenceError('SVD did not converge: %s' % err) from err
    return U, s, Vt


def _check_rank(s, what):
    if s.size == 0:
        raise RankDeficient('%s: empty matrix' % what)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(
            '%s: sigma_min/sigma_max = %.3e below %.0e'
            % (what, s[-1] / s[0] if s[0] > 0 else 0.0, RANK_TOL))


def solve_least_squares(A, b):
    """Minimize ``||Ax - b||_2`` for ``A`` of full column rank."""
    A = as_dense(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] < A.shape[1]:
        raise RankDeficient('least squares needs rows >= cols, got %s'
                            % (A.shape,))
    U, s, Vt = svd(A)
    _check_rank(s, 'solve_least_squares')
    return Vt.T @ ((U.T @ b) / s)


def pseudoinverse(A):
    """Moore-Penrose pseudoinverse of a matrix with full column rank."""
    A = as_dense(A)
    if A.shape[0] < A.shape[1]:
        raise RankDeficient('pseudoinverse needs full column rank, got %s'
                            % (A.shape,))
    U, s, Vt = svd(A)
    _check_rank(s, 'pseudoinverse')
    return (Vt.T / s) @ U.T


def basic_solution(A, b, tol=RANK_TOL):
    """Solve a consistent underdetermined system with few nonzeros.

    QR with column pivoting (LAPACK ``geqp3``) picks a basis of columns,
    all other unknowns are set to zero, so the result has at most
    ``rank(A) <= rows`` nonzero entries. This mirrors what a backslash
    operator returns for a wide system.

    Raises
    ------
    NoSolution
        If ``b`` is not in the range of ``A``.
    """
    A = as_dense(A)
    b = np.asarray(b, dtype=float)
    Q, R, perm = scipy.linalg.qr(A, mode='economic', pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * diag[0])) if diag.size and diag[0] > 0 \
        else 0
    y = Q[:, :rank].T @ b
    bnorm = np.linalg.norm(b)
    gap = np.linalg.norm(b - Q[:, :rank] @ y)
    if gap > 1e-10 * max(bnorm, 1.0):
        raise NoSolution('inconsistent system: residual %.3e' % gap)
    x = np.zeros(A.shape[1])
    if rank > 0:
        x[perm[:rank]] = scipy.linalg.solve_triangular(R[:rank, :rank], y)
    res = np.linalg.norm(A @ x - b)
    if res > 1e-10 * max(bnorm, 1.0):
        raise NoSolution('basic solution residual %.3e too large' % res)
    return x


def onenorm_estimate(solve, solve_transpose, n,
                     max_sweeps=ONENORM_MAX_SWEEPS):
    """Hager-Higham lower bound for ``||A^{-1}||_1``.

    Parameters
    ----------
    solve : callable
        ``solve(b)`` returns ``A^{-1} b``.
    solve_transpose : callable
        ``solve_transpose(b)`` returns ``A^{-T} b``.
    n : int
        Order of ``A``.
    max_sweeps : int, optional
        Cap on the number of unit-vector sweeps.

    Returns
    -------
    float
        An estimate ``est`` with ``est <= ||A^{-1}||_1``. Every candidate is
        the 1-norm of ``A^{-1}v`` for a vector with ``||v||_1 = 1``, so the
        result is always a genuine lower bound.
    """
    x = np.full(n, 1.0 / n)
    y = solve(x)
    est = np.sum(np.abs(y))
    if n == 1:
        return float(est)
    signs = np.where(y >= 0, 1.0, -1.0)
    z = solve_transpose(signs)
    j = int(np.argmax(np.abs(z)))
    sweep = 2
    while True:
        e = np.zeros(n)
        e[j] = 1.0
        y = solve(e)
        est_old = est
        est = np.sum(np.abs(y))
        new_signs = np.where(y >= 0, 1.0, -1.0)
        # repeated sign vector means the iteration is cycling
        if np.array_equal(new_signs, signs) or est <= est_old:
            est = max(est, est_old)
            break
        signs = new_signs
        z = solve_transpose(signs)
        j_last = j
        j = int(np.argmax(np.abs(z)))
        if z[j_last] == abs(z[j]) or sweep >= max_sweeps:
            break
        sweep += 1

    alt = np.array([(-1.0) ** i * (1.0 + i / (n - 1)) for i in range(n)])
    y = solve(alt)
    alt_est = 2.0 * np.sum(np.abs(y)) / (3.0 * n)
    return float(max(est, alt_est))


def sparse_lu(A):
    """LU factorization with partial pivoting of a square sparse matrix.

    Raises
    ------
    Singular
        If the factorization hits an exactly zero pivot.
    """
    A = sp.csc_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError('LU needs a square matrix, got %s' % (A.shape,))
    try:
        # natural ordering keeps this a plain partial-pivoting LU
        return spla.splu(A, permc_spec='NATURAL',
                         options=dict(SymmetricMode=False))
    except RuntimeError as err:
        raise Singular('sparse LU failed: %s' % err) from err


def inverse_infnorm_estimate(A):
    """Estimate ``||A^{-1}||_inf`` for a square sparse matrix.

    ``||A^{-1}||_inf = ||A^{-T}||_1``, so the 1-norm estimator runs on the
    inverse of the transpose.
    """
    lu = sparse_lu(A)
    n = A.shape[0]

    def solve_t(b):
        return lu.solve(np.asarray(b, dtype=float), trans='T')

    def solve_n(b):
        return lu.solve(np.asarray(b, dtype=float), trans='N')

    est = onenorm_estimate(solve_t, solve_n, n)
    if not np.isfinite(est):
        raise Singular('inverse norm estimate is not finite')
    return est


def row_sum_norm(A):
    """``||A||_inf``, the maximum absolute row sum, dense or sparse."""
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max()) if A.shape[0] else 0.0
    A = np.asarray(A, dtype=float)
    return float(np.abs(A).sum(axis=1).max()) if A.shape[0] else 0.0
