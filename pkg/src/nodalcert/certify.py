"""Relative error bounds and the sharpness worst case.

For nodal values ``u~`` solving ``Au ~ f`` with residual at most ``K`` times
the residual of the true nodal values, the relative error obeys::

    ||u* - u~||_p / ||u*||_S <= (1 + K) C_S(A) ||c||_q

:func:`worst_case` builds a problem whose error sits between
``(K - 1) C_S ||u*||_S ||c||_inf`` and ``(K + 1) C_S ||u*||_S ||c||_inf``.
"""
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from nodalcert import linalg
from nodalcert.errors import DimensionMismatch, InputError, Singular
from nodalcert.kernels import IDENTITY
from nodalcert.stability import (dirichlet_split, stability)


def residual(A, u_tilde, f, q=np.inf):
    """``r = f - A u~`` and its ``q``-norm."""
    u_tilde = np.asarray(u_tilde, dtype=float)
    f = np.asarray(f, dtype=float)
    if A.shape[1] != u_tilde.shape[0] or A.shape[0] != f.shape[0]:
        raise DimensionMismatch('A is %s, u has %d and f has %d entries'
                                % (A.shape, u_tilde.shape[0], f.shape[0]))
    r = f - A @ u_tilde
    return r, float(np.linalg.norm(r, ord=q))


def admissibility_K(A, u_tilde, f, u_star, q=np.inf):
    """Ratio ``||A u~ - f||_q / ||A u* - f||_q``.

    Returns 0 when ``f = A u*`` exactly, where no finite ratio exists.
    """
    _, num = residual(A, u_tilde, f, q)
    _, den = residual(A, u_star, f, q)
    if den == 0.0:
        return 0.0
    return num / den


@dataclass
class Certificate:
    """Computable bound ``(1 + K) C_S ||c||_q`` with its ingredients."""
    C_S: float
    stability_method: str
    c_norm: float
    K: float
    norm: str
    bound: float = field(init=False)
    kernel: str = ''
    method: str = ''
    nodes_digest: str = ''
    split: bool = False
    M: int = 0
    N: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.C_S <= 0 or self.c_norm < 0 or self.K < 0:
            raise InputError('need C_S > 0, ||c|| >= 0 and K >= 0')
        self.bound = (1.0 + self.K) * self.C_S * self.c_norm

    def to_dict(self):
        return asdict(self)


def error_bound(C_S, c_norm, K=0.0, **info):
    """Combine stability and consistency into a :class:`Certificate`.

    ``C_S`` may be a float or a ``StabilityEstimate``.
    """
    method = info.pop('stability_method', getattr(C_S, 'method', ''))
    norm = info.pop('norm', getattr(C_S, 'norm', 'inf'))
    return Certificate(float(C_S), method, float(c_norm), float(K), norm,
                       **info)


def certify_system(system, kernel=None, norm='inf', K=0.0, split=False,
                   timings=False):
    """Assembled system to certificate: consistency, stability, bound.

    With ``split=True`` the Dirichlet rows are eliminated and ``C_S(B)``
    is combined with the interior consistency vector.
    """
    kernel = kernel or system.kernel
    t0 = time.perf_counter()
    cvec = system.consistency(kernel)
    t1 = time.perf_counter()
    q = 2 if str(norm) == '2' else np.inf
    if split:
        parts = dirichlet_split(system)
        mat = parts.B
        c_vals = cvec.values[parts.rows]
    else:
        mat = system.A
        c_vals = cvec.values
    c_norm = float(np.linalg.norm(c_vals, ord=q)) if len(c_vals) else 0.0
    est = stability(mat, norm)
    t2 = time.perf_counter()
    meta = {}
    if timings:
        meta['timings'] = {'consistency_s': t1 - t0, 'stability_s': t2 - t1}
    return error_bound(est, c_norm, K, kernel=kernel.spec,
                       method=system.method,
                       nodes_digest=system.nodes.digest(), split=split,
                       M=int(mat.shape[1]), N=int(mat.shape[0]), meta=meta)


@dataclass
class WorstCase:
    """Joint worst case for stability and consistency.

    ``u_star`` are the nodal values of the Riesz representer of the
    worst-approximated functional, ``f`` its exact data, ``u_tilde`` an
    admissible numerical solution pushed along the worst stability
    direction ``u_S``.
    """
    u_star: np.ndarray
    u_tilde: np.ndarray
    f: np.ndarray
    u_S: np.ndarray
    row: int
    C_S: float
    c_norm: float
    norm_S: float
    K: float
    consistency_residual: float
    error: float
    lower: float
    upper: float

    @property
    def relative_error(self):
        return self.error / self.norm_S

    @property
    def relative_lower(self):
        return self.lower / self.norm_S

    @property
    def relative_upper(self):
        return self.upper / self.norm_S

    def summary(self):
        return {
            'row': int(self.row), 'K': self.K, 'C_S': self.C_S,
            'c_norm': self.c_norm, 'norm_S': self.norm_S,
            'consistency_residual': self.consistency_residual,
            'error': self.error, 'lower': self.lower, 'upper': self.upper,
            'relative_error': self.relative_error,
            'relative_lower': self.relative_lower,
            'relative_upper': self.relative_upper,
        }


def _representer_values(kernel, stencil, points):
    """``(lam - lam~)^y K(x, y)`` at every ``x`` in ``points``."""
    op = stencil.functional.operator
    anchor = stencil.anchor
    lead = kernel.action(IDENTITY, op,
                         np.linalg.norm(points - anchor, axis=1))
    D = np.linalg.norm(points[:, None] - stencil.points[None], axis=2)
    body = kernel.action(IDENTITY, IDENTITY, D) * stencil.weights
    return np.array([math.fsum([lead[i], *(-body[i])])
                     for i in range(len(points))])


def _exact_data(kernel, stencils, err_stencil):
    """``f_k = lam_k(u*)`` by exact functional application."""
    op_j = err_stencil.functional.operator
    aj = err_stencil.anchor
    out = np.empty(len(stencils))
    for k, s in enumerate(stencils):
        op_k = s.functional.operator
        ak = s.anchor
        lead = kernel.action(op_k, op_j, np.linalg.norm(ak - aj))
        body = kernel.action(op_k, IDENTITY, np.linalg.norm(
            err_stencil.points - ak, axis=1)) * err_stencil.weights
        out[k] = math.fsum([float(lead), *(-body)])
    return out


def _row_residuals(A, u, f):
    A = linalg.as_csr(A)
    out = np.empty(A.shape[0])
    for k in range(A.shape[0]):
        lo, hi = A.indptr[k], A.indptr[k + 1]
        out[k] = math.fsum([*(A.data[lo:hi] * u[A.indices[lo:hi]]), -f[k]])
    return out


def worst_case(system, kernel=None, K=2.0):
    """Sharpness construction on a square nonsingular system.

    The worst stability vector is exact for ``p = q = inf``: with ``s`` the
    sign pattern of the largest row of ``A^{-1}``, ``A^{-1} s`` attains
    ``||A^{-1}||_inf``.
    """
    kernel = kernel or system.kernel
    if kernel is None:
        raise InputError('worst case needs a kernel')
    if not K > 1:
        raise InputError('worst case needs K > 1')
    A = linalg.as_csr(system.A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise InputError('worst case needs a square system')
    lu = linalg.sparse_lu(A)
    inv = lu.solve(np.eye(n))
    if not np.all(np.isfinite(inv)):
        raise Singular('stiffness matrix is singular')
    row_sums = np.abs(inv).sum(axis=1)
    i_star = int(np.argmax(row_sums))
    C_S = float(row_sums[i_star])
    s = np.where(inv[i_star] >= 0, 1.0, -1.0)

    cvec = system.consistency(kernel)
    j = int(np.argmax(cvec.values))
    c_j = float(cvec.values[j])
    err_st = system.stencils[j]
    pts = system.nodes.points
    u_star = _representer_values(kernel, err_st, pts)
    f = _exact_data(kernel, system.stencils, err_st)
    r_star = _row_residuals(A, u_star, f)
    cons_res = float(np.max(np.abs(r_star)))

    # align the residual peak with the stability direction
    k0 = int(np.argmax(np.abs(r_star)))
    if np.sign(r_star[k0]) * s[k0] < 0:
        s = -s
    u_S = lu.solve(s)
    u_S = u_S / np.max(np.abs(u_S))
    alpha = (K - 1.0) * cons_res
    u_tilde = u_star + alpha * C_S * u_S

    achieved = admissibility_K(A, u_tilde, f, u_star)
    error = float(np.max(np.abs(u_star - u_tilde)))
    c_norm = cvec.norm(np.inf)
    return WorstCase(u_star, u_tilde, f, u_S, j, C_S, c_norm, c_j, achieved,
                     cons_res, error, (K - 1) * C_S * c_j * c_norm,
                     (K + 1) * C_S * c_j * c_norm)
