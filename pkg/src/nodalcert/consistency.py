"""Worst-case consistency errors via the kernel quadratic form.

For a functional ``lam`` and its nodal approximation with weights ``a`` the
squared native-space norm of the error functional is::

    Q^2 = lam^x lam^y K - 2 sum_j a_j lam^x K(x, x_j)
          + sum_jk a_j a_k K(x_j, x_k)

Polyharmonic kernels are evaluated on the unit-scaled stencil and mapped
back with ``Q(h) = h^(m - d/2 - p) Q(1)``, which avoids cancellation.
Whittle-Matern kernels are evaluated directly with exactly rounded
summation (``math.fsum``).
"""
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from nodalcert.errors import ExactnessViolated, NegativeQuadraticForm
from nodalcert.functionals import exactness_defect, monomial_exponents
from nodalcert.kernels import IDENTITY, POLYHARMONIC
from nodalcert.stencils import normalize_to_unit

#: negative Q^2 within this fraction of the largest term is clamped to 0
CANCELLATION_GUARD = 1e-8

#: relative tolerance of the polynomial exactness check
EXACTNESS_TOL = 1e-8


def _terms(kernel, op, points, weights, anchor):
    """All summands of ``Q^2`` as a flat array."""
    r0 = np.linalg.norm(points - anchor, axis=1)
    D = np.linalg.norm(points[:, None] - points[None], axis=2)
    lamlam = np.atleast_1d(kernel.action(op, op, 0.0))
    cross = -2.0 * weights * kernel.action(op, IDENTITY, r0)
    gram = np.outer(weights, weights) * kernel.action(IDENTITY, IDENTITY, D)
    return np.concatenate([lamlam, cross, gram.ravel()])


def quadratic_form_raw(kernel, functional, points, weights):
    """Directly evaluated ``Q^2`` without guard, scaling or checks."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    anchor = np.asarray(functional.anchor, dtype=float)
    return math.fsum(_terms(kernel, functional.operator, points, weights,
                            anchor))


def _guarded(terms):
    q2 = math.fsum(terms)
    if q2 < 0.0:
        lead = float(np.max(np.abs(terms))) if len(terms) else 0.0
        if -q2 <= CANCELLATION_GUARD * lead:
            return 0.0
        raise NegativeQuadraticForm(
            'Q^2 = %.3e is negative beyond the cancellation guard '
            '(largest term %.3e)' % (q2, lead))
    return q2


def _is_reproduction(stencil):
    # a point evaluation approximated by itself
    return (stencil.functional.operator == IDENTITY and len(stencil) == 1
            and stencil.weights[0] == 1.0
            and np.array_equal(stencil.points[0], stencil.anchor))


def check_exactness(kernel, stencil):
    """Raise unless a polyharmonic stencil reproduces the nullspace."""
    k = kernel.cpd_order
    if k < 1 or _is_reproduction(stencil):
        return
    defect = exactness_defect(stencil, k)
    s = max(np.max(np.linalg.norm(stencil.points - stencil.anchor,
                                  axis=1)), 0.0) or 1.0
    lam_scale = np.max(np.abs(stencil.functional.on_monomials(
        monomial_exponents(k, stencil.functional.d), s)))
    tol = EXACTNESS_TOL * max(np.sum(np.abs(stencil.weights)), lam_scale)
    if defect > tol:
        raise ExactnessViolated(
            'stencil at %s is not exact of order %d (defect %.3e), '
            'Q is undefined for %s' % (stencil.functional.anchor, k, defect,
                                       kernel.spec))


def quadratic_form(kernel, functional, stencil=None):
    """``Q^2`` of the error functional ``lam - stencil``.

    Can be called as ``quadratic_form(kernel, stencil)`` or
    ``quadratic_form(kernel, functional, stencil)``.

    Raises
    ------
    ExactnessViolated
        For polyharmonic kernels when the stencil is not exact on the
        polynomials the seminorm annihilates.
    InsufficientSmoothness
        When the kernel cannot carry the functional.
    NegativeQuadraticForm
        When cancellation drives ``Q^2`` below the guard.
    """
    if stencil is None:
        stencil = functional
    functional = stencil.functional
    kernel.check_functional(functional.operator)
    if _is_reproduction(stencil):
        return 0.0
    anchor = np.asarray(functional.anchor, dtype=float)
    if kernel.family == POLYHARMONIC:
        check_exactness(kernel, stencil)
        if len(stencil) >= 2:
            unit, H = normalize_to_unit(stencil.points, anchor)
        else:
            unit, H = stencil.points - anchor, 1.0
        w_unit = stencil.weights / H ** functional.order
        q2_unit = _guarded(_terms(kernel, functional.operator, unit, w_unit,
                                  np.zeros_like(anchor)))
        expo = 2 * kernel.m - kernel.d - 2 * functional.order
        return q2_unit * (1.0 / H) ** expo
    return _guarded(_terms(kernel, functional.operator, stencil.points,
                           stencil.weights, anchor))


def consistency(kernel, stencil):
    """``c(lam) = sqrt(Q^2)``."""
    return math.sqrt(quadratic_form(kernel, stencil))


def scaled_consistency(q_unit, h, m, d, p):
    """Consistency at scale ``h`` from its unit-scale value.

    The exponent ``m - d/2 - p`` applies to ``Q`` (twice that on ``Q^2``).
    """
    return h ** (m - d / 2 - p) * q_unit


@dataclass(frozen=True)
class ConsistencyVector:
    values: np.ndarray
    kernel: str

    def norm(self, q=np.inf):
        if len(self.values) == 0:
            return 0.0
        return float(np.linalg.norm(self.values, ord=q))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def consistency_vector(kernel, stencils, threads=1):
    """Elementwise ``c(lam_k)``; Dirichlet rows come out as exact zeros."""
    def one(s):
        if _is_reproduction(s):
            return 0.0
        return consistency(kernel, s)

    stencils = list(stencils)
    if threads and threads > 1 and len(stencils) > 64:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(one, stencils, chunksize=32))
    else:
        vals = [one(s) for s in stencils]
    return ConsistencyVector(np.asarray(vals, dtype=float), kernel.spec)


def consistency_field(system, kernel=None, cvec=None):
    """Per-node consistency values for node-anchored rows.

    Returns an ``(n, 4)`` array with columns ``node_index, x, y, c``,
    ordered by row.
    """
    if cvec is None:
        cvec = system.consistency(kernel)
    rows = []
    for k, s in enumerate(system.stencils):
        node = system.row_nodes[k]
        if node < 0:
            continue
        x, y = system.nodes.points[node][:2]
        rows.append((node, x, y, cvec.values[k]))
    return np.array(rows, dtype=float).reshape(-1, 4)


def write_field_csv(field, stream):
    w = csv.writer(stream, lineterminator='\n')
    w.writerow(['node_index', 'x', 'y', 'c_value'])
    for node, x, y, c in field:
        w.writerow([int(node), '%.8e' % x, '%.8e' % y, '%.8e' % c])
