"""Stencil weight computation.

Five-point star, kernel-optimal weights under polynomial exactness
constraints, minimal-support basic solutions of the exactness system and a
greedy support selection. Polyharmonic computations run on nodes blown up
to unit mean pairwise distance and are mapped back with the exact scaling
law ``a(h) = h^(-p) a(1)``.
"""
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from nodalcert import linalg
from nodalcert.errors import (GeometryDegenerate, InputError, NoSolution,
                              TooFewNodes)
from nodalcert.functionals import (Functional, Stencil, monomial_exponents,
                                   monomial_values, poly_dim)
from nodalcert.kernels import IDENTITY, POLYHARMONIC

#: greedy selection stops once adding a node lowers Q^2 by less than this
GREEDY_THRESHOLD = 0.05

_CONSTRAINT_RANK_TOL = 1e-10


def five_point_star(h, center=(0.0, 0.0), support=None):
    """Classical five-point Laplacian, weights ``(1, 1, 1, 1, -4) / h^2``.

    Support order is east, west, north, south, center.
    """
    if h <= 0:
        raise InputError('h must be positive')
    c = np.asarray(center, dtype=float)
    offsets = np.array([[h, 0], [-h, 0], [0, h], [0, -h], [0, 0]], float)
    w = np.array([1.0, 1.0, 1.0, 1.0, -4.0]) / h ** 2
    if support is None:
        support = -np.ones(5, dtype=int)
    return Stencil(Functional(c), support, w, c + offsets, h, k=4)


def normalize_to_unit(points, anchor=None):
    """Shift to ``anchor`` and blow up to unit mean pairwise distance.

    Returns
    -------
    scaled : (n, d) array
        ``H * (points - anchor)``.
    H : float
        ``1 / mean pairwise distance``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) < 2:
        raise TooFewNodes('need at least two nodes to normalize')
    mean = pdist(points).mean()
    if not mean > 0:
        raise GeometryDegenerate('all nodes coincide')
    if anchor is None:
        anchor = points.mean(axis=0)
    H = 1.0 / mean
    return H * (points - np.asarray(anchor, dtype=float)), H


def rescale(stencil, h):
    """Map a stencil built at scale 1 to scale ``h``.

    Weights pick up ``h^(-p)`` and support points move to
    ``anchor + h (x - anchor)``.
    """
    if h <= 0:
        raise InputError('scale must be positive')
    a = stencil.anchor
    pts = a + h * (stencil.points - a)
    w = stencil.weights * h ** (-stencil.order)
    return Stencil(stencil.functional, stencil.support, w, pts,
                   stencil.h * h, stencil.k)


@dataclass
class _SaddleProblem:
    """Kernel/polynomial data for one functional on centered nodes.

    Everything is precomputed for the full candidate set so the greedy
    search only slices.
    """
    kernel: object
    functional: Functional
    points: np.ndarray  # centered (and for ph, unit scaled)
    k: int

    def __post_init__(self):
        op = self.functional.operator
        D = np.linalg.norm(self.points[:, None] - self.points[None], axis=2)
        self.Phi = self.kernel.action(IDENTITY, IDENTITY, D)
        r0 = np.linalg.norm(self.points, axis=1)
        self.rhs = self.kernel.action(op, IDENTITY, r0)
        self.lamlam = float(self.kernel.action(op, op, 0.0))
        if self.k > 0:
            exps = monomial_exponents(self.k, self.points.shape[1])
            self.P = monomial_values(self.points, exps)
            self.lam_p = self.functional.on_monomials(exps)
        else:
            self.P = np.zeros((len(self.points), 0))
            self.lam_p = np.zeros(0)

    def solve(self, idx):
        """Optimal weights on the subset ``idx`` and their ``Q^2``.

        Exactness constraints that are rank deficient but consistent (the
        five-point cross for cubics, say) are reduced to an orthonormal
        basis of their row space before the saddle point solve.
        """
        idx = np.asarray(idx)
        n = len(idx)
        Phi = self.Phi[np.ix_(idx, idx)]
        rhs = self.rhs[idx]
        if self.k > 0:
            P = self.P[idx]
            U, s, Vt = np.linalg.svd(P, full_matrices=False)
            r = int(np.sum(s > _CONSTRAINT_RANK_TOL * s[0])) if s.size else 0
            Vr = Vt[:r]
            b = self.lam_p
            gap = np.linalg.norm(b - Vr.T @ (Vr @ b))
            if gap > 1e-9 * max(1.0, np.linalg.norm(b)):
                if n < len(b):
                    raise TooFewNodes(
                        '%d nodes cannot carry exactness of order %d'
                        % (n, self.k))
                raise GeometryDegenerate(
                    'nodes are not unisolvent for exactness order %d '
                    '(constraint gap %.2e)' % (self.k, gap))
            Ur = U[:, :r]
            c = (Vr @ b) / s[:r]
        else:
            r = 0
            Ur = np.zeros((n, 0))
            c = np.zeros(0)
        S = np.zeros((n + r, n + r))
        S[:n, :n] = Phi
        S[:n, n:] = Ur
        S[n:, :n] = Ur.T
        full_rhs = np.concatenate([rhs, c])
        try:
            sol = np.linalg.solve(S, full_rhs)
        except np.linalg.LinAlgError as err:
            raise GeometryDegenerate('singular saddle point system') from err
        res = np.linalg.norm(S @ sol - full_rhs)
        if not np.all(np.isfinite(sol)) or \
                res > 1e-6 * max(1.0, np.linalg.norm(full_rhs)):
            raise GeometryDegenerate(
                'saddle point system is numerically singular '
                '(residual %.2e)' % res)
        a, beta = sol[:n], sol[n:]
        q2 = self.lamlam - a @ rhs - beta @ c
        return a, q2


def _prepare(kernel, functional, points, k):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    anchor = np.asarray(functional.anchor, dtype=float)
    if kernel.family == POLYHARMONIC and len(points) >= 2:
        unit, H = normalize_to_unit(points, anchor)
    else:
        unit, H = points - anchor, 1.0
    if k is None:
        k = default_exactness(kernel)
    kernel.check_functional(functional.operator)
    return _SaddleProblem(kernel, functional, unit, int(k)), H, int(k)


def _support_or_default(support, n):
    if support is None:
        return -np.ones(n, dtype=int)
    support = np.asarray(support, dtype=int)
    if len(support) != n:
        raise InputError('support length does not match the node count')
    return support


def optimal_weights(kernel, functional, points, support=None, k=None):
    """Weights minimizing the kernel quadratic form ``Q^2``.

    Parameters
    ----------
    kernel : Kernel
    functional : Functional
    points : (n, d) array
    support : int array, optional
        Global indices of ``points``.
    k : int, optional
        Order of polynomial exactness imposed, defaults to
        ``floor(m - d/2) + 1``. Polyharmonic kernels need at least that;
        Whittle-Matern kernels accept any order including 0.
    """
    prob, H, k = _prepare(kernel, functional, points, k)
    a, _ = prob.solve(np.arange(len(prob.points)))
    p = functional.order
    return Stencil(functional, _support_or_default(support, len(a)),
                   a * H ** p, points, 1.0 / H, k)


def optimal_q2_unit(kernel, functional, points, k=None):
    """``Q^2`` of the optimal weights at unit scale (saddle byproduct)."""
    prob, H, k = _prepare(kernel, functional, points, k)
    return prob.solve(np.arange(len(prob.points)))[1], H


def basic_exact_weights(functional, points, k, support=None):
    """Minimal support weights exact on polynomials of order ``k``.

    Solves the underdetermined exactness system with a column-pivoted
    basic solution; zero-weight nodes are dropped from the stencil.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    support = _support_or_default(support, len(points))
    anchor = np.asarray(functional.anchor, dtype=float)
    if len(points) >= 2:
        unit, H = normalize_to_unit(points, anchor)
    else:
        unit, H = points - anchor, 1.0
    exps = monomial_exponents(k, points.shape[1])
    P = monomial_values(unit, exps)
    b = functional.on_monomials(exps)
    try:
        a = linalg.basic_solution(P.T, b)
    except NoSolution as err:
        raise NoSolution('exactness system of order %d has no solution: %s'
                         % (k, err)) from err
    keep = np.flatnonzero(a != 0.0)
    p = functional.order
    return Stencil(functional, support[keep], a[keep] * H ** p, points[keep],
                   1.0 / H, k)


def _unisolvent_seed(prob, order):
    """Nearest-first nodes that raise the rank of the exactness matrix."""
    q = prob.P.shape[1]
    seed = []
    rank = 0
    for i in order:
        if rank == q:
            break
        trial = seed + [i]
        new_rank = np.linalg.matrix_rank(prob.P[trial])
        if new_rank > rank:
            seed, rank = trial, new_rank
    return seed


def greedy_weights(kernel, functional, points, n_max, support=None, k=None,
                   threshold=GREEDY_THRESHOLD):
    """Kernel-greedy support selection among the first ``n_max`` points.

    ``points`` should be sorted nearest-first. The search starts from the
    nearest-first unisolvent subset and keeps adding the candidate with the
    largest ``Q^2`` reduction until the relative gain drops below
    ``threshold`` or ``n_max`` nodes are used.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))[:n_max]
    support = _support_or_default(
        None if support is None else np.asarray(support)[:n_max],
        len(points))
    prob, H, k = _prepare(kernel, functional, points, k)
    n = len(points)
    order = list(range(n))
    if k > 0:
        sel = _unisolvent_seed(prob, order)
    else:
        sel = order[:1]
    rest = [i for i in order if i not in sel]

    # grow nearest-first until the constraints become consistent
    while True:
        try:
            a, q2 = prob.solve(sel)
            break
        except (GeometryDegenerate, TooFewNodes):
            if not rest:
                raise
            sel.append(rest.pop(0))

    while rest and len(sel) < n_max:
        best = None
        for i in rest:
            try:
                a_i, q2_i = prob.solve(sel + [i])
            except (GeometryDegenerate, TooFewNodes):
                continue
            if best is None or q2_i < best[2]:
                best = (i, a_i, q2_i)
        if best is None:
            break
        gain = (q2 - best[2]) / q2 if q2 > 0 else 0.0
        if gain < threshold:
            break
        sel.append(best[0])
        rest.remove(best[0])
        a, q2 = best[1], best[2]

    sel = np.asarray(sel)
    p = functional.order
    return Stencil(functional, support[sel], a * H ** p, points[sel],
                   1.0 / H, k)


@dataclass(frozen=True)
class MethodSpec:
    name: str
    n: int = 0

    def __str__(self):
        return self.name if self.name == 'fivepoint' else \
            '%s:n=%d' % (self.name, self.n)


_METHOD_RE = re.compile(r'^\s*(optimal|basic|greedy)\s*:\s*n\s*=\s*(\d+)\s*$')


def parse_method(spec):
    """Parse ``fivepoint`` | ``optimal:n=<k>`` | ``basic:n=<k>`` |
    ``greedy:n=<max>``."""
    if isinstance(spec, MethodSpec):
        return spec
    if spec.strip() == 'fivepoint':
        return MethodSpec('fivepoint', 5)
    match = _METHOD_RE.match(spec)
    if not match:
        raise InputError('bad method spec %r' % spec)
    n = int(match.group(2))
    if n < 1:
        raise InputError('neighbor count must be positive')
    return MethodSpec(match.group(1), n)


def default_exactness(kernel):
    """Order ``floor(m - d/2) + 1`` tied to the kernel smoothness."""
    return int(math.floor(kernel.m - kernel.d / 2)) + 1


__all__ = ['five_point_star', 'optimal_weights', 'basic_exact_weights',
           'greedy_weights', 'rescale', 'normalize_to_unit', 'parse_method',
           'MethodSpec', 'poly_dim']
