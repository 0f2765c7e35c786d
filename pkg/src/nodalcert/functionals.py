"""Test functionals and their nodal approximations (stencils)."""
import itertools
import json
from dataclasses import dataclass

import numpy as np

from nodalcert.errors import InputError
from nodalcert.kernels import IDENTITY, LAPLACIAN, _OPERATOR_ORDER

OPERATORS = tuple(_OPERATOR_ORDER)


@dataclass(frozen=True)
class Functional:
    """``delta_anchor o operator`` with operator ``'id'`` or ``'lap'``."""
    anchor: tuple
    operator: str = LAPLACIAN

    def __post_init__(self):
        if self.operator not in _OPERATOR_ORDER:
            raise InputError('unknown operator %r' % self.operator)
        object.__setattr__(self, 'anchor',
                           tuple(float(v) for v in self.anchor))

    @property
    def order(self):
        """Differential order ``p`` of the operator."""
        return _OPERATOR_ORDER[self.operator]

    @property
    def d(self):
        return len(self.anchor)

    def on_monomials(self, exponents, scale=1.0):
        """Apply to the monomials ``((x - anchor)/scale)^alpha``.

        Only the value at the anchor matters, so the identity picks out the
        constant and the Laplacian the pure squares.
        """
        exponents = np.asarray(exponents)
        out = np.zeros(len(exponents))
        tot = exponents.sum(axis=1)
        if self.operator == IDENTITY:
            out[tot == 0] = 1.0
        else:
            pure_square = (tot == 2) & (exponents.max(axis=1) == 2)
            out[pure_square] = 2.0 / scale ** 2
        return out


def monomial_exponents(k, d):
    """Exponents of all monomials of total degree ``< k``, degree-ordered."""
    out = []
    for deg in range(k):
        for alpha in itertools.product(range(deg + 1), repeat=d):
            if sum(alpha) == deg:
                out.append(alpha)
    out.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
    return np.array(out, dtype=int).reshape(-1, d)


def poly_dim(k, d):
    """Dimension of the polynomials of order ``k`` (degree ``< k``)."""
    return len(monomial_exponents(k, d))


def monomial_values(points, exponents, center=None, scale=1.0):
    """Matrix ``P[j, i] = ((x_j - center)/scale)^alpha_i``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if center is not None:
        points = points - np.asarray(center, dtype=float)
    points = points / scale
    exponents = np.asarray(exponents)
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


@dataclass(frozen=True)
class Stencil:
    """Nodal approximation ``sum_j weights[j] u(points[j])`` of a functional.

    Attributes
    ----------
    functional : Functional
    support : int array
        Global node indices, ``-1`` where the stencil is not tied to a
        node set.
    weights : float array
    points : (n, d) float array
        Coordinates of the support nodes.
    h : float
        Reference length scale the weights were built for.
    k : int
        Declared order of polynomial exactness (0 if none).
    """
    functional: Functional
    support: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    h: float = 1.0
    k: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        pts = np.array(self.points, dtype=float).reshape(len(w), -1)
        sup = np.array(self.support, dtype=int).reshape(-1)
        if not (len(sup) == len(w) == len(pts)):
            raise InputError('support, weights and points differ in length')
        if not np.all(np.isfinite(w)):
            raise InputError('stencil weights must be finite')
        object.__setattr__(self, 'weights', w)
        object.__setattr__(self, 'points', pts)
        object.__setattr__(self, 'support', sup)

    @property
    def order(self):
        return self.functional.order

    @property
    def anchor(self):
        return np.array(self.functional.anchor)

    def __len__(self):
        return len(self.weights)

    def nnz(self, tol=0.0):
        return int(np.count_nonzero(np.abs(self.weights) > tol))

    def with_support(self, support):
        return Stencil(self.functional, support, self.weights, self.points,
                       self.h, self.k)


def identity_stencil(point, index=-1):
    """Dirichlet row: the value at the node itself."""
    f = Functional(point, IDENTITY)
    return Stencil(f, [index], [1.0], [point], 1.0)


def apply(stencil, values):
    """Evaluate the stencil on nodal ``values``.

    ``values`` is either indexed by the stencil's global support indices
    (a full nodal vector) or a callable evaluated at the support points.
    """
    if callable(values):
        vals = np.asarray([values(p) for p in stencil.points], dtype=float)
    else:
        values = np.asarray(values, dtype=float)
        if np.any(stencil.support < 0):
            raise IndexError('stencil is not attached to node indices')
        vals = values[stencil.support]
    return float(np.dot(stencil.weights, vals))


def support_radius(stencil):
    r = np.max(np.linalg.norm(stencil.points - stencil.anchor, axis=1))
    return float(r) if r > 0 else 1.0


def exactness_defect(stencil, k):
    """Largest polynomial reproduction error over monomials of degree < k.

    Monomials are centered at the anchor and scaled by the support radius,
    so the value is insensitive to where the stencil sits.
    """
    if k < 1:
        raise InputError('exactness order must be >= 1')
    exps = monomial_exponents(k, stencil.functional.d)
    s = support_radius(stencil)
    P = monomial_values(stencil.points, exps, stencil.anchor, s)
    exact = stencil.functional.on_monomials(exps, s)
    return float(np.max(np.abs(exact - stencil.weights @ P)))


def stencil_to_dict(stencil):
    return {
        'anchor': list(stencil.functional.anchor),
        'operator': stencil.functional.operator,
        'support_indices': [int(i) for i in stencil.support],
        'weights': [float(w) for w in stencil.weights],
        'points': [[float(v) for v in p] for p in stencil.points],
        'h': float(stencil.h),
        'k': int(stencil.k),
    }


def stencil_from_dict(rec):
    try:
        f = Functional(rec['anchor'], rec['operator'])
        return Stencil(f, rec['support_indices'], rec['weights'],
                       rec['points'], rec.get('h', 1.0),
                       int(rec.get('k', 0)))
    except KeyError as err:
        raise InputError('stencil record lacks %s' % err) from err


def dumps_stencil(stencil):
    return json.dumps(stencil_to_dict(stencil))


def loads_stencil(text):
    return stencil_from_dict(json.loads(text))
