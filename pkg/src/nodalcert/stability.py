"""Stiffness system assembly and stability constants.

``C_S(A) = sup ||u||_p / ||Au||_q`` is computed three ways: exactly for
``p = q = 2`` through the smallest singular value, as the row-sum norm of
the pseudoinverse (an overestimate for ``p = q = inf`` on non-square
systems), and as a cheap Hager-Higham estimate of ``||A^{-1}||_inf`` for
square sparse systems.
"""
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from nodalcert import linalg
from nodalcert.consistency import consistency_vector
from nodalcert.errors import (CertError, GeometryDegenerate, InputError,
                              NothingToSplit, RankDeficient)
from nodalcert.functionals import Functional, identity_stencil
from nodalcert.geometry import nearest_neighbors
from nodalcert.kernels import IDENTITY
from nodalcert.stencils import (basic_exact_weights, default_exactness,
                                five_point_star, greedy_weights,
                                optimal_weights, parse_method)

logger = logging.getLogger(__name__)

SVD2 = 'svd2'
PINV_INF = 'pinv_inf'
CONDEST_INF = 'condest_inf'


@dataclass
class StiffnessSystem:
    """Generalized stiffness matrix with one stencil per row.

    Attributes
    ----------
    A : scipy.sparse.csr_matrix
        ``N x M`` matrix of stencil weights.
    stencils : list of Stencil
        Row ``k`` approximates ``stencils[k].functional``.
    row_nodes : int array
        Node a row is anchored at, ``-1`` if none.
    nodes : NodeSet
    kernel : Kernel or None
        Kernel used to build or assess the stencils.
    method : str
    """
    A: sp.csr_matrix
    stencils: list
    row_nodes: np.ndarray
    nodes: object
    kernel: object = None
    method: str = ''
    _cvec: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.A.shape

    @property
    def functionals(self):
        return [s.functional for s in self.stencils]

    def is_dirichlet_row(self, k):
        s = self.stencils[k]
        node = self.row_nodes[k]
        return (s.functional.operator == IDENTITY and node >= 0
                and self.nodes.boundary[node] and len(s) == 1
                and s.support[0] == node)

    def consistency(self, kernel=None, threads=1):
        kernel = kernel or self.kernel
        if kernel is None:
            raise InputError('a kernel is needed to evaluate consistency')
        key = kernel.spec
        if key not in self._cvec:
            self._cvec[key] = consistency_vector(kernel, self.stencils,
                                                 threads)
        return self._cvec[key]

    def bandwidth(self):
        """Largest number of nonzeros in a row."""
        return int(np.diff(self.A.indptr).max()) if self.A.shape[0] else 0


def _fivepoint_at(nodes, i):
    nbrs = nearest_neighbors(nodes, nodes.points[i], 5)
    center = nodes.points[i]
    off = nodes.points[nbrs] - center
    dist = np.linalg.norm(off, axis=1)
    h = dist[1:].max()
    if h <= 0:
        raise GeometryDegenerate('coincident neighbors')
    want = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], float) * h
    order = []
    for w in want:
        hit = np.flatnonzero(np.linalg.norm(off - w, axis=1) <= 1e-9 * h)
        if hit.size != 1:
            raise GeometryDegenerate(
                'no axis-aligned five-point cross around node %d' % i)
        order.append(nbrs[hit[0]])
    order.append(i)
    return five_point_star(h, center, support=order)


def _build_row(nodes, i, kernel, spec, k):
    x = nodes.points[i]
    if nodes.boundary[i]:
        return identity_stencil(x, i)
    if spec.name == 'fivepoint':
        return _fivepoint_at(nodes, i)
    nbrs = nearest_neighbors(nodes, x, spec.n)
    lam = Functional(x)
    if spec.name == 'optimal':
        return optimal_weights(kernel, lam, nodes.points[nbrs], nbrs, k)
    if spec.name == 'greedy':
        return greedy_weights(kernel, lam, nodes.points[nbrs], spec.n,
                              nbrs, k)
    if spec.name == 'basic':
        kk = k if k is not None else default_exactness(kernel)
        return basic_exact_weights(lam, nodes.points[nbrs], kk, nbrs)
    raise InputError('unknown method %r' % spec.name)


def assemble(nodes, kernel, method, n_neighbors=None, k=None, threads=1):
    """Dirichlet Laplacian system: Laplacian stencils at interior nodes,
    identity rows at boundary nodes.

    Parameters
    ----------
    nodes : NodeSet
    kernel : Kernel
        Used to build kernel-based stencils and kept for consistency
        evaluation.
    method : str or MethodSpec
        ``fivepoint``, ``optimal:n=..``, ``basic:n=..`` or ``greedy:n=..``.
    n_neighbors : int, optional
        Overrides the neighbor count in ``method``.
    k : int, optional
        Exactness order, defaults to ``floor(m - d/2) + 1``.
    threads : int
        Rows are built concurrently when larger than one.
    """
    spec = parse_method(method)
    if n_neighbors is not None and spec.name != 'fivepoint':
        spec = type(spec)(spec.name, int(n_neighbors))
    if spec.name != 'fivepoint' and kernel is None:
        raise InputError('method %s needs a kernel' % spec)

    def row(i):
        try:
            return _build_row(nodes, i, kernel, spec, k)
        except CertError as err:
            raise type(err)('node %d: %s' % (i, err)) from err

    idx = range(nodes.M)
    if threads and threads > 1 and nodes.M > 64:
        with ThreadPoolExecutor(threads) as ex:
            stencils = list(ex.map(row, idx, chunksize=16))
    else:
        stencils = [row(i) for i in idx]

    indptr = [0]
    indices, data = [], []
    for s in stencils:
        o = np.argsort(s.support, kind='stable')
        indices.extend(s.support[o])
        data.extend(s.weights[o])
        indptr.append(len(indices))
    A = sp.csr_matrix((np.asarray(data, float), np.asarray(indices, int),
                       np.asarray(indptr, int)), shape=(len(stencils),
                                                        nodes.M))
    A = linalg.as_csr(A)
    return StiffnessSystem(A, stencils, np.arange(nodes.M), nodes, kernel,
                           str(spec))


@dataclass(frozen=True)
class StabilityEstimate:
    value: float
    method: str
    norm: str

    def __float__(self):
        return float(self.value)


def stability_svd(A):
    """``C_S`` for ``p = q = 2``: one over the smallest singular value."""
    _, s, _ = linalg.svd(linalg.as_dense(A))
    if A.shape[0] < A.shape[1] or s[-1] <= linalg.RANK_TOL * s[0]:
        raise RankDeficient('matrix has no full column rank')
    return StabilityEstimate(1.0 / s[-1], SVD2, '2')


def stability_pinv_inf(A):
    """Row-sum norm of the pseudoinverse, an upper bound for ``C_S``."""
    P = linalg.pseudoinverse(linalg.as_dense(A))
    return StabilityEstimate(linalg.row_sum_norm(P), PINV_INF, 'inf')


def stability_condest(A):
    """``condest(A') / ||A||_inf``, an estimate of ``||A^{-1}||_inf``.

    Non-square matrices fall back to :func:`stability_pinv_inf`.
    """
    if A.shape[0] != A.shape[1]:
        warnings.warn('condest needs a square matrix, falling back to the '
                      'dense pseudoinverse', RuntimeWarning, stacklevel=2)
        return stability_pinv_inf(A)
    A = linalg.as_csr(A)
    inv_norm = linalg.inverse_infnorm_estimate(A)
    # condest(A') = ||A'||_1 * est(||A'^{-1}||_1) and ||A'||_1 = ||A||_inf
    norm_a = linalg.row_sum_norm(A)
    value = norm_a * inv_norm / norm_a
    return StabilityEstimate(value, CONDEST_INF, 'inf')


def stability(A, norm='inf', method=None):
    """Dispatch on the norm: ``'2'`` uses the SVD, ``'inf'`` condest for
    square and the pseudoinverse for rectangular matrices."""
    norm = str(norm)
    if method is None:
        if norm == '2':
            method = SVD2
        else:
            method = CONDEST_INF if A.shape[0] == A.shape[1] else PINV_INF
    fn = {SVD2: stability_svd, PINV_INF: stability_pinv_inf,
          CONDEST_INF: stability_condest}.get(method)
    if fn is None:
        raise InputError('unknown stability method %r' % method)
    return fn(A)


@dataclass(frozen=True)
class DirichletSplit:
    """``B u_I = f_I - C g_B`` with interior rows and columns split off."""
    B: sp.csr_matrix
    C: sp.csr_matrix
    rows: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray


def dirichlet_split(system):
    """Drop the identity boundary rows and split columns by node type."""
    nodes = system.nodes
    bnd = nodes.boundary_indices
    if bnd.size == 0:
        raise NothingToSplit('node set has no boundary nodes')
    dirichlet = np.array([system.is_dirichlet_row(k)
                          for k in range(system.A.shape[0])])
    covered = np.zeros(nodes.M, dtype=bool)
    covered[system.row_nodes[dirichlet]] = True
    if not np.all(covered[bnd]):
        raise NothingToSplit('not every boundary node has a Dirichlet row')
    rows = np.flatnonzero(~dirichlet)
    inner = nodes.interior
    A = system.A
    B = A[rows][:, inner]
    C = A[rows][:, bnd]
    return DirichletSplit(linalg.as_csr(B), linalg.as_csr(C), rows, inner,
                          bnd)


def write_matrix_market(A, target):
    """Write ``A`` in MatrixMarket coordinate format."""
    scipy.io.mmwrite(target, sp.coo_matrix(A), precision=17)
