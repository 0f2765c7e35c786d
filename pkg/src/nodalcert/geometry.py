"""Node sets on the square [-1, 1]^2.

Generators for regular, perturbed and Chebyshev grids, nearest-neighbor
queries and a probe-lattice fill distance. Random perturbations use
``numpy.random.Generator`` backed by PCG64 so tables rerun identically for a
fixed seed.
"""
import csv
import hashlib
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from nodalcert.errors import InputError, InvalidSpacing, TooFewNodes

BOUNDARY_TOL = 1e-12

#: above this many nodes neighbor queries go through a kd-tree
BRUTE_FORCE_LIMIT = 2000


def make_rng(seed):
    """Seeded PCG64 generator used by every randomized routine."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class NodeSet:
    """Scattered nodes with boundary tags.

    Attributes
    ----------
    points : (M, d) float array
    boundary : (M,) bool array
    """
    points: np.ndarray
    boundary: np.ndarray
    _tree: object = field(default=None, init=False, repr=False,
                          compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise InputError('points must be an (M, d) array')
        bnd = np.array(self.boundary, dtype=bool).reshape(-1)
        if bnd.shape[0] != pts.shape[0]:
            raise InputError('boundary flags do not match the node count')
        pts.flags.writeable = False
        bnd.flags.writeable = False
        object.__setattr__(self, 'points', pts)
        object.__setattr__(self, 'boundary', bnd)

    @property
    def M(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_indices(self):
        return np.flatnonzero(self.boundary)

    @property
    def M_I(self):
        return int(np.count_nonzero(~self.boundary))

    @property
    def M_B(self):
        return int(np.count_nonzero(self.boundary))

    def tree(self):
        if self._tree is None:
            object.__setattr__(self, '_tree', cKDTree(self.points))
        return self._tree

    def digest(self):
        """SHA-256 of the coordinates and flags, for provenance records."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.points).tobytes())
        h.update(np.ascontiguousarray(self.boundary).tobytes())
        return h.hexdigest()

    def min_separation(self):
        if self.M < 2:
            return np.inf
        dist, _ = self.tree().query(self.points, k=2)
        return float(dist[:, 1].min())


def on_square_boundary(points, tol=BOUNDARY_TOL):
    return np.any(np.abs(np.abs(points) - 1.0) <= tol, axis=1)


def _grid_count(h):
    if not h > 0:
        raise InvalidSpacing('h must be positive, got %r' % h)
    n = 2.0 / h
    k = int(round(n))
    if h <= 0 or abs(n - k) > 1e-9 * max(1.0, n):
        raise InvalidSpacing('2/h must be an integer, got h=%r' % h)
    return k + 1


def _tensor(coords):
    # x varies fastest
    X, Y = np.meshgrid(coords, coords, indexing='xy')
    return np.column_stack([X.ravel(), Y.ravel()])


def gen_grid(h):
    """Regular grid of spacing ``h`` on [-1, 1]^2 with (1 + 2/h)^2 nodes."""
    n = _grid_count(h)
    coords = np.linspace(-1.0, 1.0, n)
    pts = _tensor(coords)
    return NodeSet(pts, on_square_boundary(pts))


def _perturb(nodes, amplitude, seed, clip):
    pts = np.array(nodes.points)
    inner = nodes.interior
    if amplitude > 0.0 and inner.size:
        rng = make_rng(seed)
        pts[inner] += rng.uniform(-amplitude, amplitude,
                                  size=(inner.size, nodes.d))
        if clip:
            lim = 1.0 - 1e-9
            pts[inner] = np.clip(pts[inner], -lim, lim)
    return NodeSet(pts, nodes.boundary)


def gen_perturbed_grid(h, noise_amplitude, seed=0):
    """Grid of spacing ``h`` with interior nodes shifted by uniform noise.

    Each interior coordinate moves by an independent draw from
    ``[-noise_amplitude, noise_amplitude]``; boundary nodes stay put.
    """
    if not 0.0 <= noise_amplitude < h / 2:
        raise InputError('noise amplitude must lie in [0, h/2)')
    return _perturb(gen_grid(h), noise_amplitude, seed, clip=False)


def gen_chebyshev(n_per_side, noise_amplitude=0.0, seed=0):
    """Tensor grid of Chebyshev points ``cos(k pi / (n - 1))`` per axis.

    Interior nodes get uniform noise of the given amplitude and are clipped
    back into the open square.
    """
    if n_per_side < 2:
        raise InputError('need at least 2 Chebyshev points per side')
    k = np.arange(n_per_side)
    coords = np.sort(np.cos(k * np.pi / (n_per_side - 1)))
    coords[0], coords[-1] = -1.0, 1.0
    pts = _tensor(coords)
    base = NodeSet(pts, on_square_boundary(pts))
    return _perturb(base, noise_amplitude, seed, clip=True)


def nearest_neighbors(nodes, center, n):
    """Indices of the ``n`` nodes closest to ``center``.

    Sorted by ascending Euclidean distance, ties broken by node index.
    """
    if n > nodes.M:
        raise TooFewNodes('asked for %d neighbors among %d nodes'
                          % (n, nodes.M))
    center = np.asarray(center, dtype=float)
    if nodes.M <= BRUTE_FORCE_LIMIT:
        cand = np.arange(nodes.M)
    else:
        tree = nodes.tree()
        dist, _ = tree.query(center, k=n)
        radius = np.atleast_1d(dist)[-1]
        # widen to catch every node tied with the n-th one
        cand = np.array(sorted(tree.query_ball_point(
            center, radius * (1 + 1e-12) + 1e-15)))
    d2 = np.sum((nodes.points[cand] - center) ** 2, axis=1)
    order = np.lexsort((cand, d2))
    return cand[order[:n]]


def fill_distance(nodes, probes_per_axis=200):
    """Fill distance on [-1, 1]^d, approximated on a uniform probe lattice."""
    if nodes.M == 0:
        raise InputError('empty node set')
    axis = np.linspace(-1.0, 1.0, probes_per_axis)
    grids = np.meshgrid(*([axis] * nodes.d), indexing='ij')
    probes = np.column_stack([g.ravel() for g in grids])
    dist, _ = nodes.tree().query(probes)
    return float(dist.max())


def write_csv(nodes, stream):
    """Write ``x,y,is_boundary`` rows with shortest round-trip floats."""
    if nodes.d != 2:
        raise InputError('node CSV files hold 2-D nodes only')
    w = csv.writer(stream, lineterminator='\n')
    w.writerow(['x', 'y', 'is_boundary'])
    for (x, y), b in zip(nodes.points, nodes.boundary):
        w.writerow([repr(float(x)), repr(float(y)), int(b)])


def read_csv(stream):
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    r = csv.DictReader(stream)
    if r.fieldnames is None or [f.strip() for f in r.fieldnames] != \
            ['x', 'y', 'is_boundary']:
        raise InputError('node file needs header x,y,is_boundary')
    pts, flags = [], []
    for row in r:
        try:
            pts.append((float(row['x']), float(row['y'])))
            flags.append(row['is_boundary'].strip().lower()
                         in ('1', 'true', 'yes'))
        except (TypeError, ValueError) as err:
            raise InputError('bad node row %r' % row) from err
    return NodeSet(np.array(pts, dtype=float).reshape(-1, 2), flags)
