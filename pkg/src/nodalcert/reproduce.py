"""Reference experiments as tables of plain rows.

Each table is a list of dicts with a fixed column order, written as CSV with
``%.8e`` floats. Perturbed grids move interior nodes by up to ``h/4`` with a
fixed seed, so every table reruns identically.
"""
import csv
import time

import numpy as np

from nodalcert.certify import worst_case
from nodalcert.consistency import consistency
from nodalcert.errors import InputError
from nodalcert.functionals import Functional
from nodalcert.geometry import gen_chebyshev, gen_grid, gen_perturbed_grid
from nodalcert.kernels import ph_kernel, wm_kernel
from nodalcert.stability import assemble, dirichlet_split, stability
from nodalcert.stencils import five_point_star, optimal_weights

GRID_LEVELS = (0.5, 0.25, 0.125, 0.0625)
PERTURBED_LEVELS = (0.25, 0.125, 0.0625, 0.03125)
CHEBYSHEV_SIDES = (9, 17, 33, 65)
CHEBYSHEV_NOISE = 0.01
CORNER_BOXES = tuple(range(1, 14))


def fivepoint_kernel():
    return wm_kernel(4, 2)


def scattered_kernel():
    return ph_kernel(6, 2)


def _interior_row(system, nodes, h, extra=None):
    parts = dirichlet_split(system)
    c = system.consistency().values[parts.rows]
    c_norm = float(np.max(c)) if c.size else 0.0
    cs = float(stability(parts.B, 'inf'))
    row = {'M': nodes.M, 'h': h, 'C_S': cs, 'c_norm': c_norm,
           'product': cs * c_norm}
    if extra:
        row.update(extra)
    return row


def table_fivepoint(split=False, levels=GRID_LEVELS, threads=1):
    """Five-point star on regular grids, full matrix or interior block."""
    kernel = fivepoint_kernel()
    rows = []
    for h in levels:
        nodes = gen_grid(h)
        system = assemble(nodes, kernel, 'fivepoint', threads=threads)
        if split:
            rows.append(_interior_row(system, nodes, h))
            continue
        c_norm = system.consistency().norm(np.inf)
        cs = float(stability(system.A, 'inf'))
        rows.append({'M': nodes.M, 'h': h, 'C_S': cs, 'c_norm': c_norm,
                     'product': cs * c_norm})
    return rows


def table_perturbed(method, levels=PERTURBED_LEVELS, seed=0, threads=1):
    """Scattered stencils on perturbed grids, interior block ``B``."""
    kernel = scattered_kernel()
    rows = []
    for h in levels:
        nodes = gen_perturbed_grid(h, h / 4, seed)
        system = assemble(nodes, kernel, method, threads=threads)
        sizes = [len(system.stencils[k])
                 for k in np.flatnonzero(~nodes.boundary[system.row_nodes])]
        rows.append(_interior_row(system, nodes, h,
                                  {'mean_support': float(np.mean(sizes))}))
    return rows


def table_chebyshev(sides=CHEBYSHEV_SIDES, noise=CHEBYSHEV_NOISE, seed=0,
                    method='greedy:n=30', threads=1):
    kernel = scattered_kernel()
    rows = []
    for n in sides:
        nodes = gen_chebyshev(n, noise, seed)
        system = assemble(nodes, kernel, method, threads=threads)
        sizes = [len(system.stencils[k])
                 for k in np.flatnonzero(~nodes.boundary[system.row_nodes])]
        row = _interior_row(system, nodes, float('nan'),
                            {'mean_support': float(np.mean(sizes))})
        row.pop('h')
        rows.append({'n_per_side': n, **row})
    return rows


def table_worstcase(h=0.0625, K_values=(2.0,), threads=1):
    kernel = fivepoint_kernel()
    system = assemble(gen_grid(h), kernel, 'fivepoint', threads=threads)
    rows = []
    for K in K_values:
        wc = worst_case(system, kernel, K)
        rows.append({'h': h, 'K': K, 'achieved_K': wc.K, 'C_S': wc.C_S,
                     'c_norm': wc.c_norm, 'error': wc.error,
                     'lower': wc.lower, 'upper': wc.upper,
                     'relative_error': wc.relative_error,
                     'relative_lower': wc.relative_lower,
                     'relative_upper': wc.relative_upper})
    return rows


def corner_points(K):
    """Integer nodes ``(i, j)`` with ``-1 <= i, j <= K``."""
    g = np.arange(-1, K + 1, dtype=float)
    X, Y = np.meshgrid(g, g, indexing='xy')
    return np.column_stack([X.ravel(), Y.ravel()])


def table_corner(boxes=CORNER_BOXES):
    """Optimal Laplacian at the origin from growing boxes of integer nodes.

    The last row is the five-point star for comparison. Both the
    polyharmonic seminorm and the Whittle-Matern norm are reported.
    """
    ph, wm = ph_kernel(4, 2), wm_kernel(4, 2)
    lam = Functional((0.0, 0.0))
    rows = []
    for K in boxes:
        pts = corner_points(K)
        rows.append({'stencil': 'optimal', 'K': K, 'n': len(pts),
                     'c_ph': consistency(ph, optimal_weights(ph, lam, pts)),
                     'c_wm': consistency(wm, optimal_weights(wm, lam, pts))})
    star = five_point_star(1.0)
    rows.append({'stencil': 'fivepoint', 'K': 0, 'n': 5,
                 'c_ph': consistency(ph, star),
                 'c_wm': consistency(wm, star)})
    return rows


TABLES = {
    'fivepoint-full': lambda **kw: table_fivepoint(False, **kw),
    'fivepoint-interior': lambda **kw: table_fivepoint(True, **kw),
    'ph30': lambda seed=0, **kw: table_perturbed('optimal:n=30', seed=seed,
                                                 **kw),
    'ph25': lambda seed=0, **kw: table_perturbed('optimal:n=25', seed=seed,
                                                 **kw),
    'basic25': lambda seed=0, **kw: table_perturbed('basic:n=25', seed=seed,
                                                    **kw),
    'greedy30': lambda seed=0, **kw: table_perturbed('greedy:n=30',
                                                     seed=seed, **kw),
    'chebyshev': lambda seed=0, **kw: table_chebyshev(seed=seed, **kw),
    'worstcase': lambda **kw: table_worstcase(**kw),
    'corner': lambda threads=1: table_corner(),
}

SEEDED = ('ph30', 'ph25', 'basic25', 'greedy30', 'chebyshev')


def run_table(table_id, seed=0, threads=1, timings=False):
    """Rows of a reference table; ``timings`` appends the wall time."""
    if table_id not in TABLES:
        raise InputError('unknown table %r, choose from %s'
                         % (table_id, ', '.join(TABLES)))
    kw = {'threads': threads}
    if table_id in SEEDED:
        kw['seed'] = seed
    t0 = time.perf_counter()
    rows = TABLES[table_id](**kw)
    if timings:
        dt = time.perf_counter() - t0
        for r in rows:
            r['table_seconds'] = dt
    return rows


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return '%.8e' % v
    return str(v)


def write_rows(rows, stream):
    if not rows:
        return
    w = csv.writer(stream, lineterminator='\n')
    cols = list(rows[0])
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r[c]) for c in cols])
