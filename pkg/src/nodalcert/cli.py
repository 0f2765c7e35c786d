"""Command line interface.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""
import argparse
import contextlib
import json
import logging
import os
import sys

import numpy as np

from nodalcert import __version__
from nodalcert.certify import certify_system, worst_case
from nodalcert.consistency import consistency_field, write_field_csv
from nodalcert.errors import CertError, InputError, NumericalError
from nodalcert.functionals import stencil_to_dict
from nodalcert.geometry import (gen_chebyshev, gen_grid, gen_perturbed_grid,
                                read_csv, write_csv)
from nodalcert.kernels import parse_kernel
from nodalcert.reproduce import TABLES, run_table, write_rows
from nodalcert.stability import (assemble, dirichlet_split, stability,
                                 write_matrix_market)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger('nodalcert')


@contextlib.contextmanager
def _output(path, mode='w'):
    if path in (None, '-'):
        yield sys.stdout
    else:
        with open(path, mode, newline='') as fh:
            yield fh


def _dump_json(obj, path):
    with _output(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write('\n')


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError('not serializable: %r' % type(v))


def _load_nodes(args):
    if args.nodes:
        try:
            with open(args.nodes, newline='') as fh:
                return read_csv(fh)
        except OSError as err:
            raise InputError('cannot read %s: %s' % (args.nodes, err))
    if args.h is None:
        raise InputError('give a node file with --nodes or a spacing --h')
    if args.amp:
        return gen_perturbed_grid(args.h, args.amp, args.seed)
    return gen_grid(args.h)


def _system(args):
    nodes = _load_nodes(args)
    kernel = parse_kernel(args.kernel)
    log.info('assembling %s on %d nodes', args.method, nodes.M)
    return assemble(nodes, kernel, args.method, n_neighbors=args.neighbors,
                    threads=args.threads)


def cmd_nodes_gen(args):
    if args.kind == 'grid':
        nodes = gen_grid(args.h)
    elif args.kind == 'perturbed':
        amp = args.amp if args.amp is not None else args.h / 4
        nodes = gen_perturbed_grid(args.h, amp, args.seed)
    else:
        nodes = gen_chebyshev(args.n, args.amp or 0.0, args.seed)
    with _output(args.out) as fh:
        write_csv(nodes, fh)


def cmd_assemble(args):
    system = _system(args)
    if args.out in (None, '-'):
        raise InputError('assemble needs --out for the MatrixMarket file')
    write_matrix_market(system.A, args.out)
    if args.stencils:
        with _output(args.stencils) as fh:
            for s in system.stencils:
                fh.write(json.dumps(stencil_to_dict(s)) + '\n')
    _dump_json({'shape': list(system.shape), 'nnz': int(system.A.nnz),
                'bandwidth': system.bandwidth(), 'method': system.method,
                'kernel': system.kernel.spec,
                'nodes_digest': system.nodes.digest()}, None)


def cmd_consistency(args):
    system = _system(args)
    kernel = parse_kernel(args.assess_kernel) if args.assess_kernel \
        else system.kernel
    cvec = system.consistency(kernel, threads=args.threads)
    field = consistency_field(system, kernel, cvec)
    if args.interior:
        field = field[~system.nodes.boundary[field[:, 0].astype(int)]]
    with _output(args.out) as fh:
        write_field_csv(field, fh)


def cmd_stability(args):
    system = _system(args)
    mat = dirichlet_split(system).B if args.split else system.A
    est = stability(mat, args.norm)
    _dump_json({'C_S': est.value, 'method': est.method, 'norm': est.norm,
                'split': args.split, 'shape': list(mat.shape)}, args.out)


def cmd_certify(args):
    system = _system(args)
    cert = certify_system(system, norm=args.norm, K=args.K, split=args.split,
                          timings=args.timings)
    out = cert.to_dict()
    out['seed'] = args.seed
    _dump_json(out, args.out)


def cmd_worstcase(args):
    system = _system(args)
    wc = worst_case(system, K=args.K)
    out = wc.summary()
    if args.vectors:
        out.update(u_star=wc.u_star, u_tilde=wc.u_tilde, u_S=wc.u_S, f=wc.f)
    _dump_json(out, args.out)


def cmd_reproduce(args):
    rows = run_table(args.table, seed=args.seed, threads=args.threads,
                     timings=args.timings)
    with _output(args.out) as fh:
        write_rows(rows, fh)


def _add_common(p, pipeline=True):
    p.add_argument('--out', default=None,
                   help='output file, default stdout')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--threads', type=int, default=os.cpu_count() or 1,
                   help='worker threads for row assembly')
    if not pipeline:
        return
    p.add_argument('--nodes', help='node CSV with header x,y,is_boundary')
    p.add_argument('--h', type=float, help='regular grid spacing when no '
                   'node file is given')
    p.add_argument('--amp', type=float, default=0.0,
                   help='perturbation amplitude for --h grids')
    p.add_argument('--kernel', required=True,
                   help="e.g. 'ph:m=6,d=2' or 'wm:m=4,d=2'")
    p.add_argument('--method', default='fivepoint',
                   help="fivepoint | optimal:n=30 | basic:n=25 | "
                   "greedy:n=30")
    p.add_argument('--neighbors', type=int, default=None,
                   help='override the neighbor count of --method')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='nodalcert',
        description='Worst-case error certificates for nodal meshless '
                    'discretizations.')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    nodes = sub.add_parser('nodes', help='node set utilities')
    nsub = nodes.add_subparsers(dest='nodes_command', required=True)
    gen = nsub.add_parser('gen', help='generate a node set')
    gen.add_argument('kind', choices=('grid', 'perturbed', 'chebyshev'))
    gen.add_argument('--h', type=float, default=0.25)
    gen.add_argument('--n', type=int, default=9,
                     help='Chebyshev points per side')
    gen.add_argument('--amp', type=float, default=None,
                     help='noise amplitude (perturbed default h/4)')
    _add_common(gen, pipeline=False)
    gen.set_defaults(func=cmd_nodes_gen)

    p = sub.add_parser('assemble', help='write the stiffness matrix')
    _add_common(p)
    p.add_argument('--stencils', help='also write stencils as JSON lines')
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser('consistency', help='per-node consistency map (CSV)')
    _add_common(p)
    p.add_argument('--assess-kernel', default=None,
                   help='evaluate consistency in another kernel norm')
    p.add_argument('--interior', action='store_true',
                   help='drop boundary nodes')
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser('stability', help='stability constant (JSON)')
    _add_common(p)
    p.add_argument('--norm', choices=('2', 'inf'), default='inf')
    p.add_argument('--split', action='store_true',
                   help='use the interior block after Dirichlet elimination')
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser('certify', help='error bound certificate (JSON)')
    _add_common(p)
    p.add_argument('--norm', choices=('2', 'inf'), default='inf')
    p.add_argument('--K', type=float, default=0.0,
                   help='admissibility constant of the solver')
    p.add_argument('--split', action='store_true')
    p.add_argument('--timings', action='store_true',
                   help='record wall times (makes output nondeterministic)')
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser('worstcase', help='sharpness construction (JSON)')
    _add_common(p)
    p.add_argument('--K', type=float, default=2.0)
    p.add_argument('--vectors', action='store_true',
                   help='include u*, u~, u_S and f')
    p.set_defaults(func=cmd_worstcase)

    p = sub.add_parser('reproduce', help='reference tables (CSV)')
    p.add_argument('table', choices=tuple(TABLES))
    p.add_argument('--timings', action='store_true')
    _add_common(p, pipeline=False)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else
                        logging.WARNING, format='%(levelname)s %(message)s')
    try:
        args.func(args)
    except InputError as err:
        print('error: %s' % err, file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as err:
        print('numerical failure: %s' % err, file=sys.stderr)
        return EXIT_NUMERICAL
    except CertError as err:
        print('error: %s' % err, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
