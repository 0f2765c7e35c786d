"""Worst-case error certificates for nodal meshless discretizations.

The error of nodal values ``u~`` for a linear problem discretized by a
generalized stiffness matrix ``A`` is bounded by ``(1 + K) C_S(A) ||c||``:
a computable stability constant times a vector of kernel-based consistency
errors, one per test functional.
"""
__version__ = '0.1.0'

from nodalcert.certify import (Certificate, WorstCase, certify_system,
                               error_bound, worst_case)
from nodalcert.consistency import consistency, consistency_vector, \
    quadratic_form
from nodalcert.errors import CertError, InputError, NumericalError
from nodalcert.functionals import Functional, Stencil
from nodalcert.geometry import (NodeSet, gen_chebyshev, gen_grid,
                                gen_perturbed_grid, nearest_neighbors)
from nodalcert.kernels import Kernel, parse_kernel, ph_kernel, wm_kernel
from nodalcert.stability import assemble, dirichlet_split, stability
from nodalcert.stencils import (basic_exact_weights, five_point_star,
                                greedy_weights, optimal_weights)

__all__ = [
    'Certificate', 'WorstCase', 'certify_system', 'error_bound',
    'worst_case', 'consistency', 'consistency_vector', 'quadratic_form',
    'CertError', 'InputError', 'NumericalError', 'Functional', 'Stencil',
    'NodeSet', 'gen_chebyshev', 'gen_grid', 'gen_perturbed_grid',
    'nearest_neighbors', 'Kernel', 'parse_kernel', 'ph_kernel', 'wm_kernel',
    'assemble', 'dirichlet_split', 'stability', 'basic_exact_weights',
    'five_point_star', 'greedy_weights', 'optimal_weights',
]
