import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodalcert.consistency import (CANCELLATION_GUARD, _guarded,
                                   consistency, consistency_field,
                                   consistency_vector, quadratic_form,
                                   quadratic_form_raw, scaled_consistency,
                                   write_field_csv)
from nodalcert.errors import (ExactnessViolated, InsufficientSmoothness,
                              NegativeQuadraticForm)
from nodalcert.functionals import (Functional, Stencil, identity_stencil,
                                   monomial_exponents, monomial_values)
from nodalcert.geometry import (gen_chebyshev, gen_grid, gen_perturbed_grid,
                                nearest_neighbors)
from nodalcert.kernels import LAPLACIAN, ph_kernel, wm_kernel
from nodalcert.stability import assemble
from nodalcert.stencils import five_point_star, optimal_weights

# five-point star under the W_2^4 kernel, from a 40-digit mpmath evaluation
# with numerically differentiated Bessel profiles
WM_FIVEPOINT = {0.5: 0.0990447705114005, 0.25: 0.0517664193859654,
                0.125: 0.0263026702599711, 0.0625: 0.0132224824509548}
# five-point star at h = 1 under H_{4,2}, same oracle on r^6 log r
PH_FIVEPOINT_UNIT = 0.0846065543996


@pytest.mark.parametrize('h', sorted(WM_FIVEPOINT))
def test_wm_fivepoint_oracle(h):
    # direct summation loses digits like h^-4 through cancellation
    c = consistency(wm_kernel(4, 2), five_point_star(h, (0.3, -0.2)))
    assert c == pytest.approx(WM_FIVEPOINT[h], rel=1e-7)


def test_ph_fivepoint_oracle_and_scaling():
    k = ph_kernel(4, 2)
    assert consistency(k, five_point_star(1.0)) == pytest.approx(
        PH_FIVEPOINT_UNIT, rel=1e-10)
    # m - d/2 - p = 1
    for h in (0.5, 0.01):
        assert consistency(k, five_point_star(h)) == pytest.approx(
            h * PH_FIVEPOINT_UNIT, rel=1e-10)


def test_scaled_consistency():
    assert scaled_consistency(2.0, 0.5, 6, 2, 2) == pytest.approx(2 * 0.125)


def _bound_instance(seed, kernel):
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = gen_perturbed_grid(0.25, 0.0625, seed)
    i = int(rng.choice(nodes.interior))
    idx = nearest_neighbors(nodes, nodes.points[i], 25)
    anchor = nodes.points[i]
    s = optimal_weights(kernel, Functional(anchor), nodes.points[idx], idx)
    return rng, anchor, s


@pytest.mark.parametrize('kernel', [wm_kernel(4, 2), ph_kernel(6, 2)],
                         ids=str)
@pytest.mark.parametrize('seed', range(3))
def test_q_bounds_error_on_kernel_translates(kernel, seed):
    rng, anchor, s = _bound_instance(seed, kernel)
    q = consistency(kernel, s)
    k = kernel.cpd_order
    n = 40
    for _ in range(50):
        centers = rng.uniform(-1.5, 1.5, (n, 2))
        c = rng.standard_normal(n)
        if k:
            # the seminorm only sees coefficients annihilating polynomials
            P = monomial_values(centers, monomial_exponents(k, 2))
            Q, _ = np.linalg.qr(P, mode='complete')
            c = Q[:, P.shape[1]:] @ rng.standard_normal(n - P.shape[1])
        D = np.linalg.norm(centers[:, None] - centers[None], axis=2)
        norm = np.sqrt(c @ kernel(D) @ c)
        exact = c @ kernel.lap(np.linalg.norm(centers - anchor, axis=1), 1)
        Dx = np.linalg.norm(s.points[:, None] - centers[None], axis=2)
        approx = s.weights @ (kernel(Dx) @ c)
        assert abs(exact - approx) <= (1 + 1e-8) * q * norm


@given(st.integers(0, 500))
def test_q2_nonnegative(seed):
    k = wm_kernel(4, 2)
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = rng.uniform(-0.3, 0.3, (6, 2))
    w = rng.standard_normal(6) * 10
    assert quadratic_form_raw(k, Functional((0, 0)), pts, w) >= 0


def test_guard():
    assert _guarded([1.0, -1.0 - 0.5 * CANCELLATION_GUARD]) == 0.0
    with pytest.raises(NegativeQuadraticForm):
        _guarded([1.0, -1.1])


def test_exactness_violation():
    s = five_point_star(0.5)
    bad = Stencil(s.functional, s.support, s.weights * 1.01, s.points)
    with pytest.raises(ExactnessViolated):
        quadratic_form(ph_kernel(4, 2), bad)
    # the Matern norm accepts any weights
    assert quadratic_form(wm_kernel(4, 2), bad) > 0


def test_insufficient_smoothness():
    with pytest.raises(InsufficientSmoothness):
        quadratic_form(ph_kernel(3, 2), five_point_star(0.5))


def test_both_call_forms():
    k = wm_kernel(4, 2)
    s = five_point_star(0.25)
    assert quadratic_form(k, s) == quadratic_form(k, s.functional, s)


def test_dirichlet_rows_zero():
    k = ph_kernel(6, 2)
    s = identity_stencil((1.0, 0.5), 3)
    assert quadratic_form(k, s) == 0.0
    assert consistency_vector(k, [s]).values.tolist() == [0.0]


def test_vector_threads_identical():
    nodes = gen_perturbed_grid(0.125, 0.03, 2)
    k = ph_kernel(6, 2)
    system = assemble(nodes, k, 'optimal:n=30')
    a = consistency_vector(k, system.stencils, threads=1)
    b = consistency_vector(k, system.stencils, threads=4)
    assert np.array_equal(a.values, b.values)
    assert a.norm(np.inf) == np.max(a.values)


def test_field_matches_vector_and_csv():
    nodes = gen_grid(0.25)
    k = wm_kernel(4, 2)
    system = assemble(nodes, k, 'fivepoint')
    field = consistency_field(system)
    cvec = system.consistency()
    assert np.array_equal(field[:, 3], cvec.values)
    assert np.array_equal(field[:, 1:3], nodes.points)
    buf = io.StringIO()
    write_field_csv(field, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == 'node_index,x,y,c_value'
    assert len(lines) == nodes.M + 1
    # uniform grid interior: translation invariant
    inner = cvec.values[nodes.interior]
    assert np.ptp(inner) <= 1e-12 * inner.max()


def test_empty_interior_map():
    nodes = gen_grid(2.0)
    system = assemble(nodes, ph_kernel(6, 2), 'optimal:n=4')
    field = consistency_field(system)
    assert np.all(field[:, 3] == 0)


def _boundary_ratio(nodes, method):
    system = assemble(nodes, ph_kernel(6, 2), method, threads=4)
    c = system.consistency().values
    inner = ~nodes.boundary
    depth = 1 - np.abs(nodes.points).max(axis=1)
    near = inner & (depth < 0.15)
    deep = inner & (depth > 0.5)
    return c[near].max() / np.median(c[deep])


def test_boundary_layer_uniform_vs_chebyshev():
    ratio = _boundary_ratio(gen_perturbed_grid(0.0625, 0.0625 / 4, 0),
                            'optimal:n=30')
    assert 5 <= ratio <= 10
    cheb = _boundary_ratio(gen_chebyshev(33, 0.01, 0), 'greedy:n=30')
    assert cheb < 2


def test_operator_enum():
    assert Functional((0, 0)).operator == LAPLACIAN
