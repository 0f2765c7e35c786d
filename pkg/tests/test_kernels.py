import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodalcert.errors import InputError, InsufficientSmoothness, \
    InvalidSmoothness
from nodalcert.functionals import monomial_exponents, monomial_values
from nodalcert.kernels import (IDENTITY, LAPLACIAN, apply_functionals,
                               matern_profile, parse_kernel, ph_kernel,
                               wm_kernel)

FD_STEP = 1e-4
FD_RTOL = 1e-5


@pytest.mark.parametrize('mu', [0.5, 1.0, 1.5, 2.0, 3.0, 4.5])
@pytest.mark.parametrize('r', [1e-3, 0.1, 0.7, 2.0, 9.5, 30.0])
def test_matern_profile_vs_mpmath(mu, r):
    mp.mp.dps = 30
    ref = mp.mpf(r) ** mu * mp.besselk(mu, r)
    assert matern_profile(mu, r) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize('mu', [0.5, 1.0, 2.5, 3.0])
def test_matern_profile_limit_at_zero(mu):
    ref = 2.0 ** (mu - 1) * math.gamma(mu)
    assert matern_profile(mu, np.array([0.0]))[0] == pytest.approx(ref)
    assert matern_profile(mu, 1e-7) == pytest.approx(ref, rel=1e-6)


def test_matern_profile_unbounded():
    with pytest.raises(InsufficientSmoothness):
        matern_profile(0.0, np.array([0.0]))


def test_matern_half_integer_closed_form():
    # sqrt(2/pi) r^(5/2) K_(5/2)(r) = exp(-r) (3 + 3r + r^2)
    r = np.linspace(0.0, 6.0, 25)
    got = np.sqrt(2 / np.pi) * matern_profile(2.5, r)
    assert np.allclose(got, np.exp(-r) * (3 + 3 * r + r * r), rtol=1e-13)


@pytest.mark.parametrize('m, d', [(2, 2), (3, 2), (4, 2), (6, 2), (2, 3),
                                  (3, 3), (1, 1), (2, 1)])
def test_ph_iterated_laplacian_is_fundamental_solution(m, d):
    # Delta^m H = (-1)^m delta, so Delta^(m-1) H is (-1)^m times the
    # fundamental solution of the Laplacian (up to a constant for d = 2)
    k = ph_kernel(m, d)
    r = np.array([0.3, 0.3 * np.e, 2.0])
    v = k.lap(r, m - 1)
    sign = (-1) ** m
    if d == 1:
        assert np.allclose(v, sign * r / 2, rtol=1e-10)
    elif d == 2:
        assert v[1] - v[0] == pytest.approx(sign / (2 * np.pi), rel=1e-10)
    else:
        assert np.allclose(v, sign * -1.0 / (4 * np.pi * r), rtol=1e-10)
    assert np.allclose(k.lap(r, m), 0.0, atol=1e-12)


def test_thin_plate_spline_normalization():
    k = ph_kernel(2, 2)
    r = np.array([0.5, 1.5, 3.0])
    assert np.allclose(k(r), r * r * np.log(r) / (8 * np.pi), rtol=1e-14)


@pytest.mark.parametrize('m', [2, 3, 4])
@pytest.mark.parametrize('r', [0.0, 0.4, 1.3, 3.0])
def test_wm_is_hankel_transform_of_sobolev_weight(m, r):
    # K(r) = (2 pi)^(-1) int (1 + |w|^2)^(-m) exp(i w.x) dw in 2-D
    mp.mp.dps = 20

    def f(t):
        return t * mp.besselj(0, r * t) / (1 + t * t) ** m
    if r == 0:
        val = mp.quad(f, [0, mp.inf])
    else:
        val = mp.quadosc(f, [0, mp.inf], zeros=lambda n: mp.besseljzero(
            0, n) / r)
    assert wm_kernel(m, 2)(r) == pytest.approx(float(val), rel=1e-10)


def _fd1(f, r):
    return (f(r + FD_STEP) - f(r - FD_STEP)) / (2 * FD_STEP)


def _fd2(f, r):
    h = 1e-3
    return (-f(r + 2 * h) + 16 * f(r + h) - 30 * f(r) + 16 * f(r - h)
            - f(r - 2 * h)) / (12 * h * h)


KERNELS = [ph_kernel(4, 2), ph_kernel(6, 2), ph_kernel(3, 3),
           ph_kernel(3.5, 2), wm_kernel(4, 2), wm_kernel(3, 2),
           wm_kernel(3.5, 3)]


@pytest.mark.parametrize('kernel', KERNELS, ids=str)
@pytest.mark.parametrize('r', [0.05, 0.3, 1.0, 2.7])
def test_derivatives_vs_finite_differences(kernel, r):
    d1 = kernel.derivative(r, 1)
    d2 = kernel.derivative(r, 2)
    scale = max(abs(kernel(r)), abs(d1), abs(d2), 1e-300)
    assert abs(d1 - _fd1(kernel, r)) <= FD_RTOL * scale
    assert abs(d2 - _fd2(kernel, r)) <= FD_RTOL * scale


@pytest.mark.parametrize('kernel', KERNELS, ids=str)
@pytest.mark.parametrize('r', [0.05, 0.3, 1.0, 2.7])
def test_radial_laplacian_identity(kernel, r):
    d = kernel.d
    lap = kernel.derivative(r, 2) + (d - 1) / r * kernel.derivative(r, 1)
    assert kernel.lap(r, 1) == pytest.approx(lap, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize('kernel', [ph_kernel(4, 2), ph_kernel(6, 2),
                                    wm_kernel(4, 2), wm_kernel(5, 2)],
                         ids=str)
@pytest.mark.parametrize('r', [0.3, 1.0, 2.7])
def test_double_laplacian_vs_finite_differences(kernel, r):
    def L1(t):
        return kernel.lap(t, 1)
    fd = _fd2(L1, r) + (kernel.d - 1) / r * _fd1(L1, r)
    scale = max(abs(L1(r)), abs(fd), 1e-300)
    assert abs(kernel.lap(r, 2) - fd) <= FD_RTOL * scale


def _fd_lap(f, x, e=FD_STEP):
    ex, ey = np.array([e, 0.0]), np.array([0.0, e])
    return (f(x + ex) + f(x - ex) + f(x + ey) + f(x - ey) - 4 * f(x)) / e ** 2


def _fd_lap4(f, x, e):
    out = -60 * f(x)
    for u in (np.array([e, 0.0]), np.array([0.0, e])):
        out += 16 * (f(x + u) + f(x - u)) - (f(x + 2 * u) + f(x - 2 * u))
    return out / (12 * e * e)


def _fd_errors(kernel, n_pairs=100, seed=0):
    """FD error of both Laplacian actions at random pairs in the square.

    Errors are relative to the larger of the analytic value and the
    differenced function, since the actions cross zero. The fourth order
    stencil keeps close pairs accurate at the fixed step.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for _ in range(n_pairs):
        x, y = rng.uniform(-1, 1, (2, 2))
        r = np.linalg.norm(x - y)
        for inner, outer in ((IDENTITY, (LAPLACIAN, IDENTITY)),
                             (LAPLACIAN, (LAPLACIAN, LAPLACIAN))):
            def f(p):
                return kernel.action(IDENTITY, inner, np.linalg.norm(p - y))
            exact = kernel.action(*outer, r)
            fd = _fd_lap4(f, x, FD_STEP)
            worst = max(worst, abs(fd - exact) / max(abs(exact), abs(f(x))))
    return worst


@pytest.mark.parametrize('kernel', [ph_kernel(4, 2), ph_kernel(6, 2),
                                    ph_kernel(5.5, 2), wm_kernel(4, 2),
                                    wm_kernel(5, 2)], ids=str)
def test_actions_vs_finite_differences_random_pairs(kernel):
    assert _fd_errors(kernel) <= FD_RTOL


def test_laplacian_of_r6logr_at_one():
    def f(p):
        r = np.linalg.norm(p)
        return r ** 6 * np.log(r)
    k = ph_kernel(4, 2)
    exact = k.action(LAPLACIAN, IDENTITY, 1.0) / k.scale_factor
    assert _fd_lap(f, np.array([1.0, 0.0])) == pytest.approx(exact,
                                                             rel=1e-6)
    # 36 r^4 log r + 12 r^4 at r = 1
    assert exact == pytest.approx(12.0)


def test_double_laplacian_h62_nested_fd():
    k = ph_kernel(6, 2)
    y = np.zeros(2)

    def g(p):
        return _fd_lap4(lambda q: k(np.linalg.norm(q - y)), p, 1e-2)
    x = np.array([1.0, 0.0])
    nested = _fd_lap4(g, x, 1e-2)
    assert nested == pytest.approx(k.action(LAPLACIAN, LAPLACIAN, 1.0),
                                   rel=1e-5)


def test_cartesian_laplacian_of_translate():
    # 2-D five-point Laplacian of x -> K(|x - y|) converges to the action
    k = wm_kernel(4, 2)
    x, y = np.array([0.3, -0.2]), np.array([-0.1, 0.4])

    def f(p):
        return k(np.linalg.norm(p - y))
    e = 1e-3
    fd = (f(x + [e, 0]) + f(x - [e, 0]) + f(x + [0, e]) + f(x - [0, e])
          - 4 * f(x)) / e ** 2
    exact = apply_functionals(k, LAPLACIAN, IDENTITY, x, y)
    assert fd == pytest.approx(exact, rel=1e-5)


@pytest.mark.parametrize('kernel', KERNELS, ids=str)
def test_laplacian_limits_at_zero_are_continuous(kernel):
    n = 2 if kernel.beta > 4 else 1
    for k in range(n + 1):
        if kernel.family == 'ph' and kernel.beta <= 2 * k:
            continue
        v0 = kernel.lap(0.0, k)
        v1 = kernel.lap(1e-9, k)
        assert v1 == pytest.approx(v0, rel=1e-6, abs=1e-8)


def test_action_symmetric():
    k = ph_kernel(5, 2)
    r = np.linspace(0.1, 3, 7)
    assert np.array_equal(k.action(LAPLACIAN, IDENTITY, r),
                          k.action(IDENTITY, LAPLACIAN, r))


def test_insufficient_smoothness():
    with pytest.raises(InsufficientSmoothness):
        ph_kernel(3, 2).action(LAPLACIAN, LAPLACIAN, 0.0)
    with pytest.raises(InsufficientSmoothness):
        ph_kernel(3, 2).check_functional(LAPLACIAN)
    with pytest.raises(InsufficientSmoothness):
        wm_kernel(2, 2).action(LAPLACIAN, LAPLACIAN, 0.0)
    ph_kernel(3, 2).check_functional(IDENTITY)


def test_invalid_smoothness():
    with pytest.raises(InvalidSmoothness):
        ph_kernel(1, 2)
    with pytest.raises(InvalidSmoothness):
        wm_kernel(0.5, 2)
    with pytest.raises(InvalidSmoothness):
        ph_kernel(3.3, 2)


def test_cpd_orders():
    assert ph_kernel(4, 2).cpd_order == 4
    assert ph_kernel(6, 2).cpd_order == 6
    assert ph_kernel(2.5, 2).cpd_order == 2
    assert wm_kernel(4, 2).cpd_order == 0


@given(st.integers(0, 1000), st.integers(4, 25))
def test_wm_gram_positive_definite(seed, n):
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = rng.uniform(-2, 2, (n, 2))
    D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    G = wm_kernel(4, 2)(D)
    c = rng.standard_normal(n)
    assert c @ G @ c > 0


@given(st.integers(0, 1000), st.sampled_from([(3, 2), (4, 2), (2, 3)]))
def test_ph_conditionally_positive_definite(seed, md):
    k = ph_kernel(*md)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = 30
    pts = rng.uniform(-1, 1, (n, k.d))
    P = monomial_values(pts, monomial_exponents(k.cpd_order, k.d))
    # project a random vector onto the annihilator of the polynomials
    Q, _ = np.linalg.qr(P, mode='complete')
    c = Q[:, P.shape[1]:] @ rng.standard_normal(n - P.shape[1])
    D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    assert c @ k(D) @ c > 0


def test_parse_kernel():
    assert parse_kernel('ph:m=4,d=2') == ph_kernel(4, 2)
    assert parse_kernel(' wm : m=3.5 , d=2 ').spec == 'wm:m=3.5,d=2'
    assert parse_kernel(ph_kernel(6, 2).spec) == ph_kernel(6, 2)
    with pytest.raises(InputError):
        parse_kernel('gauss:m=1,d=2')
