"""Radial kernels and their actions under point and Laplacian functionals.

Two families are supported:

``ph``
    The polyharmonic kernel of smoothness ``m`` in dimension ``d``,
    ``r^(2m-d)`` (odd case) or ``r^(2m-d) log r`` (even case), signed so
    that it is conditionally positive definite of order
    ``floor(m - d/2) + 1`` and scaled so that its native space carries the
    order-``m`` Sobolev seminorm.
``wm``
    The Whittle-Matern kernel ``2^(1-m)/Gamma(m) r^nu K_nu(r)`` with
    ``nu = m - d/2``, the reproducing kernel of ``W_2^m(R^d)`` for the
    Fourier weight ``(1 + |w|^2)^m``.

Functionals are ``delta_x`` (identity) and ``delta_x o Laplacian``. Because
both kernels are radial, ``L_x M_y K(x, y)`` only depends on how many
Laplacians act, so every action reduces to an iterated radial Laplacian of
the profile.
"""
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, kv

from nodalcert.errors import (InputError, InsufficientSmoothness,
                              InvalidSmoothness)

POLYHARMONIC = 'ph'
WHITTLE_MATERN = 'wm'

IDENTITY = 'id'
LAPLACIAN = 'lap'
_OPERATOR_ORDER = {IDENTITY: 0, LAPLACIAN: 2}


def _is_half_integer(v):
    return abs(2 * v - round(2 * v)) < 1e-12


def ph_scale_factor(m, d):
    """Normalization of the polyharmonic kernel matching the seminorm."""
    beta = 2 * m - d
    if int(round(beta)) % 2:
        # |Gamma(d/2 - m)| keeps Delta^m H = (-1)^m delta as in the even case
        return abs(gamma(d / 2 - m)) / (2 ** (2 * m) * math.pi ** (d / 2)
                                        * gamma(m))
    return 1.0 / (2 ** (2 * m - 1) * math.pi ** (d / 2) * gamma(m)
                  * gamma(m - d / 2 + 1))


def ph_sign(m, d):
    beta = int(round(2 * m - d))
    if beta % 2:
        return (-1) ** math.ceil(m - d / 2)
    return (-1) ** int(round(1 + m - d / 2))


def wm_scale_factor(m, d):
    return 2.0 ** (1 - m) / gamma(m)


def matern_profile(mu, r):
    """``r^mu K_mu(r)`` with its limit ``2^(mu-1) Gamma(mu)`` at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    zero = r == 0.0
    if np.any(zero):
        if mu <= 0:
            raise InsufficientSmoothness(
                'r^mu K_mu(r) is unbounded at 0 for mu=%g' % mu)
        out[zero] = 2.0 ** (mu - 1) * gamma(mu)
    rz = r[~zero]
    out[~zero] = rz ** mu * kv(mu, rz)
    return out


@dataclass(frozen=True)
class Kernel:
    """Radial kernel descriptor.

    Use :func:`ph_kernel` or :func:`wm_kernel` to build one.
    """
    family: str
    m: float
    d: int
    scale_factor: float

    def __post_init__(self):
        if self.family not in (POLYHARMONIC, WHITTLE_MATERN):
            raise InputError('unknown kernel family %r' % self.family)
        if 2 * self.m <= self.d:
            raise InvalidSmoothness('need 2m > d, got m=%g, d=%d'
                                    % (self.m, self.d))
        if not _is_half_integer(self.m):
            raise InvalidSmoothness('m must be integer or half-integer')

    @property
    def nu(self):
        return self.m - self.d / 2

    @property
    def beta(self):
        """Exponent ``2m - d`` of the polyharmonic profile."""
        return int(round(2 * self.m - self.d))

    @property
    def cpd_order(self):
        """Order of conditional positive definiteness (0 for ``wm``)."""
        if self.family == POLYHARMONIC:
            return int(math.floor(self.nu)) + 1
        return 0

    @property
    def spec(self):
        return '%s:m=%s,d=%d' % (self.family, _fmt(self.m), self.d)

    def __str__(self):
        return self.spec

    # -- radial profile ----------------------------------------------------

    def _ph_terms(self, n_lap):
        # each term is (coefficient, power, has_log)
        beta = self.beta
        terms = [(ph_sign(self.m, self.d) * self.scale_factor, float(beta),
                  beta % 2 == 0)]
        for _ in range(n_lap):
            out = []
            for c, a, lg in terms:
                f = a * (a + self.d - 2)
                if f != 0.0:
                    out.append((c * f, a - 2, lg))
                if lg:
                    out.append((c * (2 * a + self.d - 2), a - 2, False))
            terms = _merge(out)
        return terms

    def _wm_terms(self, n_lap):
        # each term is (coefficient, mu) for r^mu K_mu(r)
        terms = {self.nu: self.scale_factor}
        for _ in range(n_lap):
            out = {}
            for mu, c in terms.items():
                out[mu] = out.get(mu, 0.0) + c
                f = 2 * mu + self.d - 2
                if f != 0.0:
                    out[mu - 1] = out.get(mu - 1, 0.0) - c * f
            terms = out
        return terms

    def lap(self, r, n_lap=0):
        """Iterated radial Laplacian ``Delta^n_lap phi`` evaluated at ``r``.

        ``r = 0`` uses the analytic limit and raises
        :class:`InsufficientSmoothness` if it does not exist.
        """
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.zeros_like(r)
        zero = r == 0.0
        pos = ~zero
        if self.family == POLYHARMONIC:
            rp = r[pos]
            logr = np.log(rp) if rp.size else rp
            for c, a, lg in self._ph_terms(n_lap):
                if np.any(zero):
                    if a < 0 or (a == 0 and lg):
                        raise InsufficientSmoothness(
                            'Laplacian^%d of %s is singular at r=0'
                            % (n_lap, self.spec))
                    if a == 0:
                        out[zero] += c
                val = c * rp ** a
                if lg:
                    val = val * logr
                out[pos] += val
        else:
            for mu, c in self._wm_terms(n_lap).items():
                if c != 0.0:
                    out += c * matern_profile(mu, r)
        return out[0] if scalar else out

    def __call__(self, r):
        return self.lap(r, 0)

    def derivative(self, r, order):
        """Radial derivative ``phi'`` (order 1) or ``phi''`` (order 2)."""
        if order not in (1, 2):
            raise ValueError('order must be 1 or 2')
        r = np.asarray(r, dtype=float)
        rr = np.atleast_1d(r)
        out = np.zeros_like(rr)
        pos = rr > 0
        rp = rr[pos]
        if np.any(~pos) and self.nu <= order / 2:
            raise InsufficientSmoothness(
                'derivative %d of %s is singular at r=0' % (order, self.spec))
        if self.family == WHITTLE_MATERN:
            s, nu = self.scale_factor, self.nu
            # (r^nu K_nu)' = -r * r^(nu-1) K_(nu-1)
            if order == 1:
                out[pos] = -s * rp * matern_profile(nu - 1, rp)
            else:
                out[pos] = s * (-matern_profile(nu - 1, rp)
                                + rp * rp * matern_profile(nu - 2, rp))
                if np.any(~pos):
                    out[~pos] = -s * 2.0 ** (nu - 2) * gamma(nu - 1)
        else:
            for c, a, lg in self._ph_terms(0):
                if order == 1:
                    val = c * a * rp ** (a - 1)
                    if lg:
                        val = val * np.log(rp) + c * rp ** (a - 1)
                else:
                    val = c * a * (a - 1) * rp ** (a - 2)
                    if lg:
                        val = (val * np.log(rp)
                               + c * (2 * a - 1) * rp ** (a - 2))
                out[pos] += val
        return out[0] if r.ndim == 0 else out

    # -- functionals -------------------------------------------------------

    def check_functional(self, operator):
        """Raise unless the functional is bounded on the native space."""
        if operator not in _OPERATOR_ORDER:
            raise InputError('unknown operator %r' % operator)
        order = _OPERATOR_ORDER[operator]
        if order and not self.beta > 2 * order:
            raise InsufficientSmoothness(
                'point evaluation of a derivative of order %d needs '
                '2m - d > %d, kernel is %s' % (order, 2 * order, self.spec))

    def action(self, op_x, op_y, r):
        """``op_x op_y K(x, y)`` as a function of ``r = |x - y|``."""
        self.check_functional(op_x)
        self.check_functional(op_y)
        n_lap = (op_x == LAPLACIAN) + (op_y == LAPLACIAN)
        return self.lap(r, n_lap)


def _merge(terms):
    acc = {}
    for c, a, lg in terms:
        acc[(a, lg)] = acc.get((a, lg), 0.0) + c
    return [(c, a, lg) for (a, lg), c in acc.items() if c != 0.0]


def _fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def ph_kernel(m, d):
    """Polyharmonic kernel ``H_{m,d}`` with its seminorm normalization."""
    if 2 * m <= d:
        raise InvalidSmoothness('need 2m > d, got m=%g, d=%d' % (m, d))
    return Kernel(POLYHARMONIC, m, d, ph_scale_factor(m, d))


def wm_kernel(m, d):
    """Whittle-Matern kernel reproducing ``W_2^m(R^d)``."""
    if m - d / 2 <= 0:
        raise InvalidSmoothness('need m - d/2 > 0, got m=%g, d=%d' % (m, d))
    return Kernel(WHITTLE_MATERN, m, d, wm_scale_factor(m, d))


def apply_functionals(kernel, lam, mu, x, y):
    """``lam^x mu^y K(x, y)`` for functionals given by operator names.

    ``lam`` and ``mu`` are operator names (``'id'`` or ``'lap'``) or objects
    with an ``operator`` attribute.
    """
    op_x = getattr(lam, 'operator', lam)
    op_y = getattr(mu, 'operator', mu)
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float))
    return float(kernel.action(op_x, op_y, r))


_SPEC_RE = re.compile(
    r'^\s*(ph|wm)\s*:\s*m\s*=\s*([0-9.]+)\s*,\s*d\s*=\s*([0-9]+)\s*$')


def parse_kernel(spec):
    """Parse ``ph:m=<v>,d=<v>`` or ``wm:m=<v>,d=<v>``."""
    match = _SPEC_RE.match(spec)
    if not match:
        raise InputError('bad kernel spec %r, expected ph:m=4,d=2 or '
                         'wm:m=4,d=2' % spec)
    family, m, d = match.groups()
    m = float(m)
    if m.is_integer():
        m = int(m)
    return (ph_kernel if family == 'ph' else wm_kernel)(m, int(d))
