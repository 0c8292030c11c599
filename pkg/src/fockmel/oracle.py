"""Independent quadrature oracles for the closed-form integrals.

Neither oracle uses the one-dimensional reduction or any special-function
identity from ``integrals``. Both integrate the raw three-dimensional form
over 0 <= t <= u <= s after the substitution u = s v, t = s v w, which maps
the region onto s in [0, inf) times the unit square (Jacobian s^2 v).

* ``p_oracle``: the logarithm ln((s^2+t^2)/2) = 2 ln s + ln((1+v^2w^2)/2)
  is expanded binomially so the s-integrals (tanh-sinh, mpmath) and the
  (v, w) integrals (Gauss-Legendre, compared at two orders) separate.
* ``kinetic_oracle``: the Laplacian of the ket is applied analytically
  (``hylleraas.term_jet``) and the weighted integrand is integrated with
  Gauss-Legendre in (v, w) and adaptive quadrature in s.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import mpmath
import numpy as np
from gmpy2 import mpfr
from scipy import integrate

from .errors import ConvergenceError
from .hylleraas import NUMPY, term_jet, term_value, weighted_laplacian
from .integrals import PKey


@lru_cache(maxsize=None)
def _legendre01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _square_moments(key, order):
    iota, j, _, ell, mu = key
    x, w = _legendre01(order)
    v, wv = x[:, None], w[:, None]
    y, wy = x[None, :], w[None, :]
    base = v ** (ell + mu + 1) * y ** ell * (1 + (v * y) ** 2) ** (iota / 2)
    h = np.log((1 + (v * y) ** 2) / 2)
    weights = wv * wy
    return [float(np.sum(weights * base * h ** k)) for k in range(j + 1)]


def _log_moment(alpha, k, tol, dps):
    """int_0^inf e^-s s^alpha (ln s)^k ds on [0, S] plus a rigorous tail bound."""
    with mpmath.workdps(dps):
        # tail: for s >= S >= e, |ln s|^k <= s^k
        smax = mpmath.mpf(max(40, 2 * (alpha + k) + 20))
        while mpmath.gammainc(alpha + k + 1, smax) > tol / 10 * mpmath.gamma(alpha + 1) / 100:
            smax *= 1.5
        f = lambda s: mpmath.exp(-s) * s ** alpha * mpmath.log(s) ** k
        pts = [0, 1] + [p for p in (alpha / 2, alpha, 2 * alpha + 4) if 1 < p < smax] + [smax]
        pts = sorted(set(mpmath.mpf(p) for p in pts))
        val, err = mpmath.quad(f, pts, error=True, maxdegree=10)
        return val, err + mpmath.gammainc(alpha + k + 1, smax)


def p_oracle_with_error(key, tol=1e-12, order=40, dps=30):
    """Quadrature value of P_{iota,j}(nu, ell, mu) and its error estimate."""
    key = PKey(*key)
    if tol <= 0:
        raise ValueError("tol must be positive")
    iota, j, nu, ell, mu = key
    alpha = key.alpha
    if alpha < 0:
        raise ValueError(f"alpha < 0 for {tuple(key)}")
    lo = _square_moments(key, order)
    hi = _square_moments(key, order + 8)
    sq_err = max(abs(a - b) for a, b in zip(lo, hi)) + 1e-16 * max(abs(b) for b in hi)
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        err = mpmath.mpf(0)
        for k in range(j + 1):
            sk, ek = _log_moment(alpha, k, tol, dps)
            vk = mpmath.mpf(hi[j - k])
            c = comb(j, k) * 2 ** k
            total += c * sk * vk
            err += c * (abs(ek * vk) + abs(sk) * sq_err)
        rel = err / abs(total) if total else err
        if rel > tol:
            raise ConvergenceError(
                f"P oracle for {tuple(key)} reached only {mpmath.nstr(rel, 3)} relative error")
        return mpfr(mpmath.nstr(total, dps)), float(rel)


def p_oracle(key, tol=1e-12):
    """Quadrature value of P_{iota,j}(nu, ell, mu) with relative error <= tol."""
    return p_oracle_with_error(key, tol)[0]


def _kinetic_slice(bra, ket, s, order, log_scale):
    x, w = _legendre01(order)
    v = x[:, None]
    y = x[None, :]
    u = s * v
    t = s * v * y
    jet = term_jet(ket, s + 0 * u, t, u, NUMPY, log_scale)
    dens = term_value(bra, s + 0 * u, t, u, NUMPY, log_scale) * weighted_laplacian(jet, s, t, u)
    return s * s * float(np.sum((w[:, None] * w[None, :]) * v * dens))


def kinetic_oracle(bra, ket, tol=1e-10, log_convention="half_log_rho2", order=40):
    """Quadrature value of the kinetic entry <bra| u(t^2-s^2) nabla^2/(2 delta^2) |ket>.

    ``log_convention`` selects the logarithm carried by the terms:
    ``"half_log_rho2"`` is g = ln((s^2+t^2)/2) = 2 ln r, ``"log_r"`` is ln r.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = {"half_log_rho2": 1.0, "log_r": 0.5}[log_convention]
    f_lo = lambda s: _kinetic_slice(bra, ket, s, order, scale)
    f_hi = lambda s: _kinetic_slice(bra, ket, s, order + 8, scale)
    opts = dict(epsabs=0.0, epsrel=min(tol / 10, 1e-11), limit=400)
    lo, e_lo = integrate.quad(f_lo, 0.0, 8.0, **opts)
    hi_tail, e_tail = integrate.quad(f_lo, 8.0, np.inf, **opts)
    val = lo + hi_tail
    check = integrate.quad(f_hi, 0.0, 8.0, **opts)[0] + integrate.quad(f_hi, 8.0, np.inf, **opts)[0]
    err = e_lo + e_tail + abs(check - val)
    scale_ref = max(abs(val), 1e-300)
    if err > tol * scale_ref and err > 1e-13:
        raise ConvergenceError(f"kinetic oracle error {err:.3e} above tolerance for {bra}, {ket}")
    return mpfr(repr(val)), err / scale_ref
