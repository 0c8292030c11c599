"""Pointwise evaluation of Hylleraas basis terms and the S-state Laplacian.

A basis term is

    phi(s, t, u) = exp(-s/2) s^n t^(2l) u^m rho^i g^j,
    rho^2 = s^2 + t^2,  g = ln(rho^2 / 2).

The routines work on any scalar or array type that supports ``+ - * /`` and
integer powers; ``exp``/``log``/``sqrt`` come from a small backend object so
the same code serves numpy float arrays (quadrature oracle) and gmpy2 scalars
(wave-function diagnostics).
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np


@dataclass(frozen=True)
class Backend:
    exp: object
    log: object
    sqrt: object


NUMPY = Backend(np.exp, np.log, np.sqrt)
BIGREAL = Backend(gmpy2.exp, gmpy2.log, gmpy2.sqrt)


@dataclass
class TermJet:
    """Value and the partial derivatives needed by the Laplacian."""

    f: object
    s: object
    t: object
    u: object
    ss: object
    tt: object
    uu: object
    su: object
    tu: object


def _power_jet(x, k):
    """(x^k, d/dx, d2/dx2) with zero-coefficient terms kept exactly zero."""
    val = x ** k if k else 1 + 0 * x
    d1 = k * x ** (k - 1) if k else 0 * x
    d2 = k * (k - 1) * x ** (k - 2) if k * (k - 1) else 0 * x
    return val, d1, d2


def term_jet(term, s, t, u, backend=NUMPY, log_scale=1):
    """Derivatives of one basis term at (s, t, u).

    ``term`` is any object with n, l, m, i, j attributes (or a 5-tuple).
    ``log_scale`` multiplies g before raising to the j-th power; 1 gives the
    g = ln((s^2+t^2)/2) convention, 1/2 gives powers of ln r.
    """
    n, l, m, i, j = tuple(term)
    rho2 = s * s + t * t
    e = backend.exp(-s / 2)
    # s-factor: exp(-s/2) s^n
    sn, sn1, sn2 = _power_jet(s, n)
    a_s = e * sn
    a_s1 = e * (sn1 - sn / 2)
    a_s2 = e * (sn2 - sn1 + sn / 4)
    # t-factor
    tv, t1, t2 = _power_jet(t, 2 * l)
    # u-factor
    uv, u1, u2 = _power_jet(u, m)
    # rho^i
    if i:
        r = backend.sqrt(rho2) ** i
        ri2 = i * backend.sqrt(rho2) ** (i - 2)
        ri4 = i * (i - 2) * backend.sqrt(rho2) ** (i - 4)
        r_s, r_t = s * ri2, t * ri2
        r_ss = ri2 + s * s * ri4
        r_tt = ri2 + t * t * ri4
    else:
        r = 1 + 0 * s
        r_s = r_t = r_ss = r_tt = 0 * s
    # g^j
    if j:
        g = log_scale * backend.log(rho2 / 2)
        gs = log_scale * 2 * s / rho2
        gt = log_scale * 2 * t / rho2
        gss = log_scale * (2 / rho2 - 4 * s * s / (rho2 * rho2))
        gtt = log_scale * (2 / rho2 - 4 * t * t / (rho2 * rho2))
        gj = g ** j
        gj1 = j * g ** (j - 1)
        gj2 = j * (j - 1) * g ** (j - 2) if j > 1 else 0 * s
        G, G_s, G_t = gj, gj1 * gs, gj1 * gt
        G_ss = gj2 * gs * gs + gj1 * gss
        G_tt = gj2 * gt * gt + gj1 * gtt
    else:
        G = 1 + 0 * s
        G_s = G_t = G_ss = G_tt = 0 * s

    # A(s,t) = [e s^n] * t^2l * rho^i * g^j ; B(s,t) = rho^i g^j
    B = r * G
    B_s = r_s * G + r * G_s
    B_t = r_t * G + r * G_t
    B_ss = r_ss * G + 2 * r_s * G_s + r * G_ss
    B_tt = r_tt * G + 2 * r_t * G_t + r * G_tt

    A = a_s * tv * B
    A_s = tv * (a_s1 * B + a_s * B_s)
    A_t = a_s * (t1 * B + tv * B_t)
    A_ss = tv * (a_s2 * B + 2 * a_s1 * B_s + a_s * B_ss)
    A_tt = a_s * (t2 * B + 2 * t1 * B_t + tv * B_tt)

    return TermJet(
        f=A * uv, s=A_s * uv, t=A_t * uv, u=A * u1,
        ss=A_ss * uv, tt=A_tt * uv, uu=A * u2,
        su=A_s * u1, tu=A_t * u1,
    )


def term_value(term, s, t, u, backend=NUMPY, log_scale=1):
    """phi(s, t, u) for one term; the exact origin is excluded for rho^-1 terms."""
    n, l, m, i, j = tuple(term)
    val = backend.exp(-s / 2)
    if n:
        val = val * s ** n
    if l:
        val = val * t ** (2 * l)
    if m:
        val = val * u ** m
    rho2 = s * s + t * t
    if i:
        val = val * backend.sqrt(rho2) ** i
    if j:
        val = val * (log_scale * backend.log(rho2 / 2)) ** j
    return val


def laplacian(jet, s, t, u):
    """Apply the S-state operator nabla^2 / (2 delta^2) in (s, t, u)."""
    d = s * s - t * t
    out = jet.ss + jet.tt + jet.uu + 2 * jet.u / u
    out = out + 4 * (s * jet.s - t * jet.t) / d
    out = out + 2 * (s * (u * u - t * t) * jet.su - t * (u * u - s * s) * jet.tu) / (u * d)
    return out


def weighted_laplacian(jet, s, t, u):
    """u (t^2 - s^2) times ``laplacian``, with the singular factors cancelled."""
    w = t * t - s * s
    out = u * w * (jet.ss + jet.tt + jet.uu) + 2 * w * jet.u
    out = out - 4 * u * (s * jet.s - t * jet.t)
    out = out - 2 * (s * (u * u - t * t) * jet.su - t * (u * u - s * s) * jet.tu)
    return out
