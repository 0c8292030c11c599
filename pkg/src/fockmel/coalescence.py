"""Wave function and local Schrodinger residual along the coalescence lines.

Electron-nucleus line: r1 = r12 = R, r2 -> 0.
Electron-electron line: r1 = r2 = R, r12 -> 0.

Individual terms are singular on these lines, so the residual (H - E) Psi is
sampled at r2 (or r12) = eps, eps/2, eps/4 and fitted to a/x + f + b x. The
regular coefficient f is reported as f(R) (resp. g(R)); a is the uncancelled
cusp channel. A fourth sample at eps/8 feeds an error estimate for f.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import gmpy2
from gmpy2 import mpfr

from .hylleraas import BIGREAL, TermJet, laplacian, term_jet, term_value
from .matrix_elements import BasisTerm
from .specfun import to_real


class HylleraasPoint(NamedTuple):
    s: object
    t: object
    u: object

    @classmethod
    def from_distances(cls, r1, r2, r12, delta):
        r1, r2, r12, delta = (to_real(x) for x in (r1, r2, r12, delta))
        t = abs(r1 - r2)
        return cls(delta * (r1 + r2), delta * t, delta * r12)

    def validate(self):
        s, t, u = self
        if not (0 <= t <= u <= s):
            raise ValueError(f"point violates 0 <= t <= u <= s: {tuple(map(float, self))}")
        return self


@dataclass
class CoalescenceSample:
    R: object
    wf_value: object
    residual: object
    log10_ratio: object
    singular: object = None
    fit_error: object = None


class Wavefunction:
    """Psi = sum_a C_a phi_a collapsed onto distinct basis terms."""

    def __init__(self, coefficients, basis):
        from .basis import as_function

        if len(coefficients) != len(basis):
            raise ValueError("coefficient vector and basis differ in length")
        acc = {}
        for c, fn in zip(coefficients, basis):
            c = to_real(c)
            if c == 0:
                continue
            for k, term in as_function(fn).terms:
                term = BasisTerm(*term)
                acc[term] = acc.get(term, mpfr(0)) + c * k
        self.terms = [(c, t) for t, c in acc.items() if c != 0]

    def value(self, point):
        s, t, u = (to_real(x) for x in point)
        total = mpfr(0)
        for c, term in self.terms:
            if term.i < 0 and s == 0 and t == 0:
                raise ValueError("terms with i=-1 are singular at s=t=0")
            total += c * term_value(term, s, t, u, BIGREAL)
        return total

    def jet_sum(self, point):
        s, t, u = (to_real(x) for x in point)
        fields = ("f", "s", "t", "u", "ss", "tt", "uu", "su", "tu")
        acc = dict.fromkeys(fields, mpfr(0))
        for c, term in self.terms:
            jet = term_jet(term, s, t, u, BIGREAL)
            for name in fields:
                acc[name] += c * getattr(jet, name)
        return acc


def _wavefunction(solution, basis):
    return Wavefunction(solution.coefficients, basis)


def eval_psi(solution, basis, point):
    """Psi at a Hylleraas point."""
    point = HylleraasPoint(*point).validate()
    return _wavefunction(solution, basis).value(point)


def _h_minus_e(wf, Z, delta, energy, point):
    s, t, u = (to_real(x) for x in point)
    if not (0 <= t < u < s) or u == 0:
        raise ValueError("(H - E) Psi needs a strict interior point 0 <= t < u < s")
    jet = TermJet(**wf.jet_sum((s, t, u)))
    lap = laplacian(jet, s, t, u)
    Z, delta = to_real(Z), to_real(delta)
    pot = delta * (4 * Z * s / (t * t - s * s) + 1 / u)
    return -delta * delta * lap + (pot - to_real(energy)) * jet.f


def apply_h_minus_e(solution, basis, Z, delta, point):
    """(H - E) Psi at an interior point, with E = solution.energy."""
    return _h_minus_e(_wavefunction(solution, basis), Z, delta, solution.energy, point)


def laurent_fit(xs, ys):
    """Coefficients (a, f, b, ...) of a/x + f + b x + c x^2 + ... through the samples.

    With k samples the model has k terms (powers -1 .. k-2); the square
    system is solved by Gaussian elimination with partial pivoting.
    """
    k = len(xs)
    rows = [[x ** p for p in range(-1, k - 1)] + [y] for x, y in zip(xs, ys)]
    for c in range(k):
        piv = max(range(c, k), key=lambda r: abs(rows[r][c]))
        rows[c], rows[piv] = rows[piv], rows[c]
        for r in range(c + 1, k):
            factor = rows[r][c] / rows[c][c]
            rows[r] = [a - factor * b for a, b in zip(rows[r], rows[c])]
    out = [mpfr(0)] * k
    for c in range(k - 1, -1, -1):
        acc = rows[c][k] - sum((rows[c][q] * out[q] for q in range(c + 1, k)), mpfr(0))
        out[c] = acc / rows[c][c]
    return tuple(out)


def _line_point(kind, R, x, delta):
    if kind == "en":
        return HylleraasPoint.from_distances(R, x, R, delta)
    if kind == "ee":
        return HylleraasPoint.from_distances(R, R, x, delta)
    raise ValueError(f"unknown line kind {kind!r}")


def _line_value_point(kind, R, delta):
    if kind == "en":
        return HylleraasPoint.from_distances(R, 0, R, delta)
    return HylleraasPoint.from_distances(R, R, 0, delta)


def _sample(kind, wf, energy, Z, delta, R, eps):
    R = to_real(R)
    if not R > 0:
        raise ValueError("R must be positive")
    eps = mpfr("1e-6") * R if eps is None else to_real(eps)
    if not 0 < eps < R / 10:
        raise ValueError("eps must satisfy 0 < eps < R/10")
    xs = [eps, eps / 2, eps / 4, eps / 8]
    ys = [_h_minus_e(wf, Z, delta, energy, _line_point(kind, R, x, delta)) for x in xs]
    a, f, _ = laurent_fit(xs[:3], ys[:3])
    # a fit that also carries x^2 measures the error of the three-point f
    err = abs(laurent_fit(xs, ys)[1] - f)
    wf_val = wf.value(_line_value_point(kind, R, delta))
    ratio = gmpy2.log10(abs(f / wf_val)) if wf_val != 0 and f != 0 else None
    return CoalescenceSample(R=R, wf_value=wf_val, residual=f, log10_ratio=ratio, singular=a, fit_error=err)


def residual_en(solution, basis, Z, delta, R, eps=None):
    """f(R) and F(R) = Psi(R, 0, R) on the electron-nucleus line."""
    return _sample("en", _wavefunction(solution, basis), solution.energy, Z, delta, R, eps)


def residual_ee(solution, basis, Z, delta, R, eps=None):
    """g(R) and Phi(R) = Psi(R, R, 0) on the electron-electron line."""
    return _sample("ee", _wavefunction(solution, basis), solution.energy, Z, delta, R, eps)


def scan_line(kind, solution, basis, Z, delta, rmin, rmax, points, eps_rel=None):
    """Samples on a geometric R grid from rmin to rmax (inclusive).

    ``eps_rel`` sets eps = eps_rel * R (default 1e-6).
    """
    rmin, rmax = to_real(rmin), to_real(rmax)
    if not 0 < rmin < rmax:
        raise ValueError("need 0 < rmin < rmax")
    if points < 2:
        raise ValueError("points must be >= 2")
    wf = _wavefunction(solution, basis)
    ratio = (rmax / rmin) ** (mpfr(1) / (points - 1))
    grid = [rmin * ratio ** k for k in range(points - 1)] + [rmax]
    rel = mpfr("1e-6") if eps_rel is None else to_real(eps_rel)
    return [_sample(kind, wf, solution.energy, Z, delta, R, rel * R) for R in grid]
