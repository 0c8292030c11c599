"""Oracle and identity suites shared by the command line and the test suite.

Each suite returns a list of ``Check`` records; a suite passes when every
record has ``ok`` set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import mpmath
from gmpy2 import mpfr

from .integrals import (
    PCache,
    PKey,
    hyp_unit,
    j_integral_gamma,
    j_integral_series,
    p_integral,
    p_nolog,
    q_factor,
)
from .specfun import get_precision, pi, polygamma


@dataclass
class Check:
    name: str
    value: object
    reference: object
    rel_err: float
    tol: float

    @property
    def ok(self):
        return self.rel_err <= self.tol


def _rel(a, b):
    a, b = mpfr(a), mpfr(b)
    scale = abs(b) if b != 0 else mpfr(1)
    return float(abs(a - b) / scale)


def _cplx_rel(a, b):
    scale = max(abs(b), mpfr(1e-300))
    return float(abs(a - b) / scale)


# ---------------------------------------------------------------------------
# P integrals against 3-D quadrature

def reachable_keys(nu_max=8, ell_max=6, mu_max=4, j_max=4):
    """All PKeys in the oracle grid: iota in [-4, 2], j <= 4 (0 when iota=-4), alpha >= 0."""
    out = []
    for iota, j, nu, ell, mu in product(range(-4, 3), range(j_max + 1), range(nu_max + 1),
                                        range(ell_max + 1), range(mu_max + 1)):
        key = PKey(iota, j, nu, ell, mu)
        if iota == -4 and j:
            continue
        if key.alpha < 0:
            continue
        out.append(key)
    return out


def key_grid(points=200, seed=2024):
    """Deterministic sample of ``points`` keys, always including each (iota, j) pair."""
    keys = reachable_keys()
    rng = random.Random(seed)
    by_class = {}
    for k in keys:
        by_class.setdefault((k.iota, k.logpow), []).append(k)
    chosen = [rng.choice(v) for _, v in sorted(by_class.items())]
    rest = [k for k in keys if k not in set(chosen)]
    chosen += rng.sample(rest, max(points - len(chosen), 0))
    return sorted(chosen[:points])


def integral_suite(points=200, tol=1e-10, seed=2024, progress=None):
    from .oracle import p_oracle

    cache = PCache()
    checks = []
    for n, key in enumerate(key_grid(points, seed)):
        val = p_integral(key, cache)
        ref = p_oracle(key, tol=min(tol / 10, 1e-12))
        checks.append(Check(f"P{tuple(key)}", val, ref, _rel(val, ref), tol))
        if progress:
            progress(n + 1, points)
    return checks


# ---------------------------------------------------------------------------
# exact identities between equivalent closed forms

def identity_suite(tol=1e-20):
    checks = []
    # incomplete-gamma form vs polynomial in ln s (both coefficient forms)
    for j, kappa, s in product(range(0, 5), (Fraction(-3, 2), Fraction(-1, 2), Fraction(1, 2), 2, 3),
                               ("0.7", "1.3", "2.9")):
        s = mpfr(s)
        ref = j_integral_gamma(j, kappa, s)
        for form in ("gamma", "sum"):
            val = j_integral_series(j, kappa, s, form)
            checks.append(Check(f"J-series[{form}] j={j} kappa={kappa} s={float(s)}", val, ref, _rel(val, ref), tol))
    # Q closed forms vs the integral/digamma route
    for iota, q in product((-2, -1, 0, 1, 2), range(0, 6)):
        a, b = q_factor(iota, q, "closed"), q_factor(iota, q, "integral")
        checks.append(Check(f"Q closed vs integral iota={iota} q={q}", a, b, _cplx_rel(a, b), tol))
    # unit-argument hypergeometric via Bell polynomials vs the summed series
    for a, b, n in ((Fraction(1, 2), Fraction(-1, 2), 0), (Fraction(3, 2), Fraction(-1, 2), 1),
                    (Fraction(1), Fraction(-3, 2), 2), (Fraction(5, 2), Fraction(1, 2), 1),
                    (Fraction(2), Fraction(-5, 2), 3), (Fraction(1, 2), Fraction(-7, 2), 2)):
        val = hyp_unit(a, b, n)
        with mpmath.workprec(get_precision() + 32):
            ref = mpmath.hyper([mpmath.mpf(a.numerator) / a.denominator] * (n + 1)
                               + [mpmath.mpf(b.numerator) / b.denominator],
                               [mpmath.mpf(a.numerator) / a.denominator + 1] * (n + 1), 1)
            ref = mpfr(mpmath.nstr(ref, 60, min_fixed=-1, max_fixed=1))
        checks.append(Check(f"hyp at 1 a={a} b={b} n={n}", val, ref, _rel(val, ref), tol))
    # general P with no logarithm vs the dedicated no-log formula
    for iota, nu, ell, mu in product(range(-4, 3), (0, 1, 3), (0, 2, 5), (0, 1, 4)):
        key = PKey(iota, 0, nu, ell, mu)
        if key.alpha < 0:
            continue
        val, ref = p_integral(key), p_nolog(iota, nu, ell, mu)
        checks.append(Check(f"P vs no-log formula {tuple(key)}", val, ref, _rel(val, ref), tol))
    d = polygamma(0, Fraction(3, 4)) - polygamma(0, Fraction(1, 4))
    checks.append(Check("psi(3/4) - psi(1/4) = pi", d, pi(), _rel(d, pi()), tol))
    return checks


# ---------------------------------------------------------------------------
# kinetic entries against quadrature of the Laplacian

def kinetic_pairs(seed=7, per_case=6):
    """Random (bra, ket) pairs touching every ket case and every nonzero coefficient row."""
    from .matrix_elements import SUPPORTED_KETS, kinetic_recipe

    rng = random.Random(seed)
    pairs = []
    for i, j in SUPPORTED_KETS:
        rows_seen = set()
        rows_all = set()
        # rows that can be nonzero for some (n, l, m) in the sampled box
        for n, l, m in product(range(4), range(3), range(4)):
            rows_all.update(_row_ids(kinetic_recipe((n, l, m, i, j))))
        picked = 0
        tries = 0
        while (picked < per_case or rows_seen != rows_all) and tries < 2000:
            tries += 1
            ket = (rng.randint(0, 3), rng.randint(0, 2), rng.randint(0, 3), i, j)
            bi = rng.choice((-1, 0, 1))
            bra = (rng.randint(0, 2), rng.randint(0, 1), rng.randint(0, 2), bi, 0 if bi == -1 else rng.randint(0, 2))
            new = _row_ids(kinetic_recipe(ket)) - rows_seen
            if picked >= per_case and not new:
                continue
            rows_seen |= _row_ids(kinetic_recipe(ket))
            pairs.append((bra, ket))
            picked += 1
    return pairs


def _row_ids(recipe):
    return {(di, dj, off) for _, di, dj, off in recipe}


def kinetic_suite(tol=1e-8, seed=7, per_case=6, progress=None):
    from .matrix_elements import kinetic_entry
    from .oracle import kinetic_oracle

    cache = PCache()
    checks = []
    pairs = kinetic_pairs(seed, per_case)
    for n, (bra, ket) in enumerate(pairs):
        val = kinetic_entry(bra, ket, cache)
        ref, _ = kinetic_oracle(bra, ket, tol=min(tol / 100, 1e-10))
        checks.append(Check(f"K bra={bra} ket={ket}", val, ref, _rel(val, ref), tol))
        if progress:
            progress(n + 1, len(pairs))
    return checks


def kinetic_asymmetry_check(omega=3, tol=1e-8):
    from .basis import SelectionRule, enumerate_terms
    from .matrix_elements import build_term_matrices, relative_asymmetry

    terms = enumerate_terms(SelectionRule(omega, drop_redundant=False))
    tm = build_term_matrices(terms)
    asym = relative_asymmetry(tm.K_raw)
    return Check(f"K asymmetry over {len(terms)} terms (omega={omega})", asym, 0, float(asym), tol)


# ---------------------------------------------------------------------------
# screened hydrogenic closed form

def hydrogenic_suite():
    from .eigensolve import BasisSpec, ground_state, optimize_delta
    from .matrix_elements import assemble

    checks = []
    spec = BasisSpec(terms=[(0, 0, 0, 0, 0)], composites=False)
    for Z in (1, 2, 3):
        mats = assemble([(0, 0, 0, 0, 0)], Z)
        for delta in (Fraction(27, 8), Fraction(4), Fraction(13, 10)):
            d = mpfr(delta.numerator) / delta.denominator
            e = ground_state(mats, d).energy
            ref = d * d / 4 - d * (Z - mpfr(5) / 16)
            ulps = float(abs(e - ref) / (abs(ref) * mpfr(2) ** (1 - get_precision())))
            checks.append(Check(f"E(delta={delta}) Z={Z} [ulps]", e, ref, ulps, 8))
        best = optimize_delta(spec, Z, (1, 6), 11)
        ref = -(Z - mpfr(5) / 16) ** 2
        checks.append(Check(f"optimized E Z={Z}", best.energy, ref, float(abs(best.energy - ref)), 1e-8))
    return checks
