"""Overlap, potential and kinetic matrix elements between basis terms.

Every entry is a short linear combination of basic integrals
P_{iota,j}(nu, ell, mu) with integer indices built from the combined index
(N, L, M, I, J) = bra + ket. All integrals carry the volume weight
u (t^2 - s^2), which is negative on the domain; hence S is negative definite
and the physical eigenproblem is posed as (delta^2 K - delta U) C = E (-S) C.

The logarithm inside the terms is g = ln((s^2+t^2)/2) = 2 ln r.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from gmpy2 import mpfr

from .errors import IndexSetError
from .integrals import PCache, PKey
from .specfun import to_real

log = logging.getLogger(__name__)


class BasisTerm(NamedTuple):
    """exp(-s/2) s^n t^(2l) u^m (s^2+t^2)^(i/2) g^j."""

    n: int
    l: int
    m: int
    i: int
    j: int

    def validate(self):
        n, l, m, i, j = self
        if i not in (-1, 0, 1):
            raise IndexSetError(f"i={i} not in {{-1, 0, 1}}")
        if j not in (0, 1, 2):
            raise IndexSetError(f"j={j} not in {{0, 1, 2}}")
        if l < 0 or m < 0:
            raise IndexSetError(f"negative l or m in {tuple(self)}")
        if i == -1 and j:
            raise IndexSetError("i=-1 is only allowed with j=0")
        if n < 0 and j:
            raise IndexSetError("negative n is only allowed with j=0")
        return self


class CombinedIndex(NamedTuple):
    N: int
    L: int
    M: int
    I: int
    J: int

    @classmethod
    def of(cls, bra, ket):
        return cls(*(a + b for a, b in zip(bra, ket)))


class KineticCoeffRow(NamedTuple):
    """One kinetic row: b(n, l, m) and the offsets (alpha, beta, gamma)."""

    b: object
    alpha: int
    beta: int
    gamma: int


_Q = Fraction(1, 4)

# b_k^{0,0}(n, l, m) and {alpha, beta, gamma}, k = 1..10
TABLE_00 = (
    KineticCoeffRow(lambda n, l, m: (2 * l + 2 * m + n + 3) * (2 * l - n), 0, 0, 1),
    KineticCoeffRow(lambda n, l, m: n + m + 2, 1, 0, 1),
    KineticCoeffRow(lambda n, l, m: -m * (4 * l + m + 1), 2, 0, -1),
    KineticCoeffRow(lambda n, l, m: m * (m + 2 * n + 1), 0, 2, -1),
    KineticCoeffRow(lambda n, l, m: n * (n - 1), -2, 2, 1),
    KineticCoeffRow(lambda n, l, m: -2 * l * (2 * l - 1), 2, -2, 1),
    KineticCoeffRow(lambda n, l, m: -n, -1, 2, 1),
    KineticCoeffRow(lambda n, l, m: -m, 1, 2, -1),
    KineticCoeffRow(lambda n, l, m: _Q, 0, 2, 1),
    KineticCoeffRow(lambda n, l, m: -_Q, 2, 0, 1),
)

# b_k^{1,0}(n, l, m) and {alpha, beta, gamma}, k = 1..14
TABLE_10 = (
    KineticCoeffRow(lambda n, l, m: 5 + 4 * l * l + 2 * m + 2 * l * (2 * m + 5) - 2 * n * (m + 1), 0, 2, 1),
    # 4l(m+1), not 4l(l+m): the two agree only for l <= 1 and the Laplacian gives the former
    KineticCoeffRow(lambda n, l, m: 4 * l * (m + 1) - 2 * m * (n + 1) - n * (n + 5) - 5, 2, 0, 1),
    KineticCoeffRow(lambda n, l, m: -m * (4 * l + m + 1), 4, 0, -1),
    KineticCoeffRow(lambda n, l, m: m * (m + 2 * n + 1), 0, 4, -1),
    KineticCoeffRow(lambda n, l, m: n * (n - 1), -2, 4, 1),
    KineticCoeffRow(lambda n, l, m: -2 * l * (2 * l - 1), 4, -2, 1),
    KineticCoeffRow(lambda n, l, m: -n, -1, 4, 1),
    KineticCoeffRow(lambda n, l, m: -m, 1, 4, -1),
    KineticCoeffRow(lambda n, l, m: _Q, 0, 4, 1),
    KineticCoeffRow(lambda n, l, m: -_Q, 4, 0, 1),
    KineticCoeffRow(lambda n, l, m: 2 * m * (n - 2 * l), 2, 2, -1),
    KineticCoeffRow(lambda n, l, m: -m, 3, 2, -1),
    KineticCoeffRow(lambda n, l, m: n + m + 3, 3, 0, 1),
    KineticCoeffRow(lambda n, l, m: m + 1, 1, 2, 1),
)

SUPPORTED_KETS = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (-1, 0))


def _table_terms(table, rows, di, dj, n, l, m):
    for k in rows:
        row = table[k - 1]
        yield row.b(n, l, m), di, dj, (row.alpha, row.beta, row.gamma)


def _pair_difference(coef, di, dj, first, second):
    yield coef, di, dj, first
    yield -coef, di, dj, second


def kinetic_recipe(ket):
    """(coefficient, d_iota, d_logpow, (alpha, beta, gamma)) for a ket term.

    The basic integral of each entry is
    P_{i'+d_iota, j'+d_logpow}(N + alpha, 2L + beta, M + gamma) with the bra's
    (i', j'). Coefficients are exact rationals; zero ones are dropped.
    """
    n, l, m, i, j = ket
    key = (i, j)
    out = []
    if key == (0, 0):
        out += _table_terms(TABLE_00, range(1, 11), 0, 0, n, l, m)
    elif key == (0, 1):
        out += _table_terms(TABLE_00, range(1, 11), 0, 1, n, l, m)
        out += _pair_difference(2, -2, 0, (3, 0, 1), (1, 2, 1))
        out += _pair_difference(4 * (2 * l + m + n + 2), -2, 0, (0, 2, 1), (2, 0, 1))
    elif key == (1, 0):
        out += _table_terms(TABLE_10, range(1, 15), -1, 0, n, l, m)
    elif key == (-1, 0):
        out += _table_terms(TABLE_10, range(3, 13), -3, 0, n, l, m)
        out += [
            (m + n + 1, -3, 0, (3, 0, 1)),
            (m + 3, -3, 0, (1, 2, 1)),
            (4 * l * l - 2 * m + 2 * l * (2 * m + 1) - 2 * n * (m + 3) - 3, -3, 0, (0, 2, 1)),
            (4 * l * (m + 3) - 2 * m * (n - 1) - n * (n + 1) + 3, -3, 0, (2, 0, 1)),
        ]
    elif key == (1, 1):
        out += _table_terms(TABLE_10, range(1, 15), -1, 1, n, l, m)
        out += _pair_difference(2, -1, 0, (3, 0, 1), (1, 2, 1))
        out += _pair_difference(4 * (2 * l + m + n + 3), -1, 0, (0, 2, 1), (2, 0, 1))
    elif key == (1, 2):
        out += _table_terms(TABLE_10, range(1, 15), -1, 2, n, l, m)
        out += _pair_difference(8, -1, 0, (0, 2, 1), (2, 0, 1))
        out += _pair_difference(4, -1, 1, (3, 0, 1), (1, 2, 1))
        out += _pair_difference(8 * (2 * l + m + n + 3), -1, 1, (0, 2, 1), (2, 0, 1))
    elif key == (0, 2):
        out += _table_terms(TABLE_10, range(3, 13), -2, 2, n, l, m)
        out += [
            (m + n + 2, -2, 2, (3, 0, 1)),
            (m + 2, -2, 2, (1, 2, 1)),
            (2 * (l * (2 * m + 2 * l + 3) - n * (m + 2)), -2, 2, (0, 2, 1)),
            (4 * l * (m + 2) - n * (2 * m + n + 3), -2, 2, (2, 0, 1)),
        ]
        out += _pair_difference(8 * (2 * l + m + n + 2), -2, 1, (0, 2, 1), (2, 0, 1))
        out += _pair_difference(4, -2, 1, (3, 0, 1), (1, 2, 1))
        out += _pair_difference(8, -2, 0, (0, 2, 1), (2, 0, 1))
    else:
        raise IndexSetError(f"no kinetic formula for ket (i, j) = {key}")
    return [(Fraction(c), di, dj, off) for c, di, dj, off in out if c != 0]


def kinetic_terms(bra, ket):
    """Non-zero (coefficient, PKey) pairs of the kinetic entry."""
    bra, ket = BasisTerm(*bra), BasisTerm(*ket)
    N, L, M, _, _ = CombinedIndex.of(bra, ket)
    out = []
    for coef, di, dj, (a, b, g) in kinetic_recipe(ket):
        key = PKey(bra.i + di, bra.j + dj, N + a, 2 * L + b, M + g)
        out.append((coef, key))
    return out


def _combine(terms, cache):
    acc = mpfr(0)
    for coef, key in terms:
        val = cache.get(key)
        if coef.denominator == 1:
            acc += int(coef) * val
        else:
            acc += val * int(coef.numerator) / int(coef.denominator)
    return acc


def overlap_terms(bra, ket):
    N, L, M, I, J = CombinedIndex.of(BasisTerm(*bra), BasisTerm(*ket))
    return [(Fraction(1), PKey(I, J, N, 2 * L + 2, M + 1)),
            (Fraction(-1), PKey(I, J, N + 2, 2 * L, M + 1))]


def nuclear_terms(bra, ket):
    """Terms of the potential entry that scale with Z (divided by Z)."""
    N, L, M, I, J = CombinedIndex.of(BasisTerm(*bra), BasisTerm(*ket))
    return [(Fraction(4), PKey(I, J, N + 1, 2 * L, M + 1))]


def repulsion_terms(bra, ket):
    N, L, M, I, J = CombinedIndex.of(BasisTerm(*bra), BasisTerm(*ket))
    return [(Fraction(1), PKey(I, J, N, 2 * L + 2, M)),
            (Fraction(-1), PKey(I, J, N + 2, 2 * L, M))]


def _cache(cache):
    return cache if cache is not None else PCache()


def overlap_entry(bra, ket, cache=None):
    """S entry: P(N, 2L+2, M+1) - P(N+2, 2L, M+1)."""
    return _combine(overlap_terms(bra, ket), _cache(cache))


def potential_entry(bra, ket, Z, cache=None):
    """U entry: 4Z P(N+1, 2L, M+1) + P(N, 2L+2, M) - P(N+2, 2L, M)."""
    cache = _cache(cache)
    return to_real(Z) * _combine(nuclear_terms(bra, ket), cache) + _combine(repulsion_terms(bra, ket), cache)


def kinetic_entry(bra, ket, cache=None):
    """K entry: <bra| u(t^2 - s^2) nabla^2/(2 delta^2) |ket>."""
    return _combine(kinetic_terms(bra, ket), _cache(cache))


# ---------------------------------------------------------------------------
# assembly

def _obj_zeros(n, m=None):
    out = np.empty((n, n if m is None else m), dtype=object)
    out.fill(mpfr(0))
    return out


@dataclass
class TermMatrices:
    """Delta- and Z-free matrices over a list of distinct basis terms."""

    terms: list
    S: np.ndarray
    V_nuc: np.ndarray
    V_ee: np.ndarray
    K_raw: np.ndarray
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {t: k for k, t in enumerate(self.terms)}

    @property
    def K(self):
        return symmetrize(self.K_raw)

    def U(self, Z):
        z = to_real(Z)
        return self.V_nuc * z + self.V_ee


def symmetrize(a):
    return (a + a.T) / 2


def relative_asymmetry(a):
    """max |a_ij - a_ji| / max |a_ij|."""
    diff = max(abs(x) for x in (a - a.T).ravel()) if a.size else mpfr(0)
    scale = max(abs(x) for x in a.ravel()) if a.size else mpfr(1)
    return diff / scale if scale else diff


def required_keys(terms):
    """Every PKey needed for the matrices over ``terms``."""
    keys = set()
    for a, bra in enumerate(terms):
        for ket in terms[a:]:
            for fn in (overlap_terms, nuclear_terms, repulsion_terms):
                keys.update(k for _, k in fn(bra, ket))
            keys.update(k for _, k in kinetic_terms(bra, ket))
            keys.update(k for _, k in kinetic_terms(ket, bra))
    return keys


def build_term_matrices(terms, cache=None, progress=None, threads=1):
    """Overlap, potential (split by Z) and unsymmetrized kinetic over ``terms``.

    With ``threads`` > 1 the needed integrals are first evaluated in that many
    worker processes; the matrices are identical either way.
    """
    cache = _cache(cache)
    terms = [BasisTerm(*t).validate() for t in terms]
    n = len(terms)
    if threads > 1:
        cache.populate(required_keys(terms), workers=threads)
    S, Vn, Ve, K = (_obj_zeros(n) for _ in range(4))
    for a in range(n):
        bra = terms[a]
        for b in range(a, n):
            ket = terms[b]
            S[a, b] = S[b, a] = _combine(overlap_terms(bra, ket), cache)
            Vn[a, b] = Vn[b, a] = _combine(nuclear_terms(bra, ket), cache)
            Ve[a, b] = Ve[b, a] = _combine(repulsion_terms(bra, ket), cache)
            K[a, b] = _combine(kinetic_terms(bra, ket), cache)
            if b != a:
                K[b, a] = _combine(kinetic_terms(ket, bra), cache)
        if progress:
            progress(a + 1, n)
    return TermMatrices(terms, S, Vn, Ve, K)


@dataclass
class MatrixSet:
    """Basis-function matrices S, U, K with the system parameters."""

    S: np.ndarray
    U: np.ndarray
    K: np.ndarray
    Z: object
    basis: list
    delta: object = None
    k_asymmetry: object = None
    log_convention: str = "g=ln((s^2+t^2)/2)"
    sign_convention: str = "(delta^2 K - delta U) C = E (-S) C"


def project(tm, basis):
    """Return a function contracting term-space matrices onto ``basis``.

    Each basis function touches only a few terms, so rows and then columns are
    combined directly instead of forming dense coefficient products.
    """
    expansion = [[(coef, tm.index[BasisTerm(*term)]) for coef, term in fn.terms] for fn in basis]

    def combine(mat, axis):
        take = mat if axis == 0 else mat.T
        rows = []
        for fn in expansion:
            coef, k = fn[0]
            row = take[k] * coef
            for coef, k in fn[1:]:
                row = row + take[k] * coef
            rows.append(row)
        out = np.array(rows, dtype=object).reshape(len(rows), take.shape[1])
        return out if axis == 0 else out.T

    def contract(mat):
        return combine(combine(mat, 0), 1)

    return contract


def assemble(basis, Z, cache=None, term_matrices=None, threads=1):
    """MatrixSet for a list of BasisFunction (or bare terms) at charge Z.

    ``term_matrices`` may be passed to reuse integrals over a superset of the
    basis terms (e.g. during a delta scan where only composite coefficients
    change).
    """
    from .basis import as_function  # local import: basis depends on this module

    basis = [as_function(f) for f in basis]
    if not basis:
        raise ValueError("basis is empty")
    if term_matrices is None:
        terms = []
        seen = set()
        for fn in basis:
            for _, t in fn.terms:
                t = BasisTerm(*t)
                if t not in seen:
                    seen.add(t)
                    terms.append(t)
        term_matrices = build_term_matrices(terms, cache, threads=threads)
    contract = project(term_matrices, basis)
    K_raw = contract(term_matrices.K_raw)
    asym = relative_asymmetry(K_raw)
    if asym > 1e-8:
        log.warning("kinetic matrix asymmetry %.3e before symmetrization", float(asym))
    return MatrixSet(
        S=contract(term_matrices.S),
        U=contract(term_matrices.U(Z)),
        K=symmetrize(K_raw),
        Z=to_real(Z),
        basis=basis,
        k_asymmetry=asym,
    )
