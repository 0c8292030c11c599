"""Individual basis terms and the sixteen composite Fock-expansion functions.

Composite functions are written in the scaled coordinates with
r = sqrt((s^2+t^2)/2) and mapped onto basis terms with

    r      -> 2^(-1/2) (s^2+t^2)^(1/2)      (i = +1)
    1/r    -> 2^(1/2)  (s^2+t^2)^(-1/2)     (i = -1)
    r^2    -> (s^2+t^2)/2
    ln r   -> g/2,  g = ln((s^2+t^2)/2).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpfr

from .hylleraas import BIGREAL, term_value
from .matrix_elements import BasisTerm
from .specfun import format_decimal, pi, sqrt2, to_real


@dataclass
class BasisFunction:
    """A fixed linear combination of basis terms."""

    terms: list
    label: str = ""

    def __post_init__(self):
        merged = {}
        for coef, term in self.terms:
            term = BasisTerm(*term).validate()
            merged[term] = merged.get(term, 0) + to_real(coef)
        self.terms = [(c, t) for t, c in merged.items() if c != 0]
        if not self.terms:
            raise ValueError(f"basis function {self.label!r} has no nonzero terms")

    def value(self, s, t, u):
        """Pointwise value exp(-s/2) * sum of coefficient * term."""
        return sum((c * term_value(term, s, t, u, BIGREAL) for c, term in self.terms), mpfr(0))

    def to_dict(self, digits=40):
        return {
            "label": self.label,
            "terms": [{"term": list(t), "coefficient": format_decimal(c, digits)} for c, t in self.terms],
        }


def as_function(obj):
    if isinstance(obj, BasisFunction):
        return obj
    term = BasisTerm(*obj)
    return BasisFunction([(1, term)], label=term_label(term))


def term_label(term):
    return "({},{},{},{},{})".format(*term)


@dataclass(frozen=True)
class SelectionRule:
    """Individual terms with n + 2l + m + i <= omega.

    ``drop_redundant`` removes the i=+1, j=0 terms: each equals the sum of two
    i=-1 terms admitted by the same cutoff, so they add nothing to the span.
    """

    omega: int = 6
    n_min: int = 0
    j_max: int = 2
    drop_redundant: bool = True

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.n_min > 0:
            raise ValueError("n_min must be <= 0")
        if not 0 <= self.j_max <= 2:
            raise ValueError("j_max must be in 0..2")

    def admits(self, term):
        n, l, m, i, j = term
        if n + 2 * l + m + i > self.omega or j > self.j_max or n < self.n_min:
            return False
        if i == -1 and j or n < 0 and j:
            return False
        if self.drop_redundant and i == 1 and j == 0:
            return False
        return True


def enumerate_terms(rule):
    out = []
    top = rule.omega + 1
    span = top - rule.n_min
    for j in range(rule.j_max + 1):
        for i in (-1, 0, 1):
            for n in range(rule.n_min, top + 1):
                for l in range(span // 2 + 1):
                    for m in range(span + 1):
                        term = BasisTerm(n, l, m, i, j)
                        if rule.admits(term):
                            out.append(term)
    return out


def enumerate_individual(rule):
    """One single-term function per admissible term, ordered by (j, i, n, l, m)."""
    return [as_function(t) for t in enumerate_terms(rule)]


def _fock_log_coefficient(Z, delta):
    return to_real(Z) * (pi() - 2) * to_real(delta) ** 2 / (3 * pi())


def composite_set(Z, delta):
    """The sixteen composite functions at charge Z and scale delta."""
    Z, delta = to_real(Z), to_real(delta)
    if Z <= 0 or delta <= 0:
        raise ValueError("Z and delta must be positive")
    r2 = sqrt2()
    ir2 = 1 / r2
    k = _fock_log_coefficient(Z, delta)
    half = Fraction(1, 2)
    spec = [
        ("1+r psi10+r^2 psi21 ln r", [
            (1, (0, 0, 0, 0, 0)), (-(delta * Z - half), (1, 0, 0, 0, 0)), (delta / 2, (0, 0, 1, 0, 0)),
            (-k / 4, (2, 0, 0, 0, 1)), (-k / 4, (0, 1, 0, 0, 1)), (k / 2, (0, 0, 2, 0, 1))]),
        ("sr", [(ir2, (1, 0, 0, 1, 0))]),
        ("ur", [(ir2, (0, 0, 1, 1, 0))]),
        ("su", [(1, (1, 0, 1, 0, 0))]),
        ("s^2", [(1, (2, 0, 0, 0, 0))]),
        ("u^3/r", [(r2, (0, 0, 3, -1, 0))]),
        ("t^2", [(1, (0, 1, 0, 0, 0))]),
        ("u^2", [(1, (0, 0, 2, 0, 0))]),
        ("sr^2", [(half, (3, 0, 0, 0, 0)), (half, (1, 1, 0, 0, 0))]),
        ("ur^2", [(half, (2, 0, 1, 0, 0)), (half, (0, 1, 1, 0, 0))]),
        ("s^2u", [(1, (2, 0, 1, 0, 0))]),
        ("s^3", [(1, (3, 0, 0, 0, 0))]),
        ("u^3", [(1, (0, 0, 3, 0, 0))]),
        ("t^2r", [(ir2, (0, 1, 0, 1, 0))]),
        ("r(r^2-u^2)", [(ir2 / 2, (2, 0, 0, 1, 0)), (ir2 / 2, (0, 1, 0, 1, 0)), (-ir2, (0, 0, 2, 1, 0))]),
        ("[6(Zs-u)(r^2-u^2)-u^3] ln r", [
            (3 * Z / 2, (3, 0, 0, 0, 1)), (3 * Z / 2, (1, 1, 0, 0, 1)), (-3 * Z, (1, 0, 2, 0, 1)),
            (-half * 3, (2, 0, 1, 0, 1)), (-half * 3, (0, 1, 1, 0, 1)), (half * 5, (0, 0, 3, 0, 1))]),
    ]
    return [BasisFunction(list(terms), label=f"phi{idx}: {name}")
            for idx, (name, terms) in enumerate(spec, start=1)]


def full_basis(Z, delta, rule=None, composites=True):
    """Composites (optional) followed by the enumerated individual terms."""
    rule = rule if rule is not None else SelectionRule()
    out = composite_set(Z, delta) if composites else []
    return out + enumerate_individual(rule)


def basis_hash(basis, digits=40):
    """Short stable digest of a basis listing."""
    h = hashlib.sha256()
    for fn in basis:
        for c, t in fn.terms:
            h.update(f"{fn.label}|{tuple(t)}|{format(c, f'.{digits}g')};".encode())
    return h.hexdigest()[:16]
