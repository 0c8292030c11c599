import gmpy2
import pytest
from gmpy2 import mpfr

from fockmel import IndexSetError
from fockmel.basis import (
    BasisFunction,
    SelectionRule,
    as_function,
    basis_hash,
    composite_set,
    enumerate_terms,
    full_basis,
)
from fockmel.specfun import pi, sqrt2

POINT = (mpfr("1.7"), mpfr("0.4"), mpfr("0.9"))


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.parametrize("omega,count", [(0, 6), (1, 18), (2, 40), (3, 75), (4, 126), (5, 196), (6, 288)])
def test_individual_term_counts(omega, count):
    assert len(enumerate_terms(SelectionRule(omega))) == count


def test_full_basis_size_and_distinct_terms():
    basis = full_basis(2, 4)
    assert len(basis) == 16 + 288
    distinct = {t for fn in basis for _, t in fn.terms}
    assert len(distinct) == 293


def test_enumerated_terms_respect_the_rule():
    rule = SelectionRule(5)
    terms = enumerate_terms(rule)
    assert len(set(terms)) == len(terms)
    for n, l, m, i, j in terms:
        assert n + 2 * l + m + i <= 5
        assert not (i == -1 and j)
        assert not (i == 1 and j == 0)
    assert terms == sorted(terms, key=lambda t: (t.j, t.i, t.n, t.l, t.m))


def test_redundant_terms_lie_in_span_of_inverse_rho_terms():
    # rho = (s^2 + t^2) / rho, so an i=+1 term is the sum of two i=-1 terms
    s, t, u = POINT
    for n, l, m in [(0, 0, 0), (1, 1, 2), (2, 0, 1)]:
        plus = as_function((n, l, m, 1, 0)).value(s, t, u)
        pair = as_function((n + 2, l, m, -1, 0)).value(s, t, u) + as_function((n, l + 1, m, -1, 0)).value(s, t, u)
        assert rel(plus, pair) < mpfr("1e-70")
    kept = enumerate_terms(SelectionRule(3, drop_redundant=False))
    assert len(kept) > 75


def test_negative_n_only_without_logs():
    terms = enumerate_terms(SelectionRule(2, n_min=-1))
    assert any(t.n == -1 for t in terms)
    assert all(t.j == 0 for t in terms if t.n < 0)


def test_rule_validation():
    with pytest.raises(ValueError):
        SelectionRule(-1)
    with pytest.raises(ValueError):
        SelectionRule(3, n_min=1)
    with pytest.raises(ValueError):
        SelectionRule(3, j_max=3)


def test_basis_function_merges_and_validates():
    fn = BasisFunction([(1, (0, 0, 0, 0, 0)), (2, (0, 0, 0, 0, 0)), (0, (1, 0, 0, 0, 0))])
    assert fn.terms == [(3, (0, 0, 0, 0, 0))]
    with pytest.raises(ValueError):
        BasisFunction([(1, (0, 0, 0, 0, 0)), (-1, (0, 0, 0, 0, 0))])
    with pytest.raises(IndexSetError):
        BasisFunction([(1, (0, 0, 0, -1, 1))])


def _direct(Z, delta, s, t, u):
    r = gmpy2.sqrt((s * s + t * t) / 2)
    lr = gmpy2.log(r)
    k = Z * (pi() - 2) * delta ** 2 / (3 * pi())
    return [
        1 - (delta * Z - mpfr(1) / 2) * s + delta / 2 * u - k * (r * r - u * u) * lr,
        s * r, u * r, s * u, s * s, u ** 3 / r, t * t, u * u, s * r * r, u * r * r,
        s * s * u, s ** 3, u ** 3, t * t * r, r * (r * r - u * u),
        (6 * (Z * s - u) * (r * r - u * u) - u ** 3) * lr,
    ]


@pytest.mark.parametrize("Z,delta", [(1, mpfr("1.5")), (2, mpfr(4)), (3, mpfr("6.25"))])
def test_composites_match_direct_formulas(Z, delta):
    s, t, u = POINT
    funcs = composite_set(Z, delta)
    assert len(funcs) == 16
    damp = gmpy2.exp(-s / 2)
    for k, (fn, ref) in enumerate(zip(funcs, _direct(mpfr(Z), delta, s, t, u)), start=1):
        assert fn.label.startswith(f"phi{k}:")
        assert rel(fn.value(s, t, u), damp * ref) < mpfr("1e-70"), fn.label


def test_composite_coefficients():
    funcs = composite_set(2, 4)
    assert funcs[1].terms == [(1 / sqrt2(), (1, 0, 0, 1, 0))]
    assert funcs[4].terms == [(1, (2, 0, 0, 0, 0))]


def test_composites_reject_nonpositive_parameters():
    with pytest.raises(ValueError):
        composite_set(0, 1)
    with pytest.raises(ValueError):
        composite_set(2, -1)


def test_hash_is_deterministic_and_sensitive():
    a, b = full_basis(2, 4, SelectionRule(2)), full_basis(2, 4, SelectionRule(2))
    assert basis_hash(a) == basis_hash(b)
    assert basis_hash(a) != basis_hash(full_basis(2, mpfr("4.5"), SelectionRule(2)))
    assert basis_hash(a) != basis_hash(full_basis(2, 4, SelectionRule(3)))


def test_to_dict_lists_terms():
    d = as_function((1, 0, 2, 0, 1)).to_dict(10)
    assert d == {"label": "(1,0,2,0,1)", "terms": [{"term": [1, 0, 2, 0, 1], "coefficient": "1"}]}
