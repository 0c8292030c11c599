from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from fockmel import IndexSetError, PCache
from fockmel.hylleraas import BIGREAL, term_jet, weighted_laplacian
from fockmel.matrix_elements import (
    SUPPORTED_KETS,
    TABLE_00,
    TABLE_10,
    BasisTerm,
    CombinedIndex,
    assemble,
    build_term_matrices,
    kinetic_entry,
    kinetic_recipe,
    kinetic_terms,
    overlap_entry,
    potential_entry,
    relative_asymmetry,
)
from fockmel.oracle import kinetic_oracle

ORIGIN = (0, 0, 0, 0, 0)


def rel(a, b):
    return abs(mpfr(a) - mpfr(b)) / abs(mpfr(b))


def test_single_term_entries():
    assert overlap_entry(ORIGIN, ORIGIN) == -32
    assert potential_entry(ORIGIN, ORIGIN, 2) == 54
    assert kinetic_entry(ORIGIN, ORIGIN) == 8


def test_table_sizes_and_supported_cases():
    assert len(TABLE_00) == 10
    assert len(TABLE_10) == 14
    assert len(SUPPORTED_KETS) == 7
    with pytest.raises(IndexSetError):
        kinetic_recipe((0, 0, 0, -1, 1))


def test_term_validation():
    assert BasisTerm(0, 1, 2, 1, 2).validate()
    for bad in [(0, 0, 0, 2, 0), (0, 0, 0, 0, 3), (0, 0, 0, -1, 1), (-1, 0, 0, 0, 1), (0, -1, 0, 0, 0)]:
        with pytest.raises(IndexSetError):
            BasisTerm(*bad).validate()


def test_combined_index_adds_componentwise():
    assert CombinedIndex.of((1, 2, 3, -1, 0), (0, 1, 1, 1, 2)) == (1, 3, 4, 0, 2)


@pytest.mark.parametrize("case", SUPPORTED_KETS)
def test_kinetic_recipe_reproduces_weighted_laplacian_pointwise(case):
    i, j = case
    s, t, u = mpfr("2.3"), mpfr("0.7"), mpfr("1.9")
    rho = gmpy2.sqrt(s * s + t * t)
    g = gmpy2.log(rho * rho / 2)
    for n in range(3):
        for l in range(4):
            for m in range(3):
                ket = (n, l, m, i, j)
                ref = weighted_laplacian(term_jet(ket, s, t, u, BIGREAL), s, t, u)
                val = mpfr(0)
                for c, di, dj, (a, b, gm) in kinetic_recipe(ket):
                    val += (mpfr(c.numerator) / c.denominator * gmpy2.exp(-s / 2) * s ** (n + a)
                            * t ** (2 * l + b) * u ** (m + gm) * rho ** di * g ** dj)
                assert rel(val, ref) < mpfr("1e-60"), ket


@pytest.mark.parametrize("bra,ket", [
    ((0, 0, 0, 0, 0), (1, 1, 0, 0, 1)),
    ((1, 0, 1, 1, 1), (0, 1, 1, 1, 2)),
    ((0, 1, 0, -1, 0), (2, 0, 1, -1, 0)),
    ((0, 0, 1, 0, 2), (1, 0, 0, 0, 2)),
])
def test_kinetic_entry_matches_quadrature(bra, ket):
    ref, err = kinetic_oracle(bra, ket, tol=1e-10)
    assert rel(kinetic_entry(bra, ket), ref) < 1e-8


def test_log_r_convention_is_rejected_by_the_oracle():
    bra, ket = (0, 0, 0, 0, 1), (0, 0, 1, 0, 1)
    ref, _ = kinetic_oracle(bra, ket, tol=1e-10, log_convention="log_r")
    assert rel(kinetic_entry(bra, ket), ref) > 1e-2


class RecordingCache(PCache):
    def __init__(self):
        super().__init__()
        self.requested = []

    def get(self, key):
        self.requested.append(key)
        return super().get(key)


def test_zero_coefficients_skip_integral_evaluation():
    ket = (0, 0, 0, 0, 0)
    recipe = kinetic_recipe(ket)
    assert all(c != 0 for c, *_ in recipe)
    # several table rows vanish for n = l = m = 0
    assert len(recipe) < len(TABLE_00)
    cache = RecordingCache()
    kinetic_entry(ORIGIN, ket, cache)
    assert cache.requested == [k for _, k in kinetic_terms(ORIGIN, ket)]


def test_recipe_coefficients_are_exact_rationals():
    for case in SUPPORTED_KETS:
        for c, *_ in kinetic_recipe((2, 1, 1) + case):
            assert isinstance(c, Fraction)


TERMS = [(0, 0, 0, 0, 0), (1, 0, 0, 0, 0), (0, 0, 1, 0, 0), (0, 1, 0, 0, 1),
         (0, 0, 0, 1, 0), (1, 0, 0, -1, 0), (0, 0, 1, 1, 2), (0, 0, 0, 0, 2)]


@pytest.fixture(scope="module")
def term_matrices():
    return build_term_matrices([BasisTerm(*t) for t in TERMS])


def test_matrices_are_symmetric(term_matrices):
    assert relative_asymmetry(term_matrices.K_raw) < mpfr("1e-60")
    for mat in (term_matrices.S, term_matrices.V_nuc, term_matrices.V_ee):
        n = len(TERMS)
        assert all(mat[a, b] == mat[b, a] for a in range(n) for b in range(n))


def test_overlap_sign_convention_gives_negative_definite_s(term_matrices):
    n = len(TERMS)
    assert all(term_matrices.S[a, a] < 0 for a in range(n))


def test_assembly_is_permutation_covariant():
    mats = assemble(TERMS[:5], 2)
    order = [3, 0, 4, 1, 2]
    perm = assemble([TERMS[k] for k in order], 2)
    for name in ("S", "U", "K"):
        a, b = getattr(mats, name), getattr(perm, name)
        for p, q in enumerate(order):
            for r, w in enumerate(order):
                assert b[p, r] == a[q, w]


def test_potential_is_linear_in_charge():
    bra, ket = (1, 0, 0, 0, 1), (0, 1, 0, 0, 0)
    v1, v2, v3 = (potential_entry(bra, ket, Z) for Z in (1, 2, 3))
    assert abs((v3 - v2) - (v2 - v1)) < mpfr("1e-70") * abs(v2)
