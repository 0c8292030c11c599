import pytest
from gmpy2 import mpfr

from fockmel import IndexSetError, PCache, PKey, p_integral, working_precision
from fockmel.integrals import f_factor, p_nolog, q_factor, quarter_digamma_difference
from fockmel.oracle import p_oracle
from fockmel.specfun import pi


def rel(a, b):
    return abs(mpfr(a) - mpfr(b)) / abs(mpfr(b))


@pytest.mark.parametrize("key,value", [
    ((0, 0, 0, 0, 0), 1),
    ((0, 0, 0, 2, 1), 8),
    ((0, 0, 2, 0, 1), 40),
    ((0, 0, 1, 0, 0), 3),
])
def test_exact_small_integrals(key, value):
    assert rel(p_integral(key), value) < mpfr("1e-70")


def test_f_factor_base_cases():
    assert f_factor(0, 0) == 1
    assert rel(f_factor(-2, 0), pi() / 4) < mpfr("1e-70")
    # int_0^1 y (1+y^2) dy = 3/4
    assert rel(f_factor(2, 1), mpfr(3) / 4) < mpfr("1e-70")


def test_general_route_matches_no_log_formula():
    for key in [(-4, 0, 3, 1, 0), (-3, 0, 0, 2, 2), (-1, 0, 1, 3, 1), (2, 0, 2, 2, 2)]:
        assert rel(p_integral(key), p_nolog(key[0], *key[2:])) < mpfr("1e-70")


@pytest.mark.parametrize("key", [
    (0, 1, 0, 0, 0),
    (-2, 2, 1, 1, 1),
    (-3, 1, 2, 3, 0),
    (1, 3, 0, 1, 2),
    (-1, 4, 2, 0, 1),
    (2, 2, 1, 5, 0),
])
def test_log_integrals_match_quadrature(key):
    assert rel(p_integral(key), p_oracle(PKey(*key), tol=1e-12)) < 1e-10


@pytest.mark.parametrize("key", [
    (-5, 0, 3, 0, 0),
    (3, 0, 0, 0, 0),
    (-4, 1, 4, 0, 0),
    (0, 5, 0, 0, 0),
    (0, -1, 0, 0, 0),
    (0, 0, 0, -1, 0),
    (-4, 0, 0, 0, 0),
])
def test_unreachable_keys_raise(key):
    with pytest.raises(IndexSetError):
        p_integral(key)


def test_index_error_is_a_value_error():
    with pytest.raises(ValueError):
        p_integral((0, 5, 0, 0, 0))


def test_quarter_digamma_difference_routes_agree():
    for q in range(5):
        a = quarter_digamma_difference(q, "rational")
        b = quarter_digamma_difference(q, "digamma")
        assert abs(a - b) < mpfr("1e-70") * max(abs(b), 1)


def test_q_factor_closed_matches_integral():
    for iota in (-1, 0, 1):
        for q in range(4):
            a, b = q_factor(iota, q, "closed"), q_factor(iota, q, "integral")
            assert abs(a - b) <= mpfr("1e-60") * max(abs(b), 1)


def test_cache_hits_are_identical():
    cache = PCache()
    key = PKey(-1, 2, 1, 2, 1)
    first = p_integral(key, cache)
    second = p_integral(key, cache)
    assert first == second == p_integral(key)
    assert (cache.hits, cache.misses) == (1, 1)
    assert key in cache and len(cache) == 1


def test_cache_clears_on_precision_change():
    cache = PCache()
    key = PKey(0, 1, 0, 1, 0)
    low = None
    with working_precision(128):
        low = p_integral(key, cache)
        assert low.precision == 128
    high = p_integral(key, cache)
    assert high.precision == 256
    assert cache.misses == 2
    assert rel(low, high) < mpfr(2) ** -120


def test_populate_with_workers_matches_serial():
    keys = [PKey(i, j, n, 1, 1) for i in (-2, 0, 1) for j in (0, 1) for n in (0, 2)]
    serial, parallel = PCache(), PCache()
    assert serial.populate(keys) == len(keys)
    assert parallel.populate(keys, workers=2) == len(keys)
    for k in keys:
        assert serial.values[k] == parallel.values[k]
    assert parallel.populate(keys, workers=2) == 0


def test_odd_and_even_t_powers_both_supported():
    for ell in range(6):
        key = PKey(-2, 1, 1, ell, 1)
        assert rel(p_integral(key), p_oracle(key, tol=1e-12)) < 1e-10


def test_precision_controls_result_width():
    with working_precision(512):
        v = p_integral((0, 2, 1, 1, 1))
    assert v.precision == 512
    assert rel(v, p_integral((0, 2, 1, 1, 1))) < mpfr(2) ** -250
