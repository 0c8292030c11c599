"""Special-function building blocks at working precision.

All real quantities are ``gmpy2.mpfr`` values (the BigReal carrier). The
working precision is a process-wide setting; every cached quantity is keyed
by the precision it was computed at, so changing precision never returns
stale values.
"""

from __future__ import annotations

import contextlib
import os
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 256
MIN_PRECISION = 64
PRECISION_ENV = "FOCKMEL_PRECISION"


def _initial_precision():
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION
    bits = int(raw)
    if bits < MIN_PRECISION:
        raise ValueError(f"{PRECISION_ENV}={bits} is below {MIN_PRECISION} bits")
    return bits


def get_precision():
    """Current working precision in bits."""
    return gmpy2.get_context().precision


def set_precision(bits):
    """Set the working precision (mantissa bits) for all subsequent math."""
    bits = int(bits)
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits, got {bits}")
    gmpy2.get_context().precision = bits


@contextlib.contextmanager
def working_precision(bits):
    """Temporarily switch the working precision."""
    old = get_precision()
    set_precision(bits)
    try:
        yield
    finally:
        set_precision(old)


def to_real(x):
    """Convert int, Fraction, str, float or mpfr to a BigReal at working precision."""
    if isinstance(x, Fraction):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    return mpfr(x)


def round_to(x, bits=None):
    """Round ``x`` to ``bits`` (default: working precision)."""
    return mpfr(x, bits or get_precision())


def format_decimal(x, digits=30):
    """Decimal string with ``digits`` significant digits (plain for exact integers)."""
    x = mpfr(x)
    if x.is_integer() and abs(x) < mpfr(10) ** digits:
        return str(int(x))
    return format(x, f".{digits}g")


set_precision(_initial_precision())


# ---------------------------------------------------------------------------
# constants

@lru_cache(maxsize=None)
def _constants(prec):
    with working_precision(prec):
        sqrt2 = gmpy2.sqrt(mpfr(2))
        return {
            "ln2": gmpy2.const_log2(),
            "pi": gmpy2.const_pi(),
            "sqrt2": sqrt2,
            "euler_gamma": gmpy2.const_euler(),
            "arccosh_sqrt2": gmpy2.log(1 + sqrt2),
        }


class MathConstants:
    """Working-precision constants: ln 2, pi, sqrt 2, Euler's gamma, ln(1+sqrt 2)."""

    def __init__(self, prec=None):
        self.precision = prec or get_precision()
        vals = _constants(self.precision)
        self.ln2 = vals["ln2"]
        self.pi = vals["pi"]
        self.sqrt2 = vals["sqrt2"]
        self.euler_gamma = vals["euler_gamma"]
        self.arccosh_sqrt2 = vals["arccosh_sqrt2"]

    def zeta(self, n):
        return zeta(n)


def constants():
    return MathConstants()


def ln2():
    return _constants(get_precision())["ln2"]


def pi():
    return _constants(get_precision())["pi"]


def sqrt2():
    return _constants(get_precision())["sqrt2"]


def euler_gamma():
    return _constants(get_precision())["euler_gamma"]


def arccosh_sqrt2():
    """ln(1 + sqrt 2), the value of i*arccos(sqrt 2) up to sign."""
    return _constants(get_precision())["arccosh_sqrt2"]


@lru_cache(maxsize=None)
def _zeta(n, prec):
    with working_precision(prec):
        return gmpy2.zeta(mpfr(n))


def zeta(n):
    """Riemann zeta at integer n >= 2."""
    if n < 2:
        raise ValueError("zeta(n) needs n >= 2")
    return _zeta(int(n), get_precision())


# ---------------------------------------------------------------------------
# exact combinatorics

def factorial_exact(n):
    return factorial(n)


def binomial(n, k):
    return comb(n, k) if 0 <= k <= n else 0


def double_factorial(n):
    """n!! for n >= -1, with (-1)!! = 0!! = 1."""
    if n < -1:
        raise ValueError("double factorial defined here for n >= -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def pow2_half(k):
    """2**(k/2) for integer k, exact in the rational part."""
    if k % 2 == 0:
        return to_real(Fraction(2) ** (k // 2))
    return to_real(Fraction(2) ** ((k - 1) // 2)) * sqrt2()


# ---------------------------------------------------------------------------
# polygamma

@lru_cache(maxsize=None)
def _polygamma_int(n, m, prec):
    with working_precision(prec + 16):
        if n == 0:
            val = -euler_gamma() + to_real(sum(Fraction(1, k) for k in range(1, m + 1)))
        else:
            tail = to_real(sum(Fraction(1, k ** (n + 1)) for k in range(1, m + 1)))
            val = (-1) ** n * factorial(n) * (tail - zeta(n + 1))
    return mpfr(val, prec)


def polygamma_int(n, m):
    """psi^(n)(m + 1) for integers n >= 0, m >= 0."""
    if n < 0 or m < 0:
        raise ValueError("polygamma_int needs n >= 0 and m >= 0")
    return _polygamma_int(int(n), int(m), get_precision())


@lru_cache(maxsize=None)
def _polygamma_half(n, q, prec):
    with working_precision(prec + 16):
        if q >= 0:
            if n == 0:
                s = sum(Fraction(1, k) for k in range(1, q)) + sum(
                    Fraction(2, k) for k in range(q, 2 * q))
                val = to_real(s) - 2 * ln2() - euler_gamma()
            else:
                s = sum(Fraction(1, (2 * k - 1) ** (n + 1)) for k in range(1, q + 1))
                psi1 = (-1) ** (n + 1) * factorial(n) * zeta(n + 1)
                val = (2 ** (n + 1) - 1) * psi1 + factorial(n) * 2 ** (n + 1) * to_real(s)
        else:
            # psi(x + 1) = psi(x) + (-1)^n n! / x^(n+1), climbing from x = 1/2
            val = _polygamma_half(n, 0, prec + 16)
            x = Fraction(1, 2)
            step = Fraction(0)
            for _ in range(-q):
                step += Fraction((-1) ** n * factorial(n)) / x ** (n + 1)
                x += 1
            val = val + to_real(step)
    return mpfr(val, prec)


def polygamma_half(n, q):
    """psi^(n)(1/2 - q) for integer q (negative q gives 1/2 + |q|)."""
    if n < 0:
        raise ValueError("polygamma order must be non-negative")
    return _polygamma_half(int(n), int(q), get_precision())


def polygamma(n, x):
    """psi^(n)(x) for x a positive integer or any (non-integer) half-integer."""
    x = Fraction(x)
    if x.denominator == 1:
        if x <= 0:
            raise ValueError(f"polygamma pole at {x}")
        return polygamma_int(n, int(x) - 1)
    if x.denominator == 2:
        return polygamma_half(n, int(Fraction(1, 2) - x))
    if x.denominator == 4:
        return _digamma_quarter(x) if n == 0 else _raise_quarter(n)
    raise ValueError(f"polygamma at {x} is outside the supported lattice")


def _raise_quarter(n):
    raise ValueError("only the digamma is supported at quarter-integer arguments")


def _digamma_quarter(x):
    # Gauss: psi(1/4) = -gamma - pi/2 - 3 ln2, psi(3/4) = -gamma + pi/2 - 3 ln2
    base = x - (x.numerator // x.denominator)
    shift = x - base
    with working_precision(get_precision() + 16):
        sign = -1 if base == Fraction(1, 4) else 1
        val = -euler_gamma() + sign * pi() / 2 - 3 * ln2()
        if shift > 0:
            val += to_real(sum(1 / (base + k) for k in range(int(shift))))
        elif shift < 0:
            val -= to_real(sum(1 / (base - k) for k in range(1, int(-shift) + 1)))
    return round_to(val)


def polygamma_diff(m, iota, q):
    """psi^(m)(iota/2 + 1) - psi^(m)((iota + 3)/2 + q) in the closed form used by
    the even-power coefficients (valid for iota >= -1)."""
    if iota < -1:
        raise ValueError("closed-form polygamma difference needs iota >= -1")
    if iota % 2:
        k0, k1 = 1, (iota - 1) // 2
        k2 = k1 + q
    else:
        k0, k1, k2 = -1, iota // 2 + q, iota // 2 - 1
    with working_precision(get_precision() + 16):
        s = 2 ** (m + 1) * sum(Fraction(1, (2 * k + 1) ** (m + 1)) for k in range(k1 + 1))
        s -= sum(Fraction(1, (k + 1) ** (m + 1)) for k in range(k2 + 1))
        val = polygamma_half(m, 0) - polygamma_int(m, 0) + (-1) ** m * factorial(m) * to_real(s)
        val = k0 * val
    return round_to(val)


# ---------------------------------------------------------------------------
# gamma family

def gamma_lattice(x):
    """Gamma(x) for x a positive integer or a half-integer (any sign)."""
    x = Fraction(x)
    if x.denominator == 1:
        if x <= 0:
            raise ValueError(f"Gamma pole at {x}")
        return to_real(factorial(int(x) - 1))
    if x.denominator != 2:
        raise ValueError(f"Gamma at {x} is outside the supported lattice")
    k = int(x - Fraction(1, 2))
    root_pi = gmpy2.sqrt(pi())
    if k >= 0:
        return root_pi * to_real(Fraction(double_factorial(2 * k - 1), 2 ** k))
    k = -k
    # Gamma(1/2 - k) = (-2)^k sqrt(pi) / (2k-1)!!
    return root_pi * to_real(Fraction((-2) ** k, double_factorial(2 * k - 1)))


def beta_lattice(a, b):
    """Euler beta B(a, b) on the integer/half-integer lattice.

    Returns exact zero when a + b is a pole of Gamma and neither a nor b is.
    """
    a, b = Fraction(a), Fraction(b)
    if (a + b).denominator == 1 and a + b <= 0:
        return mpfr(0)
    return gamma_lattice(a) * gamma_lattice(b) / gamma_lattice(a + b)


def inc_gamma_int(a, z):
    """Upper incomplete gamma Gamma(a, z) for integer a >= 1."""
    if a < 1:
        raise ValueError("inc_gamma_int needs a >= 1")
    z = z if isinstance(z, gmpy2.mpfr) else to_real(z)
    term = mpfr(1)
    acc = mpfr(1)
    for n in range(1, a):
        term = term * z / n
        acc += term
    return factorial(a - 1) * gmpy2.exp(-z) * acc


# ---------------------------------------------------------------------------
# Bell polynomials and the Euler integral

def bell_complete(x):
    """Complete Bell polynomial Y_n(x_1, ..., x_n); Y_0 = 1."""
    return bell_sequence(x)[-1]


def bell_sequence(x):
    """[Y_0, Y_1(x_1), ..., Y_n(x_1..x_n)] from one recurrence pass."""
    x = list(x)
    ys = [mpfr(1)]
    for n in range(len(x)):
        acc = 0
        for k in range(n + 1):
            acc = acc + comb(n, k) * ys[n - k] * x[k]
        ys.append(acc)
    return ys


@lru_cache(maxsize=None)
def _log_moments(nmax, alpha, prec):
    with working_precision(prec):
        xs = [polygamma_int(k, alpha) for k in range(nmax)]
        return tuple(bell_sequence(xs))


def log_moment_bells(nmax, alpha):
    """(Y_0, ..., Y_nmax) at (psi(alpha+1), ..., psi^(nmax-1)(alpha+1))."""
    if alpha < 0:
        raise ValueError("alpha must be a non-negative integer")
    return _log_moments(int(nmax), int(alpha), get_precision())


def X(n, alpha):
    """X_n(alpha) = int_0^inf e^-s s^alpha (ln s)^n ds for integer alpha >= 0."""
    if alpha < 0:
        raise ValueError("X(n, alpha) requires integer alpha >= 0")
    return factorial(alpha) * log_moment_bells(n, alpha)[n]
