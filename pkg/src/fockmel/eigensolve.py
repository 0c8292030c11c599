"""Ground state of (delta^2 K - delta U) C = E (-S) C in extended precision.

Pipeline:

1. Symmetric diagonal scaling to unit diagonal of B = -S.
2. Cholesky of B in basis order. Columns whose pivot falls below
   2^(-0.6 bits) are dropped as linearly dependent on earlier ones.
3. Small problems: reduce to a standard symmetric matrix and diagonalize it
   with cyclic Jacobi (all eigenvalues, only the lowest certified).
   Larger problems: shifted inverse iteration. A successful Cholesky of
   A - sigma B proves sigma lies below every eigenvalue, so the iteration
   converges to the ground state and not to some other level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import CholeskyError, ConvergenceError
from .specfun import get_precision, to_real

log = logging.getLogger(__name__)

JACOBI_MAX = 24
SEED_SIZE = 40


def _zeros(n, m=None):
    out = np.empty((n,) if m is None else (n, m), dtype=object)
    out.fill(mpfr(0))
    return out


def _norm(v):
    return gmpy2.sqrt(sum((x * x for x in v), mpfr(0)))


def _max_abs(a):
    return max((abs(x) for x in np.asarray(a).ravel()), default=mpfr(0))


def precision_threshold(fraction, bits=None):
    """2^(-fraction * bits): the precision-relative thresholds used below."""
    bits = get_precision() if bits is None else bits
    return gmpy2.exp2(mpfr(-fraction * bits))


# ---------------------------------------------------------------------------
# dense kernels on object arrays of mpfr

def cholesky(a):
    """Lower-triangular L with a = L L^T; CholeskyError at the first non-positive pivot."""
    n = a.shape[0]
    L = _zeros(n, n)
    for k in range(n):
        col = a[k:, k] - L[k:, :k].dot(L[k, :k]) if k else a[k:, k].copy()
        piv = col[0]
        if not piv > 0:
            raise CholeskyError(f"non-positive pivot {float(piv):.3e} at column {k}", index=k, pivot=piv)
        d = gmpy2.sqrt(piv)
        L[k:, k] = col / d
    return L


@dataclass
class PivotedCholesky:
    """Cholesky factor of the kept columns of a unit-diagonal SPD matrix."""

    L: np.ndarray
    kept: list
    dropped: list
    pivots: list
    min_pivot: object


def cholesky_drop(b, threshold):
    """Cholesky in the given order, skipping columns with pivot < threshold.

    ``b`` is assumed to have unit diagonal, so pivots are relative. A negative
    pivot larger in magnitude than ``threshold`` means ``b`` is not positive
    semi-definite and raises CholeskyError.
    """
    n = b.shape[0]
    cols = _zeros(n, n)
    kept, dropped, pivots = [], [], []
    r = 0
    for k in range(n):
        if r:
            col = b[k:, k] - cols[k:, :r].dot(cols[k, :r])
        else:
            col = b[k:, k].copy()
        piv = col[0]
        pivots.append(piv)
        if piv < -threshold:
            raise CholeskyError(f"overlap matrix not positive definite at column {k}", index=k, pivot=piv)
        if piv < threshold:
            dropped.append(k)
            continue
        cols[k:, r] = col / gmpy2.sqrt(piv)
        kept.append(k)
        r += 1
    L = cols[np.ix_(kept, list(range(r)))]
    min_piv = min(pivots) if pivots else mpfr(0)
    return PivotedCholesky(L, kept, dropped, pivots, min_piv)


def forward_solve(L, b):
    """Solve L x = b (vector or matrix right-hand side)."""
    n = L.shape[0]
    x = b.copy()
    for k in range(n):
        if k:
            x[k] = x[k] - L[k, :k].dot(x[:k])
        x[k] = x[k] / L[k, k]
    return x


def backward_solve_t(L, b):
    """Solve L^T x = b."""
    n = L.shape[0]
    x = b.copy()
    for k in range(n - 1, -1, -1):
        if k < n - 1:
            x[k] = x[k] - L[k + 1:, k].dot(x[k + 1:])
        x[k] = x[k] / L[k, k]
    return x


def jacobi_eigh(a, tol=None, max_sweeps=60):
    """All eigenpairs of a symmetric object matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Sweeps stop
    once the off-diagonal Frobenius norm is below ``tol`` times the
    Frobenius norm of ``a`` (default 2^(-0.45 bits)) and one more sweep has
    been applied.
    """
    a = np.array(a, dtype=object)
    n = a.shape[0]
    v = _zeros(n, n)
    for k in range(n):
        v[k, k] = mpfr(1)
    if n == 1:
        return np.array([a[0, 0]], dtype=object), v
    tol = precision_threshold(0.45) if tol is None else to_real(tol)
    scale = gmpy2.sqrt(sum((x * x for x in a.ravel()), mpfr(0)))
    tiny = scale * precision_threshold(1.0) if scale else mpfr(0)
    extra = 1
    for _ in range(max_sweeps):
        off = gmpy2.sqrt(sum((a[p, q] * a[p, q] for p in range(n) for q in range(n) if p != q), mpfr(0)))
        if off <= tol * scale:
            if extra == 0:
                break
            extra -= 1
        if off == 0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tiny:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = (1 if theta >= 0 else -1) / (abs(theta) + gmpy2.sqrt(theta * theta + 1))
                c = 1 / gmpy2.sqrt(t * t + 1)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = mpfr(0)
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.array([a[k, k] for k in range(n)], dtype=object)
    order = sorted(range(n), key=lambda k: w[k])
    return w[order], v[:, order]


# ---------------------------------------------------------------------------
# generalized problem

@dataclass
class SpectrumResult:
    """Ground state of the generalized problem at one delta."""

    energy: object
    coefficients: np.ndarray
    delta: object
    residual_norm: object
    min_pivot: object
    dropped: list = field(default_factory=list)
    method: str = ""
    iterations: int = 0
    excited: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    scan: list = field(default_factory=list)

    @property
    def size(self):
        return len(self.coefficients)


def _scaled(A, B):
    d = np.array([1 / gmpy2.sqrt(B[k, k]) for k in range(B.shape[0])], dtype=object)
    outer = np.outer(d, d)
    return A * outer, B * outer, d


def _rayleigh(A, B, x):
    return x.dot(A.dot(x)) / x.dot(B.dot(x))


def _residual(A, B, e, x):
    return _norm(A.dot(x) - e * B.dot(x)) / _norm(x)


def _jacobi_ground(A, B, fac):
    L = fac.L
    X = forward_solve(L, A)
    red = forward_solve(L, X.T.copy())
    red = (red + red.T) / 2
    w, v = jacobi_eigh(red)
    y = backward_solve_t(L, v[:, 0].copy())
    return w, y


def _inverse_iteration(A, B, x, sigma, tol, max_iter):
    """Iterate (A - sigma B) y = B x from x; sigma must lie below the spectrum."""
    F = cholesky(A - sigma * B)
    e = _rayleigh(A, B, x)
    res = _residual(A, B, e, x)
    best = (res, e, x)
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        y = backward_solve_t(F, forward_solve(F, B.dot(x)))
        x = y / gmpy2.sqrt(y.dot(B.dot(y)))
        e = _rayleigh(A, B, x)
        res = _residual(A, B, e, x)
        if res < best[0]:
            best = (res, e, x)
            stall = 0
        else:
            stall += 1
        if res <= tol or stall >= 3:
            break
    return best[1], best[2], best[0], it


def solve_generalized(A, B, x0=None, jacobi_max=JACOBI_MAX, seed_size=SEED_SIZE,
                      drop_threshold=None, residual_bound=None):
    """Lowest eigenpair of A C = E B C with B symmetric positive definite.

    Returns (E, C, residual, PivotedCholesky, method, iterations, excited).
    """
    A = np.asarray(A, dtype=object)
    B = np.asarray(B, dtype=object)
    n = A.shape[0]
    As, Bs, d = _scaled(A, B)
    fac = cholesky_drop(Bs, precision_threshold(0.6) if drop_threshold is None else drop_threshold)
    kept = fac.kept
    Ak, Bk = As[np.ix_(kept, kept)], Bs[np.ix_(kept, kept)]
    bound = precision_threshold(0.2) if residual_bound is None else residual_bound
    excited = []
    if len(kept) <= jacobi_max:
        w, x = _jacobi_ground(Ak, Bk, fac)
        e = w[0]
        excited = list(w[1:])
        method, iters = "jacobi", 0
        res = _residual(Ak, Bk, e, x)
        if res > bound:
            # polish with a certified shift just below the Jacobi value
            gap = (w[1] - e) if len(w) > 1 else abs(e) + 1
            e, x, res, iters = _inverse_iteration(Ak, Bk, x, e - gap / 1000, bound * bound, 20)
            method = "jacobi+inverse-iteration"
    else:
        if x0 is not None:
            x = np.array([to_real(x0[k]) / d[k] for k in kept], dtype=object)
        else:
            m = min(seed_size, len(kept))
            sub = PivotedCholesky(fac.L[:m, :m], list(range(m)), [], [], fac.min_pivot)
            _, ys = _jacobi_ground(Ak[:m, :m], Bk[:m, :m], sub)
            x = np.concatenate([ys, _zeros(len(kept) - m)])
        e0 = _rayleigh(Ak, Bk, x)
        tau = abs(e0) / 20 + mpfr("0.01")
        for _ in range(40):
            try:
                e, x, res, iters = _inverse_iteration(Ak, Bk, x, e0 - tau, mpfr("1e-14"), 200)
                break
            except CholeskyError:
                tau *= 2
        else:
            raise ConvergenceError("no shift below the spectrum was found")
        method = "inverse-iteration"
        # second stage with the shift pulled close to the converged value
        if res > bound * bound:
            # a rejected shift proves an eigenvalue lies below it: back off and retry
            margin = max(res * 1000, mpfr("1e-10") * max(abs(e), mpfr(1)))
            for _ in range(8):
                try:
                    e, x, res, more = _inverse_iteration(Ak, Bk, x, e - margin, bound * bound, 60)
                    iters += more
                    break
                except CholeskyError:
                    margin *= 100
            else:
                log.info("refined shift rejected; keeping first-stage result")
    if res > bound:
        raise ConvergenceError(f"eigen-residual {float(res):.3e} above bound {float(bound):.3e}")
    C = _zeros(n)
    for pos, k in enumerate(kept):
        C[k] = x[pos] * d[k]
    # sign convention: largest-magnitude coefficient positive
    big = max(range(n), key=lambda k: abs(C[k]))
    if C[big] < 0:
        C = -C
    return e, C, res, fac, method, iters, excited


def generalized_matrices(mats, delta):
    delta = to_real(delta)
    A = mats.K * (delta * delta) - mats.U * delta
    B = -mats.S
    return A, B


# scaled point r1 = r2 = 1/delta, r12 = 1/(2 delta); the nodeless ground state is positive there
_REFERENCE_POINT = (2, 0, mpfr(1) / 2)


def _reference_value(C, basis):
    from .coalescence import Wavefunction

    return Wavefunction(C, basis).value(_REFERENCE_POINT)


def ground_state(mats, delta, x0=None, **kwargs):
    """SpectrumResult for a MatrixSet at scale delta."""
    delta = to_real(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    A, B = generalized_matrices(mats, delta)
    e, C, res, fac, method, iters, excited = solve_generalized(A, B, x0=x0, **kwargs)
    if fac.dropped:
        log.info("dropped %d dependent basis functions", len(fac.dropped))
    if _reference_value(C, mats.basis) < 0:
        C = -C
    return SpectrumResult(
        energy=e, coefficients=C, delta=delta, residual_norm=res, min_pivot=fac.min_pivot,
        dropped=list(fac.dropped), method=method, iterations=iters, excited=excited,
    )


# ---------------------------------------------------------------------------
# delta optimization

@dataclass
class BasisSpec:
    """Recipe for a delta-dependent basis.

    ``terms`` gives an explicit list of single terms; otherwise the basis is
    the composite set (if ``composites``) followed by the terms admitted by
    ``rule``.
    """

    rule: object = None
    composites: bool = True
    terms: list = None

    def build(self, Z, delta):
        from .basis import as_function, full_basis

        if self.terms is not None:
            return [as_function(t) for t in self.terms]
        if self.rule is None and not self.composites:
            raise ValueError("empty basis specification")
        if self.rule is None:
            from .basis import composite_set

            return composite_set(Z, delta)
        return full_basis(Z, delta, self.rule, composites=self.composites)


class DeltaProblem:
    """Energy as a function of delta with integrals reused between calls."""

    def __init__(self, spec, Z, cache=None, threads=1):
        from .integrals import PCache
        from .matrix_elements import BasisTerm, build_term_matrices

        self.spec, self.Z = spec, to_real(Z)
        self.cache = cache if cache is not None else PCache()
        probe = spec.build(self.Z, mpfr(1))
        terms, seen = [], set()
        for fn in probe:
            for _, t in fn.terms:
                t = BasisTerm(*t)
                if t not in seen:
                    seen.add(t)
                    terms.append(t)
        # composite phi1 loses terms only at isolated delta; keep the full set
        if spec.composites and spec.terms is None:
            for t in ((1, 0, 0, 0, 0), (0, 0, 1, 0, 0)):
                if BasisTerm(*t) not in seen:
                    terms.append(BasisTerm(*t))
                    seen.add(BasisTerm(*t))
        self.term_matrices = build_term_matrices(terms, self.cache, threads=threads)
        self.last = None
        self.evaluations = 0

    def matrices(self, delta):
        from .matrix_elements import assemble

        basis = self.spec.build(self.Z, to_real(delta))
        return assemble(basis, self.Z, self.cache, term_matrices=self.term_matrices)

    def solve(self, delta):
        mats = self.matrices(delta)
        x0 = self.last.coefficients if self.last is not None and self.last.size == len(mats.basis) else None
        res = ground_state(mats, delta, x0=x0)
        self.last = res
        self.evaluations += 1
        return res


_GOLDEN = (gmpy2.sqrt(mpfr(5)) - 1) / 2


def optimize_delta(spec, Z, delta_range=(1, 6), steps=11, rel_tol=1e-6, cache=None, problem=None, threads=1):
    """Coarse scan of E(delta) then golden-section refinement of the minimum."""
    lo, hi = (to_real(x) for x in delta_range)
    if not lo < hi:
        raise ValueError("delta range must satisfy lo < hi")
    if steps < 3:
        raise ValueError("steps must be >= 3")
    prob = problem if problem is not None else DeltaProblem(spec, Z, cache, threads)
    grid = [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]
    scan = []
    for dl in grid:
        scan.append(prob.solve(dl))
    k = min(range(steps), key=lambda q: scan[q].energy)
    notes = []
    if k in (0, steps - 1):
        notes.append(f"minimum at range boundary delta={float(grid[k]):.6g}")
        log.warning(notes[-1])
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, steps - 1)]
    best = scan[k]
    c = b - _GOLDEN * (b - a)
    dd = a + _GOLDEN * (b - a)
    fc, fd = prob.solve(c), prob.solve(dd)
    while abs(b - a) > to_real(rel_tol) * abs(c + dd) / 2:
        if fc.energy < fd.energy:
            b, dd, fd = dd, c, fc
            c = b - _GOLDEN * (b - a)
            fc = prob.solve(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + _GOLDEN * (b - a)
            fd = prob.solve(dd)
    for cand in (fc, fd):
        if cand.energy < best.energy:
            best = cand
    best.notes = notes
    best.scan = [(s.delta, s.energy) for s in scan]
    return best
