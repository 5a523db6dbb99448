"""Ground state of N harmonically coupled particles in a harmonic trap.

Units hbar = m = omega = 1 with the relative-motion length ``l_plus = 1``; only
the ratio ``l_plus / l_minus = exp(-delta)`` matters. The bosonic 1-RDO is a
Gibbs state of an effective oscillator with length ``L`` and Boltzmann factor
``q``. The fermionic one multiplies the same Gaussian kernel by a symmetric
polynomial ``F_N(x, y)``, which makes it a finite combination of
``x^i e^{-beta H} x^j`` in the bosonic natural-orbital basis.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import ArgumentError, NumericError, UnsupportedSettingError
from .fock_core import Spectrum
from .perturbation import MatrixSeries, eigenvalue_series
from .series import TSeries

MAX_POLY_N = 8
MAX_SERIES_ORDER = 10
DEFAULT_M_MAX = 200
DECAY_M_MAX = 500


@dataclass(frozen=True)
class HarmoniumParams:
    N: int
    ratio: float
    delta: float
    A: float
    B: float
    a: float
    b: float
    c: float
    L: float
    beta_omega: float
    q: float
    kappa: float

    def to_dict(self) -> dict:
        return asdict(self)


def derive_params(N: int, ratio: float | None = None, delta: float | None = None) -> HarmoniumParams:
    """All derived constants from ``N`` and either ``ratio = l+/l-`` or ``delta = -log(ratio)``."""
    if (ratio is None) == (delta is None):
        raise ArgumentError("give exactly one of ratio and delta")
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ArgumentError(f"particle number must be a positive integer, got {N!r}")
    if ratio is not None:
        ratio = float(ratio)
        if not ratio > 0 or not math.isfinite(ratio):
            raise ArgumentError(f"ratio must be positive and finite, got {ratio!r}")
        delta = -math.log(ratio)
    else:
        delta = float(delta)
        if not math.isfinite(delta):
            raise ArgumentError("delta must be finite")
        ratio = math.exp(-delta)
    lp, lm = 1.0, math.exp(delta)
    A = 1 / (2 * lp ** 2)
    # expm1 keeps B accurate for tiny delta
    B = -math.expm1(-2 * delta) / (2 * N)
    den = A - (N - 1) * B
    b = (N - 1) * B ** 2 / den
    a = A - B - b / 2
    c = N * math.sqrt((2 * a - b) / math.pi)
    if b == 0:
        L, bo, q = 1.0, math.inf, 0.0
    else:
        cc = math.sqrt(2 * (A - B - b))
        dd = math.sqrt(2 * (A - B))
        L = 1 / math.sqrt(cc * dd)
        q = (dd - cc) / (dd + cc)
        q = abs(q)
        bo = math.asinh(1 / (L ** 2 * abs(b)))
    kappa = (lm / lp) ** 4 - 1
    return HarmoniumParams(N=int(N), ratio=ratio, delta=delta, A=A, B=B, a=a, b=b, c=c, L=L,
                           beta_omega=bo, q=q, kappa=kappa)


def beta_omega_closed_form(N: int, ratio: float) -> float:
    """The effective inverse temperature written directly in l+ and l-."""
    lp, lm = ratio, 1.0
    if lp == lm:
        return math.inf
    num = 2 * lp * lm * math.sqrt(((N - 1) * lp ** 2 + lm ** 2) * (lp ** 2 + (N - 1) * lm ** 2))
    return math.asinh(num / ((1 - 1 / N) * (lp ** 2 - lm ** 2) ** 2))


def length_closed_form(N: int, ratio: float) -> float:
    """L in units of l+."""
    lp, lm = 1.0, 1.0 / ratio
    return math.sqrt(lm * lp) * (((N - 1) * lp ** 2 + lm ** 2) / (lp ** 2 + (N - 1) * lm ** 2)) ** 0.25


def bosonic_spectrum(params: HarmoniumParams, k_max: int) -> tuple[np.ndarray, float]:
    """``lambda_k = N (1 - q) q^k`` for k <= k_max, and the entropy of the q-distribution."""
    if k_max < 0:
        raise ArgumentError("k_max must be non-negative")
    q, n = params.q, params.N
    lam = n * (1 - q) * q ** np.arange(k_max + 1)
    if q == 0:
        return lam, 0.0
    s = -math.log1p(-q) - q * math.log(q) / (1 - q)
    return lam, s


# ---------------------------------------------------------------- F_N(x, y)

@functools.lru_cache(maxsize=None)
def _polynomial_symbolic(N: int):
    """Unnormalized c_{nu,mu} as polynomials in (A, B, r) with r = 1 / (A - (N-1) B).

    Keeping r as its own generator avoids rational-function simplification,
    which is what makes the expansion fast up to N = 8.
    """
    import sympy as sp

    if N < 1 or N > MAX_POLY_N:
        raise UnsupportedSettingError(f"the polynomial F_N is available for 1 <= N <= {MAX_POLY_N}")
    A, B, r, x, y, w, a1, a2 = sp.symbols("A B r x y w a1 a2")
    acc = sp.Integer(0)
    for k in range(N):
        acc += sp.hermite(k, w + a1) * sp.hermite(k, w + a2) / (2 ** k * sp.factorial(k))
    herm = sp.Poly(sp.expand(acc), w, a1, a2)
    gens = (x, y, A, B, r)
    P = lambda e: sp.Poly(e, *gens, domain="QQ")
    p2 = P(B * r)
    q1 = P(x - B * r * (x + y) / 2)
    q2 = P(y - B * r * (x + y) / 2)
    two_a = P(2 * A)
    q1_pow, q2_pow, a_pow, p_pow = {0: P(1)}, {0: P(1)}, {0: P(1)}, {0: P(1)}
    total = P(0)
    for (jw, i1, i2), coef in herm.terms():
        if jw % 2:
            continue
        if (i1 + i2) % 2:
            raise AssertionError("odd total degree survived the moment rule")
        for cache, base, n in ((q1_pow, q1, i1), (q2_pow, q2, i2), (a_pow, two_a, (i1 + i2) // 2),
                               (p_pow, p2, jw // 2)):
            if n not in cache:
                cache[n] = base ** n
        # Gaussian moment of u^(2j) against exp(-u^2), sqrt(pi) dropped
        mom = sp.factorial2(jw - 1) / sp.Integer(2) ** (jw // 2) if jw else sp.Integer(1)
        total += q1_pow[i1] * q2_pow[i2] * a_pow[(i1 + i2) // 2] * p_pow[jw // 2] * (coef * mom)
    out = {}
    for nu in range(N):
        for mu in range(2 * nu + 1):
            out[(nu, mu)] = sp.Poly(0, A, B, r, domain="QQ")
    for (ex, ey, ea, eb, er), c in total.terms():
        if (ex + ey) % 2:
            raise AssertionError("odd monomial in F_N")
        key = ((ex + ey) // 2, ey)
        out[key] += sp.Poly(c * A ** ea * B ** eb * r ** er, A, B, r, domain="QQ")
    return (A, B, r), out


def _coefficient_values(N: int, A, B, one=1):
    """Evaluate the unnormalized c_{nu,mu} at numbers of any type supporting + and *."""
    _, polys = _polynomial_symbolic(N)
    r = one / (A - (N - 1) * B)
    out = {}
    for key, poly in polys.items():
        acc = None
        for (ea, eb, er), c in poly.terms():
            term = (A ** ea) * (B ** eb) * (r ** er) * _number(c, one)
            acc = term if acc is None else acc + term
        out[key] = acc if acc is not None else one * 0
    return out


def _number(c, one):
    f = Fraction(int(c.p), int(c.q))
    if isinstance(one, float):
        return float(f)
    if isinstance(one, Fraction) or isinstance(one, TSeries):
        return f
    return one * f.numerator / f.denominator


@dataclass(frozen=True)
class RDMPolynomial:
    """Coefficients of ``F_N(x, y) = sum c[nu, mu] x^(2nu-mu) y^mu``.

    The overall scale is fixed so that ``F_N(x, y) exp(-a(x^2+y^2) + bxy)``
    integrates to N on the diagonal.
    """

    N: int
    coefficients: dict

    @property
    def degree(self) -> int:
        return 2 * (self.N - 1)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return sum(c * x ** (2 * nu - mu) * y ** mu for (nu, mu), c in self.coefficients.items())


def _gaussian_moment(k: int, alpha: float) -> float:
    """Integral of x^k exp(-alpha x^2) over the real line."""
    if k % 2:
        return 0.0
    return math.gamma((k + 1) / 2) / alpha ** ((k + 1) / 2)


def fermion_polynomial(params: HarmoniumParams) -> RDMPolynomial:
    raw = {k: float(v) for k, v in _coefficient_values(params.N, params.A, params.B, 1.0).items()}
    alpha = 2 * params.a - params.b
    trace = sum(c * _gaussian_moment(2 * nu, alpha) for (nu, _mu), c in raw.items())
    scale = params.N / trace
    return RDMPolynomial(params.N, {k: v * scale for k, v in raw.items()})


def fermion_polynomial_symbolic(N: int) -> dict:
    """Unnormalized ``c_{nu,mu}`` as sympy expressions in the symbols A and B."""
    (A, B, r), polys = _polynomial_symbolic(N)
    return {k: p.as_expr().subs(r, 1 / (A - (N - 1) * B)) for k, p in polys.items()}


# ---------------------------------------------------------------- matrix form

def _position_matrix(dim: int) -> np.ndarray:
    """x / L in the Hermite-function basis."""
    off = np.sqrt(np.arange(1, dim) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def rdm_matrix(params: HarmoniumParams, m_max: int = DEFAULT_M_MAX) -> np.ndarray:
    """``<phi_n | rho_f | phi_m>`` for n, m <= m_max in the Hermite basis of length L.

    Every term ``c x^i e^{-beta H} x^j`` is built from the tridiagonal position
    operator in a space 2N+2 states larger than requested, so the returned block
    is exact up to rounding. No factorials appear, so nothing overflows.
    """
    n = params.N
    if m_max < 2 * (n - 1):
        raise ArgumentError(f"m_max must be at least {2 * (n - 1)}")
    poly = fermion_polynomial(params)
    dim = m_max + 2 * n + 2
    x = _position_matrix(dim)
    gibbs = params.q ** np.arange(dim, dtype=float)
    gibbs[0] = 1.0
    powers = [np.eye(dim)]
    for _ in range(2 * (n - 1)):
        powers.append(powers[-1] @ x)
    rho = np.zeros((dim, dim))
    for (nu, mu), c in sorted(poly.coefficients.items()):
        if c == 0.0:
            continue
        rho += (c * params.L ** (2 * nu)) * (powers[2 * nu - mu] * gibbs) @ powers[mu]
    rho = rho[: m_max + 1, : m_max + 1]
    rho = (rho + rho.T) / 2
    n_idx = np.arange(m_max + 1)
    parity = (n_idx[:, None] + n_idx[None, :]) % 2 == 1
    band = np.abs(n_idx[:, None] - n_idx[None, :]) > 2 * (n - 1)
    forbidden = parity | band
    leak = float(np.max(np.abs(rho[forbidden]), initial=0.0))
    if leak > 1e-10 * float(np.max(np.abs(rho))):
        raise NumericError("parity or band structure of the 1-RDO matrix violated", residual=leak)
    rho[forbidden] = 0.0
    tr = np.trace(rho)
    if not tr > 0:
        raise NumericError("the 1-RDO matrix has non-positive trace", residual=tr)
    return rho * (n / tr)


def fermionic_nons(params: HarmoniumParams, m_max: int = DEFAULT_M_MAX, vectors: bool = False):
    """Descending NONs of the truncated matrix (and natural orbitals as columns if asked)."""
    if params.q > 0 and params.q ** m_max > 1e-14:
        warnings.warn(f"q^m_max = {params.q ** m_max:.2e}; increase m_max for converged NONs")
    rho = rdm_matrix(params, m_max)
    vals, vecs = np.linalg.eigh(rho)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vals = np.clip(vals, 0.0, 1.0)
    vals = np.clip(vals * (params.N / vals.sum()), 0.0, 1.0)
    spec = Spectrum(vals, particles=params.N, tol=1e-9)
    return (spec, vecs) if vectors else spec


def fermionic_nons_mp(N: int, delta, digits: int = 40, count: int | None = None) -> list:
    """High-precision NONs (mpmath) for tiny couplings where double precision loses 1 - lambda.

    The basis is cut where the Boltzmann weights drop below 10^-digits, and the
    banded products are formed entry by entry. Returns mpmath numbers.
    """
    import mpmath

    with mpmath.workdps(digits + 10):
        d = mpmath.mpf(delta)
        A = mpmath.mpf(1) / 2
        B = -mpmath.expm1(-2 * d) / (2 * N)
        b = (N - 1) * B ** 2 / (A - (N - 1) * B)
        cc = mpmath.sqrt(2 * (A - B - b))
        dd = mpmath.sqrt(2 * (A - B))
        L2 = 1 / (cc * dd)
        q = abs((dd - cc) / (dd + cc))
        size = max(count or 0, N + 1)
        if q == 0:
            return ([mpmath.mpf(1)] * N + [mpmath.mpf(0)] * size)[:size]
        m_max = int(math.ceil(digits * math.log(10) / -float(mpmath.log(q)))) + 2 * N + 2
        coeffs = _coefficient_values(N, A, B, mpmath.mpf(1))
        dim = m_max + 2 * N + 2
        xs = [mpmath.sqrt(mpmath.mpf(i + 1) / 2) for i in range(dim)]

        def times_x(rows):
            out = []
            for row in rows:
                new = {}
                for k, v in row.items():
                    if k + 1 < dim:
                        new[k + 1] = new.get(k + 1, 0) + v * xs[k]
                    if k > 0:
                        new[k - 1] = new.get(k - 1, 0) + v * xs[k - 1]
                out.append(new)
            return out

        powers = [[{i: mpmath.mpf(1)} for i in range(dim)]]
        for _ in range(2 * (N - 1)):
            powers.append(times_x(powers[-1]))
        gibbs = [q ** k for k in range(dim)]
        rho = [[mpmath.mpf(0)] * (m_max + 1) for _ in range(m_max + 1)]
        for (nu, mu), c in coeffs.items():
            if c == 0:
                continue
            f = c * L2 ** nu
            left, right = powers[2 * nu - mu], powers[mu]
            for n in range(m_max + 1):
                for k, lv in left[n].items():
                    w = f * lv * gibbs[k]
                    # x^mu is symmetric, so row k of it gives column entries
                    for m, rv in right[k].items():
                        if m <= m_max:
                            rho[n][m] += w * rv
        mat = mpmath.matrix(m_max + 1, m_max + 1)
        for n in range(m_max + 1):
            for m in range(n, m_max + 1):
                mat[n, m] = mat[m, n] = (rho[n][m] + rho[m][n]) / 2
        tr = sum(mat[i, i] for i in range(m_max + 1))
        mat = mat * (N / tr)
        ev = mpmath.eigsy(mat, eigvals_only=True)
        vals = sorted((ev[i] for i in range(m_max + 1)), reverse=True)
        return vals[: count or len(vals)]


# ---------------------------------------------------------------- weak coupling

def _param_series(N: int, order: int):
    """q, L^2 and B as exact series in delta (with l+ = 1, l- = e^delta)."""
    e2 = TSeries.exp_linear(-2, order)
    A = Fraction(1, 2)
    B = (1 - e2) * Fraction(1, 2 * N)
    den = A - B * (N - 1)
    b = B * B * (N - 1) / den
    cc = ((A - B - b) * 2).sqrt()
    dd = ((A - B) * 2).sqrt()
    q = (dd - cc) / (dd + cc)
    L2 = (cc * dd).reciprocal()
    return q, L2, B


@dataclass(frozen=True)
class SeriesResult:
    """Per-NON series in delta. ``occupied[i]`` is the series of ``1 - lambda_{i+1}``."""

    N: int
    order: int
    occupied: list
    unoccupied: list

    def nons(self, delta: float, count: int | None = None) -> list[float]:
        occ = [1 - s(delta) for s in self.occupied]
        unocc = [s(delta) for s in self.unoccupied]
        vals = occ + unocc
        return vals[: count or len(vals)]

    def as_table(self) -> list[dict]:
        rows = []
        for i, s in enumerate(self.occupied):
            rows.append({"quantity": f"1-lambda_{i + 1}", "coefficients": _fmt(s)})
        for i, s in enumerate(self.unoccupied):
            rows.append({"quantity": f"lambda_{self.N + i + 1}", "coefficients": _fmt(s)})
        return rows


def _fmt(s: TSeries) -> dict:
    return {k: str(c) for k, c in enumerate(s.c) if c}


def _series_matrix(N: int, order: int, size: int):
    """Rational similarity transform of the 1-RDO matrix as a matrix of series."""
    q, L2, B = _param_series(N, order)
    one = TSeries.const(1, order)
    coeffs = {k: one * v for k, v in _coefficient_values(N, Fraction(1, 2), B, one).items()}
    dim = size + 2 * N + 2
    # T^{-1} x T with T = diag(sqrt(n!/2^n)) has rational entries
    xr = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(dim - 1):
        xr[i][i + 1] = Fraction(i + 1, 2)
        xr[i + 1][i] = Fraction(1)
    xr = np.array(xr, dtype=object)
    powers = [np.array([[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)], dtype=object)]
    for _ in range(2 * (N - 1)):
        powers.append(powers[-1].dot(xr))
    qpow = [TSeries.const(1, order)]
    for _ in range(1, dim):
        qpow.append(qpow[-1] * q)
    zero = TSeries.const(0, order)
    rho = [[zero for _ in range(size)] for _ in range(size)]
    for (nu, mu), c in coeffs.items():
        if not any(c.c):
            continue
        pref = c * (L2 ** nu)
        left, right = powers[2 * nu - mu], powers[mu]
        for n in range(size):
            for m in range(size):
                if (n + m) % 2:
                    continue
                acc = None
                for k in range(dim):
                    w = left[n, k] * right[k, m]
                    if w:
                        term = qpow[k] * w
                        acc = term if acc is None else acc + term
                if acc is not None:
                    rho[n][m] = rho[n][m] + pref * acc
    return rho


def weak_coupling_series(N: int = 3, order: int = MAX_SERIES_ORDER, size: int | None = None) -> SeriesResult:
    """Exact rational series of the NONs near the Hartree-Fock point.

    The matrix is split by parity and each sector is block-diagonalized around
    its delta = 0 occupation pattern. ``size`` is the number of Hermite states
    kept; the default is large enough for every coefficient through ``order``.
    """
    if order > MAX_SERIES_ORDER or order < 2 or order % 2:
        raise UnsupportedSettingError(f"series order must be even and between 2 and {MAX_SERIES_ORDER}")
    if N < 2 or N > MAX_POLY_N:
        raise UnsupportedSettingError(f"series need 2 <= N <= {MAX_POLY_N}")
    size = size or _default_series_size(N, order)
    rho = _series_matrix(N, order, size)
    tr = TSeries.const(0, order)
    for i in range(size):
        tr = tr + rho[i][i]
    norm = tr.reciprocal() * N
    evs = []
    for parity in (0, 1):
        idx = list(range(parity, size, 2))
        terms = []
        for k in range(order + 1):
            mk = np.empty((len(idx), len(idx)), dtype=object)
            for a, i in enumerate(idx):
                for b, j in enumerate(idx):
                    mk[a, b] = (rho[i][j] * norm).c[k]
            terms.append(mk)
        evs.extend(eigenvalue_series(MatrixSeries(terms, exact=True)))
    if not all(e.resolved for e in evs):
        raise NumericError("degenerate NON series could not be resolved exactly")
    ser = [TSeries(e.coefficients, order) for e in evs]
    ser.sort(key=lambda s: tuple(s.c), reverse=True)
    occ = [1 - s for s in ser[:N]]
    occ.sort(key=lambda s: tuple(s.c))
    return SeriesResult(N, order, occ, ser[N:])


def _default_series_size(N: int, order: int) -> int:
    # q ~ delta^2, so Gibbs weights beyond q^(order/2) drop out; the polynomial
    # shifts indices by up to 2(N-1) on either side
    return min(2 * (N + order // 2 + 1), 14)


# ---------------------------------------------------------------- decay
#
# Far above the Fermi level the NONs fall like q^k, so a plain dense
# eigensolver only resolves them down to ~1e-16 * lambda_1. Writing
# rho = D M D with D = diag(q^(n/2)) leaves a well-conditioned M, and the
# small eigenvalues then follow from a Schur complement over the lower states,
# solved as a fixed point in log space.


def scaled_rdm(params: HarmoniumParams, m_max: int) -> np.ndarray:
    """M with ``rho = D M D``, ``D = diag(q^(n/2))`` and the trace of rho equal to N."""
    n = params.N
    if params.q == 0.0:
        raise ArgumentError("the scaled form needs a nonzero interaction")
    poly = fermion_polynomial(params)
    dim = m_max + 2 * n + 2
    sq = math.sqrt(params.q)
    off = np.sqrt(np.arange(1, dim) / 2.0)
    # q^(-1/2) x q^(1/2) and its transpose, both with O(1) entries
    left = np.diag(off * sq, 1) + np.diag(off / sq, -1)
    right = left.T.copy()
    lp, rp = [np.eye(dim)], [np.eye(dim)]
    for _ in range(2 * (n - 1)):
        lp.append(lp[-1] @ left)
        rp.append(rp[-1] @ right)
    m = np.zeros((dim, dim))
    for (nu, mu), c in sorted(poly.coefficients.items()):
        m += (c * params.L ** (2 * nu)) * (lp[2 * nu - mu] @ rp[mu])
    m = m[: m_max + 1, : m_max + 1]
    m = (m + m.T) / 2
    tr = float(np.sum(np.diag(m) * params.q ** np.arange(m_max + 1, dtype=float)))
    return m * (n / tr)


def log_nons(params: HarmoniumParams, ks, m_max: int = DECAY_M_MAX, tail: int = 24,
             scaled: np.ndarray | None = None) -> dict[int, float]:
    """Natural logarithms of the NONs with Hermite-like index k (0-based), to relative accuracy.

    Valid for k at or above the Fermi level, where every lower state carries a
    much larger occupation. That ordering holds for moderate q (about q < 0.4);
    at stronger coupling the fixed point fails and NumericError is raised.
    """
    m = scaled_rdm(params, m_max) if scaled is None else scaled
    lq = math.log(params.q)
    out = {}
    for k in ks:
        if k < 2 * params.N or k > m_max:
            raise ArgumentError(f"k={k} outside [2N, m_max]; use fermionic_nons near the Fermi level")
        e = min(m_max, k + tail)
        idx = np.arange(k, e + 1)
        dp = np.exp(0.5 * lq * (idx - k))
        m11, m12, m22 = m[:k, :k], m[:k, k:e + 1], m[k:e + 1, k:e + 1]
        low = np.arange(k)

        def step(log_lam):
            # lambda q^-n stays below the window eigenvalue, so this cannot overflow
            shift = np.exp(log_lam - low * lq) if math.isfinite(log_lam) else np.zeros(k)
            mt = m22 - m12.T @ np.linalg.solve(m11 - np.diag(shift), m12)
            mu = np.linalg.eigvalsh(dp[:, None] * mt * dp[None, :])[-1]
            if not mu > 0:
                raise NumericError(f"non-positive window eigenvalue at k={k}", residual=float(mu))
            return k * lq + math.log(mu)

        # a few plain steps, then secant steps on step(x) - x, which also
        # converge where the plain iteration oscillates close to the Fermi level
        x0 = step(-math.inf)
        x1 = step(x0)
        for _ in range(4):
            x0, x1 = x1, step(x1)
        g0 = step(x0) - x0
        for _ in range(60):
            g1 = step(x1) - x1
            if abs(g1) < 1e-13 * max(1.0, abs(x1)):
                break
            x0, x1, g0 = x1, (x1 - g1 * (x1 - x0) / (g1 - g0) if g1 != g0 else x1 + g1), g1
        else:
            raise NumericError(f"fixed point for k={k} did not converge")
        log_lam = x1
        out[k] = log_lam
    return out


def no_coefficients(params: HarmoniumParams, k: int, m_max: int = DECAY_M_MAX, left: int = 30,
                    right: int | None = None, digits: int = 320, scaled: np.ndarray | None = None):
    """``log|zeta_m|`` of natural orbital k in the bosonic basis, for m of the same parity as k.

    Inverse iteration at the relatively accurate eigenvalue, carried out in
    extended precision on a window around m = k.
    """
    import mpmath

    m = scaled_rdm(params, m_max) if scaled is None else scaled
    log_lam = log_nons(params, [k], m_max, scaled=m)[k]
    if right is None:
        g = params.beta_omega / (4 * max(params.N - 1, 1))
        right = int(math.ceil(math.sqrt(digits * math.log(10) * 0.8 / g)))
    lo, hi = max(0, k - left), min(m_max, k + right)
    idx = list(range(lo, hi + 1))
    with mpmath.workdps(digits):
        q = mpmath.mpf(params.q)
        half = [q ** (mpmath.mpf(i) / 2) for i in idx]
        size = len(idx)
        rho = mpmath.matrix(size, size)
        for a, i in enumerate(idx):
            for b, j in enumerate(idx):
                if abs(i - j) <= 2 * (params.N - 1) and (i + j) % 2 == 0:
                    rho[a, b] = half[a] * mpmath.mpf(m[i, j]) * half[b]
        lam = mpmath.exp(mpmath.mpf(log_lam))
        shifted = rho - lam * (1 + mpmath.mpf(10) ** -12) * mpmath.eye(size)
        y = mpmath.matrix([1 if i == k else 0 for i in idx])
        for _ in range(2):
            y = mpmath.lu_solve(shifted, y)
            y = y / mpmath.norm(y)
        out = {}
        for a, i in enumerate(idx):
            if (i - k) % 2 == 0 and y[a] != 0:
                out[i] = float(mpmath.log(abs(y[a])))
    return out


@dataclass(frozen=True)
class DecayFit:
    quantity: str
    slope: float
    intercept: float
    coefficient: float
    expected: float | None = None
    uncertainty: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def decay_diagnostics(params: HarmoniumParams, m_max: int = DECAY_M_MAX, k_range=(100, 250),
                      orbitals=(30,), gaussian_offset: int = 6) -> list[DecayFit]:
    """Decay constants of the NONs and of the natural-orbital coefficients.

    * ``non_decay``: slope of ``-ln(lambda_k k^-(N-1))`` against ``k + 1/2`` over
      ``k_range``, which tends to beta*hbar*Omega; ``coefficient`` is the ratio
      itself at the last k.
    * ``gaussian_k``: the quadratic coefficient of ``-ln|zeta_m|`` in ``m - k``
      for ``m - k >= gaussian_offset``; it tends to beta*hbar*Omega / (4(N-1)).
    * ``exponential_k``: slope of ``-ln|zeta_m|`` in ``k - m`` for ``m < k``.

    All indices are the 0-based Hermite labels.
    """
    n = params.N
    if m_max < 300:
        warnings.warn("m_max below 300 limits the decay fits")
    k0, k1 = k_range
    if k1 > m_max - 30:
        warnings.warn("k_range runs into the truncation edge; the uncertainty is widened")
    m = scaled_rdm(params, m_max)
    ks = list(range(k0, k1 + 1))
    logs = log_nons(params, ks, m_max, scaled=m)
    kk = np.array(ks, dtype=float)
    y = -(np.array([logs[k] for k in ks]) - (n - 1) * np.log(kk))
    slope, intercept = np.polyfit(kk + 0.5, y, 1)
    ratio = y[-1] / (kk[-1] + 0.5)
    out = [DecayFit("non_decay", float(slope), float(intercept), float(ratio), params.beta_omega,
                    float(abs(ratio - slope)))]
    for k in orbitals:
        z = no_coefficients(params, k, m_max, scaled=m)
        up = sorted(i for i in z if i - k >= gaussian_offset)
        if len(up) >= 4:
            t = np.array([i - k for i in up], dtype=float)
            g2, g1, g0 = np.polyfit(t, [-z[i] for i in up], 2)
            expected = params.beta_omega / (4 * (n - 1)) if n > 1 else None
            out.append(DecayFit(f"gaussian_{k}", float(g2), float(g0), float(-z[up[-1]] / t[-1] ** 2),
                                expected, float(abs(g1) / t[-1])))
        else:
            warnings.warn(f"orbital {k}: window too small for the Gaussian fit")
        down = sorted(i for i in z if 2 <= k - i)
        if len(down) >= 3:
            t = np.array([k - i for i in down], dtype=float)
            s1, s0 = np.polyfit(t, [-z[i] for i in down], 1)
            out.append(DecayFit(f"exponential_{k}", float(s1), float(s0), float(s1)))
    return out


# ---------------------------------------------------------------- sweeps

def sweep_csv(N: int, deltas, k_max: int = 10, m_max: int = DEFAULT_M_MAX) -> tuple[str, str]:
    """CSV rows (delta, k, lambda_k) and a JSON list of the derived parameters."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "k", "lambda_k"])
    meta = []
    for d in deltas:
        p = derive_params(N, delta=d)
        spec = fermionic_nons(p, m_max)
        for k, v in enumerate(spec.values[:k_max], start=1):
            w.writerow([f"{d:.12g}", k, f"{v:.12g}"])
        meta.append(_json_safe(p.to_dict()))
    return buf.getvalue(), json.dumps(meta, indent=2)


def _json_safe(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}
