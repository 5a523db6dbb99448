"""Block diagonalization of matrix power series by a single exponential generator.

A series ``H(t) = sum_k H_k t^k`` with diagonal ``H_0`` is conjugated as
``exp(S) H exp(-S)`` where ``S = sum_{k>=1} S_k t^k`` is block off-diagonal. Each
``S_k`` removes the off-diagonal block at order k. Arithmetic is exact
(``Fraction`` entries in object arrays) when the input is rational and floating
point otherwise.

The algebra never uses hermiticity, so similarity-transformed (non-symmetric)
inputs are handled as well. For hermitian input the generators come out
anti-hermitian and the transformation is unitary.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ArgumentError

MAX_EIGEN_BLOCK = 8


def _is_rational(x) -> bool:
    return isinstance(x, (numbers.Rational, np.integer))


def _as_array(m, exact: bool) -> np.ndarray:
    a = np.asarray(m)
    if exact:
        out = np.empty(a.shape, dtype=object)
        for idx, v in np.ndenumerate(a):
            out[idx] = Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
        return out
    return np.asarray(a, dtype=complex if np.iscomplexobj(a) else float)


class MatrixSeries:
    """Terms ``H_0, H_1, ..., H_order`` of a square matrix power series."""

    def __init__(self, terms, exact: bool | None = None):
        terms = list(terms)
        if not terms:
            raise ArgumentError("a matrix series needs at least one term")
        raw = [np.asarray(t) for t in terms]
        shape = raw[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ArgumentError("series terms must be square matrices")
        if any(t.shape != shape for t in raw):
            raise ArgumentError("all series terms must share one dimension")
        if exact is None:
            exact = all(_is_rational(v) for t in raw for v in t.ravel())
        self.exact = bool(exact)
        self.terms = [_as_array(t, self.exact) for t in raw]

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    @property
    def dim(self) -> int:
        return self.terms[0].shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.terms[k]

    def block(self, indices) -> "MatrixSeries":
        ix = np.asarray(list(indices), dtype=int)
        return MatrixSeries([t[np.ix_(ix, ix)] for t in self.terms], self.exact)

    def truncate(self, order: int) -> "MatrixSeries":
        return MatrixSeries(self.terms[: order + 1], self.exact)

    def evaluate(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k, m in enumerate(self.terms):
            out += np.asarray(m, dtype=complex) * t ** k
        if self.exact or not any(np.iscomplexobj(m) for m in self.terms):
            return out.real
        return out

    def trace(self) -> list:
        return [sum(np.diag(m)) for m in self.terms]


@dataclass(frozen=True)
class BlockSplit:
    """The P-block (0-based indices) of a ``dim``-dimensional space; the rest is P-bar."""

    indices: tuple[int, ...]
    dim: int

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        object.__setattr__(self, "indices", idx)
        if not idx or len(idx) == self.dim:
            raise ArgumentError("the P-block must be a nonempty proper subset")
        if idx[0] < 0 or idx[-1] >= self.dim:
            raise ArgumentError("P-block index out of range")

    @property
    def complement(self) -> tuple[int, ...]:
        s = set(self.indices)
        return tuple(i for i in range(self.dim) if i not in s)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.dim, dtype=bool)
        m[list(self.indices)] = True
        return m


def _zero(dim: int, exact: bool, dtype=float) -> np.ndarray:
    if exact:
        out = np.empty((dim, dim), dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros((dim, dim), dtype=dtype)


def _is_zero(m: np.ndarray, exact: bool, tol: float) -> bool:
    if exact:
        return all(v == 0 for v in m.ravel())
    return bool(np.all(np.abs(m) <= tol))


def _diagonal_blocks_vanish(b: np.ndarray, split: BlockSplit, exact: bool, tol: float) -> bool:
    p, q = list(split.indices), list(split.complement)
    return _is_zero(b[np.ix_(p, p)], exact, tol) and _is_zero(b[np.ix_(q, q)], exact, tol)


def ad_inverse(b, split: BlockSplit, gap=1, h0=None, tol: float = 1e-12) -> np.ndarray:
    """Solve ``[H_0, S] = B`` for block off-diagonal B.

    With a two-valued ``H_0`` (P-value minus P-bar value equal to ``gap``) this is
    ``(P B Pbar - Pbar B P) / gap``. Passing the diagonal ``h0`` instead divides
    entry (i, j) by ``h0[i] - h0[j]``, which also covers a multi-valued P-bar.
    """
    exact = all(_is_rational(v) for v in np.ravel(b))
    b = _as_array(b, exact)
    if b.shape != (split.dim, split.dim):
        raise ArgumentError("matrix and split dimensions differ")
    if not _diagonal_blocks_vanish(b, split, exact, tol):
        raise ArgumentError("ad_inverse needs a matrix with vanishing diagonal blocks")
    inP = split.mask()
    out = _zero(split.dim, exact, b.dtype)
    if h0 is None:
        g = Fraction(gap) if exact else float(gap)
        if g == 0:
            raise ArgumentError("the gap must be nonzero")
        for i in range(split.dim):
            for j in range(split.dim):
                if inP[i] != inP[j]:
                    out[i, j] = b[i, j] / g if inP[i] else -b[i, j] / g
        return out
    h = [Fraction(v) for v in h0] if exact else [float(v) for v in h0]
    for i in range(split.dim):
        for j in range(split.dim):
            if inP[i] != inP[j]:
                den = h[i] - h[j]
                if den == 0:
                    raise ArgumentError("H_0 is degenerate across the split")
                out[i, j] = b[i, j] / den
    return out


def _offdiag(m: np.ndarray, split: BlockSplit) -> np.ndarray:
    inP = split.mask()
    out = m.copy()
    same = inP[:, None] == inP[None, :]
    out[same] = Fraction(0) if m.dtype == object else 0
    return out


def _series_commutator(s, h, order: int):
    """Order-truncated ``[S, H]``; ``None`` stands for a vanishing term."""
    out = [None] * (order + 1)
    for i, si in enumerate(s):
        if i > order or si is None:
            continue
        for j in range(0, order + 1 - i):
            if h[j] is None:
                continue
            c = si.dot(h[j]) - h[j].dot(si)
            out[i + j] = c if out[i + j] is None else out[i + j] + c
    return out


def conjugate(series: MatrixSeries, generators, order: int | None = None) -> MatrixSeries:
    """``exp(S) H exp(-S)`` truncated at ``order``; ``generators[k]`` is ``S_k`` (index 0 unused)."""
    order = series.order if order is None else order
    exact = series.exact
    h = [series.terms[k] if k <= series.order else None for k in range(order + 1)]
    s = [None] + [generators[k] if k < len(generators) else None for k in range(1, order + 1)]
    result = list(h)
    term = h
    for n in range(1, order + 1):
        term = _series_commutator(s, term, order)
        if all(t is None for t in term):
            break
        f = Fraction(1, n) if exact else 1.0 / n
        term = [None if t is None else t * f for t in term]
        result = [t if r is None else r if t is None else r + t for r, t in zip(result, term)]
    return MatrixSeries([_zero(series.dim, exact) if r is None else r for r in result], exact)


def _check_h0(h0: np.ndarray, split: BlockSplit, exact: bool, tol: float) -> list:
    dim = split.dim
    if not _is_zero(h0 - np.diag(np.diag(h0)), exact, tol):
        raise ArgumentError("H_0 must be diagonal")
    d = list(np.diag(h0))
    p_vals = [d[i] for i in split.indices]
    a = p_vals[0]
    close = (lambda x, y: x == y) if exact else (lambda x, y: abs(x - y) <= tol)
    if not all(close(v, a) for v in p_vals):
        raise ArgumentError("H_0 must be constant on the P-block")
    if any(close(d[i], a) for i in split.complement):
        raise ArgumentError("H_0 on P-bar must differ from its P-block value")
    del dim
    return d


def block_diagonalize(series: MatrixSeries, split: BlockSplit, order: int | None = None,
                      return_generators: bool = False, tol: float = 1e-12):
    """Remove the P/P-bar coupling of ``series`` through ``order``.

    Returns the transformed series, and the generators ``[None, S_1, ...]`` when
    ``return_generators`` is set.
    """
    order = series.order if order is None else order
    if order > series.order:
        raise ArgumentError(f"order {order} exceeds the {series.order} available terms")
    if split.dim != series.dim:
        raise ArgumentError("split and series dimensions differ")
    exact = series.exact
    h0diag = _check_h0(series.terms[0], split, exact, tol)
    gens: list = [None]
    for k in range(1, order + 1):
        partial = conjugate(series, gens, k)
        off = _offdiag(partial.terms[k], split)
        gens.append(None if _is_zero(off, exact, 0.0) else ad_inverse(off, split, h0=h0diag, tol=np.inf))
    out = conjugate(series, gens, order)
    if not return_generators:
        return out
    return out, [None] + [_zero(series.dim, exact) if g is None else g for g in gens[1:]]


@dataclass(frozen=True)
class EigenSeries:
    """Power-series coefficients of one eigenvalue.

    ``resolved`` is False when the eigenvalue belongs to a block whose
    degeneracy could not be lifted exactly; the coefficients are then the block
    average.
    """

    coefficients: tuple
    resolved: bool = True

    def __call__(self, t: float) -> float:
        return float(sum(float(c) * t ** k for k, c in enumerate(self.coefficients)))


def _is_scalar(m: np.ndarray, exact: bool, tol: float) -> bool:
    c = m[0, 0]
    return _is_zero(m - c * _identity(m.shape[0], exact), exact, tol)


def _identity(n: int, exact: bool) -> np.ndarray:
    out = _zero(n, exact)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def _exact_eigenbasis(m: np.ndarray):
    """Columns of rational eigenvectors sorted by decreasing eigenvalue, or None."""
    import sympy

    sm = sympy.Matrix(m.shape[0], m.shape[1], lambda i, j: sympy.Rational(m[i, j].numerator, m[i, j].denominator))
    vecs = []
    for val, _mult, basis in sorted(sm.eigenvects(), key=lambda e: -e[0] if e[0].is_Rational else 0):
        if not val.is_Rational:
            return None
        vecs.extend(basis)
    if len(vecs) != m.shape[0]:
        return None
    v = sympy.Matrix.hstack(*vecs)
    vinv = v.inv()
    conv = lambda x: Fraction(int(x.p), int(x.q))
    to_arr = lambda s: np.array([[conv(s[i, j]) for j in range(s.cols)] for i in range(s.rows)], dtype=object)
    return to_arr(v), to_arr(vinv)


def _float_eigenbasis(m: np.ndarray, tol: float):
    vals, v = np.linalg.eig(m)
    if np.max(np.abs(vals.imag), initial=0) > tol and not np.iscomplexobj(m):
        return None
    order = np.argsort(-vals.real, kind="stable")
    v = v[:, order]
    if np.linalg.cond(v) > 1e8:
        return None
    vinv = np.linalg.inv(v)
    if not np.iscomplexobj(m):
        v, vinv = v.real, vinv.real
    return v, vinv


def _eig_rec(terms: list, exact: bool, tol: float) -> list[tuple[list, bool]]:
    n = terms[0].shape[0]
    order = len(terms) - 1
    if n == 1:
        return [([t[0, 0] for t in terms], True)]
    j = next((k for k, t in enumerate(terms) if not _is_scalar(t, exact, tol)), None)
    if j is None:
        return [([t[0, 0] for t in terms], True)] * n
    prefix = [terms[i][0, 0] for i in range(j)]
    g = terms[j:]
    basis = _exact_eigenbasis(g[0]) if exact else _float_eigenbasis(g[0], tol)
    if basis is None:
        mean = [sum(np.diag(t)) / n for t in terms]
        return [(mean, False)] * n
    v, vinv = basis
    g = [vinv.dot(t).dot(v) for t in g]
    h = np.diag(g[0])
    lead = h[0]
    close = (lambda x: x == lead) if exact else (lambda x: abs(x - lead) <= max(tol, 1e-9 * abs(lead)))
    p = [i for i in range(n) if close(h[i])]
    # clean round-off so the diagonal precondition holds exactly
    if not exact:
        g[0] = np.diag(np.where([close(x) for x in h], lead, h))
    split = BlockSplit(tuple(p), n)
    gt = block_diagonalize(MatrixSeries(g, exact), split, order - j, tol=max(tol, 1e-9))
    out = []
    for blk in (split.indices, split.complement):
        ix = np.ix_(list(blk), list(blk))
        for coeffs, ok in _eig_rec([t[ix] for t in gt.terms], exact, tol):
            out.append((prefix + list(coeffs), ok))
    return out


def eigenvalue_series(block: MatrixSeries, order: int | None = None, tol: float = 1e-12) -> list[EigenSeries]:
    """One coefficient sequence per eigenvalue, sorted decreasingly for small positive t.

    Residual degeneracies are split recursively at the first order whose term is
    not a multiple of the identity, after diagonalizing that term exactly.
    """
    order = block.order if order is None else order
    if order > block.order:
        raise ArgumentError(f"order {order} exceeds the {block.order} available terms")
    if block.dim > MAX_EIGEN_BLOCK:
        raise ArgumentError(f"eigenvalue series limited to blocks of dimension <= {MAX_EIGEN_BLOCK}")
    res = _eig_rec(block.terms[: order + 1], block.exact, tol)
    key = (lambda r: tuple(r[0])) if block.exact else (lambda r: tuple(float(np.real(c)) for c in r[0]))
    res.sort(key=key, reverse=True)
    return [EigenSeries(tuple(c), ok) for c, ok in res]
