"""Truncated power series with exact rational coefficients.

Only what the weak-coupling expansions need: ring operations, reciprocal,
square root and integer powers, all truncated at a fixed order.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import ArgumentError


class TSeries:
    __slots__ = ("c", "order")

    def __init__(self, coeffs, order: int):
        c = [Fraction(x) for x in list(coeffs)[: order + 1]]
        c += [Fraction(0)] * (order + 1 - len(c))
        self.c = c
        self.order = order

    @classmethod
    def const(cls, value, order: int) -> "TSeries":
        return cls([value], order)

    @classmethod
    def var(cls, order: int) -> "TSeries":
        return cls([0, 1], order)

    @classmethod
    def exp_linear(cls, slope, order: int) -> "TSeries":
        """exp(slope * t)."""
        slope = Fraction(slope)
        return cls([slope ** k / factorial(k) for k in range(order + 1)], order)

    def _coerce(self, other) -> "TSeries":
        if isinstance(other, TSeries):
            if other.order != self.order:
                raise ArgumentError("series orders differ")
            return other
        return TSeries.const(other, self.order)

    def __add__(self, other):
        o = self._coerce(other)
        return TSeries([a + b for a, b in zip(self.c, o.c)], self.order)

    __radd__ = __add__

    def __neg__(self):
        return TSeries([-a for a in self.c], self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TSeries):
            f = Fraction(other)
            return TSeries([a * f for a in self.c], self.order)
        o = self._coerce(other)
        n = self.order
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.c):
            if a:
                for j in range(n + 1 - i):
                    if o.c[j]:
                        out[i + j] += a * o.c[j]
        return TSeries(out, n)

    __rmul__ = __mul__

    def reciprocal(self) -> "TSeries":
        a0 = self.c[0]
        if a0 == 0:
            raise ArgumentError("series with zero constant term has no reciprocal")
        n = self.order
        out = [Fraction(0)] * (n + 1)
        out[0] = 1 / a0
        for k in range(1, n + 1):
            s = sum(self.c[j] * out[k - j] for j in range(1, k + 1))
            out[k] = -s / a0
        return TSeries(out, n)

    def __truediv__(self, other):
        if not isinstance(other, TSeries):
            return self * (1 / Fraction(other))
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = TSeries.const(1, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sqrt(self) -> "TSeries":
        a0 = self.c[0]
        r0 = _rational_sqrt(a0)
        n = self.order
        out = [Fraction(0)] * (n + 1)
        out[0] = r0
        for k in range(1, n + 1):
            s = sum(out[j] * out[k - j] for j in range(1, k))
            out[k] = (self.c[k] - s) / (2 * r0)
        return TSeries(out, n)

    def shift_down(self, k: int) -> "TSeries":
        """Divide by t**k; the first k coefficients must vanish."""
        if any(self.c[:k]):
            raise ArgumentError("series does not vanish to the requested order")
        return TSeries(self.c[k:], self.order - k)

    def __call__(self, t: float) -> float:
        return float(sum(float(a) * t ** k for k, a in enumerate(self.c)))

    def __eq__(self, other):
        return isinstance(other, TSeries) and self.c == other.c

    def __repr__(self):
        terms = [f"{a}*t^{k}" for k, a in enumerate(self.c) if a]
        return "TSeries(" + (" + ".join(terms) or "0") + f"; O(t^{self.order + 1}))"


def _rational_sqrt(x: Fraction) -> Fraction:
    if x <= 0:
        raise ArgumentError("square root needs a positive constant term")
    from math import isqrt
    p, q = x.numerator, x.denominator
    rp, rq = isqrt(p), isqrt(q)
    if rp * rp != p or rq * rq != q:
        raise ArgumentError(f"constant term {x} is not a rational square")
    return Fraction(rp, rq)
