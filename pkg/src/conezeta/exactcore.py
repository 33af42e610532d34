"""Exact rational arithmetic kernel: Bernoulli numbers and polynomials,
and the closed Bernoulli-polynomial form of cone zeta values at
non-positive integers ("formal" multiple zeta values).

Everything here is exact.  The formal zeta values are generic over any
characteristic-0 coefficient ring: the only requirements are ring
operations, equality, and that multiplication by ``gmpy2.mpq`` works
(every coefficient type in this package provides that).  Large Bernoulli
indices (the p-adic interpolation nodes need indices into the
thousands) are produced from the integer tangent-number triangle, which
avoids rational gcd work; the defining recurrence is kept in the test
suite as an independent oracle.
"""

from __future__ import annotations

import threading

import gmpy2
from gmpy2 import mpq, mpz

__all__ = [
    "BernoulliTable",
    "TruncatedPolynomial",
    "bernoulli_number",
    "bernoulli_polynomial",
    "zeta_formal",
    "default_table",
]

# Hard ceiling on cached Bernoulli indices; the divided-difference node
# generators must stay below this.
MAX_BERNOULLI_INDEX = 5000


class BernoulliTable:
    """Append-only cache of exact Bernoulli numbers B_0, B_1, ...

    Uses the second convention (B_1 = -1/2, so B_l(0) = B_l).  Extending
    the table never changes previously cached entries, and the table may
    be shared across threads.
    """

    def __init__(self, max_degree: int = MAX_BERNOULLI_INDEX):
        self.max_degree = max_degree
        self._lock = threading.Lock()
        # tangent numbers T_1, T_2, ...: tan x = sum T_n x^(2n-1)/(2n-1)!
        self._tangent = [mpz(1)]
        self._numbers = [mpq(1), mpq(-1, 2)]

    def number(self, l: int) -> mpq:
        """Exact Bernoulli number B_l."""
        if l < 0:
            raise ValueError("Bernoulli index must be non-negative")
        if l > self.max_degree:
            raise ValueError(
                f"Bernoulli index {l} exceeds table cap {self.max_degree}"
            )
        if l != 1 and l % 2 == 1:
            return mpq(0)
        with self._lock:
            while 2 * len(self._tangent) < l:
                self._grow_tangent()
            if l <= 1:
                return self._numbers[l]
            n = l // 2
            tn = self._tangent[n - 1]
        four_n = mpz(4) ** n
        return mpq((-1) ** (n - 1) * 2 * n * tn, four_n * (four_n - 1))

    def _grow_tangent(self) -> None:
        # Extend the tangent triangle by doubling the row length.
        target = max(8, 2 * len(self._tangent))
        n = target
        row = [mpz(0)] * (n + 1)
        row[1] = mpz(1)
        for k in range(2, n + 1):
            row[k] = mpz(k - 1) * row[k - 1]
        out = [row[1]]
        # After processing column k the entry row[j] for j>=k holds the
        # partial recurrence; row[k] is final and equals T_k.
        for k in range(2, n + 1):
            for j in range(k, n + 1):
                row[j] = mpz(j - k) * row[j - 1] + mpz(j - k + 2) * row[j]
            out.append(row[k])
        self._tangent = out

    def polynomial(self, l: int, x):
        """Exact value of the Bernoulli polynomial B_l at x.

        ``x`` may be any ring element supporting + , * and scalar
        multiplication by mpq.
        """
        if l < 0:
            raise ValueError("Bernoulli index must be non-negative")
        if l == 0:
            return mpq(1)
        # Horner in x: B_l(x) = sum_k C(l,k) B_k x^(l-k)
        acc = self.number(0) * 1
        for k in range(1, l + 1):
            acc = acc * x + mpq(gmpy2.bincoef(l, k)) * self.number(k)
        return acc


_DEFAULT = BernoulliTable()


def default_table() -> BernoulliTable:
    return _DEFAULT


def bernoulli_number(l: int) -> mpq:
    return _DEFAULT.number(l)


def bernoulli_polynomial(l: int, x):
    return _DEFAULT.polynomial(l, x)


def zeta_formal(m: int, v, x, table: BernoulliTable | None = None):
    """Bernoulli-polynomial closed form of the cone zeta value at -m.

    For a rank-r cone with weight vector v (all entries nonzero) and
    rational offset vector x this is

        (-1)^r * m! * sum_{|l| = m+r} prod_i B_{l_i}(x_i) v_i^(l_i-1) / l_i!

    which equals the analytic continuation of sum (z + n.v)^(-s) at
    s = -m when the data is real and positive, but makes sense over any
    characteristic-0 coefficient ring.  The empty cone (r = 0) yields 1
    at m = 0 and 0 for m >= 1 (the index set {|l| = m} over zero indices
    is empty unless m = 0).
    """
    tab = table or _DEFAULT
    r = len(v)
    if len(x) != r:
        raise ValueError("v and x must have the same length")
    if m < 0:
        raise ValueError("m must be non-negative")
    for vi in v:
        if vi == 0:
            raise ValueError("cone weights must be nonzero")
    if r == 0:
        return mpq(1) if m == 0 else mpq(0)

    fac = gmpy2.fac
    sign = mpq((-1) ** r) * fac(m)
    if r == 1:
        l = m + 1
        return sign * mpq(1, fac(l)) * tab.polynomial(l, x[0]) * v[0] ** (l - 1)

    # r >= 2: iterate over compositions of m+r.
    def branch(i: int, rem: int, acc):
        if i == r - 1:
            term = mpq(1, fac(rem)) * tab.polynomial(rem, x[i])
            yield acc * term * v[i] ** (rem - 1)
            return
        for l in range(rem + 1):
            term = mpq(1, fac(l)) * tab.polynomial(l, x[i])
            yield from branch(i + 1, rem - l, acc * term * v[i] ** (l - 1))

    total = None
    for t in branch(0, m + r, mpq(1)):
        total = t if total is None else total + t
    return sign * total


class TruncatedPolynomial:
    """Dense truncated polynomial over an exact coefficient ring.

    Used to extract single power-series coefficients in exact
    computations (the coefficients are mpq or field elements; division
    requires an invertible constant term).  The modulus is x^order.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order: int):
        coeffs = list(coeffs)[:order]
        if len(coeffs) < order:
            zero = coeffs[0] * 0 if coeffs else mpq(0)
            coeffs = coeffs + [zero] * (order - len(coeffs))
        self.coeffs = coeffs
        self.order = order

    @classmethod
    def constant(cls, value, order: int):
        return cls([value], order)

    def _coerce(self, other):
        if isinstance(other, TruncatedPolynomial):
            if other.order != self.order:
                raise ValueError("mixed truncation orders")
            return other
        return TruncatedPolynomial([other], self.order)

    def __add__(self, other):
        o = self._coerce(other)
        return TruncatedPolynomial(
            [a + b for a, b in zip(self.coeffs, o.coeffs)], self.order)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedPolynomial([-a for a in self.coeffs], self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedPolynomial):
            return TruncatedPolynomial(
                [a * other for a in self.coeffs], self.order)
        out = [self.coeffs[0] * 0] * self.order
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j in range(self.order - i):
                b = other.coeffs[j]
                if b == 0:
                    continue
                out[i + j] = out[i + j] + a * b
        return TruncatedPolynomial(out, self.order)

    __rmul__ = __mul__

    def inverse(self):
        c0 = self.coeffs[0]
        inv0 = 1 / c0
        out = [c0 * 0] * self.order
        out[0] = inv0
        for i in range(1, self.order):
            acc = None
            for j in range(1, i + 1):
                t = self.coeffs[j] * out[i - j]
                acc = t if acc is None else acc + t
            out[i] = -(acc * inv0) if acc is not None else out[i]
        return TruncatedPolynomial(out, self.order)

    def __truediv__(self, other):
        if isinstance(other, TruncatedPolynomial):
            return self * other.inverse()
        return TruncatedPolynomial([a / other for a in self.coeffs], self.order)

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        result = TruncatedPolynomial.constant(
            self.coeffs[0] * 0 + 1, self.order)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, TruncatedPolynomial):
            return self.coeffs == other.coeffs
        return all(c == 0 for c in self.coeffs[1:]) and self.coeffs[0] == other

    def __getitem__(self, i: int):
        return self.coeffs[i]

    def __repr__(self):
        return f"TruncPoly({self.coeffs!r} mod x^{self.order})"
