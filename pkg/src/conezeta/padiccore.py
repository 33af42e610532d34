"""Finite-precision p-adic arithmetic and the p-adic analytic layer.

The number type tracks (valuation, unit, relative precision) with
pessimistic propagation; the decomposition into p-power, Teichmueller
and principal parts, the Iwasawa logarithm, and principal-unit powers
sit directly on top of it.

Two independent evaluators compute the p-adic cone zeta:

* a truncated nested-average (Volkenborn-type) evaluator, kept as a
  low-precision cross-validation oracle, and
* the production route through exact values at non-positive integers:
  at s = -m the p-adic function equals a Teichmueller/p-power twist of
  the exact Bernoulli closed form, so the derivative at 0 (the p-adic
  log multiple gamma) comes from Newton divided differences through
  nodes m = k (p-1) p^j that converge p-adically to 0.

Large nodes force Bernoulli indices in the thousands, so node values are
computed modulo a tall power of p with dense power series whose
multiplication is a single huge-integer product (Kronecker
substitution via GMP).  Everything reports an honestly attained
precision: the arithmetic bound, capped by an empirical
order-of-convergence check (rerunning with the deepest node dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpq, mpz

from .exactcore import default_table, zeta_formal
from .numberfield import EmbeddingPair, FieldElement, Ideal, QuadField

__all__ = [
    "PadicNumber",
    "PadicContext",
    "PadicDecomposition",
    "decompose",
    "iwasawa_log",
    "pow_zp",
    "teichmuller",
    "volkenborn_truncated",
    "zeta_p_exact_neg",
    "zeta_p_truncated",
    "interpolation_nodes",
    "newton_derivative_at_zero",
    "BarnesPadicEvaluator",
    "PadicPrecisionError",
]


class PadicPrecisionError(ArithmeticError):
    pass


class PadicNumber:
    """Element of Q_p known to finite precision.

    value = unit * p^val + O(p^(val + rel)) with p coprime to unit;
    exact zero is represented with unit None and ``val`` holding the
    absolute precision O(p^val).  Equality means agreement to the
    smaller of the two absolute precisions.
    """

    __slots__ = ("p", "val", "unit", "rel")

    def __init__(self, p: int, val: int, unit, rel: int):
        self.p = p
        if unit is None:
            self.val = val  # absolute precision of a zero
            self.unit = None
            self.rel = 0
            return
        unit = int(unit)
        if rel <= 0:
            # no significant digits left: collapse to an unknown zero
            self.val = val
            self.unit = None
            self.rel = 0
            return
        mod = p ** rel
        unit %= mod
        if unit == 0:
            self.val = val + rel
            self.unit = None
            self.rel = 0
            return
        # strip accidental p-content into the valuation
        while unit % p == 0:
            unit //= p
            val += 1
            rel -= 1
            if rel <= 0:
                self.val = val
                self.unit = None
                self.rel = 0
                return
        self.val = val
        self.unit = unit
        self.rel = rel

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, p: int, absprec: int) -> "PadicNumber":
        return cls(p, absprec, None, 0)

    @classmethod
    def from_mpq(cls, q, p: int, rel: int) -> "PadicNumber":
        q = mpq(q)
        if q == 0:
            return cls.zero(p, rel)
        num, den = mpz(q.numerator), mpz(q.denominator)
        vn = int(gmpy2.remove(num, p)[1]) if num % p == 0 else 0
        if vn:
            num = num // mpz(p) ** vn
        vd = int(gmpy2.remove(den, p)[1]) if den % p == 0 else 0
        if vd:
            den = den // mpz(p) ** vd
        mod = mpz(p) ** rel
        unit = num * gmpy2.invert(den, mod) % mod
        return cls(p, vn - vd, unit, rel)

    # -- properties -------------------------------------------------------

    def is_zero(self) -> bool:
        return self.unit is None

    @property
    def absprec(self) -> int:
        return self.val if self.unit is None else self.val + self.rel

    def valuation(self) -> int:
        if self.unit is None:
            raise PadicPrecisionError(
                f"value is O(p^{self.val}); valuation unknown")
        return self.val

    def unit_mod(self, digits: int) -> int:
        if self.unit is None:
            raise PadicPrecisionError("zero to working precision")
        if digits > self.rel:
            raise PadicPrecisionError(
                f"requested {digits} unit digits, only {self.rel} known")
        return self.unit % self.p ** digits

    def lift(self) -> mpq:
        """Rational lift unit * p^val of the known digits."""
        if self.unit is None:
            return mpq(0)
        return mpq(self.unit) * mpq(self.p) ** self.val

    # -- arithmetic -------------------------------------------------------

    def _c(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        return PadicNumber.from_mpq(mpq(other), self.p, max(self.rel, 1))

    def __add__(self, other):
        o = self._c(other)
        if self.unit is None and o.unit is None:
            return PadicNumber.zero(self.p, min(self.val, o.val))
        if self.unit is None:
            return PadicNumber(o.p, o.val, o.unit,
                               min(o.rel, self.val - o.val))
        if o.unit is None:
            return PadicNumber(self.p, self.val, self.unit,
                               min(self.rel, o.val - self.val))
        absprec = min(self.absprec, o.absprec)
        v = min(self.val, o.val)
        if absprec <= v:
            return PadicNumber.zero(self.p, absprec)
        p = self.p
        mod = p ** (absprec - v)
        total = (self.unit * p ** (self.val - v)
                 + o.unit * p ** (o.val - v)) % mod
        return PadicNumber(p, v, total, absprec - v)

    __radd__ = __add__

    def __neg__(self):
        if self.unit is None:
            return self
        return PadicNumber(self.p, self.val, -self.unit % self.p ** self.rel,
                           self.rel)

    def __sub__(self, other):
        return self + (-self._c(other))

    def __rsub__(self, other):
        return self._c(other) - self

    def __mul__(self, other):
        o = self._c(other)
        if self.unit is None or o.unit is None:
            # O(p^a) * (u p^v + O(p^b)) = O(p^(a+v)); O * O pessimistic
            if self.unit is None and o.unit is None:
                return PadicNumber.zero(self.p, self.val + o.val)
            z, nz = (self, o) if self.unit is None else (o, self)
            return PadicNumber.zero(self.p, z.val + nz.val)
        rel = min(self.rel, o.rel)
        return PadicNumber(self.p, self.val + o.val,
                           self.unit * o.unit % self.p ** rel, rel)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._c(other)
        if o.unit is None:
            raise ZeroDivisionError("division by a p-adic zero")
        rel = min(self.rel, o.rel) if self.unit is not None else o.rel
        inv = int(gmpy2.invert(mpz(o.unit), mpz(self.p) ** rel))
        if self.unit is None:
            return PadicNumber.zero(self.p, self.val - o.val)
        return PadicNumber(self.p, self.val - o.val,
                           self.unit * inv % self.p ** rel, rel)

    def __rtruediv__(self, other):
        return self._c(other) / self

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return (PadicNumber.from_mpq(1, self.p, self.rel) / self) ** (-e)
        if self.unit is None:
            if e == 0:
                raise PadicPrecisionError("0^0 at unknown zero")
            return PadicNumber.zero(self.p, self.val * e)
        return PadicNumber(self.p, self.val * e,
                           pow(self.unit, e, self.p ** self.rel), self.rel)

    def __eq__(self, other):
        try:
            o = self._c(other)
        except (ValueError, TypeError):
            return NotImplemented
        ap = min(self.absprec, o.absprec)
        d = self - o
        return d.unit is None or d.val >= ap

    def __repr__(self):
        if self.unit is None:
            return f"O({self.p}^{self.val})"
        return f"{self.unit}*{self.p}^{self.val} + O({self.p}^{self.absprec})"


@dataclass(frozen=True)
class PadicDecomposition:
    ord: int
    teich: PadicNumber
    principal: PadicNumber


def teichmuller(z: PadicNumber) -> PadicNumber:
    """Root-of-unity part of the unit of z: the limit of p-power maps."""
    if z.unit is None:
        raise ValueError("zero input")
    p, rel = z.p, z.rel
    mod = p ** rel
    w = z.unit % mod
    prev = None
    while prev != w:
        prev = w
        w = pow(w, p, mod)
    return PadicNumber(p, 0, w, rel)


def decompose(z: PadicNumber) -> PadicDecomposition:
    """z = p^ord * teich * principal with principal = 1 mod p."""
    if z.unit is None:
        raise ValueError("zero input")
    th = teichmuller(z)
    unit = PadicNumber(z.p, 0, z.unit, z.rel)
    principal = unit / th
    return PadicDecomposition(z.val, th, principal)


def iwasawa_log(z: PadicNumber) -> PadicNumber:
    """Iwasawa branch: log of the principal-unit part (kills p-powers
    and roots of unity)."""
    dec = decompose(z)
    u = dec.principal
    p = z.p
    n = u.rel  # target absolute precision
    x = u - 1
    if x.unit is None:
        return PadicNumber.zero(p, x.val)
    total = PadicNumber.zero(p, n + 8)
    term = PadicNumber.from_mpq(1, p, n + 8)
    k = 1
    xk = x
    while True:
        contrib = xk / k if k % 2 == 1 else -(xk / k)
        total = total + contrib
        k += 1
        min_val = k * x.val - int(math.log(k, p)) - 1
        if min_val >= n:
            break
        xk = xk * x
    return total


def pow_zp(z: PadicNumber, s) -> PadicNumber:
    """z^s for a principal unit z and s in Z_p, by the binomial series."""
    p = z.p
    x = z - 1
    if not (x.unit is None or x.val >= 1):
        raise ValueError("base must satisfy |z - 1|_p < 1")
    if isinstance(s, int):
        s = PadicNumber.from_mpq(s, p, z.rel + 8)
    n = z.absprec
    total = PadicNumber.from_mpq(1, p, n + 8)
    binom = PadicNumber.from_mpq(1, p, n + 8)
    xk = PadicNumber.from_mpq(1, p, n + 8)
    if x.unit is None:
        return total
    k = 0
    while True:
        k += 1
        binom = binom * (s - (k - 1)) / k
        xk = xk * x
        total = total + binom * xk
        if k * x.val - 2 * int(math.log(k, p) + 1) >= n:
            break
    return total


# --------------------------------------------------------------------
# realization of exact data in Q_p
# --------------------------------------------------------------------

class PadicContext:
    """Working prime, precision and the pinned field realization.

    Embedding index 0 realizes sqrt(d) as the Hensel lift of the
    smallest positive square root of d mod p; this mirrors the real
    labels, fixing the identification between the real and p-adic
    embedding pairs once per session.
    """

    def __init__(self, p: int, prec: int = 30, bernoulli_cap: int = 1500):
        p = int(p)
        if p == 2 or not gmpy2.is_prime(mpz(p)):
            raise ValueError("p must be an odd prime")
        self.p = p
        self.prec = prec
        self.bernoulli_cap = bernoulli_cap
        self._roots: dict[tuple[int, int], int] = {}
        self._barnes: dict[int, BarnesPadicEvaluator] = {}

    def sqrt_root(self, d: int, digits: int) -> int:
        """Hensel lift (to the requested digits) of the pinned square
        root of d mod p."""
        key = (d, digits)
        got = self._roots.get(key)
        if got is not None:
            return got
        p = self.p
        r0 = None
        for r in range(1, p):
            if r * r % p == d % p:
                r0 = min(r, p - r)
                break
        if r0 is None:
            raise ValueError(f"{p} is inert here; values do not land in Q_p")
        mod = p
        r = r0
        while mod < p ** digits:
            mod = min(mod * mod, p ** digits)
            r = int((r - (r * r - d) * gmpy2.invert(2 * r, mod)) % mod)
        self._roots[key] = r
        return r

    def realize(self, z, iota: EmbeddingPair | None = None,
                digits: int | None = None) -> PadicNumber:
        """Q_p-realization of an exact rational or field element."""
        digits = digits or self.prec
        if isinstance(z, FieldElement):
            if z.field.degree == 1:
                return PadicNumber.from_mpq(z.a, self.p, digits)
            if iota is None:
                raise ValueError("field elements need an embedding label")
            d = z.field.d
            if gmpy2.kronecker(mpz(d), mpz(self.p)) != 1:
                raise ValueError(
                    f"sqrt({d}) does not embed in Q_{self.p} (non-split prime)")
            extra = digits + 8
            root = self.sqrt_root(d, extra)
            if iota.index == 1:
                root = -root % self.p ** extra
            a = PadicNumber.from_mpq(z.a, self.p, extra)
            b = PadicNumber.from_mpq(z.b, self.p, extra)
            return a + b * PadicNumber(self.p, 0, root, extra)
        return PadicNumber.from_mpq(mpq(z), self.p, digits)

    def barnes(self, degree_cap: int | None = None) -> "BarnesPadicEvaluator":
        cap = degree_cap or self.bernoulli_cap
        ev = self._barnes.get(cap)
        if ev is None:
            ev = BarnesPadicEvaluator(self, cap)
            self._barnes[cap] = ev
        return ev

    def input(self, value, iota: EmbeddingPair | None = None) -> "ExactInput":
        return ExactInput(self, value, iota)


class ExactInput:
    """Exact number (rational or field element with an embedding label)
    that can be realized in Q_p at any requested precision.

    The heavy evaluators compute their working width from the data and
    realize on demand, so callers never guess precisions.
    """

    __slots__ = ("ctx", "value", "iota", "_ord")

    def __init__(self, ctx: PadicContext, value, iota: EmbeddingPair | None):
        self.ctx = ctx
        if isinstance(value, FieldElement) and value.field.degree == 1:
            value = value.a
        self.value = value if isinstance(value, FieldElement) else mpq(value)
        self.iota = iota if isinstance(value, FieldElement) else None
        self._ord = None

    def key(self):
        if isinstance(self.value, FieldElement):
            return (self.value.field.d, self.value.a, self.value.b,
                    self.iota.index if self.iota else 0)
        return ("q", self.value)

    def realize(self, digits: int) -> PadicNumber:
        return self.ctx.realize(self.value, self.iota, digits)

    def ordp(self) -> int:
        if self._ord is None:
            if isinstance(self.value, FieldElement):
                digits = 24
                while True:
                    z = self.realize(digits)
                    if not z.is_zero():
                        self._ord = z.valuation()
                        break
                    digits *= 2
                    if digits > 4096:
                        raise PadicPrecisionError("cannot resolve valuation")
            else:
                self._ord = _vp_q(self.value, self.ctx.p)
        return self._ord

    def scaled(self, factor) -> "ExactInput":
        if isinstance(self.value, FieldElement):
            return ExactInput(self.ctx, self.value * factor, self.iota)
        return ExactInput(self.ctx, self.value * mpq(factor), None)


# --------------------------------------------------------------------
# truncated nested-average evaluator (cross-validation oracle)
# --------------------------------------------------------------------

def volkenborn_truncated(f, p: int, levels: tuple[int, ...],
                         budget: int = 2_000_000) -> PadicNumber:
    """Finite nested average (1/p^{sum l}) sum f(n_1..n_r) over residue
    blocks; a truncation of the defining limit, used as a low-precision
    oracle.  f returns PadicNumber or exact rationals."""
    r = len(levels)
    if r not in (1, 2):
        raise ValueError("only ranks 1 and 2 are supported")
    count = 1
    for l in levels:
        count *= p ** l
    if count > budget:
        raise ValueError(f"sample budget exceeded: {count} > {budget}")
    total = None
    if r == 1:
        for n in range(p ** levels[0]):
            v = f(n)
            total = v if total is None else total + v
    else:
        for n1 in range(p ** levels[0]):
            for n2 in range(p ** levels[1]):
                v = f(n1, n2)
                total = v if total is None else total + v
    return total * mpq(1, count)


def zeta_p_truncated(m: int, v, z, ctx: PadicContext,
                     levels: tuple[int, ...]) -> PadicNumber:
    """Truncated-average route to the p-adic cone zeta at s = -m.

    v, z are exact rationals.  Direct transcription of the nested-average
    definition with the integrand (z + n.v)^r / prod v * <z + n.v>^m.
    """
    p, prec = ctx.p, ctx.prec
    r = len(v)
    vq = [mpq(t) for t in v]
    zq = mpq(z)
    _check_condition(vq, zq, p)
    denom = mpq(1)
    for t in vq:
        denom *= t

    def integrand(*ns):
        w = zq
        for n, t in zip(ns, vq):
            w += n * t
        wp = PadicNumber.from_mpq(w, p, prec)
        dec = decompose(wp)
        # <w>^m is exactly the m-th power of the principal part
        return PadicNumber.from_mpq(w ** r / denom, p, prec) * dec.principal ** m

    return volkenborn_truncated(integrand, p, levels) * _falling_factor(r, m)


def _falling_factor(r: int, m: int) -> mpq:
    # (-1)^r / ((r+m)(r-1+m)...(1+m))
    den = 1
    for k in range(1, r + 1):
        den *= k + m
    return mpq((-1) ** r, den)


def _check_condition(v, z, p: int) -> None:
    """ord_p(z) < ord_p(v_i) for all i."""

    def vp(q):
        q = mpq(q)
        n = 0
        num, den = mpz(q.numerator), mpz(q.denominator)
        while num % p == 0:
            num //= p
            n += 1
        while den % p == 0:
            den //= p
            n -= 1
        return n

    vz = vp(z)
    if any(vz >= vp(t) for t in v):
        raise ValueError(
            "interpolation condition violated: ord(z) must be smaller "
            "than every ord(v_i)")


# --------------------------------------------------------------------
# exact interpolation nodes
# --------------------------------------------------------------------

def zeta_p_exact_neg(m: int, v, z, ctx: PadicContext,
                     x=None) -> PadicNumber:
    """Production node value zeta_p(-m, v, z): the twist
    p^(-ord(z) m) theta(z)^(-m) times the exact Bernoulli closed form.

    v and z are exact rationals (or field elements already realized);
    x, when given, supplies the offset vector with z = x . v (otherwise
    it is recovered, which requires rank 1).
    """
    p = ctx.p
    vq = [mpq(t) for t in v]
    zq = mpq(z)
    _check_condition(vq, zq, p)
    if x is None:
        if len(vq) != 1:
            raise ValueError("offsets are required for rank >= 2")
        x = [zq / vq[0]]
    exact = zeta_formal(m, vq, [mpq(t) for t in x])
    prec = ctx.prec + abs(m) + 8
    zp = PadicNumber.from_mpq(zq, p, prec)
    theta = teichmuller(zp)
    ordz = zp.val
    twist = (theta ** (-m)) * PadicNumber.from_mpq(
        mpq(p) ** (-ordz * m), p, prec)
    return PadicNumber.from_mpq(exact, p, prec) * twist


def interpolation_nodes(p: int, degree_cap: int, j_max: int = 3,
                        multipliers: tuple[int, ...] = (1, 2, 3)) -> list[int]:
    """Node exponents m = k (p-1) p^j, capped in degree: each node is an
    exact interpolation point and |m|_p = p^-j drives the convergence."""
    out = set()
    for j in range(j_max + 1):
        base = (p - 1) * p ** j
        if base > degree_cap:
            break
        for k in multipliers:
            if k * base <= degree_cap:
                out.add(k * base)
    if not out:
        raise ValueError("degree cap admits no interpolation nodes")
    return sorted(out)


def newton_derivative_at_zero(nodes: list[int], values: list[PadicNumber],
                              p: int) -> PadicNumber:
    """Derivative at s = 0 of the Newton interpolant through
    (s_i, f_i) with s_i = -nodes[i] (0 allowed and recommended)."""
    s = [PadicNumber.from_mpq(-n, p, values[0].rel + 40) for n in nodes]
    n = len(s)
    dd = list(values)
    coeffs = [dd[0]]
    for order in range(1, n):
        new = []
        for i in range(n - order):
            new.append((dd[i + 1] - dd[i]) / (s[i + order] - s[i]))
        dd = new
        coeffs.append(dd[0])
    # P(t) = sum_k c_k prod_{i<k}(t - s_i); evaluate P'(0) via the
    # product recurrences
    prod_val = PadicNumber.from_mpq(1, p, values[0].rel + 40)
    prod_der = PadicNumber.zero(p, 10 ** 6)
    deriv = PadicNumber.zero(p, 10 ** 6)
    for k in range(n):
        if k > 0:
            prod_der = prod_der * (-s[k - 1]) + prod_val
            prod_val = prod_val * (-s[k - 1])
        deriv = deriv + coeffs[k] * prod_der
    return deriv


# --------------------------------------------------------------------
# dense series over Z/p^W  (Kronecker-substitution products)
# --------------------------------------------------------------------

class ScaledRow:
    """Coefficient row c_0..c_{L-1}, each an integer mod p^W, standing
    for the values c_i * p^scale.  Absolute coefficient precision is
    scale + W uniformly."""

    __slots__ = ("p", "W", "scale", "coeffs")

    def __init__(self, p: int, W: int, scale: int, coeffs: list[int]):
        self.p = p
        self.W = W
        self.scale = scale
        self.coeffs = coeffs

    def __len__(self):
        return len(self.coeffs)

    def multiply(self, other: "ScaledRow", out_len: int | None = None
                 ) -> "ScaledRow":
        if self.p != other.p or self.W != other.W:
            raise ValueError("row parameter mismatch")
        n1, n2 = len(self.coeffs), len(other.coeffs)
        out_len = out_len or (n1 + n2 - 1)
        mod = mpz(self.p) ** self.W
        slot_bits = 2 * int(mod).bit_length() + (min(n1, n2)).bit_length() + 1
        slot_bytes = (slot_bits + 7) // 8
        a = _pack(self.coeffs, slot_bytes)
        b = _pack(other.coeffs, slot_bytes)
        prod = gmpy2.mpz(a) * gmpy2.mpz(b)
        coeffs = _unpack(int(prod), slot_bytes, out_len, int(mod))
        return ScaledRow(self.p, self.W, self.scale + other.scale, coeffs)

    def dot_reversed(self, other: "ScaledRow", k: int) -> tuple[int, int]:
        """(value mod p^W, scale) of sum_{i+j=k} self[i] * other[j]."""
        mod = int(mpz(self.p) ** self.W)
        total = 0
        lo = max(0, k - len(other.coeffs) + 1)
        hi = min(k, len(self.coeffs) - 1)
        for i in range(lo, hi + 1):
            total += self.coeffs[i] * other.coeffs[k - i]
        return total % mod, self.scale + other.scale


def _pack(coeffs: list[int], slot_bytes: int) -> int:
    buf = bytearray(slot_bytes * len(coeffs))
    for i, c in enumerate(coeffs):
        buf[i * slot_bytes:(i + 1) * slot_bytes] = int(c).to_bytes(
            slot_bytes, "little")
    return int.from_bytes(bytes(buf), "little")


def _unpack(packed: int, slot_bytes: int, out_len: int, mod: int) -> list[int]:
    data = packed.to_bytes(max(1, (packed.bit_length() + 7) // 8), "little")
    need = slot_bytes * out_len
    if len(data) < need:
        data = data + b"\0" * (need - len(data))
    out = []
    for i in range(out_len):
        out.append(int.from_bytes(data[i * slot_bytes:(i + 1) * slot_bytes],
                                  "little") % mod)
    return out


class BarnesPadicEvaluator:
    """Shared machinery for node values of the p-adic multiple gamma.

    Caches the Bernoulli-over-factorial row A (coefficients B_l/l!) and
    the per-cone products A(v1 t) A(v2 t); a rank-2 node value is then a
    single O(L) dot product against the exponential row of the argument.
    """

    def __init__(self, ctx: PadicContext, degree_cap: int):
        self.ctx = ctx
        self.degree_cap = degree_cap
        self._arow: dict[tuple[int, int], ScaledRow] = {}
        self._crow_cache: dict = {}

    # -- generic rows --------------------------------------------------

    def arow(self, length: int, W: int) -> ScaledRow:
        """Row of B_l/l! for l < length, at uniform scale."""
        key = (length, W)
        got = self._arow.get(key)
        if got is not None:
            return got
        p = self.ctx.p
        table = default_table()
        scale = -_vp_factorial(length - 1, p) - 2
        mod = mpz(p) ** W
        coeffs = []
        fact = mpq(1)
        for l in range(length):
            if l:
                fact *= l
            q = table.number(l) / fact
            coeffs.append(_scaled_residue(q, p, scale, mod))
        row = ScaledRow(p, W, scale, coeffs)
        self._arow[key] = row
        return row

    def scaled_arow(self, v: ExactInput, length: int, W: int) -> ScaledRow:
        """Row of (B_l/l!) v^l."""
        base = self.arow(length, W)
        p = self.ctx.p
        mod = int(mpz(p) ** W)
        if v.ordp() < 0:
            raise ValueError("weights must have non-negative valuation")
        vz = v.realize(W + 8)
        vu = vz.unit_mod(W) * pow(p, vz.valuation(), mod) % mod
        out = []
        cur = 1
        for l in range(length):
            out.append(base.coeffs[l] * cur % mod)
            cur = cur * vu % mod
        return ScaledRow(p, W, base.scale, out)

    def exp_row(self, z: ExactInput, length: int, W: int) -> ScaledRow:
        """Row of z^j/j! as scaled residues (z may have negative
        valuation; the scale absorbs the depth)."""
        p = self.ctx.p
        mod = int(mpz(p) ** W)
        ordz = z.ordp()
        zz = z.realize(W + 8)
        scale = min(0, (length - 1) * ordz) - _vp_factorial(length - 1, p) - 2
        zu = zz.unit_mod(W)
        out = []
        val = 0       # valuation of z^j/j!
        unit = 1      # unit part mod p^W
        for j in range(length):
            if j:
                val += ordz
                unit = unit * zu % mod
                e = 0
                jj = j
                while jj % p == 0:
                    jj //= p
                    e += 1
                val -= e
                unit = unit * int(gmpy2.invert(mpz(jj), mpz(mod))) % mod
            shift = val - scale
            if shift < 0:
                raise AssertionError("scale underflow in exp row")
            out.append(unit * pow(p, shift, mod) % mod)
        return ScaledRow(p, W, scale, out)

    # -- rank-2 gamma nodes ---------------------------------------------

    def cone_row(self, v1: ExactInput, v2: ExactInput, length: int,
                 W: int) -> ScaledRow:
        cache_key = (v1.key(), v2.key(), length, W)
        got = self._crow_cache.get(cache_key)
        if got is not None:
            return got
        r1 = self.scaled_arow(v1, length, W)
        r2 = self.scaled_arow(v2, length, W)
        row = r1.multiply(r2, out_len=length)
        self._crow_cache[cache_key] = row
        return row

    def node_values_rank2(self, v: tuple[ExactInput, ExactInput],
                          z: ExactInput, nodes: list[int]
                          ) -> dict[int, PadicNumber]:
        """zeta_fml(-m, v, z) for every node m, as p-adic numbers.

        Computed as m!/(v1 v2) [t^(m+2)] A(v1 t) A(v2 t) e^(z t); the
        Teichmueller/p-power twist is applied by the caller.
        """
        p = self.ctx.p
        length = max(nodes) + 3
        # the working width absorbs the full scale depth of both rows so
        # the dot keeps ctx.prec honest relative digits
        depth = 3 * (_vp_factorial(length - 1, p) + 2) \
            - min(0, (length - 1) * z.ordp()) + 2
        W = self.ctx.prec + depth + 24
        crow = self.cone_row(v[0], v[1], length, W)
        erow = self.exp_row(z, length, W)
        inv_vv = 1 / (v[0].realize(W) * v[1].realize(W))
        out = {}
        factm = mpq(1)
        prev = 0
        for m in sorted(nodes):
            for k in range(prev + 1, m + 1):
                factm *= k
            prev = m
            raw, scale = crow.dot_reversed(erow, m + 2)
            val = PadicNumber(p, 0, raw, W) * PadicNumber.from_mpq(
                mpq(p) ** scale * factm, p, W)
            out[m] = val * inv_vv
        return out

    def node_values_rank1(self, v: ExactInput, x, nodes: list[int]
                          ) -> dict[int, PadicNumber]:
        """zeta_fml(-m, (v), x v) = -B_{m+1}(x) v^m/(m+1) per node."""
        p = self.ctx.p
        length = max(nodes) + 2
        xq = mpq(x)
        depth = -min(0, (length - 1) * _vp_q(xq, p)) \
            + 2 * (_vp_factorial(length - 1, p) + 2) + 4
        W = self.ctx.prec + depth + 24
        arow = self.arow(length, W)
        erow = self.exp_row(ExactInput(self.ctx, xq, None), length, W)
        vv = v.realize(W)
        out = {}
        for m in nodes:
            raw, scale = arow.dot_reversed(erow, m + 1)
            # raw*p^scale = B_{m+1}(x)/(m+1)!
            bern_over = PadicNumber(p, 0, raw, W) * PadicNumber.from_mpq(
                mpq(p) ** scale, p, W)
            factor = mpq(-1) * gmpy2.fac(m)  # -m!/(m+1)! = -1/(m+1)
            out[m] = bern_over * PadicNumber.from_mpq(
                factor, p, W) * (vv ** m)
        return out


def _vp_factorial(n: int, p: int) -> int:
    total = 0
    q = p
    while q <= n:
        total += n // q
        q *= p
    return total


def _vp_q(q: mpq, p: int) -> int:
    num, den = mpz(q.numerator), mpz(q.denominator)
    v = 0
    while num and num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _scaled_residue(q: mpq, p: int, scale: int, mod: mpz) -> int:
    """Residue of q * p^(-scale) mod p^W (q p^(-scale) must be integral
    at p)."""
    num, den = mpz(q.numerator), mpz(q.denominator)
    if num == 0:
        return 0
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    shift = v - scale
    if shift < 0:
        raise AssertionError("scale underflow in residue")
    return int(num * gmpy2.invert(den, mod) % mod * pow(p, shift, mod) % mod)


# --------------------------------------------------------------------
# p-adic log multiple gamma
# --------------------------------------------------------------------

def _twist(z: ExactInput, m: int) -> PadicNumber:
    """p^(-ord(z) m) theta(z)^(-m)."""
    ctx = z.ctx
    p = ctx.p
    zp = z.realize(ctx.prec + 2 * abs(z.ordp()) * 1 + 24)
    th = teichmuller(zp)
    return (th ** (-m)) * PadicNumber.from_mpq(
        mpq(p) ** (-zp.valuation() * m), p, th.rel)


def _newton_with_drop(nodes: list[int], values: dict[int, PadicNumber],
                      p: int) -> tuple[PadicNumber, int]:
    """Newton derivative at 0 plus the honestly attained precision
    (arithmetic precision capped by the drop-one-node comparison)."""
    all_nodes = [0] + nodes
    full = newton_derivative_at_zero(
        all_nodes, [values[m] for m in all_nodes], p)
    shorter = [0] + (nodes[:-1] if len(nodes) > 1 else nodes)
    drop = newton_derivative_at_zero(
        shorter, [values[m] for m in shorter], p)
    diff = full - drop
    attained = min(diff.val if diff.unit is None else diff.val, full.absprec)
    return full, attained


def _derivative_with_pole_taming(nodes: list[int],
                                 values: dict[int, PadicNumber], p: int,
                                 pole_degree: int) -> tuple[PadicNumber, int]:
    """Derivative at 0 of F from its values at s = -m, where F carries
    the pole polynomial q(s) = prod_{k=1..d}(k - s) of the defining
    integral representation.

    Interpolating F directly fails: 1/q(s) has non-decaying series
    coefficients, so Newton differences through nodes of valuation 0
    never converge.  h = q F is the integral itself and interpolates
    cleanly; F'(0) = (h'(0) - F(0) q'(0)) / q(0) restores the answer.
    """
    d = pole_degree
    q0 = 1
    for k in range(1, d + 1):
        q0 *= k
    # q'(0) = -q(0) * (1 + 1/2 + ... + 1/d)
    qp0 = -q0 * sum(mpq(1, k) for k in range(1, d + 1)) if d else mpq(0)
    hvals = {}
    for m, val in values.items():
        taming = 1
        for k in range(1, d + 1):
            taming *= k + m
        hvals[m] = val * taming
    h1, attained = _newton_with_drop(nodes, hvals, p)
    if d == 0:
        return h1, attained
    F0 = hvals[0] / q0
    full = (h1 - F0 * PadicNumber.from_mpq(qp0, p, h1.rel + 8)) / q0
    return full, min(attained, full.absprec)


def log_multiple_gamma_p(ctx: PadicContext, v: list, z=None, x=None,
                         nodes: list[int] | None = None
                         ) -> tuple[PadicNumber, int]:
    """Derivative at s = 0 of the p-adic cone zeta: Newton divided
    differences through the twisted exact values at s = -m over the node
    set, anchored at the exact value at 0.

    v entries and z are ExactInput (or raw rationals, which are wrapped);
    when z is omitted it is assembled from the offsets x.  Returns
    (value, attained) where attained is the honestly claimed absolute
    precision: the arithmetic precision capped by an empirical
    convergence check (recompute with the deepest node dropped).
    """
    p = ctx.p
    v = [t if isinstance(t, ExactInput) else ctx.input(t) for t in v]
    if z is None:
        if x is None:
            raise ValueError("need z or the offset vector x")
        acc = None
        for t, xi in zip(v, x):
            part = t.scaled(mpq(xi))
            acc = part if acc is None else ExactInput(
                ctx, acc.value + part.value,
                acc.iota if isinstance(acc.value, FieldElement) else None)
        z = acc
    elif not isinstance(z, ExactInput):
        z = ctx.input(z)
    if any(t.ordp() <= z.ordp() for t in v):
        raise ValueError(
            "interpolation condition violated: ord(z) must be smaller "
            "than every ord(v_i)")
    if nodes is None:
        nodes = interpolation_nodes(p, ctx.bernoulli_cap)
    ev = ctx.barnes()
    if len(v) == 1:
        if x is None:
            raise ValueError("rank-1 nodes need the rational offset x")
        raw = ev.node_values_rank1(v[0], x[0], [0] + nodes)
    elif len(v) == 2:
        raw = ev.node_values_rank2((v[0], v[1]), z, [0] + nodes)
    else:
        raise ValueError("rank must be 1 or 2")
    values = {m: raw[m] * _twist(z, m) if m else raw[0] for m in [0] + nodes}
    return _newton_with_drop(nodes, values, p)


def lgamma_p_cone_sum(ctx: PadicContext, v: list, offsets, zs: list,
                      nodes: list[int] | None = None
                      ) -> tuple[PadicNumber, int]:
    """Sum of log multiple gamma over the offsets of one cone, sharing
    the heavy per-cone series product across all offsets.  v entries and
    zs are ExactInput."""
    p = ctx.p
    if nodes is None:
        nodes = interpolation_nodes(p, ctx.bernoulli_cap)
    ev = ctx.barnes()
    all_nodes = [0] + nodes
    total_vals = {m: PadicNumber.zero(p, 10 ** 6) for m in all_nodes}
    for x, z in zip(offsets, zs):
        if len(v) == 1:
            raw = ev.node_values_rank1(v[0], x[0], all_nodes)
        else:
            raw = ev.node_values_rank2((v[0], v[1]), z, all_nodes)
        for m in all_nodes:
            val = raw[m] * _twist(z, m) if m else raw[0]
            total_vals[m] = total_vals[m] + val
    return _newton_with_drop(nodes, total_vals, p)


# --------------------------------------------------------------------
# p-adic partial zeta derivative (independent route)
# --------------------------------------------------------------------

def _linear_mul(row: list[int], a: int, b: int, mod: int) -> list[int]:
    """(a + tau b) * row, truncated to the same length."""
    out = [0] * len(row)
    prev = 0
    for i, c in enumerate(row):
        out[i] = (a * c + b * prev) % mod
        prev = c
    return out


def _linear_div(row: list[int], a: int, b: int, mod: int, p: int) -> list[int]:
    """row / (a + tau b), truncated; a must be a p-adic unit."""
    if a % p == 0:
        raise ValueError(
            "cone realization is not a unit; this decomposition needs a "
            "basis reordering away from the prime")
    inv_a = int(gmpy2.invert(mpz(a), mpz(mod)))
    out = [0] * len(row)
    prev = 0
    for i, c in enumerate(row):
        cur = (c - b * prev) * inv_a % mod
        out[i] = cur
        prev = cur
    return out


def _binomial_row(a: int, b: int, n: int, m: int, mod: int) -> list[int]:
    """tau-coefficients 0..m of (a + tau b)^n for n >= 0, a a unit.

    Binomial coefficients are taken as exact integers: the incremental
    ratio recurrence would divide by p-divisible indices.
    """
    out = [0] * (m + 1)
    apow = pow(a, n, mod)
    inv_a = int(gmpy2.invert(mpz(a), mpz(mod)))
    bpow = 1
    for i in range(0, min(n, m) + 1):
        out[i] = int(gmpy2.bincoef(n, i) % mod) * apow % mod * bpow % mod
        apow = apow * inv_a % mod
        bpow = bpow * b % mod
    return out


def _sector_K(a1, b1, a2, b2, L: int, m: int, mod: int, p: int) -> list[int]:
    """K[l] = [tau^m] (a1 + tau b1)^(l-1) (a2 + tau b2)^(L-l-1) for
    l = 0..L, by one series recurrence in l."""
    # start at l = 0: (a1+tau b1)^(-1) (a2+tau b2)^(L-1)
    if a1 % p == 0 or a2 % p == 0:
        raise ValueError("sector recurrence needs unit cone realizations")
    inv_row = _linear_div([1] + [0] * m, a1, b1, mod, p)
    row = _binomial_row(a2, b2, L - 1, m, mod)
    # multiply the two series
    cur = [0] * (m + 1)
    for i in range(m + 1):
        ci = inv_row[i]
        if ci == 0:
            continue
        for j in range(m + 1 - i):
            cur[i + j] = (cur[i + j] + ci * row[j]) % mod
    out = [cur[m]]
    for _ in range(L):
        cur = _linear_mul(cur, a1, b1, mod)
        cur = _linear_div(cur, a2, b2, mod, p)
        out.append(cur[m])
    return out


def shintani_zeta_neg_padic(ctx: PadicContext, cone, xs: list[tuple],
                            nodes: list[int]) -> dict[tuple, dict[int, PadicNumber]]:
    """p-adic values of the norm-form cone zeta at s = -m for every
    offset x and node m (the exact rationals reduced mod a tall p-power).

    Rank 2 uses the two-sector extraction ((m!)^2/2) *
    sum_sectors [tau^m] of the Bernoulli product series; the per-offset
    work is two Kronecker products and an O(L) triple dot against the
    precomputed sector rows.
    """
    p = ctx.p
    F = cone.field
    ev = ctx.barnes()
    emb0, *rest = F.embeddings()
    out: dict[tuple, dict[int, PadicNumber]] = {x: {} for x in xs}
    if F.degree == 1:
        v = ctx.input(cone.basis[0].a)
        for x in xs:
            vals = ev.node_values_rank1(v, x[0], nodes)
            for m in nodes:
                out[x][m] = vals[m]
        return out
    emb1 = rest[0]
    if cone.rank == 1:
        v = cone.basis[0]
        nv = v.norm()
        length = 2 * max(nodes) + 2
        depthW = None
        for x in xs:
            xq = mpq(x[0])
            depth = -min(0, (length - 1) * _vp_q(xq, p)) \
                + 2 * (_vp_factorial(length - 1, p) + 2) + 2
            W = ctx.prec + depth + 24
            arow = ev.arow(length, W)
            erow = ev.exp_row(ctx.input(xq), length, W)
            for m in nodes:
                raw, scale = arow.dot_reversed(erow, 2 * m + 1)
                bm = PadicNumber(p, 0, raw, W) * PadicNumber.from_mpq(
                    mpq(p) ** scale * gmpy2.fac(2 * m + 1), p, W)
                out[x][m] = PadicNumber.from_mpq(
                    -nv ** m / (2 * m + 1), p, W) * bm
        return out

    # rank 2: realizations of the basis at both embeddings
    v1, v2 = cone.basis
    m_max = max(nodes)
    length = 2 * m_max + 3
    x_depth = 0
    for x in xs:
        for t in x:
            x_depth = max(x_depth, -_vp_q(mpq(t), p))
    depth = 4 * (_vp_factorial(length - 1, p) + 2) \
        + 2 * (length - 1) * x_depth + 8
    W = ctx.prec + depth + 24
    mod = int(mpz(p) ** W)
    digits = W + 8
    a1 = _unit_int(ctx.realize(v1, emb0, digits), W)
    b1 = _unit_int(ctx.realize(v1, emb1, digits), W)
    a2 = _unit_int(ctx.realize(v2, emb0, digits), W)
    b2 = _unit_int(ctx.realize(v2, emb1, digits), W)
    K_by_m = {}
    for m in nodes:
        L = 2 * m + 2
        K_by_m[m] = (_sector_K(a1, b1, a2, b2, L, m, mod, p),
                     _sector_K(b1, a1, b2, a2, L, m, mod, p))
    arow = ev.arow(length, W)
    for x in xs:
        g1 = arow.multiply(ev.exp_row(ctx.input(mpq(x[0])), length, W),
                           out_len=length)
        g2 = arow.multiply(ev.exp_row(ctx.input(mpq(x[1])), length, W),
                           out_len=length)
        for m in nodes:
            L = 2 * m + 2
            Ka, Kb = K_by_m[m]
            t1 = t2 = 0
            c1, c2 = g1.coeffs, g2.coeffs
            for l in range(L + 1):
                prod = c1[l] * c2[L - l] % mod
                t1 = (t1 + prod * Ka[l]) % mod
                t2 = (t2 + prod * Kb[l]) % mod
            raw = (t1 + t2) % mod
            scale = g1.scale + g2.scale
            pref = mpq(gmpy2.fac(m)) ** 2 / 2
            out[x][m] = PadicNumber(p, 0, raw, W) * PadicNumber.from_mpq(
                mpq(p) ** scale * pref, p, W)
    return out


def _unit_int(z: PadicNumber, W: int) -> int:
    if z.valuation() < 0:
        raise ValueError("integral realization expected")
    return z.unit_mod(min(W, z.rel)) * z.p ** z.valuation() % z.p ** W


def zeta_p_partial_deriv0(G, c, D, a_c, ctx: PadicContext,
                          nodes: list[int] | None = None,
                          rsets=None) -> tuple[PadicNumber, int]:
    """Independent route to the derivative at 0 of the p-adic partial
    zeta of a ray class: Newton differences through the exact partial
    zeta values at the nodes (where the interpolation twist is trivial),
    anchored at the exact rational value at 0.

    Requires every prime above p to divide the modulus, so that ideal
    norms in the class are prime to p.
    """
    from .realanalytic import partial_zeta_neg
    from .shintani import enumerate_R

    p = ctx.p
    F = G.field
    f = G.modulus
    for pr in F.primes_above(p):
        if f.valuation(pr) < 1:
            raise ValueError(
                "the p-adic partial zeta needs every prime above p to "
                "divide the modulus")
    if nodes is None:
        nodes = interpolation_nodes(p, min(ctx.bernoulli_cap, 400))
    if rsets is None:
        rsets = [enumerate_R(G, c, cone, a_c) for cone in D.cones]
    nrm = (a_c * f).norm()
    node_vals: dict[int, PadicNumber] = {}
    # exact rational anchor at 0
    zero_val = partial_zeta_neg(G, c, 0, D, a_c, rsets=rsets)
    prec_anchor = ctx.prec + 40
    node_vals[0] = PadicNumber.from_mpq(zero_val, p, prec_anchor)
    totals = {m: PadicNumber.zero(p, 10 ** 6) for m in nodes}
    for rset in rsets:
        if not rset.points:
            continue
        per = shintani_zeta_neg_padic(ctx, rset.cone, list(rset.points), nodes)
        for x in rset.points:
            for m in nodes:
                totals[m] = totals[m] + per[x][m]
    for m in nodes:
        node_vals[m] = totals[m] * PadicNumber.from_mpq(
            nrm ** m, p, prec_anchor)
    all_nodes = [0] + nodes
    full = newton_derivative_at_zero(
        all_nodes, [node_vals[m] for m in all_nodes], p)
    shorter = [0] + (nodes[:-1] if len(nodes) > 1 else nodes)
    drop = newton_derivative_at_zero(
        shorter, [node_vals[m] for m in shorter], p)
    diff = full - drop
    attained = min(diff.val if diff.unit is None else diff.val, full.absprec)
    return full, attained
