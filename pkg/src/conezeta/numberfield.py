"""Real quadratic field arithmetic (with Q as the degenerate degree-1
case): exact field elements, fractional ideals in Hermite normal form,
narrow ray class groups, distinguished sign classes, the primes selected
by a fixed p-adic identification of the real embeddings, ideal
logarithms as formal log combinations, and the unit bookkeeping u_alpha.

Class-group scope is class number one (verified at construction via the
Minkowski bound), which covers every configuration this package runs;
narrow class numbers 1 and 2 both occur and are handled throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpq, mpz

__all__ = [
    "QuadField",
    "FieldElement",
    "Ideal",
    "EmbeddingPair",
    "RayClassGroup",
    "RayClass",
    "RayClassCharacter",
    "LogLinearCombination",
    "ray_class_group",
    "c_iota",
    "p_iota",
    "log_iota",
    "u_alpha",
]


def _is_squarefree(n: int) -> bool:
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def _is_prime(n: int) -> bool:
    return n >= 2 and gmpy2.is_prime(mpz(n))


def _factor_int(n: int) -> dict[int, int]:
    n = int(n)
    if n <= 0:
        raise ValueError("positive integer expected")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


class QuadField:
    """F = Q(sqrt(d)) for squarefree d > 1, or Q itself for d = 1.

    Carries the integral basis (1, omega), the fundamental unit, its
    totally positive power, and the (narrow) class data.
    """

    def __init__(self, d: int):
        d = int(d)
        if d < 1 or (d > 1 and not _is_squarefree(d)):
            raise ValueError("d must be 1 (for Q) or a squarefree integer > 1")
        self.d = d
        self.degree = 1 if d == 1 else 2
        if d == 1:
            self.disc = 1
            self.omega = None
        elif d % 4 == 1:
            self.disc = d
            self.omega = FieldElement(self, mpq(1, 2), mpq(1, 2))  # (1+sqrt d)/2
        else:
            self.disc = 4 * d
            self.omega = FieldElement(self, 0, 1)  # sqrt d
        self.one = FieldElement(self, 1, 0)
        self._pi_cache: dict[tuple, FieldElement] = {}
        if self.degree == 1:
            self.fund_unit = self.one
            self.tp_fund_unit = self.one
            self.class_number = 1
            self.narrow_class_number = 1
        else:
            self.fund_unit = self._fundamental_unit()
            if self.fund_unit.norm() == 1:
                eps = self.fund_unit
                if not eps.is_totally_positive():
                    eps = -eps
                self.fund_unit = eps
                self.tp_fund_unit = eps
                self.narrow_class_number = 2
            else:
                self.tp_fund_unit = self.fund_unit * self.fund_unit
                self.narrow_class_number = 1
            self.class_number = 1
            self._verify_class_number_one()

    def _fundamental_unit(self) -> FieldElement:
        """Smallest unit > 1, by search over sqrt(d)-coefficients."""
        d = self.d
        half = d % 4 == 1
        for b in range(1, 200000):
            if half:
                for s in (-4, 4):
                    a2 = d * b * b + s
                    if a2 > 0 and gmpy2.is_square(mpz(a2)):
                        a = int(gmpy2.isqrt(mpz(a2)))
                        if (a - b) % 2 == 0:
                            return FieldElement(self, mpq(a, 2), mpq(b, 2))
            for s in (-1, 1):
                a2 = d * b * b + s
                if a2 > 0 and gmpy2.is_square(mpz(a2)):
                    a = int(gmpy2.isqrt(mpz(a2)))
                    return FieldElement(self, a, b)
        raise RuntimeError(f"fundamental unit search failed for d={d}")

    def _verify_class_number_one(self) -> None:
        bound = math.isqrt(self.disc) // 2 + 1
        for ell in range(2, bound + 1):
            if not _is_prime(ell):
                continue
            for pr in self.primes_above(ell):
                if pr.principal_generator(allow_fail=True) is None:
                    raise NotImplementedError(
                        f"Q(sqrt {self.d}) has class number > 1; "
                        "only class number one fields are supported")

    def element(self, a, b=0) -> FieldElement:
        return FieldElement(self, a, b)

    def from_integral_coords(self, u, v) -> FieldElement:
        """Element u + v*omega."""
        if self.degree == 1:
            return FieldElement(self, mpq(u) + mpq(v), 0)
        return self.one * mpq(u) + self.omega * mpq(v)

    def embeddings(self) -> tuple[EmbeddingPair, ...]:
        if self.degree == 1:
            return (EmbeddingPair(self, 0),)
        return (EmbeddingPair(self, 0), EmbeddingPair(self, 1))

    def ideal(self, *gens) -> Ideal:
        return Ideal.from_generators(
            self,
            [g if isinstance(g, FieldElement) else self.element(g) for g in gens])

    def omega_minpoly_root_mod(self, ell: int, e: int = 1) -> list[int]:
        """Roots mod ell^e of the minimal polynomial of omega (Hensel-lifted
        for e > 1; requires ell odd unramified for lifting)."""
        d = self.d
        mod = ell

        def poly(x, m):
            if d % 4 == 1:
                return (x * x - x - (d - 1) // 4) % m
            return (x * x - d) % m

        roots = sorted(x for x in range(ell) if poly(x, ell) == 0)
        if e == 1:
            return roots
        lifted = []
        for r in roots:
            m = ell
            for _ in range(e - 1):
                m *= ell
                deriv = (2 * r - 1) if d % 4 == 1 else 2 * r
                inv = pow(deriv % m, -1, m)
                r = (r - poly(r, m) * inv) % m
            lifted.append(r)
        return sorted(lifted)

    def primes_above(self, ell: int) -> list[Ideal]:
        """Prime ideals above a rational prime, deterministic order.

        Split factors are ordered by the omega-root they kill.
        """
        ell = int(ell)
        if not _is_prime(ell):
            raise ValueError(f"{ell} is not prime")
        if self.degree == 1:
            return [Ideal._rational(self, ell)]
        kro = gmpy2.kronecker(mpz(self.disc), mpz(ell))
        if kro == -1:
            return [Ideal._from_hnf(self, ell, 0, ell, 1)]
        roots = self.omega_minpoly_root_mod(ell)
        if kro == 0:
            r = roots[0]
            return [Ideal._from_hnf(self, ell, (-r) % ell, 1, 1)]
        return [Ideal._from_hnf(self, ell, (-r) % ell, 1, 1) for r in roots]

    def ideals_of_norm(self, n: int) -> list[Ideal]:
        """All integral ideals of norm n, deterministic order."""
        n = int(n)
        out = [Ideal._one(self)]
        if n == 1:
            return out
        for ell, e in sorted(_factor_int(n).items()):
            primes = self.primes_above(ell)
            if len(primes) == 2:
                ways = [primes[0] ** i * primes[1] ** (e - i) for i in range(e + 1)]
            elif primes[0].norm() == ell:  # ramified
                ways = [primes[0] ** e]
            else:  # inert, norm ell^2
                if e % 2 == 1:
                    return []
                ways = [primes[0] ** (e // 2)]
            out = [a * w for a in out for w in ways]
        return out

    def pi_generator(self, prime: Ideal) -> FieldElement:
        """Pinned totally positive generator of prime^{h+}: the associate
        of minimal height, cached per session for reproducibility."""
        key = prime._key()
        got = self._pi_cache.get(key)
        if got is not None:
            return got
        g = (prime ** self.narrow_class_number).principal_generator()
        g = _totally_positive_associate(g)
        self._pi_cache[key] = g
        return g

    def __repr__(self):
        return "Q" if self.degree == 1 else f"Q(sqrt {self.d})"

    def __eq__(self, other):
        return isinstance(other, QuadField) and self.d == other.d

    def __hash__(self):
        return hash(("QuadField", self.d))


class FieldElement:
    """Exact element a + b*sqrt(d) with rational a, b (b = 0 over Q)."""

    __slots__ = ("field", "a", "b")

    def __init__(self, field: QuadField, a, b=0):
        self.field = field
        self.a = mpq(a)
        self.b = mpq(b)
        if field.degree == 1 and self.b != 0:
            raise ValueError("rational field has no irrational part")

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        return FieldElement(self.field, mpq(other), 0)

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.a, -self.b)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        d = self.field.d
        return FieldElement(self.field,
                            self.a * o.a + d * self.b * o.b,
                            self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if self.field.degree == 1:
            if o.a == 0:
                raise ZeroDivisionError
            return FieldElement(self.field, self.a / o.a, 0)
        n = o.a * o.a - self.field.d * o.b * o.b
        if n == 0:
            raise ZeroDivisionError
        return self * FieldElement(self.field, o.a / n, -o.b / n)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return (self.field.one / self) ** (-e)
        result = self.field.one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def conj(self) -> FieldElement:
        return FieldElement(self.field, self.a, -self.b)

    def apply(self, iota: "EmbeddingPair") -> FieldElement:
        """Move the element to the iota_1-realization: identity for
        iota_1, conjugation for iota_2."""
        return self if iota.index == 0 else self.conj()

    def norm(self) -> mpq:
        if self.field.degree == 1:
            return self.a
        return self.a * self.a - self.field.d * self.b * self.b

    def trace(self) -> mpq:
        return 2 * self.a if self.field.degree == 2 else self.a

    def integral_coords(self) -> tuple[mpq, mpq]:
        """Coordinates (u, v) with self = u + v*omega."""
        if self.field.degree == 1:
            return (self.a, mpq(0))
        if self.field.d % 4 == 1:
            return (self.a - self.b, 2 * self.b)
        return (self.a, self.b)

    def is_integral(self) -> bool:
        u, v = self.integral_coords()
        return u.denominator == 1 and v.denominator == 1

    def sign_at(self, index: int) -> int:
        """Exact sign of the real embedding iota_index."""
        if self.a == 0 and self.b == 0:
            return 0
        if self.field.degree == 1:
            return 1 if self.a > 0 else -1
        b = self.b if index == 0 else -self.b
        a = self.a
        if a >= 0 and b >= 0:
            return 1
        if a <= 0 and b <= 0:
            return -1
        big_a = a * a > self.field.d * b * b
        if a > 0:
            return 1 if big_a else -1
        return -1 if big_a else 1

    def is_totally_positive(self) -> bool:
        return all(self.sign_at(i) > 0 for i in range(self.field.degree))

    def height(self) -> mpq:
        """Cheap exact bound on max |iota(x)|."""
        if self.field.degree == 1:
            return abs(self.a)
        return abs(self.a) + abs(self.b) * self.field.d

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (ValueError, TypeError):
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.field.d, self.a, self.b))

    def __repr__(self):
        if self.field.degree == 1 or self.b == 0:
            return str(self.a)
        return f"({self.a}+{self.b}*sqrt{self.field.d})"


def _totally_positive_associate(g: FieldElement) -> FieldElement:
    """Deterministic totally positive associate of minimal height."""
    F = g.field
    if F.degree == 1:
        return g if g.a > 0 else -g
    candidates = []
    eps = F.fund_unit
    for s in (g, -g):
        cur = s
        for _ in range(2048):
            if cur.is_totally_positive():
                candidates.append(cur)
                break
            cur = cur * eps
        cur = s
        for _ in range(2048):
            if cur.is_totally_positive():
                candidates.append(cur)
                break
            cur = cur / eps
    if not candidates:
        raise ValueError(f"no totally positive associate of {g!r}")
    ep = F.tp_fund_unit
    out = []
    for c in candidates:
        cur = c
        while (cur * ep).height() < cur.height():
            cur = cur * ep
        while (cur / ep).height() < cur.height():
            cur = cur / ep
        out.append(cur)
    out.sort(key=lambda z: (z.height(), z.a, z.b))
    return out[0]


class Ideal:
    """Fractional ideal (1/den) * (a Z + (b + c*omega) Z) in HNF.

    Invariants: a, c > 0, c | a, c | b, 0 <= b < a.  Over Q an ideal is a
    positive rational a/den with c = 0.
    """

    __slots__ = ("field", "a", "b", "c", "den")

    def __init__(self, field, a, b, c, den):
        self.field = field
        self.a, self.b, self.c, self.den = mpz(a), mpz(b), mpz(c), mpz(den)

    @classmethod
    def _one(cls, field):
        if field.degree == 1:
            return cls(field, 1, 0, 0, 1)
        return cls(field, 1, 0, 1, 1)

    @classmethod
    def _rational(cls, field, q):
        q = abs(mpq(q))
        if q == 0:
            raise ValueError("zero ideal")
        if field.degree == 1:
            return cls(field, q.numerator, 0, 0, q.denominator)
        return cls(field, q.numerator, 0, q.numerator, q.denominator)

    @classmethod
    def _from_hnf(cls, field, a, b, c, den=1):
        return cls(field, a, b, c, den)._normalize()

    @classmethod
    def from_generators(cls, field, gens: list[FieldElement]) -> Ideal:
        """O_F-module generated by the given nonzero elements."""
        gens = [g for g in gens if not (g.a == 0 and g.b == 0)]
        if not gens:
            raise ValueError("zero ideal")
        if field.degree == 1:
            den = mpz(1)
            for g in gens:
                den = gmpy2.lcm(den, mpz(g.a.denominator))
            num = mpz(0)
            for g in gens:
                num = gmpy2.gcd(num, mpz(g.a.numerator) * (den // mpz(g.a.denominator)))
            return cls(field, abs(num), 0, 0, den)._normalize()
        rows = []
        w = field.omega
        for g in gens:
            for h in (g, g * w):
                rows.append(h.integral_coords())
        den = mpz(1)
        for (u, v) in rows:
            den = gmpy2.lcm(den, gmpy2.lcm(mpz(u.denominator), mpz(v.denominator)))
        int_rows = [(mpz(u * den), mpz(v * den)) for (u, v) in rows]
        a, b, c = _hnf_2col(int_rows)
        return cls(field, a, b, c, den)._normalize()

    def _normalize(self) -> Ideal:
        if self.field.degree == 1:
            g = gmpy2.gcd(self.a, self.den)
            return Ideal(self.field, abs(self.a) // g, 0, 0, self.den // g)
        a, b, c, den = abs(self.a), self.b, abs(self.c), self.den
        if a == 0 or c == 0:
            raise ValueError("degenerate ideal")
        b %= a
        g = gmpy2.gcd(gmpy2.gcd(a, gmpy2.gcd(b, c)), den)
        a, b, c, den = a // g, b // g, c // g, den // g
        return Ideal(self.field, a, b % a, c, den)

    def _key(self):
        return (int(self.a), int(self.b), int(self.c), int(self.den))

    def __eq__(self, other):
        return (isinstance(other, Ideal) and self.field == other.field
                and self._key() == other._key())

    def __hash__(self):
        return hash((self.field.d,) + self._key())

    def __repr__(self):
        if self.field.degree == 1:
            return f"({mpq(self.a, self.den)})"
        return f"Ideal[{self.a}, {self.b}+{self.c}w]/{self.den}"

    def basis(self) -> tuple[FieldElement, FieldElement]:
        """Z-basis of the underlying lattice."""
        F = self.field
        if F.degree == 1:
            g = F.element(mpq(self.a, self.den))
            return (g, g)
        e1 = F.from_integral_coords(mpq(self.a, self.den), 0)
        e2 = F.from_integral_coords(mpq(self.b, self.den), mpq(self.c, self.den))
        return (e1, e2)

    def norm(self) -> mpq:
        if self.field.degree == 1:
            return mpq(self.a, self.den)
        return mpq(self.a * self.c, self.den * self.den)

    def is_integral(self) -> bool:
        return self.den == 1

    def __mul__(self, other) -> Ideal:
        if isinstance(other, FieldElement):
            other = Ideal.from_generators(self.field, [other])
        if isinstance(other, (int, mpq, type(mpz(0)))):
            other = Ideal._rational(self.field, other)
        if self.field.degree == 1:
            return Ideal._rational(self.field, self.norm() * other.norm())
        b1, b2 = self.basis(), other.basis()
        return Ideal.from_generators(self.field, [x * y for x in b1 for y in b2])

    def __pow__(self, e: int) -> Ideal:
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        result = Ideal._one(self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> Ideal:
        if self.field.degree == 1:
            return Ideal._rational(self.field, 1 / self.norm())
        n = self.norm()
        return Ideal.from_generators(self.field,
                                     [g.conj() / n for g in self.basis()])

    def contains(self, z: FieldElement) -> bool:
        if z.a == 0 and z.b == 0:
            return True
        if self.field.degree == 1:
            q = z.a / mpq(self.a, self.den)
            return q.denominator == 1
        u, v = z.integral_coords()
        u, v = u * self.den, v * self.den
        if u.denominator != 1 or v.denominator != 1:
            return False
        u, v = mpz(u), mpz(v)
        if v % self.c:
            return False
        return (u - (v // self.c) * self.b) % self.a == 0

    def sum(self, other: Ideal) -> Ideal:
        if self.field.degree == 1:
            g = gmpy2.gcd(self.a * other.den, other.a * self.den)
            return Ideal(self.field, g, 0, 0, self.den * other.den)._normalize()
        gens = list(self.basis()) + list(other.basis())
        return Ideal.from_generators(self.field, gens)

    def is_coprime(self, other: Ideal) -> bool:
        return self.sum(other) == Ideal._one(self.field)

    def valuation(self, prime: Ideal) -> int:
        """Exact valuation of a fractional ideal at a prime."""
        den = int(self.den)
        if den == 1:
            return self._valuation_integral(prime)
        scaled = self * Ideal._rational(self.field, den)
        ell = int(prime.norm()) if prime.c == 1 or self.field.degree == 1 else None
        if self.field.degree == 1:
            ellq = int(prime.a)
            vden = 0
            dd = den
            while dd % ellq == 0:
                dd //= ellq
                vden += 1
            return scaled._valuation_integral(prime) - vden
        rat = Ideal._rational(self.field, den)
        return scaled._valuation_integral(prime) - rat._valuation_integral(prime)

    def _valuation_integral(self, prime: Ideal) -> int:
        v = 0
        cur = self
        inv = prime.inverse()
        while True:
            nxt = cur * inv
            if nxt.den != 1:
                return v
            cur = nxt
            v += 1
            if v > 100000:
                raise RuntimeError("runaway valuation")

    def factor(self) -> dict[tuple, tuple[Ideal, int]]:
        """Prime factorization of a fractional ideal, keyed by prime HNF."""
        out: dict[tuple, tuple[Ideal, int]] = {}
        nrm = self.norm()
        ells = set(_factor_int(int(nrm.numerator))) if nrm.numerator != 1 else set()
        ells |= set(_factor_int(int(nrm.denominator))) if nrm.denominator != 1 else set()
        ells |= set(_factor_int(int(self.den))) if self.den != 1 else set()
        for ell in sorted(ells):
            for pr in self.field.primes_above(ell):
                e = self.valuation(pr)
                if e:
                    out[pr._key()] = (pr, e)
        return out

    def principal_generator(self, allow_fail: bool = False) -> FieldElement | None:
        """A generator (class number one); deterministic bounded search
        over a trace-form-reduced basis."""
        F = self.field
        if F.degree == 1:
            return F.element(mpq(self.a, self.den))
        e1, e2 = _gauss_reduce(*self.basis())
        target = abs(self.norm())
        best = None
        B = 8
        for k1 in range(-B, B + 1):
            for k2 in range(-B, B + 1):
                z = e1 * k1 + e2 * k2
                if z.a == 0 and z.b == 0:
                    continue
                if abs(z.norm()) == target:
                    if best is None or (z.height(), z.a, z.b) < (best.height(), best.a, best.b):
                        best = z
        if best is None:
            if allow_fail:
                return None
            raise RuntimeError(f"no generator found for {self!r}")
        return best


def _gauss_reduce(e1: FieldElement, e2: FieldElement):
    """Lagrange-Gauss reduction under the trace form <x,y> = Tr(xy')
    restricted to the Minkowski embedding (x.a y.a + d x.b y.b)."""
    d = e1.field.d

    def ip(x, y):
        return x.a * y.a + d * x.b * y.b

    for _ in range(256):
        if ip(e1, e1) > ip(e2, e2):
            e1, e2 = e2, e1
        denom = ip(e1, e1)
        if denom == 0:
            break
        k = _round_q(ip(e1, e2) / denom)
        if k == 0:
            break
        e2 = e2 - e1 * k
    return e1, e2


def _round_q(q: mpq) -> int:
    f = gmpy2.floor(q)
    r = q - mpq(f)
    return int(f) + (1 if r * 2 >= 1 else 0)


def _hnf_2col(rows: list[tuple[mpz, mpz]]) -> tuple[mpz, mpz, mpz]:
    """HNF of the lattice spanned by the rows (u, v): returns (a, b, c)
    with lattice = aZ + (b + c*omega)Z (omega-coordinate = second)."""
    rows = [(mpz(u), mpz(v)) for (u, v) in rows]
    vec = None
    extra = []
    for (u, v) in rows:
        if v == 0:
            extra.append(u)
            continue
        if vec is None:
            vec = (u, v)
            continue
        g, s, t = gmpy2.gcdext(vec[1], v)
        k1, k2 = vec[1] // g, v // g
        extra.append(k2 * vec[0] - k1 * u)
        vec = (s * vec[0] + t * u, g)
    if vec is None:
        raise ValueError("rank-deficient lattice (no omega part)")
    a = mpz(0)
    for u in extra:
        a = gmpy2.gcd(a, u)
    if a == 0:
        raise ValueError("rank-deficient lattice")
    c = abs(vec[1])
    b = vec[0] % a
    return a, b, c


@dataclass(frozen=True)
class EmbeddingPair:
    """One of the two real embeddings with its pinned p-adic shadow.

    Index 0 sends sqrt(d) to the positive root.  Under the session-fixed
    identification of real and p-adic embeddings, index 0 realizes
    sqrt(d) as the Hensel lift of the smallest positive square root of
    d mod p, and index 1 as its negative.
    """

    field: QuadField
    index: int

    def conj(self) -> EmbeddingPair:
        if self.field.degree == 1:
            return self
        return EmbeddingPair(self.field, 1 - self.index)

    def sqrt_residue_mod(self, p: int) -> int:
        d = self.field.d
        r = _sqrt_mod_p(d % p, p)
        if r is None:
            raise ValueError(f"{p} is not split in {self.field!r}")
        r = min(r, p - r)
        return r if self.index == 0 else p - r

    def __repr__(self):
        return f"iota{self.index + 1}"


def _sqrt_mod_p(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if gmpy2.kronecker(mpz(a), mpz(p)) != 1:
        return None
    for r in range(1, p):
        if r * r % p == a:
            return r
    return None


# --------------------------------------------------------------------
# formal log combinations
# --------------------------------------------------------------------

class LogLinearCombination:
    """Formal finite sum  sum_i a_i * log(b_i)  with exact coefficients.

    Canonical storage: bases are reduced multiplicatively to the pinned
    session basis {eps_plus} u {pi_q : q prime}, so two combinations are
    equal iff their coefficient dictionaries agree exactly.  Coefficients
    are field elements normalized to the iota_1-realization (a
    coefficient meant at iota_2 is stored conjugated); torsion base parts
    contribute 0 to both the archimedean value and the p-adic bracket and
    are dropped.  Evaluation is deferred: the archimedean value is
    sum a_i log|iota_1(basis_i)| and the p-adic bracket evaluates the
    same vector through the Iwasawa logarithm.
    """

    __slots__ = ("field", "terms")

    def __init__(self, field: QuadField, terms: dict | None = None):
        self.field = field
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def zero(cls, field: QuadField) -> LogLinearCombination:
        return cls(field, {})

    @classmethod
    def from_base(cls, field: QuadField, coeff, base: FieldElement
                  ) -> LogLinearCombination:
        """coeff * log(base) with base reduced to the session basis via
        base^{h+} = (torsion) * eps_plus^k * prod pi_q^{e_q}."""
        F = field
        if base.a == 0 and base.b == 0:
            raise ValueError("log of zero")
        if not isinstance(coeff, FieldElement):
            coeff = F.element(coeff)
        hplus = F.narrow_class_number
        terms: dict = {}
        rest = base ** hplus
        for pkey, (prime, e) in Ideal.from_generators(F, [base]).factor().items():
            pi = F.pi_generator(prime)
            rest = rest / pi ** e
            terms[("pi",) + pkey] = F.element(mpq(e, hplus)) * coeff
        k = _unit_log_exponent(F, rest)
        if k:
            terms["eps"] = F.element(mpq(k, hplus)) * coeff
        return cls(field, terms)

    def __add__(self, other: LogLinearCombination) -> LogLinearCombination:
        out = dict(self.terms)
        for k, v in other.terms.items():
            cur = out.get(k)
            out[k] = v if cur is None else cur + v
        return LogLinearCombination(self.field, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, factor) -> LogLinearCombination:
        return LogLinearCombination(
            self.field, {k: v * factor for k, v in self.terms.items()})

    def __eq__(self, other):
        return (isinstance(other, LogLinearCombination)
                and self.field == other.field and self.terms == other.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def basis_element(self, key) -> FieldElement:
        if key == "eps":
            return self.field.tp_fund_unit
        assert key[0] == "pi"
        return self.field.pi_generator(Ideal(self.field, *key[1:]))

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({v})*log[{k}]" for k, v in sorted(
            self.terms.items(), key=lambda kv: str(kv[0])))


def _unit_log_exponent(F: QuadField, u: FieldElement) -> int:
    """Exact k with u = +-eps_plus^k; raises if u is not such a unit."""
    if F.degree == 1:
        if abs(u.a) != 1:
            raise ValueError(f"not a unit: {u!r}")
        return 0
    if abs(u.norm()) != 1:
        raise ValueError(f"not a unit: {u!r}")
    ep = F.tp_fund_unit
    targets = (u, -u)
    cur = F.one
    for k in range(0, 512):
        if cur == targets[0] or cur == targets[1]:
            return k
        cur = cur * ep
    cur = F.one
    for k in range(0, 512):
        if cur == targets[0] or cur == targets[1]:
            return -k
        cur = cur / ep
    raise ValueError("unit exponent out of range")


def log_iota(I: Ideal, iota: EmbeddingPair) -> LogLinearCombination:
    """Formal ideal logarithm: q -> (1/h+) log iota(pi_q), extended
    linearly.  Realization at iota_2 is stored by conjugating the pinned
    generators into the iota_1-normalized vector."""
    F = I.field
    out = LogLinearCombination.zero(F)
    for pkey, (prime, e) in I.factor().items():
        pi = F.pi_generator(prime).apply(iota)
        coeff = F.element(mpq(e, F.narrow_class_number))
        out = out + LogLinearCombination.from_base(F, coeff, pi)
    return out


def u_alpha(alpha: FieldElement) -> tuple[FieldElement, bool]:
    """Unit u = alpha^{h+} / alpha', with alpha' the pinned totally
    positive generator of (alpha)^{h+}.  Returns (u, check)."""
    F = alpha.field
    if not alpha.is_totally_positive():
        raise ValueError("alpha must be totally positive")
    prime_part = F.one
    for pkey, (prime, e) in Ideal.from_generators(F, [alpha]).factor().items():
        prime_part = prime_part * F.pi_generator(prime) ** e
    u = alpha ** F.narrow_class_number / prime_part
    ok = abs(u.norm()) == 1 and u.is_totally_positive()
    return u, ok


# --------------------------------------------------------------------
# narrow ray class groups
# --------------------------------------------------------------------

@dataclass(frozen=True)
class RayClass:
    group: "RayClassGroup"
    coords: tuple

    def __mul__(self, other: "RayClass") -> "RayClass":
        assert self.group is other.group
        c = tuple((a + b) % d for a, b, d in
                  zip(self.coords, other.coords, self.group.divisors))
        return RayClass(self.group, c)

    def inverse(self) -> "RayClass":
        c = tuple((-a) % d for a, d in zip(self.coords, self.group.divisors))
        return RayClass(self.group, c)

    def __pow__(self, e: int) -> "RayClass":
        e = int(e)
        c = tuple((a * e) % d for a, d in zip(self.coords, self.group.divisors))
        return RayClass(self.group, c)

    def is_identity(self) -> bool:
        return all(a == 0 for a in self.coords)

    def representative(self) -> Ideal:
        return self.group.representative(self)

    def __repr__(self):
        return f"cls{list(self.coords)}"


@dataclass(frozen=True)
class RayClassCharacter:
    """Character of a ray class group, held as exponent data: with
    N = lcm of the component orders, chi(x) = zeta_N ^ value_exponent(x)."""

    group: "RayClassGroup"
    exponents: tuple

    @property
    def root_order(self) -> int:
        return self.group.exponent_lcm

    def value_exponent(self, cls: RayClass) -> int:
        N = self.group.exponent_lcm
        total = 0
        for t, x, d in zip(self.exponents, cls.coords, self.group.divisors):
            total += t * (N // d) * x
        return total % N

    def order(self) -> int:
        N = self.group.exponent_lcm
        g = 0
        for t, d in zip(self.exponents, self.group.divisors):
            g = math.gcd(g, t * (N // d) % N)
        g = math.gcd(g, N)
        return 1 if g == 0 else N // g

    def is_trivial(self) -> bool:
        return self.order() == 1

    def __repr__(self):
        return f"chi{list(self.exponents)}"


class RayClassGroup:
    """Narrow ray class group C_f of a class-number-one real field.

    Built as the quotient of (O/f)^x x {sign vectors} by the unit images:
    the residue ring splits into cyclic factors with explicit discrete
    logs, the images of -1 and the fundamental unit enter as relations,
    and Smith reduction of the relation lattice delivers the component
    orders together with the projection used for discrete logarithms of
    arbitrary coprime ideals.
    """

    def __init__(self, field: QuadField, modulus: Ideal):
        if not modulus.is_integral():
            raise ValueError("modulus must be an integral ideal")
        self.field = field
        self.modulus = modulus
        self._build()

    def _build(self):
        F = self.field
        self._factors = [
            _ResidueFactor(F, prime, e)
            for pkey, (prime, e) in sorted(self.modulus.factor().items())
        ]
        self._nsigns = F.degree
        raw_orders = [f.order for f in self._factors] + [2] * self._nsigns
        k = len(raw_orders)
        rel_rows = [[0] * k for _ in range(k)]
        for i, d in enumerate(raw_orders):
            rel_rows[i][i] = d
        units = [F.element(-1)]
        if F.degree == 2:
            units.append(F.fund_unit)
        for u in units:
            rel_rows.append(self._raw_vector(u))
        self.divisors, self._proj = _smith_quotient(rel_rows, k)
        self.order = math.prod(self.divisors)
        self.exponent_lcm = math.lcm(*self.divisors) if self.divisors else 1
        self.elementary_divisors = _invariant_chain(self.divisors)
        self._reps: dict[tuple, Ideal] = {}
        self._prime_class_cache: dict[tuple, RayClass] = {}
        self._fill_representatives()

    def _raw_vector(self, z: FieldElement) -> list[int]:
        out = [f.dlog(z) for f in self._factors]
        out += [0 if z.sign_at(i) > 0 else 1 for i in range(self._nsigns)]
        return out

    def _class_from_raw(self, raw: list[int]) -> RayClass:
        coords = tuple(
            int(sum(r * x for r, x in zip(row, raw)) % d)
            for row, d in zip(self._proj, self.divisors))
        return RayClass(self, coords)

    # public API -------------------------------------------------------

    def identity(self) -> RayClass:
        return RayClass(self, tuple(0 for _ in self.divisors))

    def classes(self) -> list[RayClass]:
        out = [[]]
        for d in self.divisors:
            out = [acc + [x] for acc in out for x in range(d)]
        return [RayClass(self, tuple(c)) for c in out]

    def class_of_element(self, z: FieldElement) -> RayClass:
        """Class of the principal ideal (z) for integral z coprime to f."""
        if not z.is_integral():
            raise ValueError("element must be integral; use class_of for ideals")
        return self._class_from_raw(self._raw_vector(z))

    def class_of(self, I: Ideal) -> RayClass:
        """Discrete log of any fractional ideal coprime to the modulus."""
        out = self.identity()
        for pkey, (prime, e) in I.factor().items():
            out = out * (self.class_of_prime(prime) ** e)
        return out

    def class_of_prime(self, prime: Ideal) -> RayClass:
        got = self._prime_class_cache.get(prime._key())
        if got is not None:
            return got
        if not prime.is_coprime(self.modulus):
            raise ValueError(f"{prime!r} is not coprime to the modulus")
        g = prime.principal_generator()
        cls = self.class_of_element(g)
        self._prime_class_cache[prime._key()] = cls
        return cls

    def _fill_representatives(self):
        self._reps[self.identity().coords] = Ideal._one(self.field)
        needed = self.order - 1
        n = 1
        guard = 0
        while needed > 0:
            n += 1
            guard += 1
            if guard > 200000:
                raise RuntimeError("failed to find class representatives")
            for idl in self.field.ideals_of_norm(n):
                if not idl.is_coprime(self.modulus):
                    continue
                c = self.class_of(idl)
                if c.coords not in self._reps:
                    self._reps[c.coords] = idl
                    needed -= 1

    def representative(self, cls: RayClass) -> Ideal:
        return self._reps[cls.coords]

    def mul_table(self) -> list[list[int]]:
        cls = self.classes()
        index = {c.coords: i for i, c in enumerate(cls)}
        return [[index[(a * b).coords] for b in cls] for a in cls]

    def characters(self) -> list[RayClassCharacter]:
        out = [[]]
        for d in self.divisors:
            out = [acc + [t] for acc in out for t in range(d)]
        return [RayClassCharacter(self, tuple(t)) for t in out]

    def analytic_order_check(self) -> bool:
        """Order formula cross-check: |C_f| = h * phi(f) * 2^r1 / [unit
        image], with the unit image recounted by brute subgroup closure."""
        F = self.field
        phi = math.prod(f.order for f in self._factors) if self._factors else 1
        total = phi * 2 ** self._nsigns
        gens = [F.element(-1)]
        if F.degree == 2:
            gens.append(F.fund_unit)
        raw_orders = [f.order for f in self._factors] + [2] * self._nsigns
        gen_vecs = [tuple(self._raw_vector(u)) for u in gens]
        seen = {tuple([0] * len(raw_orders))}
        frontier = list(seen)
        while frontier:
            cur = frontier.pop()
            for gv in gen_vecs:
                nxt = tuple((a + b) % d for a, b, d in zip(cur, gv, raw_orders))
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return F.class_number * total == self.order * len(seen)

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        cls = self.classes()
        return {
            "disc": self.field.d,
            "modulus_hnf": list(self.modulus._key()),
            "divisors": list(self.divisors),
            "elementary_divisors": list(self.elementary_divisors),
            "class_representatives": [
                list(self.representative(c)._key()) for c in cls],
            "mul_table": self.mul_table(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RayClassGroup":
        F = QuadField(data["disc"])
        a, b, c, den = data["modulus_hnf"]
        G = RayClassGroup(F, Ideal(F, a, b, c, den))
        if list(G.divisors) != data["divisors"]:
            raise ValueError("cache mismatch: component orders differ")
        return G


def ray_class_group(field: QuadField, modulus: Ideal) -> RayClassGroup:
    G = RayClassGroup(field, modulus)
    if not G.analytic_order_check():
        raise AssertionError(
            "ray class order disagrees with the analytic formula")
    return G


class _ResidueFactor:
    """Cyclic factor (O/q^e)^x with explicit generator and dlog table."""

    def __init__(self, field: QuadField, prime: Ideal, e: int):
        self.field = field
        self.prime = prime
        self.e = e
        if field.degree == 1:
            self.kind = "rational"
            self.ell = int(prime.a)
        else:
            self.ell = int(prime.a)
            nrm = int(prime.norm())
            if nrm == self.ell:
                if gmpy2.kronecker(mpz(field.disc), mpz(self.ell)) == 0:
                    raise NotImplementedError(
                        "ramified primes in the modulus are out of scope")
                self.kind = "split"
            else:
                if e != 1:
                    raise NotImplementedError(
                        "inert prime powers > 1 in the modulus are unsupported")
                self.kind = "inert"
        if self.kind in ("rational", "split"):
            self.mod = self.ell ** e
            self.order = _unit_group_order_zmod(self.ell, e)
            if self.kind == "split":
                r0 = (-int(prime.b)) % self.ell
                lifted = field.omega_minpoly_root_mod(self.ell, e)
                self.omega_res = next(r for r in lifted if r % self.ell == r0)
        else:
            self.order = self.ell * self.ell - 1
        self._build_dlog()

    def reduce(self, z: FieldElement):
        u, v = z.integral_coords()
        if u.denominator != 1 or v.denominator != 1:
            raise ValueError("non-integral element in residue reduction")
        if self.field.degree == 1:
            return int(u) % self.mod
        if self.kind == "split":
            return (int(u) + int(v) * self.omega_res) % self.mod
        return (int(u) % self.ell, int(v) % self.ell)

    def _build_dlog(self):
        table = {}
        if self.kind in ("rational", "split"):
            g = self._find_generator_zmod()
            cur = 1
            for i in range(self.order):
                table[cur] = i
                cur = cur * g % self.mod
        else:
            g = self._find_generator_inert()
            cur = (1, 0)
            for i in range(self.order):
                table[cur] = i
                cur = self._mul_inert(cur, g)
        self.generator = g
        self._table = table

    def _find_generator_zmod(self) -> int:
        mod, order = self.mod, self.order
        fac = _factor_int(order)
        for g in range(2, mod):
            if math.gcd(g, mod) != 1:
                continue
            if all(pow(g, order // q, mod) != 1 for q in fac):
                return g
        raise RuntimeError("no generator found")

    def _mul_inert(self, x, y):
        d, ell = self.field.d, self.ell
        if d % 4 == 1:
            c = (d - 1) // 4
            return ((x[0] * y[0] + c * x[1] * y[1]) % ell,
                    (x[0] * y[1] + x[1] * y[0] + x[1] * y[1]) % ell)
        return ((x[0] * y[0] + d * x[1] * y[1]) % ell,
                (x[0] * y[1] + x[1] * y[0]) % ell)

    def _pow_inert(self, g, e):
        result = (1, 0)
        base = g
        while e:
            if e & 1:
                result = self._mul_inert(result, base)
            base = self._mul_inert(base, base)
            e >>= 1
        return result

    def _find_generator_inert(self):
        fac = _factor_int(self.order)
        for a in range(self.ell):
            for b in range(1, self.ell):
                g = (a, b)
                if all(self._pow_inert(g, self.order // q) != (1, 0) for q in fac):
                    return g
        raise RuntimeError("no generator found in inert factor")

    def dlog(self, z: FieldElement) -> int:
        r = self.reduce(z)
        try:
            return self._table[r]
        except KeyError:
            raise ValueError(f"{z!r} is not invertible modulo the factor "
                             f"{self.prime!r}^{self.e}") from None


def _unit_group_order_zmod(ell: int, e: int) -> int:
    if ell == 2 and e >= 3:
        raise NotImplementedError("2-power moduli beyond 4 are unsupported")
    return (ell - 1) * ell ** (e - 1)


def _smith_quotient(rows: list[list[int]], k: int):
    """Component orders of Z^k / rowspan(rows) plus the projection map.

    Returns (divisors, proj): class coordinates of a raw exponent vector
    x are (proj[i] . x) mod divisors[i].  Trivial components are dropped
    (a trivial group reports divisors == ()).
    """
    A = [list(map(int, r)) for r in rows]
    m = len(A)
    W = [[1 if i == j else 0 for j in range(k)] for i in range(k)]

    def col_op(j_src, j_dst, c):
        # col j_dst += c * col j_src.  With A' = A Q the class of a raw
        # vector x is (x Q) mod D, so the projection W = Q^T updates by
        # W[dst] += c * W[src].
        for r in A:
            r[j_dst] += c * r[j_src]
        W[j_dst] = [a + c * b for a, b in zip(W[j_dst], W[j_src])]

    def col_swap(j1, j2):
        for r in A:
            r[j1], r[j2] = r[j2], r[j1]
        W[j1], W[j2] = W[j2], W[j1]

    t = 0
    while t < k:
        while True:
            piv = None
            for i in range(t, m):
                for j in range(t, k):
                    if A[i][j] != 0 and (piv is None
                                         or abs(A[i][j]) < abs(A[piv[0]][piv[1]])):
                        piv = (i, j)
            if piv is None:
                raise RuntimeError("relation lattice is not full rank")
            i0, j0 = piv
            A[t], A[i0] = A[i0], A[t]
            col_swap(t, j0)
            leftover = False
            for i in range(t + 1, m):
                c = A[i][t] // A[t][t]
                if c:
                    A[i] = [a - c * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    leftover = True
            for j in range(t + 1, k):
                c = A[t][j] // A[t][t]
                if c:
                    col_op(t, j, -c)
                if A[t][j]:
                    leftover = True
            if not leftover:
                break
            # remainders are strictly smaller than the pivot, so this loop
            # terminates
        t += 1

    divisors = []
    proj = []
    for i in range(k):
        d = abs(A[i][i])
        if d != 1:
            divisors.append(d)
            proj.append(W[i])
    return tuple(divisors), proj


def _invariant_chain(divisors) -> tuple:
    """Canonical invariant-factor chain of prod Z/d_i (report form)."""
    powers: dict[int, list[int]] = {}
    for d in divisors:
        for p, e in _factor_int(d).items():
            powers.setdefault(p, []).append(e)
    if not powers:
        return ()
    depth = max(len(v) for v in powers.values())
    chain = []
    for i in range(depth):
        val = 1
        for p, es in powers.items():
            es_sorted = sorted(es, reverse=True)
            if i < len(es_sorted):
                val *= p ** es_sorted[i]
        chain.append(val)
    return tuple(sorted(chain))


# --------------------------------------------------------------------
# distinguished classes and primes
# --------------------------------------------------------------------

def c_iota(G: RayClassGroup, iota: EmbeddingPair,
           search_bound: int = 60) -> tuple[RayClass, FieldElement]:
    """Sign class c_iota = [(nu)], nu = 1 mod f, negative exactly at
    iota.  Returns (class, witness); the witness has minimal height.
    Raises on search-bound exhaustion rather than failing silently."""
    F = G.field
    f = G.modulus
    if F.degree == 1:
        m = mpq(f.a, f.den)
        k = 1
        nu = F.element(1 - m)
        while nu.a >= 0:
            k += 1
            nu = F.element(1 - k * m)
        return G.class_of_element(nu), nu
    b1, b2 = f.basis()
    best = None
    for k1 in range(-search_bound, search_bound + 1):
        for k2 in range(-search_bound, search_bound + 1):
            nu = F.one + b1 * k1 + b2 * k2
            if nu.a == 0 and nu.b == 0:
                continue
            if nu.sign_at(iota.index) >= 0:
                continue
            if any(nu.sign_at(j) <= 0 for j in range(F.degree) if j != iota.index):
                continue
            if not Ideal.from_generators(F, [nu]).is_coprime(f):
                continue
            if best is None or (nu.height(), nu.a, nu.b) < (best.height(), best.a, best.b):
                best = nu
    if best is None:
        raise RuntimeError(
            f"c_iota witness search exhausted (bound {search_bound}); raise it")
    return G.class_of_element(best), best


def p_iota(field: QuadField, iota: EmbeddingPair, p: int) -> Ideal:
    """Prime of F above p selected by the fixed p-adic realization of
    iota: the prime where the iota-image of the field is p-adically small."""
    p = int(p)
    if p == 2 or not _is_prime(p):
        raise ValueError("p must be an odd prime")
    if field.degree == 1:
        return Ideal._rational(field, p)
    kro = gmpy2.kronecker(mpz(field.disc), mpz(p))
    if kro == 0:
        raise ValueError(f"{p} ramifies in {field!r}; out of scope")
    if kro == -1:
        return field.primes_above(p)[0]
    r = iota.sqrt_residue_mod(p)
    if field.d % 4 == 1:
        w_res = (1 + r) * pow(2, -1, p) % p
    else:
        w_res = r
    for pr in field.primes_above(p):
        if (-int(pr.b)) % p == w_res:
            return pr
    raise RuntimeError("split prime selection failed")
