"""Arbitrary-precision real evaluation.

Three layers live here:

* the multiple-gamma evaluator ``log_multiple_gamma`` (rank 1 reduces to
  the classical log-gamma through the Hurwitz shift identity; rank 2
  uses a ladder recursion until the argument clears a shift threshold,
  then a generalized-Stirling asymptotic expansion whose coefficients
  come from the Laurent expansion of 1/((1-e^{-v1 t})(1-e^{-v2 t}))),
* exact values: cone zeta values at non-positive integers via a
  sector/coefficient-extraction formula that needs only truncated
  polynomial arithmetic over the field, and the closed polynomial form
  of the rank-2 zeta value at 0,
* classical oracles (gamma, log, exp, Dirichlet L-derivatives at 0)
  used by the verification suite as independent references.

The asymptotic tail is controlled heuristically: the first omitted term
times a fixed safety factor must clear the target tolerance, and the
test suite validates the heuristic by precision doubling.  MPFR (via
gmpy2) supplies the underlying floating point type; every public entry
point takes an explicit PrecisionContext, never ambient state.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field as dc_field

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .exactcore import TruncatedPolynomial, bernoulli_number, zeta_formal
from .numberfield import EmbeddingPair, FieldElement, Ideal, QuadField, RayClass
from .shintani import Cone, RSet, ShintaniDomain, enumerate_R

__all__ = [
    "PrecisionContext",
    "log_multiple_gamma",
    "barnes_zeta_s0",
    "barnes_zeta2_at_zero",
    "partial_zeta_neg",
    "shintani_cone_zeta_neg",
    "DirichletCharacter",
    "dirichlet_L0",
    "dirichlet_L_deriv0",
    "PrecisionExhausted",
]

GUARD_BITS = 24
TAIL_SAFETY = 256  # 2^8, heuristic safety factor on the first omitted term
EXACT_NEG_CAP = 64  # largest -m computed on the exact rational path


class PrecisionExhausted(ArithmeticError):
    """Requested tolerance unreachable at the working precision."""


@dataclass
class PrecisionContext:
    """Explicit real working precision.

    bits is the mantissa size; target_tol the acceptance tolerance for
    evaluators (must leave 16 guard bits); shift_threshold scales the
    point at which the gamma ladder hands over to the asymptotic series.
    """

    bits: int = 256
    target_tol: mpfr | None = None
    shift_threshold: int | None = None
    _gctx: object = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("working precision below 64 bits")
        self._gctx = gmpy2.context(precision=self.bits + GUARD_BITS)
        if self.target_tol is None:
            self.target_tol = self.mpfr(2) ** (-self.bits + 16)
        if self.mpfr(self.target_tol) < self.mpfr(2) ** (-self.bits + 16):
            raise ValueError("target_tol leaves fewer than 16 guard bits")
        if self.shift_threshold is None:
            # tuned so the Stirling-type series converges well before
            # term growth sets in
            tol_mag = -gmpy2.log(self.mpfr(self.target_tol)) / gmpy2.log(self.mpfr(10))
            self.shift_threshold = int(32 * (1 + float(tol_mag) / 10))

    @contextmanager
    def active(self):
        """Install this precision as the thread context.  Python-level
        mpfr operators follow the thread context, so every evaluator
        body (and any test arithmetic on results) runs inside this."""
        old = gmpy2.get_context()
        gmpy2.set_context(gmpy2.context(precision=self.bits + GUARD_BITS))
        try:
            yield self
        finally:
            gmpy2.set_context(old)

    # thin wrappers so all arithmetic runs at this context's precision

    def mpfr(self, x) -> mpfr:
        # the two-argument constructor converts exact input at full
        # precision; going through the default context would round huge
        # integers to 53 bits first
        return gmpy2.mpfr(x, self.bits + GUARD_BITS)

    def log(self, x) -> mpfr:
        return self._gctx.log(self.mpfr(x))

    def exp(self, x) -> mpfr:
        return self._gctx.exp(self.mpfr(x))

    def lngamma(self, x) -> mpfr:
        return self._gctx.lngamma(self.mpfr(x))

    def gamma(self, x) -> mpfr:
        return self._gctx.gamma(self.mpfr(x))

    def sqrt(self, x) -> mpfr:
        return self._gctx.sqrt(self.mpfr(x))

    def pi(self) -> mpfr:
        return self._gctx.const_pi()

    def log_2pi(self) -> mpfr:
        return self._gctx.log(2 * self.pi())

    def embed(self, z: FieldElement, iota: EmbeddingPair) -> mpfr:
        """Real realization of a field element at one embedding."""
        if z.field.degree == 1:
            return self.mpfr(z.a)
        root = self.sqrt(z.field.d)
        if iota.index == 1:
            root = -root
        return self.mpfr(z.a) + self.mpfr(z.b) * root


# --------------------------------------------------------------------
# multiple gamma
# --------------------------------------------------------------------

def log_multiple_gamma(z, v, ctx: PrecisionContext) -> mpfr:
    """log of the rank-r multiple gamma at z with weights v (r <= 2).

    Defined as the s-derivative at 0 of sum_{n >= 0} (z + n.v)^{-s}.
    """
    with ctx.active():
        z = ctx.mpfr(z)
        vv = [ctx.mpfr(x) for x in v]
        if z <= 0 or any(x <= 0 for x in vv):
            raise ValueError("argument and weights must be positive")
        if len(vv) == 1:
            return _log_gamma1(z, vv[0], ctx)
        if len(vv) == 2:
            return _log_gamma2(z, vv[0], vv[1], ctx)
        raise ValueError("rank must be 1 or 2")


def _log_gamma1(z, v, ctx: PrecisionContext) -> mpfr:
    # zeta(s,(v),z) = v^{-s} zeta_H(s, z/v);  d/ds at 0 gives the
    # classical Lerch value plus a log v correction.
    a = z / v
    return ctx.lngamma(a) - ctx.log_2pi() / 2 - ctx.log(v) * (ctx.mpfr(mpq(1, 2)) - a)


def _laurent_b(j: int, v1, v2, ctx: PrecisionContext) -> mpfr:
    """Coefficient of t^j in 1/((1-e^{-v1 t})(1-e^{-v2 t}))."""
    total = ctx.mpfr(0)
    for l1 in range(j + 3):
        l2 = j + 2 - l1
        c1 = mpq(1, 2) if l1 == 1 else bernoulli_number(l1)
        c2 = mpq(1, 2) if l2 == 1 else bernoulli_number(l2)
        if c1 == 0 or c2 == 0:
            continue
        coef = ctx.mpfr(c1 * c2 / (gmpy2.fac(l1) * gmpy2.fac(l2)))
        total += coef * v1 ** (l1 - 1) * v2 ** (l2 - 1)
    return total


def _log_gamma2_asymptotic(Z, v1, v2, ctx: PrecisionContext) -> mpfr:
    lz = ctx.log(Z)
    b_m2 = 1 / (v1 * v2)
    b_m1 = (1 / v1 + 1 / v2) / 2
    b_0 = ctx.mpfr(mpq(1, 4)) + (v1 * v1 + v2 * v2) / (12 * v1 * v2)
    total = b_m2 * Z * Z * (ctx.mpfr(mpq(3, 4)) - lz / 2) \
        + b_m1 * Z * (lz - 1) - b_0 * lz
    tol = ctx.mpfr(ctx.target_tol) / TAIL_SAFETY
    zpow = Z
    prev = None
    j = 1
    while True:
        term = gmpy2.fac(j - 1) * _laurent_b(j, v1, v2, ctx) / zpow
        mag = abs(term)
        if mag < tol:
            total += term
            return total
        if prev is not None and mag > prev:
            raise PrecisionExhausted(
                "asymptotic series for the double gamma diverged before "
                f"reaching tolerance (stalled at {float(mag):.3g})")
        total += term
        prev = mag
        zpow *= Z
        j += 1
        if j > 4 * ctx.bits:
            raise PrecisionExhausted("double gamma series truncation overflow")


def _log_gamma2(z, v1, v2, ctx: PrecisionContext) -> mpfr:
    # ladder along the larger weight until the argument clears the
    # threshold, peeling rank-1 legs:
    #   zeta(s,(v1,v2),z) = zeta(s,(v1,v2),z+v_big) + zeta(s,(v_small),z)
    big, small = (v1, v2) if v1 >= v2 else (v2, v1)
    target = ctx.mpfr(ctx.shift_threshold) * big
    acc = ctx.mpfr(0)
    Z = z
    while Z < target:
        acc += _log_gamma1(Z, small, ctx)
        Z += big
    return acc + _log_gamma2_asymptotic(Z, v1, v2, ctx)


def barnes_zeta_s0(v, x):
    """Exact zeta(0, v, x.v): delegates to the Bernoulli closed form."""
    return zeta_formal(0, v, x)


def barnes_zeta2_at_zero(z, v1, v2):
    """Exact polynomial form of the rank-2 zeta value at s = 0 for
    arbitrary argument: z^2/(2 v1 v2) - (z/2)(1/v1 + 1/v2) + 1/4 +
    (v1^2 + v2^2)/(12 v1 v2).  Works over mpq or mpfr inputs."""
    return (z * z / (2 * v1 * v2) - (z / 2) * (1 / v1 + 1 / v2)
            + mpq(1, 4) + (v1 * v1 + v2 * v2) / (12 * v1 * v2))


# --------------------------------------------------------------------
# exact partial zeta values at non-positive integers
# --------------------------------------------------------------------

def shintani_cone_zeta_neg(m: int, cone: Cone, x: tuple) -> mpq:
    """Exact value at s = -m of sum over the cone lattice of the ideal
    norm form N(x.v + n.v)^{-s}, as a rational number.

    Rank 1 collapses to a Hurwitz value; rank 2 (real quadratic) uses
    the two-sector extraction
        ((m!)^2 / (2 (2m)!)) * Tr [tau^m] Z_fml(-2m, v + tau v', x)
    where v' is the conjugate basis and the trace pairs the sector at
    each embedding with its conjugate.
    """
    F = cone.field
    if m < 0:
        raise ValueError("m must be non-negative")
    if m > EXACT_NEG_CAP:
        raise ValueError(
            f"exact path capped at m <= {EXACT_NEG_CAP}; use the p-adic nodes")
    if F.degree == 1:
        v = cone.basis[0]
        return zeta_formal(m, [v.a], [x[0]])
    if cone.rank == 1:
        v = cone.basis[0]
        nv = v.norm()
        return nv ** m * (-bern_poly_q(2 * m + 1, x[0]) / (2 * m + 1))
    order = m + 1
    v1, v2 = cone.basis
    c1 = TruncatedPolynomial([v1, v1.conj()], order)
    c2 = TruncatedPolynomial([v2, v2.conj()], order)
    sector = zeta_formal(2 * m, [c1, c2], list(x))
    top = sector[m]
    if not isinstance(top, FieldElement):
        top = F.element(top)
    pref = mpq(gmpy2.fac(m) ** 2, 2 * gmpy2.fac(2 * m))
    return pref * top.trace()


def bern_poly_q(l: int, x) -> mpq:
    from .exactcore import bernoulli_polynomial

    return bernoulli_polynomial(l, mpq(x))


def partial_zeta_neg(G, c, m: int, D: ShintaniDomain, a_c: Ideal,
                     rsets: list[RSet] | None = None) -> mpq:
    """Exact partial zeta value zeta(-m, c) for a ray class c.

    Sums the cone zeta values over the offset sets of the decomposition
    and restores the norm factor of a_c f.
    """
    f = G.modulus
    nrm = (a_c * f).norm()
    total = mpq(0)
    if rsets is None:
        rsets = [enumerate_R(G, c, cone, a_c) for cone in D.cones]
    for rset in rsets:
        for x in rset.points:
            total += shintani_cone_zeta_neg(m, rset.cone, x)
    return nrm ** m * total


# --------------------------------------------------------------------
# Dirichlet oracles
# --------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletCharacter:
    """Real Dirichlet character given by an explicit value table."""

    modulus: int
    values: tuple  # values[a] = chi(a) for a in 0..modulus-1, entries in {-1,0,1}

    @classmethod
    def kronecker(cls, D: int) -> "DirichletCharacter":
        m = abs(D)
        vals = tuple(int(gmpy2.kronecker(mpz(D), mpz(a))) for a in range(m))
        return cls(m, vals)

    def __call__(self, a: int) -> int:
        return self.values[a % self.modulus]

    def is_odd(self) -> bool:
        return self(self.modulus - 1) == -1


def dirichlet_L0(chi: DirichletCharacter) -> mpq:
    """Exact L(0, chi) = -B_{1,chi} = -(1/m) sum_a chi(a) a for
    nontrivial chi (0 for even characters)."""
    m = chi.modulus
    s = sum(mpq(chi(a)) * a for a in range(1, m))
    return -s / m


def dirichlet_L_deriv0(chi: DirichletCharacter, ctx: PrecisionContext) -> mpfr:
    """L'(0, chi) via the Hurwitz ladder:
    sum_a chi(a) [lngamma(a/m) - log(2 pi)/2] - log(m) L(0, chi)."""
    with ctx.active():
        m = chi.modulus
        total = ctx.mpfr(0)
        half_l2pi = ctx.log_2pi() / 2
        for a in range(1, m):
            ca = chi(a)
            if ca == 0:
                continue
            total += ca * (ctx.lngamma(mpq(a, m)) - half_l2pi)
        return total - ctx.log(m) * ctx.mpfr(dirichlet_L0(chi))
