"""Assembly of the per-class, per-embedding invariants.

The derivative at 0 of a partial zeta function splits into a
multiple-gamma sum G, an ideal-log correction W and a cross-embedding
correction V; this module computes all three (and their p-adic twins)
for a ray class or for the union variant that pairs a class with its
sign-flipped partner on a domain positive away from one embedding.

W and V are always carried symbolically as formal log combinations:
their bases are algebraic, so the p-adic bracket is total on them and
the transcendence questions stay confined to the G-sums.  Only G (real)
and G_p (p-adic) require analytic evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import gmpy2
from gmpy2 import mpfr, mpq

from .exactcore import zeta_formal
from .numberfield import (
    EmbeddingPair,
    FieldElement,
    Ideal,
    LogLinearCombination,
    QuadField,
    RayClass,
    RayClassCharacter,
    RayClassGroup,
)
from .padiccore import (
    ExactInput,
    PadicContext,
    PadicNumber,
    interpolation_nodes,
    iwasawa_log,
    lgamma_p_cone_sum,
    teichmuller,
)
from .realanalytic import PrecisionContext, log_multiple_gamma
from .shintani import Cone, RSet, ShintaniDomain, enumerate_R

__all__ = [
    "InvariantBundle",
    "PadicInvariantBundle",
    "class_filter",
    "rsets_for",
    "G_invariant",
    "W_invariant",
    "V_invariant",
    "X_invariant",
    "Xp_invariant",
    "bracket_p",
    "eval_real",
    "cone_zeta0_sums",
    "zeta0_union",
    "character_root_padic",
]


# --------------------------------------------------------------------
# evaluation of formal log combinations
# --------------------------------------------------------------------

def eval_real(comb: LogLinearCombination, ctx: PrecisionContext) -> mpfr:
    """Archimedean value: coefficients and bases are stored normalized
    to the first embedding, so everything is realized there."""
    F = comb.field
    iota0 = F.embeddings()[0]
    with ctx.active():
        total = ctx.mpfr(0)
        for key, coef in comb.terms.items():
            base = comb.basis_element(key)
            total += ctx.embed(coef, iota0) * ctx.log(abs(ctx.embed(base, iota0)))
        return total


def bracket_p(comb: LogLinearCombination, pctx: PadicContext) -> PadicNumber:
    """p-adic bracket: the same formal vector evaluated through the
    Iwasawa logarithm at the pinned first-embedding realization."""
    F = comb.field
    iota0 = F.embeddings()[0]
    prec = pctx.prec + 16
    total = PadicNumber.zero(pctx.p, 10 ** 6)
    for key, coef in comb.terms.items():
        base = comb.basis_element(key)
        cval = pctx.realize(coef, iota0, prec)
        bval = pctx.realize(base, iota0, prec)
        total = total + cval * iwasawa_log(bval)
    return total


# --------------------------------------------------------------------
# offset sets and exact cone sums
# --------------------------------------------------------------------

def class_filter(G: RayClassGroup, c: RayClass,
                 c_iota0: RayClass | None = None):
    """Either {c} or the union {c, c*c_iota0} used on sign-flipped
    domains."""
    if c_iota0 is None:
        return (c,)
    return (c, c * c_iota0)


def rsets_for(G: RayClassGroup, classes, D: ShintaniDomain,
              a_c: Ideal) -> list[RSet]:
    return [enumerate_R(G, classes, cone, a_c) for cone in D.cones]


def cone_zeta0_sums(rsets: list[RSet]) -> list[FieldElement]:
    """Exact field values Z_j = sum_x zeta_fml(0, v_j, x) per cone."""
    out = []
    for rset in rsets:
        F = rset.cone.field
        total = F.element(0)
        for x in rset.points:
            val = zeta_formal(0, list(rset.cone.basis), list(x))
            if not isinstance(val, FieldElement):
                val = F.element(val)
            total = total + val
        out.append(total)
    return out


def zeta0_union(G: RayClassGroup, c: RayClass, c_iota0: RayClass,
                zeta0_of) -> mpq:
    """Rational zeta(0, -) attached to the union filter: the plain value
    when the sign class is trivial or no unit is negative at exactly the
    flipped embedding; the sum of both classes otherwise.

    zeta0_of maps a RayClass to its exact zeta(0) value.
    """
    F = G.field
    if c_iota0.is_identity() or not _has_one_negative_unit(F):
        return zeta0_of(c)
    return zeta0_of(c) + zeta0_of(c * c_iota0)


def _has_one_negative_unit(F: QuadField) -> bool:
    """Is some unit negative at exactly one real embedding?  For a real
    quadratic field this happens iff the fundamental unit has norm -1."""
    if F.degree == 1:
        return False
    return F.fund_unit.norm() == -1


# --------------------------------------------------------------------
# the invariants
# --------------------------------------------------------------------

@dataclass
class InvariantBundle:
    c: RayClass
    iota: EmbeddingPair
    a_c: Ideal
    G: mpfr
    W: LogLinearCombination
    V: LogLinearCombination
    X: mpfr
    union_with: RayClass | None = None

    def as_dict(self) -> dict:
        return {
            "class": list(self.c.coords),
            "iota": self.iota.index + 1,
            "a_c": list(self.a_c._key()),
            "G": str(self.G),
            "W": repr(self.W),
            "V": repr(self.V),
            "X": str(self.X),
        }


@dataclass
class PadicInvariantBundle:
    c: RayClass
    iota: EmbeddingPair
    a_c: Ideal
    Gp: PadicNumber
    attained: int
    W: LogLinearCombination
    V: LogLinearCombination
    Xp: PadicNumber
    union_with: RayClass | None = None

    def as_dict(self) -> dict:
        return {
            "class": list(self.c.coords),
            "iota": self.iota.index + 1,
            "a_c": list(self.a_c._key()),
            "Gp": repr(self.Gp),
            "attained_digits": self.attained,
            "Xp": repr(self.Xp),
        }


def G_invariant(iota: EmbeddingPair, rsets: list[RSet],
                ctx: PrecisionContext) -> mpfr:
    """Sum of log multiple gamma over the offsets at a real embedding."""
    with ctx.active():
        total = ctx.mpfr(0)
        for rset in rsets:
            basis = rset.cone.basis
            v_real = [ctx.embed(v, iota) for v in basis]
            if any(t <= 0 for t in v_real):
                raise ValueError(
                    "cone is not positive at this embedding; the union "
                    "variant only defines G away from the flipped embedding")
            for x in rset.points:
                z = _offset_point(rset.cone, x)
                total += log_multiple_gamma(ctx.embed(z, iota), v_real, ctx)
        return total


def _offset_point(cone: Cone, x) -> FieldElement:
    z = cone.field.element(0)
    for xi, v in zip(x, cone.basis):
        z = z + v * mpq(xi)
    return z


def W_invariant(G: RayClassGroup, iota: EmbeddingPair, rsets: list[RSet],
                a_c: Ideal) -> LogLinearCombination:
    """-(sum of zeta(0) over the offsets) times the formal ideal log of
    a_c f at iota."""
    from .numberfield import log_iota

    F = G.field
    coeff = F.element(0)
    for Z in cone_zeta0_sums(rsets):
        coeff = coeff + Z
    base_log = log_iota(a_c * G.modulus, iota)
    return base_log.scale(-coeff.apply(iota))


def V_invariant(G: RayClassGroup, iota: EmbeddingPair,
                rsets: list[RSet]) -> LogLinearCombination:
    """Cross-embedding correction.

    Zero in rank 1 and over Q.  For a rank-2 cone of a real quadratic
    field each offset contributes, for each choice of pivot basis vector,
    a coefficient zeta_fml(-1, (ratio difference), (other offset)) against
    log |iota(v)/iota'(v)|, combined as -(1/n)(own embedding pair) +
    (1/(2 n^2))(sum over ordered pairs, which collapses to twice the
    first-embedding representative).
    """
    F = G.field
    comb = LogLinearCombination.zero(F)
    if F.degree == 1:
        return comb
    n = F.degree
    iota1 = F.embeddings()[0]
    for rset in rsets:
        cone = rset.cone
        if cone.rank != 2:
            continue
        for x in rset.points:
            for par in (0, 1):
                oth = 1 - par
                w = cone.basis[oth] / cone.basis[par]
                delta = w - w.conj()
                base = cone.basis[par] / cone.basis[par].conj()
                inner = zeta_formal(1, [delta], [mpq(x[oth])])
                # own-pair part at iota, with the conjugate embedding
                coef1 = inner.apply(iota) * mpq(-1, n)
                comb = comb + LogLinearCombination.from_base(
                    F, coef1, base.apply(iota))
                # embedding-independent part: both orderings agree, so
                # 1/(2 n^2) * 2 at the first embedding
                coef2 = inner.apply(iota1) * mpq(1, n * n)
                comb = comb + LogLinearCombination.from_base(
                    F, coef2, base.apply(iota1))
    return comb


def X_invariant(G: RayClassGroup, c: RayClass, iota: EmbeddingPair,
                D: ShintaniDomain, a_c: Ideal, ctx: PrecisionContext,
                c_iota0: RayClass | None = None,
                rsets: list[RSet] | None = None) -> InvariantBundle:
    """Full bundle X = G + W + V (union variant when c_iota0 given)."""
    if rsets is None:
        rsets = rsets_for(G, class_filter(G, c, c_iota0), D, a_c)
    g = G_invariant(iota, rsets, ctx)
    w = W_invariant(G, iota, rsets, a_c)
    v = V_invariant(G, iota, rsets)
    with ctx.active():
        x_val = g + eval_real(w, ctx) + eval_real(v, ctx)
    return InvariantBundle(c, iota, a_c, g, w, v, x_val, union_with=c_iota0)


def Xp_invariant(G: RayClassGroup, c: RayClass, iota: EmbeddingPair,
                 D: ShintaniDomain, a_c: Ideal, pctx: PadicContext,
                 c_iota0: RayClass | None = None,
                 rsets: list[RSet] | None = None,
                 nodes: list[int] | None = None) -> PadicInvariantBundle:
    """p-adic bundle X_p = G_p + [W]_p + [V]_p.

    Needs the selected prime above p to divide the modulus (surfaced by
    the evaluator as an interpolation-condition error otherwise) and a_c
    coprime to p.
    """
    if rsets is None:
        rsets = rsets_for(G, class_filter(G, c, c_iota0), D, a_c)
    if nodes is None:
        nodes = interpolation_nodes(pctx.p, pctx.bernoulli_cap)
    F = G.field
    gp = PadicNumber.zero(pctx.p, 10 ** 6)
    attained = 10 ** 6
    for rset in rsets:
        if not rset.points:
            continue
        basis = rset.cone.basis
        v_in = [pctx.input(v, iota) for v in basis]
        zs = [pctx.input(_offset_point(rset.cone, x), iota)
              for x in rset.points]
        part, att = lgamma_p_cone_sum(pctx, v_in, list(rset.points), zs,
                                      nodes=nodes)
        gp = gp + part
        attained = min(attained, att)
    w = W_invariant(G, iota, rsets, a_c)
    v = V_invariant(G, iota, rsets)
    xp = gp + bracket_p(w, pctx) + bracket_p(v, pctx)
    attained = min(attained, xp.absprec)
    return PadicInvariantBundle(c, iota, a_c, gp, attained, w, v, xp,
                                union_with=c_iota0)


# --------------------------------------------------------------------
# character values
# --------------------------------------------------------------------

def character_root_padic(chi: RayClassCharacter, pctx: PadicContext,
                         prec: int | None = None) -> PadicNumber:
    """A primitive root of unity of the character's order in Z_p
    (requires order | p - 1): the Teichmueller lift of a generator's
    power."""
    N = chi.root_order
    p = pctx.p
    if (p - 1) % N != 0:
        raise ValueError(
            f"character values of order {N} do not live in Q_{p}")
    prec = prec or pctx.prec + 16
    g = _primitive_root(p)
    base = teichmuller(PadicNumber(p, 0, g, prec))
    return base ** ((p - 1) // N)


def _primitive_root(p: int) -> int:
    from .numberfield import _factor_int

    fac = _factor_int(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in fac):
            return g
    raise RuntimeError("no primitive root found")
