"""Open simplicial cones, Shintani fundamental domains for real
quadratic fields, the finite offset sets attached to ray classes, and
the three domain operations (refinement, unit translation, ideal
rescaling) whose effect on the class invariants is verified downstream.

Boundary conventions are load-bearing and centralized here: cones are
open (all barycentric coordinates strictly positive), offset vectors
live in the half-open cube (0,1]^r, and every membership decision goes
through ``Cone.coordinates_of`` / ``Cone.contains`` so the same exact
predicate backs enumeration, the partition checks and the
fundamental-domain property.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpq, mpz

from .numberfield import FieldElement, Ideal, QuadField, RayClass, RayClassGroup

__all__ = [
    "Cone",
    "ShintaniDomain",
    "RSet",
    "shintani_domain",
    "enumerate_R",
    "subdivide",
    "unit_translate",
    "scale_domain",
    "multiply_domain",
    "choose_ac",
    "sharp_flat_natural_fan",
]

TOTALLY_POSITIVE = "totally_positive"


def _n_minus_1_positive(iota0_index: int) -> str:
    return f"n_minus_1_positive(iota{iota0_index + 1})"


class Cone:
    """Open simplicial cone with field-integral basis vectors.

    positivity is either "totally_positive" or the (n-1)-positive flag
    recording the one embedding allowed to go negative.
    """

    __slots__ = ("field", "basis", "positivity", "iota0_index")

    def __init__(self, basis: tuple[FieldElement, ...],
                 iota0_index: int | None = None):
        if not basis:
            raise ValueError("empty cone basis")
        self.field = basis[0].field
        self.basis = tuple(basis)
        n = self.field.degree
        if len(basis) > n:
            raise ValueError("cone rank exceeds field degree")
        for v in basis:
            if not v.is_integral():
                raise ValueError(f"cone basis vector {v!r} is not integral")
        if len(basis) == 2 and self._det() == 0:
            raise ValueError("linearly dependent cone basis")
        if all(v.is_totally_positive() for v in basis):
            self.positivity = TOTALLY_POSITIVE
            self.iota0_index = None
        else:
            if iota0_index is None:
                iota0_index = self._infer_iota0()
            for v in basis:
                for j in range(n):
                    if j != iota0_index and v.sign_at(j) <= 0:
                        raise ValueError(
                            f"basis vector {v!r} negative away from iota0")
            self.positivity = _n_minus_1_positive(iota0_index)
            self.iota0_index = iota0_index

    def _infer_iota0(self) -> int:
        for j in range(self.field.degree):
            if all(v.sign_at(i) > 0 for v in self.basis
                   for i in range(self.field.degree) if i != j):
                return j
        raise ValueError("cone basis is not positive away from any single embedding")

    @property
    def rank(self) -> int:
        return len(self.basis)

    def _det(self) -> mpq:
        v, w = self.basis
        return v.a * w.b - v.b * w.a

    def coordinates_of(self, z: FieldElement) -> tuple[mpq, ...] | None:
        """Exact cone coordinates of z, or None if z is outside the span
        (rank 1) of the basis."""
        if self.rank == 1:
            v = self.basis[0]
            # z = t v with rational t
            if v.a != 0:
                t = z.a / v.a
            else:
                t = z.b / v.b
            if z == v * t:
                return (t,)
            return None
        v, w = self.basis
        det = self._det()
        t1 = (z.a * w.b - w.a * z.b) / det
        t2 = (v.a * z.b - z.a * v.b) / det
        return (t1, t2)

    def contains(self, z: FieldElement) -> bool:
        """Open-cone membership: all coordinates strictly positive."""
        coords = self.coordinates_of(z)
        if coords is None:
            return False
        return all(t > 0 for t in coords)

    def scale(self, factor: FieldElement | mpq) -> "Cone":
        """Cone with every basis vector scaled; denominators are cleared
        by the minimal positive integer so the basis stays integral."""
        new = []
        for v in self.basis:
            w = v * factor
            u, vv = w.integral_coords()
            mult = int(gmpy2.lcm(mpz(u.denominator), mpz(vv.denominator)))
            new.append(w * mult)
        return Cone(tuple(new), iota0_index=self._iota0_hint(new))

    def _iota0_hint(self, vectors) -> int | None:
        for j in range(self.field.degree):
            if all(v.sign_at(i) > 0 for v in vectors
                   for i in range(self.field.degree) if i != j):
                if any(v.sign_at(j) < 0 for v in vectors):
                    return j
        return None

    def same_rays(self, other: "Cone") -> bool:
        """Equality as subsets of F (basis vectors match up to positive
        rational scaling, in order or swapped)."""
        if self.rank != other.rank:
            return False

        def ray_eq(v, w):
            # v = t w with t > 0
            if w.a != 0:
                t = v.a / w.a
            else:
                t = v.b / w.b
            return t > 0 and v == w * t

        if self.rank == 1:
            return ray_eq(self.basis[0], other.basis[0])
        a, b = self.basis
        c, d = other.basis
        return (ray_eq(a, c) and ray_eq(b, d)) or (ray_eq(a, d) and ray_eq(b, c))

    def __repr__(self):
        return f"C({', '.join(map(repr, self.basis))})"


@dataclass(frozen=True)
class ShintaniDomain:
    """Finite disjoint union of cones (not necessarily a fundamental
    domain; the flag records whether it was built as one)."""

    field: QuadField
    cones: tuple[Cone, ...]
    is_fundamental: bool = False

    def membership(self, z: FieldElement) -> int | None:
        """Index of the cone containing z, or None."""
        hits = [i for i, c in enumerate(self.cones) if c.contains(z)]
        if len(hits) > 1:
            raise AssertionError(f"domain cones overlap at {z!r}")
        return hits[0] if hits else None

    def translate_count(self, z: FieldElement, bound: int = 64) -> int:
        """Number of totally positive unit translates of z inside the
        domain, scanning eps_plus^k for |k| <= bound."""
        if self.field.degree == 1:
            return 1 if self.membership(z) is not None else 0
        ep = self.field.tp_fund_unit
        count = 0
        cur = z * ep ** (-bound)
        for _ in range(2 * bound + 1):
            if self.membership(cur) is not None:
                count += 1
            cur = cur * ep
        return count

    def with_cone_replaced(self, index: int, replacement: list[Cone]
                           ) -> "ShintaniDomain":
        cones = list(self.cones)
        cones[index:index + 1] = replacement
        return ShintaniDomain(self.field, tuple(cones), self.is_fundamental)


def shintani_domain(field: QuadField) -> ShintaniDomain:
    """The classical fundamental domain for the action of the totally
    positive units on the totally positive orthant: a single ray for Q,
    and C(1) u C(1, eps_plus) for a real quadratic field."""
    if field.degree == 1:
        return ShintaniDomain(field, (Cone((field.one,)),), True)
    ep = field.tp_fund_unit
    return ShintaniDomain(field, (Cone((field.one,)), Cone((field.one, ep))),
                          True)


@dataclass(frozen=True)
class RSet:
    """Offsets x in (0,1]^r with (x.v) a_c f integral and landing in the
    class filter."""

    cone: Cone
    points: tuple[tuple[mpq, ...], ...]
    class_filter: tuple

    def __len__(self):
        return len(self.points)


def _rational_step_lcm(coords: list[mpq]) -> mpq:
    """Smallest positive x with x*c integral for every c in coords."""
    step = None
    for c in coords:
        if c == 0:
            continue
        s = mpq(c.denominator, abs(c.numerator))
        # multiples of s are exactly the x with x*c integral
        step = s if step is None else _lcm_q(step, s)
    if step is None:
        raise ValueError("zero vector")
    return step


def _lcm_q(a: mpq, b: mpq) -> mpq:
    num = gmpy2.lcm(mpz(a.numerator), mpz(b.numerator))
    den = gmpy2.gcd(mpz(a.denominator), mpz(b.denominator))
    return mpq(num, den)


def enumerate_R(G: RayClassGroup, classes, cone: Cone, a_c: Ideal) -> RSet:
    """Exact enumeration of R(classes, cone basis, a_c).

    classes may be a single RayClass or an iterable of them (the union
    variant).  Walks the lattice (a_c f)^{-1} inside the half-open
    fundamental parallelepiped of the cone, keeps offsets whose ideal is
    integral (automatic), coprime to f, and in one of the given classes.
    """
    if isinstance(classes, RayClass):
        classes = (classes,)
    filt = frozenset(c.coords for c in classes)
    F = G.field
    f = G.modulus
    L = (a_c * f).inverse()
    mu = (a_c * f).principal_generator()  # (z)a_c f = (z mu) as ideals
    pts: list[tuple[mpq, ...]] = []
    if cone.rank == 1:
        v = cone.basis[0]
        g1, g2 = L.basis()
        if F.degree == 1:
            step = _rational_step_lcm([v.a / g1.a])
        else:
            # v in L-coordinates
            c1, c2 = _lattice_coords(L, v)
            step = _rational_step_lcm([c1, c2])
        x = step
        while x <= 1:
            z = v * x
            w = z * mu
            cls = _class_of_integral_element(G, w)
            if cls is not None and cls.coords in filt:
                pts.append((x,))
            x += step
    else:
        c11, c21 = _lattice_coords(L, cone.basis[0])
        c12, c22 = _lattice_coords(L, cone.basis[1])
        corners = [(c11 * x1 + c12 * x2, c21 * x1 + c22 * x2)
                   for x1 in (0, 1) for x2 in (0, 1)]
        k1_lo = _ceil_q(min(c[0] for c in corners))
        k1_hi = _floor_q(max(c[0] for c in corners))
        k2_lo = _ceil_q(min(c[1] for c in corners))
        k2_hi = _floor_q(max(c[1] for c in corners))
        det = c11 * c22 - c12 * c21
        for k1 in range(k1_lo, k1_hi + 1):
            for k2 in range(k2_lo, k2_hi + 1):
                x1 = (k1 * c22 - c12 * k2) / det
                x2 = (c11 * k2 - k1 * c21) / det
                if not (0 < x1 <= 1 and 0 < x2 <= 1):
                    continue
                z = cone.basis[0] * x1 + cone.basis[1] * x2
                w = z * mu
                cls = _class_of_integral_element(G, w)
                if cls is not None and cls.coords in filt:
                    pts.append((x1, x2))
    pts.sort()
    return RSet(cone, tuple(pts), tuple(sorted(filt)))


def _lattice_coords(L: Ideal, z: FieldElement) -> tuple[mpq, mpq]:
    """Coordinates of z in the Z-basis of the lattice L."""
    g1, g2 = L.basis()
    u1, v1 = g1.integral_coords()
    u2, v2 = g2.integral_coords()
    uz, vz = z.integral_coords()
    det = u1 * v2 - u2 * v1
    return ((uz * v2 - u2 * vz) / det, (u1 * vz - uz * v1) / det)


def _ceil_q(q) -> int:
    return int(gmpy2.ceil(q))


def _floor_q(q) -> int:
    return int(gmpy2.floor(q))


def _class_of_integral_element(G: RayClassGroup, w: FieldElement):
    """Class of the principal ideal (w), or None when not coprime."""
    try:
        return G.class_of_element(w)
    except ValueError:
        return None


# --------------------------------------------------------------------
# domain operations
# --------------------------------------------------------------------

def sharp_flat_natural_fan(cone: Cone) -> list[Cone]:
    """The three-piece refinement C(v1,v2) = C(v1,v1+v2) u C(v1+v2,v2)
    u C(v1+v2) of a rank-2 cone."""
    if cone.rank != 2:
        raise ValueError("refinement applies to rank-2 cones")
    v1, v2 = cone.basis
    s = v1 + v2
    i0 = cone.iota0_index
    return [Cone((v1, s), i0), Cone((s, v2), i0), Cone((s,), i0)]


def _fan_is_partition(cone: Cone, fan: list[Cone], grid_den: int = 16) -> bool:
    """Exact partition check for rank <= 2.

    A rank-2 fan partitions the parent iff its 2-dim pieces, ordered by
    angle, chain the parent boundary rays with consecutive pieces
    sharing a ray, and the internal chain rays occur exactly once each
    as 1-dim members.  A deterministic rational grid (denominator
    grid_den) re-checks unique coverage pointwise.
    """
    if len(fan) == 1:
        return cone.same_rays(fan[0])
    if cone.rank == 1:
        return len(fan) == 1 and cone.same_rays(fan[0])

    def ray_key(u: FieldElement):
        coords = cone.coordinates_of(u)
        t1, t2 = coords
        if t1 < 0 or t2 < 0 or (t1 == 0 and t2 == 0):
            return None  # outside the closed parent cone
        return mpq(t2) / t1 if t1 > 0 else None if t2 <= 0 else "inf"

    pieces = []
    internal_rays = []
    for c in fan:
        if c.rank == 2:
            k1, k2 = ray_key(c.basis[0]), ray_key(c.basis[1])
            if k1 is None or k2 is None:
                return False
            lo, hi = sorted([k1, k2], key=_ray_sort_value)
            if lo == hi:
                return False
            pieces.append((lo, hi))
        else:
            k = ray_key(c.basis[0])
            if k is None:
                return False
            internal_rays.append(k)
    pieces.sort(key=lambda p: _ray_sort_value(p[0]))
    expected_start = mpq(0)
    for lo, hi in pieces:
        if lo != expected_start:
            return False
        expected_start = hi
    if expected_start != "inf":
        return False
    chain = [hi for (_, hi) in pieces[:-1]]
    if sorted(map(_ray_sort_value, internal_rays)) != sorted(map(_ray_sort_value, chain)):
        return False
    for i in range(1, grid_den + 1):
        for j in range(1, grid_den + 1):
            z = cone.basis[0] * mpq(i, grid_den) + cone.basis[1] * mpq(j, grid_den)
            if sum(1 for c in fan if c.contains(z)) != 1:
                return False
    return True


def _ray_sort_value(k):
    return (1, mpq(0)) if k == "inf" else (0, k)


def subdivide(D: ShintaniDomain, cone_index: int, fan: list[Cone]
              ) -> ShintaniDomain:
    """Operation (I): replace one cone by an exact partition of itself."""
    cone = D.cones[cone_index]
    if not _fan_is_partition(cone, fan):
        raise ValueError("fan is not an exact partition of the cone")
    return D.with_cone_replaced(cone_index, list(fan))


def unit_translate(D: ShintaniDomain, cone_index: int, eps: FieldElement
                   ) -> ShintaniDomain:
    """Operation (II): replace C(v) by C(eps v) for a totally positive unit."""
    if abs(eps.norm()) != 1 or not eps.is_totally_positive():
        raise ValueError("translation factor must be a totally positive unit")
    cone = D.cones[cone_index]
    new = Cone(tuple(v * eps for v in cone.basis), cone.iota0_index)
    return D.with_cone_replaced(cone_index, [new])


def choose_ac(G: RayClassGroup, c: RayClass, avoid: Ideal | None = None) -> Ideal:
    """Deterministic auxiliary-ideal choice for a ray class: the integral
    ideal of smallest norm, coprime to the modulus (and to ``avoid``,
    e.g. a rational prime for the p-adic path), with a_c f in the
    trivial-modulus narrow class of c."""
    from .numberfield import ray_class_group

    F, f = G.field, G.modulus
    G1 = getattr(G, "_wide_group", None)
    if G1 is None:
        G1 = ray_class_group(F, Ideal._one(F))
        G._wide_group = G1
    target = G1.class_of(G.representative(c))
    n = 0
    while n < 100000:
        n += 1
        for idl in F.ideals_of_norm(n):
            if not idl.is_coprime(f):
                continue
            if avoid is not None and not idl.is_coprime(avoid):
                continue
            if G1.class_of(idl * f).coords == target.coords:
                return idl
    raise RuntimeError("auxiliary ideal search exhausted")


def multiply_domain(D: ShintaniDomain, lam: FieldElement) -> ShintaniDomain:
    """Domain with every cone scaled by a nonzero field element; the
    result keeps no fundamental-domain claim (used for the sign-flipped
    variants)."""
    cones = tuple(c.scale(lam) for c in D.cones)
    return ShintaniDomain(D.field, cones, False)


def scale_domain(D: ShintaniDomain, alpha: FieldElement, a_c: Ideal
                 ) -> tuple[ShintaniDomain, Ideal]:
    """Operation (III): replace a_c by alpha a_c and every cone by
    alpha^{-1} C(v) (with bases rescaled back into the integers)."""
    if not alpha.is_totally_positive():
        raise ValueError("alpha must be totally positive")
    if not a_c.inverse().contains(alpha):
        raise ValueError("alpha must lie in the inverse of a_c")
    inv = D.field.one / alpha
    cones = tuple(c.scale(inv) for c in D.cones)
    return (ShintaniDomain(D.field, cones, D.is_fundamental), a_c * alpha)
