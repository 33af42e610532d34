"""Cones, fundamental domains, offset enumeration, domain operations."""

import random

import pytest
from gmpy2 import mpq

from conezeta.numberfield import Ideal, QuadField, ray_class_group
from conezeta.shintani import (
    Cone,
    enumerate_R,
    multiply_domain,
    scale_domain,
    sharp_flat_natural_fan,
    shintani_domain,
    subdivide,
    unit_translate,
)


@pytest.fixture(scope="module")
def F5():
    return QuadField(5)


@pytest.fixture(scope="module")
def F3():
    return QuadField(3)


def random_totally_positive(F, rng):
    while True:
        z = F.element(mpq(rng.randrange(1, 400), rng.randrange(1, 40)),
                      mpq(rng.randrange(-200, 200), rng.randrange(1, 40)))
        if z.is_totally_positive():
            return z


class TestDomain:
    def test_sqrt5_cones(self, F5):
        D = shintani_domain(F5)
        assert len(D.cones) == 2
        # eps_plus = eps^2 = (3+sqrt5)/2
        assert F5.tp_fund_unit == F5.element(mpq(3, 2), mpq(1, 2))
        assert D.cones[1].basis == (F5.one, F5.tp_fund_unit)

    def test_disjoint_and_unique_translate(self, F5, F3):
        rng = random.Random(42)
        for F in (F5, F3):
            D = shintani_domain(F)
            for _ in range(400):
                z = random_totally_positive(F, rng)
                assert D.translate_count(z) == 1

    def test_unit_translate_moves_points_out(self, F3):
        D = shintani_domain(F3)
        ep = F3.tp_fund_unit
        rng = random.Random(1)
        for _ in range(200):
            z = random_totally_positive(F3, rng)
            if D.membership(z) is not None:
                assert D.membership(z * ep) is None

    def test_rational_field_domain(self):
        Q = QuadField(1)
        D = shintani_domain(Q)
        assert len(D.cones) == 1
        assert D.membership(Q.element(mpq(7, 3))) == 0
        assert D.membership(Q.element(-1)) is None


class TestCone:
    def test_open_membership(self, F5):
        c = Cone((F5.one, F5.tp_fund_unit))
        assert c.contains(F5.one + F5.tp_fund_unit)
        assert not c.contains(F5.one)          # boundary ray
        assert not c.contains(F5.tp_fund_unit)

    def test_rejects_dependent_basis(self, F5):
        with pytest.raises(ValueError):
            Cone((F5.one, F5.element(3)))

    def test_rejects_nonintegral(self, F5):
        with pytest.raises(ValueError):
            Cone((F5.element(mpq(1, 3)),))

    def test_sign_flag_inference(self, F3):
        # -1 + sqrt3 is negative at iota2 only
        v = F3.element(-1, 1)
        assert v.sign_at(0) > 0 > v.sign_at(1)
        c = Cone((v,))
        assert c.iota0_index == 1
        with pytest.raises(ValueError):
            Cone((v, F3.element(1, -1)))  # mixed directions


class TestEnumeration:
    def test_rational_field_single_offset(self):
        # F = Q, f = (m), c = [(a)]: the only offset is a/m
        Q = QuadField(1)
        G = ray_class_group(Q, Ideal._rational(Q, 5))
        D = shintani_domain(Q)
        for a in (1, 2, 3, 4):
            c = G.class_of_element(Q.element(a))
            R = enumerate_R(G, c, D.cones[0], Ideal._one(Q))
            assert R.points == ((mpq(a, 5),),)

    def test_identity_modulus_trivial_class(self, F5):
        G = ray_class_group(F5, Ideal._one(F5))
        D = shintani_domain(F5)
        R1 = enumerate_R(G, G.identity(), D.cones[0], Ideal._one(F5))
        assert R1.points == ((mpq(1),),)
        R2 = enumerate_R(G, G.identity(), D.cones[1], Ideal._one(F5))
        assert R2.points == ((mpq(1), mpq(1)),)

    def test_partition_by_class(self, F5):
        # summed over all classes, offsets fill the coprime residues of
        # the lattice points in the fundamental cell
        G = ray_class_group(F5, Ideal._rational(F5, 11))
        D = shintani_domain(F5)
        a_c = Ideal._one(F5)
        for cone in D.cones:
            per_class = [len(enumerate_R(G, c, cone, a_c)) for c in G.classes()]
            total = sum(per_class)
            # lattice points in the cell: N(f) per unit volume; the
            # coprime ones number phi(f) * covolume ratio
            if cone.rank == 1:
                assert total == 10  # 11 points on the ray, 1 non-coprime
            else:
                assert total == 100  # 121 points, 21 on the two prime walls

    def test_offsets_give_integral_coprime_ideals(self, F3):
        G = ray_class_group(F3, Ideal._rational(F3, 13))
        D = shintani_domain(F3)
        a_c = Ideal._one(F3)
        f = G.modulus
        for cone in D.cones:
            for c in G.classes():
                R = enumerate_R(G, c, cone, a_c)
                for x in R.points:
                    z = sum((cone.basis[i] * x[i] for i in range(cone.rank)),
                            F3.element(0))
                    I = F3.ideal(z) * a_c * f
                    assert I.is_integral()
                    assert I.is_coprime(f)
                    assert G.class_of(I).coords == c.coords


class TestOperations:
    def test_sharp_flat_natural_partition(self, F5):
        D = shintani_domain(F5)
        fan = sharp_flat_natural_fan(D.cones[1])
        D2 = subdivide(D, 1, fan)
        assert len(D2.cones) == 4
        rng = random.Random(5)
        for _ in range(200):
            z = random_totally_positive(F5, rng)
            assert D2.translate_count(z) == 1

    def test_trivial_fan(self, F5):
        D = shintani_domain(F5)
        D2 = subdivide(D, 1, [D.cones[1]])
        assert D2.cones == D.cones

    def test_basis_rescale_is_identity_partition(self, F5):
        D = shintani_domain(F5)
        v1, v2 = D.cones[1].basis
        D2 = subdivide(D, 1, [Cone((v1 * 3, v2))])
        assert D2.cones[1].same_rays(D.cones[1])

    def test_bad_fan_rejected(self, F5):
        D = shintani_domain(F5)
        v1, v2 = D.cones[1].basis
        with pytest.raises(ValueError):
            subdivide(D, 1, [Cone((v1, v1 + v2))])  # missing half

    def test_unit_translate_r_set_invariance(self, F3):
        # R(c, eps v) = R(c, v) as offset sets
        G = ray_class_group(F3, Ideal._rational(F3, 13))
        D = shintani_domain(F3)
        a_c = Ideal._one(F3)
        D2 = unit_translate(D, 1, F3.tp_fund_unit)
        for c in G.classes():
            before = enumerate_R(G, c, D.cones[1], a_c)
            after = enumerate_R(G, c, D2.cones[1], a_c)
            assert before.points == after.points

    def test_unit_translate_requires_unit(self, F3):
        D = shintani_domain(F3)
        with pytest.raises(ValueError):
            unit_translate(D, 0, F3.element(2))

    def test_scale_domain_roundtrip(self, F5):
        D = shintani_domain(F5)
        a_c = F5.primes_above(11)[0]
        alpha = a_c.inverse().principal_generator()
        if not alpha.is_totally_positive():
            alpha = _make_tp(alpha)
        D2, a_c2 = scale_domain(D, alpha, a_c)
        assert a_c2 == a_c * alpha
        assert a_c2.is_integral()
        # alpha = 1 is the identity operation
        D3, a_c3 = scale_domain(D, F5.one, a_c)
        assert a_c3 == a_c
        for c_old, c_new in zip(D.cones, D3.cones):
            assert c_old.same_rays(c_new)

    def test_refinement_preserves_r_sets_bijectively(self, F5):
        # the sharp/flat/natural offset maps partition the parent offsets
        G = ray_class_group(F5, Ideal._rational(F5, 11))
        D = shintani_domain(F5)
        a_c = Ideal._one(F5)
        cone = D.cones[1]
        fan = sharp_flat_natural_fan(cone)
        for c in G.classes():
            parent = enumerate_R(G, c, cone, a_c)
            sharp_set, flat_set, nat_set = (
                enumerate_R(G, c, fc, a_c) for fc in fan)
            sharp, flat, nat = [], [], []
            for (x1, x2) in parent.points:
                if x1 < x2:
                    sharp.append((x1 - x2 + 1, x2))
                    flat.append((x1, x2 - x1))
                elif x1 > x2:
                    sharp.append((x1 - x2, x2))
                    flat.append((x1, x2 - x1 + 1))
                else:
                    sharp.append((mpq(1), x1))
                    flat.append((x1, mpq(1)))
                    nat.append((x1,))
            assert tuple(sorted(sharp)) == sharp_set.points
            assert tuple(sorted(flat)) == flat_set.points
            assert tuple(sorted(nat)) == nat_set.points


def _make_tp(alpha):
    F = alpha.field
    if alpha.is_totally_positive():
        return alpha
    for cand in (-alpha, alpha * F.fund_unit, -alpha * F.fund_unit):
        if cand.is_totally_positive():
            return cand
    raise AssertionError
