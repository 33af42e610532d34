"""Exact kernel: Bernoulli cache and formal cone zeta values."""

import gmpy2
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from conezeta.exactcore import (
    BernoulliTable,
    bernoulli_number,
    bernoulli_polynomial,
    zeta_formal,
)


def bernoulli_by_recurrence(n):
    """Independent oracle: sum_{k<m} C(m+1,k) B_k = 0."""
    out = [mpq(1)]
    for m in range(1, n + 1):
        s = mpq(0)
        for k in range(m):
            s += gmpy2.bincoef(m + 1, k) * out[k]
        out.append(-s / (m + 1))
    return out


def zeta_formal_series_oracle(m, v, x):
    """Independent oracle: [t^m] of prod_i e^{x_i v_i t} v_i/(e^{v_i t}-1)
    times (-1)^r m!, via truncated power series over mpq (each factor is
    built from e^{xvt} and the series inverse of (e^{vt}-1)/t)."""
    r = len(v)
    if r == 0:
        return mpq(1) if m == 0 else mpq(0)
    order = m + r + 1

    def series_mul(f, g):
        out = [mpq(0)] * order
        for i, fi in enumerate(f):
            if fi == 0:
                continue
            for j in range(order - i):
                out[i + j] += fi * g[j]
        return out

    def series_inv(f):
        out = [mpq(0)] * order
        out[0] = 1 / f[0]
        for i in range(1, order):
            acc = mpq(0)
            for j in range(1, i + 1):
                acc += f[j] * out[i - j]
            out[i] = -acc / f[0]
        return out

    prod = [mpq(0)] * order
    prod[0] = mpq(1)
    for vi, xi in zip(v, x):
        egm1 = [mpq(vi) ** (k + 1) / gmpy2.fac(k + 1) for k in range(order)]
        ex = [mpq(xi) ** k * mpq(vi) ** k / gmpy2.fac(k) for k in range(order)]
        prod = series_mul(prod, series_mul(ex, series_inv(egm1)))
    # each factor is t e^{xvt}/(e^{vt}-1) whose t^l coefficient is
    # B_l(x) v^(l-1)/l!, so the defining sum is the t^(m+r) coefficient
    return mpq((-1) ** r) * gmpy2.fac(m) * prod[m + r]


class TestBernoulli:
    def test_small_values(self):
        assert bernoulli_number(0) == 1
        assert bernoulli_number(1) == mpq(-1, 2)
        assert bernoulli_number(2) == mpq(1, 6)
        assert bernoulli_number(3) == 0
        assert bernoulli_number(12) == mpq(-691, 2730)

    def test_against_defining_recurrence(self):
        oracle = bernoulli_by_recurrence(60)
        for l in range(61):
            assert bernoulli_number(l) == oracle[l]

    def test_polynomial_basics(self):
        assert bernoulli_polynomial(0, mpq(7, 3)) == 1
        assert bernoulli_polynomial(1, mpq(1, 2)) == 0
        assert bernoulli_polynomial(2, mpq(0)) == mpq(1, 6)

    def test_polynomial_difference_identity(self):
        # B_l(x+1) - B_l(x) = l x^(l-1)
        for l in range(1, 12):
            for x in (mpq(0), mpq(2, 7), mpq(-3, 5)):
                lhs = bernoulli_polynomial(l, x + 1) - bernoulli_polynomial(l, x)
                assert lhs == l * x ** (l - 1)

    def test_value_at_zero_is_number(self):
        for l in range(25):
            assert bernoulli_polynomial(l, mpq(0)) == bernoulli_number(l)

    def test_table_extension_stable(self):
        t = BernoulliTable()
        first = t.number(20)
        t.number(400)
        assert t.number(20) == first

    def test_large_index_exact(self):
        # B_60 has denominator 56786730 (von Staudt-Clausen)
        assert bernoulli_number(60).denominator == 56786730

    def test_cap_enforced(self):
        t = BernoulliTable(max_degree=100)
        with pytest.raises(ValueError):
            t.number(101)


class TestZetaFormal:
    def test_spec_values(self):
        x = mpq(2, 7)
        assert zeta_formal(0, [mpq(1)], [x]) == mpq(1, 2) - x
        assert zeta_formal(0, [mpq(1), mpq(1)], [mpq(1), mpq(1)]) == mpq(5, 12)

    def test_empty_cone_convention(self):
        assert zeta_formal(0, [], []) == 1
        for m in range(1, 5):
            assert zeta_formal(m, [], []) == 0

    def test_rejects_zero_weight(self):
        with pytest.raises(ValueError):
            zeta_formal(0, [mpq(0)], [mpq(1)])

    @pytest.mark.parametrize("m", range(0, 7))
    def test_generating_function_oracle_r1(self, m):
        v = [mpq(3, 2)]
        x = [mpq(2, 5)]
        assert zeta_formal(m, v, x) == zeta_formal_series_oracle(m, v, x)

    @pytest.mark.parametrize("m", range(0, 7))
    def test_generating_function_oracle_r2(self, m):
        v = [mpq(2), mpq(5, 3)]
        x = [mpq(1, 4), mpq(5, 7)]
        assert zeta_formal(m, v, x) == zeta_formal_series_oracle(m, v, x)

    def test_generating_function_oracle_r3(self):
        v = [mpq(1), mpq(2), mpq(1, 2)]
        x = [mpq(1), mpq(1, 3), mpq(3, 4)]
        for m in range(0, 4):
            assert zeta_formal(m, v, x) == zeta_formal_series_oracle(m, v, x)

    @given(st.permutations([0, 1, 2]),
           st.integers(min_value=0, max_value=4))
    @settings(max_examples=30, deadline=None)
    def test_symmetry_under_permutation(self, perm, m):
        v = [mpq(1), mpq(3, 2), mpq(7, 5)]
        x = [mpq(1, 2), mpq(2, 3), mpq(1)]
        vp = [v[i] for i in perm]
        xp = [x[i] for i in perm]
        assert zeta_formal(m, v, x) == zeta_formal(m, vp, xp)

    @given(st.fractions(min_value="1/10", max_value="10"),
           st.integers(min_value=0, max_value=5))
    @settings(max_examples=40, deadline=None)
    def test_homogeneity(self, alpha_f, m):
        # zeta(-m, a v, a z) = a^m zeta(-m, v, z): scaling the weights
        # with the offsets fixed multiplies the value by alpha^m.
        alpha = mpq(alpha_f.numerator, alpha_f.denominator)
        v = [mpq(2), mpq(3, 2)]
        x = [mpq(1, 3), mpq(4, 5)]
        va = [alpha * vi for vi in v]
        assert zeta_formal(m, va, x) == alpha ** m * zeta_formal(m, v, x)
