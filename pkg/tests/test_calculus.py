import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torcalc import calculus, numerics
from torcalc.calculus import ScalarField
from torcalc.coords import CartPoint, ScaleConfig
from torcalc.errors import OnAxis

FAM = calculus.gaussian_family()
G0, XG = FAM[0], FAM[1]


def poly_field(ev, grad):
    return ScalarField(ev, grad)


X_FIELD = poly_field(lambda p: p[0], lambda p: (1.0, 0.0, 0.0))
QUAD_FIELD = poly_field(lambda p: p[0] ** 2 + p[1] * p[2], lambda p: (2 * p[0], p[2], p[1]))


class TestApply:
    def test_t3_on_u(self):
        u = calculus.coordinate_field("u")
        for p in [(1.0, 0.0, 0.5), (0.3, -0.8, -1.1), (2.0, 1.0, 3.0)]:
            assert calculus.apply(calculus.op_t(3), u, p) == pytest.approx(-1j, abs=1e-7)

    def test_t3_on_k(self):
        k = calculus.coordinate_field("k")
        assert calculus.apply(calculus.op_t(3), k, (0.6, 0.8, 0.5)) == pytest.approx(0.0, abs=1e-8)

    def test_l3_on_phi(self):
        phi = calculus.coordinate_field("phi")
        assert calculus.apply(calculus.op_l(3), phi, (0.6, 0.8, 0.5)) == pytest.approx(-1j, abs=1e-14)

    def test_pk_on_k(self):
        k = calculus.coordinate_field("k")
        assert calculus.apply(calculus.op_pk(), k, (1.0, 1.0, 1.0)) == pytest.approx(-1j, abs=1e-7)

    def test_pk1_pk2_on_k12(self):
        p = (0.7, -0.4, 1.2)
        k1, k2 = calculus.coordinate_field("k1"), calculus.coordinate_field("k2")
        assert calculus.apply(calculus.op_pk1(), k1, p) == pytest.approx(-1j, abs=1e-7)
        assert calculus.apply(calculus.op_pk1(), k2, p) == pytest.approx(0.0, abs=1e-7)
        assert calculus.apply(calculus.op_pk2(), k2, p) == pytest.approx(-1j, abs=1e-7)

    def test_hbar_scaling(self):
        cfg = ScaleConfig(hbar=2.5)
        phi = calculus.coordinate_field("phi")
        assert calculus.apply(calculus.op_l(3), phi, (1.0, 1.0, 0.0), cfg) == pytest.approx(-2.5j)

    def test_on_axis(self):
        with pytest.raises(OnAxis):
            calculus.apply(calculus.op_t(3), G0, (0.0, 0.0, 1.0))

    @settings(max_examples=50, deadline=None)
    @given(st.tuples(st.floats(0.2, 2.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0)),
           st.integers(0, 4))
    def test_analytic_matches_fd(self, p, idx):
        f = FAM[idx]
        for op in (calculus.op_t(3), calculus.op_pk1(), calculus.op_l(2)):
            exact = calculus.apply(op, f, p)
            fd = calculus.apply(op, f, p, fd=numerics.FDSpec(1e-3))
            assert fd == pytest.approx(exact, abs=1e-8)


class TestCommutators:
    @pytest.mark.parametrize("a,b", [("T3", "L3"), ("T3", "pk"), ("pk1", "pk2"), ("T3", "pk1")])
    def test_commuting(self, a, b):
        ops = {"T3": calculus.op_t(3), "L3": calculus.op_l(3), "pk": calculus.op_pk(),
               "pk1": calculus.op_pk1(), "pk2": calculus.op_pk2()}
        for f in FAM[1:4]:
            r = calculus.commutator_report(ops[a], ops[b], f, (0.8, 0.5, 0.3))
            assert abs(r.residual) < 1e-5
            assert r.resolved

    def test_eps_identity(self):
        # [T1, L2] = i hbar T3
        t3 = calculus.op_t(3)
        f = FAM[3]
        exp = lambda q: complex(np.dot(t3.w(q), calculus.gradient(f, q)))  # noqa: E731
        r = calculus.commutator_report(calculus.op_t(1), calculus.op_l(2), f, (0.6, -0.5, 0.9),
                                       expected=exp)
        assert abs(r.residual) < 1e-5
        assert r.resolved

    def test_noncommuting_is_unresolved(self):
        r = calculus.commutator_report(calculus.op_t(1), calculus.op_l(2), FAM[3], (0.6, -0.5, 0.9))
        assert abs(r.residual) > 1e-2
        assert r.status == "unresolved"
        assert r.ratio == pytest.approx(1.0, abs=0.1)

    def test_exact_status_on_axisymmetric(self):
        # L3 kills g0 identically, so there is no truncation error to halve
        r = calculus.commutator_report(calculus.op_t(3), calculus.op_l(3), G0, (0.8, 0.5, 0.3))
        assert r.status in ("exact", "truncation")
        assert abs(r.residual) < 1e-10

    def test_residual_matches_report(self):
        a, b = calculus.op_t(3), calculus.op_pk()
        p = (0.8, 0.5, 0.3)
        assert calculus.commutator_residual(a, b, XG, p) == calculus.commutator_report(a, b, XG, p).residual


class TestMomentum:
    def test_x_field(self):
        got = calculus.reconstruct_momentum((1.0, 1.0, 1.0), X_FIELD)
        assert got == pytest.approx([-1j, 0.0, 0.0], abs=1e-10)

    def test_quadratic(self):
        p = (0.7, -0.4, 1.2)
        got = calculus.reconstruct_momentum(p, QUAD_FIELD)
        want = -1j * np.array([2 * p[0], p[2], p[1]])
        assert got == pytest.approx(want, abs=1e-7)

    def test_gaussian_fd_gradient(self):
        p = (0.5, 0.9, -0.6)
        f = FAM[4]
        got = calculus.reconstruct_momentum(p, f, fd=numerics.FDSpec(1e-3))
        want = -1j * np.asarray(f.gradient(CartPoint(*p)))
        assert got == pytest.approx(want, abs=1e-6)

    def test_identity_random(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            p = rng.uniform(-2, 2, 3)
            if math.hypot(p[0], p[1]) < 0.1:
                continue
            f = FAM[rng.integers(5)]
            want = -1j * np.asarray(f.gradient(CartPoint(*p)))
            got = calculus.reconstruct_momentum(p, f)
            assert np.max(np.abs(got - want)) <= 1e-10 * max(1.0, np.max(np.abs(want)))


class TestInnerProduct:
    def test_norm_cart(self):
        assert calculus.inner_product(G0, G0, "cart") == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("chart", ["nat-kuphi", "nat-k12u"])
    def test_norm_nat(self, chart):
        assert calculus.inner_product(G0, G0, chart) == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("chart", calculus.CHARTS)
    def test_parity(self, chart):
        assert abs(calculus.inner_product(G0, XG, chart)) < 1e-8

    def test_charts_agree(self):
        grams = [calculus.gram_matrix(FAM, c) for c in calculus.CHARTS]
        norms = np.sqrt(np.real(np.diag(grams[0])))
        scale = np.outer(norms, norms)
        for g in grams[1:]:
            assert np.max(np.abs(g - grams[0]) / scale) < 1e-4

    def test_gram_matches_pairwise(self):
        g = calculus.gram_matrix(FAM[:3], "nat-k12u")
        assert g[1, 2] == pytest.approx(calculus.inner_product(FAM[1], FAM[2], "nat-k12u"), rel=1e-12)

    def test_unknown_chart(self):
        with pytest.raises(ValueError):
            calculus.inner_product(G0, G0, "polar")
