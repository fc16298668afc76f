import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torcalc import coords, spectral
from torcalc.coords import CylPoint, ScaleConfig
from torcalc.errors import DomainError, OutOfRange, OutsideTorus
from torcalc.spectral import ExtensionBC, FiberState, ThinTorusGeom

C_A = 1.31102877714605990523241979495
GEOM = ThinTorusGeom(1.0, 0.01)


class TestSpectrum:
    def test_first_level(self):
        spec = spectral.extension_spectrum(1.0, ExtensionBC(0.0), range(-2, 3))
        assert spec[0] == (0, 0.0)
        assert spec[1][0] == 1 and spec[1][1] == pytest.approx(math.pi / C_A, rel=1e-14)
        # pi / 1.31103 = 2.39628
        assert spec[1][1] == pytest.approx(2.3962804694711841, abs=1e-14)
        assert spec[2][1] == pytest.approx(-spec[1][1], rel=1e-15)

    def test_positive_first_on_ties(self):
        spec = spectral.extension_spectrum(2.0, ExtensionBC(0.0), range(-3, 4))
        ts = [t for _, t in spec]
        for a, b in zip(ts[1::2], ts[2::2]):
            assert a > 0 and b == pytest.approx(-a)
        assert [abs(t) for t in ts] == sorted(abs(t) for t in ts)

    def test_theta_pi(self):
        k0 = 1.5
        a = coords.a_of_k(k0)
        spec = dict(spectral.extension_spectrum(k0, ExtensionBC(math.pi), [0]))
        assert spec[0] == pytest.approx(-math.pi / (2 * a), rel=1e-14)

    def test_scales_with_k(self):
        # t_n = pi n k / C_a for theta = 0
        t = dict(spectral.extension_spectrum(3.0, ExtensionBC(), [2]))[2]
        assert t == pytest.approx(2 * math.pi * 3.0 / C_A, rel=1e-13)

    def test_callable_theta(self):
        bc = ExtensionBC(lambda k, phi: 0.5 * k + phi)
        assert bc.at(2.0, 0.25) == 1.25

    def test_invalid_k0(self):
        with pytest.raises(DomainError):
            spectral.extension_spectrum(0.0, ExtensionBC(), [0])
        with pytest.raises(DomainError):
            spectral.normalization_factor(-1.0)

    @settings(max_examples=200, deadline=None)
    @given(k0=st.floats(0.05, 20), theta=st.floats(-math.pi, math.pi), n=st.integers(-20, 20))
    def test_phase_condition(self, k0, theta, n):
        bc = ExtensionBC(theta)
        t = dict(spectral.extension_spectrum(k0, bc, [n]))[n]
        assert spectral.bc_phase_residual(t, k0, bc) < 1e-12 * max(1.0, abs(t) * coords.a_of_k(k0))


class TestEigenfibers:
    def test_prefactor_and_modulus(self):
        st_ = FiberState(1.0, 1, 2, math.pi / C_A)
        pref = 1 / (2 * math.sqrt(2 * math.pi * C_A))
        for u in np.linspace(-C_A, C_A, 7):
            v = spectral.eigenfiber_value(st_, float(u), 0.3)
            assert abs(v) == pytest.approx(pref, rel=1e-14)
        assert spectral.eigenfiber_value(st_, 0.0, 0.0) == pytest.approx(pref)

    def test_boundary_phase(self):
        k0, theta = 0.8, 1.1
        bc = ExtensionBC(theta)
        a = coords.a_of_k(k0)
        for n, t in spectral.extension_spectrum(k0, bc, range(-3, 4)):
            s = FiberState(k0, n, 0, t)
            lhs = spectral.eigenfiber_value(s, -a, 0.0)
            rhs = spectral.eigenfiber_value(s, a, 0.0) * cmath.exp(1j * theta)
            assert abs(lhs - rhs) < 1e-12

    def test_out_of_range(self):
        a = coords.a_of_k(1.0)
        with pytest.raises(OutOfRange):
            spectral.eigenfiber_value(FiberState(1.0, 0, 0, 0.0), 1.01 * a, 0.0)

    @pytest.mark.parametrize("k0", [0.1, 1.0, 7.3])
    def test_normalization(self, k0):
        assert spectral.normalization_factor(k0) == pytest.approx(1.0, abs=1e-12)
        assert spectral.normalization_factor(k0, ScaleConfig(s=3.0)) == pytest.approx(1.0, abs=1e-12)

    def test_overlap_orthogonal(self):
        k0 = 1.3
        a = coords.a_of_k(k0)
        spec = spectral.extension_spectrum(k0, ExtensionBC(0.0), range(-2, 3))
        for n1, t1 in spec:
            for n2, t2 in spec:
                ov = spectral.fiber_overlap(t1, t2, k0)
                want = 2 * a if n1 == n2 else 0.0
                assert abs(ov - want) < 1e-12


class TestThinTorusGeometry:
    def test_validation(self):
        with pytest.raises(DomainError):
            ThinTorusGeom(1.0, 0.0)
        with pytest.raises(DomainError):
            ThinTorusGeom(1.0, 1.5)
        assert GEOM.valid
        assert not ThinTorusGeom(1.0, 0.3).valid

    def test_contains_box(self):
        assert GEOM.contains(1.0099, -0.01)
        assert not GEOM.contains(1.0, 0.011)

    def test_nat_example(self):
        n = spectral.thin_torus_nat(CylPoint(1.0, 0.01), GEOM)
        assert (n.k, n.u) == pytest.approx((1.0, -0.005), abs=1e-15)

    def test_nat_vs_exact(self):
        exact = coords.cyl_to_nat(CylPoint(1.0, 0.01))
        assert spectral.thin_torus_nat(CylPoint(1.0, 0.01), GEOM).u == pytest.approx(exact.u, rel=1e-4)

    def test_outside(self):
        with pytest.raises(OutsideTorus):
            spectral.thin_torus_nat(CylPoint(1.5, 0.0), GEOM)
        with pytest.raises(OutsideTorus):
            spectral.h0_apply(lambda k, u, phi: 1.0, CylPoint(1.0, 0.5), GEOM)

    def test_warns_when_fat(self):
        geom = ThinTorusGeom(1.0, 0.3)
        with pytest.warns(RuntimeWarning):
            spectral.thin_torus_nat(CylPoint(1.0, 0.1), geom)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            spectral.thin_torus_nat(CylPoint(1.0, 0.001), GEOM)


class TestH0:
    def test_constant(self):
        assert spectral.h0_apply(lambda k, u, phi: 2.0, CylPoint(1.0, 0.002), GEOM) == pytest.approx(0.0, abs=1e-8)

    def test_plane_wave_eigenvalue(self):
        a = coords.a_of_k(1.0)
        c1 = 2 * math.pi / (2 * a)
        alpha = 0.5
        f = lambda k, u, phi: cmath.exp(1j * c1 * u)  # noqa: E731
        p = CylPoint(1.0, 0.004, 0.7)
        u = coords.cyl_to_nat(p).u
        want = 0.5 * alpha ** 2 * c1 ** 2 * f(1.0, u, 0.7)
        got = spectral.h0_apply(f, p, GEOM)
        assert abs(got - want) <= 1e-6 * abs(want)

    def test_angular_term(self):
        # exp(i m phi) / k**0 contributes m**2 / k**2 (hbar**2 / 2m)
        f = lambda k, u, phi: cmath.exp(2j * phi)  # noqa: E731
        p = CylPoint(1.005, 0.0, 0.2)
        got = spectral.h0_apply(f, p, GEOM)
        assert got == pytest.approx(0.5 * 4 / 1.005 ** 2 * f(0, 0, 0.2), rel=1e-6)

    def test_matches_cartesian_on_mid_circle(self):
        f = spectral.torus_bump(GEOM)
        p = CylPoint(1.0, 0.004, 0.3)
        a = spectral.h0_apply(f, p, GEOM)
        b = spectral.h0_cartesian(f, p, h=1e-4)
        scale = 0.5 / (GEOM.r_T / 3) ** 2
        assert abs(a - b) / scale < 1e-3


class TestThinTorusOperators:
    def test_centre_exact(self):
        r = spectral.thin_torus_operator_check(CylPoint(1.0, 0.0), GEOM)
        assert r.pk1 == (0.0, 0.0, 0.0)
        assert max(r.pk2) < 1e-15

    def test_residual_shrinks_with_z(self):
        vals = [spectral.thin_torus_operator_check(CylPoint(1.0, z), GEOM).max for z in (0.008, 0.004, 0.002)]
        assert vals[0] > vals[1] > vals[2]

    def test_u_error_second_order_on_mid_circle(self):
        rows = spectral.halving_ratios(lambda z: spectral.u_thin_error(CylPoint(1.0, z), GEOM), 0.008, 4)
        assert math.isnan(rows[0][2])
        for _, _, ratio in rows[1:]:
            assert ratio == pytest.approx(4.0, rel=0.05)

    def test_u_error_at_midplane_undefined(self):
        with pytest.raises(DomainError):
            spectral.u_thin_error(CylPoint(1.0, 0.0), GEOM)
