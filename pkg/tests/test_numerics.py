import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torcalc import numerics
from torcalc.errors import DomainError, FieldVanishes, NoBracket, NonConvergence, Singular
from torcalc.numerics import FDSpec, QuadSpec

# Frozen oracle, 30-digit quadrature: int_0^1 dt / sqrt(t**4 + 8)
I8 = 0.349348824817212882367537843079
C_A = 1.31102877714605990523241979495


def simpson(f, a, b, n):
    h = (b - a) / n
    s = f(a) + f(b)
    s += 4 * sum(f(a + (2 * i - 1) * h) for i in range(1, n // 2 + 1))
    s += 2 * sum(f(a + 2 * i * h) for i in range(1, n // 2))
    return s * h / 3


def richardson_simpson(f, a, b, h):
    n = round((b - a) / h)
    return (16 * simpson(f, a, b, n) - simpson(f, a, b, n // 2)) / 15


def test_oracle_matches_frozen_value():
    # the independent oracle is what produced the frozen number's first digits
    val = richardson_simpson(lambda t: 1 / math.sqrt(t ** 4 + 8), 0.0, 1.0, 2 ** -10)
    assert val == pytest.approx(I8, abs=1e-14)
    assert val == pytest.approx(0.34935, abs=1e-5)


class TestIntegrate:
    def test_polynomial(self):
        assert numerics.integrate(lambda t: t, 0.0, 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_c_a_half_line(self):
        val = numerics.integrate(lambda t: 1 / math.sqrt(t ** 4 + 4), 0.0, math.inf)
        assert abs(val - 1.31103) < 1e-5
        assert val == pytest.approx(C_A, rel=1e-13)

    def test_against_oracle(self):
        assert numerics.integrate(lambda t: 1 / math.sqrt(t ** 4 + 8), 0.0, 1.0) == pytest.approx(I8, rel=1e-13)

    def test_half_line_shifted(self):
        val = numerics.integrate(lambda t: 1 / (1 + t * t), 1.0, math.inf)
        assert val == pytest.approx(math.pi / 4, rel=1e-13)

    def test_empty_interval(self):
        assert numerics.integrate(math.exp, 2.0, 2.0) == 0.0

    def test_reversed_limits(self):
        with pytest.raises(DomainError):
            numerics.integrate(math.exp, 1.0, 0.0)

    def test_budget_exhausted(self):
        with pytest.raises(NonConvergence):
            numerics.integrate(lambda t: math.sin(1 / t) / t, 1e-6, 1.0, QuadSpec(1e-14, 0.0, 2))

    @pytest.mark.parametrize("f,lo,hi,exact", [
        (lambda t: t, 0.0, 1.0, 0.5),
        (lambda t: 1 / math.sqrt(t ** 4 + 4), 0.0, math.inf, C_A),
        (lambda t: 1 / math.sqrt(t ** 4 + 8), 0.0, 1.0, I8),
    ])
    def test_tightening_never_hurts(self, f, lo, hi, exact):
        errs = [abs(numerics.integrate(f, lo, hi, QuadSpec(rt)) - exact) for rt in (1e-6, 5e-7, 1e-10, 5e-11)]
        floor = 4 * np.finfo(float).eps * max(1.0, abs(exact))
        for a, b in zip(errs, errs[1:]):
            assert b <= max(a, floor)

    def test_quadspec_validation(self):
        with pytest.raises(ValueError):
            QuadSpec(rel_tol=0)
        with pytest.raises(ValueError):
            QuadSpec(abs_tol=-1)
        with pytest.raises(ValueError):
            QuadSpec(max_depth=0)


class TestRoot:
    def test_linear(self):
        assert numerics.find_root_monotone(lambda x: x - 1, 0, 2, 1e-14) == pytest.approx(1.0, abs=1e-13)

    def test_cubic(self):
        assert numerics.find_root_monotone(lambda x: x ** 3 - 8, 0, 3, 1e-14) == pytest.approx(2.0, abs=1e-12)

    def test_newton_branch(self):
        x = numerics.find_root_monotone(lambda x: x ** 3 - 8, 0, 3, 0.0, dg=lambda x: 3 * x * x)
        assert x == pytest.approx(2.0, abs=1e-14)

    def test_no_bracket(self):
        with pytest.raises(NoBracket):
            numerics.find_root_monotone(lambda x: x + 1, 0, 2, 1e-12)

    def test_subnormal_endpoint_value(self):
        # g(lo) * g(hi) underflows to -0.0 here; the sign test must not
        x = numerics.find_root_monotone(lambda x: 5e-324 - x, 0.0, 1.0, 0.0)
        assert 0.0 <= x <= 1e-300

    def test_endpoint_root(self):
        assert numerics.find_root_monotone(lambda x: x, 0.0, 1.0, 1e-12) == 0.0

    def test_u_inversion(self):
        from torcalc import coords

        # 0.34935 = int_0^1 dt/sqrt(t**4 + 8), i.e. 4 k**4 = 8
        k = 2 ** 0.25
        z = numerics.find_root_monotone(lambda z: coords.f_u(z, k) + 0.34935, 0, 4, 1e-14)
        assert z == pytest.approx(1.0000035255497424, abs=1e-9)
        # with k = 1 the same target sits at z = 0.70288...
        z1 = numerics.find_root_monotone(lambda z: coords.f_u(z, 1.0) + 0.34935, 0, 4, 1e-14)
        assert z1 == pytest.approx(0.70288365193608226, abs=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(a=st.floats(0.1, 5), b=st.floats(-3, 3), c=st.floats(0.01, 5), r=st.floats(-2, 2),
           newton=st.booleans())
    def test_random_monotone_cubics(self, a, b, c, r, newton):
        # strictly increasing cubic with root r; b skews the bracket
        g = lambda x: a * (x - r) ** 3 + c * (x - r)  # noqa: E731
        dg = (lambda x: 3 * a * (x - r) ** 2 + c) if newton else None
        lo, hi = r - 2 - abs(b), r + 1 + abs(b) / 2
        tol = 1e-10
        x = numerics.find_root_monotone(g, lo, hi, tol, dg=dg)
        assert lo <= x <= hi
        assert abs(g(x)) <= tol or abs(x - r) <= tol


class TestFD:
    def test_square(self):
        d = numerics.fd_derivative(lambda x: x * x, (3.0,), 0, FDSpec(1e-2, "central4"))
        assert d == pytest.approx(6.0, abs=1e-8)

    def test_sin(self):
        assert numerics.fd_derivative(math.sin, (0.0,), 0) == pytest.approx(1.0, abs=1e-12)

    def test_exp(self):
        assert numerics.fd_derivative(math.exp, (1.0,), 0) == pytest.approx(math.e, abs=1e-10)

    @pytest.mark.parametrize("scheme,deg", [("central2", 2), ("central4", 4)])
    def test_exact_on_polynomials(self, scheme, deg):
        rng = np.random.default_rng(3)
        for _ in range(20):
            c = rng.normal(size=deg + 1)
            f = np.polynomial.Polynomial(c)
            x0 = rng.uniform(-1, 1)
            d = numerics.fd_derivative(lambda x: f(x), (x0,), 0, FDSpec(0.1, scheme))
            assert d == pytest.approx(f.deriv()(x0), abs=1e-10)

    def test_orders(self):
        e2 = [abs(numerics.fd_derivative(math.exp, (0.5,), 0, FDSpec(h, "central2")) - math.exp(0.5))
              for h in (0.1, 0.05)]
        e4 = [abs(numerics.fd_derivative(math.exp, (0.5,), 0, FDSpec(h, "central4")) - math.exp(0.5))
              for h in (0.1, 0.05)]
        assert e2[0] / e2[1] == pytest.approx(4, rel=0.05)
        assert e4[0] / e4[1] == pytest.approx(16, rel=0.05)

    def test_partial_axis(self):
        g = numerics.fd_gradient(lambda x, y: x * y * y, (2.0, 3.0))
        assert g == pytest.approx([9.0, 12.0], abs=1e-9)

    def test_directional(self):
        d = numerics.directional_derivative(lambda p: p[0] ** 2 + 3 * p[1], (1.0, 0.0), (2.0, 1.0))
        assert d == pytest.approx(2 * 2 + 3, abs=1e-9)

    def test_fdspec_validation(self):
        with pytest.raises(ValueError):
            FDSpec(0.0)
        with pytest.raises(ValueError):
            FDSpec(1e-3, "forward")
        assert FDSpec(1e-2).halved().h == 5e-3


class TestInvert:
    def test_identity(self):
        assert np.array_equal(numerics.invert_small(np.eye(3)), np.eye(3))

    def test_diag(self):
        assert numerics.invert_small(np.diag([2.0, 4.0])) == pytest.approx(np.diag([0.5, 0.25]))

    def test_singular(self):
        with pytest.raises(Singular):
            numerics.invert_small([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(Singular):
            numerics.invert_small(np.zeros((3, 3)))

    def test_bad_shape(self):
        with pytest.raises(DomainError):
            numerics.invert_small(np.eye(4))

    def test_random_sweep(self):
        rng = np.random.default_rng(11)
        done = 0
        while done < 1000:
            dim = 2 + done % 2
            m = rng.uniform(-1, 1, (dim, dim))
            if abs(np.linalg.det(m)) <= 0.1:
                continue
            inv = numerics.invert_small(m)
            assert np.max(np.abs(m @ inv - np.eye(dim))) < 1e-12
            assert inv == pytest.approx(np.linalg.inv(m), abs=1e-9)
            done += 1

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
    def test_property(self, entries):
        m = np.array(entries).reshape(3, 3)
        if abs(np.linalg.det(m)) < 1e-3 * max(1.0, np.max(np.abs(m))) ** 3:
            return
        inv = numerics.invert_small(m)
        assert np.max(np.abs(m @ inv - np.eye(3))) < 1e-9


class TestStreamline:
    def test_constant_field(self):
        pts = numerics.integrate_streamline(lambda p: (0.0, 1.0), (1.0, 0.0), 0.1, 10)
        assert pts.shape == (11, 2)
        assert pts[-1] == pytest.approx([1.0, 1.0], abs=1e-14)

    def test_unit_normalised(self):
        pts = numerics.integrate_streamline(lambda p: (0.0, 50.0), (0.0, 0.0), 0.1, 10)
        assert pts[-1] == pytest.approx([0.0, 1.0], abs=1e-14)

    def test_circle(self):
        pts = numerics.integrate_streamline(lambda p: (-p[1], p[0]), (1.0, 0.0), 0.01, 100)
        assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1)) < 1e-9
        assert pts[-1] == pytest.approx([math.cos(1.0), math.sin(1.0)], abs=1e-9)

    def test_vanishing_field(self):
        with pytest.raises(FieldVanishes):
            numerics.integrate_streamline(lambda p: (p[0], p[1]), (0.0, 0.0), 0.1, 3)


class TestGamma:
    @pytest.mark.parametrize("x,val", [(1.0, 1.0), (0.5, math.sqrt(math.pi)), (5.0, 24.0)])
    def test_values(self, x, val):
        assert numerics.lanczos_gamma(x) == pytest.approx(val, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 20))
    def test_matches_stdlib(self, x):
        assert numerics.lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)
