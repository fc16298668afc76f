"""Coordinate charts for the toroidal-moment operator T3 and the maps among them.

Charts
------
* Cartesian ``(x, y, z)`` and cylindrical ``(rho, z, phi)``.
* Natural ``(k, u, phi)`` with ``k = sqrt(rho * r)`` and
  ``u = -s * int_0^z dt / sqrt(t**4 + 4 k**4)``; here ``s = 10 m c``.
* Natural ``(k1, k2, u)`` with ``(k1, k2) = k (cos phi, sin phi)``.

``u`` ranges over ``(-a(k), a(k))`` with ``a(k) = s * C_a / k``; the end
points correspond to the two halves of the z axis (``u -> -a`` as
``z -> +inf``). The z axis itself is excluded from both natural charts.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numerics
from .errors import DomainError, OnAxis, OutOfRange

__all__ = [
    "ScaleConfig",
    "CartPoint",
    "CylPoint",
    "NatKU",
    "NatK12",
    "c_a",
    "a_of_k",
    "f_u",
    "dfu_dz",
    "dfu_dk",
    "z_of_ku",
    "cart_to_cyl",
    "cyl_to_cart",
    "cyl_to_nat",
    "nat_to_cyl",
    "cart_to_k12",
    "k12_to_cart",
    "cart_to_nat",
    "nat_to_cart",
    "rho_of_kz",
    "rho_of_kz_literal",
    "fxy_of_k12z",
    "fxy_of_k12z_literal",
    "jacobian_nat",
    "jacobian_k12",
    "in_m",
    "in_m1",
    "unit_fiber",
]


@dataclass(frozen=True)
class ScaleConfig:
    """Physical scales. ``s`` is the action scale ``10 m c``.

    The mass only enters the free-particle Hamiltonian; ``c`` is derived as
    ``s / (10 m)`` so every coordinate formula depends on ``s`` alone.
    """

    s: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("s", "hbar", "mass"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def c(self) -> float:
        return self.s / (10.0 * self.mass)


DEFAULT_CFG = ScaleConfig()


class CartPoint(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def rho(self):
        return np.hypot(self.x, self.y)

    @property
    def r(self):
        return np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


class CylPoint(NamedTuple):
    rho: float
    z: float
    phi: float = 0.0


class NatKU(NamedTuple):
    k: float
    u: float
    phi: float = 0.0


class NatK12(NamedTuple):
    k1: float
    k2: float
    u: float


# -- the constant C_a ---------------------------------------------------------

_CA_LOCK = threading.Lock()
_CA_VALUE: float | None = None
CA_CROSSCHECK_TOL = 1e-8


def c_a_closed_form() -> float:
    """``(sqrt(2)/2) * Gamma(1/4)**2 / (4 sqrt(pi))`` via the Lanczos gamma."""
    g = numerics.lanczos_gamma
    return 0.5 * math.sqrt(2.0) * g(0.25) ** 2 / (4.0 * math.sqrt(math.pi))


def c_a_quadrature(spec: numerics.QuadSpec = numerics.DEFAULT_QUAD) -> float:
    return numerics.integrate(lambda t: 1.0 / math.sqrt(t ** 4 + 4.0), 0.0, math.inf, spec)


def c_a() -> float:
    """``C_a = int_0^inf dt / sqrt(t**4 + 4)``, computed once and cached.

    Raises ``RuntimeError`` if quadrature and the gamma closed form disagree by
    more than ``CA_CROSSCHECK_TOL``.
    """
    global _CA_VALUE
    if _CA_VALUE is not None:
        return _CA_VALUE
    with _CA_LOCK:
        if _CA_VALUE is None:
            quad = c_a_quadrature()
            closed = c_a_closed_form()
            if abs(quad - closed) > CA_CROSSCHECK_TOL:
                raise RuntimeError(f"C_a cross-check failed: quadrature {quad!r} vs gamma {closed!r}")
            _CA_VALUE = quad
    return _CA_VALUE


def a_of_k(k: float, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    """Half-width of the u interval at fixed k."""
    if not k > 0:
        raise DomainError(f"a(k) needs k > 0, got {k}")
    return cfg.s * c_a() / k


# -- the u integral and its partials --------------------------------------------


def _inv_sqrt_quartic(k4: float):
    four_k4 = 4.0 * k4
    return lambda t: 1.0 / math.sqrt(t ** 4 + four_k4)


def f_u(z: float, k: float, cfg: ScaleConfig = DEFAULT_CFG,
        spec: numerics.QuadSpec = numerics.DEFAULT_QUAD) -> float:
    """``-s * int_0^z dt / sqrt(t**4 + 4 k**4)`` at fixed k.

    Beyond ``|z| = sqrt(2) k`` the integral is taken as the full half-line
    value minus the tail, which keeps full relative accuracy near ``+-a(k)``.
    """
    if not k > 0:
        raise DomainError(f"f_u needs k > 0, got {k}")
    if z == 0.0:
        return 0.0
    az = abs(z)
    g = _inv_sqrt_quartic(k ** 4)
    if az <= math.sqrt(2.0) * k:
        val = numerics.integrate(g, 0.0, az, spec)
    else:
        # tail int_z^inf with t = z / v: int_0^1 z dv / sqrt(z**4 + 4 k**4 v**4)
        z4, four_k4 = az ** 4, 4.0 * k ** 4
        tail = numerics.integrate(lambda v: az / math.sqrt(z4 + four_k4 * v ** 4), 0.0, 1.0, spec)
        val = c_a() / k - tail
    return -math.copysign(cfg.s * val, z)


def dfu_dz(z: float, k: float, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    return -cfg.s / math.sqrt(z ** 4 + 4.0 * k ** 4)


def _j32(z: float, k: float, spec: numerics.QuadSpec) -> float:
    """``int_0^z dt / (t**4 + 4 k**4)**(3/2)`` (odd in z)."""
    if z == 0.0:
        return 0.0
    four_k4 = 4.0 * k ** 4

    def g(t):
        q = t ** 4 + four_k4
        return 1.0 / (q * math.sqrt(q))

    az = abs(z)
    if az <= math.sqrt(2.0) * k:
        val = numerics.integrate(g, 0.0, az, spec)
    else:
        # int_0^inf = C_a / (8 k**5), from d a(k)/dk = -s C_a / k**2.
        z4 = az ** 4

        def tail(v):
            q = z4 + four_k4 * v ** 4
            return az * v ** 4 / (q * math.sqrt(q))

        val = c_a() / (8.0 * k ** 5) - numerics.integrate(tail, 0.0, 1.0, spec)
    return math.copysign(val, z)


def dfu_dk(z: float, k: float, cfg: ScaleConfig = DEFAULT_CFG,
           spec: numerics.QuadSpec = numerics.DEFAULT_QUAD) -> float:
    """Partial of ``f_u(z, k)`` with respect to k at fixed z."""
    return 8.0 * cfg.s * k ** 3 * _j32(z, k, spec)


def z_of_ku(k: float, u: float, cfg: ScaleConfig = DEFAULT_CFG,
            cap_factor: float = 2.0 ** 10) -> float:
    """Solve ``f_u(z, k) = u`` for z.

    The bracket starts at ``[0, z_hi]`` with ``z_hi`` doubled until a sign
    change, up to ``cap_factor * k``.
    """
    a = a_of_k(k, cfg)
    if not abs(u) < a:
        raise OutOfRange(f"|u|={abs(u)!r} >= a(k)={a!r}")
    if u == 0.0:
        return 0.0
    # f_u = -s z / (2 k**2) (1 + O(z**4/k**4)): below 1e-4 k the linear inverse is exact
    z_lin = 2.0 * k * k * abs(u) / cfg.s
    if z_lin < 1e-4 * k:
        return math.copysign(z_lin, -u)
    target = -abs(u)  # solve on z > 0, then use oddness

    def g(z):
        return f_u(z, k, cfg) - target

    def dg(z):
        return dfu_dz(z, k, cfg)

    z_hi = k
    while g(z_hi) > 0.0:
        if z_hi >= cap_factor * k:
            raise OutOfRange(f"u={u!r} maps beyond z={cap_factor * k!r}; too close to a(k)")
        z_hi *= 2.0
    # thin-torus guess z ~ 2 k**2 |u| / s is exact to first order
    guess = min(2.0 * k * k * abs(u) / cfg.s, 0.5 * z_hi)
    z = numerics.find_root_monotone(g, 0.0, z_hi, 0.0, dg=dg, x0=guess)
    return math.copysign(z, -u)


# -- elementary charts -------------------------------------------------------


def cart_to_cyl(p: CartPoint) -> CylPoint:
    phi = math.atan2(p.y, p.x) % (2 * math.pi)
    return CylPoint(math.hypot(p.x, p.y), p.z, phi)


def cyl_to_cart(p: CylPoint) -> CartPoint:
    return CartPoint(p.rho * math.cos(p.phi), p.rho * math.sin(p.phi), p.z)


def _check_off_axis(rho: float) -> None:
    if not rho > 0:
        raise OnAxis(f"rho={rho!r}: point is on the z axis")


def rho_of_kz(k, z):
    """Cancellation-safe ``rho(k, z) = sqrt(2) k**2 / sqrt(z**2 + sqrt(z**4 + 4 k**4))``."""
    return math.sqrt(2.0) * k * k / np.sqrt(z * z + np.sqrt(z ** 4 + 4.0 * k ** 4))


def rho_of_kz_literal(k, z):
    """The textbook form ``(|z|/sqrt 2) sqrt(sqrt(1 + 4 k**4/z**4) - 1)``; loses digits for |z| >> k."""
    az = np.abs(z)
    return az / math.sqrt(2.0) * np.sqrt(np.sqrt(1.0 + 4.0 * k ** 4 / z ** 4) - 1.0)


def fxy_of_k12z(k1, k2, z):
    k = np.hypot(k1, k2)
    h = rho_of_kz(k, z) / k
    return k1 * h, k2 * h


def fxy_of_k12z_literal(k1, k2, z):
    """Closed-root form of ``(x, y)``, the analogue of :func:`rho_of_kz_literal`.

    Written as ``k_i |z| / (sqrt 2 k) sqrt(sqrt(1 + 4 k**4/z**4) - 1)``; both
    the ``1/sqrt 2`` and the absolute value are needed for consistency with
    ``rho = sqrt(x**2 + y**2)``.
    """
    k = np.hypot(k1, k2)
    root = np.sqrt(np.sqrt(1.0 + 4.0 * k ** 4 / z ** 4) - 1.0)
    az = np.abs(z) / math.sqrt(2.0)
    return k1 * az / k * root, k2 * az / k * root


# -- natural charts ----------------------------------------------------------


def cyl_to_nat(p: CylPoint, cfg: ScaleConfig = DEFAULT_CFG) -> NatKU:
    _check_off_axis(p.rho)
    rho, z = p.rho, p.z
    k = math.sqrt(rho * math.sqrt(rho * rho + z * z))
    return NatKU(k, f_u(z, k, cfg), p.phi)


def nat_to_cyl(p: NatKU, cfg: ScaleConfig = DEFAULT_CFG) -> CylPoint:
    z = z_of_ku(p.k, p.u, cfg)
    return CylPoint(float(rho_of_kz(p.k, z)), z, p.phi)


def cart_to_nat(p: CartPoint, cfg: ScaleConfig = DEFAULT_CFG) -> NatKU:
    return cyl_to_nat(cart_to_cyl(p), cfg)


def nat_to_cart(p: NatKU, cfg: ScaleConfig = DEFAULT_CFG) -> CartPoint:
    return cyl_to_cart(nat_to_cyl(p, cfg))


def cart_to_k12(p: CartPoint, cfg: ScaleConfig = DEFAULT_CFG) -> NatK12:
    rho = math.hypot(p.x, p.y)
    _check_off_axis(rho)
    r = math.sqrt(rho * rho + p.z * p.z)
    scale = math.sqrt(r / rho)
    k = math.sqrt(rho * r)
    return NatK12(p.x * scale, p.y * scale, f_u(p.z, k, cfg))


def k12_to_cart(p: NatK12, cfg: ScaleConfig = DEFAULT_CFG) -> CartPoint:
    k = math.hypot(p.k1, p.k2)
    if not k > 0:
        raise DomainError("k1 = k2 = 0 is not in the chart")
    z = z_of_ku(k, p.u, cfg)
    x, y = fxy_of_k12z(p.k1, p.k2, z)
    return CartPoint(float(x), float(y), z)


def in_m(p: NatKU, cfg: ScaleConfig = DEFAULT_CFG) -> bool:
    return p.k > 0 and abs(p.u) < a_of_k(p.k, cfg)


def in_m1(p: NatK12, cfg: ScaleConfig = DEFAULT_CFG) -> bool:
    k = math.hypot(p.k1, p.k2)
    return k > 0 and abs(p.u) < a_of_k(k, cfg)


def unit_fiber(xi: float, cfg: ScaleConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``(rho, z)`` of the point ``(k=1, u=xi*a(1))``.

    The charts are self-similar: at fixed ``xi = u / a(k)`` both rho and z
    scale linearly with k, so one inversion per xi serves every k.
    """
    p = nat_to_cyl(NatKU(1.0, xi * a_of_k(1.0, cfg)), cfg)
    return p.rho, p.z


# -- volume elements ---------------------------------------------------------


def jacobian_nat(k: float, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    """``dx dy dz = (2 k**3 / s) dk du dphi``."""
    if not k > 0:
        raise DomainError(f"jacobian_nat needs k > 0, got {k}")
    return 2.0 * k ** 3 / cfg.s


def jacobian_k12(k1: float, k2: float, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    """``dx dy dz = (2 (k1**2 + k2**2) / s) dk1 dk2 du``."""
    k2sum = k1 * k1 + k2 * k2
    if not k2sum > 0:
        raise OnAxis("jacobian_k12 undefined at k1 = k2 = 0")
    return 2.0 * k2sum / cfg.s
