"""Self-adjoint-extension spectra of T3 on u-fibres and the thin-torus regime.

On a fibre of fixed k the operator T3 = -i hbar d/du acts on
``u in (-a(k), a(k))``; the boundary condition
``f(-a) = f(a) exp(i theta)`` selects one self-adjoint extension and the
plane waves ``exp(i t u / hbar)`` with

    t_n = (2 pi n - theta) hbar / (2 a(k))

as eigenfunctions.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Union

import numpy as np

from . import coords, fields, numerics
from .coords import CartPoint, CylPoint, NatKU, ScaleConfig, DEFAULT_CFG
from .errors import DomainError, OutOfRange, OutsideTorus

__all__ = [
    "ExtensionBC",
    "FiberState",
    "ThinTorusGeom",
    "extension_spectrum",
    "bc_phase_residual",
    "eigenfiber_value",
    "normalization_factor",
    "fiber_overlap",
    "thin_torus_nat",
    "h0_apply",
    "h0_cartesian",
    "ThinTorusResiduals",
    "thin_torus_operator_check",
    "u_thin_error",
    "halving_ratios",
    "torus_bump",
]

Theta = Union[float, Callable[[float, float], float]]


@dataclass(frozen=True)
class ExtensionBC:
    """Boundary phase ``theta(k, phi)``: a constant or a callable."""

    theta: Theta = 0.0

    def at(self, k: float, phi: float = 0.0) -> float:
        th = self.theta(k, phi) if callable(self.theta) else self.theta
        return float(th)


class FiberState(NamedTuple):
    k0: float
    n: int
    m: int
    t: float


@dataclass(frozen=True)
class ThinTorusGeom:
    R_T: float
    r_T: float

    def __post_init__(self):
        if not (self.R_T > 0 and self.r_T > 0):
            raise DomainError("torus radii must be positive")
        if not self.r_T < self.R_T:
            raise DomainError("minor radius must be smaller than the major radius")

    @property
    def valid(self) -> bool:
        """The lowest-order expansion is only trusted for ``r_T < R_T / 10``."""
        return self.r_T < self.R_T / 10.0

    def warn_if_invalid(self) -> None:
        if not self.valid:
            warnings.warn(f"thin-torus approximation used with r_T/R_T = {self.r_T / self.R_T:.3g} "
                          f">= 0.1", RuntimeWarning, stacklevel=3)

    def contains(self, rho: float, z: float) -> bool:
        return abs(rho - self.R_T) <= self.r_T and abs(z) <= self.r_T


# -- extension spectra -----------------------------------------------------------


def extension_spectrum(k0: float, bc: ExtensionBC, n_range: Iterable[int],
                       cfg: ScaleConfig = DEFAULT_CFG, phi: float = 0.0) -> list[tuple[int, float]]:
    """Eigenvalues ``(n, t_n)`` of the extension selected by ``bc`` on the k0 fibre.

    Ordered by ``|t|``; equal magnitudes list the positive value first.
    """
    if not k0 > 0:
        raise DomainError(f"k0 must be > 0, got {k0}")
    a = coords.a_of_k(k0, cfg)
    theta = bc.at(k0, phi)
    out = [(n, (2 * math.pi * n - theta) * cfg.hbar / (2 * a)) for n in n_range]
    out.sort(key=lambda nt: (abs(nt[1]), nt[1] < 0, nt[0]))
    return out


def bc_phase_residual(t: float, k0: float, bc: ExtensionBC,
                      cfg: ScaleConfig = DEFAULT_CFG, phi: float = 0.0) -> float:
    """``|f(-a) - f(a) exp(i theta)|`` for ``f = exp(i t u / hbar)``."""
    a = coords.a_of_k(k0, cfg)
    lhs = cmath.exp(-1j * t * a / cfg.hbar)
    rhs = cmath.exp(1j * t * a / cfg.hbar) * cmath.exp(1j * bc.at(k0, phi))
    return abs(lhs - rhs)


def eigenfiber_value(state: FiberState, u: float, phi: float,
                     cfg: ScaleConfig = DEFAULT_CFG) -> complex:
    """Regular factor ``exp(i t u/hbar) exp(i m phi) / (2 k0 sqrt(2 pi C_a))``.

    The ``delta(k - k0)`` factor of the full eigenfunction is not evaluated.
    """
    a = coords.a_of_k(state.k0, cfg)
    if not abs(u) <= a:
        raise OutOfRange(f"|u|={abs(u)!r} > a(k0)={a!r}")
    pref = 1.0 / (2.0 * state.k0 * math.sqrt(2.0 * math.pi * coords.c_a()))
    return pref * cmath.exp(1j * state.t * u / cfg.hbar) * cmath.exp(1j * state.m * phi)


def normalization_factor(k0: float, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    """``I1(k0) |prefactor|**2 * 2 pi * 2 a(k0)``; identically 1."""
    if not k0 > 0:
        raise DomainError(f"k0 must be > 0, got {k0}")
    pref2 = 1.0 / (4.0 * k0 * k0 * 2.0 * math.pi * coords.c_a())
    return coords.jacobian_nat(k0, cfg) * pref2 * 2.0 * math.pi * 2.0 * coords.a_of_k(k0, cfg)


def fiber_overlap(t1: float, t2: float, k0: float, cfg: ScaleConfig = DEFAULT_CFG,
                  spec: numerics.QuadSpec = numerics.QuadSpec(rel_tol=1e-12, abs_tol=1e-13)) -> complex:
    """``int_{-a}^{a} exp(i (t2 - t1) u / hbar) du`` by quadrature."""
    a = coords.a_of_k(k0, cfg)
    w = (t2 - t1) / cfg.hbar
    re = numerics.integrate(lambda u: math.cos(w * u), -a, a, spec)
    im = numerics.integrate(lambda u: math.sin(w * u), -a, a, spec)
    return complex(re, im)


# -- thin torus ------------------------------------------------------------------


def _require_inside(p: CylPoint, geom: ThinTorusGeom) -> None:
    if not geom.contains(p.rho, p.z):
        raise OutsideTorus(f"(rho={p.rho!r}, z={p.z!r}) outside torus R_T={geom.R_T}, r_T={geom.r_T}")


def thin_torus_nat(p: CylPoint, geom: ThinTorusGeom, cfg: ScaleConfig = DEFAULT_CFG) -> NatKU:
    """Lowest-order natural coordinates: ``k = rho``, ``u = -(s/2) z / R_T**2``."""
    _require_inside(p, geom)
    geom.warn_if_invalid()
    return NatKU(p.rho, -0.5 * cfg.s * p.z / geom.R_T ** 2, p.phi)


NatFunction = Callable[[float, float, float], complex]


def h0_apply(f: NatFunction, p: CylPoint, geom: ThinTorusGeom, cfg: ScaleConfig = DEFAULT_CFG,
             fd: numerics.FDSpec | None = None) -> complex:
    """Thin-torus free Hamiltonian applied to ``f(k, u, phi)`` at the natural image of ``p``.

    ``-(hbar**2/2m) [k**-1 d_k(k d_k) + k**-2 d_phi**2 + (s/(2 R_T**2))**2 d_u**2] f``
    with every derivative by central differences. ``fd.h`` is a length; the
    u and phi steps are scaled to the same physical displacement.
    """
    _require_inside(p, geom)
    geom.warn_if_invalid()
    nat = coords.cyl_to_nat(p, cfg)
    k, u, phi = nat
    spec = fd or numerics.FDSpec(1e-2 * geom.r_T)
    alpha = 0.5 * cfg.s / geom.R_T ** 2
    hk = spec.h
    hu = alpha * spec.h
    hphi = spec.h / k

    d2 = _second_derivative
    fk = numerics.fd_derivative(f, (k, u, phi), 0, numerics.FDSpec(hk, spec.scheme))
    fkk = d2(lambda t: f(t, u, phi), k, hk, spec.scheme)
    fuu = d2(lambda t: f(k, t, phi), u, hu, spec.scheme)
    fpp = d2(lambda t: f(k, u, t), phi, hphi, spec.scheme)
    lap = fkk + fk / k + fpp / (k * k) + alpha * alpha * fuu
    return -cfg.hbar ** 2 / (2.0 * cfg.mass) * lap


def _second_derivative(g, x, h, scheme):
    if scheme == "central2":
        return (g(x + h) - 2 * g(x) + g(x - h)) / (h * h)
    return (-g(x + 2 * h) + 16 * g(x + h) - 30 * g(x) + 16 * g(x - h) - g(x - 2 * h)) / (12 * h * h)


def h0_cartesian(f: NatFunction, p: CylPoint, cfg: ScaleConfig = DEFAULT_CFG,
                 h: float = 1e-3) -> complex:
    """``-(hbar**2/2m) Laplacian`` of ``F(x) = f(k(x), u(x), phi(x))`` with the exact charts.

    Independent oracle for :func:`h0_apply`: Cartesian second differences of
    the composed function.
    """
    c = coords.cyl_to_cart(p)

    def F(x, y, z):
        n = coords.cart_to_nat(CartPoint(x, y, z), cfg)
        phi = n.phi if n.phi <= math.pi else n.phi - 2 * math.pi
        return f(n.k, n.u, phi)

    lap = 0.0
    pt = list(c)
    for i in range(3):
        def line(t, i=i):
            q = list(pt)
            q[i] = t
            return F(*q)
        lap += _second_derivative(line, pt[i], h, "central4")
    return -cfg.hbar ** 2 / (2.0 * cfg.mass) * lap


class ThinTorusResiduals(NamedTuple):
    """Componentwise ``|W_Pk1 - x|``, ``|W_Pk2 - y|``, ``|W_T3 + (2 R_T**2/s) z|``."""

    pk1: tuple[float, float, float]
    pk2: tuple[float, float, float]
    t3: tuple[float, float, float]

    @property
    def norms(self) -> tuple[float, float, float]:
        return tuple(float(np.linalg.norm(v)) for v in (self.pk1, self.pk2, self.t3))

    @property
    def max(self) -> float:
        return max(max(v) for v in (self.pk1, self.pk2, self.t3))


def thin_torus_operator_check(p: Union[CartPoint, CylPoint], geom: ThinTorusGeom,
                              cfg: ScaleConfig = DEFAULT_CFG) -> ThinTorusResiduals:
    """Distance of the exact fields from their thin-torus limits at ``p``.

    In the limit ``p(k1) = p_x``, ``p(k2) = p_y`` and
    ``T3 = -(2 R_T**2 / s) p_z``.
    """
    cp = coords.cyl_to_cart(p) if isinstance(p, CylPoint) else CartPoint(*p)
    cyl = coords.cart_to_cyl(cp)
    _require_inside(cyl, geom)
    geom.warn_if_invalid()
    w1 = np.asarray(fields.w_pk1_cart(cp, cfg))
    w2 = np.asarray(fields.w_pk2_cart(cp, cfg))
    w3 = np.asarray(fields.w_t3_cart(cp, cfg))
    r1 = np.abs(w1 - (1.0, 0.0, 0.0))
    r2 = np.abs(w2 - (0.0, 1.0, 0.0))
    r3 = np.abs(w3 + (0.0, 0.0, 2.0 * geom.R_T ** 2 / cfg.s))
    return ThinTorusResiduals(tuple(map(float, r1)), tuple(map(float, r2)), tuple(map(float, r3)))


def u_thin_error(p: CylPoint, geom: ThinTorusGeom, cfg: ScaleConfig = DEFAULT_CFG) -> float:
    """``|u_exact - u_thin| / |u_exact|`` at ``p`` (needs ``z != 0``)."""
    u_thin = thin_torus_nat(p, geom, cfg).u
    u_exact = coords.cyl_to_nat(p, cfg).u
    if u_exact == 0.0:
        raise DomainError("relative u error undefined at z = 0")
    return abs(u_exact - u_thin) / abs(u_exact)


def halving_ratios(err: Callable[[float], float], z0: float, levels: int = 4) -> list[tuple[float, float, float]]:
    """``(z, err(z), err(2z)/err(z))`` for ``z = z0, z0/2, ...``; the first ratio is ``nan``."""
    rows = []
    prev = None
    z = z0
    for _ in range(levels):
        e = err(z)
        rows.append((z, e, prev / e if prev is not None and e != 0 else math.nan))
        prev = e
        z *= 0.5
    return rows


def torus_bump(geom: ThinTorusGeom, cfg: ScaleConfig = DEFAULT_CFG, m: int = 1,
               width: float = 1.0 / 3.0) -> NatFunction:
    """Smooth test function concentrated in the tube, written in natural coordinates.

    ``exp(-((k - R_T)**2 + (u / alpha)**2) / (2 sigma**2)) exp(i m phi)`` with
    ``alpha = s / (2 R_T**2)`` and ``sigma = width * r_T``.
    """
    alpha = 0.5 * cfg.s / geom.R_T ** 2
    sig2 = (width * geom.r_T) ** 2

    def f(k, u, phi):
        return math.exp(-((k - geom.R_T) ** 2 + (u / alpha) ** 2) / (2.0 * sig2)) * cmath.exp(1j * m * phi)

    return f
