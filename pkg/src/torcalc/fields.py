"""Real vector fields W with operator = (-i hbar) W . grad.

Fields are stored without the ``-i hbar`` factor so that they can be
plotted and all identities stay real-valued. Cylindrical fields are given in
the (rho-hat, z-hat) basis of the meridian plane; Cartesian fields in the
(x, y, z) basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Union

import numpy as np

from . import coords, numerics
from .coords import CartPoint, CylPoint, ScaleConfig, DEFAULT_CFG
from .errors import OnAxis, Singular

__all__ = [
    "VecField2",
    "VecField3",
    "NatPartials",
    "XformMatrix",
    "w_ti_cart",
    "w_li_cart",
    "w_t3_cyl",
    "w_t3_cart",
    "nat_partials",
    "w_pk_cyl",
    "w_pk_cart",
    "w_pk_cyl_literal",
    "w_pk1_cart",
    "w_pk2_cart",
    "matrix_cyl",
    "matrix_cart",
]


class VecField2(NamedTuple):
    rho: float
    z: float


class VecField3(NamedTuple):
    x: float
    y: float
    z: float


class NatPartials(NamedTuple):
    # (k, u, phi) chart
    dfu_dz: float
    dfu_dk: float
    dk_drho: float
    dk_dz: float
    # (k1, k2, u) chart
    dfu2_dz: float
    dfu2_dk1: float
    dfu2_dk2: float
    dk1_dx: float
    dk1_dy: float
    dk1_dz: float
    dk2_dx: float
    dk2_dy: float
    dk2_dz: float


@dataclass(frozen=True)
class XformMatrix:
    """Operator-transformation matrix.

    ``cyl-2x2``: rows ``(d rho/dk, dz/dk)|_u`` and the T3 field, mapping
    ``(d/drho, d/dz)`` to ``(d/dk, d/du)``.
    ``cart-3x3``: rows ``P(k1), P(k2), T3``, mapping the Cartesian gradient to
    ``(d/dk1, d/dk2, d/du)``.
    """

    matrix: np.ndarray
    chart: Literal["cyl-2x2", "cart-3x3"]

    def inverse(self, deg_tol: float = 1e-12) -> np.ndarray:
        return numerics.invert_small(self.matrix, deg_tol)


Point = Union[CartPoint, CylPoint]


def _as_cart(p: Point) -> CartPoint:
    if isinstance(p, CylPoint):
        return coords.cyl_to_cart(p)
    return CartPoint(*p)


def _as_cyl(p: Point) -> CylPoint:
    if isinstance(p, CylPoint):
        return p
    return coords.cart_to_cyl(CartPoint(*p))


# -- polynomial fields -------------------------------------------------------


def w_ti_cart(i: int, p: CartPoint, cfg: ScaleConfig = DEFAULT_CFG) -> VecField3:
    """Field of the toroidal operator T_i: ``(x_i x_j - 2 r**2 delta_ij) / s``."""
    if i not in (1, 2, 3):
        raise ValueError(f"axis index must be 1, 2 or 3, got {i}")
    xs = (p[0], p[1], p[2])
    r2 = xs[0] ** 2 + xs[1] ** 2 + xs[2] ** 2
    xi = xs[i - 1]
    comps = [xi * xj for xj in xs]
    comps[i - 1] -= 2.0 * r2
    return VecField3(*(c / cfg.s for c in comps))


def w_li_cart(j: int, p: CartPoint) -> VecField3:
    """Field of L_j = -i hbar (r x grad)_j."""
    x, y, z = p[0], p[1], p[2]
    zero = 0.0 * x
    if j == 1:
        return VecField3(zero, -z, y)
    if j == 2:
        return VecField3(z, zero, -x)
    if j == 3:
        return VecField3(-y, x, zero)
    raise ValueError(f"axis index must be 1, 2 or 3, got {j}")


def w_t3_cyl(p: CylPoint, cfg: ScaleConfig = DEFAULT_CFG) -> VecField2:
    rho, z = p.rho, p.z
    return VecField2(z * rho / cfg.s, -(2.0 * rho * rho + z * z) / cfg.s)


def w_t3_cart(p: CartPoint, cfg: ScaleConfig = DEFAULT_CFG) -> VecField3:
    return w_ti_cart(3, p, cfg)


# -- partial derivatives of the natural coordinates --------------------------


def nat_partials(p: Point, cfg: ScaleConfig = DEFAULT_CFG,
                 spec: numerics.QuadSpec = numerics.DEFAULT_QUAD) -> NatPartials:
    """All first partials used to build P(k), P(k1), P(k2) at a point.

    The two integral partials share one quadrature: ``d f_u2/d k_i`` equals
    ``(k_i / k) d f_u/dk``.
    """
    cp = _as_cart(p)
    x, y, z = cp
    rho2 = x * x + y * y
    if not rho2 > 0:
        raise OnAxis(f"nat_partials at rho=0: {tuple(cp)}")
    rho = math.sqrt(rho2)
    r2 = rho2 + z * z
    r = math.sqrt(r2)
    k = math.sqrt(rho * r)

    fz = coords.dfu_dz(z, k, cfg)
    fk = coords.dfu_dk(z, k, cfg, spec)
    r32 = r2 ** 0.75
    dk_drho = (2.0 * rho2 + z * z) / (2.0 * math.sqrt(rho) * r32)
    dk_dz = math.sqrt(rho) * z / (2.0 * r32)

    den = 2.0 * rho2 ** 1.25 * r32
    dk1_dx = (4 * x * x * y * y + x * x * z * z + 2 * y * y * z * z + 2 * x ** 4 + 2 * y ** 4) / den
    dk1_dy = -x * y * z * z / den
    dk1_dz = x * z / (2.0 * rho2 ** 0.25 * r32)
    dk2_dx = -x * y * z * z / den
    dk2_dy = (4 * x * x * y * y + 2 * x * x * z * z + y * y * z * z + 2 * x ** 4 + 2 * y ** 4) / den
    dk2_dz = y * z / (2.0 * rho2 ** 0.25 * r32)

    # k1/k = x/rho
    return NatPartials(
        dfu_dz=fz, dfu_dk=fk, dk_drho=dk_drho, dk_dz=dk_dz,
        dfu2_dz=fz, dfu2_dk1=fk * x / rho, dfu2_dk2=fk * y / rho,
        dk1_dx=dk1_dx, dk1_dy=dk1_dy, dk1_dz=dk1_dz,
        dk2_dx=dk2_dx, dk2_dy=dk2_dy, dk2_dz=dk2_dz,
    )


# -- P(k): derivative along k at constant u ----------------------------------


def w_pk_cyl(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> VecField2:
    """``(d rho/dk, dz/dk)`` at constant u.

    ``dz/dk = -(df_u/dk)/(df_u/dz)``; ``d rho/dk`` follows from
    ``dk = k_rho d rho + k_z dz`` without dividing by ``df_u/dk``, so the
    formula stays regular on the z = 0 plane.
    """
    d = nat_partials(p, cfg)
    dz_dk = -d.dfu_dk / d.dfu_dz
    drho_dk = (1.0 - d.dk_dz * dz_dk) / d.dk_drho
    return VecField2(drho_dk, dz_dk)


def w_pk_cyl_literal(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> VecField2:
    """The same field via ``(d rho/dz)|_u (dz/dk)|_u``.

    Divides by ``df_u/dk`` and is therefore undefined on z = 0; kept as an
    independent cross-check of :func:`w_pk_cyl`.
    """
    d = nat_partials(p, cfg)
    if d.dfu_dk == 0.0:
        raise Singular("df_u/dk vanishes (z = 0); use w_pk_cyl")
    dz_dk = -d.dfu_dk / d.dfu_dz
    drho_dz = -(d.dfu_dz / d.dfu_dk + d.dk_dz) / d.dk_drho
    return VecField2(drho_dz * dz_dk, dz_dk)


def w_pk_cyl_inverse_form(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> VecField2:
    """``d rho(k,u)/dk`` written through ``rho(k, z)`` and ``dz/dk``.

    ``d rho/dk = (d rho/dz)|_k dz/dk + (d rho/dk)|_z`` with ``q = sqrt(1 + 4 k**4/z**4)``:
    ``(d rho/dz)|_k = -sgn(z) sqrt(q - 1) / (sqrt 2 q)`` and
    ``(d rho/dk)|_z = 2 sqrt 2 k**3 / (|z|**3 q sqrt(q - 1))``.
    """
    cp = _as_cyl(p)
    z = cp.z
    if z == 0.0:
        raise Singular("inverse form undefined at z = 0")
    d = nat_partials(p, cfg)
    k = math.sqrt(cp.rho * math.hypot(cp.rho, z))
    dz_dk = -d.dfu_dk / d.dfu_dz
    az = abs(z)
    q = math.sqrt(1.0 + 4.0 * k ** 4 / z ** 4)
    drho_dz = -math.copysign(1.0, z) * math.sqrt(q - 1.0) / (math.sqrt(2.0) * q)
    drho_dk_z = 2.0 * math.sqrt(2.0) * k ** 3 / (az ** 3 * q * math.sqrt(q - 1.0))
    return VecField2(drho_dz * dz_dk + drho_dk_z, dz_dk)


def w_pk_cart(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> VecField3:
    cp = _as_cart(p)
    rho = math.hypot(cp.x, cp.y)
    w = w_pk_cyl(cp, cfg)
    return VecField3(w.rho * cp.x / rho, w.rho * cp.y / rho, w.z)


# -- P(k1), P(k2) --------------------------------------------------------------


def _h_partials(k: float, z: float) -> tuple[float, float, float]:
    """``h = rho(k, z)/k`` and its partials ``h_k``, ``h_z``."""
    sq = math.sqrt(z ** 4 + 4.0 * k ** 4)
    dd = z * z + sq
    h = math.sqrt(2.0) * k / math.sqrt(dd)
    h_k = h * (1.0 / k - 4.0 * k ** 3 / (sq * dd))
    h_z = -h * z / sq
    return h, h_k, h_z


def _pk_i_fxfy(p: CartPoint, which: int, cfg: ScaleConfig) -> VecField3:
    """Derivative of ``(f_x, f_y, z)`` along k_i at constant ``(u, k_other)``.

    ``f_x = k1 h(k, z)``, ``f_y = k2 h(k, z)`` where ``h = rho/k``.
    """
    x, y, z = p
    rho = math.hypot(x, y)
    if not rho > 0:
        raise OnAxis(f"P(k{which}) at rho=0")
    d = nat_partials(p, cfg)
    r = math.sqrt(rho * rho + z * z)
    scale = math.sqrt(r / rho)
    k1, k2 = x * scale, y * scale
    k = math.hypot(k1, k2)
    h, h_k, h_z = _h_partials(k, z)
    ki = k1 if which == 1 else k2
    dz = -(d.dfu2_dk1 if which == 1 else d.dfu2_dk2) / d.dfu2_dz
    # d(k_j h)/dk_i = delta_ij h + k_j h_k k_i / k
    dfx = (h if which == 1 else 0.0) + k1 * h_k * ki / k
    dfy = (h if which == 2 else 0.0) + k2 * h_k * ki / k
    return VecField3(dfx + k1 * h_z * dz, dfy + k2 * h_z * dz, dz)


def _guard(v: float, what: str) -> float:
    if v == 0.0 or not math.isfinite(v):
        raise Singular(f"{what} vanishes; chain-rule branch undefined here")
    return v


def _pk1_chain(p: CartPoint, cfg: ScaleConfig) -> VecField3:
    """Eliminate dy, dx in favour of dz under ``du = dk2 = 0``."""
    d = nat_partials(p, cfg)
    f_k1 = _guard(d.dfu2_dk1, "df_u2/dk1")
    k2y = _guard(d.dk2_dy, "dk2/dy")
    dz_dk1 = -f_k1 / d.dfu2_dz
    num = d.dk1_dy * d.dk2_dz / k2y - d.dfu2_dz / f_k1 - d.dk1_dz
    den = _guard(d.dk1_dx - d.dk1_dy * d.dk2_dx / k2y, "x-denominator")
    dx_dz = num / den
    dy_dz = -(d.dk2_dx * dx_dz + d.dk2_dz) / k2y
    return VecField3(dz_dk1 * dx_dz, dz_dk1 * dy_dz, dz_dk1)


def _pk2_chain(p: CartPoint, cfg: ScaleConfig) -> VecField3:
    """Mirror elimination under ``du = dk1 = 0``; divides by ``dk1/dy``."""
    d = nat_partials(p, cfg)
    f_k2 = _guard(d.dfu2_dk2, "df_u2/dk2")
    k1y = _guard(d.dk1_dy, "dk1/dy")
    dz_dk2 = -f_k2 / d.dfu2_dz
    num = d.dk2_dy * d.dk1_dz / k1y - d.dfu2_dz / f_k2 - d.dk2_dz
    den = _guard(d.dk2_dx - d.dk2_dy * d.dk1_dx / k1y, "x-denominator")
    dx_dz = num / den
    dy_dz = -(d.dk1_dx * dx_dz + d.dk1_dz) / k1y
    return VecField3(dz_dk2 * dx_dz, dz_dk2 * dy_dz, dz_dk2)


def w_pk1_cart(p: Point, cfg: ScaleConfig = DEFAULT_CFG,
               branch: Literal["fxfy", "chain"] = "fxfy") -> VecField3:
    """Field of p(k1) = -i hbar d/dk1 (at constant k2, u) in Cartesian components."""
    cp = _as_cart(p)
    if branch == "chain":
        return _pk1_chain(cp, cfg)
    return _pk_i_fxfy(cp, 1, cfg)


def w_pk2_cart(p: Point, cfg: ScaleConfig = DEFAULT_CFG,
               branch: Literal["fxfy", "chain"] = "fxfy") -> VecField3:
    cp = _as_cart(p)
    if branch == "chain":
        return _pk2_chain(cp, cfg)
    return _pk_i_fxfy(cp, 2, cfg)


# -- transformation matrices --------------------------------------------------


def matrix_cyl(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> XformMatrix:
    cyl = _as_cyl(p)
    m = np.array([w_pk_cyl(cyl, cfg), w_t3_cyl(cyl, cfg)], dtype=float)
    return XformMatrix(m, "cyl-2x2")


def matrix_cart(p: Point, cfg: ScaleConfig = DEFAULT_CFG) -> XformMatrix:
    cp = _as_cart(p)
    m = np.array([w_pk1_cart(cp, cfg), w_pk2_cart(cp, cfg), w_t3_cart(cp, cfg)], dtype=float)
    return XformMatrix(m, "cart-3x3")
