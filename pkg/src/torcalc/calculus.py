"""Operator application, commutator residuals, momentum reconstruction and
chart-invariant inner products.

An operator is represented by its real field W; its action on a scalar
field is ``(-i hbar) W . grad f``. Scalar fields are evaluated on
``CartPoint`` instances whose components may be numpy arrays, so the same
test function serves pointwise checks and quadrature grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple, Sequence

import numpy as np

from . import coords, fields, numerics
from .coords import CartPoint, ScaleConfig, DEFAULT_CFG
from .errors import OnAxis

__all__ = [
    "ScalarField",
    "OperatorHandle",
    "op_t",
    "op_l",
    "op_pk",
    "op_pk1",
    "op_pk2",
    "local_scale",
    "gradient",
    "apply",
    "commutator_residual",
    "CommutatorReport",
    "commutator_report",
    "reconstruct_momentum",
    "GridSpec",
    "CHARTS",
    "chart_grid",
    "inner_product",
    "gram_matrix",
    "coordinate_field",
    "gaussian_family",
]


@dataclass(frozen=True)
class ScalarField:
    """A test function and, optionally, its analytic Cartesian gradient."""

    evaluate: Callable[[CartPoint], complex]
    gradient: Callable[[CartPoint], Sequence[complex]] | None = None
    name: str = "f"

    def __call__(self, p: CartPoint):
        return self.evaluate(p)


@dataclass(frozen=True)
class OperatorHandle:
    name: str
    field: Callable[[CartPoint], Sequence[float]] = field(repr=False)

    def w(self, p) -> np.ndarray:
        return np.asarray(self.field(CartPoint(*p)), dtype=float)


def op_t(i: int, cfg: ScaleConfig = DEFAULT_CFG) -> OperatorHandle:
    return OperatorHandle(f"T{i}", lambda p: fields.w_ti_cart(i, p, cfg))


def op_l(j: int) -> OperatorHandle:
    return OperatorHandle(f"L{j}", lambda p: fields.w_li_cart(j, p))


def op_pk(cfg: ScaleConfig = DEFAULT_CFG) -> OperatorHandle:
    return OperatorHandle("pk", lambda p: fields.w_pk_cart(p, cfg))


def op_pk1(cfg: ScaleConfig = DEFAULT_CFG) -> OperatorHandle:
    return OperatorHandle("pk1", lambda p: fields.w_pk1_cart(p, cfg))


def op_pk2(cfg: ScaleConfig = DEFAULT_CFG) -> OperatorHandle:
    return OperatorHandle("pk2", lambda p: fields.w_pk2_cart(p, cfg))


def local_scale(p) -> float:
    """``max(k, |z|)``, the length over which the natural charts vary."""
    x, y, z = p
    rho = math.hypot(x, y)
    k = math.sqrt(rho * math.sqrt(rho * rho + z * z))
    return max(k, abs(z))


def _check(p) -> CartPoint:
    cp = CartPoint(*(float(c) for c in p))
    if not math.hypot(cp.x, cp.y) > 0:
        raise OnAxis(f"operator application on the z axis: {tuple(cp)}")
    return cp


def gradient(f: ScalarField, p, fd: numerics.FDSpec | None = None) -> np.ndarray:
    """Analytic gradient if ``f`` carries one, otherwise finite differences."""
    cp = CartPoint(*p)
    if f.gradient is not None and fd is None:
        return np.asarray(f.gradient(cp))
    spec = fd or numerics.FDSpec(1e-3 * local_scale(cp))
    return np.array([numerics.fd_derivative(lambda *q: f(CartPoint(*q)), cp, i, spec)
                     for i in range(3)])


def apply(op: OperatorHandle, f: ScalarField, p, cfg: ScaleConfig = DEFAULT_CFG,
          fd: numerics.FDSpec | None = None) -> complex:
    """``(-i hbar) W(p) . grad f(p)``.

    Pass ``fd`` to force a finite-difference gradient even when ``f`` has an
    analytic one.
    """
    cp = _check(p)
    return -1j * cfg.hbar * complex(np.dot(op.w(cp), gradient(f, cp, fd)))


def _directional_w_grad(a: OperatorHandle, b: OperatorHandle, f: ScalarField,
                        p: np.ndarray, spec: numerics.FDSpec):
    """``W_a(p) . grad (W_b . grad f)`` with the outer derivative by FD."""

    def inner(q):
        cq = CartPoint(*q)
        return complex(np.dot(b.w(cq), gradient(f, cq)))

    return numerics.directional_derivative(inner, p, a.w(p), spec)


def _commutator_value(a, b, f, p, cfg, spec, expected):
    # (-i hbar)**2 = -hbar**2
    ab = _directional_w_grad(a, b, f, p, spec)
    ba = _directional_w_grad(b, a, f, p, spec)
    val = -cfg.hbar ** 2 * (ab - ba)
    if expected is not None:
        val -= expected(CartPoint(*p))
    return complex(val)


def commutator_residual(a: OperatorHandle, b: OperatorHandle, f: ScalarField, p,
                        cfg: ScaleConfig = DEFAULT_CFG, fd: numerics.FDSpec | None = None,
                        expected: Callable[[CartPoint], complex] | None = None) -> complex:
    """``([A, B] - expected) f`` at ``p``; ``expected`` defaults to zero.

    The inner derivative uses ``f``'s analytic gradient (FD if absent); the
    outer derivative is a central difference along ``W_A`` (resp. ``W_B``).
    """
    cp = _check(p)
    spec = fd or numerics.FDSpec(COMMUTATOR_REL_STEP * local_scale(cp))
    return _commutator_value(a, b, f, np.asarray(cp, dtype=float), cfg, spec, expected)


class CommutatorReport(NamedTuple):
    residual: complex        # at step h
    residual_half: complex   # at step h/2
    ratio: float             # |R(h)| / |R(h/2)|
    floor: float             # roundoff level of the two nested terms
    status: str              # "truncation", "exact" or "unresolved"

    @property
    def resolved(self) -> bool:
        return self.status != "unresolved"


COMMUTATOR_REL_STEP = 5e-3


def commutator_report(a: OperatorHandle, b: OperatorHandle, f: ScalarField, p,
                      cfg: ScaleConfig = DEFAULT_CFG, fd: numerics.FDSpec | None = None,
                      expected: Callable[[CartPoint], complex] | None = None,
                      min_ratio: float = 8.0) -> CommutatorReport:
    """Residual at ``h`` and ``h/2`` with a truncation-dominance verdict.

    A vanishing commutator leaves only truncation error, which the
    fourth-order scheme cuts 16x per halving: ``ratio >= min_ratio`` gives
    status ``"truncation"``. When both residuals sit below the roundoff floor
    of the nested terms there is no truncation error to measure (e.g. L3
    acting on an axisymmetric f) and the status is ``"exact"``. Anything else
    is ``"unresolved"``.
    """
    cp = _check(p)
    spec = fd or numerics.FDSpec(COMMUTATOR_REL_STEP * local_scale(cp))
    arr = np.asarray(cp, dtype=float)
    r1 = _commutator_value(a, b, f, arr, cfg, spec, expected)
    r2 = _commutator_value(a, b, f, arr, cfg, spec.halved(), expected)
    # nested-term magnitude: |W_a| |W_b| |grad f| / h
    mag = (np.linalg.norm(a.w(arr)) * np.linalg.norm(b.w(arr))
           * float(np.linalg.norm(gradient(f, cp))) * cfg.hbar ** 2 + 1.0)
    floor = 1e3 * np.finfo(float).eps * mag * local_scale(cp) / spec.h
    ratio = abs(r1) / abs(r2) if r2 != 0 else math.inf
    if ratio >= min_ratio:
        status = "truncation"
    elif max(abs(r1), abs(r2)) <= floor:
        status = "exact"
    else:
        status = "unresolved"
    return CommutatorReport(r1, r2, ratio, floor, status)


def reconstruct_momentum(p, f: ScalarField, cfg: ScaleConfig = DEFAULT_CFG,
                         fd: numerics.FDSpec | None = None, deg_tol: float = 1e-12) -> np.ndarray:
    """Estimate ``-i hbar grad f`` from ``(p(k1) f, p(k2) f, T3 f)``.

    Inverts the matrix whose rows are the P(k1), P(k2), T3 fields.
    """
    cp = _check(p)
    m = fields.matrix_cart(cp, cfg)
    g = gradient(f, cp, fd)
    triple = -1j * cfg.hbar * (m.matrix @ g)
    return m.inverse(deg_tol) @ triple


# -- inner products ------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Tensor-product quadrature grid.

    ``extent`` truncates the box ``[-L, L]**3`` (cart), ``k <= L`` (nat-ku)
    and ``[-L, L]**2`` in ``(k1, k2)``. ``xi_max`` truncates the fibre
    variable ``xi = u / a(k)``; points beyond it lie at ``|z| > 700 k`` and
    contribute nothing for Gaussian-dominated integrands.
    """

    n: int = 64
    n_phi: int = 16
    extent: float = 8.0
    xi_max: float = 1.0 - 1e-3


def _gl(n: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _gl_split(n: int, L: float):
    """Gauss-Legendre on ``[-L, 0]`` and ``[0, L]`` (n nodes each)."""
    a, wa = _gl(n, -L, 0.0)
    b, wb = _gl(n, 0.0, L)
    return np.concatenate([a, b]), np.concatenate([wa, wb])


def _fibre(grid: GridSpec, cfg: ScaleConfig):
    xi, wxi = _gl(grid.n, -grid.xi_max, grid.xi_max)
    unit = np.array([coords.unit_fiber(float(v), cfg) for v in xi])
    return xi, wxi, unit[:, 0], unit[:, 1]


Chart = Literal["cart", "nat-kuphi", "nat-k12u"]
CHARTS: tuple[str, ...] = ("cart", "nat-kuphi", "nat-k12u")


def chart_grid(chart: Chart, grid: GridSpec = GridSpec(),
               cfg: ScaleConfig = DEFAULT_CFG) -> tuple[CartPoint, np.ndarray]:
    """Cartesian images of a chart's quadrature nodes and the matching weights.

    * ``cart``: ``dx dy dz``.
    * ``nat-kuphi``: ``(2 k**3 / s) dk du dphi``.
    * ``nat-k12u``: ``(2 (k1**2 + k2**2) / s) dk1 dk2 du``.

    In both natural charts u is mapped fibre-wise to ``xi = u / a(k)``, which
    adds a factor ``a(k)`` to the weight.
    """
    L = grid.extent
    if chart == "cart":
        x, w = _gl_split(grid.n // 2, L)
        X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
        W = w[:, None, None] * w[None, :, None] * w[None, None, :]
        return CartPoint(X, Y, Z), W

    C = coords.c_a()
    if chart == "nat-kuphi":
        k, wk = _gl(grid.n, 0.0, L)
        _, wxi, rho1, z1 = _fibre(grid, cfg)
        phi = 2 * math.pi * np.arange(grid.n_phi) / grid.n_phi
        wphi = 2 * math.pi / grid.n_phi
        K, R1, PHI = np.meshgrid(k, rho1, phi, indexing="ij")
        Z1 = np.broadcast_to(z1[None, :, None], K.shape)
        rho = K * R1
        # I1 * a(k) = (2 k**3 / s) (s C_a / k)
        weight = (2.0 * C * k ** 2 * wk)[:, None, None] * wxi[None, :, None] * wphi
        return CartPoint(rho * np.cos(PHI), rho * np.sin(PHI), K * Z1), np.broadcast_to(weight, K.shape)

    if chart == "nat-k12u":
        kk, wkk = _gl_split(grid.n // 2, L)
        _, wxi, rho1, z1 = _fibre(grid, cfg)
        K1, K2, R1 = np.meshgrid(kk, kk, rho1, indexing="ij")
        Z1 = np.broadcast_to(z1[None, None, :], K1.shape)
        K = np.hypot(K1, K2)
        # I2 * a(k) = (2 k**2 / s) (s C_a / k)
        weight = 2.0 * C * K * (wkk[:, None, None] * wkk[None, :, None] * wxi[None, None, :])
        return CartPoint(K1 * R1, K2 * R1, K * Z1), weight

    raise ValueError(f"unknown chart {chart!r}")


def inner_product(f: ScalarField, g: ScalarField, chart: Chart = "cart",
                  grid: GridSpec = GridSpec(), cfg: ScaleConfig = DEFAULT_CFG) -> complex:
    """``<f|g> = int conj(f) g dV`` evaluated with the chart's own measure (see :func:`chart_grid`)."""
    p, w = chart_grid(chart, grid, cfg)
    return complex(np.sum(np.conj(f(p)) * g(p) * w))


def gram_matrix(fs: Sequence[ScalarField], chart: Chart = "cart",
                grid: GridSpec = GridSpec(), cfg: ScaleConfig = DEFAULT_CFG) -> np.ndarray:
    """All ``<f_i|f_j>`` on one chart, evaluating each field once."""
    p, w = chart_grid(chart, grid, cfg)
    vals = np.array([np.ravel(f(p) * np.ones_like(w)) for f in fs])
    return np.conj(vals) @ (vals * np.ravel(w)).T


# -- ready-made scalar fields --------------------------------------------------


def coordinate_field(name: Literal["k", "u", "phi", "k1", "k2"],
                     cfg: ScaleConfig = DEFAULT_CFG) -> ScalarField:
    """A natural coordinate as a scalar field on Cartesian points (no analytic gradient)."""

    def ev(p):
        cp = CartPoint(*p)
        if name == "phi":
            return math.atan2(cp.y, cp.x)
        if name == "k":
            rho = math.hypot(cp.x, cp.y)
            return math.sqrt(rho * math.hypot(rho, cp.z))
        if name == "u":
            return coords.cart_to_k12(cp, cfg).u
        q = coords.cart_to_k12(cp, cfg)
        return q.k1 if name == "k1" else q.k2

    grad = None
    if name == "phi":
        def grad(p):
            rho2 = p[0] ** 2 + p[1] ** 2
            return (-p[1] / rho2, p[0] / rho2, 0.0 * p[2])
    return ScalarField(ev, grad, name)


def _gauss_poly(name, c, poly, dpoly):
    """``poly(p) * exp(-c r**2)`` with its analytic gradient."""

    def ev(p):
        return poly(p) * np.exp(-c * (p[0] ** 2 + p[1] ** 2 + p[2] ** 2))

    def grad(p):
        e = np.exp(-c * (p[0] ** 2 + p[1] ** 2 + p[2] ** 2))
        q = poly(p)
        dq = dpoly(p)
        return tuple((dq[i] - 2 * c * p[i] * q) * e for i in range(3))

    return ScalarField(ev, grad, name)


def gaussian_family() -> list[ScalarField]:
    """Five Gaussian-polynomial test functions (scale ~1, none axisymmetric but the first)."""
    nrm = math.pi ** -0.75
    one = lambda p: nrm + 0.0 * p[0]  # noqa: E731
    return [
        _gauss_poly("g0", 0.5, one, lambda p: (0.0 * p[0], 0.0 * p[0], 0.0 * p[0])),
        _gauss_poly("x.g", 0.5, lambda p: p[0], lambda p: (1.0 + 0.0 * p[0], 0.0 * p[0], 0.0 * p[0])),
        _gauss_poly("(1+yz).g", 0.6, lambda p: 1.0 + p[1] * p[2],
                    lambda p: (0.0 * p[0], p[2], p[1])),
        _gauss_poly("(x2-z+xy).g", 0.7, lambda p: p[0] ** 2 - p[2] + p[0] * p[1],
                    lambda p: (2 * p[0] + p[1], p[0], -1.0 + 0.0 * p[0])),
        _gauss_poly("(1+xyz).g", 0.4, lambda p: 1.0 + p[0] * p[1] * p[2],
                    lambda p: (p[1] * p[2], p[0] * p[2], p[0] * p[1])),
    ]
