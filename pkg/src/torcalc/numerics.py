"""Numerical kernels: quadrature, monotone root finding, finite differences,
closed-form 2x2/3x3 inversion, RK4 streamlines and a Lanczos gamma.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo

from .errors import DomainError, FieldVanishes, NoBracket, NonConvergence, Singular

__all__ = [
    "QuadSpec",
    "FDSpec",
    "integrate",
    "find_root_monotone",
    "fd_derivative",
    "fd_gradient",
    "directional_derivative",
    "invert_small",
    "integrate_streamline",
    "lanczos_gamma",
]

_EPS = np.finfo(float).eps
# QUADPACK refuses relative tolerances below 50 eps when abs_tol == 0.
_MIN_REL_TOL = 50.0 * _EPS


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for :func:`integrate`.

    ``max_depth`` caps the number of adaptive subintervals.
    """

    rel_tol: float = 1e-13
    abs_tol: float = 0.0
    max_depth: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class FDSpec:
    h: float = 1e-3
    scheme: Literal["central2", "central4"] = "central4"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.scheme not in ("central2", "central4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def halved(self) -> "FDSpec":
        return FDSpec(self.h / 2.0, self.scheme)


DEFAULT_QUAD = QuadSpec()
DEFAULT_FD = FDSpec()


def integrate(f: Callable[[float], float], lo: float, hi: float,
              spec: QuadSpec = DEFAULT_QUAD) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    ``hi`` may be ``+inf``; the half line is then mapped onto ``[0, 1)`` via
    ``t = lo + x / (1 - x)`` so that integrands decaying like ``t**-2``
    become bounded.
    """
    if lo > hi:
        raise DomainError(f"integrate: lo={lo} > hi={hi}")
    if lo == hi:
        return 0.0
    if math.isinf(lo):
        raise DomainError("integrate: lower limit must be finite")

    if math.isinf(hi):
        def g(x):
            one_minus = 1.0 - x
            return f(lo + x / one_minus) / (one_minus * one_minus)
        a, b = 0.0, 1.0
    else:
        g, a, b = f, lo, hi

    rel = max(spec.rel_tol, _MIN_REL_TOL)
    value, err, info = _spi.quad(g, a, b, epsabs=spec.abs_tol, epsrel=rel,
                                 limit=spec.max_depth, full_output=1)[:3]
    if info.get("last", 0) >= spec.max_depth and err > max(spec.abs_tol, rel * abs(value)):
        raise NonConvergence(
            f"integrate: subdivision budget {spec.max_depth} exhausted (err={err:.3g})")
    if not math.isfinite(value):
        raise NonConvergence("integrate: non-finite result")
    return value


def find_root_monotone(g: Callable[[float], float], lo: float, hi: float, tol: float,
                       dg: Callable[[float], float] | None = None,
                       x0: float | None = None, maxiter: int = 200) -> float:
    """Root of a strictly monotone ``g`` bracketed by ``[lo, hi]``.

    Returns ``x`` with ``|g(x)| <= tol`` or with a final bracket narrower than
    ``tol``. With ``tol = 0`` iteration runs to machine precision. If the
    derivative ``dg`` is given, safeguarded Newton steps are used (falling
    back to bisection whenever a step leaves the bracket); otherwise Brent's
    method.
    """
    if lo > hi:
        lo, hi = hi, lo
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    # compare signs, not the product, which can underflow to zero
    if not (math.copysign(1.0, glo) != math.copysign(1.0, ghi)):
        raise NoBracket(f"no sign change on [{lo}, {hi}]: g={glo:.3g}, {ghi:.3g}")

    if dg is None:
        xtol = tol if tol > 0 else 1e-300
        try:
            return _spo.brentq(g, lo, hi, xtol=xtol, rtol=4 * _EPS, maxiter=maxiter)
        except RuntimeError as exc:  # pragma: no cover - brentq converges on brackets
            raise NonConvergence(str(exc)) from exc

    a, b = lo, hi
    sign_a = math.copysign(1.0, glo)
    x = x0 if (x0 is not None and a < x0 < b) else 0.5 * (a + b)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0.0 or abs(gx) <= tol:
            return x
        if math.copysign(1.0, gx) == sign_a:
            a = x
        else:
            b = x
        if b - a <= tol:
            return 0.5 * (a + b)
        d = dg(x)
        step_ok = d != 0.0 and math.isfinite(d)
        xn = x - gx / d if step_ok else 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 4 * _EPS * abs(x) + 1e-300:
            return xn
        x = xn
    raise NonConvergence(f"find_root_monotone: no convergence in {maxiter} iterations")


def fd_derivative(f: Callable[..., float], point: Sequence[float], axis: int,
                  spec: FDSpec = DEFAULT_FD):
    """Central finite-difference partial derivative of ``f(*point)`` along ``axis``."""
    pt = list(point)
    x = pt[axis]
    h = spec.h

    def at(offset):
        pt[axis] = x + offset
        return f(*pt)

    if spec.scheme == "central2":
        return (at(h) - at(-h)) / (2 * h)
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)


def fd_gradient(f: Callable[..., float], point: Sequence[float],
                spec: FDSpec = DEFAULT_FD) -> np.ndarray:
    return np.array([fd_derivative(f, point, i, spec) for i in range(len(point))])


def directional_derivative(g: Callable[[np.ndarray], complex], point, direction,
                           spec: FDSpec = DEFAULT_FD):
    """``direction . grad g`` at ``point`` by a central difference along the line.

    The step ``spec.h`` is a length along the unit direction; the result is
    scaled back by ``|direction|``.
    """
    p = np.asarray(point, dtype=float)
    v = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    e = v / norm
    h = spec.h
    if spec.scheme == "central2":
        d = (g(p + h * e) - g(p - h * e)) / (2 * h)
    else:
        d = (-g(p + 2 * h * e) + 8 * g(p + h * e) - 8 * g(p - h * e)
             + g(p - 2 * h * e)) / (12 * h)
    return norm * d


def invert_small(m, deg_tol: float = 1e-12) -> np.ndarray:
    """Closed-form (adjugate) inverse of a 2x2 or 3x3 matrix.

    ``deg_tol`` is relative: the matrix is declared singular when
    ``|det| <= deg_tol * max|m_ij| ** dim``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape == (2, 2):
        (a, b), (c, d) = m
        det = a * d - b * c
        adj = np.array([[d, -b], [-c, a]])
    elif m.shape == (3, 3):
        a, b, c = m[0]
        d, e, f = m[1]
        g, h, i = m[2]
        c00, c01, c02 = e * i - f * h, f * g - d * i, d * h - e * g
        det = a * c00 + b * c01 + c * c02
        adj = np.array([
            [c00, c * h - b * i, b * f - c * e],
            [c01, a * i - c * g, c * d - a * f],
            [c02, b * g - a * h, a * e - b * d],
        ])
    else:
        raise DomainError(f"invert_small handles 2x2 and 3x3, got {m.shape}")
    dim = m.shape[0]
    scale = float(np.max(np.abs(m)))
    if scale == 0.0 or not abs(det) > deg_tol * scale ** dim:
        raise Singular(f"|det|={abs(det):.3g} below deg_tol relative to max entry {scale:.3g}")
    return adj / det


def integrate_streamline(w: Callable[[np.ndarray], Sequence[float]], start, step: float,
                         n_steps: int, deg_tol: float = 1e-12) -> np.ndarray:
    """RK4 polyline of ``n_steps + 1`` points following ``w / |w|``.

    With a unit-normalised field the parameter is arclength, so the polyline
    has total length ``step * n_steps``.
    """

    def unit(p):
        v = np.asarray(w(p), dtype=float)
        n = float(np.linalg.norm(v))
        if not n > deg_tol:
            raise FieldVanishes(f"|W|={n:.3g} at {p.tolist()}")
        return v / n

    pts = np.empty((n_steps + 1, len(start)))
    p = np.asarray(start, dtype=float)
    pts[0] = p
    for i in range(n_steps):
        k1 = unit(p)
        k2 = unit(p + 0.5 * step * k1)
        k3 = unit(p + 0.5 * step * k2)
        k4 = unit(p + step * k3)
        p = p + step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        pts[i + 1] = p
    return pts


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma function, Lanczos approximation (g=7, n=9); ~1e-15 relative."""
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc
