"""Concentration weights of eps-rescaled functionals of the layer profile.

For a Holder function F with F(0) subtracted, the functionals
[F(eps u') - F(0)] / eps and [F(u) - F(0)] / eps concentrate at r = R with the
weights computed here. On the whole interval the weights are integrals over
(0, b] that are singular like t^(tau - 1) at t = 0. Windowed versions restricted
to [R - p eps, R] integrate over [k(p), b] instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from . import asymptotics
from .params import DomainError
from .solver import RadialSolution, sample


class UnderResolvedWarning(UserWarning):
    """The mesh is too coarse for the slow tail of a low-exponent F."""


@dataclass(frozen=True)
class HolderFunction:
    name: str
    F: Callable[[np.ndarray], np.ndarray]
    tau: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise DomainError(f"Holder exponent must lie in (0, 1], got {self.tau}")

    @property
    def F0(self) -> float:
        return float(self.F(np.array([0.0]))[0])

    def __call__(self, x):
        return self.F(np.asarray(x, dtype=float))

    def holder_constant(self, lo: float, hi: float, n: int = 401) -> float:
        """Sampled estimate of sup |F(x) - F(y)| / |x - y|^tau on [lo, hi]."""
        x = np.linspace(lo, hi, n)
        fx = self(x)
        dx = np.abs(x[:, None] - x[None, :])
        df = np.abs(fx[:, None] - fx[None, :])
        mask = dx > 0
        return float(np.max(df[mask] / dx[mask] ** self.tau))


def standard_F_suite() -> dict[str, HolderFunction]:
    return {
        "s": HolderFunction("s", lambda x: x),
        "s^2": HolderFunction("s^2", lambda x: x * x),
        "|s|^1/2": HolderFunction("|s|^1/2", lambda x: np.sqrt(np.abs(x)), tau=0.5),
        "2asinh(s/2)": HolderFunction("2asinh(s/2)", lambda x: 2.0 * np.arcsinh(0.5 * x)),
        "2sinh(s/2)": HolderFunction("2sinh(s/2)", lambda x: 2.0 * np.sinh(0.5 * x)),
    }


@dataclass(frozen=True)
class TestFunction:
    """Continuous eps-independent test function on [0, R] with its value at R."""

    __test__ = False   # not a pytest class

    name: str
    h: Callable[[np.ndarray, float], np.ndarray]

    def __call__(self, r, radius: float):
        return self.h(np.asarray(r, dtype=float), radius)

    def at_boundary(self, radius: float) -> float:
        return float(self.h(np.array([radius]), radius)[0])


def _hat(r, R):
    return np.maximum(0.0, 1.0 - np.abs(r - 0.5 * R) / (0.25 * R))


def standard_h_suite() -> dict[str, TestFunction]:
    return {
        "1": TestFunction("1", lambda r, R: np.ones_like(r)),
        "r/R": TestFunction("r/R", lambda r, R: r / R),
        "cos(pi r/2R)": TestFunction("cos(pi r/2R)", lambda r, R: np.cos(0.5 * np.pi * r / R)),
        "hat(R/2)": TestFunction("hat(R/2)", _hat),
    }


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _gauss_panels(g, edges: np.ndarray) -> float:
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * _GL_X[None, :] + 0.5 * (a + b)
    return float(np.sum(0.5 * (b - a) * _GL_W[None, :] * g(x)))


def _singular_integral(g, b: float, tau: float, tol: float = 1e-13) -> float:
    """int_0^b g(t) dt for g ~ t^(tau-1) at 0 (b of either sign).

    t = b x^m with m = 1/tau removes the singularity; the x-integral is done on
    geometrically graded Gauss-Legendre panels toward 0, refined until stable.
    """
    if b == 0.0:
        return 0.0
    m = 1.0 / tau

    def integrand(x):
        return g(b * x**m) * b * m * x ** (m - 1.0)

    prev = None
    for level in range(4):
        uniform = np.linspace(0.0, 1.0, 2 ** (level + 2) + 1)[1:]
        graded = 2.0 ** -np.arange(40, 0, -1) * uniform[0]
        edges = np.concatenate(([0.0], graded, uniform))
        val = _gauss_panels(integrand, edges)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
    return val


def _grad_integrand(F: HolderFunction):
    F0 = F.F0

    def g(t):
        s = 2.0 * np.sinh(0.5 * t)
        return (F(s) - F0) / s
    return g


def _value_integrand(F: HolderFunction):
    F0 = F.F0

    def g(t):
        return (F(t) - F0) / (2.0 * np.sinh(0.5 * t))
    return g


def weight_Ii(F: HolderFunction, b: float) -> float:
    """Weight of [F(eps u') - F(0)]/eps: int_0^b [F(2 sinh(t/2)) - F(0)] / (2 sinh(t/2)) dt."""
    return _singular_integral(_grad_integrand(F), b, F.tau)


def weight_Iii(F: HolderFunction, b: float) -> float:
    """Weight of [F(u) - F(0)]/eps: int_0^b [F(t) - F(0)] / (2 sinh(t/2)) dt."""
    return _singular_integral(_value_integrand(F), b, F.tau)


def weight_II(F: HolderFunction, b: float, kp: float, variant: str) -> float:
    """Windowed weight over [k(p), b]; ``variant`` 'i' (gradient) or 'ii' (value).

    The integrand keeps the F(0) subtraction of the full-window weights; every
    function in the standard suite has F(0) = 0 so this is immaterial there.
    """
    if variant not in ("i", "ii"):
        raise ValueError("variant must be 'i' or 'ii'")
    if kp == 0.0 or (kp > 0) != (b > 0) or abs(kp) > abs(b):
        raise DomainError("k(p) must satisfy 0 < k(p) <= b; use weight_Ii/weight_Iii for the full window")
    if kp == b:
        return 0.0
    g = _grad_integrand(F) if variant == "i" else _value_integrand(F)
    n = 16
    prev = None
    while True:
        val = _gauss_panels(g, np.linspace(kp, b, n + 1))
        if prev is not None and abs(val - prev) <= 1e-14 * max(1.0, abs(val)):
            return val
        prev, n = val, 2 * n
        if n > 4096:
            return val


def brute_force_weight(F: HolderFunction, b: float, kind: str, panels: int = 10**6) -> float:
    """Independent trapezoid estimate of weight_Ii ('i') or weight_Iii ('ii') for b > 0.

    The leading singular part c t^(tau-1) is subtracted and integrated exactly; the
    bounded remainder (set to 0 at t = 0) goes through a uniform trapezoid rule.
    """
    if b <= 0:
        raise DomainError("brute-force oracle expects b > 0")
    g = _grad_integrand(F) if kind == "i" else _value_integrand(F)
    tau = F.tau
    t0 = 1e-12 * b
    c = float(g(np.array([t0]))[0]) * t0 ** (1.0 - tau)
    t = np.linspace(0.0, b, panels + 1)
    rem = np.empty_like(t)
    rem[1:] = g(t[1:]) - c * t[1:] ** (tau - 1.0)
    rem[0] = 0.0
    h = b / panels
    trap = h * (math.fsum(rem) - 0.5 * (rem[0] + rem[-1]))
    return trap + c * b**tau / tau


# ---------------------------------------------------------------------------
# empirical pairings on a numerical solution
# ---------------------------------------------------------------------------


def _tail_resolved(sol: RadialSolution, tau: float) -> bool:
    R, eps = sol.params.radius, sol.params.eps
    width = min(R, 10.0 * eps / tau)
    return np.count_nonzero(sol.mesh.nodes >= R - width) >= 200


def empirical_pairing(sol: RadialSolution, F: HolderFunction, h: TestFunction,
                      mode: str = "gradient", window: float | None = None) -> float:
    """Simpson quadrature of int h(r) [F(eps u') - F(0)] / eps dr (or F(u) for mode='value').

    ``window`` = p restricts the integral to [R - p eps, R]; the cut point is
    interpolated from the mesh.
    """
    if mode not in ("gradient", "value"):
        raise ValueError("mode must be 'gradient' or 'value'")
    p = sol.params
    r, u, du = sol.mesh.nodes, sol.u, sol.du
    if window is not None:
        if window < 0:
            raise DomainError("window depth p must be non-negative")
        rp = p.radius - window * p.eps
        if rp < 0:
            raise DomainError("window extends beyond the centre")
        keep = r > rp
        s = sample(sol, rp)
        r = np.concatenate(([rp], r[keep]))
        u = np.concatenate(([s.u], u[keep]))
        du = np.concatenate(([s.du], du[keep]))
    if not _tail_resolved(sol, F.tau):
        warnings.warn(f"mesh may under-resolve the tail of {F.name} at eps={p.eps}", UnderResolvedWarning)
    arg = p.eps * du if mode == "gradient" else u
    f = h(r, p.radius) * (F(arg) - F.F0) / p.eps
    if len(r) < 2:
        return 0.0
    return float(simpson(f, x=r))


def pairing_limit(F: HolderFunction, h: TestFunction, b: float, radius: float, mode: str = "gradient",
                  kp: float | None = None) -> float:
    """Predicted eps -> 0 limit of :func:`empirical_pairing`: weight times h(R)."""
    if b == 0.0:
        return 0.0
    if kp is None:
        weight = weight_Ii(F, b) if mode == "gradient" else weight_Iii(F, b)
    else:
        weight = weight_II(F, b, kp, "i" if mode == "gradient" else "ii")
    return weight * h.at_boundary(radius)


def window_height(params, p: float, curvature: str = "first-order") -> float:
    """k(p) for the window [R - p eps, R]."""
    return asymptotics.solve_k_of_p(params, p, curvature=curvature)


def l1_mass(sol: RadialSolution, F: HolderFunction) -> float:
    """int |F(eps u') - F(0)| / eps dr over [0, R]."""
    p = sol.params
    f = np.abs(F(p.eps * sol.du) - F.F0) / p.eps
    return float(simpson(f, x=sol.mesh.nodes))
