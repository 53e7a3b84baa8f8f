"""Closed-form asymptotics of the radial nonlocal sinh-Gordon boundary layer.

Everything here is a scalar formula or a scalar root solve; no discretisation.
Two-term quantities are returned as :class:`TwoTerm` so the leading coefficient
and the O(eps) correction stay separate until ``value(eps)`` is called.

Notation used in the helpers below, for the limit boundary value b:

    s = sinh(b/2), c = cosh(b/2), T = tanh(b/4), P = N c**2 - 1,
    X = (N - 1) / (2R)   (curvature weight).

Layer-interior formulas take a ``curvature`` switch. ``"leading"`` evaluates the
closed forms with the curvature weight X inside the O(1) depth equation for k(p)
and in the denominators of H. ``"first-order"`` is the bookkeeping that the first
integral eps*u'/(2 sinh(u/2)) = 1 - eps*(2N sinh^2(b/4)/R + X sech^2(u/4)) actually
produces: integrating sech^2(u/4) across the layer costs a factor eps, so X only
enters the O(eps) balance. The two agree at p = q = 0 and for N = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import DomainError, LayerPoint, ProblemParams, TwoTerm


def _sech2(x: float) -> float:
    return 1.0 / math.cosh(x) ** 2


def _bracketed_newton(f, df, lo: float, hi: float, *, xtol: float = 0.0, maxiter: int = 200) -> float:
    """Root of a strictly monotone ``f`` on [lo, hi] with a sign change.

    Newton steps are taken when they stay inside the current bracket, bisection
    otherwise. Terminates on an exact zero, a collapsed bracket, or a stalled step.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("root is not bracketed")
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if fx == 0.0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        d = df(x)
        step_ok = False
        if d != 0.0 and math.isfinite(d):
            xn = x - fx / d
            step_ok = lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= max(xtol, 4 * math.ulp(x)) or hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            return xn
        x = xn
    return x


# --------------------------------------------------------------------------
# boundary value b
# --------------------------------------------------------------------------


def b_residual(b: float, gamma: float, a0: float) -> float:
    return b + 2.0 * gamma * math.sinh(0.5 * b) - a0


def solve_b(params: ProblemParams) -> float:
    """Limit boundary value: the unique root of b + 2*gamma*sinh(b/2) = a0.

    ``a0 = 0`` gives the trivial root 0. Negative ``a0`` returns ``-b(|a0|)``,
    which is the root of the same (odd) equation.
    """
    a0, gamma = params.a0, params.gamma
    if a0 == 0.0:
        return 0.0
    sign = 1.0 if a0 > 0 else -1.0
    a = abs(a0)
    f = lambda b: b_residual(b, gamma, a)
    df = lambda b: 1.0 + gamma * math.cosh(0.5 * b)
    # b < a and b < 2*asinh(a/(2*gamma)) both hold since each summand is positive
    hi = min(a, 2.0 * math.asinh(a / (2.0 * gamma)))
    return sign * _bracketed_newton(f, df, 0.0, hi)


# --------------------------------------------------------------------------
# boundary expansions of C(u), u(R), u'(R)
# --------------------------------------------------------------------------


def _boundary_shape(b: float, N: float) -> tuple[float, float, float, float]:
    s, c, T = math.sinh(0.5 * b), math.cosh(0.5 * b), math.tanh(0.25 * b)
    return s, c, T, N * c * c - 1.0


def expand_boundary(params: ProblemParams) -> tuple[TwoTerm, TwoTerm, TwoTerm]:
    """Two-term expansions of the nonlocal coefficient, u(R) and u'(R).

    Returns ``(c2, uR2, duR2)``; ``duR2`` carries power -1 (leading 2 sinh(b/2)/eps).
    """
    N, R, gamma = params.dim, params.radius, params.gamma
    b = solve_b(params)
    s, c, T, P = _boundary_shape(b, N)
    denom = gamma * c + 1.0
    c2 = TwoTerm(1.0, -(2.0 * N / R) * (c - 1.0))
    uR2 = TwoTerm(b, (2.0 / R) * gamma * P * T / denom)
    duR2 = TwoTerm(2.0 * s, -(2.0 / R) * P * T / denom, power=-1)
    return c2, uR2, duR2


def dtn_two_term(params: ProblemParams, uR: TwoTerm) -> TwoTerm:
    """Asymptotic Dirichlet-to-Neumann map u(R) -> u'(R), two terms.

    ``uR`` must be an O(1) two-term value b' + corr*eps with b' > 0. The sinh is
    expanded to first order in the correction, the curvature term uses b' only.
    """
    if uR.power != 0:
        raise ValueError("boundary value must be an O(1) two-term quantity")
    lead = uR.lead
    if not lead > 0:
        raise DomainError("DtN expansion needs a positive leading boundary value")
    N, R = params.dim, params.radius
    s, c, T, P = _boundary_shape(lead, N)
    # (2/eps) [[sinh(uR/2)]]_2 = (2/eps) sinh(L/2) + corr * cosh(L/2)
    return TwoTerm(2.0 * s, uR.corr * c - (2.0 / R) * T * P, power=-1)


# --------------------------------------------------------------------------
# layer profile height k(p) and pointwise layer expansions
# --------------------------------------------------------------------------


CURVATURE_FORMS = ("leading", "first-order")


def _lead_weight(N: float, R: float, curvature: str) -> float:
    """Curvature weight entering the O(1) layer equations."""
    if curvature == "leading":
        return (N - 1.0) / (2.0 * R)
    if curvature == "first-order":
        return 0.0
    raise ValueError(f"curvature must be one of {CURVATURE_FORMS}, got {curvature!r}")


def layer_depth(k: float, b: float, N: float, R: float, curvature: str = "leading") -> float:
    """Leading scaled depth p at which the limit profile has height k, 0 < k <= b."""
    X = _lead_weight(N, R, curvature)
    tb, tk = math.tanh(0.25 * b), math.tanh(0.25 * k)
    return (1.0 + X) * math.log(tb / tk) + 0.5 * X * (tk * tk - tb * tb)


def _layer_depth_dk(k: float, N: float, R: float, curvature: str) -> float:
    X = _lead_weight(N, R, curvature)
    return -(1.0 + X * _sech2(0.25 * k)) / (2.0 * math.sinh(0.5 * k))


def _first_order_shift(N: float, p: float, b: float, k: float) -> float:
    # curvature contribution to H once X is moved to the O(eps) balance
    tb, tk = math.tanh(0.25 * b), math.tanh(0.25 * k)
    return (N - 1.0) * (p + 0.5 * (tk * tk - tb * tb))


def solve_k_of_p(params: ProblemParams, p: float, b: float | None = None, curvature: str = "leading") -> float:
    """Limit layer height k(p) in (0, b]: the root of ``layer_depth(k) = p``.

    The depth map is strictly decreasing in k with a log singularity at k = 0,
    so the bracket [k_lo, b] is widened downward until it contains the root.
    """
    if p < 0:
        raise DomainError(f"p must be non-negative, got {p}")
    if b is None:
        b = solve_b(params)
    if b == 0.0:
        return 0.0
    if p == 0.0:
        return b
    sign = 1.0 if b > 0 else -1.0
    b = abs(b)
    N, R = params.dim, params.radius
    _lead_weight(N, R, curvature)
    k_lo = 0.5 * min(b, 4.0 * math.atanh(math.tanh(0.25 * b) * math.exp(-p)))
    while layer_depth(k_lo, b, N, R, curvature) < p:
        k_lo *= 0.5
        if k_lo < 1e-300:
            raise DomainError(f"layer depth p={p} is beyond floating-point range")
    k = _bracketed_newton(
        lambda k: layer_depth(k, b, N, R, curvature) - p,
        lambda k: _layer_depth_dk(k, N, R, curvature),
        k_lo,
        b,
    )
    return sign * k


def layer_coefficient(params: ProblemParams, pt: LayerPoint, b: float, k: float,
                      curvature: str = "leading") -> float:
    """Second-order coefficient H of the nonlocal layer expansion at (p, q)."""
    N, R, gamma = params.dim, params.radius, params.gamma
    X = _lead_weight(N, R, curvature)
    s, c, T, P = _boundary_shape(b, N)
    Xb = 1.0 + X * _sech2(0.25 * b)
    Xk = 1.0 + X * _sech2(0.25 * k)
    first = gamma * P * _sech2(0.25 * b) / (gamma * c + 1.0) * Xb / Xk
    H = first - (2.0 * pt.q - 4.0 * N * pt.p * math.sinh(0.25 * b) ** 2) / Xk
    if curvature == "first-order":
        H += _first_order_shift(N, pt.p, b, k)
    return H


def local_layer_coefficient(params: ProblemParams, pt: LayerPoint, b: float, k: float,
                            curvature: str = "leading") -> float:
    """Second-order coefficient of the local (C = 1) layer expansion at (p, q)."""
    N, R, gamma = params.dim, params.radius, params.gamma
    X = _lead_weight(N, R, curvature)
    c = math.cosh(0.5 * b)
    Xb = 1.0 + X * _sech2(0.25 * b)
    Xk = 1.0 + X * _sech2(0.25 * k)
    first = gamma * (N - 1.0) * _sech2(0.25 * b) / (gamma * c + 1.0) * Xb / Xk
    H = first - 2.0 * pt.q / Xk
    if curvature == "first-order":
        H += _first_order_shift(N, pt.p, b, k)
    return H


def _layer_values(params: ProblemParams, k: float, H: float, b_term: float) -> tuple[TwoTerm, TwoTerm]:
    # b_term is 2N sinh^2(b/4) for the nonlocal model and 0 for the local one
    N, R = params.dim, params.radius
    sk, ck = math.sinh(0.5 * k), math.cosh(0.5 * k)
    u2 = TwoTerm(k, H * sk / R)
    bracket = b_term + 0.5 * (N - 1.0) * _sech2(0.25 * k) - 0.5 * H * ck
    du2 = TwoTerm(2.0 * sk, -2.0 * sk * bracket / R, power=-1)
    return u2, du2


def layer_expansion(params: ProblemParams, pt: LayerPoint,
                    curvature: str = "leading") -> tuple[TwoTerm, TwoTerm, float]:
    """Two-term u and u' at the layer point (p, q), plus the coefficient H."""
    b = solve_b(params)
    if b == 0.0:
        return TwoTerm(0.0, 0.0), TwoTerm(0.0, 0.0, power=-1), 0.0
    k = solve_k_of_p(params, pt.p, b, curvature)
    H = layer_coefficient(params, pt, b, k, curvature)
    u2, du2 = _layer_values(params, k, H, 2.0 * params.dim * math.sinh(0.25 * b) ** 2)
    return u2, du2, H


def local_model_expansions(params: ProblemParams, pt: LayerPoint,
                           curvature: str = "leading") -> tuple[TwoTerm, TwoTerm, TwoTerm, TwoTerm, float]:
    """Expansions for the local sinh-Gordon model (nonlocal coefficient frozen to 1).

    Returns ``(vR2, dvR2, v_layer2, dv_layer2, H_sharp)``.
    """
    N, R, gamma = params.dim, params.radius, params.gamma
    b = solve_b(params)
    if b == 0.0:
        z, dz = TwoTerm(0.0, 0.0), TwoTerm(0.0, 0.0, power=-1)
        return z, dz, z, dz, 0.0
    s, c, T, _ = _boundary_shape(b, N)
    denom = gamma * c + 1.0
    vR2 = TwoTerm(b, ((N - 1.0) / R) * 2.0 * gamma * T / denom)
    dvR2 = TwoTerm(2.0 * s, -((N - 1.0) / R) * 2.0 * T / denom, power=-1)
    k = solve_k_of_p(params, pt.p, b, curvature)
    Hs = local_layer_coefficient(params, pt, b, k, curvature)
    v2, dv2 = _layer_values(params, k, Hs, 0.0)
    return vR2, dvR2, v2, dv2, Hs


def comparison_limits(params: ProblemParams, pt: LayerPoint,
                      curvature: str = "leading") -> tuple[float, float, float]:
    """Limits of (u - v)(R)/eps, (u - v)(r_pq)/eps and (u' - v')(r_pq) as eps -> 0.

    Evaluated from the closed forms directly, independently of the H coefficients.
    """
    N, R, gamma = params.dim, params.radius, params.gamma
    b = solve_b(params)
    if b == 0.0:
        return 0.0, 0.0, 0.0
    s, c, _, _ = _boundary_shape(b, N)
    X = _lead_weight(N, R, curvature)
    k = solve_k_of_p(params, pt.p, b, curvature)
    sb4 = math.sinh(0.25 * b) ** 2
    sk = math.sinh(0.5 * k)
    boundary = (N / R) * 2.0 * gamma * s * (c - 1.0) / (gamma * c + 1.0)
    weight = gamma * (1.0 + X * _sech2(0.25 * b)) / (gamma * c + 1.0) + pt.p
    value = 4.0 * N * sb4 * sk / (R * (1.0 + X * _sech2(0.25 * k))) * weight
    slope = -(4.0 * N / R) * sb4 * sk * (
        1.0 - math.cosh(0.5 * k) / (1.0 + X * _sech2(0.25 * k)) * weight
    )
    return boundary, value, slope


def half_height_depth(params: ProblemParams, curvature: str = "leading") -> float:
    """q* such that (0, q*) is where u has climbed half way from b to u(R)."""
    N, R, gamma = params.dim, params.radius, params.gamma
    b = solve_b(params)
    c = math.cosh(0.5 * b)
    X = _lead_weight(N, R, curvature)
    return 0.25 * gamma * (1.0 + X * _sech2(0.25 * b)) * (N * c * c - 1.0) * _sech2(0.25 * b) / (gamma * c + 1.0)


def half_height_slope(params: ProblemParams) -> TwoTerm:
    """Two-term slope at the half-height point, written out in b only."""
    N, R, gamma = params.dim, params.radius, params.gamma
    b = solve_b(params)
    s, c, T, P = _boundary_shape(b, N)
    corr = 4 * N * s * math.sinh(0.25 * b) ** 2 + 2 * (N - 1) * T - gamma * P * T * c / (gamma * c + 1)
    return TwoTerm(2.0 * s, -corr / R, power=-1)


# --------------------------------------------------------------------------
# interior decay envelope
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayBound:
    """Envelope amplitude * exp(-rate * (R - r) / eps) for max(|u|, gamma*eps*|u'|)."""

    amplitude: float
    rate: float

    def __call__(self, params: ProblemParams, r):
        return self.amplitude * np.exp(-self.rate * (params.radius - np.asarray(r)) / params.eps)


def decay_bound(params: ProblemParams) -> DecayBound:
    a = abs(params.a0)
    return DecayBound(amplitude=2.0 * a, rate=0.125 / math.sqrt(math.cosh(a)))


def decay_envelope(params: ProblemParams, r: float) -> float:
    """Upper bound for max(|u(r)|, gamma*eps*|u'(r)|) on [0, R]."""
    if not 0.0 <= r <= params.radius:
        raise DomainError(f"r={r} outside [0, {params.radius}]")
    return float(decay_bound(params)(params, float(r)))


# --------------------------------------------------------------------------
# full report
# --------------------------------------------------------------------------


@dataclass
class ExpansionReport:
    params: ProblemParams
    point: LayerPoint
    b: float
    c2: TwoTerm
    uR2: TwoTerm
    duR2: TwoTerm
    dtn2: TwoTerm | None
    k_of_p: float
    H: float
    u_layer2: TwoTerm
    du_layer2: TwoTerm
    vR2: TwoTerm
    dvR2: TwoTerm
    H_sharp: float
    v_layer2: TwoTerm
    dv_layer2: TwoTerm
    diff_limits: tuple[float, float, float]
    trivial: bool = field(default=False)
    curvature: str = "leading"

    def to_dict(self) -> dict:
        def tt(x: TwoTerm | None):
            if x is None:
                return None
            return {"lead": x.lead, "corr": x.corr, "power": x.power, "value": x.value(self.params.eps)}

        out = {"params": self.params.to_dict(), "p": self.point.p, "q": self.point.q, "b": self.b}
        for name in ("c2", "uR2", "duR2", "dtn2", "u_layer2", "du_layer2", "vR2", "dvR2", "v_layer2", "dv_layer2"):
            out[name] = tt(getattr(self, name))
        out.update(k_of_p=self.k_of_p, H=self.H, H_sharp=self.H_sharp,
                   diff_limits=list(self.diff_limits), trivial=self.trivial,
                   curvature=self.curvature)
        return out


def expansion_report(params: ProblemParams, pt: LayerPoint | None = None, uR: TwoTerm | None = None,
                     curvature: str = "leading") -> ExpansionReport:
    """Collect every closed-form quantity for one parameter set and one layer point.

    ``uR`` is the boundary value fed to the DtN map; it defaults to the two-term u(R).
    """
    pt = pt or LayerPoint(0.0, 0.0)
    b = solve_b(params)
    c2, uR2, duR2 = expand_boundary(params)
    trivial = b == 0.0
    dtn2 = None
    if not trivial:
        src = uR if uR is not None else (uR2 if b > 0 else None)
        if src is not None:
            dtn2 = dtn_two_term(params, src)
    u2, du2, H = layer_expansion(params, pt, curvature)
    vR2, dvR2, v2, dv2, Hs = local_model_expansions(params, pt, curvature)
    return ExpansionReport(
        params=params, point=pt, b=b, c2=c2, uR2=uR2, duR2=duR2, dtn2=dtn2,
        k_of_p=solve_k_of_p(params, pt.p, b, curvature), H=H, u_layer2=u2, du_layer2=du2,
        vR2=vR2, dvR2=dvR2, H_sharp=Hs, v_layer2=v2, dv_layer2=dv2,
        diff_limits=comparison_limits(params, pt, curvature), trivial=trivial,
        curvature=curvature,
    )
