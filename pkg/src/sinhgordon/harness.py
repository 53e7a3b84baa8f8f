"""eps-sweeps, convergence-order fits and layer checks against the closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics
from .params import DomainError, LayerPoint, ProblemParams, TwoTerm
from .solver import (Grading, RadialSolution, Sample, build_mesh, sample, solve_extrapolated,
                     solve_local, solve_nonlocal)

REFERENCE_EPS = (0.08, 0.04, 0.02, 0.01, 0.005, 0.0025)
LAYER_P = (0.0, 0.5, 1.0, 2.0)
ORDER_MARGIN = 0.2
LIMIT_RTOL = 0.02
LAYER_RTOL = 0.05
TRIVIAL_ERROR = 1e-12


@dataclass(frozen=True)
class SweepPlan:
    params: ProblemParams
    eps_list: tuple[float, ...] = REFERENCE_EPS
    mesh_n: int = 6000
    grading: str = "geometric"
    curvature: str = "first-order"
    extrapolate: bool = True
    order_margin: float = ORDER_MARGIN
    min_order_override: float | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        if len(eps) < 4:
            raise ValueError("a sweep needs at least 4 eps values")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        asymptotics._lead_weight(self.params.dim, self.params.radius, self.curvature)


@dataclass
class RateFit:
    channel: str
    slope: float
    intercept: float
    max_residual: float
    min_order: float
    passed: bool
    trivial: bool = False

    def to_dict(self) -> dict:
        return dict(channel=self.channel, slope=self.slope, intercept=self.intercept,
                    max_residual=self.max_residual, min_order=self.min_order,
                    passed=self.passed, trivial=self.trivial)


def fit_rate(channel: str, eps, err, min_order: float, max_residual: float = math.inf) -> RateFit:
    """Least-squares slope of log(err) against log(eps)."""
    eps, err = np.asarray(eps, float), np.abs(np.asarray(err, float))
    if np.all(err < TRIVIAL_ERROR):
        return RateFit(channel, math.nan, math.nan, 0.0, min_order, True, trivial=True)
    if np.any(err <= 0):
        raise ValueError(f"channel {channel}: cannot fit a zero error")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    passed = bool(slope >= min_order and resid <= max_residual)
    return RateFit(channel, float(slope), float(intercept), resid, min_order, passed)


@dataclass
class Channel:
    """One error (or limit) quantity tracked along the sweep.

    kind 'order': error must decay at least like eps^min_order.
    kind 'to-zero': error must decrease monotonically and end below rtol * scale.
    kind 'limit': value must end within rtol of ``target`` (relative).
    """

    name: str
    kind: str
    values: list = field(default_factory=list)
    claimed_order: float | None = None
    min_order: float | None = None   # overrides claimed_order - margin
    target: float | None = None
    scale: float | None = None
    required: bool = True
    passed: bool | None = None
    detail: str = ""

    def table(self, eps_list) -> list[tuple[float, float]]:
        return list(zip(eps_list, self.values))


@dataclass
class SweepResult:
    plan: SweepPlan
    channels: dict[str, Channel]
    fits: dict[str, RateFit]
    solutions: dict[float, tuple[RadialSolution, RadialSolution]]
    discretisation: dict[float, float]
    trivial: bool = False

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.channels.values() if ch.required)

    def failures(self) -> list[str]:
        return [n for n, ch in self.channels.items() if ch.required and not ch.passed]

    def budget_ratio(self) -> float:
        """Largest ratio of the Richardson estimate to the smallest required order-channel error at that eps."""
        if self.trivial:
            return 0.0
        ratios = []
        for i, eps in enumerate(self.plan.eps_list):
            errs = [c.values[i] for c in self.channels.values() if c.required and c.kind == "order"]
            ratios.append(self.discretisation[eps] / min(errs))
        return float(max(ratios))


class SweepError(RuntimeError):
    def __init__(self, message: str, eps: float):
        super().__init__(message)
        self.eps = eps


def interpolate_at(sol: RadialSolution, pt: LayerPoint) -> Sample:
    """u and u' at r = R - p eps - (q/R) eps^2 by cubic interpolation, with error estimate."""
    return sample(sol, pt.radius(sol.params))


def half_height_radius(sol: RadialSolution) -> float:
    """Radius where u has dropped half way from u(R) toward the limit value b.

    Monotone bisection on the cubic interpolant inside [R - 10 eps, R].
    """
    p = sol.params
    b = asymptotics.solve_b(p)
    uR = sol.u[-1]
    target = uR - 0.5 * (uR - b)
    lo, hi = max(0.0, p.radius - 10.0 * p.eps), p.radius
    sign = 1.0 if uR > b else -1.0
    if sign * (sample(sol, lo).u - target) > 0:
        raise DomainError("half-height point is not inside [R - 10 eps, R]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sign * (sample(sol, mid).u - target) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * math.ulp(p.radius):
            break
    return 0.5 * (lo + hi)


def layer_points(params: ProblemParams, curvature: str = "first-order") -> list[LayerPoint]:
    qs = asymptotics.half_height_depth(params, curvature) if asymptotics.solve_b(params) != 0 else 0.0
    return [LayerPoint(p, q) for p in LAYER_P for q in (0.0, qs)]


def _point_label(pt: LayerPoint) -> str:
    q = "0" if pt.q == 0.0 else "q*"
    return f"p={pt.p:g},q={q}"


def _rel(value: float, target: float) -> float:
    if target == 0.0:
        return abs(value)
    return abs(value - target) / abs(target)


def run_sweep(plan: SweepPlan) -> SweepResult:
    """Solve the nonlocal and local problems for every eps and fill the error channels."""
    base = plan.params
    curv = plan.curvature
    points = layer_points(base, curv)
    ch: dict[str, Channel] = {}

    def add(name, kind, **kw):
        ch[name] = Channel(name, kind, **kw)

    for name in ("|C-c2|", "|u(R)-uR2|", "eps|u'(R)-duR2|", "|v(R)-vR2|", "eps|v'(R)-dvR2|"):
        add(name, "order", claimed_order=1.5)
    add("|u'(R)-dtn(u(R))|", "order", claimed_order=0.5, min_order=0.4)
    for pt in points:
        lab = _point_label(pt)
        add(f"|u-u2|/eps[{lab}]", "to-zero")
        add(f"|u'-du2|[{lab}]", "to-zero")
        add(f"|v-v2|/eps[{lab}]", "to-zero", required=False)
        add(f"|v'-dv2|[{lab}]", "to-zero", required=False)
        add(f"(u-v)/eps[{lab}]", "limit", required=False)
        add(f"u'-v'[{lab}]", "limit", required=False)
    add("u'(R)-v'(R)", "limit")

    sols, disc = {}, {}
    grading = Grading(kind=plan.grading)
    for eps in plan.eps_list:
        p = base.with_eps(eps)
        try:
            mesh = build_mesh(p, plan.mesh_n, grading)
            if plan.extrapolate:
                u_sol, est_u = solve_extrapolated(p, mesh, "nonlocal")
                v_sol, est_v = solve_extrapolated(p, mesh, "local")
            else:
                u_sol, v_sol = solve_nonlocal(p, mesh), solve_local(p, mesh)
                est_u = est_v = math.nan
        except Exception as exc:  # noqa: BLE001 - any failure aborts the sweep
            raise SweepError(f"solve failed at eps={eps}: {exc}", eps) from exc
        sols[eps] = (u_sol, v_sol)
        disc[eps] = max(est_u, est_v)

        rep = asymptotics.expansion_report(p, curvature=curv)
        ch["|C-c2|"].values.append(abs(u_sol.c - rep.c2.value(eps)))
        ch["|u(R)-uR2|"].values.append(abs(u_sol.u[-1] - rep.uR2.value(eps)))
        ch["eps|u'(R)-duR2|"].values.append(eps * abs(u_sol.du[-1] - rep.duR2.value(eps)))
        ch["|v(R)-vR2|"].values.append(abs(v_sol.u[-1] - rep.vR2.value(eps)))
        ch["eps|v'(R)-dvR2|"].values.append(eps * abs(v_sol.du[-1] - rep.dvR2.value(eps)))
        if rep.trivial:
            ch["|u'(R)-dtn(u(R))|"].values.append(abs(u_sol.du[-1]))
        else:
            dtn = asymptotics.dtn_two_term(p, TwoTerm(abs(u_sol.u[-1]), 0.0))
            ch["|u'(R)-dtn(u(R))|"].values.append(abs(abs(u_sol.du[-1]) - dtn.value(eps)))

        for pt in points:
            lab = _point_label(pt)
            su, sv = interpolate_at(u_sol, pt), interpolate_at(v_sol, pt)
            u2, du2, _ = asymptotics.layer_expansion(p, pt, curv)
            _, _, v2, dv2, _ = asymptotics.local_model_expansions(p, pt, curv)
            lim = asymptotics.comparison_limits(p, pt, curv)
            ch[f"|u-u2|/eps[{lab}]"].values.append(abs(su.u - u2.value(eps)) / eps)
            ch[f"|u'-du2|[{lab}]"].values.append(abs(su.du - du2.value(eps)))
            ch[f"|v-v2|/eps[{lab}]"].values.append(abs(sv.u - v2.value(eps)) / eps)
            ch[f"|v'-dv2|[{lab}]"].values.append(abs(sv.du - dv2.value(eps)))
            ch[f"(u-v)/eps[{lab}]"].values.append((su.u - sv.u) / eps)
            ch[f"u'-v'[{lab}]"].values.append(su.du - sv.du)
            ch[f"|u-u2|/eps[{lab}]"].scale = abs(u2.lead)
            ch[f"|u'-du2|[{lab}]"].scale = abs(du2.lead)
            ch[f"|v-v2|/eps[{lab}]"].scale = abs(v2.lead)
            ch[f"|v'-dv2|[{lab}]"].scale = abs(dv2.lead)
            ch[f"(u-v)/eps[{lab}]"].target = lim[1]
            ch[f"u'-v'[{lab}]"].target = lim[2]
        ch["u'(R)-v'(R)"].values.append(u_sol.du[-1] - v_sol.du[-1])
        ch["u'(R)-v'(R)"].target = asymptotics.comparison_limits(p, LayerPoint(0.0), curv)[2]

    trivial = asymptotics.solve_b(base) == 0.0
    fits = _evaluate(plan, ch, trivial)
    return SweepResult(plan, ch, fits, sols, disc, trivial)


def _evaluate(plan: SweepPlan, ch: dict[str, Channel], trivial: bool) -> dict[str, RateFit]:
    fits = {}
    eps = plan.eps_list
    for c in ch.values():
        vals = np.asarray(c.values, float)
        if trivial or np.all(np.abs(vals) < TRIVIAL_ERROR):
            c.passed, c.detail = True, "trivial"
            if c.kind == "order":
                fits[c.name] = fit_rate(c.name, eps, vals, 0.0)
            continue
        if c.kind == "order":
            if plan.min_order_override is not None:
                need = plan.min_order_override
            elif c.min_order is not None:
                need = c.min_order
            else:
                need = c.claimed_order - plan.order_margin
            fit = fit_rate(c.name, eps, vals, need, max_residual=ORDER_MARGIN)
            fits[c.name] = fit
            c.passed = fit.passed
            c.detail = f"slope {fit.slope:.3f} (need >= {need:.2f}), residual {fit.max_residual:.3f}"
        elif c.kind == "to-zero":
            mono = bool(np.all(np.diff(vals) < 0))
            final = vals[-1] / c.scale if c.scale else math.inf
            c.passed = mono and final <= LAYER_RTOL
            c.detail = f"monotone={mono}, final/scale={final:.3e}"
        else:
            rel = _rel(vals[-1], c.target)
            c.passed = rel <= LIMIT_RTOL
            c.detail = f"final {vals[-1]:.6g} vs limit {c.target:.6g}, rel {rel:.3e}"
    return fits


# ---------------------------------------------------------------------------
# layer dichotomy
# ---------------------------------------------------------------------------


@dataclass
class DichotomyEvidence:
    passed: bool
    trivial: bool
    floors: dict[float, tuple[float, float]]          # c -> (u floor, eps u' floor)
    minima: dict[float, tuple[float, float]]          # c -> (min u, min eps u') over the sweep
    interior: list[tuple[float, float, float, float]]  # (eps, u, eps u', envelope) at R - sqrt(eps)
    detail: str = ""


def dichotomy_check(sols: list[RadialSolution], cs=(0.5, 1.0, 2.0), curvature: str = "first-order") -> DichotomyEvidence:
    """Layer points R - c eps keep O(1) height and slope; R - sqrt(eps) decays to 0."""
    if len(sols) < 4:
        raise ValueError("dichotomy check needs at least 4 eps values")
    sols = sorted(sols, key=lambda s: -s.params.eps)
    p0 = sols[0].params
    if asymptotics.solve_b(p0) == 0.0:
        return DichotomyEvidence(True, True, {}, {}, [], "a0 = 0: vacuous")
    ok = True
    floors, minima = {}, {}
    for c in cs:
        k = abs(asymptotics.solve_k_of_p(p0, c, curvature=curvature))
        floors[c] = (0.5 * k, 0.5 * 2.0 * math.sinh(0.5 * k))
        us, dus = [], []
        for s in sols:
            smp = interpolate_at(s, LayerPoint(c, 0.0))
            us.append(abs(smp.u))
            dus.append(abs(s.params.eps * smp.du))
        minima[c] = (min(us), min(dus))
        ok &= minima[c][0] > floors[c][0] and minima[c][1] > floors[c][1]
    interior = []
    for s in sols:
        r = s.params.radius - math.sqrt(s.params.eps)
        if r < 0:
            raise DomainError("R - sqrt(eps) is negative")
        smp = sample(s, r)
        env = asymptotics.decay_envelope(s.params, r)
        interior.append((s.params.eps, abs(smp.u), abs(s.params.eps * smp.du), env))
    u_seq = [x[1] for x in interior]
    d_seq = [x[2] for x in interior]
    decreasing = all(b < a for a, b in zip(u_seq, u_seq[1:])) and all(b < a for a, b in zip(d_seq, d_seq[1:]))
    below = all(u <= env and s.params.gamma * d <= env for (_, u, d, env), s in zip(interior, sols))
    ok &= decreasing and below
    return DichotomyEvidence(bool(ok), False, floors, minima, interior,
                             f"interior decreasing={decreasing}, below envelope={below}")


def decay_violations(sol: RadialSolution) -> int:
    """Number of nodes where max(|u|, gamma eps |u'|) exceeds the interior envelope."""
    p = sol.params
    env = asymptotics.decay_bound(p)(p, sol.mesh.nodes)
    m = np.maximum(np.abs(sol.u), p.gamma * p.eps * np.abs(sol.du))
    return int(np.count_nonzero(m > env * (1 + 1e-12)))
