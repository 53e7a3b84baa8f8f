"""Command-line front end: solve, expand, sweep, concentrate, dichotomy.

Every subcommand accepts the problem flags and an optional flat JSON config;
flags override config values. Outputs are CSV/JSON files written atomically
into ``--out``.

Exit codes: 0 success, 1 acceptance failure, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields

from . import asymptotics, concentration, harness
from .params import DomainError, LayerPoint, ProblemParams
from .solver import (Grading, SolverError, SolverOptions, UnderResolvedError, build_mesh, solve_extrapolated,
                     solve_local, solve_nonlocal)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    N: float = 2.0
    R: float = 1.0
    gamma: float = 1.0
    a0: float = 2.0
    eps: float = 0.01
    mesh_n: int = 6000
    grading: str = "geometric"
    model: str = "nonlocal"
    out: str = "."
    format: str = "csv"
    curvature: str = "first-order"
    eps_list: tuple = harness.REFERENCE_EPS
    p_grid: tuple = (0.0, 0.5, 1.0, 2.0)
    q_grid: tuple = (0.0,)
    window_p: float = 1.0
    min_order: float | None = None
    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    max_iter: int = 60

    def validate(self) -> None:
        try:
            self.params()
            Grading(kind=self.grading)
            asymptotics._lead_weight(self.N, self.R, self.curvature)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.model not in ("nonlocal", "local"):
            raise ConfigError(f"model must be 'nonlocal' or 'local', got {self.model!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {self.format!r}")
        if int(self.mesh_n) != self.mesh_n or self.mesh_n < 50:
            raise ConfigError("mesh_n must be an integer >= 50")
        eps = list(self.eps_list)
        if len(eps) < 4 or any(b >= a for a, b in zip(eps, eps[1:])) or min(eps) <= 0:
            raise ConfigError("eps_list needs >= 4 strictly decreasing positive values")
        if any(p < 0 or not math.isfinite(p) for p in self.p_grid) or not self.p_grid:
            raise ConfigError("p_grid must be a non-empty list of non-negative numbers")
        if not self.q_grid or any(not math.isfinite(q) for q in self.q_grid):
            raise ConfigError("q_grid must be a non-empty list of finite numbers")
        if self.window_p <= 0:
            raise ConfigError("window_p must be positive")
        if self.tol_residual <= 0 or self.tol_step <= 0 or self.max_iter < 1:
            raise ConfigError("solver tolerances must be positive")

    def params(self, eps: float | None = None) -> ProblemParams:
        return ProblemParams(self.N, self.R, self.gamma, self.a0, self.eps if eps is None else eps)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol_residual=self.tol_residual, tol_step=self.tol_step, max_iter=self.max_iter)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("eps_list", "p_grid", "q_grid"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        for key in ("eps_list", "p_grid", "q_grid"):
            if key in data:
                if not isinstance(data[key], (list, tuple)):
                    raise ConfigError(f"{key} must be a list")
                data[key] = tuple(float(x) for x in data[key])
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; str for everything else."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, data) -> None:
    write_atomic(path, json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    write_atomic(path, buf.getvalue())


def _out(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> int:
    p = cfg.params()
    sidecar = {"params": p.to_dict(), "model": cfg.model, "mesh_n": cfg.mesh_n, "grading": cfg.grading}
    try:
        mesh = build_mesh(p, cfg.mesh_n, cfg.grading)
        solve = solve_nonlocal if cfg.model == "nonlocal" else solve_local
        sol = solve(p, mesh, cfg.solver_options())
    except (SolverError, UnderResolvedError) as exc:
        sidecar.update(status="failed", error=str(exc), residual=getattr(exc, "residual", None),
                       required_nodes=getattr(exc, "required", None))
        write_json(_out(cfg, "solution.json"), sidecar)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    sidecar.update(status="ok", C=float(sol.c), residual=float(sol.residual_norm), iters=sol.newton_iters,
                   nodes=len(sol.u))
    rows = [(float(r), float(u), float(d), sol.model) for r, u, d in zip(sol.r, sol.u, sol.du)]
    if cfg.format == "csv":
        write_csv(_out(cfg, "solution.csv"), ["r", "u", "du", "model"], rows)
    else:
        sidecar["r"], sidecar["u"], sidecar["du"] = sol.r.tolist(), sol.u.tolist(), sol.du.tolist()
    write_json(_out(cfg, "solution.json"), sidecar)
    return EXIT_OK


def cmd_expand(cfg: RunConfig) -> int:
    p = cfg.params()
    report = asymptotics.expansion_report(p, curvature=cfg.curvature).to_dict()
    trivial = report["trivial"]
    q_star = 0.0 if trivial else asymptotics.half_height_depth(p, cfg.curvature)
    report["half_height"] = {"q_star": q_star, "depth_over_eps2": q_star / p.radius,
                             "slope": None if trivial else asymptotics.half_height_slope(p).value(p.eps)}
    grid, rows = [], []
    points = [LayerPoint(pp, q) for pp in cfg.p_grid for q in cfg.q_grid]
    if not trivial:
        points.append(LayerPoint(0.0, q_star))
    try:
        for pt in points:
            pt.radius(p)
    except DomainError as exc:
        raise ConfigError(f"invalid (p, q) grid: {exc}") from exc
    for i, pt in enumerate(points):
        u2, du2, _ = asymptotics.layer_expansion(p, pt, cfg.curvature)
        _, _, v2, dv2, _ = asymptotics.local_model_expansions(p, pt, cfg.curvature)
        k = asymptotics.solve_k_of_p(p, pt.p, curvature=cfg.curvature)
        row = (pt.p, pt.q, k, u2.value(p.eps), du2.value(p.eps), v2.value(p.eps), dv2.value(p.eps))
        rows.append(row)
        grid.append(dict(zip(("p", "q", "k_p", "u2", "du2", "v2", "dv2"), row),
                         half_height=(not trivial and i == len(points) - 1)))
    report["grid"] = grid
    write_json(_out(cfg, "expansion.json"), report)
    if cfg.format == "csv":
        write_csv(_out(cfg, "expansion_grid.csv"), ["p", "q", "k_p", "u2", "du2", "v2", "dv2"], rows)
    return EXIT_OK


def _sanitize(name: str) -> str:
    keep = "".join(ch if ch.isalnum() else "_" for ch in name)
    return "_".join(part for part in keep.split("_") if part)


def cmd_sweep(cfg: RunConfig) -> int:
    plan = harness.SweepPlan(cfg.params(), tuple(cfg.eps_list), cfg.mesh_n, cfg.grading, cfg.curvature,
                             min_order_override=cfg.min_order)
    try:
        res = harness.run_sweep(plan)
    except harness.SweepError as exc:
        write_json(_out(cfg, "ratefits.json"), {"status": "failed", "error": str(exc), "eps": exc.eps})
        print(f"sweep failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    channels = {}
    for name, ch in res.channels.items():
        fname = f"sweep_{_sanitize(name)}.csv"
        if cfg.format == "csv":
            write_csv(_out(cfg, fname), ["eps", "error"], ch.table(plan.eps_list))
        channels[name] = {"kind": ch.kind, "required": ch.required, "passed": ch.passed, "detail": ch.detail,
                          "target": ch.target, "values": list(ch.values), "file": fname}
    out = {"params": cfg.params().to_dict(), "eps_list": list(plan.eps_list), "curvature": cfg.curvature,
           "trivial": res.trivial, "passed": res.passed, "failures": res.failures(),
           "fits": {k: f.to_dict() for k, f in res.fits.items()}, "channels": channels,
           "discretisation_estimate": {repr(k): v for k, v in res.discretisation.items()},
           "budget_ratio": res.budget_ratio()}
    write_json(_out(cfg, "ratefits.json"), out)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_concentrate(cfg: RunConfig) -> int:
    base = cfg.params()
    b = asymptotics.solve_b(base)
    Fs, hs = concentration.standard_F_suite(), concentration.standard_h_suite()
    kp = asymptotics.solve_k_of_p(base, cfg.window_p, b, cfg.curvature) if b != 0 else 0.0
    rows = []
    for eps in cfg.eps_list:
        p = base.with_eps(eps)
        try:
            sol, _ = solve_extrapolated(p, build_mesh(p, cfg.mesh_n, cfg.grading))
        except (SolverError, UnderResolvedError) as exc:
            print(f"solver failure at eps={eps}: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        for fname, F in Fs.items():
            for hname, h in hs.items():
                for mode in ("gradient", "value"):
                    for window in (None, cfg.window_p):
                        emp = concentration.empirical_pairing(sol, F, h, mode, window)
                        if b == 0.0:
                            lim = 0.0
                        else:
                            lim = concentration.pairing_limit(F, h, b, p.radius, mode,
                                                              None if window is None else kp)
                        err = abs(emp - lim) / abs(lim) if abs(lim) > 1e-12 else abs(emp - lim)
                        wname = "full" if window is None else f"p={window:g}"
                        rows.append((fname, hname, mode, wname, float(eps), emp, lim, err))
    header = ["F", "h", "mode", "window", "eps", "empirical", "limit", "relerr"]
    if cfg.format == "csv":
        write_csv(_out(cfg, "concentration.csv"), header, rows)
    else:
        write_json(_out(cfg, "concentration.json"), [dict(zip(header, r)) for r in rows])
    return EXIT_OK


def cmd_dichotomy(cfg: RunConfig) -> int:
    sols = []
    for eps in cfg.eps_list:
        p = cfg.params(eps)
        try:
            sols.append(solve_nonlocal(p, build_mesh(p, cfg.mesh_n, cfg.grading), cfg.solver_options()))
        except (SolverError, UnderResolvedError) as exc:
            print(f"solver failure at eps={eps}: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    ev = harness.dichotomy_check(sols, curvature=cfg.curvature)
    write_json(_out(cfg, "dichotomy.json"), {
        "passed": ev.passed, "trivial": ev.trivial, "detail": ev.detail,
        "floors": {repr(c): list(v) for c, v in ev.floors.items()},
        "minima": {repr(c): list(v) for c, v in ev.minima.items()},
        "interior": [dict(zip(("eps", "u", "eps_du", "envelope"), row)) for row in ev.interior],
    })
    return EXIT_OK if ev.passed else EXIT_FAIL


COMMANDS = {"solve": cmd_solve, "expand": cmd_expand, "sweep": cmd_sweep,
            "concentrate": cmd_concentrate, "dichotomy": cmd_dichotomy}

# flag name -> config key
_FLAGS = {"N": "N", "R": "R", "gamma": "gamma", "a0": "a0", "eps": "eps", "mesh_n": "mesh_n",
          "grading": "grading", "out": "out", "format": "format", "model": "model",
          "curvature": "curvature", "eps_list": "eps_list", "p_grid": "p_grid", "q_grid": "q_grid",
          "window_p": "window_p", "min_order": "min_order", "tol_residual": "tol_residual",
          "tol_step": "tol_step", "max_iter": "max_iter"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--config", help="flat JSON config; flags override its values")
    g.add_argument("--N", type=float)
    g.add_argument("--R", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--a0", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--mesh-n", dest="mesh_n", type=int)
    g.add_argument("--grading", choices=("geometric", "uniform"))
    g.add_argument("--out")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--curvature", choices=asymptotics.CURVATURE_FORMS,
                   help="placement of the curvature terms in the layer-interior closed forms")
    g.add_argument("--tol-residual", dest="tol_residual", type=float)
    g.add_argument("--tol-step", dest="tol_step", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)

    parser = argparse.ArgumentParser(prog="sinhgordon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve the nonlocal or local BVP")
    s.add_argument("--model", choices=("nonlocal", "local"))
    e = sub.add_parser("expand", parents=[common], help="tabulate the closed-form expansions")
    e.add_argument("--p-grid", dest="p_grid", type=float, nargs="+")
    e.add_argument("--q-grid", dest="q_grid", type=float, nargs="+")
    w = sub.add_parser("sweep", parents=[common], help="eps-sweep with convergence-order fits")
    w.add_argument("--eps-list", dest="eps_list", type=float, nargs="+")
    w.add_argument("--min-order", dest="min_order", type=float, help="override every order threshold")
    c = sub.add_parser("concentrate", parents=[common], help="concentration pairings over the standard suites")
    c.add_argument("--eps-list", dest="eps_list", type=float, nargs="+")
    c.add_argument("--window-p", dest="window_p", type=float)
    d = sub.add_parser("dichotomy", parents=[common], help="layer/interior dichotomy evidence")
    d.add_argument("--eps-list", dest="eps_list", type=float, nargs="+")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for flag, key in _FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
