"""Finite-volume solver for the radial nonlocal and local sinh-Gordon problems.

Discretisation
--------------
Vertex-centred finite volumes on a smoothly graded mesh 0 = r_0 < ... < r_M = R.
Cell i spans [r_{i-1/2}, r_{i+1/2}] (arithmetic midpoints, clipped to [0, R]) and
carries the radial measure V_i = int s^(N-1) ds. Fluxes are
F_{i+1/2} = m^(N-1) (u_{i+1} - u_i) / h with m the midpoint. The scheme reads

    eps^2 (F_{i+1/2} - F_{i-1/2}) = C V_i sinh(u_i)

with F_{-1/2} = 0 (this is the symmetry closure eps^2 N u''(0) = C sinh u(0))
and, at r = R, the Robin flux R^(N-1) (a0 - u_M) / (gamma eps) in place of
F_{M+1/2}. The nonlocal coefficient is an extra unknown closed by
C * sum_i V_i cosh(u_i) = |B_R|. These equations are exactly the stationarity
conditions of :func:`energy`, so the discrete solution is its unique minimiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import solve_banded

from . import asymptotics
from .params import DomainError, ProblemParams


class UnderResolvedError(ValueError):
    """The mesh does not put enough nodes inside the boundary layer."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class SolverError(RuntimeError):
    """Newton (or Picard) iteration failed to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------

LAYER_WIDTH = 10.0   # in units of eps
NODES_PER_EPS = 20   # minimum resolution inside the layer


@dataclass(frozen=True)
class Grading:
    """Mesh grading descriptor.

    ``geometric`` uses node density A + B exp(-(R - r) / (decay * eps)): spacing grows
    geometrically away from r = R and levels off in the interior. B is chosen so
    that ``layer_fraction`` of the cells fall inside [R - 10 eps, R].
    """

    kind: str = "geometric"
    layer_fraction: float = 0.5
    decay: float = 3.0

    def __post_init__(self):
        if self.kind not in ("uniform", "geometric"):
            raise ValueError(f"unknown grading {self.kind!r}")
        if not 0.0 < self.layer_fraction < 0.9:
            raise ValueError("layer_fraction must lie in (0, 0.9)")
        if self.decay <= 0:
            raise ValueError("decay must be positive")


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    grading: Grading
    radius: float
    eps: float
    density: tuple[float, float, float] = (1.0, 0.0, 1.0)   # (A, B, length scale)

    @property
    def size(self) -> int:
        return len(self.nodes) - 1

    def layer_count(self) -> int:
        width = min(LAYER_WIDTH * self.eps, self.radius)
        return int(np.count_nonzero(self.nodes >= self.radius - width))

    def refined(self) -> Mesh:
        """Mesh with every cell split at the mapped midpoint; old nodes are kept."""
        xi = np.linspace(0.0, 1.0, 2 * self.size + 1)
        nodes = _map_nodes(xi, self.radius, self.density)
        nodes[::2] = self.nodes
        return replace(self, nodes=nodes)


def _cumulative_density(r, R: float, density: tuple[float, float, float]):
    A, B, L = density
    return A * r + B * L * (np.exp(-(R - r) / L) - math.exp(-R / L))


def _map_nodes(xi: np.ndarray, R: float, density: tuple[float, float, float]) -> np.ndarray:
    if density[1] == 0.0:
        nodes = R * xi
    else:
        target = xi * _cumulative_density(R, R, density)
        lo, hi = np.zeros_like(xi), np.full_like(xi, R)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = _cumulative_density(mid, R, density) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        nodes = 0.5 * (lo + hi)
    nodes[0], nodes[-1] = 0.0, R
    return nodes


def build_mesh(params: ProblemParams, n_interior: int = 4000, grading: Grading | str = "geometric") -> Mesh:
    """Graded radial mesh with ``n_interior`` cells resolving the O(eps) layer at R."""
    if n_interior < 50:
        raise ValueError("n_interior must be at least 50")
    if isinstance(grading, str):
        grading = Grading(kind=grading)
    R, eps = params.radius, params.eps
    width = min(LAYER_WIDTH * eps, R)
    density = (1.0, 0.0, 1.0)
    if grading.kind == "geometric":
        L = grading.decay * eps
        f = grading.layer_fraction
        in_layer = 1.0 - math.exp(-width / L)
        in_total = 1.0 - math.exp(-R / L)
        B = max(0.0, (f * R - width) / (L * (in_layer - f * in_total)))
        density = (1.0, B, L)
    nodes = _map_nodes(np.linspace(0.0, 1.0, n_interior + 1), R, density)
    mesh = Mesh(nodes=nodes, grading=grading, radius=R, eps=eps, density=density)
    required = math.ceil(width / (eps / NODES_PER_EPS) - 1e-9)
    if mesh.layer_count() < required:
        raise UnderResolvedError(
            f"mesh has {mesh.layer_count()} nodes in [R-{width:g}, R]; at least {required} required",
            required,
        )
    return mesh


@dataclass(frozen=True, eq=False)
class _Geometry:
    """Cell measures and flux coefficients of a mesh for a given dimension."""

    vol: np.ndarray     # V_i
    flux: np.ndarray    # m^(N-1) / h for each of the M faces
    total: float        # sum V_i = R^N / N

    @classmethod
    def of(cls, mesh: Mesh, dim: float) -> _Geometry:
        r = mesh.nodes
        h = np.diff(r)
        mid = 0.5 * (r[:-1] + r[1:])
        edges = np.concatenate(([0.0], mid, [mesh.radius]))
        lo, hi = edges[:-1], edges[1:]
        vol = np.empty_like(r)
        vol[0] = hi[0] ** dim / dim
        # int_lo^hi s^(N-1) ds without cancellation
        vol[1:] = lo[1:] ** dim * np.expm1(dim * np.log1p((hi[1:] - lo[1:]) / lo[1:])) / dim
        return cls(vol=vol, flux=mid ** (dim - 1.0) / h, total=mesh.radius**dim / dim)


# ---------------------------------------------------------------------------
# solution container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverOptions:
    tol_residual: float = 1e-10     # scaled by max(1, |a0|)
    tol_step: float = 1e-12
    max_iter: int = 60
    max_halvings: int = 30
    continuation: bool = True


@dataclass(eq=False)
class RadialSolution:
    params: ProblemParams
    mesh: Mesh
    u: np.ndarray
    c: float
    model: str = "nonlocal"
    newton_iters: int = 0
    residual_norm: float = 0.0
    converged: bool = True
    du: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.model not in ("nonlocal", "local"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.du is None:
            self.du = reconstruct_derivative(self, use_bc=self.converged)

    @property
    def r(self) -> np.ndarray:
        return self.mesh.nodes

    def robin_defect(self) -> float:
        p = self.params
        return abs(self.u[-1] + p.gamma * p.eps * self.du[-1] - p.a0)


def profile(params: ProblemParams, mesh: Mesh, u, c: float | None = None, model: str = "nonlocal") -> RadialSolution:
    """Wrap an arbitrary nodal profile (not a solve result) for energy evaluation or tests."""
    u = np.asarray(u, dtype=float)
    if c is None:
        c = 1.0 if model == "local" else nonlocal_coefficient(params, mesh, u)
    return RadialSolution(params, mesh, u, c, model=model, converged=False)


def nonlocal_coefficient(params: ProblemParams, mesh: Mesh, u: np.ndarray) -> float:
    geo = _Geometry.of(mesh, params.dim)
    return geo.total / math.fsum(geo.vol * np.cosh(u))


# ---------------------------------------------------------------------------
# discrete operator
# ---------------------------------------------------------------------------


def _residual(params: ProblemParams, geo: _Geometry, u: np.ndarray, c: float) -> np.ndarray:
    eps2 = params.eps**2
    F = geo.flux * np.diff(u)
    div = np.empty_like(u)
    div[0] = F[0]
    div[1:-1] = F[1:] - F[:-1]
    robin = params.radius ** (params.dim - 1.0) * (params.a0 - u[-1]) / (params.gamma * params.eps)
    div[-1] = robin - F[-1]
    return eps2 * div / geo.vol - c * np.sinh(u)


def _jacobian_bands(params: ProblemParams, geo: _Geometry, u: np.ndarray, c: float) -> np.ndarray:
    """Tridiagonal d(residual)/du in solve_banded layout (3, M+1)."""
    eps2 = params.eps**2
    n = len(u)
    ab = np.zeros((3, n))
    upper = eps2 * geo.flux / geo.vol[:-1]
    lower = eps2 * geo.flux / geo.vol[1:]
    ab[0, 1:] = upper
    ab[2, :-1] = lower
    diag = -c * np.cosh(u)
    diag[:-1] -= upper
    diag[1:] -= lower
    diag[-1] -= eps2 * params.radius ** (params.dim - 1.0) / (params.gamma * params.eps) / geo.vol[-1]
    ab[1] = diag
    return ab


def _scaled_norm(F: np.ndarray, ab: np.ndarray) -> float:
    # residual in units of u: each equation divided by its diagonal
    return float(np.max(np.abs(F / ab[1])))


def _constraint(geo: _Geometry, u: np.ndarray, c: float) -> float:
    return c * math.fsum(geo.vol * np.cosh(u)) / geo.total - 1.0


def _initial_guess(params: ProblemParams, mesh: Mesh) -> tuple[np.ndarray, float]:
    b = asymptotics.solve_b(params)
    depth = (params.radius - mesh.nodes) / params.eps
    u = 4.0 * np.arctanh(math.tanh(0.25 * b) * np.exp(-depth))
    c2 = asymptotics.expand_boundary(params)[0].value(params.eps)
    c = min(1.0, max(c2, 1.0 / math.cosh(params.a0)))
    return u, c


def _newton(params, geo, u, c, opts: SolverOptions, coupled: bool):
    """Damped Newton on (u, C) (coupled) or on u with C frozen."""
    tol = opts.tol_residual * max(1.0, abs(params.a0))
    norm = math.inf

    def merit(u, c):
        F = _residual(params, geo, u, c)
        ab = _jacobian_bands(params, geo, u, c)
        g = _constraint(geo, u, c) if coupled else 0.0
        return F, ab, g, max(_scaled_norm(F, ab), abs(g))

    F, ab, g, norm = merit(u, c)
    for it in range(1, opts.max_iter + 1):
        if coupled:
            col = -np.sinh(u)
            x = solve_banded((1, 1), ab, np.column_stack((-F, col)))
            x1, x2 = x[:, 0], x[:, 1]
            row = c * geo.vol * np.sinh(u) / geo.total
            g_c = math.fsum(geo.vol * np.cosh(u)) / geo.total
            dc = -(g + row @ x1) / (g_c - row @ x2)
            du = x1 - dc * x2
        else:
            du = solve_banded((1, 1), ab, -F)
            dc = 0.0
        step = max(float(np.max(np.abs(du))), abs(dc))
        if norm <= tol and step <= opts.tol_step:
            u, c = u + du, c + dc
            F, ab, g, norm = merit(u, c)
            return u, c, it, norm
        t = 1.0
        for _ in range(opts.max_halvings):
            Ft, abt, gt, nt = merit(u + t * du, c + t * dc)
            if np.isfinite(nt) and nt <= (1.0 - 1e-4 * t) * norm:
                break
            if norm <= tol and np.isfinite(nt) and nt <= 10 * tol:
                break   # round-off floor: accept the full step
            t *= 0.5
        else:
            raise SolverError(f"line search failed at iteration {it}", norm)
        u, c = u + t * du, c + t * dc
        F, ab, g, norm = Ft, abt, gt, nt
    raise SolverError(f"Newton did not converge in {opts.max_iter} iterations", norm)


def _solve(params: ProblemParams, mesh: Mesh, opts: SolverOptions, model: str, guess=None) -> RadialSolution:
    if mesh.radius != params.radius:
        raise DomainError("mesh radius does not match params.radius")
    geo = _Geometry.of(mesh, params.dim)
    coupled = model == "nonlocal"
    if params.a0 == 0.0:
        u = np.zeros_like(mesh.nodes)
        return RadialSolution(params, mesh, u, 1.0, model=model, du=np.zeros_like(u))
    if guess is None:
        u0, c0 = _initial_guess(params, mesh)
    else:
        u0, c0 = guess
    if not coupled:
        c0 = 1.0
    try:
        u, c, its, norm = _newton(params, geo, u0, c0, opts, coupled)
    except SolverError:
        if not opts.continuation or guess is not None:
            raise
        u, c, its, norm = _continuation(params, mesh, geo, opts, coupled)
    return RadialSolution(params, mesh, u, c, model=model, newton_iters=its, residual_norm=norm)


def _continuation(params, mesh, geo, opts, coupled):
    """Solve at a sequence of larger eps and step down, seeding each Newton solve."""
    eps_chain = [params.eps * 2.0**j for j in range(6, 0, -1)] + [params.eps]
    sol = None
    for eps in eps_chain:
        p = params.with_eps(eps)
        if sol is None:
            u0, c0 = _initial_guess(p, mesh)
        else:
            u0, c0 = np.interp(mesh.nodes, sol[0], sol[1]), sol[2]
        g = geo if eps == params.eps else _Geometry.of(mesh, params.dim)
        u, c, its, norm = _newton(p, g, u0, c0 if coupled else 1.0, opts, coupled)
        sol = (mesh.nodes, u, c)
    return u, c, its, norm


def solve_nonlocal(params: ProblemParams, mesh: Mesh, opts: SolverOptions | None = None) -> RadialSolution:
    """Coupled Newton solve of the nonlocal problem with C(u) as an unknown."""
    return _solve(params, mesh, opts or SolverOptions(), "nonlocal")


def solve_local(params: ProblemParams, mesh: Mesh, opts: SolverOptions | None = None) -> RadialSolution:
    """Newton solve of the local sinh-Gordon problem (coefficient fixed to 1)."""
    return _solve(params, mesh, opts or SolverOptions(), "local")


def solve_picard(params: ProblemParams, mesh: Mesh, opts: SolverOptions | None = None,
                 tol_c: float = 1e-15, max_outer: int = 200) -> RadialSolution:
    """Fixed-point iteration on the nonlocal coefficient.

    Each outer step freezes C, solves the resulting local problem by Newton and
    recomputes C from the quadrature. Used to cross-check :func:`solve_nonlocal`.
    """
    opts = opts or SolverOptions()
    geo = _Geometry.of(mesh, params.dim)
    if params.a0 == 0.0:
        return _solve(params, mesh, opts, "nonlocal")
    u, c = _initial_guess(params, mesh)
    total_its = 0
    for _ in range(max_outer):
        u, _, its, norm = _newton(params, geo, u, c, opts, coupled=False)
        total_its += its
        c_new = geo.total / math.fsum(geo.vol * np.cosh(u))
        done = abs(c_new - c) <= tol_c * c_new
        c = c_new
        if done:
            u, _, its, norm = _newton(params, geo, u, c, opts, coupled=False)
            return RadialSolution(params, mesh, u, c, newton_iters=total_its + its, residual_norm=norm)
    raise SolverError("Picard iteration on C did not converge", norm)


def richardson(coarse: RadialSolution, fine: RadialSolution) -> tuple[RadialSolution, float]:
    """Extrapolate two solves on nested meshes (fine = coarse.refined()).

    Returns the extrapolated solution on the coarse nodes and the two-mesh
    estimate max|u_fine - u_coarse| / 3 of the coarse-mesh error.
    """
    if not np.array_equal(fine.mesh.nodes[::2], coarse.mesh.nodes):
        raise ValueError("meshes are not nested")
    uf = fine.u[::2]
    u = (4.0 * uf - coarse.u) / 3.0
    c = (4.0 * fine.c - coarse.c) / 3.0
    estimate = float(np.max(np.abs(uf - coarse.u))) / 3.0
    sol = RadialSolution(coarse.params, coarse.mesh, u, c, model=coarse.model,
                         newton_iters=fine.newton_iters, residual_norm=fine.residual_norm)
    return sol, estimate


def solve_extrapolated(params: ProblemParams, mesh: Mesh, model: str = "nonlocal",
                       opts: SolverOptions | None = None) -> tuple[RadialSolution, float]:
    solve = solve_nonlocal if model == "nonlocal" else solve_local
    coarse = solve(params, mesh, opts)
    fine = solve(params, mesh.refined(), opts)
    return richardson(coarse, fine)


# ---------------------------------------------------------------------------
# post-processing
# ---------------------------------------------------------------------------


def fd_weights(stencil: np.ndarray, x0: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights (Fornberg) for derivative ``order`` at ``x0``.

    ``stencil`` has shape (n, m): one row of m abscissae per evaluation point.
    """
    stencil = np.asarray(stencil, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n, m = stencil.shape
    c = np.zeros((n, m, order + 1))
    c[:, 0, 0] = 1.0
    c1 = np.ones(n)
    c4 = stencil[:, 0] - x0
    for i in range(1, m):
        mn = min(i, order)
        c2 = np.ones(n)
        c5 = c4
        c4 = stencil[:, i] - x0
        for j in range(i):
            c3 = stencil[:, i] - stencil[:, j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[:, i, k] = c1 * (k * c[:, i - 1, k - 1] - c5 * c[:, i - 1, k]) / c2
                c[:, i, 0] = -c1 * c5 * c[:, i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[:, j, k] = (c4 * c[:, j, k] - k * c[:, j, k - 1]) / c3
            c[:, j, 0] = c4 * c[:, j, 0] / c3
        c1 = c2
    return c[:, :, order]


def stencil_indices(n_nodes: int, centres: np.ndarray, width: int) -> np.ndarray:
    """Indices of ``width`` consecutive nodes around each centre, shifted inside [0, n)."""
    start = np.clip(np.asarray(centres) - width // 2, 0, n_nodes - width)
    return start[:, None] + np.arange(width)[None, :]


def reconstruct_derivative(sol: RadialSolution, use_bc: bool = True) -> np.ndarray:
    """Nodal u' from five-point (fourth-order) stencils on the graded mesh.

    With ``use_bc`` the end values come from the boundary conditions: u'(0) = 0 and
    the Robin identity u'(R) = (a0 - u(R)) / (gamma eps), which is the discrete
    boundary flux of the scheme.
    """
    r, u = sol.mesh.nodes, np.asarray(sol.u, dtype=float)
    idx = stencil_indices(len(r), np.arange(len(r)), 5)
    w = fd_weights(r[idx], r, 1)
    # weights sum to zero; differencing against the centre value limits round-off
    du = np.einsum("ij,ij->i", w, u[idx] - u[:, None])
    if use_bc:
        p = sol.params
        du[0] = 0.0
        du[-1] = (p.a0 - u[-1]) / (p.gamma * p.eps)
    return du


def energy(sol: RadialSolution) -> float:
    """Discrete energy whose stationarity conditions are the finite-volume scheme.

    eps^2/2 int u'^2 r^(N-1) + |B_R| log(avg cosh u) + eps/(2 gamma) R^(N-1) (u(R) - a0)^2.
    """
    p = sol.params
    geo = _Geometry.of(sol.mesh, p.dim)
    u = np.asarray(sol.u, dtype=float)
    dirichlet = 0.5 * p.eps**2 * math.fsum(geo.flux * np.diff(u) ** 2)
    mean_cosh = math.fsum(geo.vol * np.cosh(u)) / geo.total
    boundary = p.eps / (2.0 * p.gamma) * p.radius ** (p.dim - 1.0) * (u[-1] - p.a0) ** 2
    return dirichlet + geo.total * math.log(mean_cosh) + boundary


def integro_identity_check(sol: RadialSolution) -> tuple[float, float]:
    """First integral eps^2/2 u'^2 + (N-1) eps^2 int_{R/2}^t u'^2/r - C cosh u on [R/2, R].

    The expression is constant for an exact solution. Returns (mean, max deviation
    from the mean); the mean estimates the integration constant.
    """
    if not sol.converged:
        raise ValueError("integro-differential check needs a converged solution")
    p = sol.params
    r = sol.mesh.nodes
    mask = r >= 0.5 * p.radius
    rr, u, du = r[mask], sol.u[mask], sol.du[mask]
    if len(rr) < 3:
        raise ValueError("too few nodes in [R/2, R]")
    integral = cumulative_simpson(du**2 / rr, x=rr, initial=0.0)
    phi = 0.5 * p.eps**2 * du**2 + (p.dim - 1.0) * p.eps**2 * integral - sol.c * np.cosh(u)
    mean = float(np.mean(phi))
    return mean, float(np.max(np.abs(phi - mean)))


@dataclass(frozen=True)
class Sample:
    """Interpolated u and u' at one radius, with cubic-vs-quintic error estimates."""

    r: float
    u: float
    du: float
    u_err: float
    du_err: float


def _lagrange(r_nodes: np.ndarray, values: np.ndarray, j: int, x: float, width: int) -> float:
    # even-width stencil centred on the interval [r_j, r_j+1], shifted inside the mesh
    start = min(max(j - width // 2 + 1, 0), len(r_nodes) - width)
    idx = np.arange(start, start + width)
    w = fd_weights(r_nodes[idx][None, :], np.array([x]), 0)[0]
    return float(w @ values[idx])


def sample(sol: RadialSolution, r: float) -> Sample:
    """Cubic (four-node) Lagrange interpolation of u and u' at ``r``.

    The error estimate is the difference to the six-node (quintic) interpolant.
    Node positions return the nodal values exactly.
    """
    nodes = sol.mesh.nodes
    if not nodes[0] <= r <= nodes[-1]:
        raise DomainError(f"r={r} lies outside the mesh [0, {nodes[-1]}]")
    hit = np.searchsorted(nodes, r)
    if hit < len(nodes) and nodes[hit] == r:
        return Sample(float(r), float(sol.u[hit]), float(sol.du[hit]), 0.0, 0.0)
    j = int(hit) - 1
    u3 = _lagrange(nodes, sol.u, j, r, 4)
    u5 = _lagrange(nodes, sol.u, j, r, 6)
    d3 = _lagrange(nodes, sol.du, j, r, 4)
    d5 = _lagrange(nodes, sol.du, j, r, 6)
    return Sample(float(r), u3, d3, abs(u3 - u5), abs(d3 - d5))
