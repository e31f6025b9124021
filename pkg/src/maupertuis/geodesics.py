"""
Discrete Jacobi geodesics in d dimensions.

A curve is a polyline gamma_0..gamma_N on the parameter grid s_i = i/N with
fixed endpoints.  Both functionals use the segment-midpoint rule:

    J = N * sum_i w_i |D_i|^2,      L = sum_i sqrt(w_i) |D_i|,

with D_i = gamma_{i+1} - gamma_i and w_i = 2(E - V(m_i/eps)) at the midpoint
m_i.  Time along the curve follows psi_{i+1} - psi_i = |D_i| / sqrt(w_i), which
makes the midpoint energy exactly E and L = A + E*T an exact discrete
identity.  Minimization is nonlinear conjugate gradient (Polak-Ribiere+)
preconditioned by the tridiagonal part of the Hessian.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solveh_banded

from . import dynamics
from . import quadrature as quad
from .errors import DegenerateSegment, NoDescent
from .potential import PeriodicPotential

GTOL = 1e-8
NODES_PER_CELL = 40
MIN_NODES = 64


# -- curves -------------------------------------------------------------------

@dataclass
class Curve:
    """Polyline with nodes of shape (N+1, d) on s_i = i/N."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if nodes.ndim != 2 or len(nodes) < 2:
            raise ValueError("a curve needs at least two nodes of shape (N+1, d)")
        self.nodes = nodes

    @classmethod
    def straight(cls, q_a, q_b, N: int) -> "Curve":
        q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
        q_b = np.atleast_1d(np.asarray(q_b, dtype=float))
        if q_a.shape != q_b.shape:
            raise ValueError("endpoints differ in dimension")
        if N < 1:
            raise ValueError("N must be at least 1")
        s = np.linspace(0.0, 1.0, N + 1)[:, None]
        nodes = (1.0 - s) * q_a + s * q_b
        nodes[-1] = q_b
        return cls(nodes)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def start(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def end(self) -> np.ndarray:
        return self.nodes[-1]

    @property
    def segments(self) -> np.ndarray:
        return np.diff(self.nodes, axis=0)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def euclidean_length(self) -> float:
        return float(np.sum(np.linalg.norm(self.segments, axis=1)))

    def write_csv(self, path) -> None:
        """Columns ``s,x1..xd``."""
        _write_rows(path, ["s"] + [f"x{i + 1}" for i in range(self.dim)],
                    np.column_stack([self.s, self.nodes]))


@dataclass
class TimedCurve:
    """Curve with node times psi_0 = 0 < psi_1 < ... < psi_N = T_E."""

    curve: Curve
    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.curve.nodes):
            raise ValueError("one time per node required")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")

    @property
    def total_time(self) -> float:
        return float(self.times[-1])

    @property
    def t(self) -> np.ndarray:
        return self.times

    @property
    def q(self) -> np.ndarray:
        return self.curve.nodes

    def midpoint_energies(self, V: PeriodicPotential, eps: float) -> np.ndarray:
        """|dq/dt|^2/2 + V at segment midpoints, with dq/dt the segment slope."""
        vel = self.curve.segments / np.diff(self.times)[:, None]
        return 0.5 * np.sum(vel**2, axis=1) + _V(V, self.curve.midpoints / eps)

    def write_csv(self, path) -> None:
        """Columns ``s,x1..xd,t``."""
        c = self.curve
        _write_rows(path, ["s"] + [f"x{i + 1}" for i in range(c.dim)] + ["t"],
                    np.column_stack([c.s, c.nodes, self.times]))


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _V(V: PeriodicPotential, pts: np.ndarray) -> np.ndarray:
    """V at points of shape (n, d)."""
    return np.asarray(V.value(pts[:, 0] if V.dim == 1 else pts), dtype=float)


def _gradV(V: PeriodicPotential, pts: np.ndarray) -> np.ndarray:
    """grad V at points of shape (n, d), returned as (n, d)."""
    if V.dim == 1:
        return np.asarray(V.gradient(pts[:, 0]), dtype=float).reshape(-1, 1)
    return np.asarray(V.gradient(pts), dtype=float)


def _check_dims(c: Curve, V: PeriodicPotential):
    if c.dim != V.dim:
        raise ValueError(f"curve lives in R^{c.dim} but V in R^{V.dim}")


def _weights(V: PeriodicPotential, E: float, eps: float, nodes: np.ndarray) -> np.ndarray:
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    return 2.0 * (E - _V(V, mid / eps))


# -- functionals ----------------------------------------------------------------

def jacobi_energy(c: Curve, V: PeriodicPotential, E: float, eps: float) -> float:
    """Discrete Jacobi energy N * sum_i w_i |D_i|^2."""
    _check_dims(c, V)
    E = quad.check_energy(E)
    w = _weights(V, E, eps, c.nodes)
    return float(c.N * np.sum(w * np.sum(c.segments**2, axis=1)))


def jacobi_energy_gradient(c: Curve, V: PeriodicPotential, E: float, eps: float) -> np.ndarray:
    """Gradient of :func:`jacobi_energy` with respect to every node, shape (N+1, d)."""
    _check_dims(c, V)
    E = quad.check_energy(E)
    return _jacobi_fg(c.nodes, V, E, eps)[1]


def _jacobi_fg(nodes, V, E, eps):
    N = len(nodes) - 1
    D = np.diff(nodes, axis=0)
    mid = 0.5 * (nodes[:-1] + nodes[1:]) / eps
    w = 2.0 * (E - _V(V, mid))
    sq = np.sum(D**2, axis=1)
    f = N * float(np.sum(w * sq))
    # w_i depends on both ends through the midpoint: dw/dgamma = -grad V / eps
    shared = -(N / eps) * sq[:, None] * _gradV(V, mid)
    stretch = 2.0 * N * w[:, None] * D
    g = np.zeros_like(nodes)
    g[:-1] += shared - stretch
    g[1:] += shared + stretch
    return f, g, w


def jacobi_length(c: Curve, V: PeriodicPotential, E: float, eps: float) -> float:
    """Discrete Jacobi length sum_i sqrt(w_i) |D_i|."""
    _check_dims(c, V)
    E = quad.check_energy(E)
    w = _weights(V, E, eps, c.nodes)
    return float(np.sum(np.sqrt(w) * np.linalg.norm(c.segments, axis=1)))


def action(tc, V: PeriodicPotential, eps: float) -> float:
    """Time-midpoint action sum_i [|D_i|^2/(2 h_i) - V(m_i/eps) h_i].

    ``tc`` is a :class:`TimedCurve` or a :class:`~maupertuis.dynamics.Trajectory`.
    """
    t = np.asarray(tc.t, dtype=float)
    q = np.asarray(tc.q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    h = np.diff(t)
    if np.any(h <= 0):
        raise ValueError("times must increase strictly")
    D = np.diff(q, axis=0)
    mid = 0.5 * (q[:-1] + q[1:])
    return float(np.sum(0.5 * np.sum(D**2, axis=1) / h - _V(V, mid / eps) * h))


def _action_fg(nodes, h, V, eps):
    D = np.diff(nodes, axis=0)
    mid = 0.5 * (nodes[:-1] + nodes[1:]) / eps
    f = float(np.sum(0.5 * np.sum(D**2, axis=1) / h - _V(V, mid) * h))
    vel = D / h[:, None]
    shared = -(0.5 / eps) * h[:, None] * _gradV(V, mid)
    g = np.zeros_like(nodes)
    g[:-1] += shared - vel
    g[1:] += shared + vel
    return f, g


# -- optimizer --------------------------------------------------------------------

@dataclass
class CGResult:
    """Outcome of :func:`conjugate_gradient`.

    ``status`` is ``"gtol"`` (gradient tolerance met), ``"stalled"`` (the
    objective stopped decreasing at rounding level) or ``"max_iter"``.
    """

    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    status: str = "gtol"
    history: list = field(default_factory=list, repr=False)


def _tridiag_solver(diag_weights: np.ndarray):
    """Solver for the SPD tridiagonal matrix with off-diagonals -c_i and
    diagonal c_{i-1} + c_i, restricted to interior nodes."""
    c = diag_weights
    n = len(c) - 1
    if n < 1:
        return lambda r: r
    ab = np.zeros((2, n))
    ab[1] = c[:-1] + c[1:]
    ab[0, 1:] = -c[1:-1]

    def solve(r):
        return solveh_banded(ab, r, check_finite=False)
    return solve


STALL_WINDOW = 20
STALL_SLACK = 100.0


def conjugate_gradient(fg, x0: np.ndarray, precond=None, gtol: float = GTOL, scale: float = 1.0,
                       max_iter: int = 5000, c1: float = 1e-4) -> CGResult:
    """Preconditioned Polak-Ribiere+ CG with backtracking Armijo search.

    ``fg(x)`` returns (f, grad, aux); ``precond(aux)`` returns a function
    applying the inverse of an SPD approximation of the Hessian.  Stops
    when max|grad| <= gtol * scale.  Every accepted step satisfies the
    Armijo condition, so the objective never increases.

    Near the minimum the achievable gradient is limited by rounding in f;
    if f has not moved by more than a few ulps over ``STALL_WINDOW``
    iterations the run stops, and counts as converged when the gradient
    is within ``STALL_SLACK`` times the tolerance.

    Raises
    ------
    NoDescent
        If the line search stalls while the gradient is still above
        tolerance and the predicted decrease is above rounding level.
    """
    x = np.array(x0, dtype=float)
    f, g, aux = fg(x)
    history = [f]
    target = gtol * scale
    P = precond(aux) if precond else (lambda r: r)
    z = P(g)
    d = -z
    gz = float(np.vdot(g, z))
    alpha = 1.0
    restarted = False
    ulp = np.finfo(float).eps

    def done(it, status):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        ok = gnorm <= target or (status == "stalled" and gnorm <= STALL_SLACK * target)
        return CGResult(x, f, gnorm, it, ok, status, history)

    for it in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= target:
            return done(it - 1, "gtol")
        if (len(history) > STALL_WINDOW
                and history[-STALL_WINDOW - 1] - f <= 4 * ulp * abs(f)):
            return done(it - 1, "stalled")
        slope = float(np.vdot(g, d))
        if slope >= 0:
            d, slope = -z, -gz
        step = alpha
        accepted = False
        for _ in range(60):
            x_new = x + step * d
            f_new, g_new, aux_new = fg(x_new)
            if f_new <= f + c1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if abs(slope) <= 1e-13 * max(1.0, abs(f)):
                return done(it, "stalled")
            if restarted:
                raise NoDescent(f"line search stalled at |grad| = {gnorm:.3e} (tol {target:.3e})")
            restarted = True
            d = -z
            alpha = 1.0
            continue
        restarted = False
        # grow the trial step when the first one was accepted
        alpha = min(2.0 * step, 1e6) if step == alpha else step
        P = precond(aux_new) if precond else P
        z_new = P(g_new)
        gz_new = float(np.vdot(g_new, z_new))
        beta = max(0.0, (gz_new - float(np.vdot(g_new, z))) / gz)
        x, f, g, z, gz = x_new, f_new, g_new, z_new, gz_new
        d = -z + beta * d
        history.append(f)
    return done(max_iter, "max_iter")


@dataclass
class GeodesicResult:
    """Best minimizer over all starts."""

    curve: Curve
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    status: str
    start_values: list
    history: list = field(repr=False, default_factory=list)


def default_nodes(eps: float, distance: float) -> int:
    """max(64, ceil(40 * distance / eps)): forty nodes per crossed cell."""
    return max(MIN_NODES, math.ceil(NODES_PER_CELL * distance / eps))


def _perturbed(q_a, q_b, N, scale, rng, modes: int = 3) -> np.ndarray:
    base = Curve.straight(q_a, q_b, N).nodes
    s = np.linspace(0.0, 1.0, N + 1)
    coeff = rng.standard_normal((modes, base.shape[1]))
    bump = sum(np.outer(np.sin((m + 1) * np.pi * s), coeff[m]) / (m + 1) for m in range(modes))
    return base + scale * bump


def _minimize_endpoints(fg_full, precond_weights, nodes0, gtol, scale, max_iter):
    """Run CG on the interior nodes of nodes0, endpoints fixed."""
    a, b = nodes0[0].copy(), nodes0[-1].copy()

    def assemble(x):
        return np.vstack([a, x, b])

    def fg(x):
        f, g, aux = fg_full(assemble(x))
        return f, g[1:-1], aux

    def precond(aux):
        return _tridiag_solver(precond_weights(aux))

    res = conjugate_gradient(fg, nodes0[1:-1], precond, gtol, scale, max_iter)
    res.x = assemble(res.x)
    return res


def minimize_jacobi_full(V: PeriodicPotential, E: float, eps: float, q_a, q_b, N: int | None = None,
                         starts: int = 1, perturbation: float = 0.1, seed: int = 0,
                         gtol: float = GTOL, max_iter: int = 5000) -> GeodesicResult:
    """Minimize the discrete Jacobi energy from the straight segment.

    Start 0 is the straight segment; starts 1.. add random low-frequency
    sine bumps of size ``perturbation * |q_b - q_a|``.  The gradient
    tolerance is relative to 2(E - min V)|q_b - q_a|.
    """
    E = quad.check_energy(E)
    if not eps > 0:
        raise ValueError("eps must be positive")
    q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
    q_b = np.atleast_1d(np.asarray(q_b, dtype=float))
    if q_a.shape != (V.dim,) or q_b.shape != (V.dim,):
        raise ValueError(f"endpoints must be points of R^{V.dim}")
    dist = float(np.linalg.norm(q_b - q_a))
    if dist == 0:
        raise ValueError("endpoints coincide")
    if N is None:
        N = default_nodes(eps, dist)
    if starts < 1:
        raise ValueError("need at least one start")
    scale = 2.0 * (E - V.min_value) * dist
    rng = np.random.default_rng(seed)

    def fg(nodes):
        f, g, w = _jacobi_fg(nodes, V, E, eps)
        return f, g, w

    def pweights(w):
        return 2.0 * N * w

    best = None
    values = []
    for k in range(starts):
        x0 = Curve.straight(q_a, q_b, N).nodes if k == 0 else _perturbed(q_a, q_b, N, perturbation * dist, rng)
        res = _minimize_endpoints(fg, pweights, x0, gtol, scale, max_iter)
        values.append(res.value)
        if best is None or res.value < best.value:
            best = res
    return GeodesicResult(Curve(best.x), best.value, best.grad_norm, best.iterations,
                          best.converged, best.status, values, best.history)


def minimize_jacobi(V: PeriodicPotential, E: float, eps: float, q_a, q_b, N: int | None = None,
                    starts: int = 1, perturbation: float = 0.1, seed: int = 0,
                    gtol: float = GTOL, max_iter: int = 5000) -> Curve:
    """Curve minimizing the discrete Jacobi energy; see :func:`minimize_jacobi_full`."""
    return minimize_jacobi_full(V, E, eps, q_a, q_b, N, starts, perturbation, seed, gtol, max_iter).curve


# -- reparametrizations ------------------------------------------------------------

def reparametrize_to_time(c: Curve, V: PeriodicPotential, E: float, eps: float) -> TimedCurve:
    """Node times psi from the midpoint rule for |gamma'| / sqrt(2(E - V)).

    Raises
    ------
    DegenerateSegment
        If two consecutive nodes coincide.
    """
    _check_dims(c, V)
    E = quad.check_energy(E)
    lengths = np.linalg.norm(c.segments, axis=1)
    if np.any(lengths <= 0):
        i = int(np.argmin(lengths))
        raise DegenerateSegment(f"segment {i} has zero length")
    w = _weights(V, E, eps, c.nodes)
    psi = np.concatenate(([0.0], np.cumsum(lengths / np.sqrt(w))))
    return TimedCurve(c, psi)


def reparametrize_arclength(c: Curve, V: PeriodicPotential, E: float, eps: float,
                            tol: float = 1e-13, max_iter: int = 200) -> Curve:
    """Same polyline, nodes moved so every segment has equal Jacobi length.

    Nodes slide along the original polyline; their positions are updated by
    linear redistribution of cumulative discrete length until segment
    lengths agree to ``tol`` (relative).
    """
    _check_dims(c, V)
    E = quad.check_energy(E)
    base = c.nodes
    seg = np.linalg.norm(c.segments, axis=1)
    if np.any(seg <= 0):
        raise DegenerateSegment("curve has a zero-length segment")
    u_base = np.concatenate(([0.0], np.cumsum(seg)))

    def at(u):
        return np.column_stack([np.interp(u, u_base, base[:, j]) for j in range(c.dim)])

    u = u_base.copy()
    for _ in range(max_iter):
        nodes = at(u)
        nodes[0], nodes[-1] = base[0], base[-1]
        ell = np.sqrt(_weights(V, E, eps, nodes)) * np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        if np.max(np.abs(ell / ell.mean() - 1.0)) <= tol:
            return Curve(nodes)
        cum = np.concatenate(([0.0], np.cumsum(ell)))
        u = np.interp(np.linspace(0.0, cum[-1], len(cum)), cum, u)
        u[0], u[-1] = u_base[0], u_base[-1]
    return Curve(nodes)


# -- Maupertuis correspondence ------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass
class CorrespondenceReport:
    energy: float
    eps: float
    total_time: float
    jacobi_energy: float
    jacobi_length: float
    action: float
    endpoint: np.ndarray
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _launch_direction(nodes: np.ndarray) -> np.ndarray:
    """Unit tangent at the first node from a one-sided second-order difference."""
    if len(nodes) >= 3:
        t = -3.0 * nodes[0] + 4.0 * nodes[1] - nodes[2]
    else:
        t = nodes[1] - nodes[0]
    return t / np.linalg.norm(t)


def verify_correspondence(V: PeriodicPotential, E: float, eps: float, q_a, q_b, N: int | None = None,
                          curve: Curve | None = None, rtol: float = 1e-5, tol_traj: float = 1e-3,
                          dt: float | None = None, starts: int = 1, seed: int = 0) -> CorrespondenceReport:
    """Energy-to-time side of the Maupertuis correspondence for one minimizer.

    Checks
    ------
    action_identity
        L = A + E*T_E on the time-reparametrized minimizer (relative rtol).
    length_energy
        J = L^2/2 on the equal-Jacobi-length reparametrization (relative rtol).
    trajectory_endpoint
        The true trajectory launched from q_a with speed sqrt(2(E - V(q_a/eps)))
        along the curve's initial tangent reaches q_b at T_E within tol_traj.
        Integrated by Stoermer-Verlet with dt = eps/400 by default; for d = 1
        the exact travel-time inverse is used instead.
    """
    E = quad.check_energy(E)
    if curve is None:
        curve = minimize_jacobi(V, E, eps, q_a, q_b, N, starts=starts, seed=seed)
    tc = reparametrize_to_time(curve, V, E, eps)
    T = tc.total_time
    L = jacobi_length(curve, V, E, eps)
    A = action(tc, V, eps)
    arc = reparametrize_arclength(curve, V, E, eps)
    J_arc = jacobi_energy(arc, V, E, eps)
    L_arc = jacobi_length(arc, V, E, eps)
    J = jacobi_energy(curve, V, E, eps)

    checks = []
    err = abs(L - (A + E * T)) / abs(L)
    checks.append(Check("action_identity", err <= rtol, err, rtol, f"L={L!r} A+E*T={A + E * T!r}"))
    err = abs(J_arc - 0.5 * L_arc**2) / abs(J_arc)
    checks.append(Check("length_energy", err <= rtol, err, rtol,
                        f"J={J_arc!r} L^2/2={0.5 * L_arc**2!r} J/L^2={J_arc / L_arc**2!r}"))

    q_a = curve.start
    q_b = curve.end
    if V.dim == 1:
        sign = 1.0 if q_b[0] > q_a[0] else -1.0
        if sign < 0:
            raise ValueError("1D endpoint check requires q_b > q_a")
        end = np.array([dynamics.solve_1d_closed_form(V, E, eps, float(q_a[0]), T)])
        how = "exact 1D inverse"
    else:
        if dt is None:
            dt = eps / 400.0
        speed = math.sqrt(2.0 * (E - float(_V(V, q_a[None, :] / eps)[0])))
        p0 = speed * _launch_direction(curve.nodes)
        traj = dynamics.integrate_verlet(V, eps, q_a, p0, T, dt)
        end = traj.q[-1]
        how = f"Verlet dt={dt!r}"
    err = float(np.linalg.norm(end - q_b))
    checks.append(Check("trajectory_endpoint", err <= tol_traj, err, tol_traj, how))
    return CorrespondenceReport(E, eps, T, J, L, A, end, checks)


# -- cell problems ----------------------------------------------------------------------

@dataclass(frozen=True)
class CellEstimate:
    eps: float
    z_norm: float
    estimate: float
    lower_bound: float
    upper_bound: float
    converged: bool = True

    def within_bounds(self, slack: float = 1e-9) -> bool:
        s = slack * max(1.0, abs(self.upper_bound))
        return self.lower_bound - s <= self.estimate <= self.upper_bound + s

    def row(self) -> dict:
        return {"eps": self.eps, "z_norm": self.z_norm, "estimate": self.estimate,
                "lower_bound": self.lower_bound, "upper_bound": self.upper_bound}


CELL_COLUMNS = ["eps", "z_norm", "estimate", "lower_bound", "upper_bound"]


def write_cell_csv(path, estimates) -> None:
    """Columns ``eps,z_norm,estimate,lower_bound,upper_bound``."""
    _write_rows(path, CELL_COLUMNS, [[getattr(e, k) for k in CELL_COLUMNS] for e in estimates])


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*tasks)))


def _jacobi_cell_task(V, E, z, eps, N, starts, perturbation, seed):
    zero = np.zeros_like(z)
    res = minimize_jacobi_full(V, E, eps, zero, z, N, starts, perturbation, seed)
    zn = float(np.linalg.norm(z))
    return CellEstimate(float(eps), zn, res.value, 2.0 * E * zn**2,
                        2.0 * (E - V.min_value) * zn**2, res.converged)


def cell_problem_jacobi(V: PeriodicPotential, E: float, z, eps_list, N: int | None = None,
                        starts: int = 5, perturbation: float = 0.1, seed: int = 0,
                        workers: int = 1) -> list[CellEstimate]:
    """Minimal discrete Jacobi energy from 0 to z for each eps.

    Bounds are the Finsler sandwich 2E|z|^2 <= J <= 2(E - min V)|z|^2.
    Each eps gets its own seed spawned from ``seed``.
    """
    E = quad.check_energy(E)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.any(z):
        raise ValueError("z must be nonzero")
    eps = [float(e) for e in eps_list]
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(eps))]
    tasks = [(V, E, z, e, N, starts, perturbation, s) for e, s in zip(eps, seeds)]
    return _map(_jacobi_cell_task, tasks, workers)


def minimize_action_full(V: PeriodicPotential, T: float, eps: float, q_a, q_b, N: int | None = None,
                         starts: int = 1, perturbation: float = 0.1, seed: int = 0,
                         gtol: float = GTOL, max_iter: int = 5000) -> tuple[TimedCurve, CGResult]:
    """Minimize the discrete action on the uniform time grid of [0, T]."""
    if not T > 0:
        raise ValueError("T must be positive")
    q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
    q_b = np.atleast_1d(np.asarray(q_b, dtype=float))
    dist = float(np.linalg.norm(q_b - q_a))
    if N is None:
        N = default_nodes(eps, max(dist, eps))
    h = np.full(N, T / N)
    scale = max(dist, eps) / T
    rng = np.random.default_rng(seed)

    def fg(nodes):
        f, g = _action_fg(nodes, h, V, eps)
        return f, g, None

    weights = 1.0 / h

    best = None
    for k in range(starts):
        x0 = Curve.straight(q_a, q_b, N).nodes if k == 0 else _perturbed(q_a, q_b, N, perturbation * max(dist, eps), rng)
        res = _minimize_endpoints(fg, lambda _: weights, x0, gtol, scale, max_iter)
        if best is None or res.value < best.value:
            best = res
    times = np.concatenate(([0.0], np.cumsum(h)))
    times[-1] = T
    return TimedCurve(Curve(best.x), times), best


def _action_cell_task(V, T, z, eps, N, starts, perturbation, seed):
    zero = np.zeros_like(z)
    _, res = minimize_action_full(V, T, eps, zero, z, N, starts, perturbation, seed)
    zn = float(np.linalg.norm(z))
    free = zn**2 / (2.0 * T)
    return CellEstimate(float(eps), zn, res.value, free, free - T * V.min_value, res.converged)


def cell_problem_action(V: PeriodicPotential, T: float, z, eps_list, N: int | None = None,
                        starts: int = 5, perturbation: float = 0.1, seed: int = 0,
                        workers: int = 1) -> list[CellEstimate]:
    """Minimal discrete action over curves from 0 to z in time T, per eps.

    Bounds: |z|^2/(2T) <= A <= |z|^2/(2T) - T min V, since -V is between 0
    and -min V and the straight line is admissible.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    eps = [float(e) for e in eps_list]
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(eps))]
    tasks = [(V, T, z, e, N, starts, perturbation, s) for e, s in zip(eps, seeds)]
    return _map(_action_cell_task, tasks, workers)
