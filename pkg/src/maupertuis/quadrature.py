"""
Period-cell integrals of one-dimensional potentials.

All integrals are over the fast variable x = q/eps.  A whole unit cell is
integrated once (split at the maximizers of V, graded Gauss-Legendre
panels, panel doubling until two successive estimates agree); integrals
over long intervals are assembled as ``floor(length)`` copies of the cell
integral plus a remainder of measure < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonConvergent
from .potential import PeriodicPotential

ENERGY_FLOOR = 1e-12
_GRADING_RATIO = 0.2
_GRADING_LEVELS = 14


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts and tolerance of the composite Gauss-Legendre rules.

    ``nodes_per_cell`` is the Gauss order of each panel; ``remainder_nodes``
    the initial node count on a remainder interval.  Successive estimates
    must agree to ``max(abs_tol, rel_tol * |estimate|)``.
    """

    nodes_per_cell: int = 16
    remainder_nodes: int = 32
    abs_tol: float = 1e-13
    rel_tol: float = 1e-14
    max_doublings: int = 14

    def __post_init__(self):
        if self.nodes_per_cell < 8:
            raise ValueError("nodes_per_cell must be at least 8")
        if self.remainder_nodes < 32:
            raise ValueError("remainder_nodes must be at least 32")
        if not (self.abs_tol > 0 and self.rel_tol >= 0):
            raise ValueError("tolerances must be positive")


DEFAULT_CONFIG = QuadratureConfig()


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def graded_edges(h: float) -> np.ndarray:
    """Panel edges on [0, h], geometrically refined toward 0."""
    frac = _GRADING_RATIO ** np.arange(_GRADING_LEVELS, 0, -1)
    return np.concatenate(([0.0], h * frac, [h]))


def _bisect_panels(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def cell_breakpoints(V: PeriodicPotential) -> np.ndarray:
    """Maximizers of V in one period, closed by the first one plus 1."""
    m = np.asarray(V.maximizers_1d, dtype=float)
    return np.append(m, m[0] + 1.0)


def cell_integral(F, V: PeriodicPotential, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral over one period of F(V(x)), for an integrand depending on V only.

    The period is split at the maximizers of V; each piece is integrated as
    two halves graded toward its ends, with V evaluated as a small offset
    from the nearer maximizer.  Panels are halved until successive
    estimates agree.
    """
    bp = cell_breakpoints(V)
    starts, ends = bp[:-1], bp[1:]
    halves = 0.5 * (ends - starts)
    unit = graded_edges(1.0)

    def estimate(edges):
        total = 0.0
        for a, b, h in zip(starts, ends, halves):
            e = h * edges
            lo, hi = e[:-1, None], e[1:, None]
            half = 0.5 * (hi - lo)
            s = lo + half * (x + 1.0)
            vals = F(V.value_near(a, s)) + F(V.value_near(b, -s))
            total += float(np.sum(half * w * vals))
        return total

    x, w = gauss_legendre(cfg.nodes_per_cell)
    prev = estimate(unit)
    for _ in range(cfg.max_doublings):
        unit = _bisect_panels(unit)
        cur = estimate(unit)
        if abs(cur - prev) <= max(cfg.abs_tol, cfg.rel_tol * abs(cur)):
            return cur
        prev = cur
    raise NonConvergent(f"cell integral did not converge to {cfg.abs_tol}")


def interval_integrals(f, a, b, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Vectorized integrals of f over many short intervals [a_i, b_i].

    Uniform panels, doubled per interval until converged to ``cfg.abs_tol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    order = cfg.nodes_per_cell
    x, w = gauss_legendre(order)
    panels = max(1, math.ceil(cfg.remainder_nodes / order))

    def estimate(lo, hi, n):
        h = (hi - lo) / n
        starts = lo[:, None] + h[:, None] * np.arange(n)
        pts = starts[:, :, None] + 0.5 * h[:, None, None] * (x + 1.0)
        vals = f(pts.reshape(len(lo), -1)).reshape(pts.shape)
        return 0.5 * h * np.einsum("ipk,k->i", vals, w)

    out = estimate(a, b, panels)
    todo = np.arange(len(a))
    for _ in range(cfg.max_doublings):
        panels *= 2
        cur = estimate(a[todo], b[todo], panels)
        done = np.abs(cur - out[todo]) <= np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(cur))
        out[todo] = cur
        todo = todo[~done]
        if todo.size == 0:
            return out
    raise NonConvergent(f"{todo.size} remainder integrals did not reach {cfg.abs_tol}")


def check_energy(E: float) -> float:
    E = float(E)
    if not E > ENERGY_FLOOR:
        raise ValueError(f"energy must exceed max V = 0 (floor {ENERGY_FLOOR}), got {E}")
    return E


def _inverse_speed(V: PeriodicPotential, E: float):
    def g(x):
        return 1.0 / np.sqrt(2.0 * (E - V.value(x)))
    return g


@lru_cache(maxsize=4096)
def _sigma_cached(V: PeriodicPotential, E: float, cfg: QuadratureConfig) -> float:
    return cell_integral(lambda v: 1.0 / np.sqrt(2.0 * (E - v)), V, cfg)


def sigma(V: PeriodicPotential, E: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Cell average of (2(E - V))^(-1/2): time per unit length of the averaged motion."""
    _require_1d(V)
    return _sigma_cached(V, check_energy(E), cfg)


def sigma_lower_bound(C_V: float, E: float) -> float:
    """(1/sqrt(C_V)) asinh(sqrt(C_V/(2E))), a lower bound on sigma(E).

    Valid whenever V'' > -C_V and the maximum of V sits on the lattice.
    """
    if not C_V > 0:
        raise ValueError("curvature bound must be positive")
    E = check_energy(E)
    return math.asinh(math.sqrt(C_V / (2.0 * E))) / math.sqrt(C_V)


@lru_cache(maxsize=4096)
def _p_cached(V: PeriodicPotential, alpha: float, cfg: QuadratureConfig) -> float:
    return cell_integral(lambda v: np.sqrt(2.0 * np.maximum(alpha - v, 0.0)), V, cfg)


def p_of_alpha(V: PeriodicPotential, alpha: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Cell average of sqrt(2(alpha - V)); strictly increasing in alpha."""
    _require_1d(V)
    return _p_cached(V, check_energy(alpha), cfg)


def t_eps(V: PeriodicPotential, E: float, eps: float, q_a: float, q,
          cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Travel time from q_a to q at energy E through V(./eps).

    The fast interval [q_a/eps, q/eps] is split into whole periods, each
    worth sigma(E), plus a remainder of measure below one period.  Accepts
    scalar or array q; q < q_a gives negative times.
    """
    _require_1d(V)
    E = check_energy(E)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    q_arr = np.asarray(q, dtype=float)
    qf = np.atleast_1d(q_arr)
    s = _sigma_cached(V, E, cfg)
    d = (qf - q_a) / eps
    sign = np.where(d < 0, -1.0, 1.0)
    dist = np.abs(d)
    whole = np.floor(dist)
    rem = dist - whole
    start = np.where(d < 0, qf / eps, q_a / eps)
    a_red = start - np.floor(start)
    R = np.zeros_like(dist)
    nz = rem > 0
    if np.any(nz):
        R[nz] = interval_integrals(_inverse_speed(V, E), a_red[nz], a_red[nz] + rem[nz], cfg)
    t = sign * eps * (whole * s + R)
    if q_arr.ndim == 0:
        return float(t[0])
    return t.reshape(q_arr.shape)


def tau_eps(V: PeriodicPotential, e: float, eps: float, q_a: float, q_b: float,
            cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Arrival time at q_b as a function of the energy e; strictly decreasing in e."""
    if not q_b > q_a:
        raise ValueError("tau_eps requires q_b > q_a")
    return t_eps(V, e, eps, q_a, q_b, cfg)


def _require_1d(V: PeriodicPotential):
    if V.dim != 1:
        raise ValueError(f"one-dimensional potential required, got d = {V.dim}")
