"""
Fine-scale trajectories of q'' = -(1/eps) grad V(q/eps) with unit mass.

Two solvers: a kick-drift-kick Stoermer-Verlet integrator in any
dimension, and for d = 1 the exact inverse of the travel-time integral.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import quadrature as quad
from .errors import RootNotBracketed, StepTooLarge
from .potential import PeriodicPotential

STEPS_PER_CELL = 50


@dataclass
class Trajectory:
    """Sampled solution at a given eps.

    Attributes
    ----------
    eps : float
    t : ndarray, shape (n,)
        Strictly increasing times, t[0] = 0.
    q, p : ndarray, shape (n, d)
        Positions and momenta (velocities, unit mass).
    energy : ndarray, shape (n,)
    """

    eps: float
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: np.ndarray

    @property
    def dim(self) -> int:
        return self.q.shape[1]

    @property
    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def write_csv(self, path) -> None:
        """Columns ``t,q1..qd,p1..pd,E``."""
        d = self.dim
        header = ["t"] + [f"q{i + 1}" for i in range(d)] + [f"p{i + 1}" for i in range(d)] + ["E"]
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in np.column_stack([self.t, self.q, self.p, self.energy]):
                w.writerow([repr(float(v)) for v in row])


def energy(V: PeriodicPotential, eps: float, q, p):
    """|p|^2/2 + V(q/eps); vectorized over leading axes for d > 1."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if V.dim == 1:
        return 0.5 * p**2 + V.value(q / eps)
    return 0.5 * np.sum(p**2, axis=-1) + V.value(q / eps)


def initial_momentum_for_energy(V: PeriodicPotential, E: float, q_a: float, eps: float) -> float:
    """Rightward launch speed sqrt(2(E - V(q_a/eps))) giving total energy E."""
    E = quad.check_energy(E)
    return math.sqrt(2.0 * (E - V.value(q_a / eps)))


def integrate_verlet(V: PeriodicPotential, eps: float, q0, p0, t_end: float, dt: float) -> Trajectory:
    """Kick-drift-kick Stoermer-Verlet from (q0, p0) up to t_end.

    The step is shrunk to t_end/ceil(t_end/dt) so the last sample lands on
    t_end exactly.  Position updates use compensated summation.

    Raises
    ------
    StepTooLarge
        If dt > eps/50.
    """
    if dt > eps / STEPS_PER_CELL * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt} exceeds eps/{STEPS_PER_CELL} = {eps / STEPS_PER_CELL}")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    d = V.dim
    q = np.array(q0, dtype=float).reshape(d)
    p = np.array(p0, dtype=float).reshape(d)

    def force(x):
        return -np.atleast_1d(V.gradient(x / eps if d > 1 else x[0] / eps)) / eps

    qs = np.empty((n + 1, d))
    ps = np.empty((n + 1, d))
    qs[0], ps[0] = q, p
    f = force(q)
    carry = np.zeros(d)
    for i in range(1, n + 1):
        p = p + 0.5 * h * f
        # compensated sum keeps long drifts free of accumulated rounding
        y = h * p - carry
        s = q + y
        carry = (s - q) - y
        q = s
        f = force(q)
        p = p + 0.5 * h * f
        qs[i], ps[i] = q, p
    t = h * np.arange(n + 1)
    t[-1] = t_end
    E = energy(V, eps, qs if d > 1 else qs[:, 0], ps if d > 1 else ps[:, 0])
    return Trajectory(eps, t, qs, ps, np.asarray(E, dtype=float))


def solve_1d_closed_form(V: PeriodicPotential, E: float, eps: float, q_a: float, t,
                         cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG, tol: float = 1e-13):
    """Position q_eps(t) of the rightward solution with q(0) = q_a and energy E.

    Inverts the travel time t_eps(q) = t.  The bracket comes from the uniform
    deviation bound |t_eps(q) - sigma (q - q_a)| <= 2 eps / sqrt(2E); inside it
    Newton steps use t_eps'(q) = (2(E - V(q/eps)))^(-1/2) and fall back to
    bisection whenever they leave the bracket.  Vectorized over t.
    """
    E = quad.check_energy(E)
    t_arr = np.asarray(t, dtype=float)
    tf = np.atleast_1d(t_arr).astype(float)
    s = quad.sigma(V, E, cfg)
    slack = 2.0 * eps / math.sqrt(2.0 * E)
    pad = 1e-9 * (1.0 + np.abs(tf))
    lo = q_a + (tf - slack) / s - pad
    hi = q_a + (tf + slack) / s + pad

    if (np.any(quad.t_eps(V, E, eps, q_a, lo, cfg) > tf)
            or np.any(quad.t_eps(V, E, eps, q_a, hi, cfg) < tf)):
        raise RootNotBracketed("travel-time inversion lost its bracket")

    q = q_a + tf / s
    q = np.clip(q, lo, hi)
    active = np.arange(len(tf))
    for _ in range(200):
        tf_active = tf[active]
        qa_ = q[active]
        r = quad.t_eps(V, E, eps, q_a, qa_, cfg) - tf_active
        converged = np.abs(r) <= tol * np.maximum(1.0, np.abs(tf_active))
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(r < 0, qa_, lo_a)
        hi_a = np.where(r > 0, qa_, hi_a)
        speed = np.sqrt(2.0 * (E - V.value(qa_ / eps)))
        newton = qa_ - r * speed
        bad = (newton <= lo_a) | (newton >= hi_a)
        nxt = np.where(bad, 0.5 * (lo_a + hi_a), newton)
        nxt = np.where(converged, qa_, nxt)
        lo[active], hi[active] = lo_a, hi_a
        q[active] = nxt
        active = active[~converged]
        if active.size == 0:
            break
        stuck = hi[active] - lo[active] <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(q[active]))
        active = active[~stuck]
        if active.size == 0:
            break
    else:
        raise RootNotBracketed("travel-time inversion did not converge")
    if t_arr.ndim == 0:
        return float(q[0])
    return q.reshape(t_arr.shape)


def closed_form_trajectory(V: PeriodicPotential, E: float, eps: float, q_a: float, times,
                           cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> Trajectory:
    """Trajectory object built from the exact 1D inverse at the given times."""
    times = np.asarray(times, dtype=float)
    q = solve_1d_closed_form(V, E, eps, q_a, times, cfg)
    p = np.sqrt(2.0 * np.maximum(E - V.value(q / eps), 0.0))
    return Trajectory(eps, times, q[:, None], p[:, None], energy(V, eps, q, p))
