"""
Averaged one-dimensional dynamics: limit lines, eps-sweeps against the
uniform O(eps) bound, the fixed-velocity non-uniqueness construction and
the two boundary-value regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import dynamics
from . import quadrature as quad
from .errors import BracketFailure, NoRoot
from .potential import PeriodicPotential

DEFAULT_SLACK = 1e-7


@dataclass(frozen=True)
class Line:
    """q(t) = slope * t + intercept."""

    slope: float
    intercept: float

    def __call__(self, t):
        return self.slope * np.asarray(t, dtype=float) + self.intercept


def error_constant(E: float) -> float:
    """C_E = 2/sqrt(2E)."""
    return 2.0 / math.sqrt(2.0 * quad.check_energy(E))


def limit_solution(V: PeriodicPotential, E: float, q_a: float,
                   cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> Line:
    """Homogenized trajectory t/sigma(E) + q_a."""
    return Line(1.0 / quad.sigma(V, E, cfg), float(q_a))


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x; nan if any y is zero."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or len(x) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class ConvergenceReport:
    """Sup-errors of q_eps against the limit line over an eps-sweep."""

    energy: float
    q_a: float
    horizon: float
    eps: np.ndarray
    sup_error: np.ndarray
    bound: np.ndarray
    slack: float = DEFAULT_SLACK
    slope: float = field(init=False)

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.sup_error = np.asarray(self.sup_error, dtype=float)
        self.bound = np.asarray(self.bound, dtype=float)
        self.slope = fit_loglog_slope(self.eps, self.sup_error)

    @property
    def ratio(self) -> np.ndarray:
        return self.sup_error / self.bound

    @property
    def within_bound(self) -> np.ndarray:
        return self.sup_error <= self.bound + self.slack

    def rows(self):
        for e, s, b, r in zip(self.eps, self.sup_error, self.bound, self.ratio):
            yield {"eps": float(e), "sup_error": float(s), "bound": float(b), "ratio": float(r)}


def _check_eps_list(eps_list) -> np.ndarray:
    eps = np.asarray(list(eps_list), dtype=float)
    if eps.ndim != 1 or len(eps) == 0 or np.any(eps <= 0):
        raise ValueError("eps list must be non-empty and positive")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps list must be strictly decreasing")
    return eps


def sup_error(V: PeriodicPotential, E: float, eps: float, q_a: float, horizon: float,
              samples: int = 2048, cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> float:
    """max over a uniform time grid on [0, horizon] of |q_eps(t) - q(t)|."""
    t = np.linspace(0.0, horizon, samples)
    q_eps = dynamics.solve_1d_closed_form(V, E, eps, q_a, t, cfg)
    line = limit_solution(V, E, q_a, cfg)
    return float(np.max(np.abs(q_eps - line(t))))


def ivp_convergence_experiment(V: PeriodicPotential, E: float, q_a: float, eps_list,
                               horizon: float | None = None, samples: int = 2048,
                               slack: float = DEFAULT_SLACK,
                               cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> ConvergenceReport:
    """Fixed-energy initial value problem swept over eps.

    The default horizon is 10 sigma(E), i.e. ten units of averaged travel.
    """
    eps = _check_eps_list(eps_list)
    s = quad.sigma(V, E, cfg)
    if horizon is None:
        horizon = 10.0 * s
    errs = [sup_error(V, E, e, q_a, horizon, samples, cfg) for e in eps]
    bound = error_constant(E) * eps / s
    return ConvergenceReport(float(E), float(q_a), float(horizon), eps, errs, bound, slack)


# -- fixed initial velocity ---------------------------------------------------

def _level_point(V: PeriodicPotential, level: float, tol: float = 1e-13) -> float:
    """Some x in (0, 1] with V(x) = level, by scan and bisection."""
    if level > tol or level < V.min_value - tol:
        raise NoRoot(f"level {level} outside [min V, 0] = [{V.min_value}, 0]")
    if abs(level) <= tol:
        m = V.maximizers_1d[0]
        return 1.0 if m == 0.0 else m
    if abs(level - V.min_value) <= tol:
        m = float(V.argmin[0]) % 1.0
        return 1.0 if m == 0.0 else m
    xs = np.linspace(0.0, 1.0, 4097)[1:]
    f = V.value(xs) - level
    idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    if idx.size == 0:
        hit = np.nonzero(f == 0)[0]
        if hit.size:
            return float(xs[hit[0]])
        raise NoRoot(f"no sign change of V - {level} on the cell grid")
    i = idx[0]
    return brentq(lambda x: V.value(x) - level, xs[i], xs[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class NonuniquenessSequence:
    """eps_k with q_a/eps_k = x0 + k (mod lattice), all launching at energy E."""

    q_a: float
    p_a: float
    energy: float
    level_point: float
    slope: float

    def eps(self, k: int) -> float:
        if k < 1:
            raise ValueError("k starts at 1")
        if self.q_a > 0:
            return self.q_a / (self.level_point + k)
        return self.q_a / (self.level_point - k)

    def eps_sequence(self, k_max: int) -> np.ndarray:
        return np.array([self.eps(k) for k in range(1, k_max + 1)])

    def initial_energy(self, V: PeriodicPotential, k: int) -> float:
        return 0.5 * self.p_a**2 + V.value(self.q_a / self.eps(k))


def nonuniqueness_sequence(V: PeriodicPotential, q_a: float, p_a: float, E: float,
                           cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> NonuniquenessSequence:
    """Sequence eps_k -> 0 along which fixed data (q_a, p_a) has energy E.

    Requires min V <= E - p_a^2/2 <= 0.

    Raises
    ------
    NoRoot
        If E is outside the admissible interval.
    """
    if q_a == 0:
        raise ValueError("q_a must be nonzero")
    if not p_a > 0:
        raise ValueError("p_a must be positive")
    E = quad.check_energy(E)
    x0 = _level_point(V, E - 0.5 * p_a**2)
    return NonuniquenessSequence(float(q_a), float(p_a), E, float(x0), 1.0 / quad.sigma(V, E, cfg))


@dataclass
class SlopeFamily:
    """Admissible energies (lower, upper] and the limit slopes they produce."""

    lower: float
    upper: float
    energies: np.ndarray
    slopes: np.ndarray
    inf_slope_zero: bool


def slope_family(V: PeriodicPotential, p_a: float, samples: int = 8,
                 cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> SlopeFamily:
    """Limit slopes 1/sigma(E) reachable from fixed initial speed p_a.

    Admissible energies satisfy min V <= E - p_a^2/2 <= 0 and E > 0, so the
    interval is (max(p_a^2/2 + min V, 0), p_a^2/2]; when V is constant it
    collapses to the single energy p_a^2/2.
    """
    if not p_a > 0:
        raise ValueError("p_a must be positive")
    upper = 0.5 * p_a**2
    lower = max(upper + V.min_value, 0.0)
    if upper - lower <= quad.ENERGY_FLOOR:
        energies = np.array([upper])
    else:
        # open at the lower end
        energies = lower + (upper - lower) * np.arange(1, samples + 1) / samples
    energies = energies[energies > quad.ENERGY_FLOOR]
    slopes = np.array([1.0 / quad.sigma(V, e, cfg) for e in energies])
    flag = p_a < math.sqrt(-2.0 * V.min_value)
    return SlopeFamily(lower, upper, energies, slopes, flag)


# -- boundary value problems ----------------------------------------------------

@dataclass(frozen=True)
class FixedEnergyBVP:
    arrival_time: float
    limit_time: float
    launch_speed: float
    bound: float

    @property
    def deviation(self) -> float:
        return abs(self.arrival_time - self.limit_time)


def bvp_fixed_energy(V: PeriodicPotential, E: float, q_a: float, q_b: float, eps: float,
                     cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> FixedEnergyBVP:
    """Arrival time T_eps = t_eps(q_b) against its limit sigma(E)(q_b - q_a)."""
    if not q_b > q_a:
        raise ValueError("requires q_b > q_a")
    T = quad.t_eps(V, E, eps, q_a, q_b, cfg)
    T_bar = quad.sigma(V, E, cfg) * (q_b - q_a)
    p = dynamics.initial_momentum_for_energy(V, E, q_a, eps)
    return FixedEnergyBVP(T, T_bar, p, 2.0 * eps / math.sqrt(2.0 * E))


def bvp_fixed_time(V: PeriodicPotential, T: float, q_a: float, q_b: float, eps: float,
                   tol: float = 1e-10, cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> float:
    """Energy E_eps with tau_eps(E_eps) = T, by bracket expansion and bisection.

    Raises
    ------
    BracketFailure
        If the lower end of the bracket falls below 1e-12.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not q_b > q_a:
        raise ValueError("requires q_b > q_a")

    def tau(e):
        return quad.tau_eps(V, e, eps, q_a, q_b, cfg)

    guess = max(0.5 * ((q_b - q_a) / T) ** 2, 2 * quad.ENERGY_FLOOR)
    e_lo = e_hi = guess
    while tau(e_hi) > T:
        e_hi *= 2.0
    while tau(e_lo) < T:
        e_lo *= 0.5
        if e_lo <= quad.ENERGY_FLOOR:
            raise BracketFailure(f"no energy bracket for T = {T}: e_lo underflowed")
    for _ in range(200):
        mid = 0.5 * (e_lo + e_hi)
        r = tau(mid) - T
        if abs(r) <= tol:
            return mid
        if r > 0:
            e_lo = mid
        else:
            e_hi = mid
        if e_hi - e_lo <= 2 * np.finfo(float).eps * e_hi:
            break
    return 0.5 * (e_lo + e_hi)


def fixed_time_energy_bounds(V: PeriodicPotential, T: float, q_a: float, q_b: float) -> tuple[float, float]:
    """Interval that must contain E_eps for every eps.

    Since min V <= V <= 0, (q_b - q_a)/sqrt(2(e - min V)) <= tau(e) <= (q_b - q_a)/sqrt(2e).
    """
    k = 0.5 * ((q_b - q_a) / T) ** 2
    return max(k + V.min_value, 0.0), k
