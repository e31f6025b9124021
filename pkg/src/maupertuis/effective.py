"""
Effective Hamiltonian of the homogenized 1D Hamilton-Jacobi equation.

H(p) = 0 on the flat piece |p| <= p_crit = int_0^1 sqrt(-2V), and beyond it
H(p) = alpha where p(alpha) = int_0^1 sqrt(2(alpha - V)) = |p|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import quadrature as quad
from .errors import FlatPiece
from .homogenize import Line
from .potential import PeriodicPotential


def p_critical(V: PeriodicPotential, cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> float:
    """Width of the flat piece, int_0^1 sqrt(-2 V).

    The integrand has kinks at the maximizers of V, so the cell is split
    there and integrated with endpoint-graded panels.
    """
    if V.dim != 1:
        raise ValueError("p_critical requires d = 1")
    if V.is_zero:
        return 0.0
    return quad.cell_integral(lambda v: np.sqrt(np.maximum(-2.0 * v, 0.0)), V, cfg)


@dataclass
class EffectiveHamiltonian1D:
    """Tabulated inverse of p(alpha) with Newton polishing.

    Use :meth:`build` rather than the constructor.
    """

    potential: PeriodicPotential
    p_crit: float
    alphas: np.ndarray
    momenta: np.ndarray
    tol: float = 1e-14
    cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG
    _guess: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.momenta) <= 0):
            raise ValueError("p(alpha) table is not strictly increasing")
        self._guess = PchipInterpolator(self.momenta, np.log(self.alphas))

    @classmethod
    def build(cls, V: PeriodicPotential, alpha_min: float = 1e-4, alpha_max: float = 1e2,
              points: int = 61, table_tol: float = 1e-3,
              cfg: quad.QuadratureConfig = quad.DEFAULT_CONFIG) -> "EffectiveHamiltonian1D":
        """Log-spaced table, refined at midpoints until the interpolated
        initial guess is within ``table_tol`` (relative) of the true alpha."""
        alphas = np.geomspace(alpha_min, alpha_max, points)
        momenta = np.array([quad.p_of_alpha(V, a, cfg) for a in alphas])
        for _ in range(20):
            guess = PchipInterpolator(momenta, np.log(alphas))
            mid_a = np.sqrt(alphas[:-1] * alphas[1:])
            mid_p = np.array([quad.p_of_alpha(V, a, cfg) for a in mid_a])
            bad = np.abs(np.exp(guess(mid_p)) / mid_a - 1.0) > table_tol
            if not np.any(bad):
                break
            alphas = np.concatenate([alphas, mid_a[bad]])
            momenta = np.concatenate([momenta, mid_p[bad]])
            order = np.argsort(alphas)
            alphas, momenta = alphas[order], momenta[order]
        return cls(V, p_critical(V, cfg), alphas, momenta, cfg=cfg)

    def p_of_alpha(self, alpha: float) -> float:
        return quad.p_of_alpha(self.potential, alpha, self.cfg)

    def on_flat_piece(self, p: float) -> bool:
        return abs(p) <= self.p_crit

    def _invert(self, target: float) -> float:
        # bracket [lo, hi] with p(lo) <= target <= p(hi); p(0) = p_crit
        lo, hi = 0.0, None
        j = np.searchsorted(self.momenta, target)
        if j == 0:
            hi = float(self.alphas[0])
        elif j == len(self.momenta):
            lo = float(self.alphas[-1])
            hi = 2.0 * lo
            while self.p_of_alpha(hi) < target:
                lo, hi = hi, 2.0 * hi
        else:
            lo, hi = float(self.alphas[j - 1]), float(self.alphas[j])
        if lo > 0 and j not in (0, len(self.momenta)):
            a = float(np.exp(self._guess(target)))
        else:
            a = hi
        a = min(max(a, lo), hi)
        for _ in range(200):
            r = self.p_of_alpha(a) - target
            if abs(r) <= self.tol * max(1.0, target):
                return a
            if r > 0:
                hi = a
            else:
                lo = a
            step = a - r / quad.sigma(self.potential, a, self.cfg)
            if not lo < step < hi:
                step = math.sqrt(lo * hi) if lo > 0 else 0.1 * hi
            if step <= quad.ENERGY_FLOOR:
                # target is within rounding of p_crit
                return quad.ENERGY_FLOOR * 2
            if abs(step - a) <= 4 * np.finfo(float).eps * a:
                return step
            a = step
        return a

    def hbar(self, p):
        """Effective Hamiltonian; total function, even in p. Accepts arrays."""
        arr = np.asarray(p, dtype=float)
        out = np.array([0.0 if self.on_flat_piece(v) else self._invert(abs(v)) for v in arr.ravel()])
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def hbar_prime(self, p, strict: bool = False):
        """Derivative sign(p)/sigma(hbar(p)); exactly 0 on the flat piece.

        Raises
        ------
        FlatPiece
            On the flat piece when ``strict`` is set.
        """
        arr = np.asarray(p, dtype=float)
        vals = []
        for v in arr.ravel():
            if self.on_flat_piece(v):
                if strict:
                    raise FlatPiece(f"|p| = {abs(v)} <= p_crit = {self.p_crit}")
                vals.append(0.0)
            else:
                vals.append(math.copysign(1.0, v) / quad.sigma(self.potential, self._invert(abs(v)), self.cfg))
        out = np.array(vals)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def hj_characteristic_flow(H: EffectiveHamiltonian1D, E: float, q_a: float) -> Line:
    """Characteristic through q_a at energy E: p = p(E) frozen, q' = H'(p)."""
    p = H.p_of_alpha(quad.check_energy(E))
    return Line(H.hbar_prime(p), float(q_a))


@dataclass(frozen=True)
class HJSolution:
    """Separated solution u(x, t) = sign * p(E) x + E t + C."""

    sign: int
    energy: float
    slope: float
    constant: float

    def __call__(self, x, t):
        return self.sign * self.slope * np.asarray(x, dtype=float) + self.energy * np.asarray(t, dtype=float) + self.constant

    @property
    def du_dx(self) -> float:
        return self.sign * self.slope

    @property
    def du_dt(self) -> float:
        return self.energy

    def residual(self, H: EffectiveHamiltonian1D, x, t):
        """d_t u - H(d_x u) at the given points (constant for this ansatz)."""
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return np.full(x.shape, self.du_dt - H.hbar(self.du_dx))


def hj_solution(H: EffectiveHamiltonian1D, E: float, sign: int = 1, C: float = 0.0) -> HJSolution:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    E = quad.check_energy(E)
    return HJSolution(sign, E, H.p_of_alpha(E), float(C))
