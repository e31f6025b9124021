"""
Cell-periodic potentials represented as finite cosine series.

A potential is

    V(x) = c0 + sum_k a_k cos(2 pi k . x)

over integer multi-indices k != 0, with the offset c0 chosen so that the
maximum over the unit cell is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
NORMALIZATION_TOL = 1e-8

Mode = tuple[tuple[int, ...], float]


def _grid_points_per_axis(dim: int) -> int:
    return 1024 if dim <= 2 else 128


@dataclass(frozen=True)
class PeriodicPotential:
    """Immutable [0,1]^d-periodic cosine series.

    Parameters
    ----------
    dim : int
        Space dimension, 1 to 3.
    modes : tuple of ((k1, ..., kd), amplitude)
        Nonzero integer wave vectors with their cosine amplitudes.
    offset : float
        Constant term c0.
    anchor : tuple of float, optional
        A maximizer.  When set, values are summed as differences from the
        anchor in half-angle form, which avoids cancellation near the max.
    """

    dim: int
    modes: tuple[Mode, ...] = ()
    offset: float = 0.0
    anchor: tuple[float, ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        for k, _ in self.modes:
            if len(k) != self.dim:
                raise ValueError(f"mode {k} does not match dimension {self.dim}")
            if not any(k):
                raise ValueError("the zero mode is the offset, not a series term")
        if self.anchor is not None and len(self.anchor) != self.dim:
            raise ValueError("anchor does not match dimension")

    # -- series data --------------------------------------------------------

    @cached_property
    def _wave_vectors(self) -> np.ndarray:
        if not self.modes:
            return np.zeros((0, self.dim))
        return np.array([k for k, _ in self.modes], dtype=float)

    @cached_property
    def _amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.modes], dtype=float)

    @property
    def curvature_bound(self) -> float:
        """C_V with V'' > -C_V along every direction, (2 pi)^2 sum |k|^2 |a_k|."""
        K = self._wave_vectors
        return float(TWO_PI**2 * np.sum(np.sum(K**2, axis=1) * np.abs(self._amplitudes)))

    @property
    def is_zero(self) -> bool:
        return not self.modes or not np.any(self._amplitudes)

    def _as_points(self, x) -> tuple[np.ndarray, tuple[int, ...]]:
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x.reshape(-1, 1), x.shape
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x.reshape(-1, self.dim), x.shape[:-1]

    def _phases(self, pts: np.ndarray) -> np.ndarray:
        return TWO_PI * pts @ self._wave_vectors.T

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        return self.value(x)

    @cached_property
    def _anchor_data(self) -> tuple[np.ndarray, float]:
        th = self._phases(np.array(self.anchor, dtype=float)[None, :])[0]
        return th, float(self.offset + np.cos(th) @ self._amplitudes)

    def value(self, x):
        """V(x). Scalar in, scalar out; arrays broadcast over leading axes."""
        pts, shape = self._as_points(x)
        if self.modes and self.anchor is not None:
            th_a, base = self._anchor_data
            th = self._phases(pts)
            # cos th - cos th_a = -2 sin((th + th_a)/2) sin((th - th_a)/2)
            diff = -2.0 * np.sin(0.5 * (th + th_a)) * np.sin(0.5 * (th - th_a))
            v = base + diff @ self._amplitudes
        elif self.modes:
            v = self.offset + np.cos(self._phases(pts)) @ self._amplitudes
        else:
            v = np.full(len(pts), float(self.offset))
        v = v.reshape(shape)
        return float(v) if v.ndim == 0 else v

    def value_near(self, x0, s):
        """V(x0 + s) for small displacements s, without forming x0 + s.

        Only the d = 1 case is needed by the cell integrals; s broadcasts.
        """
        if self.dim != 1:
            raise ValueError("value_near is implemented for d = 1")
        s = np.asarray(s, dtype=float)
        if not self.modes:
            return np.full(s.shape, float(self.offset))
        k = self._wave_vectors[:, 0]
        th0 = TWO_PI * k * float(x0)
        half = math.pi * s[..., None] * k
        diff = -2.0 * np.sin(th0 + half) * np.sin(half)
        return self.value(float(x0)) + diff @ self._amplitudes

    def gradient(self, x):
        """Analytic gradient. For d = 1 the result has the shape of x."""
        pts, shape = self._as_points(x)
        if self.modes:
            coef = -TWO_PI * np.sin(self._phases(pts)) * self._amplitudes
            g = coef @ self._wave_vectors
        else:
            g = np.zeros_like(pts)
        if self.dim == 1:
            g = g[:, 0].reshape(shape)
            return float(g) if g.ndim == 0 else g
        return g.reshape(shape + (self.dim,))

    def hessian(self, x):
        """Analytic Hessian, shape (..., d, d); scalar second derivative for d = 1."""
        pts, shape = self._as_points(x)
        K = self._wave_vectors
        if self.modes:
            coef = -(TWO_PI**2) * np.cos(self._phases(pts)) * self._amplitudes
            H = np.einsum("nm,mi,mj->nij", coef, K, K)
        else:
            H = np.zeros((len(pts), self.dim, self.dim))
        if self.dim == 1:
            h = H[:, 0, 0].reshape(shape)
            return float(h) if h.ndim == 0 else h
        return H.reshape(shape + (self.dim, self.dim))

    # -- extrema ------------------------------------------------------------

    def _series_only(self) -> "PeriodicPotential":
        return PeriodicPotential(self.dim, self.modes, 0.0)

    @cached_property
    def _max_location(self) -> tuple[np.ndarray, float]:
        return _locate_extremum(self, +1)

    @cached_property
    def _min_location(self) -> tuple[np.ndarray, float]:
        return _locate_extremum(self, -1)

    @property
    def max_value(self) -> float:
        return self._max_location[1]

    @property
    def argmax(self) -> np.ndarray:
        return self._max_location[0].copy()

    @property
    def min_value(self) -> float:
        """min V over the cell (grid scan plus Newton refinement)."""
        return self._min_location[1]

    @property
    def argmin(self) -> np.ndarray:
        return self._min_location[0].copy()

    @cached_property
    def maximizers_1d(self) -> tuple[float, ...]:
        """All global maximizers in [0, 1) of a one-dimensional potential."""
        if self.dim != 1:
            raise ValueError("maximizers_1d requires d = 1")
        if self.is_zero:
            return (0.0,)
        n = _grid_points_per_axis(1) * 4
        xs = np.arange(n) / n
        vs = self.value(xs)
        is_peak = (vs >= np.roll(vs, 1)) & (vs >= np.roll(vs, -1))
        vmax = vs.max()
        spread = max(vmax - vs.min(), 1e-300)
        candidates = xs[is_peak & (vs >= vmax - 1e-2 * spread)]
        found = []
        for x0 in candidates:
            x = _newton_1d_critical(self, float(x0), 1.0 / n)
            found.append((x % 1.0, self.value(x)))
        top = max(v for _, v in found)
        out = sorted({round(x, 13) % 1.0 for x, v in found if v >= top - 1e-12})
        return tuple(out)


def _newton_1d_critical(V: PeriodicPotential, x: float, width: float) -> float:
    lo, hi = x - width, x + width
    for _ in range(60):
        g = V.gradient(x)
        h = V.hessian(x)
        if h == 0.0:
            break
        step = g / h
        x_new = x - step
        if not lo <= x_new <= hi:
            break
        x = x_new
        if abs(step) < 1e-16:
            break
    return x


def _locate_extremum(V: PeriodicPotential, sign: int) -> tuple[np.ndarray, float]:
    """Dense grid scan followed by Newton/ascent refinement of sign*V."""
    if V.is_zero:
        return np.zeros(V.dim), float(V.offset)
    n = _grid_points_per_axis(V.dim)
    axes = [np.arange(n) / n] * V.dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, V.dim)
    vals = sign * np.atleast_1d(V.value(grid if V.dim > 1 else grid[:, 0]))
    order = np.argsort(vals)[::-1][:8]
    best_x, best_v = None, -np.inf
    for idx in order:
        x = grid[idx].copy()
        x = _refine(V, x, sign, 1.0 / n)
        v = sign * float(V.value(x if V.dim > 1 else x[0]))
        if v > best_v:
            best_x, best_v = x, v
    return np.mod(best_x, 1.0), sign * best_v


def _refine(V: PeriodicPotential, x: np.ndarray, sign: int, width: float) -> np.ndarray:
    # Newton on grad = 0 with a fallback gradient-ascent step; stays within the grid cell.
    x0 = x.copy()
    step_len = width / 4
    for _ in range(100):
        pt = x if V.dim > 1 else x[0]
        g = np.atleast_1d(V.gradient(pt)) * sign
        H = np.atleast_2d(V.hessian(pt)) * sign
        try:
            dx = -np.linalg.solve(H, g)
            newton_ok = np.all(np.linalg.eigvalsh(H) < 0)
        except np.linalg.LinAlgError:
            newton_ok = False
        if not newton_ok:
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            dx = step_len * g / gn
        x_new = x + dx
        if np.max(np.abs(x_new - x0)) > 2 * width:
            break
        pt_new = x_new if V.dim > 1 else x_new[0]
        if sign * V.value(pt_new) < sign * V.value(pt) - 1e-15:
            step_len /= 2
            if step_len < 1e-14:
                break
            continue
        x = x_new
        if np.max(np.abs(dx)) < 1e-15:
            break
    return x


def normalize_max_zero(V: PeriodicPotential) -> PeriodicPotential:
    """Return a copy of V whose offset makes the cell maximum exactly 0.

    Raises
    ------
    ValueError
        For d > 3, where the grid scan is not feasible.
    """
    if V.dim > 3:
        raise ValueError(f"max normalization supports d <= 3, got d = {V.dim}")
    series = V._series_only()
    anchor = tuple(float(c) for c in series.argmax)
    return PeriodicPotential(V.dim, V.modes, -series.max_value, anchor, name=V.name)


def from_modes(dim: int, modes: Iterable[tuple[Sequence[int], float]], name: str = "") -> PeriodicPotential:
    """Build a max-zero potential from (wave vector, amplitude) pairs."""
    merged: dict[tuple[int, ...], float] = {}
    for k, a in modes:
        k = tuple(int(c) for c in np.atleast_1d(k))
        merged[k] = merged.get(k, 0.0) + float(a)
    clean = tuple((k, a) for k, a in merged.items() if a != 0.0)
    return normalize_max_zero(PeriodicPotential(dim, clean, 0.0, name=name))


# -- builtins and descriptor files -------------------------------------------

def zero(dim: int = 1) -> PeriodicPotential:
    return PeriodicPotential(dim, (), 0.0, name="zero")


def cos1d() -> PeriodicPotential:
    """(cos 2 pi x - 1)/2: max 0 at integers, min -1 at half-integers."""
    return PeriodicPotential(1, (((1,), 0.5),), -0.5, (0.0,), name="cos1d")


def cos2d() -> PeriodicPotential:
    """(cos 2 pi x + cos 2 pi y - 2)/4."""
    return PeriodicPotential(2, (((1, 0), 0.25), ((0, 1), 0.25)), -0.5, (0.0, 0.0), name="cos2d")


BUILTINS = {"zero": zero, "cos1d": cos1d, "cos2d": cos2d}


def parse_descriptor(text: str, name: str = "") -> PeriodicPotential:
    """Parse the key-value descriptor format.

    ::

        dim 2
        mode 1 0 0.25
        mode 0 1 0.25
        offset -0.5      # optional

    Without ``offset`` the series is normalized to max 0. An explicit offset
    must already satisfy the normalization.
    """
    dim = None
    modes = []
    offset = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        try:
            if key == "dim":
                dim = int(vals[0])
            elif key == "mode":
                if dim is None:
                    raise ValueError("'dim' must precede 'mode' lines")
                if len(vals) != dim + 1:
                    raise ValueError(f"expected {dim} indices and an amplitude")
                modes.append((tuple(int(v) for v in vals[:dim]), float(vals[dim])))
            elif key == "offset":
                offset = float(vals[0])
            else:
                raise ValueError(f"unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"potential descriptor line {lineno}: {exc}") from None
    if dim is None:
        raise ValueError("potential descriptor is missing 'dim'")
    if dim > 3:
        raise ValueError(f"dimension {dim} not supported (d <= 3)")
    V = from_modes(dim, modes, name=name)
    if offset is not None:
        if abs(offset - V.offset) > NORMALIZATION_TOL:
            raise ValueError(
                f"offset {offset} does not normalize the maximum to 0 (expected {V.offset:.12g})"
            )
    # the computed offset is kept, so max V = 0 to rounding either way
    return V


def load(source: str) -> PeriodicPotential:
    """Builtin name (zero, cos1d, cos2d) or path to a descriptor file."""
    if source in BUILTINS:
        return BUILTINS[source]()
    path = Path(source)
    if not path.is_file():
        raise ValueError(f"unknown potential {source!r}: not a builtin and no such file")
    return parse_descriptor(path.read_text(), name=path.stem)


def format_descriptor(V: PeriodicPotential) -> str:
    lines = [f"dim {V.dim}"]
    for k, a in V.modes:
        lines.append("mode " + " ".join(str(c) for c in k) + f" {a!r}")
    lines.append(f"offset {V.offset!r}")
    return "\n".join(lines) + "\n"

