"""Bicharacteristics of ``i d_t + (-Delta)^s``, rays, and 1-D specular reflection.

The symbol ``tau - |xi|^{2s}`` gives straight rays ``x(t) = x0 + sign * v t``
with group speed ``v = 2s |xi0|^{2s-1}``; the bicharacteristic parameter is
identified with physical time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, NumericalError

MAX_REFLECTIONS = 10**6


def group_velocity(s: float, xi0) -> np.ndarray | float:
    """Ray speed ``2s |xi0|^{2s-1}``; vectorised over ``xi0``."""
    if not (0.0 < s < 1.0):
        raise DomainError(f"s must lie in (0, 1), got {s!r}")
    xi = np.abs(np.asarray(xi0, dtype=float))
    if np.any(xi == 0.0):
        if s < 0.5:
            raise DomainError("group velocity is singular at xi0 = 0 for s < 1/2")
    with np.errstate(divide="ignore"):
        v = 2.0 * s * xi ** (2.0 * s - 1.0)
    if s == 0.5:
        v = np.ones_like(xi)
    return float(v) if v.ndim == 0 else v


def propagation_sign(xi0: float) -> int:
    """Direction a packet with carrier ``e^{i xi0 x}`` actually travels.

    Plane waves evolve as ``e^{i(k x + |k|^{2s} t)}``, so the envelope moves
    with ``-d|k|^{2s}/dk``: leftwards for positive carriers.
    """
    return -1 if xi0 > 0 else 1


@dataclass(frozen=True)
class Ray:
    x0: float
    xi0: float
    sign: int
    s: float
    t0: float = 0.0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign!r}")
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"s must lie in (0, 1), got {self.s!r}")
        if self.xi0 == 0.0 and self.s < 0.5:
            raise DomainError("xi0 = 0 gives a singular ray for s < 1/2")

    @property
    def speed(self) -> float:
        return group_velocity(self.s, self.xi0)

    @property
    def velocity(self) -> float:
        return self.sign * self.speed

    @property
    def tau0(self) -> float:
        return abs(self.xi0) ** (2.0 * self.s)


@dataclass(frozen=True)
class BoundedDomain:
    left: float
    right: float

    def __post_init__(self):
        if not self.left < self.right:
            raise DomainError(f"domain needs left < right, got ({self.left}, {self.right})")

    @property
    def width(self) -> float:
        return self.right - self.left

    def contains(self, x: float) -> bool:
        return self.left < x < self.right


def ray_position(r: Ray, t):
    """``x0 + sign * 2s|xi0|^{2s-1} * t`` on the free line."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("ray_position needs t >= 0")
    x = r.x0 + r.velocity * t
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    tau: np.ndarray


def _bichar_rhs(state: np.ndarray, sign: int, s: float) -> np.ndarray:
    xi = state[2]
    return np.array([sign * 2.0 * s * abs(xi) ** (2.0 * s - 1.0), 1.0, 0.0, 0.0])


def integrate_bicharacteristics(r: Ray, t_end: float, dt: float) -> Trajectory:
    """Classical RK4 on ``(x, t, xi, tau)`` for the Hamiltonian flow of the symbol."""
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    n = max(1, int(round(t_end / dt)))
    h = t_end / n
    out = np.empty((n + 1, 4))
    y = np.array([r.x0, r.t0, r.xi0, r.tau0], dtype=float)
    out[0] = y
    for i in range(n):
        k1 = _bichar_rhs(y, r.sign, r.s)
        k2 = _bichar_rhs(y + 0.5 * h * k1, r.sign, r.s)
        k3 = _bichar_rhs(y + 0.5 * h * k2, r.sign, r.s)
        k4 = _bichar_rhs(y + h * k3, r.sign, r.s)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return Trajectory(t=out[:, 1], x=out[:, 0], xi=out[:, 2], tau=out[:, 3])


@dataclass(frozen=True)
class RayPath:
    """Piecewise-linear reflected ray with ordered breakpoints ``(t_i, x_i)``."""

    t: np.ndarray
    x: np.ndarray

    def position(self, t) -> np.ndarray | float:
        out = np.interp(t, self.t, self.x)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def n_reflections(self) -> int:
        return max(0, self.t.size - 2)

    def arc_length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.x))))

    def segments(self):
        for i in range(self.t.size - 1):
            yield self.t[i], self.t[i + 1], self.x[i], self.x[i + 1]

    def csv_rows(self):
        return [(float(t), float(x)) for t, x in zip(self.t, self.x)]


def reflect_ray(r: Ray, dom: BoundedDomain, t_end: float) -> RayPath:
    """Specular reflection in ``dom``: the velocity flips at each wall, speed is kept."""
    if not dom.left < r.x0 < dom.right:
        raise ContractError(f"x0={r.x0} is not inside ({dom.left}, {dom.right})")
    if t_end < 0.0:
        raise DomainError("t_end must be nonnegative")
    v = r.velocity if r.xi0 != 0.0 else 0.0
    if v == 0.0 or t_end == 0.0:
        return RayPath(np.array([0.0, t_end]), np.array([r.x0, r.x0]))
    speed = abs(v)
    first = (dom.right - r.x0) / speed if v > 0 else (r.x0 - dom.left) / speed
    period = dom.width / speed
    n_hits = 0 if first > t_end else int(math.floor((t_end - first) / period)) + 1
    if n_hits > MAX_REFLECTIONS:
        raise NumericalError(f"ray needs {n_hits} reflections (> {MAX_REFLECTIONS}) before t={t_end}")
    hits = first + period * np.arange(n_hits)
    walls_right = (np.arange(n_hits) % 2 == 0) == (v > 0)
    xs = np.where(walls_right, dom.right, dom.left)
    t_pts = [0.0, *hits.tolist()]
    x_pts = [r.x0, *xs.tolist()]
    if not t_pts or t_pts[-1] < t_end:
        last_dir = np.sign(v) * (-1.0) ** n_hits
        t_pts.append(t_end)
        x_pts.append(x_pts[-1] + last_dir * speed * (t_end - t_pts[-2]))
    return RayPath(np.asarray(t_pts), np.asarray(x_pts))


def velocity_curve(s: float, xi_values) -> np.ndarray:
    """``(xi0, v)`` pairs for the velocity-versus-frequency plot."""
    xi = np.asarray(xi_values, dtype=float)
    return np.column_stack([xi, group_velocity(s, xi)])
