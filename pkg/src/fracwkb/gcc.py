"""Geometric control condition on an interval: does every sampled ray meet the control set in time?

The reflected path of a ray does not depend on its speed except through time, so a
ray with speed ``v`` first enters the control set at ``D / v`` where ``D`` is the
path length travelled at unit speed. Verdicts are exact for the sampled rays only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .rays import BoundedDomain, Ray, RayPath, group_velocity, reflect_ray


@dataclass(frozen=True)
class ControlRegion:
    """Union of disjoint open intervals ``(lo, hi)``."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        if not iv:
            raise ContractError("control region needs at least one interval")
        for a, b in iv:
            if not a < b:
                raise DomainError(f"empty interval ({a}, {b})")
        for (_, b0), (a1, _) in zip(iv, iv[1:]):
            if a1 < b0:
                raise DomainError(f"intervals overlap near {a1}")
        object.__setattr__(self, "intervals", iv)

    def check_inside(self, dom: BoundedDomain):
        lo, hi = self.intervals[0][0], self.intervals[-1][1]
        if lo < dom.left or hi > dom.right:
            raise ContractError(f"control region [{lo}, {hi}] leaves the domain ({dom.left}, {dom.right})")

    def contains(self, x: float) -> bool:
        return any(a < x < b for a, b in self.intervals)

    def to_list(self) -> list:
        return [list(iv) for iv in self.intervals]


def boundary_collars(dom: BoundedDomain, delta: float) -> ControlRegion:
    """``(left, left + delta) U (right - delta, right)``."""
    if not 0.0 < 2.0 * delta <= dom.width:
        raise DomainError(f"collar width {delta} does not fit in the domain")
    if 2.0 * delta == dom.width:
        return ControlRegion(((dom.left, dom.right),))
    return ControlRegion(((dom.left, dom.left + delta), (dom.right - delta, dom.right)))


@dataclass(frozen=True)
class GccVerdict:
    observable: bool
    witness: tuple | None
    min_time_estimate: float | None
    sampled: bool = True

    def __post_init__(self):
        if not self.observable and self.witness is None:
            raise ContractError("a negative verdict needs a witness ray")

    def to_dict(self) -> dict:
        w = None if self.witness is None else dict(zip(("x0", "xi0", "sign"), self.witness))
        return {"observable": self.observable, "witness": w,
                "min_time_estimate": self.min_time_estimate, "sampled_pass": self.sampled and self.observable}


def first_hit_on_path(path: RayPath, region: ControlRegion) -> float:
    """Infimum of times at which the path is strictly inside the region (``inf`` if never)."""
    for t0, t1, x0, x1 in path.segments():
        if region.contains(x0):
            return float(t0)
        lo, hi = min(x0, x1), max(x0, x1)
        if x1 == x0:
            continue
        best = math.inf
        for a, b in region.intervals:
            if b <= lo or a >= hi:
                continue
            edge = a if x1 > x0 else b
            edge = min(max(edge, lo), hi)
            best = min(best, t0 + (edge - x0) / (x1 - x0) * (t1 - t0))
        if best < math.inf:
            return float(best)
    return math.inf


def hitting_distance(region: ControlRegion, dom: BoundedDomain, x0: float, direction: int) -> float:
    """Unit-speed path length from ``x0`` until the region is first entered."""
    if not dom.contains(x0):
        raise ContractError(f"x0={x0} is not inside ({dom.left}, {dom.right})")
    # at s = 1/2 the ray speed is exactly one, so its path is the unit-speed billiard
    unit = Ray(x0=x0, xi0=-float(direction), sign=int(direction), s=0.5)
    return first_hit_on_path(reflect_ray(unit, dom, 2.0 * dom.width), region)


def first_hit_time(region: ControlRegion, dom: BoundedDomain, s: float, x0: float, xi0: float, sign: int) -> float:
    v = group_velocity(s, abs(xi0)) if xi0 != 0.0 else (1.0 if s == 0.5 else 0.0)
    if region.contains(x0):
        return 0.0
    if v == 0.0:
        return math.inf
    ray = Ray(x0=x0, xi0=xi0, sign=sign, s=s)
    return first_hit_on_path(reflect_ray(ray, dom, 2.0 * dom.width / v), region)


def _samples(freq_set, x0_samples, dom):
    freqs = [float(f) for f in freq_set]
    xs = [float(x) for x in x0_samples]
    if not freqs or not xs:
        raise ContractError("frequency and position samples must be nonempty")
    if any(f == 0.0 for f in freqs):
        raise DomainError("frequency samples must be nonzero")
    for x in xs:
        if not dom.contains(x):
            raise ContractError(f"x0={x} is not inside ({dom.left}, {dom.right})")
    return freqs, xs


def check_gcc(region: ControlRegion, dom: BoundedDomain, T: float, s: float, freq_set, x0_samples,
              *, tol: float = 0.0) -> GccVerdict:
    """Every sampled ray ``(x0, xi0, +-)`` must enter the region before ``T + tol``."""
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T!r}")
    region.check_inside(dom)
    freqs, xs = _samples(freq_set, x0_samples, dom)
    worst = 0.0
    for xi0 in freqs:
        for x0 in xs:
            for sign in (1, -1):
                t_hit = first_hit_time(region, dom, s, x0, xi0, sign)
                if t_hit > T + tol:
                    return GccVerdict(False, (x0, xi0, sign), None)
                worst = max(worst, t_hit)
    return GccVerdict(True, None, worst)


def min_control_time(region: ControlRegion, dom: BoundedDomain, s: float, freq_set, x0_grid) -> float:
    """Largest first-hitting time over the sampled rays (``inf`` for a stuck ray outside the region)."""
    region.check_inside(dom)
    freqs, xs = _samples(freq_set, x0_grid, dom)
    worst = 0.0
    for xi0 in freqs:
        for x0 in xs:
            for sign in (1, -1):
                worst = max(worst, first_hit_time(region, dom, s, x0, xi0, sign))
    return worst


def frequency_threshold(region: ControlRegion, dom: BoundedDomain, s: float, T: float, x0_samples) -> float:
    """For ``s > 1/2``: smallest ``|xi0|`` above which every sampled ray is observed by ``T``."""
    if not s > 0.5:
        raise DomainError("a frequency threshold exists only for s > 1/2")
    D = max(hitting_distance(region, dom, float(x), d) for x in x0_samples for d in (1, -1))
    if D == 0.0:
        return 0.0
    v_needed = D / T
    return (v_needed / (2.0 * s)) ** (1.0 / (2.0 * s - 1.0))


def velocity_trend(v) -> str:
    """Trend of speeds listed in increasing ``|xi0|``."""
    d = np.diff(np.asarray(v, dtype=float))
    if np.all(d == 0.0):
        return "constant"
    if np.all(d > 0.0):
        return "increasing"
    if np.all(d < 0.0):
        return "decreasing"
    return "mixed"


def expected_trend(s: float) -> str:
    if s < 0.5:
        return "decreasing"
    return "constant" if s == 0.5 else "increasing"


@dataclass(frozen=True)
class TrichotomyTable:
    rows: tuple
    trends: dict

    columns = ("s", "xi0", "v", "observable")

    def trend_matches(self) -> dict:
        return {s: t == expected_trend(s) for s, t in self.trends.items()}


def trichotomy_table(s_values, xi_values, region: ControlRegion, dom: BoundedDomain, T: float,
                     x0_samples=(0.0,)) -> TrichotomyTable:
    """Rows ``(s, xi0, v, observable)`` and the velocity trend in ``|xi0|`` per order."""
    s_values = [float(s) for s in s_values]
    xi_values = sorted({abs(float(x)) for x in xi_values})
    if not s_values or not xi_values:
        raise ContractError("trichotomy table needs nonempty s and xi grids")
    rows, trends = [], {}
    for s in s_values:
        v = np.asarray(group_velocity(s, np.array(xi_values)), dtype=float)
        trends[s] = velocity_trend(v)
        for xi0, vi in zip(xi_values, v):
            ok = check_gcc(region, dom, T, s, [xi0], x0_samples).observable
            rows.append((s, xi0, float(vi), ok))
    return TrichotomyTable(tuple(rows), trends)
