"""Norms, field comparisons, off-ray energy and log-log scaling fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, NumericalError
from .grid import ComplexField, require_periodic, require_same_grid


def seminorm_density(u: ComplexField, s: float) -> np.ndarray:
    """``|(-Delta)^{s/2} u|^2`` on the grid of ``u`` (multiplier ``|k|^s``)."""
    require_periodic(u)
    k = u.grid.wavenumbers()
    return np.abs(np.fft.ifft(np.abs(k) ** s * np.fft.fft(u.values))) ** 2


def hs_norm(u: ComplexField, s: float) -> float:
    """``sqrt(||u||^2 + ||(-Delta)^{s/2} u||^2)`` via Parseval."""
    require_periodic(u)
    k = u.grid.wavenumbers()
    p = np.abs(np.fft.fft(u.values)) ** 2
    return math.sqrt(u.grid.h / u.grid.n * float(np.dot(1.0 + np.abs(k) ** (2.0 * s), p)))


def compare_fields(u: ComplexField, z: ComplexField) -> float:
    require_same_grid(u, z)
    return (u - z).l2_norm()


def initial_mismatch(u0: ComplexField, z0: ComplexField) -> float:
    return compare_fields(u0, z0)


def off_ray_energy(z: ComplexField, ray_center: float, radius: float, s: float) -> float:
    """Seminorm energy of ``z`` outside ``|x - ray_center| <= radius``.

    The sharp indicator is applied to the periodic trapezoid sum; distances are
    taken on the periodic box so a picture that wraps around stays consistent.
    """
    if not radius > 0.0:
        raise DomainError(f"radius must be positive, got {radius!r}")
    d = seminorm_density(z, s)
    return float(z.grid.h * d[_distance(z, ray_center) > radius].sum())


def in_ball_energy(z: ComplexField, ray_center: float, radius: float, s: float) -> float:
    d = seminorm_density(z, s)
    return float(z.grid.h * d[_distance(z, ray_center) <= radius].sum())


def _distance(z: ComplexField, center: float) -> np.ndarray:
    L = z.grid.length
    r = np.abs(z.grid.x - center) % L
    return np.minimum(r, L - r)


def center_of_mass(u: ComplexField) -> float:
    """``int x |u|^2 / int |u|^2`` by the trapezoid rule on the grid nodes."""
    w = np.abs(u.values) ** 2
    x = u.grid.x
    if u.grid.periodic:
        den, num = w.sum(), np.dot(x, w)
    else:
        den, num = np.trapezoid(w, x), np.trapezoid(x * w, x)
    if not den > 0.0:
        raise NumericalError("center of mass of a zero field is undefined")
    return float(num / den)


def padded_seminorm_density(values: np.ndarray, h: float, s: float, pad: int = 4):
    """Seminorm density of FE nodal values extended by zero outside the interval.

    ``values`` are interior nodal values (rows are snapshots). Returns ``(offset, d)``
    with ``d[..., i]`` the density at ``x = a + (i - offset) h`` on a periodic box
    ``pad`` times larger than the interval, which keeps wrap-around negligible.
    """
    v = np.atleast_2d(values)
    n = v.shape[1] + 2
    N = 1 << int(math.ceil(math.log2(pad * n)))
    off = (N - n) // 2
    U = np.zeros((v.shape[0], N), dtype=complex)
    U[:, off + 1: off + n - 1] = v
    k = 2.0 * np.pi * np.fft.fftfreq(N, h)
    d = np.abs(np.fft.ifft(np.abs(k) ** s * np.fft.fft(U, axis=1), axis=1)) ** 2
    return off, d


def ray_energy_fraction(values: np.ndarray, a: float, h: float, s: float, centers, radius: float) -> np.ndarray:
    """Per snapshot, the share of seminorm energy within ``radius`` of ``centers``."""
    off, d = padded_seminorm_density(values, h, s)
    x = a + (np.arange(d.shape[1]) - off) * h
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    if centers.size != d.shape[0]:
        raise ContractError(f"{centers.size} centres for {d.shape[0]} snapshots")
    near = np.abs(x[None, :] - centers[:, None]) < radius
    tot = d.sum(axis=1)
    return (d * near).sum(axis=1) / tot


@dataclass(frozen=True)
class ScalingReport:
    metric_name: str
    samples: tuple
    slope: float
    intercept: float
    r2: float

    def to_dict(self) -> dict:
        return {
            "metric": self.metric_name,
            "samples": [{"eps": e, "value": v} for e, v in self.samples],
            "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
        }


def fit_scaling(samples, metric_name: str = "metric", min_samples: int = 4) -> ScalingReport:
    """Least-squares line through ``(log eps, log value)``."""
    pts = sorted(((float(e), float(v)) for e, v in samples), key=lambda p: -p[0])
    kept = []
    for e, v in pts:
        if not (e > 0.0 and v > 0.0 and math.isfinite(v)):
            warnings.warn(f"{metric_name}: dropping sample eps={e!r}, value={v!r}", RuntimeWarning, stacklevel=2)
            continue
        kept.append((e, v))
    if len(kept) < min_samples:
        raise NumericalError(f"{metric_name}: {len(kept)} usable samples, need at least {min_samples}")
    eps = [e for e, _ in kept]
    if len(set(eps)) != len(eps):
        raise DomainError(f"{metric_name}: eps values must be distinct")
    lx = np.log(np.array(eps))
    ly = np.log(np.array([v for _, v in kept]))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 1.0
    if not math.isfinite(slope):
        raise NumericalError(f"{metric_name}: fitted slope is not finite")
    return ScalingReport(metric_name, tuple(kept), float(slope), float(intercept), r2)
