"""WKB quasi-solutions ``z = eps^s e^{i(xi0 x/eps + xi0^{2s} t/eps^{2s})} sum_j eps^{sj/2} a_j``.

The amplitudes solve a triangular cascade on the slow time ``tau = eps^{3s/2} t``:

    i d_tau a_j + C_{s/2} D^{s/2} a_j = H_j(a_0, ..., a_{j-1})

with ``D^beta`` acting as the multiplier ``-|k|^beta``. Every line shares the
propagator ``exp(-i C_{s/2} |k|^{s/2} tau)`` so the whole cascade is solved mode
by mode in Fourier space; sources enter through a Duhamel integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import DivergenceError, DomainError
from .frac_core import FracContext
from .grid import ComplexField, Grid1D, require_periodic, require_same_grid

GROWTH_CAP = 1e6


def _check_growth(omega: np.ndarray, tau_max: float):
    """Abort when ``|exp(-i omega tau)|`` could exceed the cap on ``[0, tau_max]``."""
    worst = np.max(np.abs(np.imag(omega))) * tau_max
    if worst > math.log(GROWTH_CAP):
        raise DivergenceError(
            f"mode-wise propagator grows by e^{worst:.3g} > {GROWTH_CAP:g} over tau <= {tau_max:g}; "
            "an imaginary part of C_{s/2} makes high modes unstable at this resolution")


def propagator_rate(ctx: FracContext, k: np.ndarray, constants: dict | None = None) -> np.ndarray:
    """``omega(k) = C_{s/2} |k|^{s/2}`` so that ``a_0^(k, tau) = e^{-i omega tau} g_0^(k)``."""
    c = _constants(ctx, constants)
    return c["half"] * np.abs(k) ** (0.5 * ctx.s)


def _constants(ctx: FracContext, override: dict | None) -> dict:
    out = {"half": ctx.C(0.5 * ctx.s), "one": ctx.C(ctx.s), "three_half": ctx.C(1.5 * ctx.s)}
    if override:
        unknown = set(override) - set(out)
        if unknown:
            raise DomainError(f"unknown constant names {sorted(unknown)}; use half, one, three_half")
        out.update({k: complex(v) for k, v in override.items()})
    return out


def solve_a0(g0: ComplexField, ctx: FracContext, tau: float) -> ComplexField:
    """Free slow evolution ``i d_tau a + C_{s/2} D^{s/2} a = 0`` from ``g0``."""
    require_periodic(g0)
    if tau < 0.0:
        raise DomainError(f"tau must be nonnegative, got {tau!r}")
    omega = propagator_rate(ctx, g0.grid.wavenumbers())
    _check_growth(omega, tau)
    return g0.with_values(np.fft.ifft(np.exp(-1j * omega * tau) * np.fft.fft(g0.values)))


def solve_inhomogeneous(g: ComplexField, h, ctx: FracContext, tau: float, *, nodes: int = 64) -> ComplexField:
    """``i d_tau a + C_{s/2} D^{s/2} a = h(tau)``, ``a(0) = g``, by variation of constants.

    ``h`` maps a slow time to a ComplexField (or an array on the same grid). The
    Duhamel integral is taken per mode with composite Simpson on ``nodes`` panels.
    """
    require_periodic(g)
    if nodes < 2 or nodes % 2:
        raise DomainError(f"nodes must be an even integer >= 2, got {nodes!r}")
    if tau < 0.0:
        raise DomainError(f"tau must be nonnegative, got {tau!r}")
    omega = propagator_rate(ctx, g.grid.wavenumbers())
    _check_growth(omega, tau)
    sig = np.linspace(0.0, tau, nodes + 1)
    w = np.ones(nodes + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (tau / nodes) / 3.0
    acc = np.zeros(g.grid.n, dtype=complex)
    for wi, si in zip(w, sig):
        hv = h(si)
        if isinstance(hv, ComplexField):
            require_same_grid(g, hv)
            hv = hv.values
        acc += wi * np.exp(1j * omega * si) * np.fft.fft(hv)
    ahat = np.exp(-1j * omega * tau) * (np.fft.fft(g.values) - 1j * acc)
    return g.with_values(np.fft.ifft(ahat))


@dataclass(frozen=True)
class WkbExpansion:
    """Amplitudes ``a_0..a_J`` stored as Fourier coefficients on a uniform slow-time grid.

    ``amp_hat[j][i]`` is the transform of ``a_j(., tau[i])``.
    """

    ctx: FracContext
    eps: float
    J: int
    grid: Grid1D
    tau: np.ndarray
    amp_hat: tuple
    normalize: bool = True
    constants: dict = field(default_factory=dict)
    _splines: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def tau_scale(self) -> float:
        return self.eps ** (1.5 * self.ctx.s)

    @property
    def c_eps(self) -> float:
        return self.eps ** self.ctx.s if self.normalize else 1.0

    @property
    def carrier(self) -> float:
        return self.ctx.xi0 / self.eps

    @property
    def t_max(self) -> float:
        return float(self.tau[-1]) / self.tau_scale

    @property
    def amplitudes(self) -> list[list[ComplexField]]:
        return [[self.amplitude(j, i) for i in range(self.tau.size)] for j in range(self.J + 1)]

    def amplitude(self, j: int, i: int) -> ComplexField:
        return ComplexField(self.grid, np.fft.ifft(self.amp_hat[j][i]))

    def _spline(self, j: int) -> CubicSpline:
        if j not in self._splines:
            self._splines[j] = CubicSpline(self.tau, self.amp_hat[j], axis=0)
        return self._splines[j]

    def amplitude_hat_at(self, j: int, tau: float) -> np.ndarray:
        """Cubic interpolation between slabs (exact at slab times)."""
        if not (0.0 <= tau <= self.tau[-1] * (1.0 + 1e-12)):
            raise DomainError(f"tau={tau} outside the stored range [0, {self.tau[-1]}]")
        hit = np.nonzero(np.isclose(self.tau, tau, rtol=0.0, atol=1e-15 * max(1.0, self.tau[-1])))[0]
        if hit.size:
            return self.amp_hat[j][hit[0]]
        return self._spline(j)(tau)

    def envelope_hat(self, t: float) -> np.ndarray:
        """Transform of ``sum_j eps^{sj/2} a_j(x, eps^{3s/2} t)``."""
        tau = min(self.tau_scale * t, float(self.tau[-1]))
        out = np.zeros(self.grid.n, dtype=complex)
        for j in range(self.J + 1):
            out += self.eps ** (0.5 * self.ctx.s * j) * self.amplitude_hat_at(j, tau)
        return out

    def header(self) -> dict:
        return {
            "s": self.ctx.s, "eps": self.eps, "J": self.J, "xi0": self.ctx.xi0,
            "branch": self.ctx.branch, "normalize": self.normalize,
            "c_eps": self.c_eps, "tau_scale": self.tau_scale,
            "grid": {"a": self.grid.a, "b": self.grid.b, "n": self.grid.n},
            "tau": [float(t) for t in self.tau],
            "constants": {k: {"re": v.real, "im": v.imag} for k, v in self.constants.items()},
        }


def _source_hats(j: int, prev: list[np.ndarray], k: np.ndarray, s: float, c: dict) -> np.ndarray | None:
    # -C D^beta a -> +C |k|^beta a^, and -(-Delta)^s a -> -|k|^{2s} a^
    terms = []
    if j >= 1:
        terms.append(c["one"] * np.abs(k) ** s * prev[j - 1])
    if j >= 2:
        terms.append(c["three_half"] * np.abs(k) ** (1.5 * s) * prev[j - 2])
    if j >= 3:
        terms.append(-(np.abs(k) ** (2.0 * s)) * prev[j - 3])
    if not terms:
        return None
    return sum(terms)


def _cumsimpson(f: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # scipy's cumulative Simpson rule drops imaginary parts
    re = cumulative_simpson(f.real, x=tau, axis=0, initial=0.0)
    return re + 1j * cumulative_simpson(f.imag, x=tau, axis=0, initial=0.0)


def build_cascade(g0: ComplexField, ctx: FracContext, J: int, tau_grid, eps: float, *,
                  normalize: bool = True, constants: dict | None = None) -> WkbExpansion:
    """Solve the cascade for ``a_0..a_J`` on ``tau_grid`` with ``g_j = 0`` for ``j >= 1``.

    ``tau_grid`` must be increasing and start at 0; the Duhamel integrals use the
    cumulative Simpson rule over its nodes.
    ``constants`` overrides entries of ``{half, one, three_half}``.
    """
    require_periodic(g0)
    if not isinstance(J, (int, np.integer)) or J < 0:
        raise DomainError(f"J must be a nonnegative integer, got {J!r}")
    if not eps > 0.0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 3 or tau[0] != 0.0 or np.any(np.diff(tau) <= 0.0):
        raise DomainError("tau_grid must be increasing, start at 0 and hold at least 3 points")
    c = _constants(ctx, constants)
    k = g0.grid.wavenumbers()
    omega = c["half"] * np.abs(k) ** (0.5 * ctx.s)
    _check_growth(omega, float(tau[-1]))
    fwd = np.exp(-1j * np.outer(tau, omega))
    back = np.exp(1j * np.outer(tau, omega))
    ghat = np.fft.fft(g0.values)
    amps: list[np.ndarray] = [fwd * ghat[None, :]]
    for j in range(1, J + 1):
        src = _source_hats(j, amps, k[None, :], ctx.s, c)
        duhamel = _cumsimpson(back * src, tau)
        amps.append(fwd * (-1j) * duhamel)
        del src, duhamel
    for j, a in enumerate(amps):
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"amplitude a_{j} became non-finite")
        a.setflags(write=False)
    return WkbExpansion(ctx=ctx, eps=float(eps), J=int(J), grid=g0.grid, tau=tau, amp_hat=tuple(amps),
                        normalize=normalize, constants=c)


def build_expansion(g0: ComplexField, ctx: FracContext, eps: float, J: int, T: float, *,
                    n_tau: int = 65, normalize: bool = True, constants: dict | None = None) -> WkbExpansion:
    """Cascade on ``n_tau`` uniform slabs covering physical times ``[0, T]``."""
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T!r}")
    if n_tau < 3 or n_tau % 2 == 0:
        raise DomainError(f"n_tau must be odd and >= 3, got {n_tau!r}")
    tau = np.linspace(0.0, eps ** (1.5 * ctx.s) * T, n_tau)
    return build_cascade(g0, ctx, J, tau, eps, normalize=normalize, constants=constants)


def carrier_phase(exp: WkbExpansion, t: float) -> np.ndarray:
    x = exp.grid.x
    return np.exp(1j * (exp.carrier * x + exp.ctx.xi0 ** (2.0 * exp.ctx.s) * exp.eps ** (-2.0 * exp.ctx.s) * t))


def assemble_z(exp: WkbExpansion, t: float) -> ComplexField:
    """Quasi-solution at physical time ``t``."""
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t!r}")
    if t > exp.t_max * (1.0 + 1e-12):
        raise DomainError(f"t={t} beyond the expansion horizon {exp.t_max}")
    exp.grid.require_resolved(exp.carrier)
    env = np.fft.ifft(exp.envelope_hat(t))
    return ComplexField(exp.grid, exp.c_eps * carrier_phase(exp, t) * env)


@dataclass(frozen=True)
class ResidualResult:
    value: float
    dt_res: float
    coarse: bool


def residual_norm(exp: WkbExpansion, t: float, dt_res: float | None = None) -> ResidualResult:
    """``|| i d_t z + (-Delta)^s z ||_{L^2}`` at time ``t``.

    The carrier is differentiated exactly; only the slow envelope uses a centred
    difference in ``t`` with step ``dt_res`` (one-sided at the ends of the horizon).
    """
    s, eps = exp.ctx.s, exp.eps
    limit = eps ** (2.0 * s) / 100.0
    dt_res = limit if dt_res is None else float(dt_res)
    if not dt_res > 0.0:
        raise DomainError(f"dt_res must be positive, got {dt_res!r}")
    coarse = dt_res > limit * (1.0 + 1e-12)
    if coarse:
        warnings.warn(f"dt_res={dt_res:g} exceeds eps^(2s)/100={limit:g}", RuntimeWarning, stacklevel=2)
    t_lo, t_hi = max(0.0, t - dt_res), min(exp.t_max, t + dt_res)
    if t_hi <= t_lo:
        raise DomainError("expansion horizon is too short for the residual difference")
    z = assemble_z(exp, t)
    env_t = (np.fft.ifft(exp.envelope_hat(t_hi)) - np.fft.ifft(exp.envelope_hat(t_lo))) / (t_hi - t_lo)
    omega_c = exp.ctx.xi0 ** (2.0 * s) * eps ** (-2.0 * s)
    dz = 1j * omega_c * z.values + exp.c_eps * carrier_phase(exp, t) * env_t
    lap = np.fft.ifft(np.abs(exp.grid.wavenumbers()) ** (2.0 * s) * np.fft.fft(z.values))
    r = ComplexField(exp.grid, 1j * dz + lap)
    return ResidualResult(value=r.l2_norm(), dt_res=dt_res, coarse=coarse)


def dump_expansion(exp: WkbExpansion, out_dir: Path, *, slabs: list[int] | None = None, stride: int = 1):
    """JSON header plus one CSV ``(x, re, im)`` per amplitude slab."""
    from .io import write_csv, write_json

    out_dir = Path(out_dir)
    write_json(out_dir / "expansion.json", exp.header())
    slabs = list(range(exp.tau.size)) if slabs is None else slabs
    x = exp.grid.x[::stride]
    for j in range(exp.J + 1):
        for i in slabs:
            a = np.fft.ifft(exp.amp_hat[j][i])[::stride]
            rows = zip(x, a.real, a.imag)
            write_csv(out_dir / f"a{j}_slab{i:03d}.csv", ("x", "re", "im"), rows)
