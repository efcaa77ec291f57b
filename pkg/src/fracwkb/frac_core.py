"""Fractional operators and the analytic constants entering the WKB expansion.

Two independent routes to ``(-Delta)^s`` are provided: the Fourier multiplier
``|k|^{2s}`` on periodic grids and the singular integral

    (-Delta)^s f(x) = c_{1,s} PV int (f(x) - f(y)) / |x - y|^{1+2s} dy

evaluated pointwise by quadrature. The latter is the oracle for the former.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import ContractError, DivergenceError, DomainError, QuadratureError
from .grid import ComplexField, require_periodic

BRANCHES = ("principal", "absolute")


def _check_order(s: float, name: str = "s"):
    if not (0.0 < s < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {s!r}")


def normalization_constant(s: float) -> float:
    """Closed form ``c_{1,s} = s 4^s Gamma(s + 1/2) / (sqrt(pi) Gamma(1 - s))``."""
    _check_order(s)
    return s * 4.0**s * special.gamma(s + 0.5) / (math.sqrt(math.pi) * special.gamma(1.0 - s))


def normalization_integral(s: float) -> float:
    """Adaptive quadrature of ``int_R (1 - cos z) / |z|^{1+2s} dz``.

    Independent of the Gamma closed form: ``[0, 1]`` uses an algebraic weight
    for the ``z^{1-2s}`` endpoint behaviour, ``[1, inf)`` splits into the
    elementary power tail and a Fourier-weighted integral.
    """
    _check_order(s)
    smooth = lambda z: 0.5 * np.sinc(z / (2.0 * np.pi)) ** 2  # (1 - cos z) / z^2
    head, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(1.0 - 2.0 * s, 0.0),
                             epsabs=0.0, epsrel=1e-13)
    with warnings.catch_warnings():
        # QAWF flags the slowly decaying cycles for s near 0; the value is still accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        cos_tail, _ = integrate.quad(lambda z: z ** (-1.0 - 2.0 * s), 1.0, np.inf,
                                     weight="cos", wvar=1.0, epsabs=1e-15)
    return 2.0 * (head + 1.0 / (2.0 * s) - cos_tail)


# --------------------------------------------------------------------------
# Fourier-multiplier operators on periodic grids


def apply_multiplier(f: ComplexField, symbol) -> ComplexField:
    """Multiply the discrete Fourier coefficients of ``f`` by ``symbol(k)``."""
    require_periodic(f)
    k = f.grid.wavenumbers()
    return f.with_values(np.fft.ifft(symbol(k) * np.fft.fft(f.values)))


def fraclap_symbol(k: np.ndarray, s: float) -> np.ndarray:
    return np.abs(k) ** (2.0 * s)


def apply_fraclap_spectral(f: ComplexField, s: float) -> ComplexField:
    """``(-Delta)^s f`` via the multiplier ``|k|^{2s}`` (zero mode annihilated)."""
    if not f.grid.periodic:
        raise ContractError("apply_fraclap_spectral requires a periodic grid")
    if not (0.0 < s <= 1.0):
        raise DomainError(f"s must lie in (0, 1], got {s!r}")
    return apply_multiplier(f, lambda k: fraclap_symbol(k, s))


def frac_derivative_symbol(k: np.ndarray, beta: float) -> np.ndarray:
    return -(np.abs(k) ** beta)


def frac_derivative(f: ComplexField, beta: float) -> ComplexField:
    """Fractional derivative ``D^beta`` with the transform rule ``F[D^beta f] = -|k|^beta F[f]``.

    This is the convention the WKB cascade is built on. It is even in ``k`` and
    differs from the left Riemann-Liouville symbol ``(ik)^beta``; see
    :func:`caputo_derivative_direct` for the real-space definition.
    """
    if not f.grid.periodic:
        raise ContractError("frac_derivative requires a periodic grid")
    if not (0.0 < beta < 2.0):
        raise DomainError(f"beta must lie in (0, 2), got {beta!r}")
    return apply_multiplier(f, lambda k: frac_derivative_symbol(k, beta))


def caputo_derivative_direct(fprime, beta: float, x: float, lower: float = -60.0) -> float:
    """Real-space ``1/Gamma(1-beta) int_{-inf}^x f'(y) (x-y)^{-beta} dy``.

    Cross-check only; its Fourier symbol is ``(ik)^beta``, not the cascade's
    ``-|k|^beta``.
    """
    _check_order(beta, "beta")
    val, _ = integrate.quad(lambda r: fprime(x - r), 0.0, x - lower,
                            weight="alg", wvar=(-beta, 0.0), limit=400)
    return val / special.gamma(1.0 - beta)


# --------------------------------------------------------------------------
# Pointwise singular-integral route


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_edges(delta: float, R: float, panel: float, n_graded: int = 40) -> np.ndarray:
    graded = np.geomspace(delta, 1.0, n_graded + 1)
    if R <= 1.0:
        return graded[graded <= R]
    m = max(1, int(math.ceil((R - 1.0) / panel)))
    return np.concatenate([graded, np.linspace(1.0, R, m + 1)[1:]])


def _composite_gl(func, edges: np.ndarray, order: int):
    t, w = _gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    r = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    vals = func(r).reshape(mid.size, order)
    return np.sum(half * (vals @ w))


def _checked_quad(func, edges, what: str, rtol: float = 1e-9, order: int = 20):
    coarse = _composite_gl(func, edges, order)
    fine = _composite_gl(func, edges, order + 12)
    scale = max(abs(fine), 1e-12)
    if abs(fine - coarse) > rtol * scale + 1e-13:
        raise QuadratureError(
            f"{what}: Gauss-Legendre orders {order} and {order + 12} disagree "
            f"({coarse!r} vs {fine!r}); refine the panels or shrink R"
        )
    return fine


def _far_mean(numerator, R: float, samples: int = 1 << 18) -> complex:
    """Hann-weighted mean of ``numerator(r)`` over ``r`` in ``[R/2, R]``.

    Constants pass through exactly while bounded oscillation averages out, so the
    tail ``int_R^inf numerator(r) r^{-1-2s} dr`` is taken as this mean times ``R^{-2s}/(2s)``.
    """
    r = np.linspace(0.5 * R, R, samples)
    w = np.sin(np.linspace(0.0, np.pi, samples)) ** 2
    return complex(np.dot(w, numerator(r)) / w.sum())


def apply_fraclap_direct(f, s: float, x: float, *, delta: float = 1e-3, R: float = 1e4,
                         panel: float = 0.25) -> complex:
    """Evaluate ``(-Delta)^s f(x)`` from the singular integral.

    Uses the even reflection ``int_0^inf (2f(x) - f(x+r) - f(x-r)) r^{-1-2s} dr``.
    On ``(0, delta)`` the bracket is replaced by its quadratic Taylor term
    (estimated from the second difference at ``delta``); beyond ``R`` the bracket
    is replaced by its windowed far-field mean (see ``_far_mean``).
    ``f`` must accept numpy arrays.
    """
    _check_order(s)
    c1s = normalization_constant(s)
    fx = complex(f(np.asarray(x)))
    p = 1.0 + 2.0 * s

    def bracket(r):
        return (2.0 * fx - f(x + r) - f(x - r)) / r**p

    second_diff = 2.0 * fx - complex(f(np.asarray(x + delta))) - complex(f(np.asarray(x - delta)))
    head = second_diff / delta**2 * delta ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    body = _checked_quad(bracket, _panel_edges(delta, R, panel), "apply_fraclap_direct")
    far = _far_mean(lambda r: 2.0 * fx - f(x + r) - f(x - r), R)
    tail = far * R ** (-2.0 * s) / (2.0 * s)
    return c1s * (head + body + tail)


def bilinear_Is(f, g, s: float, x: float, *, delta: float = 1e-3, R: float = 1e4,
                panel: float = 0.25) -> complex:
    """Bilinear remainder ``I_s(f, g)(x)`` of the fractional product rule.

    ``(-Delta)^s (fg) = f (-Delta)^s g + g (-Delta)^s f - I_s(f, g)``.
    """
    _check_order(s)
    c1s = normalization_constant(s)
    fx = complex(f(np.asarray(x)))
    gx = complex(g(np.asarray(x)))
    p = 1.0 + 2.0 * s

    def bracket(r):
        return ((fx - f(x + r)) * (gx - g(x + r)) + (fx - f(x - r)) * (gx - g(x - r))) / r**p

    head = complex(bracket(np.asarray(delta))) * delta**p / delta**2 * delta ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    body = _checked_quad(bracket, _panel_edges(delta, R, panel), "bilinear_Is")
    tail = _far_mean(lambda r: bracket(r) * r**p, R) * R ** (-2.0 * s) / (2.0 * s)
    return c1s * (head + body + tail)


# --------------------------------------------------------------------------
# Principal-value constants C_gamma


def _exp_tail(a: float, R: float, terms: int = 8) -> complex:
    """Asymptotic series for ``int_R^inf e^{iq} q^{-a} dq`` (repeated integration by parts)."""
    total = 0.0j
    coef = 1.0
    for m in range(terms):
        total += coef * (-1j) ** m * R ** (-m)
        coef *= a + m
    return 1j * np.exp(1j * R) * R ** (-a) * total


def c_gamma_integrals_finite(s: float, gamma: float, branch: str = "principal") -> bool:
    """Whether ``PV int (1 - e^{iq}) |q|^{-1-2s} q^gamma dq`` converges absolutely.

    The cosine part needs ``gamma < 2s`` (decay at infinity). Under the
    principal branch the sine parts of the two half-lines no longer cancel at
    the origin, which additionally needs ``gamma > 2s - 1``.
    """
    _check_order(s)
    if branch not in BRANCHES:
        raise DomainError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if not (0.0 <= gamma < 2.0 * s):
        return False
    if branch == "principal" and gamma > 0.0:
        return 2.0 * s - gamma < 1.0
    return True


def c_gamma_integral(s: float, gamma: float, branch: str = "principal", *,
                     delta: float = 1e-3, R: float = 1e4, order: int = 16) -> complex:
    """``PV int_R (1 - e^{iq}) / |q|^{1+2s} q^gamma dq`` by split quadrature.

    With ``mu = 2s - gamma`` the half-line pieces are
    ``A = int_0^inf (1 - cos q) q^{-1-mu} dq`` and ``B = int_0^inf sin q q^{-1-mu} dq``.
    Each is integrated by Taylor expansion on ``(0, delta)``, composite
    Gauss-Legendre on ``[delta, R]`` and an asymptotic tail beyond ``R``.
    The principal branch reads ``q^gamma = |q|^gamma e^{i pi gamma}`` for ``q < 0``.
    """
    if not c_gamma_integrals_finite(s, gamma, branch):
        raise DivergenceError(
            f"C_gamma integral diverges for s={s}, gamma={gamma}, branch={branch!r} "
            f"(needs gamma < 2s{', gamma > 2s-1' if branch == 'principal' else ''})"
        )
    mu = 2.0 * s - gamma
    a = 1.0 + mu
    edges = np.concatenate([
        np.geomspace(delta, 2.0 * np.pi, 41),
        np.arange(3.0 * np.pi, R + 0.5 * np.pi, np.pi),
    ])
    R_eff = edges[-1]
    tail = _exp_tail(a, R_eff)

    head_A = delta ** (2.0 - mu) / (2.0 * (2.0 - mu)) - delta ** (4.0 - mu) / (24.0 * (4.0 - mu))
    body_A = _composite_gl(lambda q: 2.0 * np.sin(0.5 * q) ** 2 * q ** (-a), edges, order)
    A = head_A + body_A + R_eff ** (-mu) / mu - tail.real

    need_B = branch == "principal" and gamma > 0.0
    if not need_B:
        return complex(2.0 * A)
    head_B = delta ** (1.0 - mu) / (1.0 - mu) - delta ** (3.0 - mu) / (6.0 * (3.0 - mu))
    body_B = _composite_gl(lambda q: np.sin(q) * q ** (-a), edges, order)
    B = head_B + body_B + tail.imag
    phase = np.exp(1j * np.pi * gamma)
    return complex(A * (1.0 + phase) + 1j * B * (phase - 1.0))


@dataclass(frozen=True)
class FracContext:
    """Order ``s`` with its derived constants for a carrier frequency ``xi0 > 0``."""

    s: float
    xi0: float
    branch: str = "principal"
    delta: float = 1e-3
    R: float = 1e4

    def __post_init__(self):
        _check_order(self.s)
        if not self.xi0 > 0.0:
            raise DomainError(f"xi0 must be positive, got {self.xi0!r}")
        if self.branch not in BRANCHES:
            raise DomainError(f"branch must be one of {BRANCHES}, got {self.branch!r}")

    @property
    def beta(self) -> float:
        return 0.5 * self.s

    @cached_property
    def c1s(self) -> float:
        return normalization_constant(self.s)

    @cached_property
    def Cgamma(self) -> dict[float, complex]:
        return {g: compute_C_gamma(self, g) for g in (0.5 * self.s, self.s, 1.5 * self.s)}

    def C(self, gamma: float) -> complex:
        for g, val in self.Cgamma.items():
            if math.isclose(g, gamma, rel_tol=0.0, abs_tol=1e-14):
                return val
        return compute_C_gamma(self, gamma)

    def record(self) -> dict:
        """JSON-ready constants ``{s, c1s, C_{s/2}, C_s, C_{3s/2}}``."""
        names = ("C_s/2", "C_s", "C_3s/2")
        out = {"s": self.s, "xi0": self.xi0, "branch": self.branch, "c1s": float(self.c1s)}
        for name, val in zip(names, self.Cgamma.values()):
            out[name] = {"re": float(val.real), "im": float(val.imag)}
        return out


def compute_C_gamma(ctx: FracContext, gamma: float) -> complex:
    """``C_gamma = c_{1,s} xi0^{2s-gamma} / Gamma(1+gamma) * PV int (1-e^{iq}) |q|^{-1-2s} q^gamma dq``."""
    integral = c_gamma_integral(ctx.s, gamma, ctx.branch, delta=ctx.delta, R=ctx.R)
    return ctx.c1s * ctx.xi0 ** (2.0 * ctx.s - gamma) / special.gamma(1.0 + gamma) * integral
