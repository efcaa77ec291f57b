"""Acceptance criteria, one test each, every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from fracwkb.cli import run
from fracwkb.experiments import DEFAULTS, PI2, envelope, gcc_report, merged_config, run_figures, run_sweep
from fracwkb.frac_core import FracContext, apply_fraclap_direct, apply_fraclap_spectral, bilinear_Is, normalization_constant
from fracwkb.gcc import boundary_collars, check_gcc, min_control_time
from fracwkb.grid import ComplexField, Grid1D
from fracwkb.rays import (BoundedDomain, Ray, group_velocity, integrate_bicharacteristics, propagation_sign,
                          ray_position)
from fracwkb.solver import SimConfig, run_simulation
from fracwkb.wkb import build_expansion, residual_norm

pytestmark = [pytest.mark.acceptance, pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")]


@pytest.fixture
def verdict(capsys):
    def report(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return report


def _c1s_by_quadrature(s):
    # 1 / c1s = int_R (1 - cos z) |z|^{-1-2s} dz; split at z = 1, integrate the cosine part on
    # half-period panels up to X = 2 pi N and close with the integration-by-parts tail at X
    p = 1.0 + 2.0 * s
    quad = lambda f, a, b: integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
    # (1 - cos z) / z^2 is smooth, the remaining z^{1-2s} goes into the algebraic weight
    smooth = lambda z: 0.5 if z == 0.0 else 2.0 * math.sin(0.5 * z) ** 2 / (z * z)
    head = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(1.0 - 2.0 * s, 0.0), epsabs=0, epsrel=1e-13)[0]
    N = 400
    edges = np.concatenate([[1.0], np.pi * np.arange(1, 2 * N + 1)])
    osc = sum(quad(lambda z: math.cos(z) * z ** -p, a, b) for a, b in zip(edges, edges[1:]))
    X = edges[-1]
    osc += p * X ** (-p - 1) - p * (p + 1) * (p + 2) * X ** (-p - 3)
    return 1.0 / (2.0 * (head + 1.0 / (2.0 * s) - osc))


def test_criterion_01_constants(verdict):
    errs, elapsed = [], 0.0
    for s in np.round(np.arange(0.1, 1.0, 0.1), 10):
        t0 = time.perf_counter()
        c = normalization_constant(s)
        elapsed += time.perf_counter() - t0
        errs.append(abs(c / _c1s_by_quadrature(s) - 1.0))
    worst = max(errs)
    verdict("1 constants", worst < 1e-10 and elapsed < 1.0, f"max rel err {worst:.2e}, {elapsed:.4f} s")


def test_criterion_02_operator_equivalence(verdict):
    # a wide box keeps the periodic-image shift far below the tolerance
    worst = 0.0
    grid = Grid1D(-400.0, 400.0, 2**17)
    f = ComplexField(grid, np.exp(-0.5 * grid.x**2))
    centre = grid.n // 2
    idx = [centre, centre + 30, centre + 80, centre - 50, centre - 120]
    for s in (0.25, 0.5, 0.75):
        spec = apply_fraclap_spectral(f, s).values
        for i in idx:
            ref = apply_fraclap_direct(lambda x: np.exp(-0.5 * x**2), s, grid.x[i])
            worst = max(worst, abs(spec[i] - ref) / abs(ref))
    # product rule with the operator terms from the spectral side and the remainder from quadrature
    g = lambda x: np.exp(-0.5 * x**2)
    lhs = apply_fraclap_spectral(ComplexField(grid, g(grid.x) ** 2), 0.5).values[centre]
    lg = apply_fraclap_spectral(f, 0.5).values[centre]
    rhs = 2.0 * g(0.0) * lg - bilinear_Is(g, g, 0.5, 0.0)
    prod = abs(lhs - rhs)
    verdict("2 operator equivalence", worst < 1e-3 and prod < 1e-4,
            f"spectral vs direct max rel {worst:.2e}; product rule residual {prod:.2e}")


def test_criterion_03_conservation(verdict):
    spec = run_simulation(SimConfig(s=0.5, xi0=2 * PI2, n=512, dt=5e-4, T=5.0, stride=10**4), "spectral")
    l2, hs = spec.norms[:, 1], spec.norms[:, 2]
    d_l2 = float(np.max(np.abs(l2 / l2[0] - 1)))
    d_hs = float(np.max(np.abs(hs / hs[0] - 1)))
    fe = run_simulation(SimConfig(s=0.5, xi0=2 * PI2, n=512, dt=1e-3, T=5.0, stride=5000), "fe")
    m = fe.norms[:, 1]
    d_m = float(np.max(np.abs(m / m[0] - 1)))
    steps = spec.norms.shape[0] - 1
    ok = steps == 10**4 and d_l2 < 1e-9 and d_hs < 1e-9 and d_m < 1e-8
    verdict("3 conservation", ok, f"spectral {steps} steps: L2 {d_l2:.1e}, Hs {d_hs:.1e}; FE M-norm {d_m:.1e}")


def test_criterion_04_rays(verdict):
    sup = 0.0
    for s in (0.1, 0.5, 0.9):
        for sign in (1, -1):
            r = Ray(0.0, 2 * PI2, sign, s)
            tr = integrate_bicharacteristics(r, 5.0, 1e-3)
            sup = max(sup, float(np.max(np.abs(tr.x - ray_position(r, tr.t)))))
    xi = np.geomspace(0.1, 100.0, 400)
    unit = bool(np.all(group_velocity(0.5, xi) == 1.0))
    flags = {s: np.diff(group_velocity(s, xi)) for s in (0.1, 0.5, 0.9)}
    trend = bool(np.all(flags[0.1] < 0) and np.all(flags[0.5] == 0) and np.all(flags[0.9] > 0))
    verdict("4 rays", sup < 1e-10 and unit and trend,
            f"RK4 sup err {sup:.1e}; v(0.5)=1 exactly: {unit}; trichotomy flags match: {trend}")


@pytest.fixture(scope="module")
def sweep():
    cfg = merged_config("sweep", {})
    t0 = time.perf_counter()
    points, reports = run_sweep(cfg)
    elapsed = time.perf_counter() - t0
    return cfg, points, reports, elapsed


def test_criterion_05_residual(verdict, sweep):
    cfg = sweep[0]
    ctx = FracContext(cfg["s"], cfg["xi0"])
    grid = Grid1D(*cfg["domain"], cfg["n"])
    t0 = time.perf_counter()
    vals = []
    eps_list = [2.0**-m for m in cfg["eps_exponents"]]
    for eps in eps_list:
        exp = build_expansion(envelope(grid, eps, cfg), ctx, eps, cfg["J"], cfg["t"], n_tau=cfg["n_tau"])
        vals.append(residual_norm(exp, cfg["t"]).value)
    elapsed = time.perf_counter() - t0
    monotone = bool(np.all(np.diff(vals) < 0))
    slope = np.polyfit(np.log(eps_list), np.log(vals), 1)[0]
    verdict("5 WKB residual", monotone and slope >= 0.3 and elapsed < 120.0,
            f"monotone {monotone}, slope {slope:.3f}, {elapsed:.1f} s")


def test_criterion_06_solution_difference(verdict, sweep):
    rep = sweep[2]["sol_diff"]
    verdict("6 sol_diff rate", rep.slope >= 0.35 and rep.r2 > 0.85, f"slope {rep.slope:.3f}, r2 {rep.r2:.4f}")


def test_criterion_07_initial_energy(verdict, sweep):
    hs = [p["hs_norm_z0"] for p in sweep[1]]
    ratio = max(hs) / min(hs)
    verdict("7 initial energy bounded", ratio < 3.0 and len(hs) == 5, f"max/min Hs ratio {ratio:.3f} over {len(hs)} eps")


def test_criterion_08_off_ray(verdict, sweep):
    rep = sweep[2]["off_ray"]
    elapsed = sweep[3]
    verdict("8 off-ray energy rate", rep.slope >= 0.2 and elapsed < 300.0,
            f"slope {rep.slope:.3f}, r2 {rep.r2:.4f}, sweep {elapsed:.1f} s")


@pytest.fixture(scope="module")
def figures():
    results, _ = run_figures(merged_config("figures", {}))
    return results


def test_criterion_09a_unit_speed_and_reflection(verdict, figures):
    an = figures["fig2_s0.5"]["analysis"]
    t, com = an["t"], an["com"]
    ray = Ray(0.0, 2 * PI2, propagation_sign(2 * PI2), 0.5)
    t_hit = 1.0 / ray.speed
    early = (t >= 0.1) & (t <= 0.8)
    speed = abs(np.polyfit(t[early], com[early], 1)[0])
    v = np.diff(com) / np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    near = np.abs(tm - t_hit) < 0.5
    flips = tm[near][np.nonzero(np.diff(np.sign(v[near])))[0]]
    t_flip = float(flips[0]) if flips.size else math.nan
    ok = abs(speed - 1.0) <= 0.1 and abs(t_flip - t_hit) <= 0.2
    verdict("9a speed one and reflection", ok,
            f"centre-of-mass speed {speed:.3f}; velocity flips at t={t_flip:.3f}, ray hits at t={t_hit:.3f}")


def test_criterion_09b_low_order_stalls(verdict, figures):
    disp = {pid: float(figures[pid]["analysis"]["com"][-1] - figures[pid]["analysis"]["com"][0])
            for pid in ("fig2_s0.1", "fig3_s0.1")}
    ok = all(abs(d) < 0.15 for d in disp.values())
    verdict("9b s=0.1 displacement", ok, ", ".join(f"{k} {v:+.3f}" for k, v in disp.items()))


def test_criterion_09c_large_domain(verdict, figures):
    pairs = {"xi0=2pi^2": ("fig2_s0.9", "fig4_xi2pi2"), "xi0=pi^2/16": ("fig3_s0.9", "fig4_xipi2_16")}
    parts, ok = [], True
    for tag, (small, large) in pairs.items():
        a = figures[small]["analysis"]
        b = figures[large]["analysis"]
        assert np.allclose(a["t"], b["t"])
        fa = float(np.mean(a["near_ray_fraction"][1:]))
        fb = float(np.mean(b["near_ray_fraction"][1:]))
        ok = ok and fb > fa
        parts.append(f"{tag}: (-6,6) {fb:.3f} vs (-1,1) {fa:.3f}")
    verdict("9c enlarged domain concentrates on the ray", ok, "; ".join(parts))


def test_criterion_10_gcc(verdict):
    cfg = DEFAULTS["gcc"]
    dom = BoundedDomain(*cfg["domain"])
    region = boundary_collars(dom, 0.2)
    xs = cfg["x0_samples"]
    low = check_gcc(region, dom, 5.0, 0.1, [2 * PI2], xs)
    half = check_gcc(region, dom, 5.0, 0.5, cfg["freqs"], xs)
    t_half = min_control_time(region, dom, 0.5, cfg["freqs"], xs)
    rep = gcc_report(cfg)["orders"]["0.9"]
    hits = [rep["hitting_times"][repr(f)] for f in (PI2 / 16, 2 * PI2, 8 * PI2)]
    ok = (not low.observable and low.witness is not None and half.observable and abs(t_half - 1.6) <= 1e-3
          and rep["verdict"]["observable"] and hits[0] > hits[1] > hits[2])
    verdict("10 GCC trichotomy", ok,
            f"s=0.1 witness {low.witness}; s=0.5 min time {t_half:.4f}; s=0.9 hits "
            + ", ".join(f"{h:.4f}" for h in hits))


CLI_RUNS = {
    "simulate": [],
    "wkb": [],
    "rays": [],
    "gcc": [],
    "sweep": ["n=4096", "xi0=2.0", "eps_exponents=[2, 3, 4, 5]", "t=0.1", "dt=0.0001"],
    "figures": ["panels=[\"fig2_initial\", \"fig3_s0.1\"]", "T=0.5"],
}


def test_criterion_11_determinism(verdict, tmp_path, capsys):
    same, bad = 0, []
    for kind, sets in CLI_RUNS.items():
        snaps = []
        for rep in ("a", "b"):
            argv = [kind, "--out", str(tmp_path / kind / rep)]
            for s in sets:
                argv += ["--set", s]
            code = run(argv)
            if code:
                bad.append(f"{kind} exit {code}")
            root = tmp_path / kind / rep
            snaps.append({p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()})
        if snaps[0] and snaps[0] == snaps[1]:
            same += 1
        else:
            bad.append(kind)
    capsys.readouterr()
    verdict("11 determinism", not bad, f"{same}/{len(CLI_RUNS)} commands byte-identical" + (f"; {bad}" if bad else ""))
