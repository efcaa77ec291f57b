"""Experiment drivers behind the command line: defaults, validation and file outputs.

Each ``cmd_*`` takes a flat parameter dict (already merged with defaults) and an
output directory, writes its files there and returns a small JSON-ready summary.
"""

from __future__ import annotations

import math
import platform
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .diagnostics import (ScalingReport, center_of_mass, compare_fields, fit_scaling, hs_norm,
                          initial_mismatch, off_ray_energy, ray_energy_fraction)
from .errors import DomainError, ResolutionError
from .frac_core import FracContext
from .gcc import boundary_collars, check_gcc, first_hit_time, min_control_time, velocity_trend
from .grid import ComplexField, Grid1D
from .io import write_csv, write_json
from .rays import (BoundedDomain, Ray, group_velocity, integrate_bicharacteristics, propagation_sign,
                   ray_position, reflect_ray)
from .solver import SimConfig, gaussian_wavepacket, run_simulation, spectral_cn_evolve
from .wkb import assemble_z, build_expansion, dump_expansion, residual_norm

PI2 = math.pi**2
KINDS = ("simulate", "wkb", "rays", "sweep", "gcc", "figures")

DEFAULTS = {
    "simulate": {
        "s": 0.5, "xi0": 2 * PI2, "eps": 1.0, "domain": [-1.0, 1.0], "n": 512, "dt": 1e-3, "T": 5.0,
        "gamma_exponent": 0.9, "gamma": None, "x0_center": 0.0, "stride": 10, "scheme": "fe",
        "heatmap_max": 1000, "seed": 0,
    },
    "wkb": {
        "s": 0.5, "xi0": 2 * PI2, "eps": 2.0**-5, "J": 2, "domain": [-6.0, 6.0], "n": 2**14, "T": 0.5,
        "n_tau": 65, "branch": "principal", "normalize": True, "x0_center": 0.0,
        "envelope_gamma": 2.0, "envelope_scaling": 0.25, "times": [0.0, 0.25, 0.5],
        "dump_slabs": [0, 32, 64], "csv_stride": 8, "seed": 0,
    },
    "rays": {
        "s_values": [0.1, 0.5, 0.9], "xi_min": 0.1, "xi_max": 100.0, "n_xi": 200,
        "x0": 0.0, "xi0": 2 * PI2, "T": 5.0, "domain": [-1.0, 1.0], "rk4_dt": 1e-3, "seed": 0,
    },
    "sweep": {
        "s": 0.5, "xi0": 2 * PI2, "J": 2, "eps_exponents": [3, 4, 5, 6, 7], "t": 0.5,
        "domain": [-6.0, 6.0], "n": 2**16, "dt": 1e-6, "n_tau": 65, "branch": "principal",
        "x0_center": 0.0, "envelope_gamma": 2.0, "envelope_scaling": 0.25, "radius_exponent": 0.25,
        "seed": 0,
    },
    "gcc": {
        "delta": 0.2, "domain": [-1.0, 1.0], "T": 5.0, "s_values": [0.1, 0.5, 0.9],
        "freqs": [PI2 / 16, 2 * PI2, 8 * PI2], "x0_samples": [round(-0.8 + 0.1 * i, 10) for i in range(17)],
        "seed": 0,
    },
    "figures": {
        "panels": None, "n": 512, "dt": 1e-3, "T": 5.0, "stride": 10, "large_domain": [-6.0, 6.0],
        "large_n": 1024, "heatmap_max": 1000, "ray_radius": 0.5, "seed": 0,
    },
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    parameters: dict = field(default_factory=dict)
    output_dir: Path = Path("out")
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")


def merged_config(kind: str, overrides: dict | None) -> dict:
    base = dict(DEFAULTS[kind])
    for k, v in (overrides or {}).items():
        if k not in base:
            raise DomainError(f"unknown parameter {k!r} for {kind}; known: {sorted(base)}")
        base[k] = v
    return base


def versions() -> dict:
    return {"fracwkb": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _meta(out: Path, kind: str, cfg: dict, **extra):
    write_json(out / "meta.json", {"kind": kind, "config": cfg, "versions": versions(), **extra})


def _map(func, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(it) for it in items]


# --------------------------------------------------------------------------
# simulate


def sim_config_from(cfg: dict) -> SimConfig:
    keys = ("s", "xi0", "eps", "domain", "n", "dt", "T", "gamma_exponent", "gamma", "x0_center", "stride")
    return SimConfig(**{k: cfg[k] for k in keys if k in cfg})


def _write_heatmap(path: Path, times, x, snaps, max_cells: int):
    ts = max(1, math.ceil(len(times) / max_cells))
    xs = max(1, math.ceil(len(x) / max_cells))
    rows = []
    for t, row in zip(times[::ts], snaps[::ts]):
        mod = np.abs(row[::xs])
        rows.extend(zip([t] * mod.size, x[::xs], mod))
    write_csv(path, ("t", "x", "abs_u"), rows)


def write_simulation(out: Path, record, heatmap_max: int):
    _write_heatmap(out / "heatmap.csv", record.times, record.x, record.snapshots, heatmap_max)
    write_csv(out / "norms.csv", ("t", "l2", "hs"), record.norms.tolist())


def cmd_simulate(cfg: dict, out: Path, jobs: int = 1) -> dict:
    sim = sim_config_from(cfg)
    if cfg["scheme"] not in ("fe", "spectral"):
        raise DomainError(f"scheme must be fe or spectral, got {cfg['scheme']!r}")
    rec = run_simulation(sim, cfg["scheme"])
    write_simulation(out, rec, int(cfg["heatmap_max"]))
    l2 = rec.norms[:, 1]
    summary = {"steps": sim.steps, "l2_drift": float(np.max(np.abs(l2 / l2[0] - 1.0)))}
    _meta(out, "simulate", cfg, scheme=cfg["scheme"], summary=summary)
    return summary


# --------------------------------------------------------------------------
# wkb and sweep


def envelope(grid: Grid1D, eps: float, cfg: dict) -> ComplexField:
    """Gaussian amplitude ``exp(-g/2 ((x - x0) / eps^p)^2)`` with ``p = envelope_scaling``."""
    w = eps ** float(cfg["envelope_scaling"])
    g = float(cfg["envelope_gamma"])
    if not g > 0.0:
        raise DomainError(f"envelope_gamma must be positive, got {g!r}")
    return ComplexField(grid, np.exp(-0.5 * g * ((grid.x - float(cfg["x0_center"])) / w) ** 2))


def _periodic_grid(cfg: dict) -> Grid1D:
    a, b = cfg["domain"]
    return Grid1D(float(a), float(b), int(cfg["n"]), periodic=True)


def cmd_wkb(cfg: dict, out: Path, jobs: int = 1) -> dict:
    ctx = FracContext(float(cfg["s"]), float(cfg["xi0"]), branch=cfg["branch"])
    grid = _periodic_grid(cfg)
    eps = float(cfg["eps"])
    grid.require_resolved(ctx.xi0 / eps)
    exp = build_expansion(envelope(grid, eps, cfg), ctx, eps, int(cfg["J"]), float(cfg["T"]),
                          n_tau=int(cfg["n_tau"]), normalize=bool(cfg["normalize"]))
    slabs = [i for i in cfg["dump_slabs"] if 0 <= i < exp.tau.size]
    stride = int(cfg["csv_stride"])
    dump_expansion(exp, out, slabs=slabs, stride=stride)
    rows, res_rows = [], []
    for t in cfg["times"]:
        z = assemble_z(exp, float(t))
        v = z.values[::stride]
        rows.extend(zip([float(t)] * v.size, grid.x[::stride], v.real, v.imag))
        r = residual_norm(exp, float(t))
        res_rows.append((float(t), r.value, r.dt_res, r.coarse, hs_norm(z, ctx.s)))
    write_csv(out / "z.csv", ("t", "x", "re", "im"), rows)
    write_csv(out / "residual.csv", ("t", "residual", "dt_res", "coarse", "hs_norm"), res_rows)
    _meta(out, "wkb", cfg, constants=ctx.record())
    return {"residual": [r[1] for r in res_rows]}


SWEEP_METRICS = ("sol_diff", "off_ray", "init_mismatch", "residual")


def sweep_point(args) -> dict | None:
    """All sweep metrics at one ``eps``; ``None`` if the carrier is unresolved."""
    cfg, eps = args
    s, xi0, t = float(cfg["s"]), float(cfg["xi0"]), float(cfg["t"])
    ctx = FracContext(s, xi0, branch=cfg["branch"])
    grid = _periodic_grid(cfg)
    try:
        grid.require_resolved(xi0 / eps)
    except ResolutionError as exc:
        warnings.warn(f"skipping eps={eps}: {exc}", RuntimeWarning, stacklevel=2)
        return None
    g0 = envelope(grid, eps, cfg)
    exp = build_expansion(g0, ctx, eps, int(cfg["J"]), t, n_tau=int(cfg["n_tau"]))
    z0, zt = assemble_z(exp, 0.0), assemble_z(exp, t)
    u_in = ComplexField(grid, g0.values * np.exp(1j * xi0 / eps * grid.x))
    dt = float(cfg["dt"])
    steps = int(round(t / dt))
    if abs(steps * dt - t) > 1e-9 * max(t, 1.0):
        raise DomainError(f"t={t} is not a multiple of dt={dt}")
    u = spectral_cn_evolve(z0, s, dt, steps)
    x_ray = ray_position(Ray(float(cfg["x0_center"]), xi0, propagation_sign(xi0), s), t)
    radius = eps ** float(cfg["radius_exponent"])
    res = residual_norm(exp, t)
    return {
        "eps": eps,
        "sol_diff": compare_fields(u, zt),
        "off_ray": off_ray_energy(u, x_ray, radius, s),
        "off_ray_z": off_ray_energy(zt, x_ray, radius, s),
        "init_mismatch": initial_mismatch(u_in, z0),
        "residual": res.value,
        "residual_coarse": res.coarse,
        "hs_norm_z0": hs_norm(z0, s),
        "im_C_half": exp.constants["half"].imag,
    }


def run_sweep(cfg: dict, jobs: int = 1) -> tuple[list[dict], dict[str, ScalingReport]]:
    exps = [float(m) for m in cfg["eps_exponents"]]
    if len(exps) < 4:
        raise DomainError("eps_exponents needs at least 4 entries")
    eps_list = sorted((2.0**-m for m in exps), reverse=True)
    points = [p for p in _map(sweep_point, [(cfg, e) for e in eps_list], jobs) if p is not None]
    reports = {}
    for name in SWEEP_METRICS:
        reports[name] = fit_scaling([(p["eps"], p[name]) for p in points], name)
    return points, reports


def cmd_sweep(cfg: dict, out: Path, jobs: int = 1) -> dict:
    points, reports = run_sweep(cfg, jobs)
    cols = ("eps", "sol_diff", "off_ray", "off_ray_z", "init_mismatch", "residual", "residual_coarse",
            "hs_norm_z0", "im_C_half")
    write_csv(out / "samples.csv", cols, [tuple(p[c] for c in cols) for p in points])
    hs = [p["hs_norm_z0"] for p in points]
    summary = {
        "reports": {k: r.to_dict() for k, r in reports.items()},
        "hs_ratio": max(hs) / min(hs),
        "residual_monotone": bool(np.all(np.diff([p["residual"] for p in points]) < 0.0)),
    }
    write_json(out / "reports.json", summary)
    _meta(out, "sweep", cfg)
    return summary


# --------------------------------------------------------------------------
# rays and gcc


def cmd_rays(cfg: dict, out: Path, jobs: int = 1) -> dict:
    xi = np.geomspace(float(cfg["xi_min"]), float(cfg["xi_max"]), int(cfg["n_xi"]))
    dom = BoundedDomain(*map(float, cfg["domain"]))
    vel_rows, path_rows, trends, rk4 = [], [], {}, {}
    for s in map(float, cfg["s_values"]):
        v = group_velocity(s, xi)
        vel_rows.extend(zip([s] * xi.size, xi, v))
        trends[str(s)] = velocity_trend(v)
        for sign in (1, -1):
            ray = Ray(float(cfg["x0"]), float(cfg["xi0"]), sign, s)
            path = reflect_ray(ray, dom, float(cfg["T"]))
            path_rows.extend((s, sign, t, x) for t, x in path.csv_rows())
        ray = Ray(float(cfg["x0"]), float(cfg["xi0"]), propagation_sign(float(cfg["xi0"])), s)
        tr = integrate_bicharacteristics(ray, float(cfg["T"]), float(cfg["rk4_dt"]))
        rk4[str(s)] = float(np.max(np.abs(tr.x - ray_position(ray, tr.t))))
    write_csv(out / "velocity.csv", ("s", "xi0", "v"), vel_rows)
    write_csv(out / "paths.csv", ("s", "sign", "t", "x"), path_rows)
    summary = {"trends": trends, "rk4_sup_error": rk4}
    write_json(out / "rays.json", summary)
    _meta(out, "rays", cfg)
    return summary


def gcc_report(cfg: dict) -> dict:
    dom = BoundedDomain(*map(float, cfg["domain"]))
    region = boundary_collars(dom, float(cfg["delta"]))
    T, freqs, xs = float(cfg["T"]), [float(f) for f in cfg["freqs"]], [float(x) for x in cfg["x0_samples"]]
    per_s, rows = {}, []
    for s in map(float, cfg["s_values"]):
        verdict = check_gcc(region, dom, T, s, freqs, xs)
        hits = []
        for xi0 in freqs:
            worst = max(first_hit_time(region, dom, s, x, xi0, sg) for x in xs for sg in (1, -1))
            hits.append(worst)
            rows.append((s, xi0, group_velocity(s, xi0), worst <= T, worst))
        per_s[str(s)] = {"verdict": verdict.to_dict(),
                         "min_control_time": min_control_time(region, dom, s, freqs, xs),
                         "hitting_times": dict(zip(map(repr, freqs), hits))}
    return {"region": region.to_list(), "T": T, "orders": per_s, "rows": rows}


def cmd_gcc(cfg: dict, out: Path, jobs: int = 1) -> dict:
    rep = gcc_report(cfg)
    rows = rep.pop("rows")
    write_csv(out / "table.csv", ("s", "xi0", "v", "observable", "max_hit_time"), rows)
    write_json(out / "verdicts.json", rep)
    _meta(out, "gcc", cfg)
    return rep


# --------------------------------------------------------------------------
# figures


def figure_panels(cfg: dict) -> dict[str, dict]:
    """Panel id -> parameters. Large-domain panels keep the small-domain Gaussian width."""
    n, T, dt, stride = int(cfg["n"]), float(cfg["T"]), float(cfg["dt"]), int(cfg["stride"])
    base_gamma = (2.0 / n) ** -0.9
    panels = {}
    for fig, xi0 in (("fig2", 2 * PI2), ("fig3", PI2 / 16)):
        panels[f"{fig}_initial"] = {"kind": "initial", "s": 0.5, "xi0": xi0, "domain": [-1.0, 1.0], "n": n}
        for s in (0.1, 0.5, 0.9):
            panels[f"{fig}_s{s}"] = {"kind": "run", "s": s, "xi0": xi0, "domain": [-1.0, 1.0], "n": n,
                                     "T": T, "dt": dt, "stride": stride}
    for tag, xi0 in (("xi2pi2", 2 * PI2), ("xipi2_16", PI2 / 16)):
        panels[f"fig4_{tag}"] = {"kind": "run", "s": 0.9, "xi0": xi0, "domain": list(cfg["large_domain"]),
                                 "n": int(cfg["large_n"]), "T": T, "dt": dt, "stride": stride,
                                 "gamma": base_gamma}
    wanted = cfg.get("panels")
    if wanted:
        wanted = wanted.split(",") if isinstance(wanted, str) else list(wanted)
        unknown = [w for w in wanted if w not in panels]
        if unknown:
            raise DomainError(f"unknown panels {unknown}; known: {sorted(panels)}")
        panels = {k: panels[k] for k in wanted}
    return panels


def panel_analysis(record, radius: float) -> dict:
    """Centre-of-mass track, ray comparison and near-ray seminorm energy share."""
    cfg = record.config
    dom = BoundedDomain(*cfg.domain)
    ray = Ray(cfg.x0_center, cfg.xi0, propagation_sign(cfg.xi0), cfg.s)
    path = reflect_ray(ray, dom, cfg.T)
    grid = cfg.grid("fe")
    com = np.array([center_of_mass(record.snapshot(i)) for i in range(record.times.size)])
    centers = path.position(record.times)
    frac = ray_energy_fraction(record.snapshots, grid.a, grid.h, cfg.s, centers, radius)
    return {"t": record.times, "com": com, "ray": centers, "near_ray_fraction": frac}


def run_panel(args):
    pid, p, radius = args
    if p["kind"] == "initial":
        sim = SimConfig(s=p["s"], xi0=p["xi0"], domain=tuple(p["domain"]), n=p["n"], T=0.0)
        u0 = gaussian_wavepacket(sim)
        return pid, {"u0": u0}
    sim = SimConfig(s=p["s"], xi0=p["xi0"], domain=tuple(p["domain"]), n=p["n"], dt=p["dt"], T=p["T"],
                    stride=p["stride"], gamma=p.get("gamma"))
    try:
        rec = run_simulation(sim, "fe")
    except (ValueError, RuntimeError) as exc:
        exc.args = (f"panel {pid}: {exc}",)
        raise
    return pid, {"record": rec, "analysis": panel_analysis(rec, radius)}


def run_figures(cfg: dict, jobs: int = 1) -> dict:
    panels = figure_panels(cfg)
    radius = float(cfg["ray_radius"])
    return dict(_map(run_panel, [(k, v, radius) for k, v in panels.items()], jobs)), panels


def cmd_figures(cfg: dict, out: Path, jobs: int = 1) -> dict:
    results, panels = run_figures(cfg, jobs)
    summary = {}
    for pid, res in results.items():
        d = out / pid
        d.mkdir(parents=True, exist_ok=True)
        if "u0" in res:
            u0 = res["u0"]
            write_csv(d / "initial.csv", ("x", "re", "im", "abs"),
                      zip(u0.grid.x, u0.values.real, u0.values.imag, np.abs(u0.values)))
            summary[pid] = {"kind": "initial"}
        else:
            rec, an = res["record"], res["analysis"]
            write_simulation(d, rec, int(cfg["heatmap_max"]))
            write_csv(d / "track.csv", ("t", "com", "ray", "near_ray_fraction"),
                      zip(an["t"], an["com"], an["ray"], an["near_ray_fraction"]))
            summary[pid] = {"kind": "run", "com_displacement": float(an["com"][-1] - an["com"][0]),
                            "mean_near_ray_fraction": float(np.mean(an["near_ray_fraction"][1:]))}
        write_json(d / "meta.json", {"kind": "figures", "panel": pid, "panel_config": panels[pid],
                                     "config": cfg, "versions": versions()})
    write_json(out / "summary.json", summary)
    _meta(out, "figures", cfg, panels=sorted(panels))
    return summary


COMMANDS = {
    "simulate": cmd_simulate, "wkb": cmd_wkb, "rays": cmd_rays,
    "sweep": cmd_sweep, "gcc": cmd_gcc, "figures": cmd_figures,
}
