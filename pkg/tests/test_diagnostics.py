import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracwkb.diagnostics import (center_of_mass, compare_fields, fit_scaling, hs_norm, in_ball_energy,
                                 initial_mismatch, off_ray_energy, padded_seminorm_density, ray_energy_fraction,
                                 seminorm_density)
from fracwkb.errors import ContractError, DomainError, NumericalError
from fracwkb.grid import ComplexField, Grid1D
from fracwkb.solver import SimConfig, run_simulation
from fracwkb.rays import Ray, propagation_sign, ray_position

from helpers import PI2


@pytest.fixture(scope="module")
def grid():
    return Grid1D(-8.0, 8.0, 2048)


def _gauss(grid, c=0.0, w=0.5, k=0.0):
    return ComplexField.from_function(grid, lambda x: np.exp(-0.5 * ((x - c) / w) ** 2 + 1j * k * x))


def test_hs_norm_zero(grid):
    assert hs_norm(ComplexField(grid, np.zeros(grid.n, complex)), 0.4) == 0.0


def test_hs_norm_single_mode(grid):
    k = grid.wavenumbers()[9]
    u = ComplexField(grid, np.exp(1j * k * grid.x))
    assert hs_norm(u, 0.3) == pytest.approx(math.sqrt(1 + abs(k) ** 0.6) * u.l2_norm(), rel=1e-13)


@given(st.floats(0.05, 0.95), st.floats(-3.0, 3.0), st.floats(0.2, 2.0))
@settings(max_examples=30)
def test_hs_dominates_l2(s, c, w):
    g = Grid1D(-8.0, 8.0, 256)
    u = _gauss(g, c, w, 2.0)
    assert hs_norm(u, s) >= u.l2_norm()


def test_hs_conserved_by_spectral_run():
    cfg = SimConfig(s=0.7, xi0=2 * PI2, n=512, dt=5e-4, T=5.0, stride=10000)
    rec = run_simulation(cfg, "spectral")
    hs = rec.norms[:, 2]
    assert rec.norms.shape[0] == 10001
    assert np.max(np.abs(hs / hs[0] - 1.0)) < 1e-9


def test_compare_identical(grid):
    u = _gauss(grid)
    assert compare_fields(u, u) == 0.0


def test_compare_scaled_carriers():
    g = Grid1D(0.0, 3.0, 64)
    k = g.wavenumbers()[4]
    car = np.exp(1j * k * g.x)
    d = 0.125
    assert compare_fields(ComplexField(g, car), ComplexField(g, (1 + d) * car)) == pytest.approx(d * math.sqrt(3.0))


def test_compare_grid_mismatch(grid):
    with pytest.raises(ContractError):
        compare_fields(_gauss(grid), _gauss(Grid1D(-8.0, 8.0, 1024)))


def test_initial_mismatch_without_normalisation(grid):
    u = _gauss(grid, k=3.0)
    assert initial_mismatch(u, u) == 0.0


def test_off_ray_of_localised_field(grid):
    u = _gauss(grid, 1.0, 0.05)
    # the seminorm density has algebraic tails, so its share beyond radius 3 is small but not zero
    full = float(grid.h * seminorm_density(u, 0.5).sum())
    assert off_ray_energy(u, 1.0, 3.0, 0.5) < 2e-3 * full


def test_off_ray_of_exactly_supported_density(grid):
    # a single Fourier mode has flat density, so its seminorm share equals the measure share
    k = grid.wavenumbers()[3]
    u = ComplexField(grid, np.exp(1j * k * grid.x))
    full = float(grid.h * seminorm_density(u, 0.5).sum())
    assert off_ray_energy(u, 0.0, 4.0, 0.5) == pytest.approx(full * 0.5, rel=1e-3)


def test_off_ray_small_radius_recovers_seminorm(grid):
    u = _gauss(grid, 0.3)
    full = float(grid.h * seminorm_density(u, 0.5).sum())
    assert off_ray_energy(u, 0.3, 1e-9, 0.5) == pytest.approx(full, rel=1e-2)


def test_off_ray_plus_ball_is_full(grid):
    u = _gauss(grid, -1.0, 0.3, 5.0)
    full = float(grid.h * seminorm_density(u, 0.6).sum())
    total = off_ray_energy(u, -0.5, 0.7, 0.6) + in_ball_energy(u, -0.5, 0.7, 0.6)
    assert abs(total - full) <= 1e-10 * full


def test_off_ray_radius_checked(grid):
    with pytest.raises(DomainError):
        off_ray_energy(_gauss(grid), 0.0, 0.0, 0.5)


def test_center_of_mass_symmetric(grid):
    assert center_of_mass(_gauss(grid, 0.75, 0.4, 3.0)) == pytest.approx(0.75, abs=1e-10)


def test_center_of_mass_shift(grid):
    u = _gauss(grid, -0.5, 0.4)
    shift = 40
    v = u.with_values(np.roll(u.values, shift))
    assert center_of_mass(v) - center_of_mass(u) == pytest.approx(shift * grid.h, abs=1e-12)


def test_center_of_mass_zero_field(grid):
    with pytest.raises(NumericalError):
        center_of_mass(ComplexField(grid, np.zeros(grid.n, complex)))


def test_center_of_mass_follows_ray():
    cfg = SimConfig(s=0.5, xi0=2 * PI2, n=512, dt=1e-3, T=0.8, stride=20)
    rec = run_simulation(cfg, "fe")
    ray = Ray(0.0, cfg.xi0, propagation_sign(cfg.xi0), 0.5)
    com = np.array([center_of_mass(rec.snapshot(i)) for i in range(rec.times.size)])
    assert np.max(np.abs(com - ray_position(ray, rec.times))) < 0.1


def test_padded_density_matches_periodic_density():
    g = Grid1D(-1.0, 1.0, 256, periodic=False)
    v = np.exp(-100 * g.interior**2 + 10j * g.interior)
    off, d = padded_seminorm_density(v, g.h, 0.5)
    assert d.shape[0] == 1 and d.shape[1] >= 4 * 257
    big = Grid1D(g.a - off * g.h, g.a - off * g.h + d.shape[1] * g.h, d.shape[1])
    u = np.zeros(d.shape[1], complex)
    u[off + 1: off + 256] = v
    np.testing.assert_allclose(d[0], seminorm_density(ComplexField(big, u), 0.5), atol=1e-12 * d.max())


def test_ray_energy_fraction_bounds():
    g = Grid1D(-1.0, 1.0, 256, periodic=False)
    v = np.vstack([np.exp(-200 * (g.interior - c) ** 2) for c in (-0.3, 0.4)])
    frac = ray_energy_fraction(v, g.a, g.h, 0.5, [-0.3, 0.4], 0.5)
    assert np.all((frac > 0.5) & (frac <= 1.0))
    with pytest.raises(ContractError):
        ray_energy_fraction(v, g.a, g.h, 0.5, [0.0], 0.5)


def test_fit_exact_line():
    eps = [2.0**-m for m in range(3, 8)]
    rep = fit_scaling([(e, e) for e in eps], "lin")
    assert rep.slope == pytest.approx(1.0, abs=1e-12)
    assert rep.r2 == pytest.approx(1.0)


def test_fit_power_law():
    eps = [2.0**-m for m in range(3, 8)]
    assert fit_scaling([(e, 3.0 * e**0.25) for e in eps]).slope == pytest.approx(0.25, abs=1e-12)


def test_fit_noisy(rng):
    eps = np.array([2.0**-m for m in range(3, 11)])
    vals = eps**0.5 * np.exp(0.05 * rng.standard_normal(eps.size))
    rep = fit_scaling(list(zip(eps, vals)))
    assert 0.4 <= rep.slope <= 0.6 and rep.r2 > 0.9


def test_fit_scale_invariant():
    eps = [2.0**-m for m in range(3, 8)]
    vals = [e**0.3 * (1 + 0.1 * i) for i, e in enumerate(eps)]
    a = fit_scaling(list(zip(eps, vals))).slope
    b = fit_scaling([(e, 7.5 * v) for e, v in zip(eps, vals)]).slope
    assert abs(a - b) < 1e-12


def test_fit_drops_nonpositive():
    eps = [2.0**-m for m in range(3, 8)]
    samples = [(e, e) for e in eps] + [(2.0**-9, 0.0)]
    with pytest.warns(RuntimeWarning, match="dropping"):
        rep = fit_scaling(samples)
    assert len(rep.samples) == 5


def test_fit_too_few():
    with pytest.raises(NumericalError):
        fit_scaling([(0.5, 1.0), (0.25, 0.5), (0.125, 0.3)])


def test_fit_samples_ordered_decreasing():
    rep = fit_scaling([(0.125, 1.0), (0.5, 3.0), (0.25, 2.0), (0.0625, 0.4)])
    assert [e for e, _ in rep.samples] == [0.5, 0.25, 0.125, 0.0625]
    assert set(rep.to_dict()) == {"metric", "samples", "slope", "intercept", "r2"}
