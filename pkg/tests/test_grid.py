import numpy as np
import pytest

from fracwkb.errors import ContractError, DomainError, ResolutionError
from fracwkb.grid import ComplexField, Grid1D, require_same_grid


def test_periodic_grid_needs_power_of_two():
    with pytest.raises(DomainError):
        Grid1D(0.0, 1.0, 100)
    Grid1D(0.0, 1.0, 100, periodic=False)


def test_points_and_spacing():
    g = Grid1D(-1.0, 1.0, 8)
    assert g.h == 0.25
    assert g.x[0] == -1.0 and g.x.size == 8
    fe = Grid1D(-1.0, 1.0, 8, periodic=False)
    assert fe.x.size == 9 and fe.interior.size == 7


def test_resolution_error_names_minimum_n():
    g = Grid1D(-1.0, 1.0, 64)
    with pytest.raises(ResolutionError, match="n >= 512"):
        g.require_resolved(150.0)


def test_field_validation():
    g = Grid1D(0.0, 1.0, 8)
    with pytest.raises(ContractError):
        ComplexField(g, np.ones(7))
    with pytest.raises(ContractError):
        ComplexField(g, np.full(8, np.nan))
    f = ComplexField(g, np.ones(8))
    assert f.l2_norm() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_grid_mismatch():
    a = ComplexField(Grid1D(0.0, 1.0, 8), np.zeros(8))
    b = ComplexField(Grid1D(0.0, 2.0, 8), np.zeros(8))
    with pytest.raises(ContractError):
        require_same_grid(a, b)
