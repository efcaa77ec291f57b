import numpy as np

from fracwkb.grid import ComplexField, Grid1D

PI2 = np.pi**2


def gaussian_field(a=-20.0, b=20.0, n=4096, width=1.0):
    g = Grid1D(a, b, n)
    return ComplexField(g, np.exp(-0.5 * (g.x / width) ** 2))
