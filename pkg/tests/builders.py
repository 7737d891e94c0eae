"""Shared material and problem constructors for the tests."""
import math

import numpy as np

from breather.discretization import Field, Problem, SpaceGrid, TimeGrid
from breather.kernels import (Constant, Cosine, Gaussian, KernelTerm, LinearKernelField, MaterialSpec,
                              builtin_nu_truncated_sine, delta)

TWO_PI = 2 * math.pi
C_SLAB = 1 / math.sqrt(1.45)  # margin 0.05 against sup G = 0.4


def slab_spec(K=8, nmax=1, c=C_SLAB, variant="i", hloc_amp=0.5, gloc_amp=0.05, T=TWO_PI):
    Kk = 3 * K * nmax
    X = 5.0
    gper, gloc = Cosine(0.25, 0.1, X), Gaussian(gloc_amp, 2.0)
    hper, hloc = Cosine(1.0, 0.5, X), Gaussian(hloc_amp, 2.0)
    terms = [KernelTerm(gper, delta(T, Kk), "per"), KernelTerm(gloc, delta(T, Kk), "loc")]
    return MaterialSpec("slab", c, T, LinearKernelField(tuple(terms)), hper + hloc,
                        builtin_nu_truncated_sine(T, Kk), variant, 2, 2, hper, hloc, {"period_X": X})


def slab_problem(N=512, L=40.0, K=8, M=64, **kw):
    return Problem(slab_spec(K=K, **kw), SpaceGrid.slab(N, L), TimeGrid(M), K=K)


def cylinder_spec(K=7, c=C_SLAB, T=TWO_PI, variant="i"):
    Kk = 3 * K
    lin = LinearKernelField.instantaneous(Gaussian(0.3, 3.0), T, Kk)
    return MaterialSpec("cylindrical", c, T, lin, Constant(0.2) + Gaussian(1.0, 3.0), delta(T, Kk),
                        variant, 2, 2)


def cylinder_problem(N=256, R=20.0, K=7, M=32, **kw):
    return Problem(cylinder_spec(K=K, **kw), SpaceGrid.cylindrical(N, R), TimeGrid(M), K=K)


def simple_spec(geometry="slab", c=0.8, g=0.2, h=None, nu=None, K=8, T=TWO_PI, variant="i"):
    """Constant-coefficient material; handy for closed-form oracles."""
    Kk = 3 * K
    lin = LinearKernelField.instantaneous(Constant(g), T, Kk) if g else LinearKernelField(())
    nu = nu if nu is not None else delta(T, Kk)
    h = h if h is not None else Gaussian(1.0, 2.0)
    return MaterialSpec(geometry, c, T, lin, h, nu, variant, 2, 2)


def random_field(problem, rng, envelope=True):
    grid = problem.grid
    shape = (len(problem.modes), grid.size)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if envelope:
        env = np.exp(-((grid.x / (0.3 * grid.extent)) ** 2))
        if grid.geometry == "cylindrical":
            env = env * grid.x / grid.extent
        c = c * env
    return Field(grid, problem.modes.regular, c)


def smooth_random_field(problem, rng, n_bumps=3):
    """Random superposition of smooth bumps, so finite differences see a smooth profile."""
    grid = problem.grid
    x = grid.x
    out = np.zeros((len(problem.modes), grid.size), dtype=complex)
    for i in range(len(problem.modes)):
        for _ in range(n_bumps):
            a = rng.standard_normal() + 1j * rng.standard_normal()
            x0 = rng.uniform(-0.2, 0.2) * grid.extent if grid.geometry == "slab" else rng.uniform(0.05, 0.3) * grid.extent
            s = rng.uniform(0.05, 0.15) * grid.extent
            bump = np.exp(-((x - x0) / s) ** 2)
            if grid.geometry == "cylindrical":
                bump = bump * x / grid.extent
            out[i] += a * bump
    return Field(grid, problem.modes.regular, out)
