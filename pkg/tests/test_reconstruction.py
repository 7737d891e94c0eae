import csv
import math

import numpy as np
import pytest

from breather.discretization import Field, Problem, SpaceGrid, TimeGrid
from breather.kernels import Constant, LinearKernelField, from_fourier_table
from breather.reconstruction import (FieldEvaluator, ProfilePair, assemble_fields, profile_from_u,
                                     singular_modes, time_antiderivative, write_fields_csv)
from breather.solver import SolverConfig, ground_state

from builders import TWO_PI, cylinder_problem, random_field, simple_spec, slab_problem


def direct_cubic(u: Field, h, ks, M=257):
    """(h u^3)_k by brute-force trigonometric quadrature on M points."""
    t = TWO_PI * np.arange(M) / M
    mult = u.multiplicity
    s = np.real(np.einsum("k,kj,km->mj", mult, u.coeffs, np.exp(1j * np.outer(u.ks, t))))
    f = h * s**3
    return np.array([np.mean(f * np.exp(-1j * k * t)[:, None], axis=0) for k in ks])


@pytest.fixture(scope="module")
def slab_solution():
    p = slab_problem(N=256, L=20.0)
    return p, ground_state(p, SolverConfig())


@pytest.fixture(scope="module")
def cyl_solution():
    p = cylinder_problem(N=128, R=16.0)
    return p, ground_state(p, SolverConfig(sigma=1.5), validate=False)


class TestProfile:
    def test_variant_i(self, slab_solution):
        p, rep = slab_solution
        pair = profile_from_u(rep.u, p)
        assert pair.variant == "i" and pair.w1 is rep.u and pair.w2.ks == ()
        assert np.array_equal(pair.w.coeffs, rep.u.coeffs)

    def test_variant_ii_delta(self):
        p = Problem(simple_spec(variant="ii"), SpaceGrid.slab(64, 5.0), TimeGrid(33), K=8)
        u = random_field(p, np.random.default_rng(0))
        pair = profile_from_u(u, p)
        assert np.array_equal(pair.w1.coeffs, u.coeffs)
        assert pair.w2.ks == ()

    def test_variant_ii_singular_solve(self):
        nu = from_fourier_table([[0, 1.0], [1, 0.8], [2, 0.3]], TWO_PI, 24)
        spec = simple_spec(nu=nu, variant="ii", g=0.2)
        p = Problem(spec, SpaceGrid.slab(96, 6.0), TimeGrid(17), K=2)
        assert p.modes.regular == (1, 2)
        u = random_field(p, np.random.default_rng(1))
        pair = profile_from_u(u, p)
        assert pair.w2.ks == (3, 4, 5, 6) == singular_modes(p, 6)
        assert np.allclose(pair.w1.coeffs, u.coeffs / np.array([0.8, 0.3])[:, None], rtol=1e-15)
        rhs = direct_cubic(u, p.h, pair.w2.ks)
        V = spec.V(p.grid.x, pair.w2.ks)
        from breather.discretization import build_mode_operator
        for i, k in enumerate(pair.w2.ks):
            op = build_mode_operator(p.grid, k, p.omega, V[i])
            res = op.apply(pair.w2.mode(k)) - (p.omega * k) ** 2 * rhs[i]
            assert np.max(np.abs(res)) <= 1e-11 * np.max(np.abs((p.omega * k) ** 2 * rhs[i]))
        # N * w = u on the time grid
        w = pair.w
        Fw = w.with_coeffs(w.coeffs * nu.coeff(np.array(w.ks))[:, None])
        from breather.discretization import time_synthesis
        tg = TimeGrid(33)
        ref = time_synthesis(u, tg)
        assert np.max(np.abs(time_synthesis(Fw, tg) - ref)) <= 1e-10 * np.max(np.abs(ref))


class TestAntiderivative:
    def test_single_mode(self):
        g = SpaceGrid.slab(16, 1.0)
        omega = 1.3
        w = Field(g, (1,), np.full((1, 15), 0.5))
        W = time_antiderivative(w, omega)
        tg = TimeGrid(16)
        from breather.discretization import time_synthesis
        s = time_synthesis(W, tg)
        assert np.allclose(s, (np.sin(tg.phases()) / omega)[:, None], atol=1e-15)

    def test_inverse_and_real(self):
        g = SpaceGrid.slab(16, 1.0)
        rng = np.random.default_rng(0)
        w = Field(g, (1, 2, 5), rng.standard_normal((3, 15)) + 1j * rng.standard_normal((3, 15)))
        W = time_antiderivative(w, 0.9)
        back = W.coeffs * (1j * 0.9 * np.array([1, 2, 5]))[:, None]
        assert np.max(np.abs(back - w.coeffs)) <= 1e-12 * np.max(np.abs(w.coeffs))
        from breather.discretization import time_synthesis
        assert np.isrealobj(time_synthesis(W, TimeGrid(16)))

    def test_zero_mode_rejected(self):
        g = SpaceGrid.slab(16, 1.0)
        with pytest.raises(ValueError):
            time_antiderivative(Field.zeros(g, (0, 1)), 1.0)


class TestSlabFields:
    def test_te_structure_and_faraday_formula(self, slab_solution):
        p, rep = slab_solution
        pair = profile_from_u(rep.u, p)
        fs = assemble_fields(pair, p)
        assert np.all(fs.E[..., 0] == 0) and np.all(fs.E[..., 2] == 0)
        assert np.allclose(fs.B[..., 0], -fs.E[..., 1] / p.spec.c, rtol=0, atol=1e-15)
        assert np.array_equal(fs.H, fs.B)

    def test_nodes_match_synthesis(self, slab_solution):
        p, rep = slab_solution
        ev = FieldEvaluator(profile_from_u(rep.u, p), p)
        x = p.grid.x[100:110]
        t = np.full_like(x, 0.3)
        E, _, D, _ = ev(x, 0 * x, 0 * x, t)
        u = rep.u
        # oracle: direct trigonometric sums at grid nodes
        w = np.real(np.sum(2 * u.coeffs[:, 100:110] * np.exp(1j * np.array(u.ks) * 0.3)[:, None], axis=0))
        assert np.allclose(E[:, 1], w, rtol=0, atol=1e-13)
        nu = p.spec.nu
        tt = TWO_PI * np.arange(128) / 128
        samples = np.real(np.einsum("kj,km->mj", 2 * u.coeffs[:, 100:110], np.exp(1j * np.outer(u.ks, tt))))
        cube = np.fft.rfft(samples**3, axis=0) / 128
        kN = np.arange(25)
        N = np.real(np.sum(np.where(kN == 0, 1, 2)[:, None] * nu.coeff(kN)[:, None] * cube[kN]
                           * np.exp(1j * kN * 0.3)[:, None], axis=0))
        G = p.spec.linear.coefficients(x, u.ks)
        Gw = np.real(np.sum(2 * G * u.coeffs[:, 100:110] * np.exp(1j * np.array(u.ks) * 0.3)[:, None], axis=0))
        assert np.allclose(D[:, 1], w + Gw + p.spec.h(x) * N, rtol=0, atol=1e-12)

    def test_vacuum_law(self):
        spec = simple_spec(g=0.0, h=Constant(0.0))
        p = Problem(spec, SpaceGrid.slab(64, 5.0), TimeGrid(33), K=8)
        pair = ProfilePair(random_field(p, np.random.default_rng(2)), Field.zeros(p.grid, ()), "i")
        fs = assemble_fields(pair, p, {"x": np.linspace(-2, 2, 9), "y": np.zeros(1),
                                        "z": np.array([0.0, 0.4]), "t": np.array([0.0, 1.0])})
        assert np.allclose(fs.D, fs.E, rtol=0, atol=1e-14)

    def test_periodicity(self, slab_solution):
        p, rep = slab_solution
        ev = FieldEvaluator(profile_from_u(rep.u, p), p)
        rng = np.random.default_rng(0)
        x, z, t = rng.uniform(-5, 5, 20), rng.uniform(0, 3, 20), rng.uniform(0, 6, 20)
        T, c = p.spec.T, p.spec.c
        a = ev(x, 0 * x, z, t)
        for b in (ev(x, 0 * x, z + c * T, t), ev(x, 0 * x, z, t + T)):
            for fa, fb in zip(a, b):
                assert np.max(np.abs(fa - fb)) <= 1e-12 * max(np.max(np.abs(fa)), 1e-300)

    def test_csv(self, slab_solution, tmp_path):
        p, rep = slab_solution
        fs = assemble_fields(profile_from_u(rep.u, p), p,
                             {"x": np.linspace(-3, 3, 5), "y": np.zeros(1), "z": np.zeros(2), "t": np.zeros(3)})
        path = tmp_path / "f.csv"
        write_fields_csv(fs, path)
        rows = list(csv.reader(open(path)))
        assert len(rows[0]) == 16 and len(rows) == 1 + 5 * 2 * 3
        assert rows[0][:4] == ["x", "y", "z", "t"]


class TestCylinderFields:
    def test_azimuthal(self, cyl_solution):
        p, rep = cyl_solution
        fs = assemble_fields(profile_from_u(rep.u, p), p)
        X, Y = np.meshgrid(fs.lattice["x"], fs.lattice["y"], indexing="ij")
        radial = fs.E[..., 0] * X[..., None, None] + fs.E[..., 1] * Y[..., None, None]
        assert np.max(np.abs(radial)) <= 1e-14 * np.max(np.abs(fs.E))
        assert np.all(fs.E[..., 2] == 0)

    def test_axis(self, cyl_solution):
        p, rep = cyl_solution
        ev = FieldEvaluator(profile_from_u(rep.u, p), p)
        r0, r1 = p.grid.x[:2]
        t = 0.4
        E0 = ev(r0, 0.0, 0.0, t)[0]
        E1 = ev(r1, 0.0, 0.0, t)[0]
        w0 = np.real(np.sum(2 * rep.u.coeffs[:, 0] * np.exp(1j * np.array(rep.u.ks) * t)))
        assert np.linalg.norm(E0) <= 2 * abs(w0) + 1e-300
        ratio = (np.linalg.norm(E0) / r0) / (np.linalg.norm(E1) / r1)
        assert 0.5 <= ratio <= 2.0
        assert np.all(ev(0.0, 0.0, 0.0, t)[0] == 0)

    def test_zero_profile(self):
        p = cylinder_problem(N=32, R=5.0)
        zero = Field.zeros(p.grid, p.modes)
        fs = assemble_fields(ProfilePair(zero, Field.zeros(p.grid, ()), "i"), p,
                             {"x": np.linspace(-2, 2, 4), "y": np.linspace(-2, 2, 4), "z": np.zeros(1),
                              "t": np.zeros(2)})
        for arr in (fs.E, fs.B, fs.D, fs.H):
            assert np.all(arr == 0)
