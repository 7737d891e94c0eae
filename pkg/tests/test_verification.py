import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from breather.discretization import Field, Problem, SpaceGrid, TimeGrid, h_norm, save_field
from breather.kernels import Constant
from breather.reconstruction import FieldEvaluator, profile_from_u
from breather.solver import SolverConfig, ground_state
from breather.verification import (ResidualReport, decay_probe, embedding_diagnostic, embedding_exponent,
                                   invariant_suite, maxwell_refinement, mode_residuals, profile_residual,
                                   residual_gradient_compatible, residual_report, sample_points,
                                   smoothness_probe)

from builders import TWO_PI, cylinder_problem, random_field, simple_spec, slab_problem
from test_reconstruction import direct_cubic


@pytest.fixture(scope="module")
def slab_run():
    p = slab_problem(N=256, L=20.0)
    return p, ground_state(p, SolverConfig())


@pytest.fixture(scope="module")
def vacuum_run():
    p = Problem(simple_spec(g=0.0, h=Constant(1.0)), SpaceGrid.slab(256, 20.0), TimeGrid(64), K=6)
    return p, ground_state(p, SolverConfig())


class TestResidual:
    def test_zero_field(self):
        p = slab_problem(N=64, L=5.0)
        u = Field.zeros(p.grid, p.modes)
        pr = profile_residual(u, p)
        assert pr["absolute"] == 0 and pr["relative"] == 0

    def test_dense_oracle_slab(self):
        p = Problem(simple_spec(g=0.3), SpaceGrid.slab(48, 4.0), TimeGrid(49), K=4)
        u = random_field(p, np.random.default_rng(3))
        r = mode_residuals(u, p)
        h = p.grid.h
        F = p.spec.nu.coeff(np.array(u.ks))
        cube = direct_cubic(u, p.h, u.ks)
        for i, k in enumerate(u.ks):
            v = np.pad(u.coeffs[i], 1)
            lap = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
            Vk = 1 / p.spec.c**2 - 1 - 0.3
            ref = -lap + (p.omega * k) ** 2 * Vk * u.coeffs[i] - (p.omega * k) ** 2 * F[i] * cube[i]
            assert np.max(np.abs(r[i] - ref)) <= 1e-10 * np.max(np.abs(ref))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_compatibility_random(self, seed):
        p = Problem(simple_spec(), SpaceGrid.slab(64, 6.0), TimeGrid(33), K=8)
        u = random_field(p, np.random.default_rng(seed))
        assert residual_gradient_compatible(u, p) <= 1e-12

    def test_solution_small(self, slab_run):
        p, rep = slab_run
        pr = profile_residual(rep.u, p)
        assert pr["relative"] <= 1e-6
        assert set(pr["per_mode"]) == set(p.modes.regular)


class TestDiagnostics:
    def test_single_mode_multiplier(self):
        p = Problem(simple_spec(), SpaceGrid.slab(64, 6.0), TimeGrid(33), K=8)
        c = np.zeros((len(p.modes), p.grid.size), dtype=complex)
        c[2] = np.exp(-p.grid.x**2)
        u = Field(p.grid, p.modes.regular, c)
        k = u.ks[2]
        sm = smoothness_probe(u, p, s_list=(1, 2))
        base = h_norm(u, p)
        assert sm["norms"]["1"]["H"] == pytest.approx(p.omega * k * base, rel=1e-12)
        assert sm["norms"]["2"]["H"] == pytest.approx((p.omega * k) ** 2 * base, rel=1e-12)
        assert sm["tail_ratio"] == 0 and not sm["flat_spectrum"]

    def test_flat_flag(self):
        p = Problem(simple_spec(), SpaceGrid.slab(64, 6.0), TimeGrid(33), K=8)
        c = np.tile(np.exp(-p.grid.x**2), (len(p.modes), 1)).astype(complex)
        assert smoothness_probe(Field(p.grid, p.modes.regular, c), p)["flat_spectrum"]

    def test_decay_compact(self):
        g = SpaceGrid.slab(100, 10.0)
        c = np.where(np.abs(g.x) < 2.0, 1.0, 0.0)[None, :].astype(complex)
        d = decay_probe(Field(g, (1,), c))
        assert all(v == 0 for v in d.values())

    def test_decay_monotone(self):
        g = SpaceGrid.slab(200, 10.0)
        d = decay_probe(Field(g, (1,), np.exp(-g.x**2 / 8)[None, :].astype(complex)), (0.1, 0.3, 0.6))
        vals = [d["0.1"], d["0.3"], d["0.6"]]
        assert vals[0] > vals[1] > vals[2] > 0

    def test_embedding(self):
        assert embedding_exponent("slab", 2.0) == math.inf
        assert embedding_exponent("slab", 1.0) == 4.0
        assert embedding_exponent("cylindrical", 2.0) == 6.0
        fine = Problem(simple_spec(), SpaceGrid.slab(64, 6.0), TimeGrid(49), K=12)
        coarse = Problem(simple_spec(), SpaceGrid.slab(64, 6.0), TimeGrid(25), K=6)
        d = embedding_diagnostic(fine, coarse, n_samples=20)
        assert d["embedding_expected"] and 0 < d["C"] < math.inf
        assert 0 < d["growth"] < 10


class TestMaxwell:
    def test_points_fixed(self, slab_run):
        p, _ = slab_run
        a, b = sample_points(p), sample_points(p)
        assert np.array_equal(a, b) and a.shape == (24, 4)
        assert not np.any(np.isin(a[:, 0], p.grid.x))

    def test_refinement_slab(self, slab_run):
        p, rep = slab_run
        ev = FieldEvaluator(profile_from_u(rep.u, p), p)
        mx = maxwell_refinement(ev, sample_points(p), min(p.grid.h, p.spec.T / 48))
        for key in ("faraday", "gauss_B", "gauss_D"):
            assert mx[key]["ok"], (key, mx[key])
        assert mx["gauss_D"]["exact"]


class TestSuite:
    def test_slab_all_pass(self, slab_run, tmp_path):
        p, rep = slab_run
        save_field(rep.u, tmp_path / "u.field", K=p.K)
        res = invariant_suite({"problem": p, "u": rep.u, "field_path": tmp_path / "u.field",
                               "assumptions": rep.assumption_report})
        bad = {k: v for k, v in res["verdicts"].items() if v["status"] == "fail"}
        assert res["ok"], bad
        assert res["verdicts"]["field_roundtrip"]["status"] == "pass"

    def test_vacuum_all_pass(self, vacuum_run):
        p, rep = vacuum_run
        res = invariant_suite({"problem": p, "u": rep.u})
        assert res["ok"], {k: v for k, v in res["verdicts"].items() if v["status"] == "fail"}

    def test_corrupted_file(self, slab_run, tmp_path):
        p, rep = slab_run
        path = tmp_path / "u.field"
        save_field(rep.u, path, K=p.K)
        data = bytearray(path.read_bytes())
        data[-3] ^= 0xFF
        path.write_bytes(bytes(data))
        res = invariant_suite({"problem": p, "u": rep.u, "field_path": path})
        assert not res["ok"]
        assert res["verdicts"]["field_roundtrip"]["status"] == "fail"

    def test_perturbed_u_fails(self, slab_run):
        p, rep = slab_run
        u = rep.u.with_coeffs(rep.u.coeffs * 1.01)
        res = invariant_suite({"problem": p, "u": u})
        assert res["verdicts"]["nehari"]["status"] == "fail"
        assert res["verdicts"]["gradient"]["status"] == "fail"

    def test_report(self, slab_run):
        p, rep = slab_run
        r = residual_report(rep.u, p)
        assert isinstance(r, ResidualReport) and r.values_ok()
        assert '"profile_residual"' in r.to_json()
        r.decay["0.5"] = float("nan")
        assert not r.values_ok()
