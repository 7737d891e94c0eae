import copy
import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from breather.cli import main
from breather.config import load_config, parse_config
from breather.discretization import Field, SpaceGrid, load_field, save_field
from breather.discretization.io import field_from_bytes, field_to_bytes
from breather.errors import ConfigError, FieldFormatError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def base_config():
    d = json.loads((CONFIGS / "slab_truncated_sine.json").read_text())
    d["grid"] = {"N": 256, "L": 20.0}
    d["output"] = {"lattice": {"nx": 8, "nz": 2, "nt": 3}}
    return d


def write(tmp_path, d, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class TestFieldIO:
    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(["slab", "cylindrical"]), st.integers(8, 40),
           st.lists(st.integers(0, 30), min_size=0, max_size=5, unique=True), st.integers(0, 2**32 - 1))
    def test_roundtrip_bit_exact(self, geom, N, ks, seed):
        g = SpaceGrid(geom, N, 3.7)
        ks = tuple(sorted(k for k in ks if geom == "slab" or k % 2))
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((len(ks), g.size)) + 1j * rng.standard_normal((len(ks), g.size))
        u = Field(g, ks, c)
        back, K = field_from_bytes(field_to_bytes(u, K=31))
        assert K == 31 and back.ks == ks and back.grid.to_dict() == g.to_dict()
        assert back.coeffs.tobytes() == u.coeffs.tobytes()

    def test_file_and_sidecar(self, tmp_path):
        g = SpaceGrid.slab(10, 2.0)
        u = Field(g, (1, 3), np.arange(18).reshape(2, 9) * (1 + 0.5j))
        side = save_field(u, tmp_path / "u.field", K=4, meta={"note": "x"})
        assert side["sha256"] == sha(tmp_path / "u.field")
        v, side2 = load_field(tmp_path / "u.field")
        assert np.array_equal(v.coeffs, u.coeffs) and side2 == side

    def test_checksum_mismatch(self, tmp_path):
        g = SpaceGrid.slab(10, 2.0)
        path = tmp_path / "u.field"
        save_field(Field(g, (1,), np.ones((1, 9), complex)), path)
        data = bytearray(path.read_bytes())
        data[-1] ^= 1
        path.write_bytes(bytes(data))
        with pytest.raises(FieldFormatError, match="checksum"):
            load_field(path)

    def test_truncated_and_bad_magic(self):
        g = SpaceGrid.slab(10, 2.0)
        data = field_to_bytes(Field(g, (1,), np.ones((1, 9), complex)))
        with pytest.raises(FieldFormatError):
            field_from_bytes(data[:-8])
        with pytest.raises(FieldFormatError):
            field_from_bytes(data[:10])
        with pytest.raises(FieldFormatError, match="magic"):
            field_from_bytes(b"X" + data[1:])

    def test_missing_sidecar(self, tmp_path):
        g = SpaceGrid.slab(10, 2.0)
        path = tmp_path / "u.field"
        save_field(Field(g, (1,), np.ones((1, 9), complex)), path)
        (tmp_path / "u.field.json").unlink()
        with pytest.raises(FieldFormatError):
            load_field(path)


class TestConfig:
    def test_load_shipped(self):
        for name in ("slab_truncated_sine.json", "cylinder_delta.json"):
            rc = load_config(CONFIGS / name)
            assert rc.M >= 4 * rc.K + 1
            rc.problem()

    @pytest.mark.parametrize("where", ["top", "material", "grid", "solver", "kernel"])
    def test_unknown_keys(self, where):
        d = base_config()
        target = {"top": d, "material": d["material"], "grid": d["grid"], "solver": d["solver"],
                  "kernel": d["material"]["nu"]}[where]
        target["bogus"] = 1
        with pytest.raises(ConfigError, match="bogus"):
            parse_config(d).spec()

    def test_version(self):
        d = base_config()
        d["version"] = 2
        with pytest.raises(ConfigError, match="version"):
            parse_config(d)

    def test_M_too_small(self):
        d = base_config()
        d["M"] = 4 * d["K"]
        with pytest.raises(ConfigError):
            parse_config(d)

    def test_overrides(self):
        rc = parse_config(base_config(), seed=7)
        assert rc.solver.seed == 7

    def test_material_file(self, tmp_path):
        d = base_config()
        (tmp_path / "mat.json").write_text(json.dumps(d["material"]))
        d["material"] = "mat.json"
        rc = load_config(write(tmp_path, d))
        assert rc.spec().c == pytest.approx(0.8304547985373997)


class TestCLI:
    def test_validate_ok(self, tmp_path, capsys):
        assert main(["validate", "--config", str(write(tmp_path, base_config())), "--quiet"]) == 0

    def test_validate_fails_for_fast_wave(self, tmp_path):
        d = base_config()
        d["material"]["c"] = 0.95
        assert main(["validate", "--config", str(write(tmp_path, d)), "--quiet"]) == 1

    def test_usage_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["validate", "--config", str(bad), "--quiet"]) == 2
        assert main(["frobnicate"]) == 2
        assert main(["solve"]) == 2
        d = base_config()
        d["extra"] = True
        assert main(["solve", "--config", str(write(tmp_path, d)), "--quiet"]) == 2

    def test_solve_and_report(self, tmp_path):
        cfg = write(tmp_path, base_config())
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        names = ["u.field", "w.field", "solve_report.json", "fields.csv", "residual_report.json"]
        for n in names:
            assert (out / n).exists(), n
        rows = list(csv.reader(open(out / "fields.csv")))
        assert len(rows[0]) == 16
        rr = json.loads((out / "residual_report.json").read_text())
        assert rr["suite"]["ok"]
        first = {n: sha(out / n) for n in ("u.field", "w.field")}
        assert main(["solve", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        assert {n: sha(out / n) for n in first} == first

        before = {n: sha(out / n) for n in names}
        assert main(["report", "--out", str(out), "--config", str(cfg), "--quiet"]) == 0
        assert {n: sha(out / n) for n in names} == before
        rep = out / "report"
        amps = list(csv.DictReader(open(rep / "mode_amplitudes.csv")))
        ks = [abs(int(r["k"])) for r in amps]
        assert ks == sorted(ks) and ks
        summary = json.loads((rep / "summary.json").read_text())
        assert summary["defect"] <= 1e-8 * summary["quarter_norm_sq"]
        assert summary["suite_ok"]

    def test_report_missing(self, tmp_path):
        assert main(["report", "--out", str(tmp_path / "nothing"), "--quiet"]) == 2

    def test_report_corrupt(self, tmp_path):
        cfg = write(tmp_path, base_config())
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        data = bytearray((out / "u.field").read_bytes())
        data[100] ^= 0xFF
        (out / "u.field").write_bytes(bytes(data))
        assert main(["report", "--out", str(out), "--quiet"]) == 1

    def test_subharmonics(self, tmp_path):
        cfg = write(tmp_path, base_config())
        out = tmp_path / "fam"
        code = main(["solve", "--config", str(cfg), "--out", str(out), "--subharmonics", "1,4", "--quiet"])
        assert code == 0
        fam = json.loads((out / "family.json").read_text())
        assert (out / "n1" / "u.field").exists() and (out / "n4" / "u.field").exists()
        assert fam["pairs"][0]["distinct_by_period"]

    def test_bad_subharmonic_arg(self, tmp_path):
        cfg = write(tmp_path, base_config())
        assert main(["solve", "--config", str(cfg), "--subharmonics", "0", "--quiet"]) == 2
