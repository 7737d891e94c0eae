"""JSON run configuration.  Unknown keys are rejected."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .discretization import Problem, SpaceGrid, TimeGrid
from .errors import BreatherError, ConfigError
from .kernels import (KernelTerm, LinearKernelField, MaterialSpec, builtin_nu_truncated_sine, delta,
                      density_table, from_fourier_table, periodic_reduce, profile_from_dict)
from .kernels.measure import LineMeasure
from .solver import SolverConfig

VERSION = 1
TOP_KEYS = {"version", "geometry", "material", "grid", "K", "M", "K_kernel", "solver", "output",
            "subharmonics", "seed", "K_sing"}
MATERIAL_KEYS = {"c", "T", "variant", "alpha", "beta", "linear", "h", "h_per", "h_loc", "nu",
                 "period_X"}
KERNEL_KEYS = {
    "delta": {"type"},
    "truncated_sine": {"type"},
    "density_table": {"type", "samples", "support", "atoms"},
    "fourier_table": {"type", "pairs"},
}


def _reject_unknown(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def kernel_from_dict(d: dict, T: float, K: int):
    """Torus coefficients up to K for a kernel definition."""
    kind = d.get("type") if isinstance(d, dict) else None
    if kind not in KERNEL_KEYS:
        raise ConfigError(f"unknown kernel type {kind!r}")
    _reject_unknown(d, KERNEL_KEYS[kind], f"kernel {kind}")
    if kind == "delta":
        return delta(T, K)
    if kind == "truncated_sine":
        return builtin_nu_truncated_sine(T, K)
    if kind == "fourier_table":
        return from_fourier_table(d["pairs"], T, K)
    if "samples" not in d and "atoms" not in d:
        raise ConfigError("density_table needs samples or atoms")
    if "samples" in d:
        m = density_table(d["samples"], tuple(d["support"]) if "support" in d else None)
    else:
        m = LineMeasure()
    if "atoms" in d:
        m = LineMeasure(atoms=tuple((float(a), float(b)) for a, b in d["atoms"]), density=m.density,
                        support=m.support, breakpoints=m.breakpoints)
    return periodic_reduce(m, T, K)


def material_from_dict(d: dict, geometry: str, K_kernel: int) -> MaterialSpec:
    _reject_unknown(d, MATERIAL_KEYS, "material")
    try:
        T = float(d.get("T", 2 * math.pi))
        terms = []
        for i, t in enumerate(d.get("linear", [])):
            _reject_unknown(t, {"amplitude", "kernel", "part"}, f"material.linear[{i}]")
            kern = kernel_from_dict(t.get("kernel", {"type": "delta"}), T, K_kernel)
            terms.append(KernelTerm(profile_from_dict(t["amplitude"]), kern, t.get("part")))
        h_per = profile_from_dict(d["h_per"]) if "h_per" in d else None
        h_loc = profile_from_dict(d["h_loc"]) if "h_loc" in d else None
        if "h" in d:
            h = profile_from_dict(d["h"])
        elif h_per is not None and h_loc is not None:
            h = h_per + h_loc
        else:
            raise ConfigError("material needs h or both h_per and h_loc")
        meta = {"period_X": float(d["period_X"])} if "period_X" in d else {}
        return MaterialSpec(geometry, float(d["c"]), T, LinearKernelField(tuple(terms)), h,
                            kernel_from_dict(d.get("nu", {"type": "truncated_sine"}), T, K_kernel),
                            d.get("variant", "i"), float(d.get("alpha", 2.0)),
                            float(d.get("beta", 2.0)), h_per, h_loc, meta)
    except KeyError as exc:
        raise ConfigError(f"material is missing {exc}") from None
    except ConfigError:
        raise
    except (BreatherError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid material: {exc}") from exc


@dataclass
class RunConfig:
    geometry: str
    material: dict
    N: int
    extent: float
    K: int
    M: int
    K_kernel: int
    solver: SolverConfig
    output: dict = field(default_factory=dict)
    subharmonics: list = field(default_factory=lambda: [1])
    K_sing: int | None = None
    source: dict = field(default_factory=dict)

    def spec(self) -> MaterialSpec:
        return material_from_dict(self.material, self.geometry, self.K_kernel)

    def grid(self) -> SpaceGrid:
        return SpaceGrid(self.geometry, self.N, self.extent)

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.M)

    def problem(self, spec: MaterialSpec | None = None) -> Problem:
        return Problem(spec or self.spec(), self.grid(), self.time_grid(), K=self.K)


def parse_config(d: dict, base: Path | None = None, geometry: str | None = None,
                 seed: int | None = None) -> RunConfig:
    _reject_unknown(d, TOP_KEYS, "config")
    if d.get("version") != VERSION:
        raise ConfigError(f"config version must be {VERSION}")
    geom = geometry or d.get("geometry", "slab")
    if geom not in ("slab", "cylindrical"):
        raise ConfigError(f"unknown geometry {geom!r}")
    mat = d.get("material")
    if isinstance(mat, str):
        path = (base or Path(".")) / mat
        if not path.exists():
            raise ConfigError(f"material file {path} does not exist")
        mat = _read_json(path)
    if not isinstance(mat, dict):
        raise ConfigError("material must be an object or a file path")
    g = d.get("grid", {})
    key = "L" if geom == "slab" else "R_max"
    _reject_unknown(g, {"N", "L", "R_max"}, "grid")
    if key not in g:
        raise ConfigError(f"grid needs {key} for {geom} geometry")
    try:
        K = int(d["K"])
        M = int(d.get("M", 4 * K + 1))
    except KeyError:
        raise ConfigError("config needs K") from None
    if M < 4 * K + 1:
        raise ConfigError(f"M={M} must be at least 4K+1={4 * K + 1}")
    subs = [int(n) for n in d.get("subharmonics", [1])]
    K_kernel = int(d.get("K_kernel", 3 * K * max(subs)))
    sol = dict(d.get("solver", {}))
    names = {f.name for f in fields(SolverConfig)}
    _reject_unknown(sol, names, "solver")
    if seed is not None:
        sol["seed"] = seed
    elif "seed" in d:
        sol["seed"] = int(d["seed"])
    try:
        cfg = SolverConfig(**sol)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from exc
    out = d.get("output", {})
    _reject_unknown(out, {"dir", "lattice"}, "output")
    return RunConfig(geom, mat, int(g.get("N", 512)), float(g[key]), K, M, K_kernel, cfg, out, subs,
                     d.get("K_sing"), d)


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def load_config(path, geometry: str | None = None, seed: int | None = None) -> RunConfig:
    path = Path(path)
    return parse_config(_read_json(path), path.parent, geometry, seed)
