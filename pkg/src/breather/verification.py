"""Strong-form and Maxwell residuals, diagnostics and the invariant suite."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .discretization import (Field, Problem, TimeGrid, fractional_time_derivative, h_inner_product,
                             h_norm, load_field, time_synthesis)
from .discretization.field import tail_mass
from .errors import BreatherError
from .functional import derivative, energy, gradient, nonlinearity
from .reconstruction import FieldEvaluator, ProfilePair, cubic_modes, profile_from_u, time_antiderivative

PASS, FAIL, INFO = "pass", "fail", "info"


def _weighted_norm(coeffs: np.ndarray, ks, grid) -> float:
    mult = np.where(np.asarray(ks) == 0, 1.0, 2.0)
    return math.sqrt(float(np.sum(mult[:, None] * grid.weights * np.abs(coeffs) ** 2)))


# -- profile residual ---------------------------------------------------------

def mode_residuals(u: Field, problem: Problem) -> np.ndarray:
    """r_k = A_k u_k - omega^2 k^2 F_k (h u^3)_k on each regular mode (strong form, per unit weight)."""
    N = nonlinearity(u, problem)
    out = np.empty_like(u.coeffs)
    for i, op in enumerate(problem.operators):
        out[i] = op.apply(u.coeffs[i]) - problem.lift_k[i] * N.coeffs[i]
    return out


def profile_residual(u: Field, problem: Problem, pair: ProfilePair | None = None) -> dict:
    """Weighted L^2 norm of the strong-form defect, absolute and relative to |A u|."""
    r = mode_residuals(u, problem)
    Au = np.array([op.apply(u.coeffs[i]) for i, op in enumerate(problem.operators)])
    ks = u.ks
    absn = _weighted_norm(r, ks, problem.grid)
    scale = _weighted_norm(Au, ks, problem.grid)
    out = {
        "absolute": absn,
        "relative": absn / scale if scale > 0 else 0.0,
        "per_mode": {int(k): _weighted_norm(r[i:i + 1], (k,), problem.grid) for i, k in enumerate(ks)},
        "truncation": truncation_defect(u, problem),
    }
    if pair is not None and pair.variant == "ii":
        out["w_equation"] = w_equation_residual(pair, u, problem)
    return out


def truncation_defect(u: Field, problem: Problem) -> float:
    """Relative size of the forcing P_R[h u^3] on regular harmonics above the cutoff K."""
    nu = problem.spec.nu
    K = problem.K
    hi = [k for k in range(K + 1, 3 * u.max_k() + 1)
          if k <= nu.K and abs(nu.coeff(k)) > 0
          and not (problem.grid.geometry == "cylindrical" and k % 2 == 0)]
    if not hi:
        return 0.0
    f_hi = cubic_modes(u, problem, hi, weight=problem.h)
    f_lo = nonlinearity(u, problem).coeffs
    lo = _weighted_norm(f_lo, u.ks, problem.grid)
    return _weighted_norm(f_hi, hi, problem.grid) / lo if lo > 0 else 0.0


def w_equation_residual(pair: ProfilePair, u: Field, problem: Problem) -> float:
    """A_k w_k - omega^2 k^2 (h (nu * w)^3)_k over every stored harmonic of w, relative."""
    w = pair.w
    ks = [k for k in w.ks if k > 0]
    rhs = cubic_modes(u, problem, ks, weight=problem.h)
    V = problem.spec.V(problem.grid.x, ks)
    r = np.empty((len(ks), problem.grid.size), dtype=complex)
    a = np.empty_like(r)
    for i, k in enumerate(ks):
        a[i] = problem.operator(k, V[i]).apply(w.mode(k))
        r[i] = a[i] - (problem.omega * k) ** 2 * rhs[i]
    scale = _weighted_norm(a, ks, problem.grid)
    return _weighted_norm(r, ks, problem.grid) / scale if scale > 0 else 0.0


def residual_gradient_compatible(u: Field, problem: Problem, rtol: float = 1e-8) -> float:
    """max_k |r_k - A_k g_k| / max|A_k u_k|: zero up to rounding since g_k = A_k^-1 r_k."""
    r = mode_residuals(u, problem)
    g = gradient(u, problem)
    Ag = np.array([op.apply(g.coeffs[i]) for i, op in enumerate(problem.operators)])
    Au = np.array([op.apply(u.coeffs[i]) for i, op in enumerate(problem.operators)])
    scale = max(float(np.abs(Au).max()), 1e-300)
    return float(np.abs(r - Ag).max()) / scale


# -- diagnostics --------------------------------------------------------------

def smoothness_probe(u: Field, problem: Problem, s_list=(1, 2, 4), flat_tol: float = 1e-4) -> dict:
    """H-norms and sup norms of fractional time derivatives plus a spectral tail flag."""
    tg = TimeGrid(max(problem.tg.M, 2 * u.max_k() + 1))
    norms = {}
    for s in s_list:
        d = fractional_time_derivative(u, s, problem.omega)
        norms[str(s)] = {"H": h_norm(d, problem), "sup": float(np.abs(time_synthesis(d, tg)).max())}
    amp = np.abs(u.coeffs).max(axis=1)
    ratio = float(amp[-1] / amp.max()) if amp.max() > 0 else 0.0
    return {"norms": norms, "tail_ratio": ratio, "flat_spectrum": ratio > flat_tol,
            "amplitudes": {int(k): float(a) for k, a in zip(u.ks, amp)}}


def decay_probe(u: Field, fractions=(0.5, 0.75, 0.9)) -> dict:
    return {str(f): tail_mass(u, f) for f in fractions}


def embedding_exponent(geometry: str, alpha: float) -> float:
    """p* = 4/(2 - alpha) on the slab, 6/(3 - alpha) on the cylinder (inf past the pole)."""
    if geometry == "slab":
        return 4.0 / (2.0 - alpha) if alpha < 2 else math.inf
    return 6.0 / (3.0 - alpha) if alpha < 3 else math.inf


def embedding_constant(problem: Problem, n_samples: int = 100, seed: int = 0) -> float:
    """Largest observed |u|_{L^4} / |u|_H over random fields."""
    rng = np.random.default_rng(seed)
    grid = problem.grid
    env = np.exp(-((grid.x / (0.25 * grid.extent)) ** 2))
    if grid.geometry == "cylindrical":
        env = env * grid.x / grid.extent
    best = 0.0
    tg = TimeGrid(max(problem.tg.M, 4 * problem.K + 1))
    for _ in range(n_samples):
        c = (rng.standard_normal((len(problem.modes), grid.size))
             + 1j * rng.standard_normal((len(problem.modes), grid.size))) * env
        u = Field(grid, problem.modes.regular, c)
        s = time_synthesis(u, tg)
        l4 = float(np.mean(s**4, axis=0) @ grid.weights) ** 0.25
        best = max(best, l4 / h_norm(u, problem))
    return best


def embedding_diagnostic(problem: Problem, coarse: Problem | None = None, n_samples: int = 100,
                         seed: int = 0) -> dict:
    """Empirical L^4 <= C H constant; compared with a coarser mode set when given."""
    p_star = embedding_exponent(problem.grid.geometry, problem.spec.alpha)
    C = embedding_constant(problem, n_samples, seed)
    out = {"p_star": p_star, "embedding_expected": 4 < p_star, "C": C}
    if coarse is not None:
        C0 = embedding_constant(coarse, n_samples, seed)
        out.update({"C_coarse": C0, "growth": C / C0})
    return out


# -- Maxwell residuals -------------------------------------------------------

def sample_points(problem: Problem, n: int = 24, seed: int = 1) -> np.ndarray:
    """Fixed off-lattice points (x, y, z, t) inside the bulk of the domain."""
    rng = np.random.default_rng(seed)
    ext = problem.grid.extent
    spec = problem.spec
    z = rng.uniform(0, spec.c * spec.T, n)
    t = rng.uniform(0, spec.T, n)
    if problem.grid.geometry == "slab":
        return np.column_stack([rng.uniform(-0.3 * ext, 0.3 * ext, n), np.zeros(n), z, t])
    r = rng.uniform(0.05 * ext, 0.3 * ext, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th), z, t])


def _derivatives(ev: FieldEvaluator, pts: np.ndarray, delta: float):
    """Centered differences d/dx_i of E, B, D, H, i over (x, y, z, t)."""
    out = []
    for i in range(4):
        e = np.zeros(4)
        e[i] = delta
        plus = ev(*(pts + e).T)
        minus = ev(*(pts - e).T)
        out.append([(p - m) / (2 * delta) for p, m in zip(plus, minus)])
    # out[i][f] has shape (n, 3); reorder to d[f][i]
    return [[out[i][f] for i in range(4)] for f in range(4)]


def _curl(d):
    dx, dy, dz = d[0], d[1], d[2]
    return np.stack([dy[:, 2] - dz[:, 1], dz[:, 0] - dx[:, 2], dx[:, 1] - dy[:, 0]], axis=-1)


def _div(d):
    return d[0][:, 0] + d[1][:, 1] + d[2][:, 2]


def _rms(a) -> float:
    return float(np.sqrt(np.mean(np.abs(a) ** 2)))


def maxwell_residuals(ev: FieldEvaluator, pts: np.ndarray, delta: float) -> dict:
    """RMS of curl E + dB/dt, div B, div D and curl H - dD/dt at the given points."""
    dE, dB, dD, dH = _derivatives(ev, pts, delta)
    scale = max(_rms(dB[3]), _rms(_curl(dE)), 1e-300)
    scale_d = max(_rms(dD[3]), _rms(_curl(dH)), 1e-300)
    return {
        "faraday": _rms(_curl(dE) + dB[3]) / scale,
        "gauss_B": _rms(_div(dB)) / scale,
        "gauss_D": _rms(_div(dD)) / scale_d,
        "ampere": _rms(_curl(dH) - dD[3]) / scale_d,
        "delta": delta,
    }


def maxwell_refinement(ev: FieldEvaluator, pts: np.ndarray, delta: float,
                       min_ratio: float = 3.0, zero_tol: float = 1e-12) -> dict:
    """Residuals at spacings delta and delta/2; machine-zero at both counts as exact."""
    coarse = maxwell_residuals(ev, pts, delta)
    fine = maxwell_residuals(ev, pts, delta / 2)
    out = {}
    for key in ("faraday", "gauss_B", "gauss_D", "ampere"):
        a, b = coarse[key], fine[key]
        exact = a <= zero_tol and b <= zero_tol
        ratio = a / b if b > 0 else math.inf
        out[key] = {"coarse": a, "fine": b, "ratio": ratio, "exact": exact,
                    "ok": exact or ratio >= min_ratio}
    return out


# -- report and suite -------------------------------------------------------

@dataclass
class ResidualReport:
    profile_residual: float
    per_mode: dict
    maxwell_residuals: dict
    energy_identity_defect: float
    decay: dict
    smoothness: dict
    extra: dict = field(default_factory=dict)

    def values_ok(self) -> bool:
        """All numeric entries finite and nonnegative."""
        vals = [self.profile_residual, self.energy_identity_defect, *self.per_mode.values(),
                *self.decay.values()]
        for v in self.maxwell_residuals.values():
            vals.extend(x for k, x in v.items() if k in ("coarse", "fine"))
        return all(math.isfinite(v) and v >= 0 for v in vals)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_mode"] = {str(k): v for k, v in self.per_mode.items()}
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_json_default, **kw)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def default_delta(problem: Problem) -> float:
    """Stencil spacing resolving both the grid and the highest harmonic."""
    return min(problem.grid.h, problem.spec.T / (8 * problem.K))


def residual_report(u: Field, problem: Problem, pair: ProfilePair | None = None,
                    delta: float | None = None) -> ResidualReport:
    pair = pair or profile_from_u(u, problem)
    pr = profile_residual(u, problem, pair)
    q = h_inner_product(u, u, problem)
    ev = FieldEvaluator(pair, problem)
    mx = maxwell_refinement(ev, sample_points(problem), delta or default_delta(problem))
    e = energy(u, problem)
    extra = {"truncation": pr["truncation"], "relative_profile_residual": pr["relative"]}
    if "w_equation" in pr:
        extra["w_equation"] = pr["w_equation"]
    return ResidualReport(
        profile_residual=pr["absolute"], per_mode=pr["per_mode"], maxwell_residuals=mx,
        energy_identity_defect=abs(e.total - 0.25 * q), decay=decay_probe(u),
        smoothness=smoothness_probe(u, problem), extra=extra,
    )


def _verdict(ok, value=None, threshold=None, status=None, message=""):
    st = status or (PASS if ok else FAIL)
    return {"status": st, "value": value, "threshold": threshold, "message": message}


def invariant_suite(artifacts: dict) -> dict:
    """Verdict matrix over the invariants that apply to the given artifacts.

    Recognised keys: ``problem`` and ``u`` (or ``field_path``), ``tol_grad``,
    ``pair``, ``assumptions`` (an AssumptionReport), ``delta``.
    """
    m = {}
    problem: Problem = artifacts["problem"]
    u = artifacts.get("u")
    if "field_path" in artifacts:
        try:
            loaded, _ = load_field(artifacts["field_path"])
            if u is not None and not np.array_equal(loaded.coeffs, u.coeffs):
                m["field_roundtrip"] = _verdict(False, message="loaded field differs from memory")
            else:
                m["field_roundtrip"] = _verdict(True)
            u = loaded if u is None else u
        except BreatherError as exc:
            m["field_roundtrip"] = _verdict(False, message=str(exc))
    if u is None:
        return {"ok": False, "verdicts": m}
    tol = artifacts.get("tol_grad", 1e-9)

    rep = artifacts.get("assumptions")
    if rep is not None:
        for key, v in rep.verdicts.items():
            hard = key in ("A3", "A4")
            st = v.status if hard or v.status != FAIL else INFO
            m[f"assumption_{key}"] = _verdict(None, status=st if st != "not-applicable" else INFO,
                                              message=v.message)

    q = h_inner_product(u, u, problem)
    e = energy(u, problem)
    m["energy_positive"] = _verdict(e.total > 0, e.total, 0.0)
    defect = abs(e.total - 0.25 * q)
    m["energy_identity"] = _verdict(defect <= 10 * tol * q, defect, 10 * tol * q)
    nehari = abs(derivative(u, u, problem))
    m["nehari"] = _verdict(nehari <= 10 * tol * q, nehari, 10 * tol * q)
    g = gradient(u, problem)
    gn = h_norm(g, problem)
    m["gradient"] = _verdict(gn <= 10 * tol * math.sqrt(q), gn, 10 * tol * math.sqrt(q))
    pair = artifacts.get("pair") or profile_from_u(u, problem)
    pr = profile_residual(u, problem, pair)
    m["profile_residual"] = _verdict(pr["relative"] <= 1e-6, pr["relative"], 1e-6)
    comp = residual_gradient_compatible(u, problem)
    m["residual_gradient_compatibility"] = _verdict(comp <= 1e-8, comp, 1e-8)
    tm = tail_mass(u, 0.9)
    m["tail_mass"] = _verdict(tm <= 1e-3, tm, 1e-3)
    sm = smoothness_probe(u, problem)
    m["spectral_tail"] = _verdict(None, sm["tail_ratio"], 1e-4, status=INFO,
                                  message="flat spectrum" if sm["flat_spectrum"] else "")
    if pair.variant == "ii":
        nw = pair.w1.coeffs * problem.nu_k[:, None]
        err = float(np.abs(nw - u.coeffs).max() / max(np.abs(u.coeffs).max(), 1e-300))
        m["variant_ii_consistency"] = _verdict(err <= 1e-10, err, 1e-10)
        we = pr["w_equation"]
        m["w_equation"] = _verdict(we <= 1e-6, we, 1e-6)

    # time antiderivative: d/dt W = w
    w = pair.w
    W = time_antiderivative(w, problem.omega)
    dW = W.with_coeffs(W.coeffs * (1j * problem.omega * np.asarray(W.ks))[:, None])
    err = float(np.abs(dW.coeffs - w.coeffs).max() / max(np.abs(w.coeffs).max(), 1e-300))
    m["antiderivative"] = _verdict(err <= 1e-12, err, 1e-12)

    ev = FieldEvaluator(pair, problem)
    pts = sample_points(problem)
    E, B, D, H = ev(*pts.T)
    scale = max(float(np.abs(E).max()), 1e-300)
    if problem.grid.geometry == "slab":
        te = float(max(np.abs(E[:, 0]).max(), np.abs(E[:, 2]).max())) / scale
    else:
        te = float(np.abs(E[:, 0] * pts[:, 0] + E[:, 1] * pts[:, 1]).max()) / scale
    m["te_structure"] = _verdict(te <= 1e-12, te, 1e-12)
    spec = problem.spec
    shift = ev(pts[:, 0], pts[:, 1], pts[:, 2] + spec.c * spec.T, pts[:, 3] + spec.T)
    per = max(float(np.abs(a - b).max()) / max(float(np.abs(a).max()), 1e-300)
              for a, b in zip((E, B, D, H), shift) if np.abs(a).max() > 0)
    m["periodicity"] = _verdict(per <= 1e-10, per, 1e-10)
    mx = maxwell_refinement(ev, pts, artifacts.get("delta") or default_delta(problem))
    for key in ("faraday", "gauss_B", "gauss_D"):
        v = mx[key]
        m[f"maxwell_{key}"] = _verdict(v["ok"], v["ratio"], 3.0, message="exact" if v["exact"] else "")
    m["maxwell_ampere"] = _verdict(None, mx["ampere"]["fine"], None, status=INFO)
    ok = all(v["status"] != FAIL for v in m.values())
    return {"ok": ok, "verdicts": m}


__all__ = [
    "mode_residuals", "profile_residual", "truncation_defect", "w_equation_residual",
    "residual_gradient_compatible", "smoothness_probe", "decay_probe", "embedding_exponent",
    "embedding_constant", "embedding_diagnostic", "sample_points", "maxwell_residuals",
    "maxwell_refinement", "ResidualReport", "residual_report", "invariant_suite",
]
