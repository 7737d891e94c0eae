"""Machine-checkable versions of the admissibility assumptions A3-A6."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .material import MaterialSpec

PASS, FAIL, NA = "pass", "fail", "not-applicable"
ALPHA_STAR = {"slab": 1.0, "cylindrical": 1.5}


@dataclass
class Verdict:
    status: str
    message: str = ""
    witness: dict = field(default_factory=dict)

    def to_dict(self):
        return {"status": self.status, "message": self.message, "witness": self.witness}


@dataclass
class AssumptionReport:
    verdicts: dict

    def __getitem__(self, key) -> Verdict:
        return self.verdicts[key]

    @property
    def ok(self) -> bool:
        return all(v.status != FAIL for v in self.verdicts.values())

    @property
    def hard_ok(self) -> bool:
        """A3 and A4: the discrete problem is well posed and elliptic."""
        return all(self.verdicts[k].status != FAIL for k in ("A3", "A4"))

    def failures(self):
        return {k: v for k, v in self.verdicts.items() if v.status == FAIL}

    def to_dict(self):
        return {k: v.to_dict() for k, v in self.verdicts.items()}


def default_samples(geometry: str, extent: float = 50.0, n: int = 2001) -> np.ndarray:
    if geometry == "slab":
        return np.linspace(-extent, extent, n)
    return np.linspace(extent / n, extent, n)


def _check_a3(spec, x, K):
    G = spec.linear.coefficients(x, np.arange(K + 1))
    h = spec.h(x)
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
        return Verdict(FAIL, "kernel or h not finite", {})
    hmax = float(np.max(h))
    if hmax <= 0:
        j = int(np.argmax(h))
        return Verdict(FAIL, "h <= 0 everywhere", {"x": float(x[j]), "value": hmax})
    return Verdict(PASS, "", {"sup_G": float(np.max(np.abs(G))), "sup_h": float(np.max(np.abs(h))),
                              "max_h": hmax})


def _check_a4(spec, x, K):
    ks = np.arange(K + 1)
    margin = spec.V(x, ks)
    i, j = np.unravel_index(np.argmin(margin), margin.shape)
    m = float(margin[i, j])
    w = {"k": int(ks[i]), "x": float(x[j]), "margin": m,
         "max_margin": float(np.max(margin))}
    if m <= 0:
        return Verdict(FAIL, f"1/c^2 - 1 - F_k[G(x)] = {m:.6g} <= 0", w)
    return Verdict(PASS, "", w)


def _check_a5(spec, modes_k, alpha_star):
    nu = spec.nu
    ks = np.asarray(modes_k, dtype=float)
    F = nu.coeff(np.asarray(modes_k, dtype=int))
    if np.any(F <= 0):
        j = int(np.argmin(F))
        return Verdict(FAIL, "nonlinear kernel coefficient not positive on the regular set",
                       {"k": int(ks[j]), "value": float(F[j])})
    a, b = spec.alpha, spec.beta
    # least squares in log-log: the fitted constant is the geometric mean
    upper = np.log(F) + a * np.log(ks)
    lower = -b * np.log(ks) - np.log(F)
    C2, C1 = float(np.exp(upper.mean())), float(np.exp(lower.mean()))
    dev2, dev1 = float(np.exp(upper.max())), float(np.exp(lower.max()))
    slope = float(np.polyfit(np.log(ks), np.log(F), 1)[0]) if ks.size > 1 else float("nan")
    w = {"C_upper": C2, "C_lower": C1, "max_upper": dev2, "max_lower": dev1,
         "fitted_exponent": slope, "alpha": a, "beta": b, "alpha_star": alpha_star}
    if not a > alpha_star:
        return Verdict(FAIL, f"alpha = {a} must exceed {alpha_star}", w)
    if dev2 > 10 * C2:
        k = int(ks[np.argmax(upper)])
        return Verdict(FAIL, f"F_k[nu] <= C |k|^-alpha violated at k={k}", {**w, "k": k})
    if dev1 > 10 * C1:
        k = int(ks[np.argmax(lower)])
        return Verdict(FAIL, f"|k|^-beta <= C F_k[nu] violated at k={k}", {**w, "k": k})
    return Verdict(PASS, "", w)


def _decays(p, x, tol):
    vals = np.abs(p(x))
    outer = np.abs(x) >= 0.9 * np.max(np.abs(x))
    peak = max(float(np.max(vals)), 1e-300)
    return float(np.max(vals[outer])) <= tol * peak or float(np.max(vals)) == 0.0, float(np.max(vals[outer]))


def _periodic(p, x, X, tol=1e-9):
    inner = x[(x + X) <= x.max()]
    return np.allclose(p(inner), p(inner + X), rtol=tol, atol=tol)


def _check_a6(spec, x, K, decay_tol):
    if spec.geometry != "slab":
        return Verdict(NA, "cylindrical geometry")
    ks = np.arange(K + 1)
    if spec.has_split:
        Gloc = spec.linear.coefficients(x, ks, part="loc")
        if np.any(Gloc < 0):
            i, j = np.unravel_index(np.argmin(Gloc), Gloc.shape)
            return Verdict(FAIL, "G^loc(x) not positive definite",
                           {"k": int(ks[i]), "x": float(x[j]), "value": float(Gloc[i, j])})
        hloc = spec.h_loc(x)
        if np.any(hloc < 0):
            j = int(np.argmin(hloc))
            return Verdict(FAIL, "h^loc < 0", {"x": float(x[j]), "value": float(hloc[j])})
        hper = spec.h_per(x)
        if np.max(hper) <= 0:
            return Verdict(FAIL, "h^per <= 0 everywhere", {"x": float(x[0]), "value": float(np.max(hper))})
        ok_h, tail_h = _decays(spec.h_loc, x, decay_tol)
        gl = np.abs(Gloc).max(axis=0)
        outer = np.abs(x) >= 0.9 * np.max(np.abs(x))
        ok_g = float(gl[outer].max()) <= decay_tol * max(float(gl.max()), 1e-300) or gl.max() == 0
        if not (ok_h and ok_g):
            return Verdict(FAIL, "local parts do not decay", {"x": float(x[-1]), "h_loc_tail": tail_h,
                                                               "G_loc_tail": float(gl[outer].max())})
        X = spec.meta.get("period_X")
        if X is not None:
            Gper = spec.linear.select("per")
            for t in Gper.terms:
                if not _periodic(t.amplitude, x, X):
                    return Verdict(FAIL, "G^per is not X-periodic", {"x": float(x[0]), "X": X})
            if not _periodic(spec.h_per, x, X):
                return Verdict(FAIL, "h^per is not X-periodic", {"x": float(x[0]), "X": X})
        return Verdict(PASS, "A6b", {"h_loc_tail": tail_h})
    ok, tail = _decays(spec.h, x, decay_tol)
    if ok:
        return Verdict(PASS, "A6a", {"h_tail": tail})
    return Verdict(FAIL, "h does not decay and no periodic/local split given",
                   {"x": float(x[-1]), "value": tail})


def validate_assumptions(spec: MaterialSpec, K: int, x=None, modes=None,
                         decay_tol: float = 1e-3) -> AssumptionReport:
    """Check A3-A6 on the sample locations ``x`` and harmonics |k| <= K.

    Failures are verdicts with a witness, never exceptions.
    """
    from .measure import regular_set
    from ..errors import EmptyRegularSet

    x = default_samples(spec.geometry) if x is None else np.asarray(x, dtype=float)
    v = {"A3": _check_a3(spec, x, K), "A4": _check_a4(spec, x, K)}
    if modes is None:
        try:
            modes = regular_set(spec.nu, K, geometry=spec.geometry).regular
        except EmptyRegularSet as exc:
            modes = None
            v["A5"] = Verdict(FAIL, str(exc), {"k": None, "K": K})
    else:
        modes = getattr(modes, "regular", modes)
    if modes is not None:
        v["A5"] = _check_a5(spec, modes, ALPHA_STAR[spec.geometry])
    v["A6"] = _check_a6(spec, x, K, decay_tol)
    return AssumptionReport(v)
