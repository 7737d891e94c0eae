"""Physical profile w from the surrogate u, and the traveling EM fields.

Units follow eps0 = mu0 = c0 = 1; conversion factors are carried as
metadata only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .discretization import Field, Problem, TimeGrid, time_synthesis
from .discretization.field import analyze

EPS0 = 1.0
MU0 = 1.0


@dataclass(frozen=True, eq=False)
class ProfilePair:
    w1: Field
    w2: Field
    variant: str

    @property
    def w(self) -> Field:
        ks = tuple(sorted(set(self.w1.ks) | set(self.w2.ks)))
        c = np.zeros((len(ks), self.w1.grid.size), dtype=complex)
        for part in (self.w1, self.w2):
            for i, k in enumerate(part.ks):
                c[ks.index(k)] += part.coeffs[i]
        return Field(self.w1.grid, ks, c)


def singular_modes(problem: Problem, K_sing: int) -> tuple:
    """Positive singular harmonics up to K_sing (odd only on cylinders)."""
    nu = problem.spec.nu
    scale = np.max(np.abs(nu.coeffs))
    out = []
    for k in range(1, K_sing + 1):
        if problem.grid.geometry == "cylindrical" and k % 2 == 0:
            continue
        if abs(nu.coeff(k)) <= 1e-14 * scale:
            out.append(k)
    return tuple(out)


def cubic_modes(u: Field, problem: Problem, ks, weight=None) -> np.ndarray:
    """Coefficients of weight(x) * u^3 at the listed harmonics, computed alias-free."""
    kmax = max([u.max_k(), *ks]) if ks else u.max_k()
    M = max(problem.tg.M, 3 * u.max_k() + kmax + 1, 2 * kmax + 1)
    s = time_synthesis(u, TimeGrid(M))
    f = s**3 if weight is None else weight * s**3
    return analyze(f, ks)


def profile_from_u(u: Field, problem: Problem, K_sing: int | None = None) -> ProfilePair:
    """w = u for variant (i); w = w1 + w2 for variant (ii).

    Variant (ii): w1_k = u_k / F_k[nu] on the regular set, and each singular
    harmonic solves A_k w2_k = omega^2 k^2 (h u^3)_k.
    """
    spec = problem.spec
    grid = problem.grid
    empty = Field(grid, (), np.zeros((0, grid.size), dtype=complex))
    if spec.variant == "i":
        return ProfilePair(u, empty, "i")
    w1 = u.with_coeffs(u.coeffs / problem.nu_k[:, None])
    K_sing = 3 * problem.K if K_sing is None else K_sing
    ks = singular_modes(problem, K_sing)
    if not ks:
        return ProfilePair(w1, empty, "ii")
    rhs = cubic_modes(u, problem, ks, weight=problem.h)
    V = spec.V(grid.x, ks)
    out = np.empty((len(ks), grid.size), dtype=complex)
    for i, k in enumerate(ks):
        op = problem.operator(k, V[i])
        out[i] = op.solve((problem.omega * k) ** 2 * rhs[i])
    return ProfilePair(w1, Field(grid, ks, out), "ii")


def time_antiderivative(w: Field, omega: float) -> Field:
    """W with dW/dt = w: W_k = w_k / (i omega k)."""
    ks = np.asarray(w.ks, dtype=float)
    if np.any(ks == 0):
        raise ValueError("time antiderivative needs a zero-mean field")
    return w.with_coeffs(w.coeffs / (1j * omega * ks[:, None]))


class _ModeSpline:
    """Cubic-spline interpolation of complex mode profiles in x (or r)."""

    def __init__(self, f: Field):
        grid = f.grid
        if grid.geometry == "slab":
            xs = np.concatenate([[-grid.extent], grid.x, [grid.extent]])
            data = np.pad(f.coeffs, ((0, 0), (1, 1)))
        else:
            xs = np.concatenate([[0.0], grid.x, [grid.x[-1] + grid.h]])
            data = np.pad(f.coeffs, ((0, 0), (1, 1)))
        self.lo, self.hi = xs[0], xs[-1]
        Y = np.concatenate([data.real, data.imag]).T
        self.n = len(f.ks)
        self.spline = CubicSpline(xs, Y, axis=0, bc_type="not-a-knot")

    def __call__(self, x, nu=0):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        Y = self.spline(np.clip(x, self.lo, self.hi), nu) * inside[..., None]
        return Y[..., : self.n] + 1j * Y[..., self.n:]


def _series(coeffs, ks, omega, s):
    """sum_k mult_k Re[c_k exp(i k omega s)]; coeffs has shape (..., nk)."""
    ks = np.asarray(ks, dtype=float)
    mult = np.where(ks == 0, 1.0, 2.0)
    ph = np.exp(1j * omega * s[..., None] * ks)
    return np.real(np.sum(mult * coeffs * ph, axis=-1))


@dataclass
class EMFieldSet:
    lattice: dict
    E: np.ndarray
    B: np.ndarray
    D: np.ndarray
    H: np.ndarray
    meta: dict = field(default_factory=dict)

    def components(self) -> dict:
        out = {}
        for name in ("E", "B", "D", "H"):
            arr = getattr(self, name)
            for i, ax in enumerate("xyz"):
                out[f"{name}_{ax}"] = arr[..., i]
        return out


class FieldEvaluator:
    """Evaluates E, B, D, H at arbitrary space-time points."""

    def __init__(self, pair: ProfilePair, problem: Problem):
        self.problem = problem
        self.spec = problem.spec
        self.geometry = problem.grid.geometry
        self.c = self.spec.c
        self.omega = self.spec.omega
        self.pair = pair
        self.w = pair.w
        self.ks = np.asarray(self.w.ks)
        self.W = time_antiderivative(self.w, self.omega)
        self.spl_w = _ModeSpline(self.w)
        self.spl_W = _ModeSpline(self.W)
        # N(w) = nu * w^3 in variant (i); (nu * w)^3 = u^3 in variant (ii)
        src = self.w if pair.variant == "i" else pair.w1.with_coeffs(pair.w1.coeffs * problem.nu_k[:, None])
        self.spl_src = _ModeSpline(src)
        self.src_ks = np.asarray(src.ks)
        ksrc = int(self.src_ks.max())
        self.kN = np.arange(3 * ksrc + 1)
        self.nu_N = self.spec.nu.coeff(self.kN) if pair.variant == "i" else np.ones(self.kN.size)
        self.Mfine = 6 * ksrc + 2

    def _nonlinear_modes(self, rho):
        phases = 2 * np.pi * np.arange(self.Mfine) / self.Mfine
        src = self.spl_src(rho)
        mult = np.where(self.src_ks == 0, 1.0, 2.0)
        samples = np.real((mult * src) @ np.exp(1j * np.outer(self.src_ks, phases)))
        return np.fft.rfft(samples**3, axis=-1)[..., self.kN] / self.Mfine * self.nu_N

    def mode_profiles(self, rho):
        """Per-harmonic coefficients of w, W, dW/drho, G*w and N(w) at positions rho (1d)."""
        wk = self.spl_w(rho)
        G = self.spec.linear.coefficients(rho, self.ks).T
        return {"w": wk, "W": self.spl_W(rho), "Wx": self.spl_W(rho, 1), "Gw": G * wk,
                "N": self._nonlinear_modes(rho), "h": self.spec.h(rho)}

    def profiles(self, rho, s):
        """w, W, W_rho and the D profile at (rho, s), s = t - z/c."""
        rho = np.asarray(rho, dtype=float)
        s = np.asarray(s, dtype=float)
        uniq, inv = np.unique(rho.ravel(), return_inverse=True)
        m = self.mode_profiles(uniq)
        s_flat = s.ravel()
        w = _series(m["w"][inv], self.ks, self.omega, s_flat)
        W = _series(m["W"][inv], self.ks, self.omega, s_flat)
        Wx = _series(m["Wx"][inv], self.ks, self.omega, s_flat)
        Gw = _series(m["Gw"][inv], self.ks, self.omega, s_flat)
        N = _series(m["N"][inv], self.kN, self.omega, s_flat)
        Dp = EPS0 * (w + Gw + m["h"][inv] * N)
        shape = rho.shape
        return w.reshape(shape), W.reshape(shape), Wx.reshape(shape), Dp.reshape(shape)

    def __call__(self, x, y, z, t):
        x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
        s = t - z / self.c
        zero = np.zeros_like(x)
        if self.geometry == "slab":
            w, W, Wx, Dp = self.profiles(x, s)
            E = np.stack([zero, w, zero], axis=-1)
            B = -np.stack([w / self.c, zero, Wx], axis=-1)
            D = np.stack([zero, Dp, zero], axis=-1)
        else:
            r = np.hypot(x, y)
            w, W, Wr, Dp = self.profiles(r, s)
            with np.errstate(invalid="ignore", divide="ignore"):
                ex, ey = np.where(r > 0, -y / r, 0.0), np.where(r > 0, x / r, 0.0)
                rx, ry = np.where(r > 0, x / r, 0.0), np.where(r > 0, y / r, 0.0)
                W_over_r = np.where(r > 0, W / r, 0.0)
            E = np.stack([w * ex, w * ey, zero], axis=-1)
            B = np.stack([-(w / self.c) * rx, -(w / self.c) * ry, -(W_over_r + Wr)], axis=-1)
            D = np.stack([Dp * ex, Dp * ey, zero], axis=-1)
        return E, B, D, B / MU0


def default_lattice(problem: Problem, nx: int = 64, nz: int = 16, nt: int = 16) -> dict:
    spec = problem.spec
    ext = problem.grid.extent
    if problem.grid.geometry == "slab":
        xs = np.linspace(-ext, ext, nx + 1)[1:-1]
        return {"x": xs, "y": np.array([0.0]), "z": spec.c * spec.T * np.arange(nz) / nz,
                "t": spec.T * np.arange(nt) / nt}
    xs = (np.arange(nx) - nx / 2 + 0.5) * (2 * ext / nx)
    return {"x": xs, "y": xs.copy(), "z": spec.c * spec.T * np.arange(nz) / nz,
            "t": spec.T * np.arange(nt) / nt}


def _assemble(pair, problem, lattice) -> EMFieldSet:
    ev = FieldEvaluator(pair, problem)
    X, Y, Z, Tt = np.meshgrid(lattice["x"], lattice["y"], lattice["z"], lattice["t"], indexing="ij")
    E, B, D, H = ev(X, Y, Z, Tt)
    meta = {"eps0": EPS0, "mu0": MU0, "c0": 1.0, "c": problem.spec.c, "T": problem.spec.T,
            "geometry": problem.grid.geometry, "variant": pair.variant,
            "si_conversion": {"E": "multiply by E_ref", "B": "multiply by E_ref / c0_SI",
                              "D": "multiply by eps0_SI * E_ref", "H": "multiply by E_ref / (mu0_SI c0_SI)"}}
    return EMFieldSet(lattice, E, B, D, H, meta)


def assemble_fields_slab(pair: ProfilePair, problem: Problem, lattice: dict | None = None) -> EMFieldSet:
    if problem.grid.geometry != "slab":
        raise ValueError("slab assembly on a cylindrical problem")
    return _assemble(pair, problem, lattice or default_lattice(problem))


def assemble_fields_cylindrical(pair: ProfilePair, problem: Problem, lattice: dict | None = None) -> EMFieldSet:
    if problem.grid.geometry != "cylindrical":
        raise ValueError("cylindrical assembly on a slab problem")
    return _assemble(pair, problem, lattice or default_lattice(problem, nx=32, nz=8, nt=8))


def assemble_fields(pair, problem, lattice=None) -> EMFieldSet:
    if problem.grid.geometry == "slab":
        return assemble_fields_slab(pair, problem, lattice)
    return assemble_fields_cylindrical(pair, problem, lattice)


def write_fields_csv(fs: EMFieldSet, path) -> None:
    X, Y, Z, Tt = np.meshgrid(fs.lattice["x"], fs.lattice["y"], fs.lattice["z"], fs.lattice["t"],
                              indexing="ij")
    comps = fs.components()
    cols = {"x": X, "y": Y, "z": Z, "t": Tt, **comps}
    header = ",".join(cols)
    data = np.column_stack([v.ravel() for v in cols.values()])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


__all__ = [
    "ProfilePair", "EMFieldSet", "FieldEvaluator", "profile_from_u", "time_antiderivative",
    "assemble_fields_slab", "assemble_fields_cylindrical", "assemble_fields", "default_lattice",
    "write_fields_csv", "singular_modes", "cubic_modes", "EPS0", "MU0",
]
