"""Retardation kernels reduced to the torus.

A kernel is carried around only through its real Fourier coefficients
F_k, k = 0..K; negative indices are implied by evenness.  Coefficients
follow the normalization F_k[delta_0] = 1 and
F_k[f dtau] = (1/T) int_0^T f(tau) exp(-i k omega tau) dtau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..discretization.grid import ModeSet
from ..errors import EmptyRegularSet, KernelError, NonFiniteMeasure

ZERO_TOL = 1e-14

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class TorusMeasure:
    period: float
    coeffs: np.ndarray
    provenance: str = "user-table"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise KernelError("coefficient sequence must be a non-empty 1d array")
        if not np.all(np.isfinite(c)):
            raise NonFiniteMeasure("kernel coefficients must be finite")
        if not self.period > 0:
            raise KernelError("period must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    def coeff(self, k):
        """F_k for integer (or array of integer) k, using F_{-k} = F_k."""
        k = np.abs(np.asarray(k, dtype=int))
        if np.any(k > self.K):
            raise KernelError(f"kernel known only for |k| <= {self.K}")
        out = self.coeffs[k]
        return float(out) if out.ndim == 0 else out

    def full(self) -> np.ndarray:
        """Coefficients for k = -K..K."""
        return np.concatenate([self.coeffs[:0:-1], self.coeffs])

    def restrict(self, n: int) -> "TorusMeasure":
        """Kernel seen by T/n-periodic functions: F'_k = F_{nk}."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return TorusMeasure(self.period / n, self.coeffs[::n], self.provenance)

    def scaled(self, s: float) -> "TorusMeasure":
        return TorusMeasure(self.period, s * self.coeffs, self.provenance)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


@dataclass
class LineMeasure:
    """Finite measure on the real line: point masses plus a density.

    ``density`` must be supported in ``support``; ``breakpoints`` lists
    interior points where it is not smooth (panels are split there).
    """

    atoms: Sequence[tuple[float, float]] = ()
    density: Callable[[np.ndarray], np.ndarray] | None = None
    support: tuple[float, float] | None = None
    breakpoints: Sequence[float] = field(default_factory=tuple)


def delta(T: float, K: int) -> TorusMeasure:
    return TorusMeasure(T, np.ones(K + 1), "closed-form")


def builtin_nu_truncated_sine(T: float, K: int) -> TorusMeasure:
    """Coefficients of (2 - |sin(omega tau)|) on [0, T], in closed form."""
    if not T > 0:
        raise KernelError("period must be positive")
    k = np.arange(K + 1)
    c = np.zeros(K + 1)
    c[0] = 2 - 2 / math.pi
    even = (k % 2 == 0) & (k > 0)
    c[even] = 2 / (math.pi * (k[even] ** 2 - 1))
    return TorusMeasure(T, c, "closed-form")


def from_fourier_table(pairs, T: float, K: int | None = None) -> TorusMeasure:
    """Build from ``[k, value]`` pairs; unlisted modes are zero."""
    pairs = [(int(k), float(v)) for k, v in pairs]
    kmax = max(abs(k) for k, _ in pairs)
    K = kmax if K is None else K
    c = np.zeros(K + 1)
    seen = {}
    for k, v in pairs:
        if abs(k) in seen and seen[abs(k)] != v:
            raise KernelError(f"table gives different values for k={k} and k={-k}")
        seen[abs(k)] = v
        if abs(k) <= K:
            c[abs(k)] = v
    return TorusMeasure(T, c, "user-table")


def _panel_edges(a, b, breakpoints, max_len):
    pts = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    edges = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        n = max(1, math.ceil((hi - lo) / max_len))
        edges.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(edges)


def _gl_coefficients(f, edges, T, K):
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    tau = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL_NODES[None, :]
    wts = half[:, None] * _GL_WEIGHTS[None, :]
    tau, wts = tau.ravel(), wts.ravel()
    with np.errstate(all="ignore"):
        vals = np.asarray(f(tau), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteMeasure("density is not finite on its support")
    omega = 2 * math.pi / T
    k = np.arange(K + 1)
    phase = np.exp(-1j * omega * np.outer(k, tau))
    return phase @ (vals * wts) / T


def periodic_reduce(measure: LineMeasure, T: float, K: int, rtol: float = 1e-13,
                    max_refine: int = 10) -> TorusMeasure:
    """Fourier coefficients of the push-forward of ``measure`` to R/TZ.

    Densities are integrated by composite 16-point Gauss-Legendre with
    panels no longer than one period of the highest mode; the panel
    count is doubled until two successive results agree.
    """
    if K < 1:
        raise KernelError("K_kernel must be >= 1")
    if not T > 0:
        raise KernelError("period must be positive")
    omega = 2 * math.pi / T
    k = np.arange(K + 1)
    total = np.zeros(K + 1, dtype=complex)
    variation = 0.0
    for tau, mass in measure.atoms:
        if not (math.isfinite(tau) and math.isfinite(mass)):
            raise NonFiniteMeasure("atoms must have finite position and mass")
        total += mass * np.exp(-1j * omega * k * tau)
        variation += abs(mass)

    if measure.density is not None:
        if measure.support is None:
            raise KernelError("a density needs a finite support interval")
        a, b = map(float, measure.support)
        if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
            raise NonFiniteMeasure("density support must be a finite interval")
        max_len = min(T / max(K, 1), b - a)
        prev = _gl_coefficients(measure.density, _panel_edges(a, b, measure.breakpoints, max_len), T, K)
        for _ in range(max_refine):
            max_len /= 2
            cur = _gl_coefficients(measure.density, _panel_edges(a, b, measure.breakpoints, max_len), T, K)
            err = np.max(np.abs(cur - prev))
            prev = cur
            if err <= rtol * max(1.0, np.max(np.abs(cur))):
                break
        else:
            raise NonFiniteMeasure("density quadrature did not converge")
        total += prev
        variation += abs(prev[0])

    if not np.all(np.isfinite(total)):
        raise NonFiniteMeasure("measure has infinite total variation")
    scale = max(1.0, variation)
    if np.max(np.abs(total.imag)) > 1e-9 * scale:
        raise KernelError("kernel is not even in time (complex Fourier coefficients)")
    return TorusMeasure(T, total.real, "closed-form" if measure.density is None else "quadrature")


def density_table(samples, support=None) -> LineMeasure:
    """Piecewise-linear density through ``[tau, value]`` samples."""
    arr = np.asarray(samples, dtype=float)
    tau, val = arr[:, 0], arr[:, 1]
    if np.any(np.diff(tau) <= 0):
        raise KernelError("density table abscissae must be increasing")
    lo, hi = (tau[0], tau[-1]) if support is None else support

    def f(t):
        return np.interp(t, tau, val, left=0.0, right=0.0)

    return LineMeasure(density=f, support=(lo, hi), breakpoints=tuple(tau[1:-1]))


def regular_set(nu: TorusMeasure, K: int, zero_tol: float = ZERO_TOL,
                geometry: str = "slab") -> ModeSet:
    """Positive indices k <= K with non-negligible F_k[nu].

    For cylindrical geometry only odd k are admissible.
    """
    if K < 1:
        raise KernelError("K must be >= 1")
    scale = np.max(np.abs(nu.coeffs)) if nu.coeffs.size else 0.0
    ks = [k for k in range(1, K + 1)
          if abs(nu.coeff(k)) > zero_tol * scale
          and (geometry != "cylindrical" or k % 2 == 1)]
    if not ks:
        raise EmptyRegularSet(f"no regular modes with 1 <= k <= {K} ({geometry})")
    return ModeSet(K=K, regular=tuple(ks), geometry=geometry)
