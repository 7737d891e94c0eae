"""Mode-resolved real fields u(x, t) = sum_k u_k(x) exp(i k omega t).

Only k >= 0 is stored; u_{-k} = conj(u_k) keeps u real.  Every sum over
the full index set therefore counts a stored k > 0 twice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AliasRisk, DiscretizationError, ModeMismatch
from .grid import ModeSet, SpaceGrid, TimeGrid


@dataclass(frozen=True, eq=False)
class Field:
    grid: SpaceGrid
    ks: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        if any(k < 0 for k in ks) or list(ks) != sorted(set(ks)):
            raise DiscretizationError("mode indices must be distinct, sorted and nonnegative")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (len(ks), self.grid.size):
            raise DiscretizationError(f"coefficient shape {c.shape} != {(len(ks), self.grid.size)}")
        if 0 in ks:
            c[ks.index(0)] = c[ks.index(0)].real
        if self.grid.geometry == "cylindrical":
            for i, k in enumerate(ks):
                if k % 2 == 0 and np.any(c[i] != 0):
                    raise DiscretizationError(f"cylindrical field has nonzero even mode k={k}")
        c.setflags(write=False)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: SpaceGrid, ks) -> "Field":
        ks = tuple(ks.regular) if isinstance(ks, ModeSet) else tuple(ks)
        return cls(grid, ks, np.zeros((len(ks), grid.size), dtype=complex))

    @classmethod
    def single_mode(cls, grid, ks, k, profile) -> "Field":
        """Field whose only nonzero coefficient is u_k = profile."""
        f = cls.zeros(grid, ks)
        c = f.coeffs.copy()
        c[f.ks.index(k)] = profile
        return f.with_coeffs(c)

    def with_coeffs(self, coeffs) -> "Field":
        return Field(self.grid, self.ks, coeffs)

    def mode(self, k: int) -> np.ndarray:
        return self.coeffs[self.ks.index(abs(int(k)))]

    @property
    def multiplicity(self) -> np.ndarray:
        """1 for k = 0, 2 for k > 0 (the implied -k partner)."""
        return np.where(np.asarray(self.ks) == 0, 1.0, 2.0)

    def _check(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid or other.ks != self.ks:
            raise ModeMismatch("fields live on different grids or mode sets")
        return None

    def __add__(self, other):
        bad = self._check(other)
        return bad if bad is not None else self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        bad = self._check(other)
        return bad if bad is not None else self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, s):
        return self.with_coeffs(self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __truediv__(self, s):
        return self.with_coeffs(self.coeffs / float(s))

    def l2_norm_sq(self) -> float:
        """Integral of u^2 over grid x torus (normalized time measure)."""
        w = self.grid.weights
        return float(np.sum(self.multiplicity[:, None] * w[None, :] * np.abs(self.coeffs) ** 2))

    def max_k(self) -> int:
        return self.ks[-1] if self.ks else 0

    def active_modes(self, rtol: float = 1e-12) -> tuple:
        amp = np.max(np.abs(self.coeffs), axis=1) if self.ks else np.zeros(0)
        if amp.size == 0 or amp.max() == 0:
            return ()
        return tuple(k for k, a in zip(self.ks, amp) if a > rtol * amp.max())


def project_regular(u: Field, modes: ModeSet) -> Field:
    """Keep only regular modes; output is indexed by the regular set."""
    out = np.zeros((len(modes), u.grid.size), dtype=complex)
    for i, k in enumerate(modes.regular):
        if k in u.ks:
            out[i] = u.mode(k)
    return Field(u.grid, modes.regular, out)


def project_singular(u: Field, modes: ModeSet) -> Field:
    keep = [i for i, k in enumerate(u.ks) if k not in modes.regular]
    return Field(u.grid, tuple(u.ks[i] for i in keep), u.coeffs[keep])


def fractional_time_derivative(u: Field, s: float, omega: float) -> Field:
    """Fourier multiplier |omega k|^s."""
    ks = np.asarray(u.ks, dtype=float)
    if s < 0 and np.any(ks == 0):
        raise DiscretizationError("negative-order derivative needs a zero-mean field")
    mult = np.abs(omega * ks) ** s if s != 0 else np.ones_like(ks)
    return u.with_coeffs(u.coeffs * mult[:, None])


def time_synthesis(u: Field, tg: TimeGrid, cubic_safe: bool = False) -> np.ndarray:
    """Samples u(x_j, t_m) as an array of shape (M, grid.size)."""
    kmax = u.max_k()
    if cubic_safe:
        tg.check_cubic(kmax)
    if 2 * kmax + 1 > tg.M:
        raise AliasRisk(f"M={tg.M} cannot represent harmonics up to k={kmax}")
    spec = np.zeros((tg.M // 2 + 1, u.grid.size), dtype=complex)
    spec[list(u.ks)] = u.coeffs
    return np.fft.irfft(spec, n=tg.M, axis=0) * tg.M


def analyze(samples: np.ndarray, ks) -> np.ndarray:
    """Coefficients (1/M) sum_m f(t_m) exp(-i k omega t_m) for the listed k."""
    samples = np.asarray(samples, dtype=float)
    M = samples.shape[0]
    ks = list(ks)
    if ks and max(ks) > M // 2:
        raise AliasRisk(f"M={M} samples cannot resolve k={max(ks)}")
    return np.fft.rfft(samples, axis=0)[ks] / M


def time_analysis(samples: np.ndarray, grid: SpaceGrid, ks) -> Field:
    ks = tuple(ks.regular) if isinstance(ks, ModeSet) else tuple(ks)
    return Field(grid, ks, analyze(samples, ks))


def spacetime_integral(samples: np.ndarray, grid: SpaceGrid) -> float:
    """Quadrature of f over grid x torus; the time measure has mass 1."""
    return float(np.mean(samples, axis=0) @ grid.weights)


def tail_mass(u: Field, fraction: float) -> float:
    """Share of the L^2 mass sitting where |x| (or r) exceeds ``fraction`` of the extent."""
    total = u.l2_norm_sq()
    if total == 0:
        return 0.0
    outer = np.abs(u.grid.x) > fraction * u.grid.extent
    w = u.grid.weights * outer
    part = float(np.sum(u.multiplicity[:, None] * w[None, :] * np.abs(u.coeffs) ** 2))
    return part / total
