"""Spatial grids, temporal mode sets and time sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AliasRisk, DiscretizationError

GEOMETRIES = ("slab", "cylindrical")


@dataclass(frozen=True)
class SpaceGrid:
    """Truncated transverse domain with homogeneous boundary values.

    slab: nodes x_j = -L + j dx, j = 0..N, dx = 2L/N; the unknowns live at
    j = 1..N-1 and u vanishes at x = +-L.

    cylindrical: staggered nodes r_j = (j + 1/2) dr, j = 0..N-1,
    dr = R_max/N, with u(0) = 0 implicit and u = 0 at the ghost node
    r_N.  Quadrature uses the measure r dr, written as r^3 dr for u/r: the
    weight of node j is the r^3-volume of its cell divided by r_j^2, which
    differs from r_j dr only at O(dr^3) but keeps the operator consistent
    on the axis cell.
    """

    geometry: str
    N: int
    extent: float

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise DiscretizationError(f"unknown geometry {self.geometry!r}")
        if self.N < 8:
            raise DiscretizationError("need N >= 8")
        if not self.extent > 0:
            raise DiscretizationError("domain extent must be positive")

    @classmethod
    def slab(cls, N: int, L: float) -> "SpaceGrid":
        return cls("slab", int(N), float(L))

    @classmethod
    def cylindrical(cls, N: int, R_max: float) -> "SpaceGrid":
        return cls("cylindrical", int(N), float(R_max))

    @property
    def h(self) -> float:
        if self.geometry == "slab":
            return 2 * self.extent / self.N
        return self.extent / self.N

    @property
    def x(self) -> np.ndarray:
        """Coordinates of the unknowns."""
        if self.geometry == "slab":
            return -self.extent + self.h * np.arange(1, self.N)
        return self.h * (np.arange(self.N) + 0.5)

    @property
    def size(self) -> int:
        return self.N - 1 if self.geometry == "slab" else self.N

    @property
    def weights(self) -> np.ndarray:
        if self.geometry == "slab":
            return np.full(self.size, self.h)
        j = np.arange(self.N, dtype=float)
        cell = ((j + 1) ** 4 - j**4) * self.h**4 / 4
        return cell / self.x**2

    def refined(self, factor: int = 2) -> "SpaceGrid":
        return SpaceGrid(self.geometry, self.N * factor, self.extent)

    def to_dict(self) -> dict:
        key = "L" if self.geometry == "slab" else "R_max"
        return {"geometry": self.geometry, "N": self.N, key: self.extent}


@dataclass(frozen=True)
class ModeSet:
    """Positive regular harmonics; negative ones are implied by reality."""

    K: int
    regular: tuple
    geometry: str = "slab"

    def __post_init__(self):
        ks = tuple(sorted(int(k) for k in self.regular))
        object.__setattr__(self, "regular", ks)
        if not ks:
            raise DiscretizationError("empty mode set")
        if ks[0] < 1 or ks[-1] > self.K:
            raise DiscretizationError("regular modes must satisfy 1 <= k <= K")
        if len(set(ks)) != len(ks):
            raise DiscretizationError("duplicate modes")
        if self.geometry == "cylindrical" and any(k % 2 == 0 for k in ks):
            raise DiscretizationError("cylindrical fields carry odd harmonics only")

    @property
    def ks(self) -> np.ndarray:
        return np.asarray(self.regular, dtype=int)

    @property
    def singular(self) -> tuple:
        """Nonnegative indices in 0..K outside the regular set."""
        return tuple(k for k in range(self.K + 1) if k not in self.regular)

    def index(self, k: int) -> int:
        return self.regular.index(abs(int(k)))

    def __len__(self):
        return len(self.regular)

    def __contains__(self, k):
        return abs(int(k)) in self.regular


@dataclass(frozen=True)
class TimeGrid:
    """M equispaced samples t_m = m T / M on one period."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise DiscretizationError("M must be positive")

    @classmethod
    def for_cubic(cls, K: int, M: int | None = None) -> "TimeGrid":
        M = 4 * K + 1 if M is None else M
        tg = cls(M)
        tg.check_cubic(K)
        return tg

    def cubic_safe(self, K: int) -> bool:
        return self.M >= 4 * K + 1

    def check_cubic(self, K: int):
        if not self.cubic_safe(K):
            raise AliasRisk(f"M={self.M} < 4K+1={4 * K + 1}: cubic products would alias")

    def phases(self) -> np.ndarray:
        """omega * t_m."""
        return 2 * np.pi * np.arange(self.M) / self.M
