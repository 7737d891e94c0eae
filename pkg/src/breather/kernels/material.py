"""Material description: coefficient profiles, linear kernel family, cubic law."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import EmptyRegularSet, KernelError
from .measure import TorusMeasure, delta


class Profile:
    """A real coefficient function of x (or r), evaluated vectorized."""

    period: float | None = None

    def __call__(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return SumProfile((self, other))


@dataclass(frozen=True)
class Constant(Profile):
    value: float

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value))

    def to_dict(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Cosine(Profile):
    """mean + amplitude * cos(2 pi (x - shift) / period)."""

    mean: float
    amplitude: float
    period: float
    shift: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.mean + self.amplitude * np.cos(2 * math.pi * (x - self.shift) / self.period)

    def to_dict(self):
        return {"type": "cosine", "mean": self.mean, "amplitude": self.amplitude,
                "period": self.period, "shift": self.shift}


@dataclass(frozen=True)
class Gaussian(Profile):
    amplitude: float
    width: float
    center: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))

    def to_dict(self):
        return {"type": "gaussian", "amplitude": self.amplitude, "width": self.width,
                "center": self.center}


@dataclass(frozen=True)
class Table(Profile):
    """Piecewise-linear interpolation; constant continuation outside."""

    xs: tuple
    values: tuple

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)

    def to_dict(self):
        return {"type": "table", "x": list(self.xs), "values": list(self.values)}


@dataclass(frozen=True)
class SumProfile(Profile):
    terms: tuple

    def __call__(self, x):
        out = np.zeros(np.shape(x))
        for t in self.terms:
            out = out + t(x)
        return out

    @property
    def period(self):
        ps = {t.period for t in self.terms if not isinstance(t, Constant)}
        return ps.pop() if len(ps) == 1 else None

    def to_dict(self):
        return {"type": "sum", "terms": [t.to_dict() for t in self.terms]}


def profile_from_dict(d) -> Profile:
    if isinstance(d, (int, float)):
        return Constant(float(d))
    kind = d.get("type")
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "cosine":
            return Cosine(float(d["mean"]), float(d["amplitude"]), float(d["period"]),
                          float(d.get("shift", 0.0)))
        if kind == "gaussian":
            return Gaussian(float(d["amplitude"]), float(d["width"]), float(d.get("center", 0.0)))
        if kind == "table":
            return Table(tuple(map(float, d["x"])), tuple(map(float, d["values"])))
        if kind == "sum":
            return SumProfile(tuple(profile_from_dict(t) for t in d["terms"]))
        if kind == "scaled":
            return _Scaled(profile_from_dict(d["base"]), float(d["factor"]))
    except KeyError as exc:
        raise KernelError(f"profile {kind!r} is missing field {exc}") from None
    raise KernelError(f"unknown profile type {kind!r}")


@dataclass(frozen=True)
class KernelTerm:
    """amplitude(x) * measure, tagged as periodic background or local part."""

    amplitude: Profile
    measure: TorusMeasure
    part: str | None = None  # "per", "loc" or None


@dataclass(frozen=True)
class LinearKernelField:
    """x-dependent linear kernel G(x) = sum_i a_i(x) M_i."""

    terms: tuple = ()

    @classmethod
    def instantaneous(cls, g: Profile, T: float, K: int, part=None) -> "LinearKernelField":
        return cls((KernelTerm(g, delta(T, K), part),))

    @property
    def has_split(self) -> bool:
        return bool(self.terms) and all(t.part in ("per", "loc") for t in self.terms)

    def coefficients(self, x, ks, part: str | None = None) -> np.ndarray:
        """F_k[G(x)] as an array of shape (len(ks), len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ks = np.atleast_1d(np.asarray(ks, dtype=int))
        out = np.zeros((ks.size, x.size))
        for t in self.terms:
            if part is not None and t.part != part:
                continue
            out += np.outer(t.measure.coeff(ks), t.amplitude(x))
        return out

    def select(self, part: str) -> "LinearKernelField":
        return LinearKernelField(tuple(t for t in self.terms if t.part == part))

    def restrict(self, n: int) -> "LinearKernelField":
        return LinearKernelField(tuple(replace(t, measure=t.measure.restrict(n)) for t in self.terms))

    @property
    def K(self) -> int:
        return min((t.measure.K for t in self.terms), default=10**9)


@dataclass(frozen=True)
class MaterialSpec:
    geometry: str
    c: float
    T: float
    linear: LinearKernelField
    h: Profile
    nu: TorusMeasure
    variant: str = "i"
    alpha: float = 2.0
    beta: float = 2.0
    h_per: Profile | None = None
    h_loc: Profile | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.geometry not in ("slab", "cylindrical"):
            raise KernelError(f"unknown geometry {self.geometry!r}")
        if not 0 < self.c < 1:
            raise KernelError("speed c must lie in (0, 1)")
        if not self.T > 0:
            raise KernelError("period T must be positive")
        if self.alpha > self.beta:
            raise KernelError("decay exponents need alpha <= beta")
        if self.variant not in ("i", "ii"):
            raise KernelError("variant must be 'i' or 'ii'")
        if self.nu.is_zero():
            raise KernelError("nonlinear kernel must be nonzero")
        if not math.isclose(self.nu.period, self.T, rel_tol=1e-12):
            raise KernelError("nonlinear kernel period differs from T")

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.T

    @property
    def has_split(self) -> bool:
        return self.linear.has_split and self.h_per is not None and self.h_loc is not None

    def V(self, x, ks) -> np.ndarray:
        """V_k(x) = 1/c^2 - 1 - F_k[G(x)], shape (len(ks), len(x))."""
        return 1 / self.c**2 - 1 - self.linear.coefficients(x, ks)

    def with_h(self, h: Profile) -> "MaterialSpec":
        return replace(self, h=h, h_per=None, h_loc=None)

    def scaled_h(self, s: float) -> "MaterialSpec":
        def sc(p):
            return None if p is None else _Scaled(p, s)
        return replace(self, h=_Scaled(self.h, s), h_per=sc(self.h_per), h_loc=sc(self.h_loc))

    def periodic_part(self) -> "MaterialSpec":
        """The background problem with G^per, h^per."""
        if not self.has_split:
            raise KernelError("material has no periodic/local split")
        return replace(self, linear=self.linear.select("per"), h=self.h_per,
                       h_loc=Constant(0.0))


@dataclass(frozen=True)
class _Scaled(Profile):
    base: Profile
    factor: float

    def __call__(self, x):
        return self.factor * self.base(x)

    @property
    def period(self):
        return self.base.period

    def to_dict(self):
        return {"type": "scaled", "factor": self.factor, "base": self.base.to_dict()}


def subharmonic_restrict(spec: MaterialSpec, n: int) -> MaterialSpec:
    """Same material seen by T/n-periodic fields: F'_k = F_{nk}, omega' = n omega."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return spec
    nu = spec.nu.restrict(n)
    odd_only = spec.geometry == "cylindrical"
    scale = np.max(np.abs(spec.nu.coeffs))
    ok = [k for k in range(1, nu.K + 1)
          if abs(nu.coeff(k)) > 1e-14 * scale and (not odd_only or k % 2 == 1)]
    if not ok:
        raise EmptyRegularSet(f"no regular mode is a multiple of n={n}")
    return replace(spec, T=spec.T / n, nu=nu, linear=spec.linear.restrict(n),
                   meta={**spec.meta, "subharmonic": n * spec.meta.get("subharmonic", 1)})
