"""Per-mode spatial operators and the assembled discrete problem.

For each harmonic k the operator

    slab:         -d_x^2 + omega^2 k^2 V_k(x)
    cylindrical:  -(1/r^2) d_r r^3 d_r (1/r) + omega^2 k^2 V_k(r)

is stored as the symmetric tridiagonal matrix S_k = W A_k, where W is the
diagonal of quadrature weights.  A_k u = S_k u / w and the weighted form
<A_k u, v>_W = v^H S_k u is symmetric by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, LinAlgError

from ..errors import NonElliptic, NonpositiveKernel, SingularOperator
from .grid import ModeSet, SpaceGrid, TimeGrid


def stiffness(grid: SpaceGrid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the weighted second-order part."""
    h = grid.h
    if grid.geometry == "slab":
        n = grid.size
        return np.full(n, 2.0 / h), np.full(n - 1, -1.0 / h)
    r = grid.x
    edges = h * np.arange(grid.N + 1)  # edge e sits between nodes e-1 and e
    e3 = edges**3 / h
    # quadratic form sum_e r_e^3 (v_e - v_{e-1})^2 / h with v = u / r, v_N = 0
    diag = (e3[:-1] + e3[1:]) / r**2
    off = -e3[1:-1] / (r[:-1] * r[1:])
    return diag, off


def edge_form(grid: SpaceGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gradient part of the quadratic form, sum over edges, batched over rows."""
    h = grid.h
    if grid.geometry == "slab":
        pad = [(0, 0)] * (a.ndim - 1) + [(1, 1)]
        da = np.diff(np.pad(a, pad), axis=-1)
        db = np.diff(np.pad(b, pad), axis=-1)
        return np.sum(da * np.conj(db), axis=-1) / h
    r = grid.x
    edges = h * np.arange(grid.N + 1)
    pad = [(0, 0)] * (a.ndim - 1) + [(0, 1)]
    da = np.diff(np.pad(a / r, pad), axis=-1)
    db = np.diff(np.pad(b / r, pad), axis=-1)
    return np.sum(edges[1:] ** 3 * da * np.conj(db), axis=-1) / h


@dataclass(frozen=True, eq=False)
class ModeOperator:
    k: int
    grid: SpaceGrid
    diag: np.ndarray
    off: np.ndarray

    @cached_property
    def _chol(self):
        ab = np.zeros((2, self.diag.size))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        try:
            return cholesky_banded(ab, lower=False)
        except LinAlgError as exc:
            raise SingularOperator(f"mode {self.k}: operator is not positive definite") from exc

    def weighted_apply(self, u: np.ndarray) -> np.ndarray:
        """S_k u along the last axis."""
        out = self.diag * u
        out[..., :-1] += self.off * u[..., 1:]
        out[..., 1:] += self.off * u[..., :-1]
        return out

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.weighted_apply(u) / self.grid.weights

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve A_k x = rhs (complex rhs allowed, batched over leading axes)."""
        rhs = np.asarray(rhs)
        b = (rhs * self.grid.weights).T
        if np.iscomplexobj(b):
            x = cho_solve_banded((self._chol, False), b.real) + 1j * cho_solve_banded((self._chol, False), b.imag)
        else:
            x = cho_solve_banded((self._chol, False), b)
        if not np.all(np.isfinite(x)):
            raise SingularOperator(f"mode {self.k}: solve produced non-finite values")
        return x.T

    def dense(self) -> np.ndarray:
        """A_k as a dense matrix (for oracles and small tests)."""
        S = np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)
        return S / self.grid.weights[:, None]


def build_mode_operator(grid: SpaceGrid, k: int, omega: float, V_k: np.ndarray,
                        check: bool = True) -> ModeOperator:
    """Tridiagonal discretization of the mode-k operator on ``grid``.

    ``V_k`` holds the potential at the grid unknowns; pass ``np.ones`` for
    the plain (potential-free) operator.
    """
    V_k = np.asarray(V_k, dtype=float)
    if check and k != 0 and np.any(V_k <= 0):
        j = int(np.argmin(V_k))
        raise NonElliptic(f"V_{k}(x={grid.x[j]:.6g}) = {V_k[j]:.6g} <= 0")
    d, e = stiffness(grid)
    return ModeOperator(int(k), grid, d + (omega * k) ** 2 * V_k * grid.weights, e.copy())


def solve_mode_operator(op: ModeOperator, rhs: np.ndarray) -> np.ndarray:
    return op.solve(rhs)


class Problem:
    """Everything the functional needs, sampled once on the grid.

    Bundles a material with a spatial grid, time grid and regular mode set
    and caches mode potentials, kernel weights and operators.
    """

    def __init__(self, spec, grid: SpaceGrid, tg: TimeGrid, modes: ModeSet | None = None,
                 K: int | None = None):
        from ..kernels.measure import regular_set

        if spec.geometry != grid.geometry:
            raise ValueError("material and grid geometries differ")
        self.spec = spec
        self.grid = grid
        self.tg = tg
        if modes is None:
            if K is None:
                raise ValueError("need either a mode set or K")
            modes = regular_set(spec.nu, K, geometry=grid.geometry)
        self.modes = modes
        self.K = modes.K
        tg.check_cubic(max(modes.regular))

    @property
    def omega(self) -> float:
        return self.spec.omega

    @cached_property
    def nu_k(self) -> np.ndarray:
        f = self.spec.nu.coeff(self.modes.ks)
        bad = f <= 0
        if np.any(bad):
            k = self.modes.ks[np.argmax(bad)]
            raise NonpositiveKernel(f"F_{k}[nu] = {self.spec.nu.coeff(k):.3g} <= 0 on the regular set")
        return np.asarray(f, dtype=float)

    @cached_property
    def weight_k(self) -> np.ndarray:
        """2 / (omega^2 k^2 F_k[nu]); the 2 accounts for the -k partner."""
        return 2.0 / ((self.omega * self.modes.ks) ** 2 * self.nu_k)

    @cached_property
    def lift_k(self) -> np.ndarray:
        return (self.omega * self.modes.ks) ** 2 * self.nu_k

    @cached_property
    def V(self) -> np.ndarray:
        return self.spec.V(self.grid.x, self.modes.ks)

    @cached_property
    def h(self) -> np.ndarray:
        return np.asarray(self.spec.h(self.grid.x), dtype=float)

    @cached_property
    def operators(self) -> tuple:
        return tuple(build_mode_operator(self.grid, k, self.omega, self.V[i])
                     for i, k in enumerate(self.modes.regular))

    @cached_property
    def plain_operators(self) -> tuple:
        ones = np.ones(self.grid.size)
        return tuple(build_mode_operator(self.grid, k, self.omega, ones)
                     for k in self.modes.regular)

    def operator(self, k: int, V_k: np.ndarray | None = None) -> ModeOperator:
        """Mode operator for an arbitrary (e.g. singular) harmonic."""
        if V_k is None:
            V_k = self.spec.V(self.grid.x, [k])[0]
        return build_mode_operator(self.grid, k, self.omega, V_k)

    def with_spec(self, spec) -> "Problem":
        return Problem(spec, self.grid, self.tg, self.modes)
