"""Energy J(u) = 1/2 <u,u>_H - 1/4 int h u^4, its derivative and H-gradient."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import Field, Problem, h_inner_product, spacetime_integral, time_synthesis
from .discretization.field import analyze
from .errors import ModeMismatch, NoPositiveQuartic


@dataclass(frozen=True)
class EnergyBreakdown:
    quadratic: float
    quartic: float
    total: float

    @classmethod
    def of(cls, quadratic, quartic):
        return cls(float(quadratic), float(quartic), float(quadratic) - float(quartic))

    def to_dict(self):
        return {"quadratic": self.quadratic, "quartic": self.quartic, "total": self.total}


def _check(u: Field, problem: Problem):
    if u.grid != problem.grid or u.ks != problem.modes.regular:
        raise ModeMismatch("field is not on the problem's grid / regular modes")


def samples(u: Field, problem: Problem) -> np.ndarray:
    return time_synthesis(u, problem.tg, cubic_safe=True)


def quartic_integral(u: Field, problem: Problem) -> float:
    """int h u^4 d(x,t)."""
    _check(u, problem)
    s = samples(u, problem)
    return spacetime_integral(problem.h * s**4, problem.grid)


def energy(u: Field, problem: Problem) -> EnergyBreakdown:
    _check(u, problem)
    quad = 0.5 * h_inner_product(u, u, problem)
    return EnergyBreakdown.of(quad, 0.25 * quartic_integral(u, problem))


def derivative(u: Field, v: Field, problem: Problem) -> float:
    """J'(u)[v] = <u,v>_H - int h u^3 v."""
    _check(u, problem)
    _check(v, problem)
    su, sv = samples(u, problem), samples(v, problem)
    return h_inner_product(u, v, problem) - spacetime_integral(problem.h * su**3 * sv, problem.grid)


def nonlinearity(u: Field, problem: Problem) -> Field:
    """P_R[h u^3] restricted to the regular modes."""
    s = samples(u, problem)
    return Field(problem.grid, problem.modes.regular, analyze(problem.h * s**3, problem.modes.regular))


def lift(f: Field, problem: Problem) -> Field:
    """H-Riesz representative of v -> int f v d(x,t)."""
    _check(f, problem)
    out = np.empty_like(f.coeffs)
    for i, op in enumerate(problem.operators):
        out[i] = problem.lift_k[i] * op.solve(f.coeffs[i])
    return f.with_coeffs(out)


def gradient(u: Field, problem: Problem) -> Field:
    """g with <g, v>_H = J'(u)[v] for all v in the discrete space."""
    _check(u, problem)
    return u - lift(nonlinearity(u, problem), problem)


def nehari_scale(u: Field, problem: Problem) -> tuple[float, float]:
    """(t*, J(t* u)) with t* the unique maximizer of s -> J(s u), s > 0."""
    q = h_inner_product(u, u, problem)
    p = quartic_integral(u, problem)
    if not p > 0:
        raise NoPositiveQuartic(f"int h u^4 = {p:.3g} <= 0: the ray never meets the Nehari manifold")
    return math.sqrt(q / p), q * q / (4 * p)
