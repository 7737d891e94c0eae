"""Weighted inner products on the regular-mode space."""
from __future__ import annotations

import numpy as np

from ..errors import ModeMismatch
from .field import Field
from .operators import Problem, edge_form


def h_inner_product(u: Field, v: Field, problem: Problem, weights: str = "potential") -> float:
    """<u, v>_H (``potential``, with V_k) or <<u, v>>_H (``plain``, V_k = 1).

    sum over k in R of 1/(omega^2 k^2 F_k[nu]) * int (u_k' conj(v_k') + omega^2 k^2 W_k u_k conj(v_k)),
    with the 1/r^2 term folded into the gradient part on cylindrical grids.
    """
    if u.grid != problem.grid or v.grid != problem.grid:
        raise ModeMismatch("field grid differs from problem grid")
    if u.ks != problem.modes.regular or v.ks != problem.modes.regular:
        raise ModeMismatch("fields must be indexed by the regular mode set")
    grid = problem.grid
    if weights not in ("potential", "plain"):
        raise ValueError(f"unknown weights {weights!r}")
    W = problem.V if weights == "potential" else np.ones_like(problem.V)
    grad = edge_form(grid, u.coeffs, v.coeffs)
    mass = np.sum(W * grid.weights * u.coeffs * np.conj(v.coeffs), axis=-1)
    per_mode = (grad + (problem.omega * problem.modes.ks) ** 2 * mass).real
    return float(problem.weight_k @ per_mode)


def h_norm(u: Field, problem: Problem, weights: str = "potential") -> float:
    return float(np.sqrt(max(h_inner_product(u, u, problem, weights), 0.0)))
