from .grid import ModeSet, SpaceGrid, TimeGrid
from .field import (Field, analyze, fractional_time_derivative, project_regular,
                    project_singular, spacetime_integral, time_analysis, time_synthesis)
from .operators import ModeOperator, Problem, build_mode_operator, solve_mode_operator
from .inner import h_inner_product, h_norm
from .io import load_field, save_field

__all__ = [
    "ModeSet", "SpaceGrid", "TimeGrid", "Field", "analyze", "fractional_time_derivative",
    "project_regular", "project_singular", "spacetime_integral", "time_analysis",
    "time_synthesis", "ModeOperator", "Problem", "build_mode_operator",
    "solve_mode_operator", "h_inner_product", "h_norm", "load_field", "save_field",
]
