"""Ground states by Nehari-constrained, H-preconditioned gradient descent.

On the Nehari manifold J(u) = <u,u>_H / 4, and along any admissible ray the
maximum of s -> J(s u) is <u,u>_H^2 / (4 int h u^4).  Each iteration steps
along the H-gradient and projects back onto the manifold by that scaling;
Armijo backtracking on the projected energy keeps the descent monotone.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .discretization import Field, Problem, SpaceGrid, TimeGrid, h_inner_product
from .discretization.field import tail_mass
from .errors import (BreatherError, EmptyRegularSet, MaxIterExceeded, NoDescentDirection,
                     NoPositiveQuartic, SolverError)
from .functional import EnergyBreakdown, energy, gradient, nehari_scale, quartic_integral
from .kernels import subharmonic_restrict, validate_assumptions
from .kernels.assumptions import AssumptionReport

log = logging.getLogger(__name__)


class AssumptionViolation(SolverError):
    def __init__(self, report: AssumptionReport):
        self.report = report
        msgs = "; ".join(f"{k}: {v.message} {v.witness}" for k, v in report.failures().items())
        super().__init__(f"assumptions violated: {msgs}")


@dataclass
class SolverConfig:
    tol_grad: float = 1e-9
    max_iter: int = 5000
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-12
    k0: int | None = None
    sigma: float = 2.0
    seed: int = 0
    max_restarts: int = 3
    tail_fraction: float = 0.9

    def __post_init__(self):
        if not self.tol_grad > 0:
            raise ValueError("tol_grad must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveReport:
    u: Field
    energy: EnergyBreakdown
    grad_norm: float
    u_norm: float
    iterations: int
    converged: bool
    mountain_pass_level_estimate: float
    identity_defect: float
    tail_mass: float
    assumption_report: AssumptionReport | None = None
    residual_norms: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    restarts: int = 0
    period: float | None = None
    subharmonic: int = 1

    @property
    def relative_grad(self) -> float:
        return self.grad_norm / self.u_norm if self.u_norm else math.inf

    def to_dict(self) -> dict:
        d = {
            "energy": self.energy.to_dict(),
            "grad_norm": self.grad_norm,
            "u_norm_H": self.u_norm,
            "relative_grad": self.relative_grad,
            "iterations": self.iterations,
            "converged": self.converged,
            "mountain_pass_level_estimate": self.mountain_pass_level_estimate,
            "quarter_norm_sq": 0.25 * self.u_norm**2,
            "identity_defect": self.identity_defect,
            "tail_mass": self.tail_mass,
            "residual_norms": self.residual_norms,
            "restarts": self.restarts,
            "period": self.period,
            "subharmonic": self.subharmonic,
            "active_modes": list(self.u.active_modes()),
            "trace": self.trace,
        }
        if self.assumption_report is not None:
            d["assumptions"] = self.assumption_report.to_dict()
        return d


def _envelope(grid: SpaceGrid, center: float, sigma: float) -> np.ndarray:
    x = grid.x
    if grid.geometry == "slab":
        return np.exp(-(((x - center) / sigma) ** 2))
    # vanishes linearly on the axis
    return (x / sigma) * np.exp(-(((x - center) / sigma) ** 2))


def _peak(grid: SpaceGrid, h: np.ndarray) -> float:
    """Location of max h; ties (flat h) resolve towards the centre."""
    top = np.flatnonzero(h >= h.max() - 1e-12 * abs(h.max()))
    return float(grid.x[top[np.argmin(np.abs(grid.x[top]))]])


def initial_guess(problem: Problem, cfg: SolverConfig) -> Field:
    """u0 = r Re[phi(x) e_{k0}(t)] with phi a Gaussian envelope, scaled onto the Nehari manifold."""
    modes = problem.modes
    k0 = cfg.k0 if cfg.k0 is not None else min(modes.regular)
    if k0 not in modes:
        raise SolverError(f"initial mode k0={k0} is not regular")
    grid = problem.grid
    h = problem.h
    center = _peak(grid, h)
    if grid.geometry == "cylindrical" and center <= 2 * grid.h:
        center = 0.0
    sigma = cfg.sigma
    for _ in range(8):
        phi = _envelope(grid, center, sigma)
        # u_k = phi/2 so that u = Re[phi e_k]
        u = Field.single_mode(grid, modes.regular, k0, 0.5 * phi)
        if quartic_integral(u, problem) > 0:
            t, _ = nehari_scale(u, problem)
            return u * t
        sigma *= 0.5
    raise NoPositiveQuartic("no envelope with int h phi^4 > 0 found (h <= 0 effectively everywhere)")


def _perturbed(u: Field, problem: Problem, rng: np.random.Generator, scale=0.1) -> Field:
    noise = rng.standard_normal(u.coeffs.shape) + 1j * rng.standard_normal(u.coeffs.shape)
    env = np.abs(u.coeffs).max() * np.exp(-((problem.grid.x / (0.25 * problem.grid.extent)) ** 2))
    return u.with_coeffs(u.coeffs + scale * noise * env)


def _check_assumptions(problem: Problem, validate: bool) -> AssumptionReport | None:
    if not validate:
        return None
    rep = validate_assumptions(problem.spec, problem.K, x=problem.grid.x, modes=problem.modes)
    if not rep.hard_ok:
        raise AssumptionViolation(rep)
    for k, v in rep.failures().items():
        log.warning("assumption %s not met (%s); continuing with the discrete problem", k, v.message)
    return rep


def ground_state(problem: Problem, cfg: SolverConfig | None = None, u0: Field | None = None,
                 validate: bool = True) -> SolveReport:
    cfg = cfg or SolverConfig()
    report = _check_assumptions(problem, validate)
    rng = np.random.default_rng(cfg.seed)

    u = initial_guess(problem, cfg) if u0 is None else u0 * nehari_scale(u0, problem)[0]
    restarts = 0
    trace = []
    q = h_inner_product(u, u, problem)
    level = 0.25 * q
    it = 0
    converged = False
    g = gradient(u, problem)
    gn = math.sqrt(max(h_inner_product(g, g, problem), 0.0))
    while it < cfg.max_iter:
        un = math.sqrt(q)
        trace.append({"iter": it, "energy": level, "grad_norm": gn})
        if gn <= cfg.tol_grad * un:
            converged = True
            break
        s = cfg.step0
        slack = 64 * np.finfo(float).eps * abs(level)
        while True:
            trial = u - s * g
            try:
                t, new_level = nehari_scale(trial, problem)
            except NoPositiveQuartic:
                new_level = math.inf
            # near convergence the decrease drops below the rounding level of J
            if new_level <= level - cfg.armijo * s * gn * gn + slack:
                break
            s *= cfg.backtrack
            if s < cfg.min_step:
                break
        if s < cfg.min_step:
            if restarts >= cfg.max_restarts:
                raise NoDescentDirection(f"step underflow at iteration {it} (|g|/|u| = {gn / un:.3g})")
            restarts += 1
            log.info("step underflow; restarting from a perturbed guess (%d)", restarts)
            u = _perturbed(u, problem, rng)
            u = u * nehari_scale(u, problem)[0]
        else:
            if new_level > level + slack:
                raise SolverError("Nehari energy increased on an accepted step")
            u = trial * t
        q = h_inner_product(u, u, problem)
        level = 0.25 * q
        g = gradient(u, problem)
        gn = math.sqrt(max(h_inner_product(g, g, problem), 0.0))
        it += 1

    if not converged:
        raise MaxIterExceeded(f"no convergence in {cfg.max_iter} iterations "
                              f"(|g|/|u| = {gn / math.sqrt(q):.3g})")
    e = energy(u, problem)
    p = quartic_integral(u, problem)
    return SolveReport(
        u=u, energy=e, grad_norm=gn, u_norm=math.sqrt(q), iterations=it, converged=True,
        mountain_pass_level_estimate=q * q / (4 * p),
        identity_defect=abs(e.total - 0.25 * q),
        tail_mass=tail_mass(u, cfg.tail_fraction),
        assumption_report=report, trace=trace, restarts=restarts,
        period=problem.spec.T, subharmonic=problem.spec.meta.get("subharmonic", 1),
    )


# -- subharmonic families -------------------------------------------------

def minimal_period(u: Field, T: float, n: int = 1, rtol: float = 1e-8) -> float:
    """Smallest T/m such that every active mode (in the T-frame) is a multiple of m."""
    active = [n * k for k in u.active_modes(rtol)]
    if not active:
        return math.inf
    return T / math.gcd(*active)


def _frame_modes(rep: SolveReport, n: int) -> dict:
    return {n * k: rep.u.mode(k) for k in rep.u.ks}


def aligned_distance(a: dict, b: dict, grid: SpaceGrid, ngrid: int = 512) -> float:
    """Relative L^2 distance after the best time shift of b, modes given in a common frame."""
    ks = sorted(set(a) | set(b))
    w = grid.weights
    A = np.array([a.get(k, np.zeros(grid.size)) for k in ks])
    B = np.array([b.get(k, np.zeros(grid.size)) for k in ks])
    kk = np.asarray(ks, dtype=float)
    mult = np.where(kk == 0, 1.0, 2.0)
    norm = math.sqrt(max(np.sum(mult[:, None] * w * np.abs(A) ** 2),
                         np.sum(mult[:, None] * w * np.abs(B) ** 2)))
    if norm == 0:
        return 0.0
    cross = np.sum(mult[:, None] * w * A * np.conj(B), axis=1)

    def dist2(theta):
        # theta = omega * shift
        return (np.sum(mult[:, None] * w * (np.abs(A) ** 2 + np.abs(B) ** 2))
                - 2 * np.real(np.sum(cross * np.exp(-1j * kk * theta))))

    thetas = np.linspace(0, 2 * np.pi, ngrid, endpoint=False)
    vals = [dist2(t) for t in thetas]
    t0 = thetas[int(np.argmin(vals))]
    res = minimize_scalar(dist2, bounds=(t0 - 2 * np.pi / ngrid, t0 + 2 * np.pi / ngrid),
                          method="bounded", options={"xatol": 1e-12})
    return math.sqrt(max(min(res.fun, min(vals)), 0.0)) / norm


@dataclass
class FamilyMember:
    n: int
    report: SolveReport | None
    minimal_period: float | None
    notice: str = ""


def subharmonic_family(spec, grid: SpaceGrid, tg: TimeGrid, K: int, cfg: SolverConfig,
                       n_list, distinct_tol: float = 1e-6, validate: bool = True):
    """Ground states with periods T/n; returns members and a pairwise distinctness table."""
    members = []
    for n in n_list:
        try:
            sub = subharmonic_restrict(spec, n)
            problem = Problem(sub, grid, tg, K=K)
        except EmptyRegularSet as exc:
            log.warning("n=%d skipped: %s", n, exc)
            members.append(FamilyMember(n, None, None, f"skipped: {exc}"))
            continue
        rep = ground_state(problem, cfg, validate=validate)
        members.append(FamilyMember(n, rep, minimal_period(rep.u, spec.T, n)))

    pairs = []
    done = [m for m in members if m.report is not None]
    for i, a in enumerate(done):
        for b in done[i + 1:]:
            by_period = not math.isclose(a.minimal_period, b.minimal_period, rel_tol=1e-12)
            dist = aligned_distance(_frame_modes(a.report, a.n), _frame_modes(b.report, b.n), grid)
            pairs.append({"n": [a.n, b.n], "minimal_periods": [a.minimal_period, b.minimal_period],
                          "distinct_by_period": by_period, "aligned_distance": dist,
                          "distinct": by_period or dist > distinct_tol})
    return members, pairs


# -- periodic comparison ------------------------------------------------------

def periodic_comparison(problem: Problem, cfg: SolverConfig, tol: float = 1e-8,
                        validate: bool = True) -> dict:
    """Compare the full ground-state level with that of the periodic background.

    The full problem is started from the periodic ground state, so its
    computed level can only sit below J along that state's ray.
    """
    spec = problem.spec
    per_problem = problem.with_spec(spec.periodic_part())
    per = ground_state(per_problem, cfg, validate=False)
    full = ground_state(problem, cfg, u0=per.u, validate=validate)
    # oracle: Nehari level of the full functional on the periodic solution's ray
    _, ray_level = nehari_scale(per.u, problem)
    e_full, e_per = full.energy.total, per.energy.total
    diff = e_per - e_full
    if abs(diff) < 10 * tol * abs(e_per):
        verdict = "inconclusive"
    elif diff > 0:
        verdict = "holds"
    else:
        verdict = "violated"
    return {"c_gs_estimate": e_full, "c_gs_per_estimate": e_per, "ray_level": ray_level,
            "difference": diff, "inequality_verdict": verdict, "full": full, "periodic": per}


def run_ground_state(spec, grid: SpaceGrid, tg: TimeGrid, K: int, cfg: SolverConfig | None = None,
                     **kw) -> SolveReport:
    """Convenience wrapper building the discrete problem first."""
    return ground_state(Problem(spec, grid, tg, K=K), cfg, **kw)


__all__ = [
    "AssumptionViolation", "SolverConfig", "SolveReport", "initial_guess", "ground_state",
    "minimal_period", "aligned_distance", "subharmonic_family", "periodic_comparison",
    "run_ground_state", "BreatherError",
]
