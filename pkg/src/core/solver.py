# src/core/solver.py

"""
Constrained minimization on the radial grid.

Features:
- minimize_rho: preconditioned projected descent of I*(u) = ||u||^p + lambda* |u|_{q,sigma}^q
  over |u|_{r,s} = 1, with Armijo backtracking and periodic optimal rescaling.
- el_residual: discrete weak-form residual of the Euler-Lagrange equation at the
  multiplier implied by rho.
- verify_inequality: worst sampled ratio |u|_{r,s} / (||u||^a |u|_{q,sigma}^{1-a}) over a
  seeded family of radial test functions.
- first_eigenvalue: first critical level of min ||u||^p subject to int |x|^-sigma |u|^q = 1
  on a ball, with a tridiagonal finite-volume oracle for p = q = 2.
- parameter_sweep: independent solves on a thread pool, results in input order.

The descent direction solves S d = -g with S the secant p-Laplacian operator at the
current iterate (tridiagonal, banded Cholesky). For p = q = 2 the unit step is the
normalized inverse iteration.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import eigh_tridiagonal, solveh_banded

from src.config.settings import BaseConfig, get_config
from src.core.exponents import (
    CknParams,
    DerivedExponents,
    derive_exponents,
    lagrange_multiplier,
    sharp_constant_from_rho,
    two_power_infimum,
    validate_eigen,
)
from src.core.monitoring import ConvergenceMonitor, MonitorConfig
from src.core.radial import (
    FULL_SPHERE,
    EnergyBreakdown,
    RadialFunction,
    RadialGrid,
    build_ball_grid,
    build_grid,
    grad_energy,
    gradient_grad_energy,
    gradient_i_star,
    gradient_weighted_lq,
    i_star,
    normalize,
    normalize_weighted,
    scale,
    sphere_measure,
    weighted_lq,
)
from src.utils.exceptions import (
    BaseToolkitException,
    ConstraintViolationException,
    DegenerateParametersException,
    DomainArgumentException,
    GridException,
    ParameterValidationException,
    SolverDivergenceException,
)
from src.utils.logging import correlation_scope

logger = logging.getLogger("ckn_toolkit.solver")

MINIMIZER_LABEL = "radial local minimizer candidate"
# Stationarity below which a failed line search or an energy stall counts as converged.
STATIONARY_ACCEPT = 1e-7
CONSTRAINT_TOLERANCE = 1e-8
DEFAULT_SWEEP_WORKERS = 4


class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(50000, ge=1)
    step0: float = Field(1.0, gt=0)
    armijo_c: float = Field(1e-4, gt=0, lt=1)
    armijo_shrink: float = Field(0.5, gt=0, lt=1)
    tol_energy: float = Field(1e-10, gt=0)
    tol_grad: float = Field(1e-8, gt=0)
    rescale_every: int = Field(5, ge=0)
    seed: int = 0
    eps_reg: float = Field(1e-8, ge=0)
    stall_window: int = Field(10, ge=1)
    max_backtracks: int = Field(40, ge=1)
    log_every: int = Field(100, ge=0)

    @classmethod
    def from_config(cls, config: Optional[BaseConfig] = None, **overrides: Any) -> "SolverOptions":
        """
        Defaults from the active configuration; keyword overrides that are not None win.
        """
        values = (config or get_config()).solver_defaults()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class MinimizeResult:
    params: CknParams
    rho: float
    c_sharp: float
    profile: RadialFunction
    lagrange: float
    el_residual: Optional[float]
    balance_residual: float
    iterations: int
    energy_trace: List[float]
    converged: bool
    breakdown: EnergyBreakdown
    stop_reason: str
    label: str = MINIMIZER_LABEL
    correlation_id: str = ""

    @property
    def el_skipped(self) -> bool:
        return self.el_residual is None


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    phi1: RadialFunction
    iterations: int
    converged: bool
    energy_trace: List[float]
    constraint: float
    stop_reason: str
    correlation_id: str = ""


@dataclass(frozen=True)
class VerifyReport:
    worst_ratio: float
    violations: int
    samples: int
    C: float
    tol: float

    def to_dict(self) -> Dict[str, Any]:
        return {"worst_ratio": self.worst_ratio, "violations": self.violations,
                "samples": self.samples, "C": self.C, "tol": self.tol}


@dataclass(frozen=True)
class SweepOutcome:
    index: int
    params: Dict[str, Any]
    result: Optional[MinimizeResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class _DescentProblem:
    """
    min energy(u) subject to weighted_lq(u, constraint_exponent, constraint_weight) = 1.
    """
    label: str
    energy: Callable[[RadialFunction], float]
    energy_gradient: Callable[[RadialFunction], np.ndarray]
    constraint_exponent: float
    constraint_weight: float
    p: float
    mu: float
    q: float = 2.0
    sigma: float = 0.0
    mass_coeff: float = 0.0
    rescale: Optional[Callable[[RadialFunction], Optional[RadialFunction]]] = None

    def normalize(self, u: RadialFunction) -> RadialFunction:
        return normalize_weighted(u, self.constraint_exponent, self.constraint_weight)

    def constraint_gradient(self, u: RadialFunction) -> np.ndarray:
        return gradient_weighted_lq(u, self.constraint_exponent, self.constraint_weight)


def gaussian_profile(grid: RadialGrid, center: float = 0.0, width: float = 2.0) -> RadialFunction:
    """
    exp(-((tau - center)/width)^2), zero at the endpoints.
    """
    return RadialFunction.from_callable(grid, lambda tau: np.exp(-((tau - center) / width) ** 2))


def _secant_weights(values: np.ndarray, exponent: float, eps_reg: float) -> np.ndarray:
    """
    (v^2 + eps^2)^{(e-2)/2}, the same regularization the gradients use, so that the
    operator applied to u reproduces the gradient.
    """
    if exponent == 2.0:
        return np.ones_like(values)
    floor = eps_reg
    if not floor > 0:
        floor = max(1e-12 * float(np.max(np.abs(values), initial=0.0)), 1e-150)
    return (values ** 2 + floor ** 2) ** ((exponent - 2.0) / 2.0)


def secant_operator(
    u: RadialFunction,
    p: float,
    mu: float,
    q: float = 2.0,
    sigma: float = 0.0,
    mass_coeff: float = 0.0,
    eps_reg: float = 1e-8,
) -> np.ndarray:
    """
    Upper banded storage of the interior secant operator S(u) with S(u) u = grad F(u)
    for F = grad_energy(p, mu) + (mass_coeff / q) weighted_lq(q, sigma).

    The mass part is left out for q <= 1: on nonnegative profiles that term is linear.
    """
    grid = u.grid
    slopes = np.diff(u.values) / grid.h
    k = p * grid.cell_measure(grid.N - p - mu) * _secant_weights(slopes, p, eps_reg) / grid.h ** 2

    diag = k[:-1] + k[1:]
    if mass_coeff > 0 and q > 1:
        interior = u.values[1:-1]
        diag = diag + mass_coeff * _secant_weights(interior, q, eps_reg) \
            * grid.node_measure(grid.N - sigma)[1:-1]

    ab = np.zeros((2, grid.n - 2))
    ab[0, 1:] = -k[1:-1]
    ab[1] = diag
    return ab


def _hold_nodes(ab: np.ndarray, held: np.ndarray) -> None:
    # Decouple held interior nodes: identity rows and no coupling to neighbours.
    ab[1, held] = 1.0
    coupled = held.copy()
    coupled[1:] |= held[:-1]
    ab[0, coupled] = 0.0


def dual_norm_ratio(ab: np.ndarray, residual: np.ndarray, reference: np.ndarray) -> float:
    """
    sqrt(<res, S^-1 res> / <ref, S^-1 ref>) for the banded operator S.

    Raises:
        LinAlgError: if S is not positive definite.
    """
    solved = solveh_banded(ab, np.column_stack([residual, reference]))
    top = float(np.dot(residual, solved[:, 0]))
    bottom = float(np.dot(reference, solved[:, 1]))
    return math.sqrt(max(top, 0.0) / max(bottom, 1e-300))


@dataclass(frozen=True)
class _Direction:
    """
    Preconditioned tangent direction at one iterate.

    residual is the dual-norm stationarity sqrt(-slope / <grad F, S^-1 grad F>) over the free nodes.
    tangent is grad F - nu grad G with the multiplier nu = <grad F, u> / <grad G, u>.
    """
    values: np.ndarray
    slope: float
    residual: float
    tangent: np.ndarray


def _search_direction(problem: _DescentProblem, u: RadialFunction, grad_f: np.ndarray,
                      grad_g: np.ndarray, eps_reg: float, iteration: int) -> _Direction:
    """
    Secant-preconditioned projected gradient, tangent to the constraint.

    Nodes sitting at zero whose tangent gradient pushes them further down are held
    fixed; the direction vanishes there and at the endpoints.
    """
    nu_u = float(np.dot(grad_f, u.values) / np.dot(grad_g, u.values))
    tangent = grad_f - nu_u * grad_g
    tangent[0] = tangent[-1] = 0.0

    ab = secant_operator(u, problem.p, problem.mu, problem.q, problem.sigma, problem.mass_coeff, eps_reg)
    gf, gg = grad_f[1:-1].copy(), grad_g[1:-1].copy()
    held = (u.values[1:-1] <= 0.0) & (tangent[1:-1] > 0.0)
    if held.any():
        _hold_nodes(ab, held)
        gf[held] = 0.0
        gg[held] = 0.0
    try:
        solved = solveh_banded(ab, np.column_stack([gf, gg]))
    except (LinAlgError, ValueError) as e:
        raise SolverDivergenceException(f"{problem.label}: secant operator not positive definite ({e})", iteration)
    y_f, y_g = solved[:, 0], solved[:, 1]
    nu = float(np.dot(gg, y_f) / np.dot(gg, y_g))

    direction = np.zeros(u.grid.n)
    direction[1:-1] = nu * y_g - y_f
    slope = float(np.dot(gf - nu * gg, direction[1:-1]))
    residual = math.sqrt(max(-slope, 0.0) / max(float(np.dot(gf, y_f)), 1e-300))
    return _Direction(direction, slope, residual, tangent)


def _retract(problem: _DescentProblem, values: np.ndarray, grid: RadialGrid, iteration: int) -> RadialFunction:
    """
    Clip to the nonnegative cone, then normalize onto the constraint.
    """
    if not np.all(np.isfinite(values)):
        raise SolverDivergenceException(f"{problem.label}: non-finite iterate", iteration)
    trial = RadialFunction.from_values(grid, np.maximum(values, 0.0))
    if not weighted_lq(trial, problem.constraint_exponent, problem.constraint_weight) > 0:
        raise SolverDivergenceException(f"{problem.label}: iterate collapsed to zero", iteration)
    return problem.normalize(trial)


def _descend(problem: _DescentProblem, u0: RadialFunction, opts: SolverOptions,
             monitor: ConvergenceMonitor) -> Tuple[RadialFunction, int, bool, str]:
    """
    Run the descent from a normalized start.

    An energy stall or a failed line search only counts as convergence when the
    stationarity is below STATIONARY_ACCEPT; a stall above it keeps iterating.

    Returns:
        Tuple[RadialFunction, int, bool, str]: final iterate, iterations, converged, stop reason.
    """
    def direction_at(v: RadialFunction, iteration: int) -> _Direction:
        grad_f = problem.energy_gradient(v)
        grad_g = problem.constraint_gradient(v)
        return _search_direction(problem, v, grad_f, grad_g, opts.eps_reg, iteration)

    u = _retract(problem, u0.values, u0.grid, 0)
    energy = problem.energy(u)
    current = direction_at(u, 0)
    monitor.record(0, energy, current.residual, 0.0)

    iterations, converged, reason = 0, False, "max_iters"
    for iteration in range(1, opts.max_iters + 1):
        if current.residual < opts.tol_grad:
            converged, reason = True, "gradient"
            break

        accepted: Optional[RadialFunction] = None
        step = opts.step0
        if current.slope < 0:
            for _ in range(opts.max_backtracks):
                raw = np.maximum(u.values + step * current.values, 0.0)
                # first-order change along the clipped arc
                predicted = float(np.dot(current.tangent, raw - u.values))
                if predicted < 0:
                    trial = _retract(problem, raw, u.grid, iteration)
                    trial_energy = problem.energy(trial)
                    if not math.isfinite(trial_energy):
                        raise SolverDivergenceException(f"{problem.label}: non-finite energy", iteration)
                    if trial_energy <= energy + opts.armijo_c * predicted:
                        accepted = trial
                        break
                step *= opts.armijo_shrink

        if accepted is None:
            converged, reason = current.residual < STATIONARY_ACCEPT, "line_search"
            logger.debug("Line search failed", extra={"context": {
                "label": problem.label, "iteration": iteration, "residual": current.residual}})
            break
        u, energy = accepted, trial_energy

        if problem.rescale is not None and opts.rescale_every and iteration % opts.rescale_every == 0:
            rescaled = problem.rescale(u)
            if rescaled is not None:
                rescaled_energy = problem.energy(rescaled)
                if rescaled_energy < energy:
                    u, energy = rescaled, rescaled_energy
                    monitor.note_rescale()

        current = direction_at(u, iteration)
        monitor.record(iteration, energy, current.residual, step)
        iterations = iteration

        if monitor.energy_stalled() and current.residual < STATIONARY_ACCEPT:
            converged, reason = True, "energy"
            break

    return u, iterations, converged, reason


def _optimal_rescale(u: RadialFunction, params: CknParams, ex: DerivedExponents) -> Optional[RadialFunction]:
    breakdown = i_star(u, params, ex.lambda_star)
    if not (breakdown.grad_term > 0 and breakdown.q_term > 0):
        return None
    t0, _ = two_power_infimum(ex.a_prime, ex.b_prime, breakdown.grad_term, ex.lambda_star * breakdown.q_term)
    if abs(math.log(t0)) < 1e-12:
        return None
    moved = scale(u, t0, params)
    if not weighted_lq(moved, params.r, params.s) > 0:
        return None
    return normalize(moved, params)


def _check_initial(initial: Optional[RadialFunction], grid: RadialGrid) -> None:
    if initial is not None and initial.grid != grid:
        raise GridException("initial profile lives on a different grid", "initial")


def minimize_rho(
    params: CknParams,
    grid: RadialGrid,
    opts: Optional[SolverOptions] = None,
    initial: Optional[RadialFunction] = None,
    correlation_id: Optional[str] = None,
) -> MinimizeResult:
    """
    Minimize I*(u) with lambda = lambda* over the radial profiles with |u|_{r,s} = 1.

    Raises:
        ParameterValidationException: if the tuple fails the attainment hypotheses.
        GridException: if the grid dimension differs from params.N.
        SolverDivergenceException: on a non-finite energy during descent.
    """
    ex = derive_exponents(params)
    if grid.N != params.N:
        raise GridException(f"grid dimension {grid.N} differs from N={params.N}", "N")
    _check_initial(initial, grid)
    opts = opts or SolverOptions.from_config()
    lam = ex.lambda_star

    with correlation_scope(correlation_id) as cid:
        logger.info("Starting minimization", extra={"context": {
            "params": params.as_dict(), "grid": grid.to_dict(), "lambda_star": lam}})

        problem = _DescentProblem(
            label="minimize_rho",
            energy=lambda v: i_star(v, params, lam).i_star,
            energy_gradient=lambda v: gradient_i_star(v, params, lam, opts.eps_reg),
            constraint_exponent=params.r,
            constraint_weight=params.s,
            p=params.p,
            mu=params.mu,
            q=params.q,
            sigma=params.sigma,
            mass_coeff=lam * params.q,
            rescale=lambda v: _optimal_rescale(v, params, ex),
        )
        monitor = ConvergenceMonitor(
            MonitorConfig(opts.log_every, opts.stall_window, opts.tol_energy), label="minimize_rho"
        )
        u0 = normalize(initial if initial is not None else gaussian_profile(grid), params)
        u, iterations, converged, reason = _descend(problem, u0, opts, monitor)

        breakdown = i_star(u, params, lam)
        rho = breakdown.i_star
        balance = abs(ex.a_prime * breakdown.grad_term - ex.b_prime * lam * breakdown.q_term) \
            / (ex.a_prime * breakdown.grad_term)
        result = MinimizeResult(
            params=params,
            rho=rho,
            c_sharp=sharp_constant_from_rho(params, rho),
            profile=u,
            lagrange=lagrange_multiplier(params, rho),
            el_residual=el_residual(params, grid, u, rho, opts.eps_reg),
            balance_residual=balance,
            iterations=iterations,
            energy_trace=monitor.trace,
            converged=converged,
            breakdown=breakdown,
            stop_reason=reason,
            correlation_id=cid,
        )
        log = logger.info if converged else logger.warning
        log("Minimization finished", extra={"context": {
            "rho": rho, "c_sharp": result.c_sharp, "converged": converged, "stop_reason": reason,
            "el_residual": result.el_residual, "balance_residual": balance, **monitor.summary()}})
    return result


def el_residual(
    params: CknParams,
    grid: RadialGrid,
    u: RadialFunction,
    rho: float,
    eps_reg: float = 1e-8,
) -> Optional[float]:
    """
    Discrete weak-form residual of the Euler-Lagrange equation tested against hat
    functions, at the multiplier implied by rho. Returns None when q <= 1 or r <= 1.

    The nodal residual is measured in the dual norm of the secant operator at u and
    divided by the same norm of the left-hand side, so nodes carrying large radial
    weights count in proportion to their stiffness rather than their raw size.

    Raises:
        ConstraintViolationException: if |u|_{r,s} differs from 1 by more than 1e-8.
    """
    if u.grid != grid:
        raise GridException("profile lives on a different grid", "u")
    r_norm = weighted_lq(u, params.r, params.s) ** (1.0 / params.r)
    if abs(r_norm - 1.0) > CONSTRAINT_TOLERANCE:
        raise ConstraintViolationException(f"profile is off the constraint manifold (r_norm={r_norm!r})", r_norm)
    if params.q <= 1 or params.r <= 1:
        logger.info("Euler-Lagrange residual skipped for q<=1 or r<=1")
        return None

    lam = derive_exponents(params).lambda_star
    multiplier = lagrange_multiplier(params, rho)
    stiffness = gradient_grad_energy(u, params.p, params.mu, eps_reg)
    q_part = lam * gradient_weighted_lq(u, params.q, params.sigma)
    r_part = (multiplier / params.r) * gradient_weighted_lq(u, params.r, params.s)
    lhs = stiffness + q_part
    residual = lhs - r_part

    ab = secant_operator(u, params.p, params.mu, params.q, params.sigma, lam * params.q, eps_reg)
    try:
        return dual_norm_ratio(ab, residual[1:-1], lhs[1:-1])
    except (LinAlgError, ValueError) as e:
        raise DomainArgumentException(f"secant operator at u is not positive definite ({e})", "u")


def inequality_ratio(params: CknParams, u: RadialFunction, a: Optional[float] = None) -> float:
    """
    |u|_{r,s} / (||u||^a |u|_{q,sigma}^{1-a}), evaluated in log space.
    """
    if a is None:
        a = derive_exponents(params).a
    A = grad_energy(u, params.p, params.mu)
    B = weighted_lq(u, params.q, params.sigma)
    R = weighted_lq(u, params.r, params.s)
    if not (A > 0 and B > 0 and R > 0):
        raise DomainArgumentException("ratio undefined for the zero profile", "u")
    return math.exp(math.log(R) / params.r - a * math.log(A) / params.p - (1.0 - a) * math.log(B) / params.q)


def sample_profiles(grid: RadialGrid, n_samples: int, seed: int = 0) -> List[RadialFunction]:
    """
    Seeded positive test family: sums of one to three components drawn from Gaussian
    bumps in tau, Gaussians in |x| and power laws with a Gaussian cutoff.
    """
    rng = np.random.default_rng(seed)
    tau = np.asarray(grid.tau)
    radius = np.exp(tau)
    profiles = []
    for _ in range(n_samples):
        values = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            kind = int(rng.integers(3))
            amplitude = rng.uniform(0.2, 2.0)
            if kind == 0:
                center, width = rng.uniform(-4.0, 4.0), rng.uniform(0.5, 3.0)
                values += amplitude * np.exp(-((tau - center) / width) ** 2)
            elif kind == 1:
                length = math.exp(rng.uniform(-3.0, 3.0))
                values += amplitude * np.exp(-(radius / length) ** 2)
            else:
                length = math.exp(rng.uniform(-3.0, 3.0))
                power, decay = rng.uniform(1.0, 3.0), rng.uniform(0.5, 2.0)
                cutoff = length * math.exp(rng.uniform(2.0, 5.0))
                values += amplitude * (1.0 + (radius / length) ** power) ** (-decay) \
                    * np.exp(-(radius / cutoff) ** 2)
        profiles.append(RadialFunction.from_values(grid, values))
    return profiles


def verify_inequality(
    params: CknParams,
    C: float,
    n_samples: int = 500,
    seed: int = 0,
    grid: Optional[RadialGrid] = None,
    tol: float = 1e-3,
    witnesses: Sequence[RadialFunction] = (),
) -> VerifyReport:
    """
    Count sampled profiles whose ratio exceeds C(1 + tol).

    Args:
        witnesses: extra profiles checked alongside the sampled family (e.g. a minimizer).
    """
    if not C > 0:
        raise DomainArgumentException(f"candidate constant must be > 0, got {C!r}", "C")
    a = derive_exponents(params).a
    grid = grid or build_grid(-12.0, 12.0, 2401, params.N)
    profiles = sample_profiles(grid, n_samples, seed) + list(witnesses)
    ratios = np.array([inequality_ratio(params, u, a) for u in profiles])
    violations = int(np.sum(ratios > C * (1.0 + tol)))
    report = VerifyReport(
        worst_ratio=float(ratios.max()) if ratios.size else 0.0,
        violations=violations,
        samples=len(profiles),
        C=C,
        tol=tol,
    )
    logger.info("Inequality verification finished", extra={"context": report.to_dict()})
    return report


def first_eigenvalue(
    N: int,
    p: float,
    q: float,
    mu: float,
    sigma: float,
    ball_radius: float = 1.0,
    grid_n: int = 2001,
    opts: Optional[SolverOptions] = None,
    initial: Optional[RadialFunction] = None,
    tau_min: float = -12.0,
    solid_angle: Union[float, str] = FULL_SPHERE,
    correlation_id: Optional[str] = None,
) -> EigenResult:
    """
    min int |grad u|^p / |x|^mu subject to int |u|^q / |x|^sigma = 1 on the ball,
    Dirichlet at the boundary sphere.

    Raises:
        ParameterValidationException: if the eigenproblem hypotheses fail.
    """
    report = validate_eigen(N, p, q, mu, sigma)
    if not report.valid:
        raise ParameterValidationException(
            f"Parameters fail eigenproblem hypotheses: {', '.join(report.failed)}", report.failed
        )
    grid = build_ball_grid(N, ball_radius, grid_n, tau_min, solid_angle)
    _check_initial(initial, grid)
    opts = opts or SolverOptions.from_config()

    with correlation_scope(correlation_id) as cid:
        problem = _DescentProblem(
            label="first_eigenvalue",
            energy=lambda v: grad_energy(v, p, mu),
            energy_gradient=lambda v: gradient_grad_energy(v, p, mu, opts.eps_reg),
            constraint_exponent=q,
            constraint_weight=sigma,
            p=p,
            mu=mu,
        )
        monitor = ConvergenceMonitor(
            MonitorConfig(opts.log_every, opts.stall_window, opts.tol_energy), label="first_eigenvalue"
        )
        start = initial if initial is not None else gaussian_profile(grid, center=min(0.0, grid.tau_max - 2.0))
        u, iterations, converged, reason = _descend(problem, problem.normalize(start), opts, monitor)

        phi1 = problem.normalize(abs(u))
        lambda1 = grad_energy(phi1, p, mu)
        logger.info("Eigenvalue solve finished", extra={"context": {
            "lambda1": lambda1, "converged": converged, "stop_reason": reason, **monitor.summary()}})
    return EigenResult(
        lambda1=lambda1,
        phi1=phi1,
        iterations=iterations,
        converged=converged,
        energy_trace=monitor.trace,
        constraint=weighted_lq(phi1, q, sigma),
        stop_reason=reason,
        correlation_id=cid,
    )


def radial_dirichlet_eigenvalue(N: int, mu: float, sigma: float, ball_radius: float = 1.0, n: int = 20001) -> float:
    """
    Smallest eigenvalue of -(r^{N-1-mu} u')' = lambda r^{N-1-sigma} u on (0, R), u(R) = 0,
    by finite volumes on r_i = i h and a symmetric tridiagonal eigensolve.
    """
    if not ball_radius > 0:
        raise DomainArgumentException(f"ball radius must be > 0, got {ball_radius!r}", "ball_radius")
    if n < 3:
        raise GridException(f"need at least 3 nodes, got {n!r}", "n")
    if not (N - sigma > 0 and N - mu > 0):
        raise DegenerateParametersException("weights are not integrable at the origin", "N-sigma")

    h = ball_radius / (n - 1)
    faces = h * (np.arange(n - 1) + 0.5)
    volume_power = N - sigma
    outer = faces ** volume_power / volume_power
    inner = np.concatenate(([0.0], outer[:-1]))
    mass = outer - inner
    flux = faces ** (N - 1 - mu) / h

    diag = (np.concatenate(([0.0], flux[:-1])) + flux) / mass
    off = -flux[:-1] / np.sqrt(mass[:-1] * mass[1:])
    eigenvalues = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    return float(eigenvalues[0])


def eigen_solution_energy(p: float, q: float, lam: float, lambda1: float) -> Tuple[float, float]:
    """
    For q != p the multiple v = t phi1 with t = (lam/lambda1)^{1/(p-q)} solves the
    eigen equation at level lam; returns (t, (1/p - 1/q) lam^{p/(p-q)} lambda1^{q/(q-p)}).
    """
    if p == q:
        raise DegenerateParametersException("homogeneous case q = p has no scaling solution", "p-q")
    for name, value in (("lambda", lam), ("lambda1", lambda1)):
        if not value > 0:
            raise DomainArgumentException(f"{name} must be > 0, got {value!r}", name)
    t = math.exp(math.log(lam / lambda1) / (p - q))
    energy = (1.0 / p - 1.0 / q) * math.exp(p / (p - q) * math.log(lam) + q / (q - p) * math.log(lambda1))
    return t, energy


def _grid_for(params: CknParams, grid: RadialGrid) -> RadialGrid:
    if grid.N == params.N:
        return grid
    full = math.isclose(grid.solid_angle, sphere_measure(grid.N), rel_tol=1e-12)
    return build_grid(grid.tau_min, grid.tau_max, grid.n, params.N, FULL_SPHERE if full else grid.solid_angle)


def parameter_sweep(
    params_list: Sequence[Union[CknParams, Mapping[str, Any]]],
    grid: RadialGrid,
    opts: Optional[SolverOptions] = None,
    workers: int = DEFAULT_SWEEP_WORKERS,
) -> List[SweepOutcome]:
    """
    One independent minimize_rho per tuple on a thread pool. Failures are recorded on
    the outcome instead of aborting the sweep; outcomes come back in input order.
    """
    if not params_list:
        return []
    opts = opts or SolverOptions.from_config()

    def run_one(index: int, raw: Union[CknParams, Mapping[str, Any]]) -> SweepOutcome:
        if isinstance(raw, CknParams):
            params, described = raw, raw.as_dict()
        else:
            described = dict(raw) if isinstance(raw, Mapping) else {"raw": repr(raw)}
            try:
                params = CknParams(**described)
            except (ValueError, TypeError) as e:
                logger.warning("Sweep tuple rejected", extra={"context": {"index": index, "error": str(e)}})
                return SweepOutcome(index, described, None, f"{type(e).__name__}: {e}")
        try:
            return SweepOutcome(index, described, minimize_rho(params, _grid_for(params, grid), opts))
        except (BaseToolkitException, ValueError) as e:
            return SweepOutcome(index, described, None, f"{type(e).__name__}: {e}")

    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(params_list)))) as executor:
        futures = [executor.submit(run_one, i, raw) for i, raw in enumerate(params_list)]
        outcomes = [future.result() for future in futures]

    logger.info("Sweep finished", extra={"context": {
        "tuples": len(outcomes), "failed": sum(1 for o in outcomes if not o.ok)}})
    return outcomes
