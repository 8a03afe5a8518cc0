import math

import numpy as np
import pytest

from src.config.settings import BaseConfig
from src.core.exponents import CknParams, derive_exponents
from src.core.radial import (
    RadialFunction,
    build_ball_grid,
    build_grid,
    gradient_grad_energy,
    gradient_weighted_lq,
    i_star,
    normalize,
    scale,
)
from src.core.solver import (
    MINIMIZER_LABEL,
    SolverOptions,
    el_residual,
    eigen_solution_energy,
    first_eigenvalue,
    gaussian_profile,
    inequality_ratio,
    minimize_rho,
    parameter_sweep,
    radial_dirichlet_eigenvalue,
    sample_profiles,
    secant_operator,
    verify_inequality,
)
from src.utils.exceptions import (
    ConstraintViolationException,
    DegenerateParametersException,
    DomainArgumentException,
    GridException,
    ParameterValidationException,
)

REFERENCE = dict(N=3, p=2.0, q=2.0, r=3.0, mu=0.0, sigma=0.0, s=1.0)

EL_TOLERANCE = 1e-6
# The Dirichlet cut at tau = -12 meets the profile while it is still O(1); the balance
# gap from that cut does not shrink with h. Widening the window to +-16 removes it.
TRUNCATED_BALANCE = 1e-4
WIDE_BALANCE = 1e-5
RATIO_TOLERANCE = 1e-3


@pytest.fixture(scope="module")
def solved():
    """One converged reference solve shared by the read-only checks below."""
    params = CknParams(**REFERENCE)
    grid = build_grid(-12.0, 12.0, 2401, 3)
    return minimize_rho(params, grid, SolverOptions())


def apply_banded(ab: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Product of the symmetric operator in upper banded storage with v."""
    out = ab[1] * v
    out[:-1] += ab[0, 1:] * v[1:]
    out[1:] += ab[0, 1:] * v[:-1]
    return out


class TestSolverOptions:
    def test_defaults(self):
        opts = SolverOptions()
        assert opts.max_iters == 50000
        assert opts.tol_grad == 1e-8
        assert opts.rescale_every == 5

    def test_from_config_overrides(self):
        opts = SolverOptions.from_config(BaseConfig(), max_iters=7, step0=None)
        assert opts.max_iters == 7
        assert opts.step0 == 1.0

    @pytest.mark.parametrize("field, value", [("max_iters", 0), ("armijo_c", 1.5), ("armijo_shrink", 0.0)])
    def test_invalid_options_rejected(self, field, value):
        with pytest.raises(ValueError):
            SolverOptions(**{field: value})


@pytest.mark.slow
class TestReferenceMinimization:
    def test_converges(self, solved):
        assert solved.converged, f"stopped on {solved.stop_reason} after {solved.iterations} iterations"
        assert solved.stop_reason in {"gradient", "energy", "line_search"}
        assert solved.label == MINIMIZER_LABEL

    def test_trace_is_monotone_and_ends_at_rho(self, solved):
        trace = np.asarray(solved.energy_trace)
        assert len(trace) == solved.iterations + 1
        assert np.all(np.diff(trace) <= 0.0), "accepted iterates must never raise the energy"
        assert solved.rho == trace[-1]
        assert solved.rho == solved.breakdown.i_star

    def test_profile_is_on_the_constraint(self, solved):
        assert np.all(solved.profile.values >= 0.0)
        assert solved.breakdown.r_norm == pytest.approx(1.0, abs=1e-12)

    def test_closed_form_companions(self, solved):
        assert solved.lagrange == pytest.approx(2.0 * solved.rho, rel=1e-12)
        assert solved.c_sharp == pytest.approx(solved.rho ** -0.5, rel=1e-12)

    def test_scaling_balance(self, solved):
        assert solved.balance_residual < TRUNCATED_BALANCE

    def test_euler_lagrange_residual(self, solved):
        assert solved.el_residual is not None
        assert solved.el_residual < EL_TOLERANCE
        recomputed = el_residual(solved.params, solved.profile.grid, solved.profile, solved.rho)
        assert recomputed == pytest.approx(solved.el_residual, rel=1e-6)

    def test_multiplier_identity(self, solved):
        # testing the Euler-Lagrange equation against u itself: pA + q lambda* B = lambda~ |u|_{r,s}^r
        b = solved.breakdown
        p, q = solved.params.p, solved.params.q
        assert p * b.grad_term + q * b.lam * b.q_term == pytest.approx(solved.lagrange, rel=1e-9)

    def test_wide_window_meets_the_balance_target(self, solved):
        wide = minimize_rho(solved.params, build_grid(-16.0, 16.0, 2401, 3), SolverOptions())
        assert wide.converged, wide.stop_reason
        assert wide.balance_residual < WIDE_BALANCE
        assert wide.el_residual < EL_TOLERANCE
        assert wide.balance_residual < solved.balance_residual

    def test_refinement_is_monotone_and_cauchy(self, solved):
        rhos = []
        for n in (301, 601, 1201):
            result = minimize_rho(solved.params, build_grid(-12.0, 12.0, n, 3), SolverOptions())
            assert result.converged, (n, result.stop_reason)
            rhos.append(result.rho)
        rhos.append(solved.rho)

        steps = np.diff(rhos)
        assert np.all(steps < 0) or np.all(steps > 0), rhos
        gaps = np.abs(steps)
        assert np.all(gaps[1:] <= 0.5 * gaps[:-1]), gaps
        assert rhos[-2] == pytest.approx(rhos[-1], rel=1e-2)

    def test_minimum_beats_a_scaled_gaussian(self, solved):
        params = solved.params
        lam = derive_exponents(params).lambda_star
        for width in (0.5, 1.0, 2.0, 4.0):
            trial = normalize(gaussian_profile(solved.profile.grid, width=width), params)
            assert i_star(trial, params, lam).i_star >= solved.rho

    def test_sampled_ratios_stay_below_the_sharp_constant(self, solved):
        report = verify_inequality(solved.params, solved.c_sharp, n_samples=500, seed=0,
                                   grid=solved.profile.grid, witnesses=[solved.profile])
        assert report.violations == 0, f"worst ratio {report.worst_ratio} vs C={solved.c_sharp}"
        assert report.samples == 501
        assert report.worst_ratio == pytest.approx(solved.c_sharp, rel=RATIO_TOLERANCE)

    def test_halved_constant_is_violated(self, solved):
        report = verify_inequality(solved.params, 0.5 * solved.c_sharp, n_samples=50, seed=0,
                                   grid=solved.profile.grid, witnesses=[solved.profile])
        assert report.violations >= 1


class TestMinimizationInputs:
    def test_deterministic(self, reference_params, coarse_grid):
        opts = SolverOptions(max_iters=300)
        first = minimize_rho(reference_params, coarse_grid, opts)
        second = minimize_rho(reference_params, coarse_grid, opts)
        assert first.rho == second.rho
        assert np.array_equal(first.profile.values, second.profile.values)

    def test_zero_target_weight_rejected(self, reference_params, coarse_grid):
        with pytest.raises(ParameterValidationException) as excinfo:
            minimize_rho(reference_params.model_copy(update={"s": 0.0}), coarse_grid)
        assert "s>0" in excinfo.value.failed_checks

    def test_grid_dimension_must_match(self, reference_params):
        with pytest.raises(GridException):
            minimize_rho(reference_params, build_grid(-12.0, 12.0, 601, 4))

    def test_initial_profile_grid_must_match(self, reference_params, coarse_grid, bump):
        with pytest.raises(GridException):
            minimize_rho(reference_params, coarse_grid, SolverOptions(max_iters=5), initial=bump)

    def test_correlation_id_is_recorded(self, reference_params, coarse_grid):
        result = minimize_rho(reference_params, coarse_grid, SolverOptions(max_iters=3), correlation_id="run-42")
        assert result.correlation_id == "run-42"


class TestStoppingRules:
    def test_energy_stall_without_stationarity_is_not_converged(self, reference_params, coarse_grid):
        # every window counts as stalled; only stationarity may end the run early
        opts = SolverOptions(max_iters=3, tol_energy=1e3, stall_window=1)
        result = minimize_rho(reference_params, coarse_grid, opts)
        assert not result.converged
        assert result.stop_reason == "max_iters"
        assert result.iterations == 3

    @pytest.mark.slow
    def test_converged_runs_are_stationary(self):
        params = CknParams(N=4, p=2.5, q=2.5, r=3, mu=0, sigma=0, s=1)
        result = minimize_rho(params, build_grid(-12.0, 12.0, 601, 4), SolverOptions(max_iters=5000))
        if result.converged:
            assert result.el_residual < 1e-5, (result.stop_reason, result.el_residual)
        else:
            assert result.stop_reason in {"max_iters", "line_search"}


class TestSecantOperator:
    @pytest.mark.parametrize("p, q", [(1.5, 1.5), (2.0, 3.0), (2.5, 2.5), (3.0, 1.5)])
    def test_reproduces_the_gradient(self, small_grid, p, q):
        u = RadialFunction.from_callable(small_grid, lambda tau: np.exp(-tau ** 2) * (1.0 - (tau / 3.0) ** 2))
        lam, eps = 0.2, 1e-8
        ab = secant_operator(u, p, 0.0, q, 0.0, lam * q, eps)
        expected = gradient_grad_energy(u, p, 0.0, eps) + lam * gradient_weighted_lq(u, q, 0.0)
        applied = apply_banded(ab, u.values[1:-1])
        np.testing.assert_allclose(applied, expected[1:-1], rtol=1e-6, atol=1e-10 * np.abs(expected).max())

    def test_linear_mass_term_is_left_out(self, small_grid):
        u = RadialFunction.from_callable(small_grid, lambda tau: np.exp(-tau ** 2))
        with_mass = secant_operator(u, 2.0, 0.0, 1.0, 0.0, 0.5)
        without = secant_operator(u, 2.0, 0.0)
        assert np.array_equal(with_mass, without)

    def test_operator_is_positive_definite_on_flat_profiles(self, small_grid):
        flat = RadialFunction.from_values(small_grid, np.ones(small_grid.n))
        for p in (1.5, 3.0):
            ab = secant_operator(flat, p, 0.0, eps_reg=0.0)
            assert np.all(np.isfinite(ab))
            assert np.all(ab[1] > 0.0)


@pytest.mark.slow
class TestNonQuadraticMinimization:
    def test_sublinear_gradient_exponent(self):
        params = CknParams(N=3, p=1.5, q=1.5, r=2, mu=0, sigma=0, s=0.5)
        grid = build_grid(-12.0, 12.0, 1201, 3)
        result = minimize_rho(params, grid, SolverOptions())
        assert result.converged, (result.stop_reason, result.iterations)
        assert result.el_residual < 1e-5

        report = verify_inequality(params, result.c_sharp, n_samples=100, seed=0, grid=grid,
                                   witnesses=[result.profile])
        assert report.violations == 0, f"worst ratio {report.worst_ratio} vs C={result.c_sharp}"

    def test_linear_interpolation_term(self):
        params = CknParams(N=3, p=2, q=1, r=3, mu=0, sigma=0, s=1)
        grid = build_grid(-12.0, 12.0, 1201, 3)
        result = minimize_rho(params, grid, SolverOptions())
        assert result.converged, (result.stop_reason, result.iterations)
        assert result.el_skipped
        # the |u| mass term gives the minimizer compact support
        assert np.count_nonzero(result.profile.values[1:-1] == 0.0) > 0

        report = verify_inequality(params, result.c_sharp, n_samples=100, seed=0, grid=grid,
                                   witnesses=[result.profile])
        assert report.violations == 0, f"worst ratio {report.worst_ratio} vs C={result.c_sharp}"

    def test_multiplier_identity_with_distinct_exponents(self):
        # for p != q the identity pA + q lambda* B = lambda~ only holds at the optimal dilation
        params = CknParams(N=3, p=2, q=3, r=3, mu=0, sigma=0, s=1)
        result = minimize_rho(params, build_grid(-16.0, 16.0, 2401, 3), SolverOptions())
        assert result.converged, result.stop_reason
        assert result.balance_residual < 1e-3

        b = result.breakdown
        tested = params.p * b.grad_term + params.q * b.lam * b.q_term
        assert tested == pytest.approx(result.lagrange, rel=1e-4)
        assert result.lagrange == pytest.approx(2.25 * result.rho, rel=1e-12)


class TestEulerLagrangeResidual:
    def test_non_stationary_profile(self, reference_params, bump):
        u = normalize(bump, reference_params)
        lam = derive_exponents(reference_params).lambda_star
        rho = i_star(u, reference_params, lam).i_star
        assert el_residual(reference_params, bump.grid, u, rho) > 1e-2

    def test_rejects_profiles_off_the_constraint(self, reference_params, bump):
        doubled = 2.0 * normalize(bump, reference_params)
        with pytest.raises(ConstraintViolationException):
            el_residual(reference_params, bump.grid, doubled, 1.0)

    def test_skipped_for_linear_interpolation_term(self, bump):
        params = CknParams(N=3, p=2, q=1, r=3, mu=0, sigma=0, s=1)
        assert el_residual(params, bump.grid, normalize(bump, params), 1.0) is None

    def test_rejects_foreign_grid(self, reference_params, bump, coarse_grid):
        with pytest.raises(GridException):
            el_residual(reference_params, coarse_grid, normalize(bump, reference_params), 1.0)


class TestInequalityRatio:
    @pytest.mark.parametrize("t", [0.5, 0.7, 1.5, 2.0])
    def test_scale_invariant(self, bump, reference_params, t):
        before = inequality_ratio(reference_params, bump)
        after = inequality_ratio(reference_params, scale(bump, t, reference_params))
        assert after == pytest.approx(before, rel=1e-4)

    def test_amplitude_invariant(self, bump, reference_params):
        assert inequality_ratio(reference_params, 3.0 * bump) == pytest.approx(
            inequality_ratio(reference_params, bump), rel=1e-13)

    def test_zero_profile_rejected(self, reference_grid, reference_params):
        with pytest.raises(DomainArgumentException):
            inequality_ratio(reference_params, RadialFunction.zeros(reference_grid))

    def test_sample_family_is_seeded(self, coarse_grid):
        first = sample_profiles(coarse_grid, 20, seed=5)
        again = sample_profiles(coarse_grid, 20, seed=5)
        other = sample_profiles(coarse_grid, 20, seed=6)
        assert len(first) == 20
        assert all(np.array_equal(a.values, b.values) for a, b in zip(first, again))
        assert not all(np.array_equal(a.values, b.values) for a, b in zip(first, other))
        assert all(np.all(u.values >= 0.0) and np.any(u.values > 0.0) for u in first)

    def test_verify_requires_positive_constant(self, reference_params):
        with pytest.raises(DomainArgumentException):
            verify_inequality(reference_params, 0.0, n_samples=1)


class TestFirstEigenvalue:
    @pytest.mark.slow
    def test_unit_ball_laplacian(self):
        result = first_eigenvalue(3, 2.0, 2.0, 0.0, 0.0, ball_radius=1.0, grid_n=2001)
        assert result.converged, result.stop_reason
        assert result.lambda1 == pytest.approx(math.pi ** 2, rel=1e-2)
        assert result.lambda1 == pytest.approx(radial_dirichlet_eigenvalue(3, 0.0, 0.0), rel=1e-2)
        assert result.constraint == pytest.approx(1.0, rel=1e-12)
        assert np.all(result.phi1.values >= 0.0)

    def test_weight_lowers_the_eigenvalue(self):
        plain = first_eigenvalue(3, 2.0, 2.0, 0.0, 0.0, grid_n=801)
        weighted = first_eigenvalue(3, 2.0, 2.0, 0.0, 0.5, grid_n=801)
        assert weighted.lambda1 < plain.lambda1
        assert weighted.lambda1 == pytest.approx(radial_dirichlet_eigenvalue(3, 0.0, 0.5), rel=1e-2)

    def test_initial_amplitude_is_irrelevant(self):
        grid = build_ball_grid(3, 1.0, 801)
        start = RadialFunction.from_callable(grid, lambda tau: np.exp(-(tau + 1.0) ** 2))
        once = first_eigenvalue(3, 2.0, 2.0, 0.0, 0.0, grid_n=801, initial=start)
        scaled = first_eigenvalue(3, 2.0, 2.0, 0.0, 0.0, grid_n=801, initial=5.0 * start)
        assert scaled.lambda1 == pytest.approx(once.lambda1, rel=1e-8)

    def test_invalid_hypotheses_rejected(self):
        with pytest.raises(ParameterValidationException) as excinfo:
            first_eigenvalue(3, 2.0, 6.0, 0.0, 0.0)
        assert "q<p*" in excinfo.value.failed_checks


class TestEigenOracle:
    def test_unit_ball_3d(self):
        assert radial_dirichlet_eigenvalue(3, 0.0, 0.0) == pytest.approx(math.pi ** 2, rel=1e-6)

    def test_unit_disk(self):
        # square of the first zero of J0
        assert radial_dirichlet_eigenvalue(2, 0.0, 0.0) == pytest.approx(5.783185962946784, rel=1e-5)

    def test_radius_scaling(self):
        unit = radial_dirichlet_eigenvalue(3, 0.0, 0.0, n=2001)
        double = radial_dirichlet_eigenvalue(3, 0.0, 0.0, ball_radius=2.0, n=2001)
        assert double == pytest.approx(unit / 4.0, rel=1e-8)

    def test_bad_arguments(self):
        with pytest.raises(DomainArgumentException):
            radial_dirichlet_eigenvalue(3, 0.0, 0.0, ball_radius=0.0)
        with pytest.raises(GridException):
            radial_dirichlet_eigenvalue(3, 0.0, 0.0, n=2)
        with pytest.raises(DegenerateParametersException):
            radial_dirichlet_eigenvalue(3, 0.0, 3.0)


class TestEigenSolutionEnergy:
    def test_closed_form(self):
        t, energy = eigen_solution_energy(2.0, 3.0, 2.0, 4.0)
        assert t == pytest.approx(2.0, rel=1e-14)
        assert energy == pytest.approx(8.0 / 3.0, rel=1e-14)

    def test_homogeneous_case_rejected(self):
        with pytest.raises(DegenerateParametersException):
            eigen_solution_energy(2.0, 2.0, 1.0, 1.0)

    @pytest.mark.parametrize("lam, lambda1", [(0.0, 1.0), (1.0, -1.0)])
    def test_levels_must_be_positive(self, lam, lambda1):
        with pytest.raises(DomainArgumentException):
            eigen_solution_energy(2.0, 3.0, lam, lambda1)


class TestParameterSweep:
    def test_empty_sweep(self, coarse_grid):
        assert parameter_sweep([], coarse_grid) == []

    def test_rows_keep_input_order_and_record_failures(self, coarse_grid):
        opts = SolverOptions(max_iters=200)
        rows = [
            dict(REFERENCE, s=0.5),
            dict(REFERENCE, s=1.5),
            {"N": 3, "p": 0.5},
            CknParams(**REFERENCE),
        ]
        outcomes = parameter_sweep(rows, coarse_grid, opts, workers=3)

        assert [o.index for o in outcomes] == [0, 1, 2, 3]
        assert [o.ok for o in outcomes] == [True, False, False, True]
        assert outcomes[1].error.startswith("ParameterValidationException")
        assert "r<min(p*,p*(s,mu))" in outcomes[1].error
        assert outcomes[2].error.startswith("ValidationError")
        assert outcomes[0].params["s"] == 0.5
        assert outcomes[3].params == REFERENCE

        direct = minimize_rho(CknParams(**REFERENCE), coarse_grid, opts)
        assert outcomes[3].result.rho == direct.rho

    def test_dimension_follows_the_tuple(self, coarse_grid):
        outcome = parameter_sweep([dict(N=4, p=2, q=2, r=2.5, mu=0, sigma=0, s=1)], coarse_grid,
                                  SolverOptions(max_iters=50))[0]
        assert outcome.ok, outcome.error
        assert outcome.result.profile.grid.N == 4
        assert outcome.result.profile.grid.solid_angle == pytest.approx(2 * math.pi ** 2)
