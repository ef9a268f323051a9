import numpy as np
import pytest

from app.core.exceptions import ConfigurationError, PreconditionError
from app.models.dataset import DataSet
from app.models.program import AffineRowGenerator, ProblemTemplate
from app.services import dda
from app.services.analysis import experiments, instances
from app.services.analysis.common import bound_respected, parse_sweep, run_trials, trial_rng
from app.services.analysis.omega import verify_omega_monotone
from app.services.analysis.scenario import estimate_cc_feasibility
from app.services.analysis.sensitivity import (
    ImplicitSystem, compute_sensitivity, estimate_phi_bound, fd_jacobian,
)
from app.services.analysis.varrho import verify_varrho, verify_varrho_sweep


@pytest.fixture(scope="module")
def planted():
    return instances.planted_floor_instance(500, 50, seed=0)


class TestVarrho:
    def test_full_sample_always_keeps_the_optimum(self, planted):
        tmpl, data = planted
        result = verify_varrho(tmpl, data, 0.05, 1000, z=500, b_bar=1, trials=5, seed=1)
        assert result.observed == 1.0
        assert result.bound == 1.0
        assert result.verdict
        assert result.parameters["boundary_points"] == 1.0

    def test_observed_frequency_respects_the_bound(self, planted):
        tmpl, data = planted
        result = verify_varrho(tmpl, data, 0.05, 1000, z=20, b_bar=1, trials=400, seed=2)
        assert 0.8 < result.bound < 0.95
        assert result.verdict
        assert result.failures == 0
        assert result.note is None

    def test_resolve_method(self, planted):
        tmpl, data = planted
        result = verify_varrho(tmpl, data, 0.05, 1000, z=40, b_bar=1, trials=30, seed=3, method="resolve",
                               check_planting=False)
        assert result.failures == 0
        assert result.verdict

    def test_sweep(self, planted):
        tmpl, data = planted
        report = verify_varrho_sweep(tmpl, data, 0.05, 1000, [1, 10, 50], b_bar=1, trials=100, seed=4)
        assert [int(e.parameters["z"]) for e in report.experiments] == [1, 10, 50]
        assert report.all_respected
        assert not report.assumption_violated

    def test_underestimated_boundary_count_is_flagged(self):
        tmpl, data = instances.planted_corner_instance(400, 40, seed=0)
        result = verify_varrho(tmpl, data, 0.05, 800, z=100, b_bar=1, trials=20, seed=5)
        assert result.parameters["boundary_points"] == 2.0
        assert result.note.startswith("assumption violated")

    def test_too_few_copies(self):
        tmpl, data = instances.planted_floor_instance(500, 10, seed=0)
        with pytest.raises(PreconditionError):
            verify_varrho(tmpl, data, 0.05, 1000, z=20, b_bar=1, trials=5, seed=0)

    def test_unknown_method(self, planted):
        tmpl, data = planted
        with pytest.raises(ConfigurationError):
            verify_varrho(tmpl, data, 0.05, 1000, z=20, b_bar=1, trials=5, seed=0, method="guess")

    def test_default_experiment(self):
        report = experiments.varrho_experiment(trials=50, seed=0, zs=[5, 60])
        assert len(report.experiments) == 2
        assert report.all_respected


class TestSensitivity:
    @pytest.fixture
    def corner_system(self):
        tmpl = instances.corner_template()
        data = DataSet.from_arrays(real_part=[[1.0, 0.2], [0.2, 1.0], [0.3, 0.3], [0.25, 0.4]])
        optimum = dda.solve_template(tmpl, data)
        boundary = dda.find_boundary_points(tmpl, data, optimum)
        return tmpl, data, optimum, boundary

    @staticmethod
    def analytic_jacobian(x):
        M = np.array([[1.0, 0.2], [0.2, 1.0]])
        M_inv = np.linalg.inv(M)
        return np.column_stack([-M_inv[:, q] * x[c] for q in range(2) for c in range(2)])

    def test_finite_differences_match_the_analytic_map(self, corner_system):
        tmpl, data, optimum, boundary = corner_system
        np.testing.assert_allclose(optimum.x, [5.0 / 6.0, 5.0 / 6.0], atol=1e-6)
        system = ImplicitSystem(tmpl, data, optimum.x, boundary)
        assert system.b_c == 2
        H = fd_jacobian(system, 1e-6)
        np.testing.assert_allclose(H, self.analytic_jacobian(system.solve(system.points)), atol=1e-6)

    @pytest.mark.parametrize("scheme,ratio", [("forward", 2.0), ("central", 4.0)])
    def test_error_shrinks_at_the_scheme_order(self, corner_system, scheme, ratio):
        tmpl, data, optimum, boundary = corner_system
        system = ImplicitSystem(tmpl, data, optimum.x, boundary)
        exact = self.analytic_jacobian(system.solve(system.points))
        coarse = np.abs(fd_jacobian(system, 2e-2, scheme) - exact).max()
        fine = np.abs(fd_jacobian(system, 1e-2, scheme) - exact).max()
        assert coarse / fine == pytest.approx(ratio, rel=0.15)

    def test_zero_radius_gives_exact_accuracy(self, corner_system):
        tmpl, data, optimum, boundary = corner_system
        estimate = estimate_phi_bound(tmpl, data, optimum, boundary, 0.0)
        assert estimate.phi_lower == 1.0
        assert estimate.phi_measured == 1.0
        assert estimate.respected

    def test_bound_is_below_one_for_positive_radius(self, corner_system):
        tmpl, data, optimum, boundary = corner_system
        estimate = estimate_phi_bound(tmpl, data, optimum, boundary, 0.01, second_order=True)
        assert estimate.phi_lower < 1.0
        assert estimate.eta_hat == pytest.approx(2.0 * np.sqrt(2.0) * 0.01)
        assert estimate.phi_lower_second_order <= estimate.phi_lower

    def test_interior_optimum_has_no_square_system(self):
        generator = AffineRowGenerator(G0=[[1.0]], G_coeffs=[np.zeros((1, 1))], h0=[0.0], H=[[1.0]])
        tmpl = ProblemTemplate(Q=2.0 * np.eye(1), c=np.zeros(1), generator=generator, point_dims=(0, 1))
        data = DataSet.from_arrays(real_part=[[1.0], [2.0]])
        optimum = dda.solve_template(tmpl, data)
        boundary = dda.find_boundary_points(tmpl, data, optimum)
        assert boundary.b_z == 0
        with pytest.raises(PreconditionError):
            compute_sensitivity(tmpl, data, optimum, boundary)

    def test_most_instances_respect_the_bound(self):
        report = experiments.phi_experiment([0.01], instance_count=20, seed=0)
        assert report.instances == 20
        assert report.respected_count >= 18


class TestOmega:
    def test_single_radius(self):
        data = instances.corner_cloud(120, seed=1)
        report = verify_omega_monotone(instances.corner_template(), data, 40, [0.05], trials=5, seed=0)
        assert len(report.points) == 1
        assert report.monotone

    def test_pure_integer_thinning_never_moves_the_optimum(self):
        data = instances.integer_corner_data(60, seed=0)
        report = verify_omega_monotone(instances.integer_corner_template(), data, 30, [0.1, 0.5],
                                       trials=10, seed=0)
        assert all(p.frequency == 1.0 for p in report.points)

    def test_frequency_does_not_rise_with_radius(self):
        report = experiments.omega_experiment([0.01, 0.2], trials=40, seed=0)
        assert report.monotone
        assert report.violations == []

    def test_empty_grid(self):
        data = instances.corner_cloud(20, seed=1)
        with pytest.raises(ConfigurationError):
            verify_omega_monotone(instances.corner_template(), data, 10, [], trials=2, seed=0)


class TestScenario:
    def test_small_samples_usually_contain_the_proxy_set(self):
        small, large = experiments.scenario_experiment(alpha=0.05, trials=20, seed=0, probes=500)
        assert (small.N, large.N) == (1, 200)
        assert small.regime == "N<=1/alpha"
        assert large.regime == "N>1/alpha"
        assert small.inclusion_frequency > large.inclusion_frequency
        assert small.scenario_sample_size == 178

    def test_membership_oracle(self):
        tmpl = instances.threshold_template()
        sampler = instances.gaussian_sampler()
        inside = estimate_cc_feasibility(tmpl, np.array([-3.0]), sampler, draws=20000, seed=0)
        outside = estimate_cc_feasibility(tmpl, np.array([0.0]), sampler, draws=20000, seed=0)
        assert inside.member
        assert not outside.member
        assert outside.lower <= outside.probability <= outside.upper
        assert outside.probability == pytest.approx(0.5, abs=0.02)


def test_scaling_slope_tracks_the_dimension():
    report = experiments.scaling_experiment([0.02, 0.03, 0.04, 0.06], seeds=2, seed=0)
    assert report.dimension == 2
    assert report.monotone
    assert 1.5 < report.slope < 2.3


class TestCommon:
    def test_parse_sweep(self):
        assert parse_sweep("0.1:0.3:3") == pytest.approx([0.1, 0.2, 0.3])
        assert parse_sweep("0.5") == [0.5]

    @pytest.mark.parametrize("text", ["a:b", "0:1:x", "0:1:0", "abc"])
    def test_bad_sweep(self, text):
        with pytest.raises(ConfigurationError):
            parse_sweep(text)

    def test_verdict(self):
        assert bound_respected(0.5, 0.6, 10)
        assert not bound_respected(0.0, 1.0, 100)

    def test_trial_streams_do_not_depend_on_scheduling(self):
        serial = run_trials(lambda t: float(trial_rng(9, t).random()), 8, threads=1)
        parallel = run_trials(lambda t: float(trial_rng(9, t).random()), 8, threads=4)
        assert serial == parallel
