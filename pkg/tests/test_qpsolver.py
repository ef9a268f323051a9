import numpy as np
import pandas as pd
import pytest

from app.models.solver import SolveStatus, SolverOptions
from app.services import qpsolver
from tests.oracles import enumerate_active_sets, make_program, random_strictly_convex_qp


@pytest.fixture
def simple_qp():
    # min ½‖x‖² − x1 − x2  s.t.  x1 + x2 <= 1
    return make_program(np.eye(2), [-1.0, -1.0], G=[[1.0, 1.0]], h=[1.0])


class TestStatuses:
    def test_inequality_qp(self, simple_qp):
        result = qpsolver.solve(simple_qp)
        assert result.status == SolveStatus.OPTIMAL
        np.testing.assert_allclose(result.x, [0.5, 0.5], atol=1e-6)
        assert result.objective == pytest.approx(-0.75, abs=1e-6)
        assert result.ineq_duals[0] == pytest.approx(0.5, abs=1e-5)

    def test_equality_qp(self):
        prog = make_program(np.eye(2), [0.0, 0.0], E=[[1.0, 0.0]], b=[1.0])
        result = qpsolver.solve(prog)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [1.0, 0.0], atol=1e-6)
        assert result.objective == pytest.approx(0.5, abs=1e-6)

    def test_linear_program_with_bounds(self):
        prog = make_program(np.zeros((2, 2)), [-1.0, -2.0], G=[[0.0, 1.0], [1.0, 1.0]], h=[1.0, 1.5],
                            lb=[0.0, 0.0])
        result = qpsolver.solve(prog)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [0.5, 1.0], atol=1e-6)
        assert result.objective == pytest.approx(-2.5, abs=1e-6)

    def test_active_bound_multiplier_sign(self):
        # min ½x² − 2x  s.t.  x <= 1: the upper bound carries multiplier 1
        prog = make_program([[1.0]], [-2.0], ub=[1.0])
        result = qpsolver.solve(prog)
        assert result.x[0] == pytest.approx(1.0, abs=1e-6)
        assert result.bound_duals[0] == pytest.approx(1.0, abs=1e-5)

    def test_infeasible(self):
        prog = make_program([[1.0]], [0.0], G=[[1.0], [-1.0]], h=[-1.0, -1.0])
        result = qpsolver.solve(prog)
        assert result.status == SolveStatus.INFEASIBLE
        assert result.certificate in ("dual_ray", "stall")

    def test_unbounded(self):
        prog = make_program([[0.0]], [-1.0], G=[[-1.0]], h=[0.0])
        result = qpsolver.solve(prog)
        assert result.status == SolveStatus.UNBOUNDED
        assert result.certificate == "primal_ray"


def test_matches_active_set_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        Q, c, G, h = random_strictly_convex_qp(rng)
        expected = enumerate_active_sets(Q, c, G, h)
        assert expected is not None
        result = qpsolver.solve(make_program(Q, c, G=G, h=h))
        assert result.is_optimal
        np.testing.assert_allclose(result.x, expected, atol=1e-4)


def test_same_input_same_bits(simple_qp):
    first = qpsolver.solve(simple_qp)
    second = qpsolver.solve(simple_qp)
    assert first.x.tobytes() == second.x.tobytes()
    assert first.iterations == second.iterations


def test_warm_start_reaches_the_same_optimum(simple_qp):
    cold = qpsolver.solve(simple_qp)
    warm = qpsolver.solve(simple_qp, warm_start=cold)
    np.testing.assert_allclose(warm.x, cold.x, atol=1e-8)


def test_sequence_reuses_identical_programs(simple_qp, monkeypatch):
    calls = []
    original = qpsolver.solve

    def counting(prog, options=None, warm_start=None):
        calls.append(prog)
        return original(prog, options, warm_start=warm_start)

    monkeypatch.setattr(qpsolver, "solve", counting)
    other = make_program(np.eye(2), [-1.0, -1.0], G=[[1.0, 1.0]], h=[0.5])
    results = qpsolver.solve_sequence([simple_qp, other, simple_qp])
    assert len(calls) == 2
    assert len(results) == 3
    np.testing.assert_array_equal(results[0].x, results[2].x)


def test_fingerprint_tracks_content(simple_qp):
    same = make_program(np.eye(2), [-1.0, -1.0], G=[[1.0, 1.0]], h=[1.0])
    changed = make_program(np.eye(2), [-1.0, -1.0], G=[[1.0, 1.0]], h=[1.0 + 1e-12])
    assert qpsolver.program_fingerprint(simple_qp) == qpsolver.program_fingerprint(same)
    assert qpsolver.program_fingerprint(simple_qp) != qpsolver.program_fingerprint(changed)


def test_trace_csv(simple_qp, tmp_path):
    result = qpsolver.solve(simple_qp, SolverOptions(record_trace=True))
    path = tmp_path / "trace.csv"
    qpsolver.dump_trace_csv(result, str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["iteration", "primal_residual", "dual_residual", "rho"]
    assert len(frame) == len(result.trace) >= 1
    assert frame["iteration"].is_monotonic_increasing


def feasible_rows(rng: np.random.Generator, n: int, m: int):
    """m random rows G x <= h that one random point satisfies strictly."""
    G = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    return G, G @ x0 + rng.uniform(0.1, 1.0, size=m)


class TestOptimalityHarness:
    @pytest.fixture(params=range(20))
    def instance(self, request):
        return random_strictly_convex_qp(np.random.default_rng(500 + request.param), n=4, m=8)

    def test_kkt_conditions_hold(self, instance):
        Q, c, G, h = instance
        result = qpsolver.solve(make_program(Q, c, G=G, h=h))
        assert result.is_optimal
        lam = result.ineq_duals
        stationarity = Q @ result.x + c + G.T @ lam
        if result.bound_duals is not None:
            stationarity += result.bound_duals
        assert np.max(np.abs(stationarity)) <= 1e-5
        assert np.all(lam >= -1e-8)
        assert np.all(G @ result.x <= h + 1e-6 * (1.0 + np.abs(h)))
        assert np.max(np.abs(lam * (h - G @ result.x))) <= 1e-5

    def test_row_and_column_scaling_leave_the_optimum_unchanged(self, instance):
        Q, c, G, h = instance
        rng = np.random.default_rng(7)
        rows = rng.uniform(0.01, 100.0, size=G.shape[0])
        cols = rng.uniform(0.1, 10.0, size=c.shape[0])
        reference = qpsolver.solve(make_program(Q, c, G=G, h=h))
        # x = S y with S = diag(cols); rows of G scaled by diag(rows)
        S = np.diag(cols)
        scaled = qpsolver.solve(make_program(S @ Q @ S, S @ c, G=(rows[:, None] * G) @ S, h=rows * h))
        assert scaled.is_optimal
        np.testing.assert_allclose(cols * scaled.x, reference.x, atol=1e-5)
        assert scaled.objective == pytest.approx(reference.objective, abs=1e-6)

    @pytest.mark.parametrize("seed", range(10))
    def test_adding_rows_never_lowers_the_minimum(self, seed):
        rng = np.random.default_rng(seed)
        Q, c, _, _ = random_strictly_convex_qp(rng, n=3, m=1)
        G, h = feasible_rows(rng, 3, 10)
        objectives = []
        for k in range(0, 11, 2):
            result = qpsolver.solve(make_program(Q, c, G=G[:k], h=h[:k]))
            assert result.is_optimal
            objectives.append(result.objective)
        for smaller, larger in zip(objectives, objectives[1:]):
            assert larger >= smaller - 1e-7 * (1.0 + abs(smaller))

    @pytest.mark.parametrize("seed", range(5))
    def test_leave_one_out_sequence_matches_cold_solves(self, seed):
        rng = np.random.default_rng(40 + seed)
        Q, c, _, _ = random_strictly_convex_qp(rng, n=3, m=1)
        G, h = feasible_rows(rng, 3, 12)
        prog = make_program(Q, c, G=G, h=h).model_copy(
            update={"provenance": np.arange(12), "rows_per_point": 1, "n_points": 12})
        full = qpsolver.solve(prog)
        reduced = [prog.without_point(j) for j in range(12)]
        warm = qpsolver.solve_sequence(reduced, warm_start=full)
        for program, sequenced in zip(reduced, warm):
            cold = qpsolver.solve(program)
            assert sequenced.status == cold.status == SolveStatus.OPTIMAL
            np.testing.assert_allclose(sequenced.x, cold.x, atol=1e-5)
            assert sequenced.objective == pytest.approx(cold.objective, abs=1e-6)
