import numpy as np
import pytest

from app.core.exceptions import ConfigurationError, SolverError
from app.models.dataset import DataSet
from app.services import dda
from app.services.analysis.instances import (
    corner_template, integer_corner_data, integer_corner_template, threshold_template,
)
from app.services.analysis.scenario import members
from app.services.dataset import underlying_set
from app.services.reduction import thin


@pytest.fixture
def corner():
    return corner_template()


@pytest.fixture
def three_rows():
    return DataSet.from_arrays(real_part=[[1.0, 0.2], [0.2, 1.0], [0.3, 0.3]])


class TestAssemble:
    def test_one_block_of_rows_per_point(self, corner, three_rows):
        prog = dda.assemble(corner, three_rows)
        assert prog.n_rows == 3 * corner.m
        assert prog.provenance.tolist() == [0, 1, 2]
        assert prog.n_generated_rows == 3
        assert prog.n_base_rows == 0

    def test_duplicates_give_duplicate_rows(self, corner):
        data = DataSet.from_arrays(real_part=[[1.0, 0.2], [1.0, 0.2]])
        prog = dda.assemble(corner, data)
        G = prog.G.toarray()
        np.testing.assert_array_equal(G[0], G[1])

    def test_dimension_check(self, corner):
        with pytest.raises(ConfigurationError):
            dda.assemble(corner, DataSet.from_arrays(real_part=[[1.0, 2.0, 3.0]]))

    def test_without_point_renumbers_provenance(self, corner, three_rows):
        prog = dda.assemble(corner, three_rows).without_point(0)
        assert prog.provenance.tolist() == [0, 1]
        assert prog.n_points == 2


class TestSolveAndBoundary:
    def test_optimum_of_the_corner_program(self, corner, three_rows):
        result = dda.solve_template(corner, three_rows)
        np.testing.assert_allclose(result.x, [5.0 / 6.0, 5.0 / 6.0], atol=1e-6)
        assert result.objective == pytest.approx(-5.0 / 3.0, abs=1e-6)

    def test_boundary_points(self, corner, three_rows):
        optimum = dda.solve_template(corner, three_rows)
        report = dda.find_boundary_points(corner, three_rows, optimum)
        assert report.boundary_points.tolist() == [0, 1]
        assert report.b_c == 2
        assert 2 not in report.candidate_points.tolist()

    def test_duplicated_point_is_not_boundary_forming(self, corner):
        data = DataSet.from_arrays(real_part=[[1.0, 0.2], [1.0, 0.2], [0.2, 1.0]])
        optimum = dda.solve_template(corner, data)
        report = dda.find_boundary_points(corner, data, optimum)
        assert report.boundary_points.tolist() == [2]
        assert set(report.candidate_points.tolist()) == {0, 1, 2}

    def test_infeasible_program_raises(self):
        data = DataSet.from_arrays(real_part=[[-200.0]])
        with pytest.raises(SolverError):
            dda.solve_template(threshold_template(), data)


class TestCertificates:
    def test_optimum_is_certified(self, corner, three_rows):
        x = np.array([5.0 / 6.0, 5.0 / 6.0])
        assert dda.certify_optimal(corner, three_rows, x)

    def test_feasible_but_suboptimal(self, corner, three_rows):
        assert not dda.certify_optimal(corner, three_rows, np.zeros(2))

    def test_infeasible_point(self, corner, three_rows):
        assert not dda.certify_optimal(corner, three_rows, np.ones(2))

    def test_check_feasible_reports_worst_violation(self, corner, three_rows):
        ok, worst = dda.check_feasible(dda.assemble(corner, three_rows), np.ones(2))
        assert not ok
        assert worst == pytest.approx(0.2)


def test_more_points_shrink_the_feasible_set(corner, gaussian_cloud):
    data = DataSet.from_arrays(real_part=np.abs(gaussian_cloud.real_part[:60]) + 0.1)
    few = dda.assemble(corner, data.take(range(10)))
    many = dda.assemble(corner, data)
    X = np.random.default_rng(0).uniform(-3.0, 3.0, size=(2000, 2))
    in_few, in_many = members(few, X), members(many, X)
    assert not np.any(in_many & ~in_few)
    assert in_many.any()


def test_export_lp(corner, three_rows, tmp_path):
    path = tmp_path / "prog.lp"
    dda.export_lp(dda.assemble(corner, three_rows), str(path), names=corner.variable_names)
    text = path.read_text(encoding="utf-8")
    for keyword in ("minimize", "subject to", "bounds", "end"):
        assert keyword in text
    assert " g1_p0: +1 x1 +0.20000000000000001 x2 <= 1" in text
    assert "-10 <= x2 <= 10" in text


def test_solve_many_keeps_input_order(corner, three_rows):
    subsets = [three_rows, three_rows.take([0, 2]), three_rows.take([1, 2])]
    parallel = dda.solve_many(corner, subsets, threads=3)
    serial = [dda.solve_template(corner, s) for s in subsets]
    for a, b in zip(parallel, serial):
        assert a.objective == pytest.approx(b.objective, abs=1e-9)


class TestEquivalences:
    def test_duplicates_do_not_change_the_feasible_set(self, corner, gaussian_cloud):
        base = np.abs(gaussian_cloud.real_part[:40]) + 0.1
        data = DataSet.from_arrays(real_part=np.vstack([base, base[:15], base[:5]]))
        distinct = underlying_set(data)
        assert distinct.size == 40
        X = np.random.default_rng(1).uniform(-3.0, 3.0, size=(1000, 2))
        np.testing.assert_array_equal(members(dda.assemble(corner, data), X),
                                      members(dda.assemble(corner, distinct), X))
        assert dda.solve_template(corner, data).objective == pytest.approx(
            dda.solve_template(corner, distinct).objective, abs=1e-9)

    def test_removing_a_non_boundary_point_keeps_the_optimum(self, corner, three_rows):
        optimum = dda.solve_template(corner, three_rows)
        reduced = dda.solve_template(corner, three_rows.drop(2))
        assert reduced.objective == pytest.approx(optimum.objective, abs=1e-9)

    def test_pure_integer_thinning_keeps_the_optimum(self):
        tmpl = integer_corner_template()
        for k in range(50):
            data = integer_corner_data(60, seed=k)
            rng = np.random.default_rng(k)
            sample = data.take(np.sort(rng.choice(data.size, size=30, replace=False)))
            thinned = sample.take(thin(sample, 0.5, seed=k).selected)
            np.testing.assert_array_equal(np.unique(thinned.vectors, axis=0),
                                          np.unique(sample.vectors, axis=0))
            assert dda.solve_template(tmpl, thinned).objective == pytest.approx(
                dda.solve_template(tmpl, sample).objective, abs=1e-9)
