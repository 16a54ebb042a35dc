"""Problem model: catalog, file schema, feasibility measurement."""
import numpy as np
import pytest

from akkt.expr import DomainError
from akkt.problem import (
    ProblemFormatError,
    builtin,
    catalog,
    feasibility_violation,
    load_problem,
    load_problem_dict,
    problem_to_dict,
    resolve_problem,
    save_problem,
)


class TestCatalog:
    def test_at_least_four_problems(self):
        assert len(catalog()) >= 4

    def test_mangasarian_shape(self):
        pr = builtin("mangasarian")
        assert (pr.n, pr.p, pr.m, pr.r) == (1, 1, 1, 0)

    def test_abs_biobjective_shape(self):
        pr = builtin("abs-biobjective")
        assert (pr.n, pr.p, pr.m, pr.r) == (1, 2, 0, 0)
        assert all(f.convex for f in pr.objectives)

    def test_linear_tradeoff_shape(self):
        pr = builtin("linear-tradeoff")
        assert (pr.n, pr.p, pr.m, pr.r) == (2, 2, 0, 1)

    def test_nonconvex_max_shape(self):
        pr = builtin("nonconvex-max")
        assert (pr.n, pr.p, pr.m, pr.r) == (1, 1, 1, 0)
        assert not pr.objectives[0].convex

    def test_unknown_builtin(self):
        with pytest.raises(KeyError):
            builtin("no-such-problem")

    def test_every_catalog_problem_roundtrips(self, tmp_path):
        for pr in catalog():
            path = tmp_path / f"{pr.name}.json"
            save_problem(pr, path)
            back = load_problem(path)
            assert back == pr


class TestResolve:
    def test_builtin_prefix(self):
        assert resolve_problem("builtin:mangasarian").name == "mangasarian"

    def test_path(self, tmp_path):
        path = tmp_path / "pr.json"
        save_problem(builtin("mangasarian"), path)
        assert resolve_problem(str(path)).name == "mangasarian"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemFormatError):
            resolve_problem(str(tmp_path / "absent.json"))


class TestSchema:
    def _base(self):
        return {
            "name": "t", "n": 2,
            "objectives": [{"pieces": ["x0"], "convex": False}],
            "inequalities": [],
            "equalities": [],
        }

    def test_minimal_valid(self):
        pr = load_problem_dict(self._base())
        assert (pr.p, pr.m, pr.r) == (1, 0, 0)

    def test_empty_objectives_rejected(self):
        data = self._base()
        data["objectives"] = []
        with pytest.raises(ProblemFormatError):
            load_problem_dict(data)

    def test_variable_out_of_dimension_rejected(self):
        data = self._base()
        data["objectives"] = [{"pieces": ["x5"], "convex": False}]
        with pytest.raises(ProblemFormatError):
            load_problem_dict(data)

    def test_piecewise_equality_rejected(self):
        data = self._base()
        data["equalities"] = [{"pieces": ["x0", "-x0"]}]
        with pytest.raises(ProblemFormatError):
            load_problem_dict(data)

    def test_unknown_keys_rejected(self):
        data = self._base()
        data["extra"] = 1
        with pytest.raises(ProblemFormatError):
            load_problem_dict(data)

    def test_nonbool_convex_rejected(self):
        data = self._base()
        data["objectives"] = [{"pieces": ["x0"], "convex": "yes"}]
        with pytest.raises(ProblemFormatError):
            load_problem_dict(data)

    def test_roundtrip_dict(self):
        pr = load_problem_dict(self._base())
        assert load_problem_dict(problem_to_dict(pr)) == pr


class TestFeasibility:
    def test_mangasarian_origin_feasible(self, p1):
        rep = feasibility_violation(p1, [0.0])
        assert rep.aggregate == 0.0

    def test_mangasarian_half(self, p1):
        rep = feasibility_violation(p1, [0.5])
        assert rep.ineq == pytest.approx(0.25, abs=1e-15)
        assert rep.aggregate == pytest.approx(0.25, abs=1e-15)

    def test_equality_violation(self, p3):
        rep = feasibility_violation(p3, [0.0, 0.0])
        assert rep.eq == 1.0
        assert rep.aggregate == 1.0

    def test_aggregate_is_max_of_parts(self, p1, p3):
        for pr, x in [(p1, [0.3]), (p3, [0.9, 0.4])]:
            rep = feasibility_violation(pr, x)
            assert rep.aggregate == max(rep.ineq, rep.eq)
            assert rep.ineq >= 0.0 and rep.eq >= 0.0

    def test_mangasarian_only_feasible_point_is_zero(self, p1):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = rng.uniform(-2.0, 2.0)
            if x == 0.0:
                continue
            assert feasibility_violation(p1, [x]).aggregate > 0.0

    def test_continuity_under_tiny_perturbations(self):
        rng = np.random.default_rng(6)
        for pr in catalog():
            for _ in range(10):
                x = rng.uniform(-1.0, 1.0, size=pr.n)
                dx = rng.uniform(-1.0, 1.0, size=pr.n)
                dx *= 1e-9 / max(1e-30, float(np.linalg.norm(dx)))
                a = feasibility_violation(pr, x)
                b = feasibility_violation(pr, x + dx)
                assert abs(a.aggregate - b.aggregate) <= 1e-6

    def test_guard_violation_propagates(self):
        pr = load_problem_dict({
            "name": "guarded", "n": 1,
            "objectives": [{"pieces": ["x0"], "convex": False}],
            "inequalities": [{"pieces": ["log(x0)"], "convex": False}],
            "equalities": [],
        })
        with pytest.raises(DomainError):
            feasibility_violation(pr, [-1.0])
