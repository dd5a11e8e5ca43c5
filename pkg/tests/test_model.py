import math

import pytest

from asa.exceptions import (
    ExpressionSyntaxError,
    ProblemConfigException,
    UnknownIdentifierError,
)
from asa.model import (
    SampleBox,
    bifurcation_level,
    chafee_infante,
    check_dissipativity,
    expected_equilibrium_count,
    expected_morse_indices,
    expected_permutation,
    is_odd_in_u,
    is_p_independent,
    is_reflection_symmetric,
    laplacian_eigenvalue,
    load_problem,
)
from asa.objects.combinatorics import SturmPermutation
from asa.objects.problem import ProblemSpec
from tests.helpers import write_config


class TestLoadProblem:
    def test_chafee_infante_config(self, tmp_path):
        spec = load_problem(write_config(tmp_path, lmbda=3.0))
        assert spec.name == "chafee-infante"
        assert spec.lmbda == 3.0
        assert spec.numerics.theta_cut == pytest.approx(math.pi / 2, abs=1e-15)
        assert spec == chafee_infante(3.0)
        assert spec.spec_hash() == chafee_infante(3.0).spec_hash()

    def test_numerics_overrides(self, tmp_path):
        path = write_config(tmp_path, extra="grid_n = 128\nroot_tol = 1e-9\nd_min = -2\n")
        numerics = load_problem(path).numerics
        assert numerics.grid_n == 128
        assert numerics.root_tol == 1e-9
        assert numerics.d_min == -2.0

    def test_name_defaults_to_file_stem(self, tmp_path):
        path = tmp_path / "my-problem.ini"
        path.write_text("[problem]\na = 1\nf = u-u^3\n")
        spec = load_problem(path)
        assert spec.name == "my-problem"
        assert spec.lmbda == 0.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemConfigException):
            load_problem(tmp_path / "missing.ini")

    @pytest.mark.parametrize(
        "text",
        [
            "a = 1\n",
            "[problem]\na = 1\n",
            "[problem]\na = 1\nf = u\nmu = 2\n",
            "[problem]\na = 1\nf = u\n[numerics]\nsteps = 2\n",
            "[problem]\na = 1\nf = u\n[solver]\nx = 1\n",
            "[problem]\na = 1\nf = u\n[numerics]\ngrid_n = 12.5\n",
            "[problem]\na = 1\nf = u\n[numerics]\ngrid_n = 8\n",
            "[problem]\na = 1\nf = u\nlambda = u+1\n",
            "[problem]\na = 1\nf = u\nlambda = 3 +\n",
            "[numerics]\ngrid_n = 64\n",
        ],
    )
    def test_invalid_configs(self, tmp_path, text):
        path = tmp_path / "bad.ini"
        path.write_text(text)
        with pytest.raises(ProblemConfigException):
            load_problem(path)

    def test_invalid_expressions(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[problem]\na = 1\nf = lambda*u*(1-u^2\n")
        with pytest.raises(ExpressionSyntaxError):
            load_problem(path)

        path.write_text("[problem]\na = 1\nf = lambda*v\n")
        with pytest.raises(UnknownIdentifierError):
            load_problem(path)


class TestOracles:
    @pytest.mark.parametrize(("k", "expected"), [(0, 0), (1, 2), (2, 6), (3, 12), (4, 20)])
    def test_laplacian_eigenvalue(self, k, expected):
        assert laplacian_eigenvalue(k) == expected

    @pytest.mark.parametrize(
        ("lmbda", "k", "count"),
        [(0.5, 0, 3), (1.0, 0, 3), (3.0, 1, 5), (7.0, 2, 7), (13.0, 3, 9), (20.5, 4, 11)],
    )
    def test_equilibrium_count(self, lmbda, k, count):
        assert bifurcation_level(lmbda) == k
        assert expected_equilibrium_count(lmbda) == count

    @pytest.mark.parametrize("lmbda", [0.0, -1.0, 2.0, 6.0])
    def test_bifurcation_level_rejects(self, lmbda):
        with pytest.raises(ValueError):
            bifurcation_level(lmbda)

    def test_expected_permutation(self):
        assert expected_permutation(1.0) == SturmPermutation.identity(3)
        assert expected_permutation(3.0).sigma == [1, 4, 3, 2, 5]
        assert expected_permutation(13.0) == SturmPermutation.from_cycles(9, [(2, 8), (4, 6)])
        assert expected_permutation(13.0).sigma == [1, 8, 3, 6, 5, 4, 7, 2, 9]

    def test_expected_morse_indices(self):
        assert expected_morse_indices(1.0) == [0, 1, 0]
        assert expected_morse_indices(3.0) == [0, 1, 2, 1, 0]
        assert expected_morse_indices(13.0) == [0, 1, 2, 3, 4, 3, 2, 1, 0]


class TestProbes:
    def test_chafee_infante(self):
        field = chafee_infante(3.0).field
        assert is_reflection_symmetric(field)
        assert is_odd_in_u(field)
        assert is_p_independent(field)

    def test_reflection(self):
        assert is_reflection_symmetric(ProblemSpec("1+cos(theta)^2", "u-u^3").field)
        assert not is_reflection_symmetric(ProblemSpec("2+cos(theta)", "u-u^3").field)
        assert not is_reflection_symmetric(ProblemSpec("1", "u-u^3+p").field)
        assert is_reflection_symmetric(ProblemSpec("1", "u-u^3+p^2").field)

    def test_odd_in_u(self):
        assert not is_odd_in_u(ProblemSpec("1", "u-u^3+0.1").field)
        assert not is_odd_in_u(ProblemSpec("1+u", "u-u^3").field)
        assert is_odd_in_u(ProblemSpec("1+u^2", "u-u^3+p").field)

    def test_p_independent(self):
        assert not is_p_independent(ProblemSpec("1", "u-u^3+p").field)
        assert not is_p_independent(ProblemSpec("1+p^2", "u-u^3").field)
        assert is_p_independent(ProblemSpec("1+u^2", "(1+u^2)*(u-u^3)").field)


class TestDissipativity:
    def test_chafee_infante(self):
        report = check_dissipativity(chafee_infante(3.0))
        assert report.holds
        assert report.failures == []
        assert report["parabolicity"].holds is True
        assert report["sign"].holds is True
        assert report["diffusion-growth"].holds is True
        assert report["reaction-growth"].holds is None
        assert report.to_dict()["holds"] is True

    def test_sign_failure(self):
        report = check_dissipativity(ProblemSpec("1", "u"))
        assert not report.holds
        sign = report["sign"]
        assert sign.holds is False
        assert sign.counterexample["u"] == -4.0
        assert sign.counterexample["p"] == 0.0
        assert [c.name for c in report.failures] == ["sign"]

    def test_parabolicity_failure(self):
        report = check_dissipativity(ProblemSpec("u^2", "-u"))
        assert report["parabolicity"].holds is False
        assert abs(report["parabolicity"].counterexample["u"]) < 1e-12

    def test_diffusion_above_upper_bound(self):
        report = check_dissipativity(ProblemSpec("1e7", "-u"))
        assert report["parabolicity"].holds is False
        assert report["parabolicity"].counterexample is not None
        assert check_dissipativity(ProblemSpec("1e7", "-u").with_numerics(max_diffusion=1e8)).holds

    def test_custom_box(self):
        box = SampleBox(u_max=1.0, u_samples=5, sign_threshold=0.5)
        report = check_dissipativity(chafee_infante(0.5), box)
        # u(1-u²) >= 0 at u = 0.5
        assert report["sign"].holds is False

    def test_unknown_condition(self):
        with pytest.raises(KeyError):
            check_dissipativity(chafee_infante(1.0))["compactness"]
