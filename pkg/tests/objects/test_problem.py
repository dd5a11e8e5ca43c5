import math

import numpy as np
import pytest

from asa.exceptions import ProblemConfigException
from asa.objects.problem import Numerics, ProblemSpec


class TestCoefficientField:
    def test_evaluation(self):
        field = ProblemSpec("1+u^2", "lambda*u*(1-u^2)", lmbda=3.0).field
        assert field.lmbda == 3.0
        assert field.a(0.5, 2.0, 0.0) == 5.0
        assert field.f(0.5, 0.5, 0.0) == pytest.approx(3 * 0.5 * 0.75)
        assert field.f_over_a(0.5, 2.0, 0.0) == pytest.approx(3 * 2 * (1 - 4) / 5)

    def test_constant_coefficients_broadcast(self):
        field = ProblemSpec("1", "0").field
        theta = np.linspace(0.1, 3.0, 7)
        assert field.a(theta, 0.0, 0.0).shape == (7,)
        assert field.df_du(theta, 0.0, 0.0).tolist() == [0.0] * 7
        assert field.a(0.3, 0.0, 0.0) == 1.0

    def test_symbolic_partials(self):
        field = ProblemSpec("2+sin(theta)*u", "lambda*u*(1-u^2)+p", lmbda=2.0).field
        assert all(field.symbolic.values())
        assert field.df_du(0.1, 0.5, 0.0) == pytest.approx(2.0 * (1 - 3 * 0.25))
        assert field.df_dp(0.1, 0.5, 0.0) == 1.0
        assert field.da_du(0.3, 0.5, 0.0) == pytest.approx(math.sin(0.3))
        assert field.da_dtheta(0.3, 0.5, 0.0) == pytest.approx(math.cos(0.3) * 0.5)
        assert field.da_dp(0.3, 0.5, 0.0) == 0.0

    def test_finite_difference_fallback(self):
        field = ProblemSpec("1", "abs(u)*u").field
        assert field.symbolic[("f", "u")] is False
        assert field.symbolic[("f", "p")] is True
        assert field.df_du(0.5, 0.7, 0.0) == pytest.approx(1.4, rel=1e-6)

    def test_linearization(self):
        field = ProblemSpec("1+u^2", "u-u^3+0.5*p").field
        a, laplacian, b, c = field.linearization(1.0, 0.5, 0.2)
        f = 0.5 - 0.125 + 0.1
        assert a == pytest.approx(1.25)
        assert laplacian == pytest.approx(-f / 1.25)
        assert b == pytest.approx((1 - 3 * 0.25) + 2 * 0.5 * laplacian)
        assert c == pytest.approx(0.5)

    def test_f_over_a_dp(self):
        field = ProblemSpec("1+p^2", "u").field
        # d/dp u/(1+p²) = -2pu/(1+p²)²
        assert field.f_over_a_dp(1.0, 2.0, 1.0) == pytest.approx(-1.0)

    def test_with_lambda(self):
        field = ProblemSpec("1", "lambda*u").field
        assert field.with_lambda(5.0).f(0.1, 2.0, 0.0) == 10.0
        assert field.with_lambda(5.0) != field
        assert field.with_lambda(0.0) == field


class TestNumerics:
    def test_defaults(self):
        numerics = Numerics()
        assert numerics.eps_theta == 1e-3
        assert numerics.ode_tol == 1e-10
        assert numerics.grid_n == 256
        assert numerics.d_range == (-1.5, 1.5)
        assert numerics.e_range == (-1.5, 1.5)
        assert numerics.theta_cut == math.pi / 2
        assert numerics.angle_tol == 1e-3
        assert numerics.seed == 0
        numerics.validate()

    @pytest.mark.parametrize(
        "changes",
        [
            {"eps_theta": 0.0},
            {"eps_theta": 1.0},
            {"ode_tol": 0.0},
            {"grid_n": 8},
            {"samples": 10},
            {"d_min": 1.0, "d_max": 1.0},
            {"e_min": 2.0},
            {"theta_cut": 0.0005},
            {"angle_tol": -1.0},
            {"min_diffusion": 0.0},
            {"min_diffusion": 2.0, "max_diffusion": 1.0},
        ],
    )
    def test_invalid(self, changes):
        with pytest.raises(ProblemConfigException):
            ProblemSpec("1", "u", numerics=Numerics(**changes))


class TestProblemSpec:
    def test_to_dict_and_hash(self):
        spec = ProblemSpec("1", "lambda*u*(1-u^2)", lmbda=3.0, name="ci")
        data = spec.to_dict()
        assert list(data) == ["name", "a", "f", "lambda", "numerics"]
        assert data["numerics"]["grid_n"] == 256
        assert len(spec.spec_hash()) == 64
        assert spec.spec_hash() == ProblemSpec("1", "lambda*u*(1-u^2)", 3.0, name="ci").spec_hash()
        assert spec.spec_hash() != spec.with_lambda(3.5).spec_hash()

    def test_with_lambda_and_numerics(self):
        spec = ProblemSpec("1", "lambda*u", lmbda=1.0)
        other = spec.with_lambda(2.0).with_numerics(seed=7, grid_n=64)
        assert other.lmbda == 2.0
        assert other.field.lmbda == 2.0
        assert other.numerics.seed == 7
        assert other.numerics.grid_n == 64
        assert spec.numerics.seed == 0
        assert other != spec
        assert hash(spec) == hash(ProblemSpec("1", "lambda*u", lmbda=1.0))

    def test_non_finite_lambda(self):
        with pytest.raises(ProblemConfigException):
            ProblemSpec("1", "u", lmbda=float("nan"))

    def test_with_numerics_validates(self):
        with pytest.raises(ProblemConfigException):
            ProblemSpec("1", "u").with_numerics(grid_n=4)
