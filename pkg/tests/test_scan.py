import pytest

from asa.exceptions import EmptyCurveException
from asa.model import chafee_infante, expected_equilibrium_count
from asa.scan import count_equilibria, locate_change, scan_lambda


def fake_count(spec, executor=None):
    """Chafee–Infante counts without shooting; 2 and 6 are the first pitchforks."""
    lmbda = spec.lmbda
    count = 3 if lmbda < 2 else 5 if lmbda < 6 else 7
    return {"lambda": lmbda, "count": count, "sigma": None, "flagged": False, "error": None}


class TestScanLambda:
    def test_bifurcations(self, mocker):
        mocker.patch("asa.scan.count_equilibria", side_effect=fake_count)
        result = scan_lambda(chafee_infante(1.0), 0.5, 7.5, 15)

        assert [s["count"] for s in result["samples"]] == [
            fake_count(chafee_infante(x))["count"] for x in [0.5 + 0.5 * i for i in range(15)]
        ]
        bifurcations = result["bifurcations"]
        assert [(b["from_count"], b["to_count"]) for b in bifurcations] == [(3, 5), (5, 7)]
        for bifurcation, expected in zip(bifurcations, (2.0, 6.0)):
            lo, hi = bifurcation["interval"]
            assert hi - lo <= 1e-3
            assert lo <= expected <= hi
            assert bifurcation["lambda"] == pytest.approx(expected, abs=1e-3)

    def test_flagged_samples_are_skipped(self, mocker):
        def flaky(spec, executor=None):
            entry = fake_count(spec)
            if spec.lmbda == 1.0:
                entry.update(count=None, flagged=True, error="diverged")
            return entry

        mocker.patch("asa.scan.count_equilibria", side_effect=flaky)
        result = scan_lambda(chafee_infante(1.0), 0.0, 3.0, 4)
        assert [s["flagged"] for s in result["samples"]] == [False, True, False, False]
        assert len(result["bifurcations"]) == 1

    @pytest.mark.parametrize(("low", "high", "steps"), [(2.0, 1.0, 10), (1.0, 1.0, 10), (0.0, 1.0, 1)])
    def test_invalid(self, low, high, steps):
        with pytest.raises(ValueError):
            scan_lambda(chafee_infante(1.0), low, high, steps)


class TestLocateChange:
    def test_stops_at_flagged_midpoint(self, mocker):
        flagged = {"lambda": 0.0, "count": None, "sigma": None, "flagged": True, "error": "x"}
        mocker.patch("asa.scan.count_equilibria", return_value=flagged)
        result = locate_change(
            chafee_infante(1.0), {"lambda": 1.0, "count": 3}, {"lambda": 3.0, "count": 5}
        )
        assert result["interval"] == [1.0, 3.0]
        assert result["lambda"] == 2.0


class TestCountEquilibria:
    def test_chafee_infante(self):
        entry = count_equilibria(chafee_infante(1.0))
        assert entry["count"] == expected_equilibrium_count(1.0)
        assert entry["sigma"] == [1, 2, 3]
        assert not entry["flagged"]

    def test_failure_is_flagged(self, mocker):
        mocker.patch("asa.scan.cross_section", side_effect=EmptyCurveException("all shots diverged"))
        entry = count_equilibria(chafee_infante(1.0))
        assert entry["flagged"]
        assert entry["count"] is None
        assert entry["error"] == "all shots diverged"
