import json

import numpy as np
import pytest

from asa.attractor import Attractor
from asa.exceptions import NumericException, ParabolicityException
from asa.objects.report import CheckResult, CheckStatus
from tests.helpers import make_record, write_config


@pytest.fixture
def mock_attractor(mocker, ci_attractor_3):
    return mocker.patch(
        "asa.cli._analyze.attractor_for_problem", return_value=ci_attractor_3
    )


def test_help(run_cmd):
    out, _ = run_cmd("analyze --help")
    assert out.startswith("usage: asa analyze")


def test_artifacts(run_cmd, tmp_path, mock_attractor):
    config = write_config(tmp_path)
    out_dir = tmp_path / "out"
    out, _ = run_cmd(f"analyze -c {config} -o {out_dir}")

    assert "equilibria: 5" in out
    assert "sigma: [1, 4, 3, 2, 5]" in out
    assert "edges: 8" in out

    report = json.loads((out_dir / "report.json").read_text())
    assert report["sigma"] == [1, 4, 3, 2, 5]
    assert report["morse_indices"] == [0, 1, 2, 1, 0]
    assert report["dissipativity"]["holds"] is True
    assert [c["name"] for c in report["dissipativity"]["conditions"]][0] == "parabolicity"
    assert [c["name"] for c in report["checks"]] == ["wolfrum", "morse", "zero-range"]
    assert all(c["status"] == "passed" for c in report["checks"])
    assert set(report["timings"]) == {"attractor", "checks"}

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "analyze"
    assert manifest["seed"] == 0
    assert manifest["spec_hash"] == report["spec_hash"]

    assert sorted(p.name for p in (out_dir / "equilibria").iterdir()) == [
        f"eq_{k}.csv" for k in range(1, 6)
    ]
    header = (out_dir / "equilibria" / "eq_1.csv").read_text().splitlines()[0]
    assert header == "theta,u"
    assert (out_dir / "curves" / "unstable.csv").is_file()
    assert (out_dir / "curves" / "stable.csv").is_file()
    assert (out_dir / "attractor.dot").read_text().startswith("digraph attractor {")
    assert json.loads((out_dir / "attractor.json").read_text())["adjacency"]["3"] == [1, 2, 4, 5]


def test_lambda_override(run_cmd, tmp_path, mock_attractor):
    config = write_config(tmp_path, lmbda=1.0)
    run_cmd(f"analyze -c {config} -o {tmp_path / 'out'} --lambda 3 --no-checks")
    (spec, _), _ = mock_attractor.call_args
    assert spec.lmbda == 3.0


def test_no_checks(run_cmd, tmp_path, mock_attractor, mocker):
    suites = mocker.patch("asa.cli._analyze.run_suites")
    config = write_config(tmp_path)
    run_cmd(f"analyze -c {config} -o {tmp_path / 'out'} --no-checks")
    suites.assert_not_called()
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["checks"] == []


def test_failed_check(run_cmd, tmp_path, mock_attractor, mocker):
    mocker.patch(
        "asa.cli._analyze.run_suites",
        return_value=[CheckResult("morse", CheckStatus.FAILED, "1 violations")],
    )
    config = write_config(tmp_path)
    run_cmd(f"analyze -c {config} -o {tmp_path / 'out'}", expected_exit=3)


def test_non_hyperbolic(run_cmd, tmp_path, mocker, ci_attractor_3):
    records = [
        make_record(1, np.full(65, -1.0), 0),
        make_record(2, np.zeros(65), 1, hyperbolic=False),
        make_record(3, np.full(65, 1.0), 0),
    ]
    attractor = Attractor(
        ci_attractor_3.spec, ci_attractor_3.curve_u, ci_attractor_3.curve_s, records
    )
    mocker.patch("asa.cli._analyze.attractor_for_problem", return_value=attractor)
    suites = mocker.patch("asa.cli._analyze.run_suites")
    config = write_config(tmp_path)
    out_dir = tmp_path / "out"

    out, _ = run_cmd(f"analyze -c {config} -o {out_dir}", expected_exit=2)

    assert "non-hyperbolic: [2]" in out
    suites.assert_not_called()
    assert not (out_dir / "attractor.dot").exists()
    report = json.loads((out_dir / "report.json").read_text())
    assert report["sigma"] is None


def test_pipeline_failure(run_cmd, tmp_path, mocker):
    mocker.patch(
        "asa.cli._analyze.attractor_for_problem",
        side_effect=NumericException("all shots diverged"),
    )
    config = write_config(tmp_path)
    out_dir = tmp_path / "out"
    _, err = run_cmd(f"analyze -c {config} -o {out_dir}", expected_exit=3)

    assert err.splitlines()[-1] == "asa: error: NumericException: all shots diverged"
    report = json.loads((out_dir / "report.json").read_text())
    assert report["checks"][0]["name"] == "pipeline"
    assert report["checks"][0]["status"] == "failed"
    assert (out_dir / "manifest.json").is_file()


class TestConfigErrors:
    def test_missing_file(self, run_cmd, tmp_path, mock_attractor):
        _, err = run_cmd(f"analyze -c {tmp_path / 'missing.ini'}", expected_exit=1)
        assert err.startswith("asa: error: Config file")
        mock_attractor.assert_not_called()

    @pytest.mark.parametrize(
        "extra",
        [
            "[solver]\nmethod = rk4\n",
            "[numerics]\nmagic = 3\n",
        ],
    )
    def test_unknown_keys(self, run_cmd, tmp_path, mock_attractor, extra):
        config = tmp_path / "problem.ini"
        config.write_text(
            "[problem]\na = 1\nf = u-u^3\n\n" + extra, encoding="utf-8"
        )
        run_cmd(f"analyze -c {config}", expected_exit=1)
        mock_attractor.assert_not_called()

    @pytest.mark.parametrize("f", ["u-u^", "u-v^3", "exp(u"])
    def test_bad_expression(self, run_cmd, tmp_path, mock_attractor, f):
        config = tmp_path / "problem.ini"
        config.write_text(f"[problem]\na = 1\nf = {f}\n", encoding="utf-8")
        run_cmd(f"analyze -c {config}", expected_exit=1)
        mock_attractor.assert_not_called()

    def test_not_parabolic(self, run_cmd, tmp_path, mocker):
        mocker.patch(
            "asa.cli._analyze.attractor_for_problem",
            side_effect=ParabolicityException("Diffusion coefficient below 1e-08 at the north pole"),
        )
        config = write_config(tmp_path)
        _, err = run_cmd(f"analyze -c {config} -o {tmp_path / 'out'}", expected_exit=1)
        assert err == "asa: error: Diffusion coefficient below 1e-08 at the north pole"

    def test_threads(self, run_cmd, tmp_path, mock_attractor):
        config = write_config(tmp_path)
        _, err = run_cmd(f"analyze -c {config} -t 0", expected_exit=1)
        assert err == "asa: error: --threads must be at least 1, got 0"


@pytest.mark.parametrize(
    ("v_arg", "exp_lvl"),
    [("", 0), ("-v", 1), ("--verbose", 1), ("-vv", 2), ("--verbose --verbose", 2)],
)
@pytest.mark.parametrize(
    ("l_arg", "exp_file_name"),
    [("", None), ("-l log.txt", "log.txt"), ("--log-file log.txt", "log.txt")],
)
def test_log_verbosity(
    run_cmd, mocker, tmp_path, mock_attractor, v_arg, exp_lvl, l_arg, exp_file_name
):
    mock_logging = mocker.patch("asa.cli._analyze.setup_logging")
    config = write_config(tmp_path)
    run_cmd(f"analyze -c {config} -o {tmp_path / 'out'} --no-checks {v_arg} {l_arg}")

    mock_logging.assert_called_once_with(exp_lvl, exp_file_name)
