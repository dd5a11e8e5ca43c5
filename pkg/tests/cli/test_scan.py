import json

import pytest

from tests.helpers import write_config

SCAN_RESULT = {
    "samples": [
        {"lambda": 1.0, "count": 3, "sigma": [1, 2, 3], "flagged": False, "error": None},
        {"lambda": 2.0, "count": None, "sigma": None, "flagged": True, "error": "diverged"},
        {"lambda": 3.0, "count": 5, "sigma": [1, 4, 3, 2, 5], "flagged": False, "error": None},
    ],
    "bifurcations": [
        {"interval": [1.9995, 2.0004], "lambda": 2.0, "from_count": 3, "to_count": 5},
    ],
}


@pytest.fixture
def mock_scan(mocker):
    return mocker.patch("asa.cli._scan.scan_lambda", return_value=SCAN_RESULT)


def test_help(run_cmd):
    out, _ = run_cmd("scan --help")
    assert out.startswith("usage: asa scan")


def test_scan(run_cmd, tmp_path, mock_scan):
    config = write_config(tmp_path)
    out_dir = tmp_path / "out"
    out, _ = run_cmd(
        f"scan -c {config} -o {out_dir} --lambda-min 1 --lambda-max 3 --steps 3 --tol 1e-4"
    )

    (spec, low, high, steps, _, tol), _ = mock_scan.call_args
    assert (low, high, steps, tol) == (1.0, 3.0, 3, 1e-4)
    assert spec.lmbda == 3.0

    lines = out.splitlines()
    assert lines[0] == "lambda\tcount\tsigma"
    assert lines[1] == "1\t3\t[1, 2, 3]"
    assert lines[2] == "2\tflagged\tNone"
    assert lines[-1] == "bifurcation at lambda=2.000000 in [1.999500, 2.000400]: 3 -> 5"

    document = json.loads((out_dir / "scan.json").read_text())
    assert document["samples"] == SCAN_RESULT["samples"]
    assert document["bifurcations"] == SCAN_RESULT["bifurcations"]
    assert document["steps"] == 3
    assert json.loads((out_dir / "manifest.json").read_text())["command"] == "scan"


@pytest.mark.parametrize(
    "args",
    [
        "--lambda-min 3 --lambda-max 1",
        "--lambda-min 1 --lambda-max 1",
        "--lambda-min 1 --lambda-max 3 --steps 1",
    ],
)
def test_bad_range(run_cmd, tmp_path, mock_scan, args):
    config = write_config(tmp_path)
    _, err = run_cmd(f"scan -c {config} {args}", expected_exit=1)
    assert err.startswith("asa: error:")
    mock_scan.assert_not_called()


def test_range_is_required(run_cmd, tmp_path, mock_scan):
    config = write_config(tmp_path)
    run_cmd(f"scan -c {config}", expected_exit=2)
