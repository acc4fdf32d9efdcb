"""
Integration tests for the qimanifold command line.
"""
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

import cli
from interchange import save_matrix
from tests.fixtures.constants import (
    ARAKI_WORKED,
    NEARBY_CONSTANT_WORKED,
    PAULI_X,
    RELATIVE_ENTROPY_WORKED,
    RHO_DIAG,
    SIGMA_DIAG,
)


@pytest.fixture
def runner(tmp_path, monkeypatch):
    """Fixture for a CLI runner whose log file and replay directory live in tmp_path."""
    monkeypatch.setattr(cli, "LOG_FILE", tmp_path / "logs" / "qimanifold.log")
    monkeypatch.setattr(cli, "REPLAY_DIR", tmp_path / "replay")
    return CliRunner()


@pytest.fixture
def matrices(tmp_path):
    """Fixture writing the worked-example matrices as interchange files."""
    return {
        "rho": str(save_matrix(tmp_path / "rho.json", np.diag(RHO_DIAG))),
        "sigma": str(save_matrix(tmp_path / "sigma.json", np.diag(SIGMA_DIAG))),
        "x": str(save_matrix(tmp_path / "x.json", PAULI_X)),
        "singular": str(save_matrix(tmp_path / "singular.json", np.diag([1.0, 0.0]))),
    }


def _last_json_line(output):
    return json.loads(output.strip().splitlines()[-1])


def test_norms_command(runner, matrices):
    """Test the norm report of the worked example."""
    result = runner.invoke(cli.qimanifold, ["--format", "json-lines", "norms", matrices["x"], matrices["rho"]])

    assert result.exit_code == 0, result.output
    report = _last_json_line(result.output)
    assert report["araki_norm"] == pytest.approx(ARAKI_WORKED)
    assert report["operator_norm"] == pytest.approx(1.0)


def test_norms_table_output(runner, matrices):
    """Test that the default table lists every norm."""
    result = runner.invoke(cli.qimanifold, ["norms", matrices["x"], matrices["rho"], "--epsilon", "0.25"])

    assert result.exit_code == 0
    assert "bkm_norm" in result.output
    assert "epsilon_norm" in result.output


def test_nearby_command(runner, matrices):
    """Test the nearby constant and form bound of the worked pair."""
    result = runner.invoke(cli.qimanifold, ["--format", "json-lines", "nearby", matrices["rho"], matrices["sigma"]])

    assert result.exit_code == 0, result.output
    report = _last_json_line(result.output)
    assert report["nearby_constant"] == pytest.approx(NEARBY_CONSTANT_WORKED)
    assert report["log_nearby_constant"] == pytest.approx(math.log(2.5))
    assert report["p_nearby"] is True
    # Tight side is C rho >= sigma on the second eigenvalue: 0.2 * 2.5e-9
    assert report["loewner_margin"] == pytest.approx(5e-10, rel=1e-3)
    assert report["form_bound"] is True


def test_perturb_command(runner, matrices):
    """Test the perturbed state and free energy document."""
    result = runner.invoke(cli.qimanifold, ["perturb", matrices["rho"], matrices["x"], "--center"])

    assert result.exit_code == 0, result.output
    document = json.loads(result.output)
    state = np.array(document["state"]["re"])
    assert np.trace(state) == pytest.approx(1.0)
    assert document["z"] == pytest.approx(math.exp(document["psi"]))


def test_expand_command(runner, matrices):
    """Test the truncated Dyson series document."""
    result = runner.invoke(cli.qimanifold, ["--order", "5", "expand", matrices["rho"], matrices["x"]])

    assert result.exit_code == 0, result.output
    document = json.loads(result.output)
    assert document["truncation_order"] == 5
    assert document["araki_M"] == pytest.approx(ARAKI_WORKED)


def test_expand_inverse_command(runner, matrices):
    """Test the inverse sandwich series document."""
    result = runner.invoke(cli.qimanifold, ["--order", "3", "expand", matrices["rho"], matrices["x"], "--inverse"])

    assert result.exit_code == 0, result.output
    assert len(json.loads(result.output)["term_norms"]) == 4


def test_expand_rejects_unstable_order(runner, matrices):
    """Test that --order 31 is a usage error."""
    result = runner.invoke(cli.qimanifold, ["--order", "31", "expand", matrices["rho"], matrices["x"]])

    assert result.exit_code == 2
    assert "truncation_order" not in result.output


def test_entropy_command(runner, matrices):
    """Test relative entropies and the Kullback verdict."""
    result = runner.invoke(cli.qimanifold, ["--format", "json-lines", "entropy", matrices["rho"], matrices["sigma"]])

    assert result.exit_code == 0, result.output
    report = _last_json_line(result.output)
    assert report["relative_entropy"] == pytest.approx(RELATIVE_ENTROPY_WORKED)
    assert report["trace_distance"] == pytest.approx(0.6)
    assert report["kullback_holds"] is True


def test_geodesic_command(runner, matrices):
    """Test the mixture midpoint of the worked pair."""
    args = ["geodesic", matrices["rho"], matrices["sigma"], "--connection", "minus", "--lam", "0.5"]
    result = runner.invoke(cli.qimanifold, args)

    assert result.exit_code == 0, result.output
    np.testing.assert_allclose(json.loads(result.output)["re"], np.diag([0.65, 0.35]))


def test_geodesic_rejects_parameter_out_of_range(runner, matrices):
    """Test that --lam outside [0, 1] is a usage error."""
    args = ["geodesic", matrices["rho"], matrices["sigma"], "--connection", "plus", "--lam", "1.5"]

    assert runner.invoke(cli.qimanifold, args).exit_code == 2


def test_missing_file_is_usage_error(runner, matrices, tmp_path):
    """Test that an unreadable matrix exits with status 2."""
    result = runner.invoke(cli.qimanifold, ["nearby", matrices["rho"], str(tmp_path / "missing.json")])

    assert result.exit_code == 2
    assert "nearby_constant" not in result.output


def test_undecodable_file_is_usage_error(runner, matrices, tmp_path):
    """Test that a file that is not UTF-8 exits with status 2."""
    path = tmp_path / "binary.json"
    path.write_bytes(b"\xff\xfe")
    result = runner.invoke(cli.qimanifold, ["norms", str(path), matrices["rho"]])

    assert result.exit_code == 2
    assert "araki_norm" not in result.output


def test_singular_state_is_usage_error(runner, matrices):
    """Test that a non-faithful state exits with status 2."""
    result = runner.invoke(cli.qimanifold, ["entropy", matrices["singular"], matrices["sigma"]])

    assert result.exit_code == 2
    assert "relative_entropy" not in result.output


def test_bad_dims_option(runner):
    """Test that a malformed --dims is rejected by the parser."""
    result = runner.invoke(cli.qimanifold, ["--dims", "a,b", "audit"])

    assert result.exit_code == 2


def test_audit_passes(runner):
    """Test a small audit run with summary output and footer."""
    args = ["--seed", "5", "--dims", "2,3", "--instances", "2", "--order", "12", "audit"]
    result = runner.invoke(cli.qimanifold, args)

    assert result.exit_code == 0, result.output
    assert "sandwich" in result.output
    assert "status" in result.output and "pass" in result.output


def test_audit_output_is_reproducible(runner):
    """Test that a seeded run prints identical bytes twice."""
    args = ["--seed", "5", "--dims", "3", "--instances", "1", "--format", "csv", "audit", "--details"]
    first = runner.invoke(cli.qimanifold, args)
    second = runner.invoke(cli.qimanifold, args)

    assert first.exit_code == 0
    assert first.output == second.output
    assert first.output.splitlines()[0] == "audit,index,dim,lhs,rhs,holds"


def test_audit_failure_and_replay(runner, tmp_path):
    """Test that a too-tight tolerance exits 1 and leaves replayable dumps."""
    args = ["--seed", "5", "--tol", "1e-16", "--dims", "3,4", "--instances", "2", "--order", "12", "audit"]
    result = runner.invoke(cli.qimanifold, args)

    assert result.exit_code == 1
    dumps = sorted((tmp_path / "replay").glob("*.json"))
    assert dumps

    replayed = runner.invoke(cli.qimanifold, ["audit", "--replay", str(dumps[0])])
    assert replayed.exit_code == 1

    relaxed = runner.invoke(cli.qimanifold, ["--tol", "1e-4", "audit", "--replay", str(dumps[0])])
    assert relaxed.exit_code == 0


def test_audit_rejects_invalid_config(runner):
    """Test that zero instances is a usage error."""
    assert runner.invoke(cli.qimanifold, ["--instances", "0", "audit"]).exit_code == 2


def test_separation_command(runner):
    """Test the separation table up to n = 256."""
    result = runner.invoke(cli.qimanifold, ["--format", "json-lines", "separation", "--nmax", "256"])

    assert result.exit_code == 0, result.output
    lines = [json.loads(line) for line in result.output.strip().splitlines()]
    assert [row["n"] for row in lines[:-1]] == [4, 8, 16, 32, 64, 128, 256]
    assert lines[-1] == {"monotone": True}


def test_separation_csv_has_no_footer(runner):
    """Test that CSV output stays rectangular."""
    result = runner.invoke(cli.qimanifold, ["--format", "csv", "separation", "--nmax", "16"])

    assert result.exit_code == 0
    assert result.output.splitlines()[0] == "n,delta,trace_dist,rel_entropy"
    assert len(result.output.splitlines()) == 4
