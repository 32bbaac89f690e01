import json

import pandas as pd
import pytest
from click.testing import CliRunner

from hieranderson.runner.app import EXIT_INVARIANT, EXIT_OK, EXIT_VALIDATION, main

SMALL = """\
name: small
kappa: 2
replicas: 6
grid:
  num: 9
bracketing:
  ranks: [1]
  psi_count: 10
  samples: 3
tail:
  energies: [0.5]
  upper_energies: [0.0625]
  alpha: 1.0
exponent:
  m_min: 4
  m_max: 10
ergodic:
  total_rank: 3
  kappa: 1
  samples: 2
  birkhoff_rank: 8
  birkhoff_seeds: 10
"""


def _run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def _summary(out_dir, name="small"):
    return json.loads((out_dir / f"{name}.summary.json").read_text())


@pytest.mark.parametrize("command", ["spectrum", "ids", "bracketing", "exponent", "ergodic", "tail"])
def test_subcommands_pass_on_a_small_model(experiment_file, tmp_path, command):
    out = tmp_path / "out"
    result = _run(command, experiment_file(SMALL), "--out-dir", out, "--threads", 1)
    assert result.exit_code == EXIT_OK, result.output
    summary = _summary(out)
    assert summary["passed"]
    assert not summary["partial"]
    assert summary["details"]["subcommand"] == command
    assert (out / "small.csv").exists()


def test_point_mass_ids_equals_the_free_counting(experiment_file, tmp_path):
    config = experiment_file(SMALL + "distribution:\n  kind: point_mass\n  value: 0.0\n")
    out = tmp_path / "out"
    result = _run("ids", config, "--out-dir", out, "--threads", 1)
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out / "small.csv")
    for boundary in ("neumann", "dirichlet"):
        mc = frame[frame["method"] == f"mc-{boundary}"]["value"].to_numpy()
        free = frame[frame["method"] == f"free-finite-{boundary}"]["value"].to_numpy()
        assert (abs(mc - free) <= 1e-12).all()
    assert _summary(out)["invariants"]["point_mass_matches_free_neumann"]


def test_invalid_config_exits_with_validation_status(experiment_file, tmp_path):
    result = _run("ids", experiment_file("kappa: -2\n"), "--out-dir", tmp_path)
    assert result.exit_code == EXIT_VALIDATION
    result = _run("ids", experiment_file("unknown: 1\n", "unknown.yml"), "--out-dir", tmp_path)
    assert result.exit_code == EXIT_VALIDATION


def test_domain_error_leaves_a_partial_summary(experiment_file, tmp_path):
    # the default alpha puts k(E) below rank one at E = 1/2
    config = experiment_file(SMALL + "rank_rule:\n  kind: k_of_E\n")
    out = tmp_path / "out"
    result = _run("tail", config, "--out-dir", out, "--threads", 1)
    assert result.exit_code == EXIT_VALIDATION
    summary = _summary(out)
    assert summary["partial"]
    assert not summary["passed"]
    assert summary["error"].startswith("DomainError")
    assert (out / "small.csv").exists()


def test_flags_override_the_file(experiment_file, tmp_path):
    out = tmp_path / "out"
    result = _run("exponent", experiment_file(SMALL), "--out-dir", out, "--seed", 99, "--emit-plot-data")
    assert result.exit_code == EXIT_OK, result.output
    summary = _summary(out)
    assert summary["seed"] == 99
    assert summary["config"]["seed"] == 99
    assert (out / "small.plot.csv").exists()


def test_results_do_not_depend_on_the_thread_count(experiment_file, tmp_path):
    config = experiment_file(SMALL)
    for threads in (1, 4):
        result = _run("ids", config, "--out-dir", tmp_path / f"t{threads}", "--threads", threads)
        assert result.exit_code == EXIT_OK, result.output
    assert (tmp_path / "t1" / "small.csv").read_bytes() == (tmp_path / "t4" / "small.csv").read_bytes()
    assert _summary(tmp_path / "t1")["param_hash"] == _summary(tmp_path / "t4")["param_hash"]


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_INVARIANT, EXIT_VALIDATION}) == 3


@pytest.mark.slow
def test_selfcheck(experiment_file, tmp_path):
    out = tmp_path / "out"
    result = _run("selfcheck", experiment_file(SMALL), "--out-dir", out)
    assert result.exit_code == EXIT_OK, result.output
    summary = _summary(out)
    assert summary["passed"]
    assert any(name.startswith("structure.") for name in summary["invariants"])
    assert summary["invariants"]["determinism.thread_count_independent"]
