import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from nlslab.cli import main as cli_main
from nlslab.config import default_config, load_config
from nlslab.errors import ConfigError, DegenerateCouplingError
from nlslab.experiments import (
    loglog_fit,
    run_besov_vs_fourier,
    run_bubble_norms,
    run_commutator_sweep,
    run_experiment,
    run_zero_speed,
    select_tau,
    write_outputs,
)


# a modulated-scaling config small enough for unit tests: large eps,
# coarse grid, single rung
def small_modulated(threads=1):
    return load_config(None, "modulated_scaling", overrides={
        "epsilon_list": [0.4, 0.3, 0.2],
        "ladder": {"rungs": 1, "r1": 1.5},
        "grid": {"N": 256, "L": 2 * math.pi},
        "threads": threads,
    })


class TestFit:
    def test_exact_square_law(self):
        xs = [1.0, 2.0, 4.0, 8.0]
        fit = loglog_fit(xs, [x ** 2 for x in xs])
        assert fit.exponent == pytest.approx(2.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)
        assert len(fit.points) == 4

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            loglog_fit([1.0, 2.0], [1.0, 4.0])

    def test_nonpositive_data(self):
        with pytest.raises(ConfigError):
            loglog_fit([1.0, 2.0, 3.0], [1.0, -4.0, 9.0])


class TestConfig:
    def test_defaults_valid(self):
        for name in ("modulated_scaling", "norm_inflation", "zero_speed"):
            cfg = default_config(name)
            assert cfg["experiment"] == name

    def test_unknown_top_key(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("bogus_key: 1\n")
        with pytest.raises(ConfigError, match="bogus_key"):
            load_config(str(p))

    def test_unknown_nested_key(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("solver:\n  nonsense: 2\n")
        with pytest.raises(ConfigError, match="solver.nonsense"):
            load_config(str(p))

    def test_epsilon_ordering(self):
        with pytest.raises(ConfigError):
            load_config(None, "modulated_scaling",
                        overrides={"epsilon_list": [0.1, 0.2, 0.3]})

    def test_sigma_range(self):
        with pytest.raises(ConfigError):
            load_config(None, "norm_inflation", overrides={"sigma_list": [2.5]})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            default_config("nonexistent")


class TestSelectTau:
    def test_degenerate_trace(self):
        with pytest.raises(DegenerateCouplingError):
            select_tau([(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)], 0.2, 1.0)

    def test_picks_argmax_inside_window(self):
        trace = [(0.05, 0.1, 1.0), (0.10, 0.5, 1.0), (0.15, 0.3, 1.0),
                 (0.30, 9.9, 1.0)]  # last point beyond T/2
        tau = select_tau(trace, 0.4, 1.0)
        assert tau == 0.10

    def test_tau_stable_under_dt_halving(self, params1d, grid1d):
        import math as _m

        from nlslab.bubbles import bump_values, make_mollifier
        from nlslab.experiments import _coupling_trace
        from nlslab.hydro import SolverConfig, initial_state
        from nlslab.spectral import Field, convolve, l2_norm

        raw = Field(grid1d, bump_values(grid1d, np.pi, 1.5, _m.e))
        a0 = convolve(raw, make_mollifier(grid1d, 0.15))
        taus = []
        for safety in (0.5, 0.25):
            trace, T = _coupling_trace(initial_state(a0, 3),
                                       SolverConfig(dt_safety=safety))
            taus.append(select_tau(trace, T, l2_norm(a0)))
        assert abs(taus[0] - taus[1]) <= 0.10 * max(taus)


class TestRunners:
    def test_empty_sweeps_pass(self):
        cfg = load_config(None, "zero_speed", overrides={"ladder": {"rungs": 0}})
        res = run_zero_speed(cfg)
        assert res.passed and res.rows == []

        cfg = load_config(None, "besov_vs_fourier", overrides={"sigma_list": []})
        res = run_besov_vs_fourier(cfg)
        assert res.passed and res.rows == []

        cfg = load_config(None, "commutator_sweep",
                          overrides={"commutator": {"radii": []}})
        res = run_commutator_sweep(cfg)
        assert res.passed and res.rows == []

        cfg = load_config(None, "bubble_norms",
                          overrides={"bubble_norms": {"rungs": 0}})
        res = run_bubble_norms(cfg)
        assert res.passed and res.rows == []

    def test_modulated_small_run(self):
        res = run_experiment(small_modulated())
        assert res.passed
        assert abs(res.fits["H_renorm"].exponent - 2.0) <= 0.3
        for row in res.rows:
            for key in ("d", "m", "s", "eps", "h_k", "N", "dt"):
                assert key in row

    def test_modulated_needs_three_points(self):
        cfg = small_modulated()
        cfg["epsilon_list"] = [0.4, 0.2]
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_control_mode_when_s_above_embedding(self):
        cfg = load_config(None, "modulated_scaling", overrides={
            "model": {"d": 3, "m": 5, "s": 1.28},
            "ladder": {"M": 1.25},
        })
        res = run_experiment(cfg)
        assert res.notes.get("mode") == "control_t0"
        assert res.passed
        assert res.fits["H"].exponent < 1.9

    def test_determinism_and_thread_merge_order(self, tmp_path):
        outs = []
        for threads in (1, 2):
            res = run_experiment(small_modulated(threads=threads))
            paths = write_outputs(res, str(tmp_path / f"t{threads}"))
            outs.append(open(paths["csv"], "rb").read())
        assert outs[0] == outs[1]

    def test_summary_schema(self, tmp_path):
        res = run_experiment(small_modulated())
        paths = write_outputs(res, str(tmp_path))
        doc = json.loads(open(paths["summary"]).read())
        verdict = doc["experiments"]["modulated_scaling"]
        assert isinstance(verdict["passed"], bool)
        assert verdict["criteria"] and {"name", "value", "passed"} <= set(verdict["criteria"][0])
        assert "H_renorm" in verdict["fits"]
        with open(paths["csv"]) as fh:
            header = fh.readline().strip().split(",")
        assert {"d", "m", "s", "sigma", "eps", "h_k", "N", "dt"} <= set(header)

    def test_summary_merges_experiments(self, tmp_path):
        res = run_experiment(small_modulated())
        write_outputs(res, str(tmp_path))
        res2 = run_experiment(load_config(None, "besov_vs_fourier"))
        paths = write_outputs(res2, str(tmp_path))
        doc = json.loads(open(paths["summary"]).read())
        assert set(doc["experiments"]) == {"modulated_scaling", "besov_vs_fourier"}

    def test_zero_speed_trace_table(self, tmp_path):
        cfg = load_config(None, "zero_speed")
        res = run_experiment(cfg)
        assert "trace" in res.extra_tables
        cols, rows = res.extra_tables["trace"]
        assert cols[0] == "t" and "support_radius" in cols
        assert len(rows) > 10
        paths = write_outputs(res, str(tmp_path))
        assert (tmp_path / "zero_speed_trace.csv").exists()
        doc = json.loads(open(paths["summary"]).read())
        assert doc["experiments"]["zero_speed"]["tables"]["trace"] == "zero_speed_trace.csv"


class TestCli:
    def test_run_success_exit_zero(self, tmp_path, capsys):
        code = cli_main(["run", "besov_vs_fourier", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "besov_vs_fourier.csv").exists()
        assert (tmp_path / "summary.json").exists()

    def test_numerical_failure_exit_two(self, tmp_path, capsys):
        # a low-frequency band loses too much of the second-difference
        # integral: the 5% criterion must fail, exit code 2
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("besov:\n  band: [0.002, 0.01]\n")
        code = cli_main(["run", "besov_vs_fourier", "--config", str(cfg),
                         "--out", str(tmp_path)])
        assert code == 2

    def test_config_abort_exit_three(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("no_such_key: 1\n")
        code = cli_main(["run", "besov_vs_fourier", "--config", str(cfg),
                         "--out", str(tmp_path)])
        assert code == 3

    def test_sweep_override(self, tmp_path, capsys):
        code = cli_main([
            "sweep", "modulated_scaling", "--param", "eps",
            "--values", "0.4,0.3,0.2", "--out", str(tmp_path),
            "--resolution", "256",
            "--config", str(_write_small_cfg(tmp_path)),
        ])
        assert code == 0
        rows = open(tmp_path / "modulated_scaling.csv").read().splitlines()
        assert len(rows) == 4  # header + 3 eps values

    def test_check_command(self, capsys):
        assert cli_main(["check"]) == 0


def _write_small_cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(
        "ladder: {rungs: 1, r1: 1.5}\n"
        "grid: {L: 6.283185307179586}\n"
    )
    return p


class TestTheorem0:
    def test_preset_runs_and_passes(self):
        cfg = load_config(None, "theorem0_preset", overrides={
            "epsilon_list": [0.4, 0.3, 0.2],
            "ladder": {"rungs": 1, "r1": 1.5},
            "grid": {"N": 512, "L": 2 * math.pi},
            "background": {"width_fraction": 0.08},
        })
        res = run_experiment(cfg)
        assert res.passed
        assert all(row["background_amplitude"] > 0 for row in res.rows)
