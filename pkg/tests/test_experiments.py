import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from af_secrecy.channel import NoiseModel, build_network
from af_secrecy.cli import main
from af_secrecy.errors import InvalidConfigurationError
from af_secrecy.experiments import (CSV_HEADER, TRACE_HEADER, ExperimentConfig, ResultRow, format_rows,
                                    monte_carlo_average, run_experiment)
from af_secrecy.single_link import evaluate_non_opt_single, solve_opt, solve_subopt_relay_only_single

SMALL = dict(N=16, J=2, K=3, n_taps=4, budgets=[2.0, 5.0], relays=[1, 2], users=[1, 3], fixed_budget=4.0,
             fig3_n=[16], trials=1)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_fig6_row_count():
    rows = run_experiment(ExperimentConfig(experiment="fig6", seed=1, N=16, K=3, n_taps=4))
    assert len(rows) == 4 * 4
    assert [r.scheme for r in rows[::4]] == ["J-OPT", "Sub-OPT-I", "Sub-OPT-II", "Non-OPT"]
    assert [r.sweep_value for r in rows[:4]] == [1.0, 2.0, 3.0, 4.0]
    assert all(r.sweep_var == "J" for r in rows)


def test_byte_identical(tmp_path):
    out = []
    for name in ("a.csv", "b.csv"):
        cfg = ExperimentConfig(experiment="fig5", seed=3, out=str(tmp_path / name), **SMALL)
        run_experiment(cfg)
        out.append((tmp_path / name).read_bytes())
    assert out[0] == out[1]
    assert out[0].decode().splitlines()[0] == ",".join(CSV_HEADER)


def test_fig3_matches_direct_calls():
    cfg = ExperimentConfig(experiment="fig3", seed=5, budgets=[3.0], fig3_n=[8], n_taps=1, trials=1)
    rows = {r.scheme: r.sr_sum for r in run_experiment(cfg)}
    net = build_network((5, 0), 8, 1, 1, NoiseModel(1.0), 1, 1.0)
    assert rows["OPT_N8"] == solve_opt(net, 3.0, 3.0).sr_sum()
    assert rows["Sub-OPT_N8"] == solve_subopt_relay_only_single(net, 3.0, 3.0).sr_sum()
    assert rows["Non-OPT_N8"] == evaluate_non_opt_single(net, 3.0, 3.0).sr_sum()


def test_fig7_and_custom_run():
    rows = run_experiment(ExperimentConfig(experiment="fig7", seed=2, **SMALL))
    assert sorted({r.sweep_value for r in rows}) == [1.0, 3.0]
    rows = run_experiment(ExperimentConfig(experiment="custom", seed=2, **SMALL))
    assert len(rows) == 4 * 2
    for r in rows:
        assert np.isfinite(r.sr_sum) and r.sr_sum >= 0


def test_monte_carlo_average():
    rows = [ResultRow("fig5", t, "J-OPT", "budget", 1.0, v, 10, True, 0.0) for t, v in enumerate([1.0, 2.0, 6.0])]
    rows.append(ResultRow("fig5", 0, "Non-OPT", "budget", 1.0, 0.0, 0, True, 0.0))
    avg = monte_carlo_average(rows)
    assert [a.scheme for a in avg] == ["J-OPT", "Non-OPT"]
    assert (avg[0].mean, avg[0].min, avg[0].max, avg[0].n) == (3.0, 1.0, 6.0, 3)
    one = monte_carlo_average(rows[:1])[0]
    assert one.mean == one.min == one.max == 1.0
    with pytest.raises(ValueError):
        monte_carlo_average([])


def test_format_rows():
    text = format_rows([ResultRow("fig5", 0, "J-OPT", "budget", 7.0, 12.3456789, 42, True, 0.001)])
    assert text.splitlines()[1] == "fig5,0,J-OPT,budget,7,12.3457,42,true,0.001"


@pytest.mark.parametrize("bad", [
    {"experiment": "fig9"},
    {"N": 0},
    {"N": 4, "n_taps": 6},
    {"budgets": [1.0, -2.0]},
    {"budgets": []},
    {"users": [0]},
    {"clip": "sometimes"},
    {"seed": -1},
    {"solver": {"max_iters": 0}},
    {"solver": {"no_such_knob": 1}},
    {"bogus": 1},
])
def test_config_errors(bad):
    with pytest.raises(InvalidConfigurationError):
        ExperimentConfig.from_dict(bad)


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"experiment": "fig6", "solver": {"max_iters": 300}})
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.solver.max_iters == 300 and again.trials == 1
    assert ExperimentConfig(experiment="fig5").trials == 20


def test_fig4_traces(tmp_path):
    out = tmp_path / "fig4.csv"
    traces = []
    rows = run_experiment(ExperimentConfig(experiment="fig4", seed=0, N=32, out=str(out)), traces)
    assert [r.scheme for r in rows] == ["OPT", "Sub-OPT"]
    tr = read_csv(tmp_path / "fig4_trace.csv")
    assert tr[0] == TRACE_HEADER
    assert len(tr) - 1 == len(traces) == sum(r.iterations for r in rows)


# CLI


def write_cfg(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_run_config(tmp_path, capsys):
    out = tmp_path / "r.csv"
    cfg = write_cfg(tmp_path, f"experiment: fig6\nN: 16\nK: 3\nn_taps: 4\nrelays: [1, 2]\nout: {out}\n")
    assert main(["run", "--config", cfg]) == 0
    assert len(read_csv(out)) == 1 + 8


def test_cli_run_flags(tmp_path):
    out = tmp_path / "r.csv"
    cfg = write_cfg(tmp_path, "N: 16\nJ: 2\nK: 2\nn_taps: 4\nbudgets: [3]\n")
    assert main(["run", "--config", cfg, "--experiment", "fig5", "--seed", "7", "--trials", "2",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == CSV_HEADER and len(rows) == 1 + 2 * 4
    assert {r[1] for r in rows[1:]} == {"0", "1"}


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert main(["validate", "--config", write_cfg(tmp_path, "experiment: fig5\nN: -3\n")]) == 1
    assert main(["validate", "--config", write_cfg(tmp_path, "[1, 2]\n", "list.yaml")]) == 1
    assert main(["run", "--experiment", "fig6", "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == 3
    strict = write_cfg(tmp_path, "experiment: fig3\nfig3_n: [16]\nn_taps: 4\nbudgets: [5]\ntrials: 1\n"
                                 "solver: {max_iters: 2}\n", "strict.yaml")
    assert main(["run", "--config", strict, "--out", str(tmp_path / "s.csv")]) == 0
    assert main(["run", "--config", strict, "--strict", "--out", str(tmp_path / "s.csv")]) == 2


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "--config", write_cfg(tmp_path, '{"experiment": "fig7", "K": 4}', "c.json")]) == 0
    assert "config OK" in capsys.readouterr().out


def test_cli_oracle_check(capsys):
    assert main(["oracle-check", "--samples", "50", "--seed", "3"]) == 0
    assert "pass=50 fail=0" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "af_secrecy", "validate", "--config", "/nonexistent"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "config error" in r.stderr
