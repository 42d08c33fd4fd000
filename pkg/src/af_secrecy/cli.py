"""Command line entry point.

    af-secrecy run --config exp.yaml
    af-secrecy run --experiment fig5 --seed 7 --out results.csv
    af-secrecy validate --config exp.yaml
    af-secrecy oracle-check --samples 1000 --seed 3

Exit codes: 0 success, 1 config error, 2 non-convergence under ``--strict``,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidConfigurationError
from .experiments import ExperimentConfig, format_rows, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("af_secrecy")


def load_config_file(path) -> dict:
    """Read a YAML or JSON mapping (JSON is valid YAML)."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfigurationError(f"cannot parse {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigurationError(f"{path} must hold a key-value mapping")
    return data


def _build_config(args) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    for key in ("experiment", "seed", "trials", "out"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if "experiment" not in data:
        raise InvalidConfigurationError("no experiment given (use --experiment or the config key)")
    return ExperimentConfig.from_dict(data)


def _check_writable(path) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    for path in (cfg.out, cfg.trace_out):
        if path:
            _check_writable(path)
    t0 = time.perf_counter()
    rows = run_experiment(cfg)
    bad = [r for r in rows if not r.converged]
    log.info("%s: %d rows in %.1f s, %d not converged", cfg.experiment, len(rows),
             time.perf_counter() - t0, len(bad))
    if not cfg.out:
        sys.stdout.write(format_rows(rows))
    if bad and args.strict:
        print(f"{len(bad)} solver runs did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _build_config(args)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True, default=str))
    print("config OK")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    from .kkt import solve_inner_batch, solve_inner_oracle_batch

    if args.samples < 1:
        raise InvalidConfigurationError("--samples must be >= 1")
    H, G, F, lam, v = sample_inner_draws(args.samples, args.seed)
    p_box, q_box = 10.0 * args.budget, 10.0 * args.budget
    t0 = time.perf_counter()
    p, q, obj, fb = solve_inner_batch(H, G, F, lam, v, p_box, q_box, objective=args.objective)
    po, qo, objo = solve_inner_oracle_batch(H, G, F, lam, v, p_box, q_box, objective=args.objective)
    rel = np.abs(obj - objo) / np.maximum(np.abs(objo), 1e-12)
    ok = (rel <= args.rtol) | (np.abs(obj - objo) <= 1e-12)
    n_ok = int(ok.sum())
    print(f"samples={args.samples} pass={n_ok} fail={args.samples - n_ok} "
          f"fallback={int(fb.sum())} max_rel_err={rel.max():.3e} time={time.perf_counter() - t0:.2f}s")
    return EXIT_OK if n_ok == args.samples else EXIT_NONCONVERGED


def sample_inner_draws(n: int, seed: int):
    """Random (H, G, F, lam, v) with G > F, gains log-uniform over four decades."""
    rng = np.random.default_rng(seed)
    H = 10 ** rng.uniform(-2, 2, n)
    F = 10 ** rng.uniform(-2, 2, n)
    G = F * 10 ** rng.uniform(0.01, 2, n)
    lam = 10 ** rng.uniform(-2, 0.5, n)
    v = 10 ** rng.uniform(-2, 0.5, n)
    return H, G, F, lam, v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="af-secrecy", description="Secrecy-rate resource allocation for AF relay networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV")
    run.add_argument("--config")
    run.add_argument("--experiment")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out")
    run.add_argument("--strict", action="store_true", help="exit 2 if any solver run did not converge")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate, experiment=None, seed=None, trials=None, out=None)

    orc = sub.add_parser("oracle-check", help="compare analytic and numeric per-carrier maximizers")
    orc.add_argument("--samples", type=int, default=1000)
    orc.add_argument("--seed", type=int, default=3)
    orc.add_argument("--rtol", type=float, default=1e-4)
    orc.add_argument("--budget", type=float, default=10.0, help="oracle box is 10x this in each coordinate")
    orc.add_argument("--objective", choices=("exact", "approx"), default="exact")
    orc.set_defaults(func=_cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InvalidConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
