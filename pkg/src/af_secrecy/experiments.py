"""Seeded experiment runner: scheme comparisons as CSV rows.

Experiments
-----------
fig3    OPT / Sub-OPT / Non-OPT on a single link vs budget, at each N in ``fig3_n``.
fig4    Dual price traces of OPT and Sub-OPT at the fixed budget.
fig5    J-OPT / Sub-OPT-I / Sub-OPT-II / Non-OPT vs budget.
fig6    The four multi-relay schemes vs number of relays at the fixed budget.
fig7    The four multi-relay schemes vs number of users at the fixed budget.
table3  fig6 under its own label.
custom  The four multi-relay schemes vs budget at the configured (N, J, K).

Trial ``t`` draws its network from seed ``(seed, t)``; the J and K sweeps
reuse one network drawn at the largest size and take nested sub-networks.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import NetworkChannels, NoiseModel, build_network
from .dual import SolverParams, SolveReport
from .errors import InvalidConfigurationError
from .joint import solve_joint
from .rates import CLIP_POLICIES
from .restricted import evaluate_non_opt_multi, solve_subopt1, solve_subopt2
from .single_link import evaluate_non_opt_single, solve_opt, solve_subopt_relay_only_single

__all__ = [
    "EXPERIMENTS",
    "CSV_HEADER",
    "ExperimentConfig",
    "ResultRow",
    "AveragedRow",
    "run_experiment",
    "monte_carlo_average",
    "write_rows",
    "format_rows",
    "write_traces",
]

EXPERIMENTS = ("fig3", "fig4", "fig5", "fig6", "fig7", "table3", "custom")
CSV_HEADER = ["experiment", "trial", "scheme", "sweep_var", "sweep_value", "sr_sum",
              "iterations", "converged", "duality_gap"]
TRACE_HEADER = ["experiment", "trial", "scheme", "iteration", "lam", "v", "source_used",
                "relay_used", "dual_objective"]
MULTI_SCHEMES = ("J-OPT", "Sub-OPT-I", "Sub-OPT-II", "Non-OPT")

# Monte-Carlo trials when the config leaves ``trials`` unset
_DEFAULT_TRIALS = {"fig3": 20, "fig4": 1, "fig5": 20, "fig6": 1, "fig7": 1, "table3": 1, "custom": 1}


@dataclass
class ExperimentConfig:
    """Everything needed to regenerate one CSV.

    Budgets are in watts; ``budgets`` sweeps ``P_t = Q_t`` (every relay gets
    ``Q_t``). ``fixed_budget`` is the operating point of fig4, fig6, fig7
    and table3.
    """

    experiment: str = "fig5"
    seed: int = 7
    N: int = 64
    J: int = 4
    K: int = 12
    n_taps: int = 6
    sigma2: float = 1.0
    tap_variance: float = 1.0
    budgets: list = field(default_factory=lambda: [float(b) for b in range(1, 11)])
    relays: list = field(default_factory=lambda: [1, 2, 3, 4])
    users: list = field(default_factory=lambda: [1, 2, 4, 6, 8, 10, 12])
    fig3_n: list = field(default_factory=lambda: [32, 64])
    fixed_budget: float = 7.0
    trials: Optional[int] = None
    clip: str = "subcarrier"
    solver: SolverParams = field(default_factory=SolverParams)
    out: Optional[str] = None
    trace_out: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.solver, dict):
            try:
                self.solver = SolverParams(**self.solver)
            except TypeError as exc:
                raise InvalidConfigurationError(f"bad solver settings: {exc}") from None
        if self.trials is None:
            self.trials = _DEFAULT_TRIALS.get(self.experiment, 1)
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise InvalidConfigurationError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for name in ("N", "J", "K", "n_taps", "trials"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise InvalidConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidConfigurationError(f"seed must be a nonnegative integer, got {self.seed!r}")
        for name in ("budgets", "relays", "users", "fig3_n"):
            grid = getattr(self, name)
            if not isinstance(grid, (list, tuple)) or len(grid) == 0:
                raise InvalidConfigurationError(f"{name} must be a nonempty list")
        for b in [*self.budgets, self.fixed_budget]:
            if not (isinstance(b, (int, float)) and math.isfinite(b) and b > 0):
                raise InvalidConfigurationError(f"budgets must be positive numbers, got {b!r}")
        for name in ("relays", "users", "fig3_n"):
            for v in getattr(self, name):
                if not isinstance(v, (int, np.integer)) or v < 1:
                    raise InvalidConfigurationError(f"{name} entries must be positive integers, got {v!r}")
        for n in [self.N, *self.fig3_n]:
            if n < self.n_taps:
                raise InvalidConfigurationError(f"N={n} is smaller than n_taps={self.n_taps}")
        if not (self.sigma2 > 0 and self.tap_variance > 0):
            raise InvalidConfigurationError("sigma2 and tap_variance must be positive")
        if self.clip not in CLIP_POLICIES:
            raise InvalidConfigurationError(f"clip must be one of {CLIP_POLICIES}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise InvalidConfigurationError("config must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InvalidConfigurationError(f"unknown config keys: {unknown}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["solver"] = dataclasses.asdict(self.solver)
        return d


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    trial: int
    scheme: str
    sweep_var: str
    sweep_value: float
    sr_sum: float
    iterations: int
    converged: bool
    duality_gap: float


@dataclass(frozen=True)
class AveragedRow:
    experiment: str
    scheme: str
    sweep_var: str
    sweep_value: float
    mean: float
    min: float
    max: float
    n: int


def _network(cfg: ExperimentConfig, trial: int, N: int, J: int, K: int) -> NetworkChannels:
    return build_network((cfg.seed, trial), N, J, K, NoiseModel(cfg.sigma2), cfg.n_taps, cfg.tap_variance)


def _row(cfg, trial, rep: SolveReport, scheme, var, value, clip=None) -> ResultRow:
    if not rep.is_feasible():
        raise RuntimeError(f"{scheme} returned an allocation outside the budgets")
    return ResultRow(cfg.experiment, trial, scheme, var, float(value), rep.sr_sum(clip or cfg.clip),
                     int(rep.iterations), bool(rep.converged), float(rep.duality_gap))


def _multi(cfg, net, trial, budget):
    """The four multi-relay schemes on one network, keyed by scheme name."""
    Q = np.full(net.J, budget)
    p = cfg.solver
    return {
        "J-OPT": solve_joint(net, budget, Q, p),
        "Sub-OPT-I": solve_subopt1(net, budget, Q, p),
        "Sub-OPT-II": solve_subopt2(net, budget, Q, p, assign_seed=(cfg.seed, trial)),
        "Non-OPT": evaluate_non_opt_multi(net, budget, Q, assign_seed=(cfg.seed, trial)),
    }


def _single(cfg, net, budget):
    p = cfg.solver
    return {
        "OPT": solve_opt(net, budget, budget, p),
        "Sub-OPT": solve_subopt_relay_only_single(net, budget, budget, p),
        "Non-OPT": evaluate_non_opt_single(net, budget, budget),
    }


def run_experiment(cfg: ExperimentConfig, traces: Optional[list] = None) -> list:
    """Run ``cfg`` and return its rows in (trial, scheme, sweep) order.

    If ``cfg.out`` is set the rows are written there as CSV. For fig4 the
    per-iteration traces are appended to ``traces`` (when given) and written
    to ``cfg.trace_out`` (default: ``<out stem>_trace.csv``).
    """
    cfg.validate()
    rows = []
    exp = cfg.experiment
    trace_rows = traces if traces is not None else []
    for t in range(cfg.trials):
        if exp == "fig3":
            for N in cfg.fig3_n:
                net = _network(cfg, t, N, 1, 1)
                per = {}
                for b in cfg.budgets:
                    for name, rep in _single(cfg, net, b).items():
                        per.setdefault(name, []).append(_row(cfg, t, rep, f"{name}_N{N}", "budget", b))
                for name in ("OPT", "Sub-OPT", "Non-OPT"):
                    rows.extend(per[name])
        elif exp == "fig4":
            net = _network(cfg, t, cfg.N, 1, 1)
            b = cfg.fixed_budget
            for name, rep in _single(cfg, net, b).items():
                if name == "Non-OPT":
                    continue
                rows.append(_row(cfg, t, rep, name, "budget", b))
                trace_rows.extend(_trace_rows(exp, t, name, rep))
        elif exp in ("fig5", "custom"):
            net = _network(cfg, t, cfg.N, cfg.J, cfg.K)
            per = {}
            for b in cfg.budgets:
                for name, rep in _multi(cfg, net, t, b).items():
                    per.setdefault(name, []).append(_row(cfg, t, rep, name, "budget", b))
            for name in MULTI_SCHEMES:
                rows.extend(per[name])
        elif exp in ("fig6", "table3"):
            full = _network(cfg, t, cfg.N, max(cfg.relays), cfg.K)
            per = {}
            for J in cfg.relays:
                for name, rep in _multi(cfg, full.subnetwork(J, cfg.K), t, cfg.fixed_budget).items():
                    per.setdefault(name, []).append(_row(cfg, t, rep, name, "J", J))
            for name in MULTI_SCHEMES:
                rows.extend(per[name])
        elif exp == "fig7":
            full = _network(cfg, t, cfg.N, cfg.J, max(cfg.users))
            per = {}
            for K in cfg.users:
                for name, rep in _multi(cfg, full.subnetwork(cfg.J, K), t, cfg.fixed_budget).items():
                    per.setdefault(name, []).append(_row(cfg, t, rep, name, "K", K))
            for name in MULTI_SCHEMES:
                rows.extend(per[name])
    if cfg.out:
        write_rows(rows, cfg.out)
        if exp == "fig4":
            write_traces(trace_rows, cfg.trace_out or _trace_path(cfg.out))
    return rows


def _trace_path(out) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + "_trace" + (p.suffix or ".csv")))


def _trace_rows(exp, trial, scheme, rep: SolveReport) -> list:
    tr = rep.trace
    out = []
    for m in range(len(tr)):
        v = np.atleast_1d(tr.v[m])
        used = np.atleast_1d(tr.relay_used[m])
        out.append((exp, trial, scheme, m + 1, tr.lam[m], float(v[0]), tr.source_used[m], float(used[0]),
                    tr.dual_objective[m]))
    return out


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def format_rows(rows) -> str:
    """CSV text with the fixed header; floats to 6 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def write_rows(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_rows(rows))


def write_traces(trace_rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace_rows:
        w.writerow([_fmt(x) for x in r])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def monte_carlo_average(rows) -> list:
    """Mean, min and max of ``sr_sum`` per (experiment, scheme, sweep point).

    Groups keep the order of first appearance.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("monte_carlo_average needs at least one row")
    groups = {}
    for r in rows:
        groups.setdefault((r.experiment, r.scheme, r.sweep_var, r.sweep_value), []).append(r.sr_sum)
    out = []
    for (exp, scheme, var, value), vals in groups.items():
        v = np.asarray(vals, dtype=float)
        out.append(AveragedRow(exp, scheme, var, value, float(v.mean()), float(v.min()), float(v.max()), v.size))
    return out
