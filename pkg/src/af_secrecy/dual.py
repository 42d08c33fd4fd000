"""Dual subgradient machinery shared by every optimizing scheme.

Prices move in the direction of budget violation (overspending raises the
price) and are projected onto the nonnegative orthant. Two step rules:

``adaptive`` (default)
    Per-price step that halves whenever that price's residual changes sign
    and grows by 20 % otherwise. The step never exceeds ``step0 * step_cap``,
    and after ``step_cap_start`` iterations that ceiling halves every
    ``step_cap_halflife`` iterations. The decaying ceiling ends the limit
    cycles that appear when per-carrier maximizers jump between the origin
    and an interior peak.
``diminishing``
    ``step_m = step0 / sqrt(m)``.

Primal recovery keeps the best budget-feasible allocation seen along the
iterations (each iterate scaled down onto the budgets when it overspends).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import NetworkChannels
from .errors import InvalidConfigurationError
from .kkt import solve_inner_batch, solve_relay_batch
from .rates import Assignment, PowerAllocation, apply_clip, link_rate_exact, subcarrier_rates

__all__ = [
    "SolverParams",
    "DualTrace",
    "SolveReport",
    "fit_to_budget",
    "solve_fixed_assignment",
    "build_report",
]

STEP_RULES = ("adaptive", "diminishing")


@dataclass
class SolverParams:
    """Subgradient settings.

    ``step_size`` is the initial step (price units per watt of violation);
    ``None`` means ``0.1 / max(P_t, max Q_t)``. The ``step_*``
    fields tune the adaptive rule. ``tol`` is the relative budget
    violation accepted at convergence and ``price_tol`` the largest price move
    of the final iteration.
    """

    step_size: Optional[float] = None
    step_rule: str = "adaptive"
    max_iters: int = 5000
    tol: float = 1e-3
    price_tol: float = 1e-6
    init_prices: tuple = (0.5, 0.5)
    objective: str = "exact"
    step_growth: float = 1.2
    step_shrink: float = 0.5
    step_cap: float = 100.0
    step_cap_start: int = 200
    step_cap_halflife: float = 100.0
    cycle_window: int = 10
    keep_trace: bool = True

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise InvalidConfigurationError("step_size must be positive")
        if self.step_rule not in STEP_RULES:
            raise InvalidConfigurationError(f"step_rule must be one of {STEP_RULES}")
        if not (self.step_growth >= 1.0 and 0.0 < self.step_shrink < 1.0):
            raise InvalidConfigurationError("need step_growth >= 1 and 0 < step_shrink < 1")
        if self.max_iters < 1:
            raise InvalidConfigurationError("max_iters must be >= 1")
        if not (self.tol > 0 and self.price_tol > 0):
            raise InvalidConfigurationError("tolerances must be positive")
        if len(self.init_prices) != 2 or min(self.init_prices) < 0:
            raise InvalidConfigurationError("init_prices must be two nonnegative numbers")
        self.init_prices = tuple(float(x) for x in self.init_prices)
        if self.objective not in ("exact", "approx"):
            raise InvalidConfigurationError("objective must be 'exact' or 'approx'")


@dataclass
class DualTrace:
    """Per-iteration prices, budget usage and dual objective."""

    lam: list = field(default_factory=list)
    v: list = field(default_factory=list)
    source_used: list = field(default_factory=list)
    relay_used: list = field(default_factory=list)
    dual_objective: list = field(default_factory=list)

    def record(self, lam, v, source_used, relay_used, dual_objective):
        self.lam.append(float(lam))
        self.v.append(np.array(v, dtype=float))
        self.source_used.append(float(source_used))
        self.relay_used.append(np.array(relay_used, dtype=float))
        self.dual_objective.append(float(dual_objective))

    def extend(self, other: "DualTrace"):
        for name in ("lam", "v", "source_used", "relay_used", "dual_objective"):
            getattr(self, name).extend(getattr(other, name))

    def __len__(self):
        return len(self.dual_objective)

    def as_arrays(self):
        return {
            "lam": np.array(self.lam),
            "v": np.array(self.v),
            "source_used": np.array(self.source_used),
            "relay_used": np.array(self.relay_used),
            "dual_objective": np.array(self.dual_objective),
        }


@dataclass
class SolveReport:
    """Outcome of one scheme on one network.

    Rates are in bits/s/Hz and include the 1/2 half-duplex pre-log.
    ``dual_value`` and ``primal_value`` are the best dual bound and the
    recovered primal objective, both without the 1/2 factor; ``duality_gap``
    is their relative difference.
    """

    scheme: str
    net: NetworkChannels
    allocation: PowerAllocation
    assignment: Assignment
    P_t: float
    Q_t: np.ndarray
    trace: DualTrace = field(default_factory=DualTrace)
    iterations: int = 0
    converged: bool = True
    dual_value: float = float("nan")
    primal_value: float = float("nan")
    fallbacks: int = 0
    inner_solves: int = 0
    inner_solves_per_iter: int = 0
    prices: dict = field(default_factory=dict)
    objective: str = "exact"

    def rates(self, mode: str = "exact") -> np.ndarray:
        return subcarrier_rates(self.allocation, self.assignment, self.net, mode)

    def sr_sum(self, clip: str = "subcarrier", mode: str = "exact") -> float:
        return apply_clip(self.rates(mode), clip)

    @property
    def sr_sum_exact(self) -> float:
        return self.sr_sum("subcarrier", "exact")

    @property
    def sr_sum_approx(self) -> float:
        return self.sr_sum("subcarrier", "approx")

    @property
    def duality_gap(self) -> float:
        if not np.isfinite(self.dual_value):
            return float("nan")
        diff = self.dual_value - self.primal_value
        return diff / self.primal_value if self.primal_value > 0 else diff

    @property
    def residuals(self) -> dict:
        """Unused budget (nonnegative when feasible)."""
        return {"source": self.P_t - self.allocation.source_total,
                "relay": self.Q_t - self.allocation.relay_totals}

    def is_feasible(self) -> bool:
        r = self.residuals
        return bool(r["source"] >= 0 and np.all(r["relay"] >= 0)
                    and np.all(self.allocation.p >= 0) and np.all(self.allocation.u >= 0))


# relative headroom kept below each budget so that any summation order stays within it
BUDGET_MARGIN = 1e-12


def fit_to_budget(x: np.ndarray, budget: float) -> np.ndarray:
    """Scale ``x`` down proportionally so that its sum stays within ``budget``.

    Vectors already within ``budget * (1 - BUDGET_MARGIN)`` are returned
    unchanged; the margin absorbs rounding differences between summation orders.
    """
    x = np.asarray(x, dtype=float)
    cap = budget * (1.0 - BUDGET_MARGIN)
    total = x.sum()
    if total <= cap:
        return x
    return x * (cap / total)


def uniform_split(n: int, budget: float) -> np.ndarray:
    """``n`` equal shares of ``budget`` (less the rounding margin)."""
    return np.full(n, budget * (1.0 - BUDGET_MARGIN) / n)


def fit_relays(q: np.ndarray, relay: np.ndarray, Q: np.ndarray) -> np.ndarray:
    q = q.copy()
    for j in range(Q.size):
        sel = relay == j
        if sel.any():
            q[sel] = fit_to_budget(q[sel], Q[j])
    return q


def default_step(P_t: float, Q: np.ndarray) -> float:
    return 0.1 / max(P_t, float(np.max(Q)))


class PriceUpdater:
    """Projected subgradient update of a price vector against its budgets."""

    def __init__(self, prices, budgets, step0: float, rule: str, growth: float = 1.2, shrink: float = 0.5,
                 cap: tuple = (np.inf, 0, np.inf)):
        self.theta = np.array(prices, dtype=float)
        self.budgets = np.array(budgets, dtype=float)
        self.step0 = step0
        self.rule = rule
        self.growth = growth
        self.shrink = shrink
        self.delta = np.full(self.theta.shape, step0)
        self.prev = np.zeros(self.theta.shape)
        self.cap = cap
        self.m = 0

    def update(self, used) -> float:
        """Apply one step; returns the largest absolute price change."""
        self.m += 1
        r = np.asarray(used, dtype=float) - self.budgets
        if self.rule == "diminishing":
            step = np.full(self.theta.shape, self.step0 / np.sqrt(self.m))
        else:
            flipped = (np.sign(r) * np.sign(self.prev)) < 0
            pinned = (self.theta <= 0) & (r < 0)
            self.delta = np.where(flipped, self.shrink * self.delta,
                                  np.where(pinned, self.delta, self.growth * self.delta))
            scale, start, halflife = self.cap
            limit = self.step0 * scale * 0.5 ** (max(0, self.m - start) / halflife)
            self.delta = np.minimum(self.delta, limit)
            step = self.delta
        self.prev = r
        new = np.maximum(0.0, self.theta + step * r)
        move = float(np.max(np.abs(new - self.theta))) if new.size else 0.0
        self.theta = new
        return move

    def feasible(self, used, tol: float) -> bool:
        return bool(np.all(np.asarray(used) <= self.budgets * (1.0 + tol)))


@dataclass
class FixedResult:
    p: np.ndarray
    q: np.ndarray
    lam: float
    V: np.ndarray
    trace: DualTrace
    converged: bool
    iterations: int
    dual_value: float
    primal_value: float
    fallbacks: int
    inner_solves: int


def solve_fixed_assignment(a, b, c, relay, J: int, P_t: float, Q, params: SolverParams,
                           p_fixed: Optional[np.ndarray] = None, warm: Optional[tuple] = None) -> FixedResult:
    """Optimize powers for a fixed sub-carrier -> (relay, user) assignment.

    Parameters
    ----------
    a, b, c : ndarray, shape (N,)
        Gains of the assigned tuple on each sub-carrier.
    relay : ndarray of int, shape (N,)
        Relay serving each sub-carrier.
    J : int
        Number of relays (one price and budget each).
    P_t : float
        Source budget.
    Q : array_like, shape (J,)
        Relay budgets.
    params : SolverParams
    p_fixed : ndarray, optional
        Hold the source powers at these values and price the relays only.
    warm : (lam, V), optional
        Initial prices.

    Returns
    -------
    FixedResult
        Best feasible allocation found, prices, trace and bounds. Values
        exclude the 1/2 pre-log.
    """
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    relay = np.asarray(relay, dtype=np.int64)
    Q = np.asarray(Q, dtype=float)
    N = a.size
    lam0, v0 = params.init_prices if warm is None else (warm[0], None)
    V0 = np.full(J, params.init_prices[1]) if warm is None else np.array(warm[1], dtype=float)
    step0 = params.step_size or default_step(P_t, Q)
    fixed_source = p_fixed is not None
    if fixed_source:
        p_fixed = np.asarray(p_fixed, dtype=float)
        prices = PriceUpdater(V0, Q, step0, params.step_rule,
                              params.step_growth, params.step_shrink,
                              (params.step_cap, params.step_cap_start, params.step_cap_halflife))
        lam = 0.0
    else:
        prices = PriceUpdater(np.concatenate([[lam0], V0]), np.concatenate([[P_t], Q]),
                              step0, params.step_rule,
                              params.step_growth, params.step_shrink,
                              (params.step_cap, params.step_cap_start, params.step_cap_halflife))
    q_box = Q[relay]
    trace = DualTrace()
    best_primal, best_p, best_q = -np.inf, np.zeros(N), np.zeros(N)
    best_dual = np.inf
    fallbacks = 0
    converged = False
    m = 0
    for m in range(1, params.max_iters + 1):
        if fixed_source:
            V = prices.theta
            q, obj = solve_relay_batch(a, b, c, p_fixed, V[relay], q_box, params.objective)
            p = p_fixed
            dual = obj.sum() + V @ Q
            used = np.bincount(relay, weights=q, minlength=J)
        else:
            lam, V = prices.theta[0], prices.theta[1:]
            p, q, obj, fb = solve_inner_batch(a, b, c, lam, V[relay], P_t, q_box, params.objective)
            fallbacks += int(fb.sum())
            dual = obj.sum() + lam * P_t + V @ Q
            relay_used = np.bincount(relay, weights=q, minlength=J)
            used = np.concatenate([[p.sum()], relay_used])
        best_dual = min(best_dual, dual)

        pf = p if fixed_source else fit_to_budget(p, P_t)
        qf = fit_relays(q, relay, Q)
        primal = float(link_rate_exact(pf, qf, a, b, c).sum())
        if primal > best_primal:
            best_primal, best_p, best_q = primal, pf, qf

        if params.keep_trace:
            if fixed_source:
                trace.record(0.0, V, p.sum(), used, dual)
            else:
                trace.record(lam, V, used[0], used[1:], dual)
        move = prices.update(used)
        if move < params.price_tol and prices.feasible(used, params.tol):
            converged = True
            break

    if fixed_source:
        lam_out, V_out = 0.0, prices.theta.copy()
    else:
        lam_out, V_out = float(prices.theta[0]), prices.theta[1:].copy()
    return FixedResult(best_p, best_q, lam_out, V_out, trace, converged, m, float(best_dual),
                       best_primal, fallbacks, m * N)


class CycleDetector:
    """Flags assignment flapping: the current assignment reappears within
    the window after a different one was chosen in between."""

    def __init__(self, window: int):
        self.recent = deque(maxlen=window)

    def push(self, key: bytes) -> bool:
        cycling = bool(self.recent) and key != self.recent[-1] and key in self.recent
        self.recent.append(key)
        return cycling

    def distinct(self):
        seen = []
        for k in self.recent:
            if k not in seen:
                seen.append(k)
        return seen


def build_report(scheme: str, net: NetworkChannels, assignment: Assignment, p, q, P_t: float, Q,
                 fixed: Optional[FixedResult] = None, objective: str = "exact", **extra) -> SolveReport:
    """Package per-sub-carrier powers on ``assignment`` into a :class:`SolveReport`."""
    N = net.N
    u = np.zeros((N, net.J))
    u[np.arange(N), assignment.relay] = q
    rep = SolveReport(scheme=scheme, net=net, allocation=PowerAllocation(np.array(p, dtype=float), u),
                      assignment=assignment, P_t=float(P_t), Q_t=np.asarray(Q, dtype=float).copy(),
                      objective=objective)
    if fixed is not None:
        rep.trace = fixed.trace
        rep.iterations = fixed.iterations
        rep.converged = fixed.converged
        rep.dual_value = fixed.dual_value
        rep.primal_value = fixed.primal_value
        rep.fallbacks = fixed.fallbacks
        rep.inner_solves = fixed.inner_solves
        rep.inner_solves_per_iter = N
        rep.prices = {"lam": fixed.lam, "V": fixed.V.copy()}
    else:
        i = np.arange(N)
        rep.primal_value = float(link_rate_exact(rep.allocation.p, q, net.a[i, assignment.relay],
                                                 net.b[i, assignment.relay, assignment.user],
                                                 net.c[i, assignment.relay]).sum())
    for k, v in extra.items():
        setattr(rep, k, v)
    return rep


def check_budgets(P_t, Q) -> np.ndarray:
    Q = np.atleast_1d(np.asarray(Q, dtype=float))
    if not (np.isfinite(P_t) and P_t > 0) or not np.all(np.isfinite(Q)) or np.any(Q <= 0):
        raise InvalidConfigurationError(f"budgets must be positive and finite, got P_t={P_t}, Q={Q}")
    return Q
