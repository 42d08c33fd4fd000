"""Single source, single relay, single user: OPT and its two baselines.

OPT prices the source budget and the relay budget and lets every
sub-carrier pick its own (p, q). Sub-OPT fixes ``p = P_t / N`` and prices the
relay budget only. Non-OPT spreads both budgets evenly.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .channel import NetworkChannels
from .dual import (SolverParams, SolveReport, build_report, check_budgets,
                   solve_fixed_assignment, uniform_split)
from .errors import InvalidConfigurationError
from .rates import Assignment, SubcarrierGains

__all__ = ["as_single_network", "solve_opt", "solve_subopt_relay_only_single", "evaluate_non_opt_single"]

GainsLike = Union[NetworkChannels, Sequence[SubcarrierGains]]


def as_single_network(gains: GainsLike) -> NetworkChannels:
    """Accept a J = K = 1 network or a sequence of :class:`SubcarrierGains`."""
    if isinstance(gains, NetworkChannels):
        if gains.J != 1 or gains.K != 1:
            raise InvalidConfigurationError("single-link solvers need J = K = 1")
        return gains
    gains = list(gains)
    if not gains:
        raise InvalidConfigurationError("need at least one sub-carrier")
    H = np.array([g.H for g in gains], dtype=float)
    G = np.array([g.G for g in gains], dtype=float)
    F = np.array([g.F for g in gains], dtype=float)
    return NetworkChannels.from_single(H, G, F)


def _single_budgets(P_t, Q_t):
    Q = check_budgets(P_t, Q_t)
    if Q.size != 1:
        raise InvalidConfigurationError("single-link solvers take a scalar relay budget")
    return Q


def solve_opt(gains: GainsLike, P_t: float, Q_t: float, params: SolverParams = None) -> SolveReport:
    """Joint source and relay power allocation by dual subgradient.

    Parameters
    ----------
    gains : NetworkChannels or sequence of SubcarrierGains
        Per-sub-carrier (H, G, F).
    P_t, Q_t : float
        Source and relay power budgets (W).
    params : SolverParams, optional

    Returns
    -------
    SolveReport
        ``converged`` is False when ``max_iters`` ran out; the allocation is
        still the best budget-feasible one seen.
    """
    params = params or SolverParams()
    net = as_single_network(gains)
    Q = _single_budgets(P_t, Q_t)
    H, G, F = net.single_link()
    res = solve_fixed_assignment(H, G, F, np.zeros(net.N, dtype=np.int64), 1, P_t, Q, params)
    return build_report("OPT", net, Assignment.trivial(net.N), res.p, res.q, P_t, Q, res, params.objective)


def solve_subopt_relay_only_single(gains: GainsLike, P_t: float, Q_t: float,
                                   params: SolverParams = None) -> SolveReport:
    """Uniform source power, relay power optimized under one relay price."""
    params = params or SolverParams()
    net = as_single_network(gains)
    Q = _single_budgets(P_t, Q_t)
    H, G, F = net.single_link()
    p = uniform_split(net.N, P_t)
    res = solve_fixed_assignment(H, G, F, np.zeros(net.N, dtype=np.int64), 1, P_t, Q, params, p_fixed=p)
    return build_report("Sub-OPT", net, Assignment.trivial(net.N), res.p, res.q, P_t, Q, res, params.objective)


def evaluate_non_opt_single(gains: GainsLike, P_t: float, Q_t: float) -> SolveReport:
    """Equal split of both budgets over all sub-carriers."""
    net = as_single_network(gains)
    Q = _single_budgets(P_t, Q_t)
    N = net.N
    return build_report("Non-OPT", net, Assignment.trivial(N), uniform_split(N, P_t), uniform_split(N, Q[0]),
                        P_t, Q)

