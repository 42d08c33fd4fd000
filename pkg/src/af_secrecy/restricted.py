"""Reduced-complexity multi-relay schemes and the unoptimized baseline.

Sub-OPT-I
    Uniform source power ``P_t / N``; relay powers, relay selection and user
    assignment from the relay-priced dual loop.
Sub-OPT-II
    A seeded random exclusive assignment, then joint source and relay powers
    under ``J + 1`` budgets (N per-carrier solves per iteration).
Non-OPT
    The same random assignment with both budgets split evenly.
"""

from __future__ import annotations

import numpy as np

from .channel import NetworkChannels
from .dual import SolverParams, SolveReport, build_report, check_budgets, solve_fixed_assignment, uniform_split
from .errors import InvalidConfigurationError
from .joint import assignment_dual
from .rates import Assignment

__all__ = ["random_assignment", "solve_subopt1", "solve_subopt2", "evaluate_non_opt_multi"]

# salt separating assignment streams from channel streams
_ASSIGN_STREAM = 0xA55


def _relay_budgets(net: NetworkChannels, Q) -> np.ndarray:
    Q = np.broadcast_to(np.asarray(Q, dtype=float), (net.J,)).copy()
    return Q


def random_assignment(N: int, J: int, K: int, assign_seed) -> Assignment:
    """Each sub-carrier independently to a uniformly drawn (relay, user) pair.

    ``assign_seed`` is an int or a sequence of ints.
    """
    if min(N, J, K) < 1:
        raise InvalidConfigurationError("N, J, K must be >= 1")
    seeds = [assign_seed] if np.isscalar(assign_seed) else list(assign_seed)
    rng = np.random.default_rng([*(int(s) for s in seeds), _ASSIGN_STREAM])
    relay, user = np.divmod(rng.integers(0, J * K, size=N), K)
    return Assignment(relay, user)


def solve_subopt1(net: NetworkChannels, P_t: float, Q, params: SolverParams = None) -> SolveReport:
    """Sub-OPT-I: uniform source power, optimized relay side.

    Per-tuple relay powers come from the fixed-source relay subproblem at
    price ``zeta_j``; each sub-carrier goes to its best tuple and the J relay
    prices follow the subgradient.
    """
    params = params or SolverParams()
    Q = _relay_budgets(net, Q)
    check_budgets(P_t, Q)
    return assignment_dual(net, P_t, Q, params, "Sub-OPT-I", p_fixed=uniform_split(net.N, P_t))


def solve_subopt2(net: NetworkChannels, P_t: float, Q, params: SolverParams = None,
                  assign_seed=0) -> SolveReport:
    """Sub-OPT-II: random exclusive assignment, then power-only optimization.

    Parameters
    ----------
    net : NetworkChannels
    P_t : float
    Q : float or array_like, shape (J,)
    params : SolverParams, optional
    assign_seed : int
        Seed of the random assignment; Non-OPT with the same seed uses the
        same assignment.
    """
    params = params or SolverParams()
    Q = _relay_budgets(net, Q)
    check_budgets(P_t, Q)
    assign = random_assignment(net.N, net.J, net.K, assign_seed)
    return solve_with_assignment(net, assign, P_t, Q, params, "Sub-OPT-II")


def solve_with_assignment(net: NetworkChannels, assign: Assignment, P_t: float, Q, params: SolverParams,
                          scheme: str = "fixed") -> SolveReport:
    """Optimal powers under a given exclusive assignment (J + 1 budgets)."""
    Q = _relay_budgets(net, Q)
    assign.validate(net)
    a, b, c = assign.gains(net)
    res = solve_fixed_assignment(a, b, c, assign.relay, net.J, P_t, Q, params)
    return build_report(scheme, net, assign, res.p, res.q, P_t, Q, res, params.objective)


def evaluate_non_opt_multi(net: NetworkChannels, P_t: float, Q, assign_seed=0) -> SolveReport:
    """Random assignment, ``p_i = P_t / N`` and each relay's budget split over its own carriers."""
    Q = _relay_budgets(net, Q)
    check_budgets(P_t, Q)
    assign = random_assignment(net.N, net.J, net.K, assign_seed)
    q = np.zeros(net.N)
    counts = np.bincount(assign.relay, minlength=net.J)
    for j in np.flatnonzero(counts):
        q[assign.relay == j] = uniform_split(counts[j], Q[j])
    return build_report("Non-OPT", net, assign, uniform_split(net.N, P_t), q, P_t, Q)
