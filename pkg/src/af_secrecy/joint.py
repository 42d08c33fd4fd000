"""Joint power allocation, relay selection and sub-carrier assignment (J-OPT).

Each iteration solves the per-tuple subproblem for every (i, j, k), hands each
sub-carrier to its best-scoring (relay, user) pair and moves the source price
and the J relay prices against the power drawn by the winners. The same
loop, with the source power pinned at ``P_t / N`` and only relay prices,
drives Sub-OPT-I (see :mod:`af_secrecy.restricted`).

Assignments can flap between near-tied tuples while the prices settle. When
an assignment reappears inside the cycle window the assignment is frozen and
only the powers are re-converged. In every case the candidates seen in the
window are re-solved with their assignment fixed and the best is kept.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .channel import NetworkChannels
from .dual import (CycleDetector, DualTrace, PriceUpdater, SolverParams, SolveReport, build_report,
                   check_budgets, default_step, fit_relays, fit_to_budget, solve_fixed_assignment)
from .errors import InvalidConfigurationError
from .kkt import solve_inner_batch, solve_relay_batch
from .rates import Assignment, link_rate_exact

__all__ = ["assign_best", "solve_joint"]

# iterations before cycle detection may freeze the assignment
MIN_ITERS_BEFORE_FREEZE = 20


def assign_best(scores) -> Assignment:
    """Give every sub-carrier to its highest-scoring (relay, user) pair.

    Ties go to the smallest relay index, then the smallest user index.

    Parameters
    ----------
    scores : array_like, shape (N, J, K)

    Returns
    -------
    Assignment
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 3:
        raise ValueError(f"scores must have shape (N, J, K), got {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    N, J, K = scores.shape
    flat = scores.reshape(N, J * K).argmax(axis=1)
    relay, user = np.divmod(flat, K)
    return Assignment(relay, user)


def assignment_dual(net: NetworkChannels, P_t: float, Q, params: SolverParams, scheme: str,
                    p_fixed: Optional[np.ndarray] = None) -> SolveReport:
    """Dual loop over prices with per-iteration best-tuple assignment.

    With ``p_fixed`` the source powers are pinned and only relay prices move.
    """
    Q = check_budgets(P_t, Q)
    if Q.size != net.J:
        raise InvalidConfigurationError(f"need {net.J} relay budgets, got {Q.size}")
    N, J, K = net.N, net.J, net.K
    i = np.arange(N)
    a3, b3, c3 = net.a[:, :, None], net.b, net.c[:, :, None]
    q_box = Q[None, :, None]
    step0 = params.step_size or default_step(P_t, Q)
    fixed_source = p_fixed is not None
    lam0, v0 = params.init_prices
    if fixed_source:
        p_fixed = np.asarray(p_fixed, dtype=float)
        prices = PriceUpdater(np.full(J, v0), Q, step0, params.step_rule,
                              params.step_growth, params.step_shrink,
                              (params.step_cap, params.step_cap_start, params.step_cap_halflife))
    else:
        prices = PriceUpdater(np.concatenate([[lam0], np.full(J, v0)]), np.concatenate([[P_t], Q]),
                              step0, params.step_rule,
                              params.step_growth, params.step_shrink,
                              (params.step_cap, params.step_cap_start, params.step_cap_halflife))

    trace = DualTrace()
    detector = CycleDetector(params.cycle_window)
    assignments = {}
    best_primal, best_key = -np.inf, None
    best_dual = np.inf
    fallbacks = 0
    converged = cycled = False
    lam = 0.0
    m = 0
    for m in range(1, params.max_iters + 1):
        if fixed_source:
            V = prices.theta
            q, obj = solve_relay_batch(a3, b3, c3, p_fixed[:, None, None], V[None, :, None], q_box,
                                       params.objective)
        else:
            lam, V = prices.theta[0], prices.theta[1:]
            p, q, obj, fb = solve_inner_batch(a3, b3, c3, lam, V[None, :, None], P_t, q_box, params.objective)
            fallbacks += int(fb.sum())
        assign = assign_best(obj)
        key = assign.key()
        assignments.setdefault(key, assign)
        pa = p_fixed if fixed_source else p[i, assign.relay, assign.user]
        qa = q[i, assign.relay, assign.user]

        dual = obj[i, assign.relay, assign.user].sum() + V @ Q + (0.0 if fixed_source else lam * P_t)
        best_dual = min(best_dual, dual)
        relay_used = np.bincount(assign.relay, weights=qa, minlength=J)
        used = relay_used if fixed_source else np.concatenate([[pa.sum()], relay_used])

        ga, gb, gc = assign.gains(net)
        pf = pa if fixed_source else fit_to_budget(pa, P_t)
        primal = float(link_rate_exact(pf, fit_relays(qa, assign.relay, Q), ga, gb, gc).sum())
        if primal > best_primal:
            best_primal, best_key = primal, key

        if params.keep_trace:
            trace.record(lam, V, pa.sum(), relay_used, dual)
        cycling = detector.push(key)
        move = prices.update(used)
        if move < params.price_tol and prices.feasible(used, params.tol):
            converged = True
            break
        if cycling and m >= MIN_ITERS_BEFORE_FREEZE:
            cycled = True
            break

    # re-solve powers on each candidate assignment with the final prices as warm start
    if fixed_source:
        warm = (0.0, prices.theta.copy())
    else:
        warm = (float(prices.theta[0]), prices.theta[1:].copy())
    candidates = list(dict.fromkeys([*detector.distinct(), best_key, key]))
    best = None
    for ck in candidates:
        cand = assignments[ck]
        ga, gb, gc = cand.gains(net)
        res = solve_fixed_assignment(ga, gb, gc, cand.relay, J, P_t, Q, params, p_fixed=p_fixed, warm=warm)
        if best is None or res.primal_value > best[1].primal_value:
            best = (cand, res)
    cand, res = best
    if params.keep_trace:
        trace.extend(res.trace)
    rep = build_report(scheme, net, cand, res.p, res.q, P_t, Q, res, params.objective)
    rep.trace = trace
    rep.iterations = m
    rep.polish_iterations = res.iterations
    rep.converged = converged or (cycled and res.converged)
    rep.cycled = cycled
    rep.dual_value = float(min(best_dual, res.dual_value)) if K == 1 and J == 1 else float(best_dual)
    rep.fallbacks = fallbacks + res.fallbacks
    rep.inner_solves_per_iter = N * J * K
    rep.inner_solves = m * N * J * K
    rep.candidates = len(candidates)
    return rep


def solve_joint(net: NetworkChannels, P_t: float, Q, params: SolverParams = None) -> SolveReport:
    """J-OPT: joint source and relay powers, relay selection and user assignment.

    Parameters
    ----------
    net : NetworkChannels
    P_t : float
        Source budget (W).
    Q : float or array_like, shape (J,)
        Relay budgets (W); a scalar is applied to every relay.
    params : SolverParams, optional

    Returns
    -------
    SolveReport
        Exclusive assignment with a budget-feasible allocation. Each iteration
        costs ``N * J * K`` per-tuple solves (``inner_solves_per_iter``).
    """
    params = params or SolverParams()
    Q = np.broadcast_to(np.asarray(Q, dtype=float), (net.J,)).copy()
    return assignment_dual(net, P_t, Q, params, "J-OPT")
