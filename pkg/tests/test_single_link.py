import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from af_secrecy.channel import NetworkChannels, build_network
from af_secrecy.dual import SolverParams
from af_secrecy.errors import InvalidConfigurationError
from af_secrecy.rates import PowerPair, SubcarrierGains, approx_secrecy_rate, link_rate_exact
from af_secrecy.single_link import evaluate_non_opt_single, solve_opt, solve_subopt_relay_only_single


def best_rate_one_carrier(H, G, F, P, Q):
    """Dense (p, q) grid over the budget box, refined in q at the best p."""
    ps = np.linspace(0, P, 401)
    qs = np.linspace(0, Q, 401)
    R = link_rate_exact(ps[:, None], qs[None, :], H, G, F)
    i, j = np.unravel_index(np.argmax(R), R.shape)
    r = minimize_scalar(lambda q: -float(link_rate_exact(ps[i], q, H, G, F)), bounds=(0, Q), method="bounded",
                        options={"xatol": 1e-12})
    return 0.5 * max(R[i, j], -r.fun)


def test_insecure_everywhere_gives_zero():
    net = NetworkChannels.from_single([1.0, 2.0, 3.0], [1.0, 0.5, 0.1], [1.0, 0.7, 0.2])
    for solver in (solve_opt, solve_subopt_relay_only_single):
        rep = solver(net, 5.0, 5.0)
        assert rep.sr_sum() == 0.0
        assert np.all(rep.allocation.u == 0)
    assert np.all(solve_opt(net, 5.0, 5.0).allocation.p == 0)


@pytest.mark.parametrize("H,G,F", [(2.0, 3.0, 1.0), (0.3, 5.0, 0.2), (4.0, 1.5, 1.0)])
def test_one_carrier_matches_grid_oracle(H, G, F):
    rep = solve_opt([SubcarrierGains(H, G, F)], 2.0, 3.0)
    assert rep.converged
    assert rep.sr_sum() == pytest.approx(best_rate_one_carrier(H, G, F, 2.0, 3.0), abs=1e-3)
    assert rep.allocation.p[0] == pytest.approx(2.0, rel=1e-6)


def test_subopt_one_carrier_matches_1d_oracle():
    H, G, F, P, Q = 0.8, 3.0, 0.5, 2.0, 3.0
    rep = solve_subopt_relay_only_single([SubcarrierGains(H, G, F)], P, Q)
    r = minimize_scalar(lambda q: -float(link_rate_exact(P, q, H, G, F)), bounds=(0, Q), method="bounded",
                        options={"xatol": 1e-12})
    assert rep.allocation.u[0, 0] == pytest.approx(r.x, abs=1e-4)
    assert rep.sr_sum() == pytest.approx(-0.5 * r.fun, abs=1e-6)


def test_subopt_equal_links_gets_no_relay_power():
    net = NetworkChannels.from_single([1.0, 2.0], [1.0, 3.0], [1.0, 3.0])
    assert np.all(solve_subopt_relay_only_single(net, 2.0, 2.0).allocation.u == 0)


def test_sweep_nondecreasing():
    net = build_network(1, 64)
    rates = [solve_opt(net, b, b).sr_sum() for b in (1.0, 2.0, 4.0, 7.0, 10.0)]
    assert np.all(np.diff(rates) >= -1e-9)


def test_scheme_ordering_and_feasibility():
    for seed in range(5):
        net = build_network(seed, 64)
        opt = solve_opt(net, 7.0, 7.0)
        sub = solve_subopt_relay_only_single(net, 7.0, 7.0)
        non = evaluate_non_opt_single(net, 7.0, 7.0)
        assert opt.sr_sum() >= sub.sr_sum() >= non.sr_sum("scheme")
        for rep in (opt, sub, non):
            assert rep.is_feasible()
            assert rep.allocation.source_total <= 7.0 and rep.allocation.relay_totals[0] <= 7.0
        assert opt.converged and sub.converged
        assert 0 <= opt.duality_gap <= 0.02
        assert np.allclose(sub.allocation.p, sub.allocation.p[0])


def test_doubling_budget_never_hurts():
    for seed in range(5):
        net = build_network(seed, 32)
        assert solve_opt(net, 6.0, 6.0).sr_sum() >= solve_opt(net, 3.0, 3.0).sr_sum() - 1e-9


def test_weak_duality_along_trace():
    net = build_network(2, 64)
    rep = solve_opt(net, 7.0, 7.0)
    d = np.array(rep.trace.dual_objective)
    assert len(d) == rep.iterations <= SolverParams().max_iters
    assert np.all(d >= rep.primal_value - 1e-9)
    assert d[-1] <= d[0]
    assert rep.sr_sum("none") == pytest.approx(0.5 * rep.primal_value, rel=1e-12)


def test_nonconvergence_is_flagged():
    rep = solve_opt(build_network(0, 32), 5.0, 5.0, SolverParams(max_iters=2))
    assert not rep.converged and rep.iterations == 2
    assert rep.is_feasible()


def test_diminishing_rule_runs():
    rep = solve_opt(build_network(0, 32), 5.0, 5.0, SolverParams(step_rule="diminishing", max_iters=300))
    ref = solve_opt(build_network(0, 32), 5.0, 5.0)
    assert rep.is_feasible() and rep.sr_sum() <= ref.sr_sum() * 1.01


def test_non_opt_clipping():
    found_negative = False
    for seed in range(20):
        rep = evaluate_non_opt_single(build_network(seed, 16), 4.0, 4.0)
        assert rep.sr_sum("subcarrier") >= 0 and rep.sr_sum("scheme") >= 0
        found_negative |= rep.sr_sum("none") < 0
    assert found_negative


def test_non_opt_two_carriers_by_hand():
    gains = [SubcarrierGains(2.0, 3.0, 1.0), SubcarrierGains(1.0, 0.5, 2.0)]
    rep = evaluate_non_opt_single(gains, 4.0, 2.0)
    hand = sum(approx_secrecy_rate(PowerPair(2.0, 1.0), g) for g in gains)
    assert rep.sr_sum(mode="approx", clip="none") == pytest.approx(hand, rel=1e-9)


def test_bad_budgets():
    with pytest.raises(InvalidConfigurationError):
        solve_opt(build_network(0, 8), 0.0, 1.0)
    with pytest.raises(InvalidConfigurationError):
        solve_opt(build_network(0, 8), 1.0, [1.0, 2.0])
    with pytest.raises(InvalidConfigurationError):
        solve_opt(build_network(0, 8, 2, 1), 1.0, 1.0)
    with pytest.raises(InvalidConfigurationError):
        SolverParams(step_size=-1)
