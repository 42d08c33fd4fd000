import itertools

import numpy as np
import pytest

from af_secrecy.channel import NetworkChannels, build_network
from af_secrecy.dual import SolverParams
from af_secrecy.joint import assign_best, solve_joint
from af_secrecy.rates import Assignment
from af_secrecy.restricted import solve_with_assignment
from af_secrecy.single_link import solve_opt


def test_assign_best_single_positive():
    s = np.zeros((3, 2, 2))
    s[0, 1, 0] = s[1, 0, 1] = s[2, 1, 1] = 1.0
    a = assign_best(s)
    assert a.relay.tolist() == [1, 0, 1] and a.user.tolist() == [0, 1, 1]


def test_assign_best_tie_break():
    a = assign_best(np.ones((4, 3, 2)))
    assert a.relay.tolist() == [0] * 4 and a.user.tolist() == [0] * 4


def test_assign_best_matches_loops():
    rng = np.random.default_rng(0)
    s = rng.normal(size=(20, 3, 4))
    a = assign_best(s)
    for i in range(20):
        best, arg = -np.inf, None
        for j in range(3):
            for k in range(4):
                if s[i, j, k] > best:
                    best, arg = s[i, j, k], (j, k)
        assert (a.relay[i], a.user[i]) == arg
    with pytest.raises(ValueError):
        assign_best(np.full((2, 1, 1), np.nan))


def test_single_relay_single_user_matches_opt():
    net = build_network(4, 64)
    a = solve_joint(net, 7.0, 7.0)
    b = solve_opt(net, 7.0, 7.0)
    assert a.sr_sum() == pytest.approx(b.sr_sum(), rel=1e-3)


def test_dominant_user_takes_everything():
    net = build_network(6, 32, 2, 3)
    b = net.b.copy()
    b[:, :, 1] = b.max(axis=2) * 10 + 1.0
    net = NetworkChannels(net.a, b, net.c)
    rep = solve_joint(net, 5.0, 5.0)
    # idle carriers tie at score 0 and fall to user 0
    active = rep.allocation.p > 0
    assert active.sum() > net.N // 2
    assert np.all(rep.assignment.user[active] == 1)


def test_exclusivity_feasibility_and_counts():
    net = build_network(1, 32, 3, 4)
    rep = solve_joint(net, 5.0, [4.0, 5.0, 6.0])
    pi = rep.assignment.indicator(3, 4)
    assert np.all(pi.reshape(32, -1).sum(axis=1) == 1)
    assert rep.is_feasible()
    assert rep.inner_solves_per_iter == 32 * 3 * 4
    assert rep.inner_solves == rep.iterations * 32 * 3 * 4
    # relay power only on the serving relay
    off = np.ones((32, 3), dtype=bool)
    off[np.arange(32), rep.assignment.relay] = False
    assert np.all(rep.allocation.u[off] == 0)


def exhaustive_best(net, P, Q):
    """Best relay pattern with the best user per (i, j); powers optimized per assignment."""
    i = np.arange(net.N)
    best_user = net.b.argmax(axis=2)
    best = -np.inf
    for pattern in itertools.product(range(net.J), repeat=net.N):
        r = np.array(pattern)
        rep = solve_with_assignment(net, Assignment(r, best_user[i, r]), P, Q, SolverParams(keep_trace=False))
        best = max(best, rep.sr_sum("none"))
    return best


@pytest.mark.parametrize("seed", [0, 1])
def test_toy_exhaustive(seed):
    net = build_network(seed, 8, 2, 2)
    rep = solve_joint(net, 7.0, 7.0)
    assert rep.sr_sum("none") >= exhaustive_best(net, 7.0, 7.0) - 1e-3


def test_more_relays_or_users_do_not_hurt():
    full = build_network(3, 64, 3, 4)
    for J, K, J2, K2 in ((1, 4, 2, 4), (2, 4, 3, 4), (3, 2, 3, 4)):
        small = solve_joint(full.subnetwork(J, K), 7.0, 7.0).sr_sum()
        big = solve_joint(full.subnetwork(J2, K2), 7.0, 7.0).sr_sum()
        assert big >= small - 1e-2
