"""Per-sub-carrier maximizers of the Lagrangian subproblems.

For dual prices ``lam`` (source) and ``v`` (relay) each sub-carrier solves

    max_{p, q >= 0}  R(p, q) - lam p - v q

where ``R`` is the bare log2 secrecy ratio (no 1/2 pre-log). Two objectives
are supported:

``exact``
    The full AF rate. Given ``q``, the optimal ``p`` is the positive root of
    ``A p^2 + B p + C = 0`` (see :func:`single_user_coefficients`); the relay
    power follows from a 1-D search along that curve.
``approx``
    The high-SNR rate. It is decreasing in ``q`` whenever ``G > F`` and flat
    in ``p`` at ``q = 0``, so its maximizer is ``p = q = 0`` with value
    ``log2(G/F)``. Kept for comparison; the solvers default to ``exact``.

:func:`inner_max_oracle` maximizes the same objective from function values
only and serves as the independent check of the analytic path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .rates import SubcarrierGains

__all__ = [
    "OBJECTIVES",
    "DualPrices",
    "SingleUserCoefficients",
    "JointCoefficients",
    "InnerSolution",
    "single_user_coefficients",
    "joint_coefficients",
    "lagrangian_summand",
    "inner_max_closed_form",
    "inner_max_joint",
    "inner_max_oracle",
    "relay_power_fixed_source",
    "relay_power_oracle",
    "solve_inner_batch",
    "solve_inner_oracle_batch",
    "solve_relay_batch",
]

OBJECTIVES = {"exact": K.EXACT, "approx": K.APPROX}

# refinement settings of the analytic path
GRID_POINTS = 48
BISECT_STEPS = 60
# oracle settings
ORACLE_GRID = 161
ORACLE_TOL = 1e-12


def _mode(objective: str) -> int:
    try:
        return OBJECTIVES[objective]
    except KeyError:
        raise ValueError(f"objective must be one of {sorted(OBJECTIVES)}, got {objective!r}") from None


@dataclass(frozen=True)
class DualPrices:
    """Source power price ``lam`` and relay power price ``v`` (bits/s/Hz per W)."""

    lam: float
    v: float

    def __post_init__(self):
        if self.lam < 0 or self.v < 0:
            raise ValueError(f"dual prices must be nonnegative: {self}")


@dataclass(frozen=True)
class SingleUserCoefficients:
    """Coefficients of the source-power stationarity quadratic ``A p^2 + B p + C = 0``.

    ``D = F - G`` and ``E = G H - H F``.
    """

    A: float
    B: float
    C: float
    D: float
    E: float


@dataclass(frozen=True)
class JointCoefficients:
    """The same quadratic in multi-user notation: ``X p^2 + Y p + Z = 0``,
    ``U = c - b`` and ``W = b a - a c``."""

    X: float
    Y: float
    Z: float
    U: float
    W: float


@dataclass(frozen=True)
class InnerSolution:
    p_star: float
    q_star: float
    objective: float
    solver: str = "closed-form"


def single_user_coefficients(g: SubcarrierGains, prices: DualPrices, q: float) -> SingleUserCoefficients:
    """Stationarity quadratic of the exact objective in ``p`` at relay power ``q``.

    Setting the p-derivative of ``R - lam p`` to zero with ``s = 1 + H p`` gives
    ``(s + qF)(s + qG) = E q / (lam ln 2)``; expanding in ``p`` yields
    ``A = H^2``, ``B = H (2 + q (F + G))``, ``C = (1 + qF)(1 + qG) - E q / (lam ln 2)``.
    """
    H, G, F = g.H, g.G, g.F
    E = G * H - H * F
    lp = prices.lam * np.log(2.0)
    C = (1 + q * F) * (1 + q * G) - (E * q / lp if lp > 0 else np.inf)
    return SingleUserCoefficients(H * H, H * (2 + q * (F + G)), C, F - G, E)


def joint_coefficients(a: float, b: float, c: float, prices: DualPrices, u: float) -> JointCoefficients:
    """:func:`single_user_coefficients` for the tuple gains (a, b, c) and relay power ``u``."""
    s = single_user_coefficients(SubcarrierGains(a, b, c), prices, u)
    return JointCoefficients(s.A, s.B, s.C, c - b, b * a - a * c)


def lagrangian_summand(p, q, g: SubcarrierGains, prices: DualPrices, objective: str = "exact"):
    """``R(p, q) - lam p - v q`` in bits, for finite differencing and plotting."""
    mode = _mode(objective)
    return K.lagrangian_nats(mode, float(p), float(q), g.H, g.G, g.F,
                             prices.lam * K.LN2, prices.v * K.LN2) / K.LN2


def _broadcast(*arrays):
    out = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in arrays])
    return out[0].shape, [np.ascontiguousarray(x).ravel() for x in out]


def solve_inner_batch(H, G, F, lam, v, p_box=np.inf, q_box=np.inf, objective: str = "exact",
                      oracle_fallback: bool = True):
    """Vectorized analytic maximizer over broadcast arrays.

    Returns ``(p, q, obj, fallback)`` arrays of the broadcast shape.
    ``fallback`` marks entries whose analytic path was numerically invalid and
    were re-solved by the oracle.
    """
    mode = _mode(objective)
    shape, (H, G, F, lam, v, pb, qb) = _broadcast(H, G, F, lam, v, p_box, q_box)
    n = H.size
    p, q, obj = np.empty(n), np.empty(n), np.empty(n)
    status = np.empty(n, dtype=np.int64)
    K.batch_inner(mode, H, G, F, lam, v, pb, qb, GRID_POINTS, BISECT_STEPS, p, q, obj, status)
    bad = (status != 0) | ~np.isfinite(p) | ~np.isfinite(q) | ~np.isfinite(obj)
    if oracle_fallback and bad.any():
        idx = np.flatnonzero(bad)
        pb_f = np.where(np.isfinite(pb[idx]), pb[idx], 1e6)
        qb_f = np.where(np.isfinite(qb[idx]), qb[idx], 1e6)
        fp, fq, fo = solve_inner_oracle_batch(H[idx], G[idx], F[idx], lam[idx], v[idx], pb_f, qb_f, objective)
        p[idx], q[idx], obj[idx] = fp, fq, fo
    return p.reshape(shape), q.reshape(shape), obj.reshape(shape), bad.reshape(shape)


def solve_inner_oracle_batch(H, G, F, lam, v, p_box, q_box, objective: str = "exact"):
    """Vectorized :func:`inner_max_oracle`; boxes must be finite."""
    mode = _mode(objective)
    shape, (H, G, F, lam, v, pb, qb) = _broadcast(H, G, F, lam, v, p_box, q_box)
    if not (np.all(np.isfinite(pb)) and np.all(np.isfinite(qb))):
        raise ValueError("the oracle needs finite box bounds")
    n = H.size
    p, q, obj = np.empty(n), np.empty(n), np.empty(n)
    K.batch_oracle(mode, H, G, F, lam, v, pb, qb, ORACLE_GRID, ORACLE_TOL, p, q, obj)
    return p.reshape(shape), q.reshape(shape), obj.reshape(shape)


def solve_relay_batch(H, G, F, p, zeta, q_box=np.inf, objective: str = "exact"):
    """Vectorized relay power at fixed source power. Returns ``(u, obj)``."""
    mode = _mode(objective)
    shape, (H, G, F, p, zeta, qb) = _broadcast(H, G, F, p, zeta, q_box)
    n = H.size
    u, obj = np.empty(n), np.empty(n)
    K.batch_relay(mode, H, G, F, p, zeta, qb, BISECT_STEPS, u, obj)
    return u.reshape(shape), obj.reshape(shape)


def inner_max_closed_form(g: SubcarrierGains, prices: DualPrices, objective: str = "exact",
                          box: tuple[float, float] = (np.inf, np.inf)) -> InnerSolution:
    """Analytic maximizer of one sub-carrier's Lagrangian summand.

    Insecure sub-carriers (``G <= F``) return ``p = q = 0`` immediately.
    """
    p, q, o, fb = solve_inner_batch(g.H, g.G, g.F, prices.lam, prices.v, box[0], box[1], objective)
    return InnerSolution(float(p), float(q), float(o), "oracle" if fb else "closed-form")


def inner_max_joint(a: float, b: float, c: float, prices: DualPrices, objective: str = "exact",
                    box: tuple[float, float] = (np.inf, np.inf)) -> InnerSolution:
    """Per-tuple maximizer for gains (a, b, c); identical to the single-user form under a->H, b->G, c->F."""
    return inner_max_closed_form(SubcarrierGains(a, b, c), prices, objective, box)


def inner_max_oracle(g: SubcarrierGains, prices: DualPrices, box: tuple[float, float],
                     objective: str = "exact") -> InnerSolution:
    """Maximize the summand over ``[0, box[0]] x [0, box[1]]`` from objective values only."""
    if box[0] <= 0 or box[1] <= 0:
        raise ValueError("box bounds must be positive")
    p, q, o = solve_inner_oracle_batch(g.H, g.G, g.F, prices.lam, prices.v, box[0], box[1], objective)
    return InnerSolution(float(p), float(q), float(o), "oracle")


def relay_power_fixed_source(a: float, b: float, c: float, p_fixed: float, zeta: float,
                             objective: str = "exact", q_box: float = np.inf) -> float:
    """Relay power maximizing ``R(p_fixed, u) - zeta u`` over ``u >= 0``.

    With the exact objective the rate is concave in ``u`` up to its peak at
    ``sqrt((1 + a p) / (b c))`` and decreasing beyond, so the unique stationary
    point is bisected. With the high-SNR objective the stationarity condition
    is a quadratic whose positive root is returned (zero whenever ``b > c``).
    If the result is not finite the 1-D golden-section oracle is used instead.
    """
    if zeta < 0 or p_fixed < 0:
        raise ValueError("zeta and p_fixed must be nonnegative")
    u, _ = solve_relay_batch(a, b, c, p_fixed, zeta, q_box, objective)
    u = float(u)
    if not np.isfinite(u):
        box = q_box if np.isfinite(q_box) else 1e6
        u = relay_power_oracle(a, b, c, p_fixed, zeta, box, objective)
    return u


def relay_power_oracle(a: float, b: float, c: float, p_fixed: float, zeta: float, q_box: float,
                       objective: str = "exact") -> float:
    """Golden-section maximizer of ``R(p_fixed, u) - zeta u`` over ``[0, q_box]``."""
    out = np.empty(1)
    K.batch_relay_oracle(_mode(objective), *(np.array([x], dtype=float) for x in (a, b, c, p_fixed, zeta, q_box)),
                         ORACLE_TOL, out)
    return float(out[0])
