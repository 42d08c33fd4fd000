"""Scalar numba kernels for the per-sub-carrier Lagrangian subproblems.

Internally everything is in nats: with ``lp = lam * ln 2`` and ``vp = v * ln 2``
the bits objective ``R - lam p - v q`` equals ``(Rn - lp p - vp q) / ln 2``.

Objective codes: 0 = exact AF rate, 1 = high-SNR rate.
"""

import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

EXACT = 0
APPROX = 1


@njit(cache=True)
def rate_nats(mode, p, q, H, G, F):
    x = p * H
    if mode == EXACT:
        return math.log1p(q * G) - math.log1p(q * F) + math.log1p(x + q * F) - math.log1p(x + q * G)
    return math.log((G + H * G * p + G * F * q) / (F + H * F * p + G * F * q))


@njit(cache=True)
def lagrangian_nats(mode, p, q, H, G, F, lp, vp):
    return rate_nats(mode, p, q, H, G, F) - lp * p - vp * q


@njit(cache=True)
def source_power_given_relay(q, H, G, F, lp, pbox):
    """Maximizer over p in [0, pbox] of the exact objective at fixed relay power q.

    Positive root of ``A p^2 + B p + C = 0`` with ``A = H^2``,
    ``B = H (2 + q (F + G))`` and ``C = (1 + qF)(1 + qG) - E q / lp``,
    ``E = H (G - F)``, written in the cancellation-free form.
    """
    if q <= 0.0:
        return 0.0
    if lp <= 0.0:
        return pbox
    k = H * (G - F) * q / lp
    b = q * (F + G)
    disc = q * q * (G - F) * (G - F) + 4.0 * k
    s = 2.0 * (k - q * q * F * G) / (b + math.sqrt(disc))
    p = (s - 1.0) / H
    if p < 0.0:
        return 0.0
    if p > pbox:
        return pbox
    return p


@njit(cache=True)
def drate_dq_nats(p, q, H, G, F):
    s = 1.0 + p * H
    return G / (1.0 + q * G) - F / (1.0 + q * F) + F / (s + q * F) - G / (s + q * G)


@njit(cache=True)
def inner_exact(H, G, F, lam, v, pbox, qbox, ngrid, nbisect):
    """Semi-analytic maximizer of the exact per-sub-carrier Lagrangian.

    The source power is closed-form given the relay power; the envelope over
    the relay power has at most one interior peak beyond a possible valley,
    so it is scanned on a log grid and the best cell refined by bisection on
    the envelope derivative. The origin is always a candidate.

    Returns (p, q, objective_bits, status) with status 0 = ok, 1 = degenerate input.
    """
    if not (G > F) or pbox <= 0.0 or qbox <= 0.0:
        return 0.0, 0.0, 0.0, 0
    if not (H > 0.0) or not math.isfinite(H * G * F):
        return 0.0, 0.0, 0.0, 1
    lp = lam * LN2
    vp = v * LN2
    E = H * (G - F)
    # relay powers for which the optimal source power is positive
    q_lo = 0.0
    q_hi = qbox
    if lp > 0.0:
        a2 = F * G
        a1 = F + G - E / lp
        disc = a1 * a1 - 4.0 * a2
        if a1 >= 0.0 or disc <= 0.0:
            return 0.0, 0.0, 0.0, 0
        sq = math.sqrt(disc)
        q_lo = 2.0 / (-a1 + sq)
        if a2 > 0.0:
            q_hi = min(q_hi, (-a1 + sq) / (2.0 * a2))
    if vp > 0.0:
        if F > 0.0:
            q_hi = min(q_hi, math.log(G / F) / vp)
    if not math.isfinite(q_hi) or (lp <= 0.0 and not math.isfinite(pbox)):
        return 0.0, 0.0, 0.0, 1
    q_left = max(q_lo, q_hi * 1e-10)
    if not (q_left < q_hi):
        return 0.0, 0.0, 0.0, 0

    ratio = (q_hi / q_left) ** (1.0 / (ngrid - 1))
    best_val = 0.0
    best_q = 0.0
    best_k = -1
    best_grid = -math.inf
    best_qgrid = 0.0
    qk = q_left
    for k in range(ngrid):
        if k == ngrid - 1:
            qk = q_hi
        pk = source_power_given_relay(qk, H, G, F, lp, pbox)
        val = lagrangian_nats(EXACT, pk, qk, H, G, F, lp, vp)
        if val > best_grid:
            best_grid = val
            best_k = k
            best_qgrid = qk
        qk = qk * ratio
    if best_grid > best_val:
        best_val = best_grid
        best_q = best_qgrid

    lo = q_left * ratio ** (best_k - 1) if best_k > 0 else q_left
    hi = q_left * ratio ** (best_k + 1) if best_k < ngrid - 1 else q_hi
    hi = min(hi, q_hi)
    for _ in range(nbisect):
        mid = 0.5 * (lo + hi)
        pm = source_power_given_relay(mid, H, G, F, lp, pbox)
        if drate_dq_nats(pm, mid, H, G, F) - vp > 0.0:
            lo = mid
        else:
            hi = mid
    qr = 0.5 * (lo + hi)
    pr = source_power_given_relay(qr, H, G, F, lp, pbox)
    val = lagrangian_nats(EXACT, pr, qr, H, G, F, lp, vp)
    if val > best_val:
        best_val = val
        best_q = qr
    if best_q <= 0.0:
        return 0.0, 0.0, 0.0, 0
    p = source_power_given_relay(best_q, H, G, F, lp, pbox)
    return p, best_q, best_val / LN2, 0


@njit(cache=True)
def inner_approx(H, G, F, lam, v):
    """Maximizer of the high-SNR per-sub-carrier Lagrangian.

    For G > F the rate decreases in q (derivative (F - G)(1 + pH) / (...) < 0)
    and is flat in p at q = 0, so the supremum is log2(G/F) at p = q = 0.
    """
    if not (G > F) or not (F > 0.0):
        return 0.0, 0.0, 0.0, 0
    return 0.0, 0.0, math.log(G / F) / LN2, 0


@njit(cache=True)
def relay_exact(H, G, F, p, zeta, qbox, nbisect):
    """Maximizer over u in [0, qbox] of the exact rate minus ``zeta u`` at fixed source power.

    The rate is concave in u up to its peak ``sqrt((1 + pH) / (FG))`` and
    decreasing beyond, so the stationary point is bracketed and bisected.
    """
    if not (G > F) or not (p > 0.0) or not (H > 0.0) or qbox <= 0.0:
        return 0.0
    zp = zeta * LN2
    s = 1.0 + p * H
    if (G - F) * (1.0 - 1.0 / s) - zp <= 0.0:
        return 0.0
    hi = qbox
    if F > 0.0:
        hi = min(hi, math.sqrt(s / (F * G)))
    if not math.isfinite(hi):
        return math.nan
    if drate_dq_nats(p, hi, H, G, F) - zp >= 0.0:
        return hi
    lo = 0.0
    for _ in range(nbisect):
        mid = 0.5 * (lo + hi)
        if drate_dq_nats(p, mid, H, G, F) - zp > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def relay_approx(H, G, F, p, zeta):
    """Re-derived high-SNR relay power: positive root of
    ``GF u^2 + (G + F) s u + s^2 - (F - G) s / zeta' = 0`` with ``s = 1 + pH``."""
    if not (zeta > 0.0) or not (G > 0.0) or not (F > 0.0):
        return 0.0
    zp = zeta * LN2
    s = 1.0 + p * H
    a2 = G * F
    a1 = (G + F) * s
    a0 = s * s - (F - G) * s / zp
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return 0.0
    u = (-a1 + math.sqrt(disc)) / (2.0 * a2)
    return u if u > 0.0 else 0.0


@njit(cache=True)
def _golden_p(mode, q, H, G, F, lp, vp, pbox, tol):
    a = 0.0
    b = pbox
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = lagrangian_nats(mode, c, q, H, G, F, lp, vp)
    fd = lagrangian_nats(mode, d, q, H, G, F, lp, vp)
    while b - a > tol:
        if fc > fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = lagrangian_nats(mode, c, q, H, G, F, lp, vp)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = lagrangian_nats(mode, d, q, H, G, F, lp, vp)
    return 0.5 * (a + b)


@njit(cache=True)
def _golden_q(mode, p, H, G, F, lp, vp, qbox, tol):
    a = 0.0
    b = qbox
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = lagrangian_nats(mode, p, c, H, G, F, lp, vp)
    fd = lagrangian_nats(mode, p, d, H, G, F, lp, vp)
    while b - a > tol:
        if fc > fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = lagrangian_nats(mode, p, c, H, G, F, lp, vp)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = lagrangian_nats(mode, p, d, H, G, F, lp, vp)
    return 0.5 * (a + b)


@njit(cache=True)
def _profile(mode, q, H, G, F, lp, vp, pbox, tol):
    p = _golden_p(mode, q, H, G, F, lp, vp, pbox, tol * pbox)
    val = lagrangian_nats(mode, p, q, H, G, F, lp, vp)
    v0 = lagrangian_nats(mode, 0.0, q, H, G, F, lp, vp)
    if v0 >= val:
        return 0.0, v0
    return p, val


@njit(cache=True)
def oracle(mode, H, G, F, lam, v, pbox, qbox, ngrid, tol):
    """Profile grid search with golden-section refinement, from objective values only.

    For every node of {0} plus a geometric relay-power ladder up to ``qbox``
    the source power is maximized by golden section over [0, pbox] (the
    objective is concave in p). The best node's neighboring cell is then
    refined by golden section on that profile.

    Returns (p, q, objective_bits).
    """
    lp = lam * LN2
    vp = v * LN2
    if not (G > F):
        return 0.0, 0.0, 0.0
    if mode == APPROX and not (F > 0.0):
        return 0.0, 0.0, 0.0
    ratio = (1e10) ** (1.0 / (ngrid - 2))
    bp, best = _profile(mode, 0.0, H, G, F, lp, vp, pbox, tol)
    bq = 0.0
    bk = 0
    for k in range(1, ngrid):
        qk = qbox * 1e-10 * ratio ** (k - 1)
        pk, val = _profile(mode, qk, H, G, F, lp, vp, pbox, tol)
        if val > best:
            best = val
            bp = pk
            bq = qk
            bk = k
    if bk == 0:
        lo = 0.0
        hi = qbox * 1e-10
    else:
        lo = 0.0 if bk == 1 else qbox * 1e-10 * ratio ** (bk - 2)
        hi = min(qbox, qbox * 1e-10 * ratio ** bk)
    a = lo
    b = hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = _profile(mode, c, H, G, F, lp, vp, pbox, tol)[1]
    fd = _profile(mode, d, H, G, F, lp, vp, pbox, tol)[1]
    while b - a > tol * max(hi, 1e-300):
        if fc > fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = _profile(mode, c, H, G, F, lp, vp, pbox, tol)[1]
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = _profile(mode, d, H, G, F, lp, vp, pbox, tol)[1]
    qr = 0.5 * (a + b)
    pr, vr = _profile(mode, qr, H, G, F, lp, vp, pbox, tol)
    if vr > best:
        return pr, qr, vr / LN2
    return bp, bq, best / LN2


@njit(cache=True)
def golden_1d_relay(mode, H, G, F, p, zeta, qbox, tol):
    """1-D golden-section maximizer of rate(p, u) - zeta u over u in [0, qbox]."""
    if not (G > F):
        return 0.0
    zp = zeta * LN2
    u = _golden_q(mode, p, H, G, F, 0.0, zp, qbox, tol * qbox)
    if lagrangian_nats(mode, p, u, H, G, F, 0.0, zp) <= lagrangian_nats(mode, p, 0.0, H, G, F, 0.0, zp):
        return 0.0
    return u


@njit(cache=True)
def batch_inner(mode, H, G, F, lam, v, pbox, qbox, ngrid, nbisect, p_out, q_out, obj_out, status_out):
    for n in range(H.size):
        if mode == EXACT:
            p, q, o, st = inner_exact(H[n], G[n], F[n], lam[n], v[n], pbox[n], qbox[n], ngrid, nbisect)
        else:
            p, q, o, st = inner_approx(H[n], G[n], F[n], lam[n], v[n])
        p_out[n] = p
        q_out[n] = q
        obj_out[n] = o
        status_out[n] = st


@njit(cache=True)
def batch_oracle(mode, H, G, F, lam, v, pbox, qbox, ngrid, tol, p_out, q_out, obj_out):
    for n in range(H.size):
        p, q, o = oracle(mode, H[n], G[n], F[n], lam[n], v[n], pbox[n], qbox[n], ngrid, tol)
        p_out[n] = p
        q_out[n] = q
        obj_out[n] = o


@njit(cache=True)
def batch_relay(mode, H, G, F, p, zeta, qbox, nbisect, u_out, obj_out):
    for n in range(H.size):
        if mode == EXACT:
            u = relay_exact(H[n], G[n], F[n], p[n], zeta[n], qbox[n], nbisect)
        else:
            u = relay_approx(H[n], G[n], F[n], p[n], zeta[n])
            if u > qbox[n]:
                u = qbox[n]
        u_out[n] = u
        if G[n] > F[n] and (mode == EXACT or F[n] > 0.0):
            obj_out[n] = (rate_nats(mode, p[n], u, H[n], G[n], F[n]) - zeta[n] * LN2 * u) / LN2
        else:
            obj_out[n] = 0.0


@njit(cache=True)
def batch_relay_oracle(mode, H, G, F, p, zeta, qbox, tol, u_out):
    for n in range(H.size):
        u_out[n] = golden_1d_relay(mode, H[n], G[n], F[n], p[n], zeta[n], qbox[n], tol)
