"""Amplification factor, end-to-end SNRs and secrecy rates of AF relay links.

All gains are normalized by the noise variance (units 1/W), so the
expressions below depend on powers and gains only. Public rates include the
1/2 pre-log of half-duplex relaying; the ``link_*`` helpers return the bare
log-ratio used as the per-sub-carrier objective by the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NetworkChannels, NoiseModel
from .errors import InvalidAssignmentError, RateDomainError

__all__ = [
    "SubcarrierGains",
    "PowerPair",
    "PowerAllocation",
    "Assignment",
    "CLIP_POLICIES",
    "amplification_factor",
    "exact_secrecy_rate",
    "approx_secrecy_rate",
    "link_rate_exact",
    "link_rate_approx",
    "subcarrier_rates",
    "sum_secrecy_rate",
]

CLIP_POLICIES = ("subcarrier", "scheme", "none")


@dataclass(frozen=True)
class SubcarrierGains:
    """Normalized gains H (source->relay), G (relay->destination), F (relay->eavesdropper)."""

    H: float
    G: float
    F: float

    def __post_init__(self):
        if min(self.H, self.G, self.F) < 0:
            raise ValueError(f"gains must be nonnegative: {self}")


@dataclass(frozen=True)
class PowerPair:
    """Source power ``p`` and relay power ``q`` on one sub-carrier (W)."""

    p: float
    q: float

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError(f"powers must be nonnegative: {self}")


@dataclass
class PowerAllocation:
    """Source powers ``p`` (N,) and relay powers ``u`` (N, J)."""

    p: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim == 1:
            self.u = self.u[:, None]
        if self.u.shape[0] != self.p.shape[0]:
            raise ValueError("p and u disagree on the number of sub-carriers")

    @property
    def source_total(self) -> float:
        return float(self.p.sum())

    @property
    def relay_totals(self) -> np.ndarray:
        return self.u.sum(axis=0)


@dataclass
class Assignment:
    """Exclusive map from each sub-carrier to one (relay, user) pair.

    ``relay[i]`` and ``user[i]`` index the pair serving sub-carrier ``i``;
    the indicator ``pi[i, j, k]`` is one exactly there.
    """

    relay: np.ndarray
    user: np.ndarray

    def __post_init__(self):
        self.relay = np.asarray(self.relay, dtype=np.int64).ravel()
        self.user = np.asarray(self.user, dtype=np.int64).ravel()
        if self.relay.shape != self.user.shape:
            raise InvalidAssignmentError("relay and user index arrays differ in length")

    @classmethod
    def trivial(cls, N: int) -> "Assignment":
        return cls(np.zeros(N, dtype=np.int64), np.zeros(N, dtype=np.int64))

    @classmethod
    def from_indicator(cls, pi) -> "Assignment":
        pi = np.asarray(pi)
        if pi.ndim != 3:
            raise InvalidAssignmentError("indicator must have shape (N, J, K)")
        if not np.all((pi == 0) | (pi == 1)):
            raise InvalidAssignmentError("indicator entries must be 0 or 1")
        counts = pi.reshape(pi.shape[0], -1).sum(axis=1)
        if np.any(counts != 1):
            bad = np.flatnonzero(counts != 1)
            raise InvalidAssignmentError(f"sub-carriers {bad.tolist()} are not served exactly once")
        flat = pi.reshape(pi.shape[0], -1).argmax(axis=1)
        relay, user = np.unravel_index(flat, pi.shape[1:])
        return cls(relay, user)

    @property
    def N(self) -> int:
        return self.relay.size

    def indicator(self, J: int, K: int) -> np.ndarray:
        pi = np.zeros((self.N, J, K), dtype=np.int8)
        pi[np.arange(self.N), self.relay, self.user] = 1
        return pi

    def validate(self, net: NetworkChannels) -> None:
        if self.N != net.N:
            raise InvalidAssignmentError(f"assignment covers {self.N} sub-carriers, network has {net.N}")
        if np.any((self.relay < 0) | (self.relay >= net.J)) or np.any((self.user < 0) | (self.user >= net.K)):
            raise InvalidAssignmentError("relay or user index out of range")

    def gains(self, net: NetworkChannels):
        """Gains (a, b, c) of the assigned tuple on each sub-carrier."""
        i = np.arange(self.N)
        return net.a[i, self.relay], net.b[i, self.relay, self.user], net.c[i, self.relay]

    def __eq__(self, other):
        return (isinstance(other, Assignment) and np.array_equal(self.relay, other.relay)
                and np.array_equal(self.user, other.user))

    def key(self) -> bytes:
        return self.relay.tobytes() + self.user.tobytes()


def amplification_factor(pp: PowerPair, h_gain_raw: float, noise: NoiseModel = NoiseModel()) -> float:
    """Relay gain ``sqrt(q / (p |h|^2 + sigma2))`` that normalizes the forwarded power to ``q``."""
    return float(np.sqrt(pp.q / (pp.p * h_gain_raw + noise.sigma2)))


def exact_secrecy_rate(pp: PowerPair, g: SubcarrierGains, noise: NoiseModel = NoiseModel()) -> float:
    """Half-duplex secrecy rate of one sub-carrier from the full AF SNR expressions.

    May be negative when the eavesdropper link is the stronger one.
    """
    s2 = noise.sigma2
    h2, g2, f2 = g.H * s2, g.G * s2, g.F * s2
    amp2 = amplification_factor(pp, h2, noise) ** 2
    snr_d = amp2 * pp.p * h2 * g2 / (amp2 * g2 * s2 + s2)
    snr_e = amp2 * pp.p * h2 * f2 / (amp2 * f2 * s2 + s2)
    return 0.5 * (np.log2(1.0 + snr_d) - np.log2(1.0 + snr_e))


def approx_secrecy_rate(pp: PowerPair, g: SubcarrierGains) -> float:
    """High-SNR secrecy rate ``1/2 log2((G + HGp + GFq) / (F + HFp + GFq))``."""
    if g.F <= 0 or g.G <= 0:
        raise RateDomainError(f"high-SNR rate needs G > 0 and F > 0, got G={g.G}, F={g.F}")
    H, G, F, p, q = g.H, g.G, g.F, pp.p, pp.q
    return 0.5 * np.log2((G + H * G * p + G * F * q) / (F + H * F * p + G * F * q))


def link_rate_exact(p, q, H, G, F):
    """``log2((1 + SNR_D) / (1 + SNR_E))`` without the 1/2 pre-log, vectorized.

    Uses the factorization ``1 + SNR = (1 + pH)(1 + qG) / (1 + pH + qG)``.
    """
    x = p * H
    return (np.log1p(q * G) - np.log1p(q * F) + np.log1p(x + q * F) - np.log1p(x + q * G)) / np.log(2.0)


def link_rate_approx(p, q, H, G, F):
    """High-SNR log-ratio without the 1/2 pre-log, vectorized."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2((G + H * G * p + G * F * q) / (F + H * F * p + G * F * q))


def subcarrier_rates(alloc: PowerAllocation, assign: Assignment, net: NetworkChannels,
                     mode: str = "exact") -> np.ndarray:
    """Unclipped half-duplex secrecy rate of each sub-carrier on its assigned tuple.

    In ``approx`` mode a sub-carrier carrying no source or relay power is
    inactive and contributes zero; the high-SNR expression does not apply there.
    """
    assign.validate(net)
    a, b, c = assign.gains(net)
    p = alloc.p
    q = alloc.u[np.arange(assign.N), assign.relay]
    if mode == "exact":
        return 0.5 * link_rate_exact(p, q, a, b, c)
    if mode == "approx":
        active = (p > 0) & (q > 0)
        if np.any(active & ((b <= 0) | (c <= 0))):
            raise RateDomainError("high-SNR rate undefined on an active sub-carrier with a zero gain")
        r = np.zeros(assign.N)
        r[active] = 0.5 * link_rate_approx(p[active], q[active], a[active], b[active], c[active])
        return r
    raise ValueError(f"unknown rate mode {mode!r}")


def apply_clip(rates: np.ndarray, clip: str) -> float:
    if clip == "subcarrier":
        return float(np.maximum(rates, 0.0).sum())
    if clip == "scheme":
        return max(0.0, float(rates.sum()))
    if clip == "none":
        return float(rates.sum())
    raise ValueError(f"unknown clip policy {clip!r}; expected one of {CLIP_POLICIES}")


def sum_secrecy_rate(alloc: PowerAllocation, assign: Assignment, net: NetworkChannels,
                     mode: str = "exact", clip: str = "subcarrier") -> float:
    """Sum secrecy rate (bits/s/Hz) over the assigned tuples.

    ``clip`` selects ``subcarrier`` (negative terms dropped), ``scheme``
    (negative totals reported as zero) or ``none``.
    """
    return apply_clip(subcarrier_rates(alloc, assign, net, mode), clip)
