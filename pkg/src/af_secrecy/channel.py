"""Seeded multipath channel realizations and per-sub-carrier power gains.

Every link carries an L-tap channel with i.i.d. complex Gaussian taps. The
frequency response over N sub-carriers is the N-point DFT of the zero-padded
tap vector, and the normalized power gain on sub-carrier ``i`` is
``|X_i|**2 / sigma2``.

Random streams are keyed by ``(seed, link, j, k)`` so that a network with more
relays or users contains the smaller network as a sub-network. This keeps
sweeps over J and K on common random numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidConfigurationError

__all__ = [
    "TapChannel",
    "NoiseModel",
    "NetworkChannels",
    "generate_taps",
    "taps_to_gains",
    "build_network",
    "write_channels_csv",
]

SeedLike = Union[int, Sequence[int]]

# stream identifiers for the three link families
_LINK_SR = 1  # source -> relay j
_LINK_RD = 2  # relay j -> user k
_LINK_RE = 3  # relay j -> eavesdropper


@dataclass(frozen=True)
class TapChannel:
    """Complex tap amplitudes of one link."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex).ravel()
        if taps.size < 1:
            raise InvalidConfigurationError("a tap channel needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise InvalidConfigurationError("tap amplitudes must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return self.taps.size


@dataclass(frozen=True)
class NoiseModel:
    """AWGN variance shared by every receiving node."""

    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidConfigurationError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class NetworkChannels:
    """Normalized power gains of a BS -> J relays -> K users network.

    Attributes
    ----------
    a : ndarray, shape (N, J)
        Source to relay gains.
    b : ndarray, shape (N, J, K)
        Relay to user gains.
    c : ndarray, shape (N, J)
        Relay to eavesdropper gains.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if a.ndim != 2 or c.shape != a.shape or b.ndim != 3 or b.shape[:2] != a.shape:
            raise InvalidConfigurationError(
                f"inconsistent gain shapes a{a.shape} b{b.shape} c{c.shape}")
        for name, x in (("a", a), ("b", b), ("c", c)):
            if not np.all(np.isfinite(x)) or np.any(x < 0):
                raise InvalidConfigurationError(f"gains {name} must be finite and nonnegative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def N(self) -> int:
        return self.a.shape[0]

    @property
    def J(self) -> int:
        return self.a.shape[1]

    @property
    def K(self) -> int:
        return self.b.shape[2]

    @classmethod
    def from_single(cls, H, G, F) -> "NetworkChannels":
        """Wrap per-sub-carrier (H, G, F) arrays as a J = K = 1 network."""
        H = np.asarray(H, dtype=float).reshape(-1, 1)
        G = np.asarray(G, dtype=float).reshape(-1, 1, 1)
        F = np.asarray(F, dtype=float).reshape(-1, 1)
        return cls(H, G, F)

    def single_link(self):
        """Return the (H, G, F) arrays of the J = K = 1 slice."""
        return self.a[:, 0], self.b[:, 0, 0], self.c[:, 0]

    def subnetwork(self, J: int, K: int) -> "NetworkChannels":
        """The first ``J`` relays and ``K`` users."""
        return NetworkChannels(self.a[:, :J], self.b[:, :J, :K], self.c[:, :J], dict(self.meta))


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed))
    return np.random.default_rng([int(s) for s in seed])


def generate_taps(seed: SeedLike, count: int, n_taps: int = 6,
                  variance: float = 1.0) -> list[TapChannel]:
    """Draw ``count`` tap channels with independent N(0, variance) real and imaginary parts."""
    if n_taps < 1:
        raise InvalidConfigurationError(f"n_taps must be >= 1, got {n_taps}")
    if count < 0:
        raise InvalidConfigurationError(f"count must be >= 0, got {count}")
    x = _rng(seed).standard_normal((count, n_taps, 2)) * np.sqrt(variance)
    return [TapChannel(x[m, :, 0] + 1j * x[m, :, 1]) for m in range(count)]


def taps_to_gains(ch: TapChannel, N: int, noise: NoiseModel = NoiseModel()) -> np.ndarray:
    """Per-sub-carrier normalized power gains ``|sum_l h_l exp(-2j pi i l / N)|**2 / sigma2``."""
    if N < ch.n_taps:
        raise InvalidConfigurationError(
            f"need at least as many sub-carriers as taps (N={N}, L={ch.n_taps})")
    response = np.fft.fft(ch.taps, n=N)
    return (response.real ** 2 + response.imag ** 2) / noise.sigma2


def _link_gains(seed: SeedLike, key: tuple, N: int, n_taps: int, noise: NoiseModel,
                variance: float) -> np.ndarray:
    base = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    (ch,) = generate_taps(tuple(int(s) for s in (*base, *key)), 1, n_taps, variance)
    return taps_to_gains(ch, N, noise)


def build_network(seed: SeedLike, N: int, J: int = 1, K: int = 1,
                  noise: NoiseModel = NoiseModel(), n_taps: int = 6,
                  tap_variance: float = 1.0) -> NetworkChannels:
    """Draw every source->relay, relay->user and relay->eavesdropper link.

    Parameters
    ----------
    seed : int or sequence of int
        Root of the random streams. Link streams are derived from
        ``(seed, link, j, k)``, so growing J or K leaves existing links intact.
    N, J, K : int
        Sub-carriers, relays and users.
    noise : NoiseModel
        Receiver noise; gains are divided by ``noise.sigma2``.
    n_taps : int
        Taps per link.
    tap_variance : float
        Variance of the real and of the imaginary part of each tap.
    """
    if min(N, J, K) < 1:
        raise InvalidConfigurationError(f"N, J, K must be >= 1, got {(N, J, K)}")
    if N < n_taps:
        raise InvalidConfigurationError(f"N={N} is smaller than n_taps={n_taps}")
    a = np.empty((N, J))
    b = np.empty((N, J, K))
    c = np.empty((N, J))
    for j in range(J):
        a[:, j] = _link_gains(seed, (_LINK_SR, j, 0), N, n_taps, noise, tap_variance)
        c[:, j] = _link_gains(seed, (_LINK_RE, j, 0), N, n_taps, noise, tap_variance)
        for k in range(K):
            b[:, j, k] = _link_gains(seed, (_LINK_RD, j, k), N, n_taps, noise, tap_variance)
    meta = {"seed": seed, "n_taps": n_taps, "sigma2": noise.sigma2,
            "tap_variance": tap_variance, "tap_distribution": "complex normal, iid parts"}
    return NetworkChannels(a, b, c, meta)


def write_channels_csv(net: NetworkChannels, path) -> None:
    """Dump all gains as ``link-type,i,j,k,gain`` rows (k is -1 where undefined)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["link-type", "i", "j", "k", "gain"])
        for i in range(net.N):
            for j in range(net.J):
                w.writerow(["source-relay", i, j, -1, f"{net.a[i, j]:.10g}"])
                w.writerow(["relay-eve", i, j, -1, f"{net.c[i, j]:.10g}"])
                for k in range(net.K):
                    w.writerow(["relay-user", i, j, k, f"{net.b[i, j, k]:.10g}"])
