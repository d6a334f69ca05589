"""Channel gains, subchannel rates and inter-cell interference for the three layers.

Gains are kept as one ``(K_total, C, N)`` tensor with components ordered
vBSs, vUAVs, vLEO (see :func:`sagin_slicing.topology.component_xyz`).

The UAV gain evaluates the Rician mixture ``R/(R+1) * h_los + 1/(R+1) * h_nlos``
literally and uses its magnitude, so the value fed to the rate formula is a
nonnegative real. ``h_los`` has unit modulus and phase 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig
from .topology import TopologyState, all_distances


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # (K_total, C, N) linear power gains
    t: int = 0

    def g_vbs(self, config: ScenarioConfig) -> np.ndarray:
        return self.gains[:, :config.M, :]

    def g_vuav(self, config: ScenarioConfig) -> np.ndarray:
        return self.gains[:, config.M:config.M + config.V, :]

    def g_vleo(self, config: ScenarioConfig) -> np.ndarray:
        return self.gains[:, -1, :]


def _check_distance(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0 (path loss is singular at d = 0)")
    return d


def terrestrial_gain(d, alpha: float = 1.5, rng: np.random.Generator | None = None,
                     h=None):
    """Rayleigh-faded gain ``h * d**-alpha`` with ``h ~ Exp(1)``.

    Pass ``h`` to fix the fading draw.
    """
    d = _check_distance(d)
    if h is None:
        h = rng.exponential(1.0, size=d.shape)
    return h * d ** -alpha


def uav_gain(d, config: ScenarioConfig, rng: np.random.Generator | None = None,
             nlos=None):
    """Rician gain ``h0 * d**-alpha * |R/(R+1) + h_nlos/(R+1)|``.

    ``nlos`` overrides the circular complex normal draw (``CN(0, 1)``).
    """
    d = _check_distance(d)
    if nlos is None:
        nlos = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) / np.sqrt(2)
    R = config.rician_R
    mix = R / (R + 1) + np.asarray(nlos) / (R + 1)
    return config.h0 * d ** -config.alpha_pl * np.abs(mix)


def uav_gain_mean(d: float, config: ScenarioConfig) -> float:
    """Closed-form mean of :func:`uav_gain` at distance ``d`` (Rice distribution mean)."""
    from scipy.stats import rice

    R = config.rician_R
    nu = R / (R + 1)
    sigma = (1 / (R + 1)) / np.sqrt(2)  # per-dimension std of h_nlos / (R + 1)
    return config.h0 * d ** -config.alpha_pl * rice(nu / sigma, scale=sigma).mean()


def leo_gain(d, config: ScenarioConfig):
    """Free-space gain ``(c / (4 pi f_c))**2 * d**-alpha``."""
    d = _check_distance(d)
    return (SPEED_OF_LIGHT / (4 * np.pi * config.f_c)) ** 2 * d ** -config.alpha_pl


def sample_realization(state: TopologyState, config: ScenarioConfig,
                       rng: np.random.Generator, rayleigh=None, nlos=None) -> ChannelRealization:
    """Fresh small-scale fading for every (user, component, subchannel).

    ``rayleigh`` (shape ``(K, M, N)``) and ``nlos`` (shape ``(K, V, N)``) fix
    the fading draws for tests.
    """
    M, V, N = config.M, config.V, config.N
    d = all_distances(state)
    K = d.shape[0]
    gains = np.empty((K, M + V + 1, N))
    if rayleigh is None:
        rayleigh = rng.exponential(1.0, size=(K, M, N))
    if nlos is None:
        nlos = (rng.standard_normal((K, V, N)) + 1j * rng.standard_normal((K, V, N))) / np.sqrt(2)
    gains[:, :M, :] = terrestrial_gain(d[:, :M, None], config.alpha_pl, h=rayleigh)
    gains[:, M:M + V, :] = uav_gain(d[:, M:M + V, None], config, nlos=nlos)
    gains[:, -1, :] = leo_gain(d[:, -1:], config)
    return ChannelRealization(gains=gains, t=state.t)


def subchannel_rate(p, g, interference, config: ScenarioConfig):
    """Shannon rate of one subchannel: ``(B/N) log2(1 + p g / (I + (B/N) N0))``."""
    bw = config.subchannel_bw
    return bw * np.log2(1.0 + np.asarray(p) * g / (np.asarray(interference) + bw * config.N0))


def interference_from(tx_power: np.ndarray, gains: np.ndarray, serving: int, n: int) -> float:
    """Power received on subchannel ``n`` from every cell except ``serving``.

    ``tx_power[j, n]`` is what cell ``j`` transmits on ``n`` inside the slice;
    ``gains[j, n]`` is the gain from cell ``j`` to the victim user.
    """
    total = 0.0
    for j in range(tx_power.shape[0]):
        if j != serving:
            total += tx_power[j, n] * gains[j, n]
    return total


def interference_vbs(m: int, n: int, tx_power: np.ndarray, gains: np.ndarray) -> float:
    """Inter-cell interference for a user served by vBS ``m`` (arrays over the M vBSs)."""
    return interference_from(tx_power, gains, m, n)


def interference_vuav(v: int, n: int, tx_power: np.ndarray, gains: np.ndarray) -> float:
    """Inter-cell interference for a user served by vUAV ``v`` (arrays over the V vUAVs)."""
    return interference_from(tx_power, gains, v, n)


def slice_tx_power(decision, n_classes: int = 3) -> np.ndarray:
    """Power each component radiates per subchannel in each slice: ``(S, C, N)``."""
    used = decision.phi[:, :, None] * decision.xi[:, None, :] * decision.p
    tx = np.zeros((n_classes,) + used.shape[1:])
    np.add.at(tx, decision.user_class, used)
    return tx


def interference_tensor(decision, realization: ChannelRealization,
                        config: ScenarioConfig) -> np.ndarray:
    """Interference seen by every (user, component, subchannel) triple, ``(K, C, N)``.

    Only same-layer cells of the same slice interfere; the satellite layer is
    interference-free.
    """
    tx = slice_tx_power(decision)[decision.user_class]       # (K, C, N)
    received = tx * realization.gains
    interference = np.zeros_like(received)
    for lo, hi in ((0, config.M), (config.M, config.M + config.V)):
        for c in range(lo, hi):
            others = [j for j in range(lo, hi) if j != c]
            if others:
                interference[:, c, :] = received[:, others, :].sum(axis=1)
    return interference


def sinr_tensor(decision, realization: ChannelRealization, config: ScenarioConfig) -> np.ndarray:
    interference = interference_tensor(decision, realization, config)
    return decision.p * realization.gains / (interference + config.noise_power)


def rate_tensor(decision, realization: ChannelRealization, config: ScenarioConfig) -> np.ndarray:
    return config.subchannel_bw * np.log2(1.0 + sinr_tensor(decision, realization, config))


def user_rates(decision, realization: ChannelRealization, config: ScenarioConfig,
               rates: np.ndarray | None = None) -> np.ndarray:
    """Total downlink rate of every user, shape ``(K_total,)``.

    The satellite part of each user's rate is clamped to ``leo_rate_cap_bps``.
    """
    if rates is None:
        rates = rate_tensor(decision, realization, config)
    weighted = decision.phi[:, :, None] * decision.xi[:, None, :] * rates
    terrestrial_air = weighted[:, :-1, :].sum(axis=(1, 2))
    leo = np.minimum(weighted[:, -1, :].sum(axis=1), config.leo_rate_cap_bps)
    return terrestrial_air + leo


def user_rate(i: int, decision, realization: ChannelRealization, config: ScenarioConfig) -> float:
    """Rate of flat user ``i``."""
    return float(user_rates(decision, realization, config)[i])
