"""Slice objectives (throughput, delay, SINR), power use, and constraint checks.

Class indices are 0-based in code: class 0 is the high-throughput slice,
class 1 the low-delay slice and class 2 the wide-coverage slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .channel import ChannelRealization
from .config import N_CLASSES, N_COMP_TYPES, SPEED_OF_LIGHT, ScenarioConfig
from .topology import TopologyState, all_distances

CONSTRAINT_TOL = 1e-9


class QueueUnstableError(ArithmeticError):
    """Service rate does not exceed the arrival rate, so the queue has no steady state."""


@dataclass
class AllocationDecision:
    """Full action of one TS.

    ``xi[k, n]`` subchannel indicators, ``phi[k, c]`` component association,
    ``p[k, c, n]`` transmit power in watts, ``eta[s, t]`` / ``rho[s, t]`` the
    subchannel / power share of class ``s`` on component type ``t``
    (vBS, vUAV, vLEO), and ``uav_xy[v]`` the commanded vUAV positions.
    """

    xi: np.ndarray
    phi: np.ndarray
    p: np.ndarray
    eta: np.ndarray
    rho: np.ndarray
    uav_xy: np.ndarray
    user_class: np.ndarray

    def copy(self) -> "AllocationDecision":
        return AllocationDecision(*(np.array(getattr(self, f)) for f in (
            "xi", "phi", "p", "eta", "rho", "uav_xy", "user_class")))

    @property
    def K_total(self) -> int:
        return len(self.user_class)

    def assignment(self):
        """``(component, subchannel, power)`` per user; -1 marks an unserved user.

        Meaningful for binary decisions with at most one slot per user.
        """
        comp = np.where(self.phi.sum(axis=1) > 0, self.phi.argmax(axis=1), -1)
        sub = np.where(self.xi.sum(axis=1) > 0, self.xi.argmax(axis=1), -1)
        served = (comp >= 0) & (sub >= 0)
        idx = np.arange(self.K_total)
        power = np.where(served, self.p[idx, np.maximum(comp, 0), np.maximum(sub, 0)], 0.0)
        return np.where(served, comp, -1), np.where(served, sub, -1), power

    @classmethod
    def from_assignment(cls, comp, sub, power, user_class, eta, rho, uav_xy,
                        config: ScenarioConfig) -> "AllocationDecision":
        comp = np.asarray(comp, dtype=int)
        sub = np.asarray(sub, dtype=int)
        power = np.asarray(power, dtype=float)
        K, C, N = len(comp), config.n_components, config.N
        xi = np.zeros((K, N))
        phi = np.zeros((K, C))
        p = np.zeros((K, C, N))
        for i in range(K):
            if comp[i] >= 0 and sub[i] >= 0:
                phi[i, comp[i]] = 1.0
                xi[i, sub[i]] = 1.0
                p[i, comp[i], sub[i]] = power[i]
        return cls(xi, phi, p, np.array(eta, float), np.array(rho, float),
                   np.array(uav_xy, float).reshape(config.V, 2), np.asarray(user_class, int))


def empty_decision(state: TopologyState, config: ScenarioConfig) -> AllocationDecision:
    third = np.full((N_CLASSES, N_COMP_TYPES), 1 / 3)
    K, C, N = state.K_total, config.n_components, config.N
    return AllocationDecision(np.zeros((K, N)), np.zeros((K, C)), np.zeros((K, C, N)),
                              third.copy(), third.copy(), state.uav_xyz[:, :2].copy(),
                              np.array(state.user_class))


# ---------------------------------------------------------------- resource pools

def subchannel_counts(eta: np.ndarray, N: int) -> np.ndarray:
    """Subchannels each class may use on every component of a type: ``floor(eta * N)``."""
    return np.floor(np.asarray(eta) * N + 1e-9).astype(int)


def subchannel_pools(eta: np.ndarray, N: int) -> np.ndarray:
    """Start index of each class's contiguous pool per component type, shape (S, 3).

    Pools of different classes never overlap; leftover subchannels stay idle.
    """
    counts = subchannel_counts(eta, N)
    starts = np.zeros_like(counts)
    starts[1:] = np.cumsum(counts, axis=0)[:-1]
    return starts


def slot_power_share(rho: np.ndarray, eta: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    """Power a single occupied slot may use: the class budget split over its pool, (S, 3)."""
    counts = np.maximum(subchannel_counts(eta, config.N), 1)
    return np.asarray(rho) * config.power_budgets[None, :] / counts


# ---------------------------------------------------------------- metrics

def throughput_class1(decision: AllocationDecision, realization: ChannelRealization,
                      config: ScenarioConfig, rates: np.ndarray | None = None) -> float:
    if rates is None:
        rates = channel.user_rates(decision, realization, config)
    return float(rates[decision.user_class == 0].sum())


def md1_delay(distance: float, arrivals_bits: float, rate_bps: float, lam_bps: float) -> float:
    """Propagation + transmission + M/D/1 queuing delay of one user.

    Raises :class:`QueueUnstableError` when ``rate <= lam``.
    """
    if rate_bps <= lam_bps:
        raise QueueUnstableError(f"service rate {rate_bps:g} <= arrival rate {lam_bps:g}")
    queue = lam_bps * arrivals_bits / (2.0 * (rate_bps ** 2 - lam_bps * rate_bps))
    return distance / SPEED_OF_LIGHT + arrivals_bits / rate_bps + queue


def delay_penalty(config: ScenarioConfig) -> float:
    return config.delay_penalty_factor * config.beta_s


def serving_distance(decision: AllocationDecision, dist: np.ndarray) -> np.ndarray:
    """Distance from each user to its associated component, summed over phi*xi."""
    weight = decision.phi * decision.xi.sum(axis=1, keepdims=True)
    return (weight * dist).sum(axis=1)


def service_delays(decision: AllocationDecision, realization: ChannelRealization,
                   state: TopologyState, config: ScenarioConfig,
                   rates: np.ndarray | None = None) -> np.ndarray:
    """Delay of every class-2 user (in class order); unstable queues get the penalty."""
    if rates is None:
        rates = channel.user_rates(decision, realization, config)
    idx = state.class_indices(1)
    dist = serving_distance(decision, all_distances(state))
    lam = config.lambda2_per_user
    out = np.empty(len(idx))
    for j, i in enumerate(idx):
        try:
            out[j] = md1_delay(dist[i], state.arrivals[i], rates[i], lam)
        except QueueUnstableError:
            out[j] = delay_penalty(config)
    return out


def service_delay(k: int, decision: AllocationDecision, realization: ChannelRealization,
                  state: TopologyState, config: ScenarioConfig) -> float:
    """Delay of class-2 user ``k``."""
    return float(service_delays(decision, realization, state, config)[k])


def average_delay(decision, realization, state, config, rates=None) -> float:
    d = service_delays(decision, realization, state, config, rates)
    return float(d.mean()) if len(d) else 0.0


def user_sinrs(decision: AllocationDecision, realization: ChannelRealization,
               config: ScenarioConfig, sinr: np.ndarray | None = None) -> np.ndarray:
    """Association-weighted SINR of every user summed over the three layers."""
    if sinr is None:
        sinr = channel.sinr_tensor(decision, realization, config)
    return (decision.phi[:, :, None] * decision.xi[:, None, :] * sinr).sum(axis=(1, 2))


def user_sinr(i: int, decision, realization, config) -> float:
    return float(user_sinrs(decision, realization, config)[i])


def average_sinr(decision, realization, config, sinr=None) -> float:
    values = user_sinrs(decision, realization, config, sinr)[decision.user_class == 2]
    return float(values.mean()) if len(values) else 0.0


def power_consumption(decision: AllocationDecision) -> np.ndarray:
    """Watts drawn by every component in every slice, shape (S, C)."""
    return channel.slice_tx_power(decision).sum(axis=2)


@dataclass(frozen=True)
class SliceMetrics:
    throughput_bps: float
    avg_delay_s: float
    avg_sinr_linear: float
    beta_s: float = 0.2

    @property
    def objective_vector(self) -> tuple[float, float, float]:
        return (self.throughput_bps, self.beta_s - self.avg_delay_s, self.avg_sinr_linear)


def evaluate(decision: AllocationDecision, realization: ChannelRealization,
             state: TopologyState, config: ScenarioConfig) -> SliceMetrics:
    sinr = channel.sinr_tensor(decision, realization, config)
    rates = channel.user_rates(decision, realization, config,
                               rates=config.subchannel_bw * np.log2(1.0 + sinr))
    return SliceMetrics(
        throughput_bps=throughput_class1(decision, realization, config, rates),
        avg_delay_s=average_delay(decision, realization, state, config, rates),
        avg_sinr_linear=average_sinr(decision, realization, config, sinr),
        beta_s=config.beta_s,
    )


def objective_vector(decision, realization, state, config) -> tuple[float, float, float]:
    """``(R1sum, beta - D2ave, SINR3ave)``."""
    return evaluate(decision, realization, state, config).objective_vector


# ---------------------------------------------------------------- constraints

@dataclass(frozen=True)
class Violation:
    code: str            # "C1" ... "C11"
    where: tuple = ()
    detail: str = ""


def check_constraints(decision: AllocationDecision, config: ScenarioConfig,
                      tol: float = CONSTRAINT_TOL) -> list[Violation]:
    """List every violated constraint with its indices; empty means feasible."""
    out: list[Violation] = []
    xi, phi, p = decision.xi, decision.phi, decision.p
    cls = decision.user_class
    types = config.comp_types
    use = phi[:, :, None] * xi[:, None, :]                     # (K, C, N)

    for s in range(N_CLASSES):
        per_slot = use[cls == s].sum(axis=0)                   # (C, N)
        for c, n in zip(*np.nonzero(per_slot > 1 + tol)):
            out.append(Violation("C1", (s, int(c), int(n)), "slot shared inside a slice"))
    for i in np.flatnonzero(use.sum(axis=(1, 2)) > 1 + tol):
        out.append(Violation("C2", (int(i),), "more than one subchannel"))
    for i in np.flatnonzero(phi.sum(axis=1) > 1 + tol):
        out.append(Violation("C3", (int(i),), "more than one component"))
    for name, arr in (("rho", decision.rho), ("eta", decision.eta)):
        for s, t in zip(*np.nonzero((arr <= 0) | (arr >= 1))):
            out.append(Violation("C4", (name, int(s), int(t)), "share outside (0, 1)"))
    for idx in zip(*np.nonzero(p < 0)):
        out.append(Violation("C5", tuple(int(v) for v in idx), "negative power"))
    for name, arr in (("xi", xi), ("phi", phi)):
        for idx in zip(*np.nonzero((arr != 0) & (arr != 1))):
            out.append(Violation("C6", (name,) + tuple(int(v) for v in idx), "non-binary"))

    consumed = power_consumption(decision)                     # (S, C)
    budgets = config.power_budgets[types]
    counts = np.zeros((N_CLASSES, config.n_components))
    for s in range(N_CLASSES):
        counts[s] = use[cls == s].sum(axis=(0, 2))
    for s in range(N_CLASSES):
        for c in range(config.n_components):
            cap = decision.rho[s, types[c]] * budgets[c]
            if consumed[s, c] > cap * (1 + tol) + tol:
                out.append(Violation("C7", (s, c), f"{consumed[s, c]:g} W > {cap:g} W"))
            if counts[s, c] > decision.eta[s, types[c]] * config.N + tol:
                out.append(Violation("C8", (s, c), "subchannel budget exceeded"))

    uav = decision.uav_xy
    for a in range(len(uav)):
        for b in range(a + 1, len(uav)):
            if np.sum((uav[a] - uav[b]) ** 2) < config.d_min_uav_m ** 2 * (1 - tol):
                out.append(Violation("C9", (a, b), "vUAVs closer than d_min"))
    for code, arr in (("C10", decision.rho), ("C11", decision.eta)):
        sums = arr.sum(axis=0)
        for t in np.flatnonzero(np.abs(sums - 1) > tol):
            out.append(Violation(code, (int(t),), f"class shares sum to {sums[t]:.12g}"))
    return out
