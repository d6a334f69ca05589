"""Central + distributed training loop, action decoding, resource repair and baselines.

One central agent picks the inter-slice shares (eta, rho) and the vUAV
positions; three distributed agents, one per slice class, pick each user's
component, subchannel and power inside that class's share. Decoded actions
pass through a two-round repair before they reach the environment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import topology
from .agent import Batch, DdpgAgent, ExperienceTuple
from .analysis import nondominated_mask, rank_sums
from .channel import sample_realization
from .config import N_CLASSES, N_COMP_TYPES, ScenarioConfig
from .neural import NumericalError
from .slices import (AllocationDecision, SliceMetrics, check_constraints, evaluate,
                     slot_power_share, subchannel_counts, subchannel_pools)

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("episode", "t", "r1sum_bps", "d2ave_s", "sinr3ave_linear",
                  "reward1", "reward2", "reward3", "central_reward", "repairs")
STREAMS = ("topology", "fading", "noise", "sampling", "init")
ARRIVAL_SCALE = 4.0          # observations divide arrivals by this many mean arrivals
LOSER_POWER_FRACTION = 0.01  # power left on a dropped allocation, relative to its slot share


class TrainingError(RuntimeError):
    pass


def seed_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named generators fanned out from one master seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


# ---------------------------------------------------------------- layouts

@dataclass(frozen=True)
class AgentLayout:
    central_obs_len: int
    central_act_len: int
    distributed_obs_len: tuple[int, int, int]
    distributed_act_len: tuple[int, int, int]
    hidden: tuple[int, ...] = (100, 100)

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "AgentLayout":
        return cls(3 + 2 * config.K_total, 12 + 2 * config.V, tuple(config.K),
                   tuple(3 * k for k in config.K), config.hidden)

    @property
    def central_critic_len(self) -> int:
        return self.central_obs_len + self.central_act_len

    @property
    def distributed_critic_len(self) -> tuple[int, int, int]:
        return tuple(o + a for o, a in zip(self.distributed_obs_len, self.distributed_act_len))

    def network_dims(self):
        """``(actor_dims, critic_dims)`` per agent, central agent first."""
        h = list(self.hidden)
        out = [([self.central_obs_len, *h, self.central_act_len],
                [self.central_critic_len, *h, 1])]
        for o, a in zip(self.distributed_obs_len, self.distributed_act_len):
            out.append(([o, *h, a], [o + a, *h, 1]))
        return out


@dataclass(frozen=True)
class CoupledLayout:
    """Three coupled agents: each sees its class's arrivals and user positions and
    also proposes its own shares and a full set of vUAV positions."""

    obs_len: tuple[int, int, int]
    act_len: tuple[int, int, int]
    hidden: tuple[int, ...] = (100, 100)

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "CoupledLayout":
        return cls(tuple(3 * k for k in config.K),
                   tuple(3 * k + 2 * N_COMP_TYPES + 2 * config.V for k in config.K),
                   config.hidden)

    @property
    def critic_len(self) -> tuple[int, int, int]:
        total_act = sum(self.act_len)
        return tuple(o + total_act for o in self.obs_len)

    def network_dims(self):
        h = list(self.hidden)
        return [([o, *h, a], [c, *h, 1])
                for o, a, c in zip(self.obs_len, self.act_len, self.critic_len)]


# ---------------------------------------------------------------- observations

def _mean_arrival_bits(config: ScenarioConfig) -> float:
    mean = config.lambda2_per_user * config.delta_s
    return mean if mean > 0 else config.packet_bits


def build_central_observation(state: topology.TopologyState, config: ScenarioConfig) -> np.ndarray:
    """Three per-class arrival aggregates, then every user's (x, y), all in [0, 1]."""
    unit = ARRIVAL_SCALE * _mean_arrival_bits(config)
    agg = np.zeros(N_CLASSES)
    for s in range(N_CLASSES):
        idx = state.class_indices(s)
        if len(idx):
            agg[s] = state.arrivals[idx].sum() / (unit * len(idx))
    coords = state.user_xy / config.area_side_m
    return np.clip(np.concatenate([agg, coords.ravel()]), 0.0, 1.0)


def build_distributed_observation(state: topology.TopologyState, s: int,
                                  config: ScenarioConfig) -> np.ndarray:
    """Arrivals of the class-``s`` users scaled into [0, 1]."""
    unit = ARRIVAL_SCALE * _mean_arrival_bits(config)
    return np.clip(state.arrivals[state.class_indices(s)] / unit, 0.0, 1.0)


def build_coupled_observation(state, s, config) -> np.ndarray:
    idx = state.class_indices(s)
    xy = state.user_xy[idx] / config.area_side_m
    return np.clip(np.concatenate([build_distributed_observation(state, s, config), xy.ravel()]),
                   0.0, 1.0)


# ---------------------------------------------------------------- share transform
#
# Two raw values u1, u2 in [0, 1] become three shares that sum to 1, each at
# least `floor`: odds e = u / (1 - u) for the first two classes, 1 for the
# third, then share_s = floor + (1 - 3 floor) * e_s / sum(e). u1 = u2 = 0.5
# gives equal thirds.

_U_EPS = 1e-12


def decode_shares(u1, u2, floor: float) -> np.ndarray:
    u = np.clip(np.array([u1, u2], dtype=float), _U_EPS, 1 - _U_EPS)
    odds = np.append(u / (1 - u), 1.0)
    return floor + (1 - N_CLASSES * floor) * odds / odds.sum()


def encode_shares(shares, floor: float) -> np.ndarray:
    q = (np.asarray(shares, dtype=float) - floor) / (1 - N_CLASSES * floor)
    odds = q[:2] / q[2]
    return odds / (1 + odds)


def repair_uav_spacing(xy, d_min: float, side: float, max_iter: int = 200) -> np.ndarray:
    """Push vUAV pairs apart along their joining line until all are ``>= d_min`` apart."""
    xy = np.clip(np.array(xy, dtype=float), 0.0, side)
    target = d_min * (1 + 1e-9) + 1e-9
    n = len(xy)
    for _ in range(max_iter):
        moved = False
        for a in range(n):
            for b in range(a + 1, n):
                diff = xy[b] - xy[a]
                dist = float(np.hypot(*diff))
                if dist >= target:
                    continue
                if dist > 1e-9:
                    direction = diff / dist
                else:
                    angle = np.pi * (a + b) / max(n, 1)
                    direction = np.array([np.cos(angle), np.sin(angle)])
                step = (target - dist) / 2 + 1e-6
                xy[a] = np.clip(xy[a] - direction * step, 0.0, side)
                xy[b] = np.clip(xy[b] + direction * step, 0.0, side)
                moved = True
        if not moved:
            return xy
    # pathological pile-up against the border: fall back to a spread diagonal
    grid = np.linspace(0.1, 0.9, n)[:, None] * side
    return np.hstack([grid, grid])


def decode_central_action(raw, config: ScenarioConfig):
    """``raw`` in [0, 1]^(12 + 2V) -> ``(eta, rho, uav_xy)``.

    Layout: six rho entries (class 1 then class 2, each over vBS, vUAV, vLEO),
    six eta entries in the same order, then ``(x, y)`` per vUAV.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (12 + 2 * config.V,):
        raise ValueError(f"central action must have length {12 + 2 * config.V}")
    rho = np.empty((N_CLASSES, N_COMP_TYPES))
    eta = np.empty((N_CLASSES, N_COMP_TYPES))
    for out, base in ((rho, 0), (eta, 6)):
        for t in range(N_COMP_TYPES):
            out[:, t] = decode_shares(raw[base + t], raw[base + 3 + t], config.share_floor)
    uav = raw[12:].reshape(config.V, 2) * config.area_side_m
    uav = repair_uav_spacing(uav, config.d_min_uav_m, config.area_side_m)
    return eta, rho, uav


def encode_central_action(eta, rho, uav_xy, config: ScenarioConfig) -> np.ndarray:
    raw = np.empty(12 + 2 * config.V)
    for arr, base in ((np.asarray(rho), 0), (np.asarray(eta), 6)):
        for t in range(N_COMP_TYPES):
            raw[base + t], raw[base + 3 + t] = encode_shares(arr[:, t], config.share_floor)
    raw[12:] = np.asarray(uav_xy, dtype=float).ravel() / config.area_side_m
    return raw


def decode_distributed_action(raw, s: int, eta, rho, config: ScenarioConfig):
    """Per-user triples ``(u1, u2, u3)`` -> ``(component, subchannel, power)`` arrays.

    ``u1`` picks a component by uniform bucketing over vBSs, vUAVs, vLEO;
    ``u2`` a subchannel inside the class's pool on that component type;
    ``u3`` scales the per-slot share of the class's power budget.
    """
    raw = np.asarray(raw, dtype=float).reshape(-1, 3)
    C = config.n_components
    types = config.comp_types
    counts = subchannel_counts(eta, config.N)[s]
    starts = subchannel_pools(eta, config.N)[s]
    share = slot_power_share(rho, eta, config)[s]
    comp = np.minimum((raw[:, 0] * C).astype(int), C - 1)
    t = types[comp]
    pool = counts[t]
    offset = np.minimum((raw[:, 1] * np.maximum(pool, 1)).astype(int), np.maximum(pool - 1, 0))
    sub = np.where(pool > 0, starts[t] + offset, -1)
    comp = np.where(pool > 0, comp, -1)
    power = np.where(pool > 0, np.clip(raw[:, 2], 0.0, 1.0) * share[t], 0.0)
    return comp, sub, power


def assemble_decision(parts, state, eta, rho, uav_xy, config) -> AllocationDecision:
    """Stack per-class ``(comp, sub, power)`` triples into one decision (class order)."""
    comp = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, int)
    sub = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, int)
    power = np.concatenate([p[2] for p in parts]) if parts else np.zeros(0)
    return AllocationDecision.from_assignment(comp, sub, power, state.user_class, eta, rho,
                                              uav_xy, config)


# ---------------------------------------------------------------- repair

def _repair_shares(arr, tol: float = 1e-9) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    bad = (np.any(arr <= 0) or np.any(arr >= 1)
           or np.any(np.abs(arr.sum(axis=0) - 1) > tol))
    if bad:
        arr = np.clip(arr, 1e-6, 1.0)
        arr /= arr.sum(axis=0, keepdims=True)
    return arr


def dual_resource_allocation(decision: AllocationDecision, config: ScenarioConfig,
                             dual: bool = True) -> tuple[AllocationDecision, int]:
    """Repair a decoded decision so it satisfies every constraint.

    Round one keeps, slot by slot, the first claimant in (class, user) order
    and marks the rest as conflicting. Round two (``dual=True``) moves each
    conflicting user to an idle subchannel of the class's pool, first on its
    own component, then on the others. Users with nowhere to go lose their
    subchannel and association and keep 1 % of the slot share as power.
    Returns the repaired copy and the number of conflicting users.
    """
    out = decision.copy()
    out.eta = _repair_shares(out.eta)
    out.rho = _repair_shares(out.rho)
    uav = out.uav_xy
    if any(np.hypot(*(uav[a] - uav[b])) < config.d_min_uav_m
           for a in range(len(uav)) for b in range(a + 1, len(uav))):
        out.uav_xy = repair_uav_spacing(uav, config.d_min_uav_m, config.area_side_m)

    K, C, N = decision.K_total, config.n_components, config.N
    types = config.comp_types
    counts = subchannel_counts(out.eta, N)
    starts = subchannel_pools(out.eta, N)
    share = slot_power_share(out.rho, out.eta, config)

    xi = np.zeros((K, N))
    phi = np.zeros((K, C))
    p = np.zeros((K, C, N))
    conflicts = 0
    for s in range(N_CLASSES):
        idx = np.flatnonzero(out.user_class == s)
        taken = np.zeros((C, N), dtype=bool)
        pending = []
        for i in idx:
            if decision.phi[i].max() <= 0 or decision.xi[i].max() <= 0:
                continue  # unserved by choice
            c = int(np.argmax(decision.phi[i]))
            n = int(np.argmax(decision.xi[i]))
            t = types[c]
            frac = min(max(decision.p[i, c, n], 0.0) / share[s, t], 1.0)
            in_pool = starts[s, t] <= n < starts[s, t] + counts[s, t]
            if in_pool and not taken[c, n]:
                taken[c, n] = True
                phi[i, c] = xi[i, n] = 1.0
                p[i, c, n] = frac * share[s, t]
            else:
                pending.append((i, c, n, frac))
        conflicts += len(pending)
        for i, c, n, frac in pending:
            slot = None
            if dual:
                same_type = [j for j in range(C) if types[j] == types[c] and j != c]
                rest = [j for j in range(C) if types[j] != types[c]]
                for j in [c, *same_type, *rest]:
                    t = types[j]
                    free = [m for m in range(starts[s, t], starts[s, t] + counts[s, t])
                            if not taken[j, m]]
                    if free:
                        slot = (j, free[0])
                        break
            if slot is None:
                p[i, c, n] = LOSER_POWER_FRACTION * share[s, types[c]]
                continue
            j, m = slot
            taken[j, m] = True
            phi[i, j] = xi[i, m] = 1.0
            p[i, j, m] = frac * share[s, types[j]]
    out.xi, out.phi, out.p = xi, phi, p
    return out, conflicts


# ---------------------------------------------------------------- rewards

class RunningNormalizer:
    """Running min-max 0-1 scaling of (throughput, delay, SINR) over the whole run."""

    def __init__(self):
        self.lo = np.full(3, np.inf)
        self.hi = np.full(3, -np.inf)

    def update(self, values) -> None:
        v = np.asarray(values, dtype=float)
        self.lo = np.minimum(self.lo, v)
        self.hi = np.maximum(self.hi, v)

    def normalize(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        span = self.hi - self.lo
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(span > 0, (v - self.lo) / np.where(span > 0, span, 1.0), 0.5)
        return np.clip(out, 0.0, 1.0)

    def state_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def load_state_dict(self, d: dict) -> None:
        self.lo, self.hi = np.array(d["lo"], float), np.array(d["hi"], float)


def metric_triple(m: SliceMetrics) -> np.ndarray:
    return np.array([m.throughput_bps, m.avg_delay_s, m.avg_sinr_linear])


def distributed_reward(metrics: SliceMetrics, s: int, normalizer: RunningNormalizer) -> float:
    """0-1 reward of distributed agent ``s`` (0-based); delay is inverted."""
    return float(distributed_rewards(metrics, normalizer)[s])


def distributed_rewards(metrics: SliceMetrics, normalizer: RunningNormalizer) -> np.ndarray:
    n = normalizer.normalize(metric_triple(metrics))
    return np.array([n[0], 1.0 - n[1], n[2]])


def central_reward(window, current) -> int:
    """Rank-voting reward: sum over the three slice rewards of the current
    tuple's 1-based ascending rank inside ``window`` (equal values share the
    lowest rank)."""
    window = np.asarray(window, dtype=float).reshape(-1, 3)
    if len(window) == 0:
        raise ValueError("rank window is empty")
    return int(rank_sums(window, current)[0])


@dataclass
class ParetoCandidate:
    rewards: tuple[float, float, float]
    objectives: tuple[float, float, float]   # (R1sum, beta - D2ave, SINR3ave)
    actions: np.ndarray                      # central action then distributed actions
    episode: int
    t: int


# ---------------------------------------------------------------- training

@dataclass
class TrainingArtifacts:
    kind: str
    config: ScenarioConfig
    metrics: np.ndarray                       # (E*T, len(METRIC_COLUMNS))
    uav_trace: np.ndarray                     # (E*T, V, 2)
    eta_trace: np.ndarray                     # (E*T, 3, 3)
    rho_trace: np.ndarray
    candidates: list[ParetoCandidate] = field(default_factory=list)
    agents: dict[str, DdpgAgent] = field(default_factory=dict)
    normalizer: RunningNormalizer | None = None

    def column(self, name: str) -> np.ndarray:
        return self.metrics[:, METRIC_COLUMNS.index(name)]

    def rewards(self) -> np.ndarray:
        return self.metrics[:, 5:8]

    def time_averaged(self) -> tuple[float, float, float]:
        m = self.metrics[:, 2:5].mean(axis=0)
        return float(m[0]), float(m[1]), float(m[2])


def _noise_sigma(config: ScenarioConfig, step: int) -> float:
    total = config.E * config.T
    frac = step / (total - 1) if total > 1 else 1.0
    return config.noise_start + (config.noise_end - config.noise_start) * frac


def _make_agent(obs_dim, act_dim, config, rng, *, central: bool, extra_dim: int = 0) -> DdpgAgent:
    return DdpgAgent(
        obs_dim, act_dim, rng, extra_dim=extra_dim, hidden=config.hidden,
        actor_lr=config.actor_lr, critic_lr=config.critic_lr, gamma=config.gamma,
        tau=config.tau, critic_output=config.critic_output, optimizer=config.optimizer,
        noise=config.noise,
        buffer_size=config.buffer_central if central else config.buffer_distributed)


class _Recorder:
    def __init__(self, config: ScenarioConfig):
        n = config.E * config.T
        self.metrics = np.zeros((n, len(METRIC_COLUMNS)))
        self.uav = np.zeros((n, config.V, 2))
        self.eta = np.zeros((n, N_CLASSES, N_COMP_TYPES))
        self.rho = np.zeros((n, N_CLASSES, N_COMP_TYPES))
        self.i = 0

    def add(self, ep, t, metrics: SliceMetrics, rewards, central, repairs, decision):
        self.metrics[self.i] = (ep, t, metrics.throughput_bps, metrics.avg_delay_s,
                                metrics.avg_sinr_linear, *rewards, central, repairs)
        self.uav[self.i] = decision.uav_xy
        self.eta[self.i] = decision.eta
        self.rho[self.i] = decision.rho
        self.i += 1


def _environment_step(config, state, uav_xy, eta, rho, dist_actions, rngs, normalizer, *,
                      dual: bool):
    """Apply one joint action; returns (decision, metrics, rewards, repairs, next_state)."""
    st = state.with_uavs(uav_xy)
    realization = sample_realization(st, config, rngs["fading"])
    parts = [decode_distributed_action(dist_actions[s], s, eta, rho, config)
             for s in range(N_CLASSES)]
    decision = assemble_decision(parts, st, eta, rho, uav_xy, config)
    decision, repairs = dual_resource_allocation(decision, config, dual=dual)
    violations = check_constraints(decision, config)
    if violations:
        raise TrainingError(f"repaired decision still infeasible: {violations[:3]}")
    metrics = evaluate(decision, realization, st, config)
    normalizer.update(metric_triple(metrics))
    rewards = distributed_rewards(metrics, normalizer)
    next_state = topology.step(st, config, rngs["topology"])
    return decision, metrics, rewards, repairs, next_state


def _collect_candidates(buffer, candidates: dict, beta: float) -> None:
    if len(buffer) == 0:
        return
    rewards = buffer.field("rew")
    keep = nondominated_mask(rewards)
    objectives = buffer.field("objectives")
    prov = buffer.field("prov").astype(int)
    actions = np.hstack([buffer.field("act"), buffer.field("dist_act")])
    for j in np.flatnonzero(keep):
        key = (int(prov[j, 0]), int(prov[j, 1]))
        if key not in candidates:
            candidates[key] = ParetoCandidate(tuple(rewards[j]), tuple(objectives[j]),
                                              actions[j], *key)


def run_training(config: ScenarioConfig, *, dual: bool = True, fixed_uav: bool = False,
                 explore: bool = True) -> TrainingArtifacts:
    """Train the central and the three distributed agents for ``E x T`` steps.

    ``dual=False`` keeps only the first repair round (single allocation);
    ``fixed_uav=True`` pins the vUAVs to ``config.uav_init_coords``.
    """
    rngs = seed_streams(config.seed)
    layout = AgentLayout.from_config(config)
    central = _make_agent(layout.central_obs_len, layout.central_act_len, config,
                          rngs["init"], central=True)
    dist = [_make_agent(layout.distributed_obs_len[s], layout.distributed_act_len[s], config,
                        rngs["init"], central=False) for s in range(N_CLASSES)]
    for agent in [central, *dist]:
        agent.buffer.rng = rngs["sampling"]
    normalizer = RunningNormalizer()
    rec = _Recorder(config)
    candidates: dict = {}
    fixed = np.array(config.uav_init_coords, dtype=float)
    step = 0

    for ep in range(config.E):
        state = topology.init_topology(config, rngs["topology"])
        for agent in [central, *dist]:
            agent.noise.reset()
        o1 = build_central_observation(state, config)
        od = [build_distributed_observation(state, s, config) for s in range(N_CLASSES)]
        for t in range(config.T):
            try:
                sigma = _noise_sigma(config, step)
                a1 = central.select_action(o1, explore, rngs["noise"], sigma)
                eta, rho, uav = decode_central_action(a1, config)
                if fixed_uav:
                    uav = fixed
                ad = [dist[s].select_action(od[s], explore, rngs["noise"], sigma)
                      for s in range(N_CLASSES)]
                decision, metrics, rewards, repairs, state = _environment_step(
                    config, state, uav, eta, rho, ad, rngs, normalizer, dual=dual)
                o1n = build_central_observation(state, config)
                odn = [build_distributed_observation(state, s, config) for s in range(N_CLASSES)]

                for s in range(N_CLASSES):
                    agent = dist[s]
                    agent.buffer.push(ExperienceTuple(od[s], ad[s], rewards[s], odn[s]))
                    if agent.buffer.ready(config.batch_distributed):
                        agent.train_step(agent.buffer.sample(config.batch_distributed))

                central.buffer.push(ExperienceTuple(o1, a1, rewards, o1n),
                                    objectives=np.array(metrics.objective_vector),
                                    prov=np.array([ep, t]), dist_act=np.concatenate(ad))
                window = central.buffer.field("rew")
                r1 = central_reward(window, rewards)
                if central.buffer.ready(config.batch_central):
                    idx = central.buffer.sample_indices(config.batch_central)
                    d = central.buffer.gather(idx)
                    scaled = rank_sums(window, d["rew"]) / (3.0 * len(window))
                    central.train_step(Batch(d["obs"], d["act"], scaled, d["next_obs"]))
            except (NumericalError, FloatingPointError, TrainingError) as exc:
                raise TrainingError(f"episode {ep} TS {t}: {exc}") from exc
            rec.add(ep, t, metrics, rewards, r1, repairs, decision)
            o1, od = o1n, odn
            step += 1
        if ep >= config.E - config.pareto_episodes:
            _collect_candidates(central.buffer, candidates, config.beta_s)

    kind = "cdmaddpg" + ("" if dual else "-single") + ("-fixed-uav" if fixed_uav else "")
    agents = {"central": central, **{f"d{s + 1}": dist[s] for s in range(N_CLASSES)}}
    return TrainingArtifacts(kind, config, rec.metrics, rec.uav, rec.eta, rec.rho,
                             list(candidates.values()), agents, normalizer)


def _coupled_central(tails, config: ScenarioConfig):
    """Merge the three agents' share and vUAV proposals into one inter-slice choice."""
    floor = config.share_floor
    rho = np.empty((N_CLASSES, N_COMP_TYPES))
    eta = np.empty((N_CLASSES, N_COMP_TYPES))
    for out, off in ((rho, 0), (eta, N_COMP_TYPES)):
        w = np.array([tail[off:off + N_COMP_TYPES] for tail in tails]) + 1e-6
        out[:] = floor + (1 - N_CLASSES * floor) * w / w.sum(axis=0, keepdims=True)
    uav = np.mean([tail[2 * N_COMP_TYPES:] for tail in tails], axis=0)
    uav = uav.reshape(config.V, 2) * config.area_side_m
    uav = repair_uav_spacing(uav, config.d_min_uav_m, config.area_side_m)
    return eta, rho, uav


def run_maddpg_baseline(config: ScenarioConfig, explore: bool = True) -> TrainingArtifacts:
    """Single-layer coupled baseline: three agents, each critic sees every agent's action."""
    rngs = seed_streams(config.seed)
    layout = CoupledLayout.from_config(config)
    agents = [_make_agent(layout.obs_len[s], layout.act_len[s], config, rngs["init"],
                          central=False, extra_dim=sum(layout.act_len) - layout.act_len[s])
              for s in range(N_CLASSES)]
    joint = agents[0].buffer  # one joint memory keeps the three agents' samples aligned
    joint.rng = rngs["sampling"]
    normalizer = RunningNormalizer()
    rec = _Recorder(config)
    step = 0
    for ep in range(config.E):
        state = topology.init_topology(config, rngs["topology"])
        for a in agents:
            a.noise.reset()
        obs = [build_coupled_observation(state, s, config) for s in range(N_CLASSES)]
        for t in range(config.T):
            try:
                sigma = _noise_sigma(config, step)
                acts = [agents[s].select_action(obs[s], explore, rngs["noise"], sigma)
                        for s in range(N_CLASSES)]
                eta, rho, uav = _coupled_central([a[3 * k:] for a, k in zip(acts, config.K)],
                                                 config)
                ad = [a[:3 * k] for a, k in zip(acts, config.K)]
                decision, metrics, rewards, repairs, state = _environment_step(
                    config, state, uav, eta, rho, ad, rngs, normalizer, dual=True)
                nxt = [build_coupled_observation(state, s, config) for s in range(N_CLASSES)]
                joint.push(ExperienceTuple(np.concatenate(obs), np.concatenate(acts), rewards,
                                           np.concatenate(nxt)))
                if joint.ready(config.batch_distributed):
                    _train_coupled(agents, layout, joint.sample(config.batch_distributed))
            except (NumericalError, FloatingPointError, TrainingError) as exc:
                raise TrainingError(f"episode {ep} TS {t}: {exc}") from exc
            rec.add(ep, t, metrics, rewards, 0.0, repairs, decision)
            obs = nxt
            step += 1
    return TrainingArtifacts("maddpg", config, rec.metrics, rec.uav, rec.eta, rec.rho, [],
                             {f"a{s + 1}": agents[s] for s in range(N_CLASSES)}, normalizer)


def _split(x, lengths):
    return np.split(x, np.cumsum(lengths)[:-1], axis=1)


def _train_coupled(agents, layout: CoupledLayout, batch: Batch) -> None:
    obs = _split(batch.obs, layout.obs_len)
    nxt = _split(batch.next_obs, layout.obs_len)
    acts = _split(batch.act, layout.act_len)
    next_acts = [a.actor_target(o) for a, o in zip(agents, nxt)]
    for s, agent in enumerate(agents):
        others = [j for j in range(N_CLASSES) if j != s]
        b = Batch(obs[s], acts[s], batch.rew[:, s], nxt[s],
                  extra=np.hstack([acts[j] for j in others]),
                  next_extra=np.hstack([next_acts[j] for j in others]))
        agent.train_step(b)


def utility_value(rewards, weights) -> float:
    """Weighted utility on normalized metrics: w1 R1 - w2 D2 + w3 SINR3."""
    w1, w2, w3 = weights
    return w1 * rewards[0] - w2 * (1.0 - rewards[1]) + w3 * rewards[2]


def run_scalar_utility_baseline(config: ScenarioConfig, weights=(1.0, 1.0, 1.0), *,
                                raw_units: bool = False, explore: bool = True) -> TrainingArtifacts:
    """One DDPG agent over the joint action maximising a weighted-sum utility.

    By default the utility uses the 0-1 normalized metrics; ``raw_units``
    uses physical units and min-max scales the utility itself for the critic.
    The logged ``central_reward`` column holds the utility value.
    """
    weights = tuple(float(w) for w in weights)
    if len(weights) != 3 or min(weights) <= 0:
        raise ValueError("weights must be three positive numbers")
    rngs = seed_streams(config.seed)
    layout = AgentLayout.from_config(config)
    obs_len = layout.central_obs_len + config.K_total
    act_len = layout.central_act_len + sum(layout.distributed_act_len)
    agent = _make_agent(obs_len, act_len, config, rngs["init"], central=True)
    agent.buffer.rng = rngs["sampling"]
    normalizer = RunningNormalizer()
    u_lo, u_hi = np.inf, -np.inf
    rec = _Recorder(config)

    def observe(st):
        parts = [build_central_observation(st, config)]
        parts += [build_distributed_observation(st, s, config) for s in range(N_CLASSES)]
        return np.concatenate(parts)

    step = 0
    for ep in range(config.E):
        state = topology.init_topology(config, rngs["topology"])
        agent.noise.reset()
        obs = observe(state)
        for t in range(config.T):
            try:
                a = agent.select_action(obs, explore, rngs["noise"], _noise_sigma(config, step))
                eta, rho, uav = decode_central_action(a[:layout.central_act_len], config)
                ad = _split(a[None, layout.central_act_len:], layout.distributed_act_len)
                ad = [x[0] for x in ad]
                decision, metrics, rewards, repairs, state = _environment_step(
                    config, state, uav, eta, rho, ad, rngs, normalizer, dual=True)
                if raw_units:
                    u = (weights[0] * metrics.throughput_bps - weights[1] * metrics.avg_delay_s
                         + weights[2] * metrics.avg_sinr_linear)
                    u_lo, u_hi = min(u_lo, u), max(u_hi, u)
                    r = (u - u_lo) / (u_hi - u_lo) if u_hi > u_lo else 0.5
                else:
                    u = utility_value(rewards, weights)
                    r = (u + weights[1]) / sum(weights)
                nxt = observe(state)
                agent.buffer.push(ExperienceTuple(obs, a, r, nxt))
                if agent.buffer.ready(config.batch_central):
                    agent.train_step(agent.buffer.sample(config.batch_central))
            except (NumericalError, FloatingPointError, TrainingError) as exc:
                raise TrainingError(f"episode {ep} TS {t}: {exc}") from exc
            rec.add(ep, t, metrics, rewards, u, repairs, decision)
            obs = nxt
            step += 1
    return TrainingArtifacts(f"utility{weights}", config, rec.metrics, rec.uav, rec.eta,
                             rec.rho, [], {"agent": agent}, normalizer)
