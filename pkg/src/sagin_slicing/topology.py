"""Node geometry, user placement and traffic arrivals for one time slot."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import N_CLASSES, ScenarioConfig


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TopologyState:
    """World snapshot of one TS.

    Users are stored flat, class by class: class 1 users first, then class 2,
    then class 3. ``user_class[i]`` holds the 0-based class of flat user ``i``.
    """

    user_xy: np.ndarray       # (K_total, 2)
    user_class: np.ndarray    # (K_total,) int
    uav_xyz: np.ndarray       # (V, 3)
    vbs_xyz: np.ndarray       # (M, 3)
    leo_xyz: np.ndarray       # (3,)
    arrivals: np.ndarray      # (K_total,) bits
    t: int = 0

    def class_indices(self, s: int) -> np.ndarray:
        """Flat indices of the users of 0-based class ``s``."""
        return np.flatnonzero(self.user_class == s)

    def flat_index(self, s: int, k: int) -> int:
        idx = self.class_indices(s)
        if not 0 <= k < len(idx):
            raise IndexError(f"user {k} out of range for class {s + 1} ({len(idx)} users)")
        return int(idx[k])

    def with_uavs(self, uav_xy: np.ndarray) -> "TopologyState":
        z = self.uav_xyz[:, 2:3]
        return replace(self, uav_xyz=_frozen(np.hstack([np.asarray(uav_xy, float), z])))

    @property
    def K_total(self) -> int:
        return len(self.user_class)


def _class_labels(config: ScenarioConfig) -> np.ndarray:
    return np.repeat(np.arange(N_CLASSES), config.K)


def dense_zone_probability(config: ScenarioConfig) -> float:
    """Probability that a user lands in the dense zone under the 5:1 density model."""
    a_dense = config.dense_side_m ** 2
    a_sparse = config.area_side_m ** 2 - a_dense
    w = config.density_ratio * a_dense
    return w / (w + a_sparse)


def sample_user_positions(config: ScenarioConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` users from the two-zone mixture.

    The sparse zone is the L-shaped remainder of the square, split into the
    right strip below the dense side and the full-width top strip.
    """
    side, dense = config.area_side_m, config.dense_side_m
    in_dense = rng.random(n) < dense_zone_probability(config)
    u = rng.random((n, 2))
    xy = np.empty((n, 2))
    xy[in_dense] = u[in_dense] * dense

    sparse = ~in_dense
    a_right = (side - dense) * dense
    a_top = side * (side - dense)
    top = rng.random(n) < a_top / (a_right + a_top)
    right = sparse & ~top
    top &= sparse
    xy[right, 0] = dense + u[right, 0] * (side - dense)
    xy[right, 1] = u[right, 1] * dense
    xy[top, 0] = u[top, 0] * side
    xy[top, 1] = dense + u[top, 1] * (side - dense)
    return xy


def sample_arrivals(state: TopologyState, config: ScenarioConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """Per-user arrivals in bits for one TS.

    Class-2 users receive Poisson counts of ``packet_bits`` packets with mean
    ``(lambda2 / K2) * delta / packet_bits``. Class-1 and class-3 users are
    full-buffer and get the same mean value as a constant.
    """
    mean_bits = config.lambda2_per_user * config.delta_s
    arrivals = np.full(state.K_total, mean_bits)
    idx = state.class_indices(1)
    if len(idx):
        packets = rng.poisson(mean_bits / config.packet_bits, size=len(idx))
        arrivals[idx] = packets * config.packet_bits
    return arrivals


def init_topology(config: ScenarioConfig, seed: int | np.random.Generator) -> TopologyState:
    rng = np.random.default_rng(seed)
    labels = _class_labels(config)
    user_xy = sample_user_positions(config, len(labels), rng)
    uav = np.array(config.uav_init_coords, dtype=float).reshape(config.V, 2)
    uav_xyz = np.hstack([uav, np.full((config.V, 1), config.z_uav_m)])
    vbs_xyz = np.hstack([np.array(config.vbs_coords, float).reshape(config.M, 2),
                         np.zeros((config.M, 1))])
    half = config.area_side_m / 2
    state = TopologyState(
        user_xy=_frozen(user_xy),
        user_class=labels,
        uav_xyz=_frozen(uav_xyz),
        vbs_xyz=_frozen(vbs_xyz),
        leo_xyz=_frozen([half, half, config.z_leo_m]),
        arrivals=_frozen(np.zeros(len(labels))),
        t=0,
    )
    return replace(state, arrivals=_frozen(sample_arrivals(state, config, rng)))


def step_user_positions(state: TopologyState, config: ScenarioConfig,
                        rng: np.random.Generator) -> TopologyState:
    """Advance one TS: users are redrawn i.i.d. from the two-zone mixture."""
    xy = sample_user_positions(config, state.K_total, rng)
    return replace(state, user_xy=_frozen(xy), t=state.t + 1)


def step(state: TopologyState, config: ScenarioConfig, rng: np.random.Generator) -> TopologyState:
    """Next TS: new user positions, then fresh arrivals."""
    nxt = step_user_positions(state, config, rng)
    return replace(nxt, arrivals=_frozen(sample_arrivals(nxt, config, rng)))


def component_xyz(state: TopologyState) -> np.ndarray:
    """Coordinates of every component, ordered vBSs, vUAVs, vLEO: shape (C, 3)."""
    return np.vstack([state.vbs_xyz, state.uav_xyz, state.leo_xyz[None, :]])


def all_distances(state: TopologyState) -> np.ndarray:
    """User-to-component distances, shape (K_total, C).

    The satellite column uses the high-altitude approximation d = z_leo.
    """
    comps = component_xyz(state)
    users = np.hstack([state.user_xy, np.zeros((state.K_total, 1))])
    d = np.linalg.norm(users[:, None, :] - comps[None, :, :], axis=2)
    d[:, -1] = state.leo_xyz[2]
    return d


def distances(state: TopologyState, s: int, k: int):
    """Distances of user ``k`` of 0-based class ``s`` to each vBS, each vUAV and the vLEO."""
    i = state.flat_index(s, k)
    u = np.array([*state.user_xy[i], 0.0])
    d_vbs = np.linalg.norm(state.vbs_xyz - u, axis=1)
    d_vuav = np.linalg.norm(state.uav_xyz - u, axis=1)
    return d_vbs, d_vuav, float(state.leo_xyz[2])
