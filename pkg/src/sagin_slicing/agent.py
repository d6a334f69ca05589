"""Deterministic-policy actor-critic agent with replay memory and target networks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .neural import Mlp, NumericalError, dumps_mlp, loads_mlp, make_optimizer, soft_update


class BufferNotReady(RuntimeError):
    """Fewer stored tuples than the requested mini-batch."""


@dataclass
class ExperienceTuple:
    obs: np.ndarray
    act: np.ndarray
    rew: float | np.ndarray
    next_obs: np.ndarray


@dataclass
class Batch:
    obs: np.ndarray
    act: np.ndarray
    rew: np.ndarray
    next_obs: np.ndarray
    extra: np.ndarray | None = None       # extra critic inputs (other agents' actions)
    next_extra: np.ndarray | None = None


class ReplayBuffer:
    """Fixed-capacity FIFO ring of experience tuples backed by numpy arrays.

    Extra per-tuple arrays (``extras``) ride along and are sampled with the
    same indices.
    """

    def __init__(self, capacity: int, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng if rng is not None else np.random.default_rng()
        self._arrays: dict[str, np.ndarray] | None = None
        self._next = 0
        self.size = 0
        self.pushed = 0

    def __len__(self) -> int:
        return self.size

    def _allocate(self, items: dict[str, np.ndarray]) -> None:
        self._arrays = {k: np.zeros((self.capacity,) + np.shape(v)) for k, v in items.items()}

    def push(self, item: ExperienceTuple, **extras) -> int:
        """Store a tuple, evicting the oldest when full; returns its slot."""
        items = {"obs": item.obs, "act": item.act, "rew": item.rew, "next_obs": item.next_obs,
                 **extras}
        for k, v in items.items():
            if not np.all(np.isfinite(v)):
                raise NumericalError(f"non-finite {k} in experience tuple")
        if self._arrays is None:
            self._allocate(items)
        slot = self._next
        for k, v in items.items():
            self._arrays[k][slot] = v
        self._next = (slot + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.pushed += 1
        return slot

    def field(self, name: str) -> np.ndarray:
        """Stored values of ``name`` in insertion order (oldest first)."""
        if self._arrays is None:
            return np.zeros((0,))
        return self._arrays[name][self.order()]

    def order(self) -> np.ndarray:
        """Slots from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return np.roll(np.arange(self.capacity), -self._next)

    def ready(self, n: int) -> bool:
        return self.size >= n

    def sample_indices(self, n: int) -> np.ndarray:
        if self.size < n:
            raise BufferNotReady(f"buffer holds {self.size} tuples, need {n}")
        return self.rng.choice(self.size, size=n, replace=False)

    def gather(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        return {k: v[idx] for k, v in self._arrays.items()}

    def sample(self, n: int) -> Batch:
        d = self.gather(self.sample_indices(n))
        return Batch(d["obs"], d["act"], d["rew"], d["next_obs"])


class GaussianNoise:
    def __init__(self, dim: int):
        self.dim = dim

    def reset(self) -> None:
        pass

    def __call__(self, rng: np.random.Generator, sigma: float) -> np.ndarray:
        return sigma * rng.standard_normal(self.dim)


class OrnsteinUhlenbeckNoise:
    def __init__(self, dim: int, theta: float = 0.15):
        self.dim, self.theta = dim, theta
        self.x = np.zeros(dim)

    def reset(self) -> None:
        self.x = np.zeros(self.dim)

    def __call__(self, rng: np.random.Generator, sigma: float) -> np.ndarray:
        self.x = self.x - self.theta * self.x + sigma * rng.standard_normal(self.dim)
        return self.x


class DdpgAgent:
    """Online/target actor and critic plus a replay memory.

    The critic reads ``[obs, own action, extra]`` where ``extra`` is empty
    for independent agents and holds the other agents' actions for the
    coupled baseline. ``reward_scale`` maps rewards into the critic's output
    range (``1 - gamma`` keeps a logistic critic inside (0, 1)).
    """

    def __init__(self, obs_dim: int, act_dim: int, rng: np.random.Generator, *,
                 extra_dim: int = 0, hidden=(100, 100), actor_lr: float = 1e-4,
                 critic_lr: float = 1e-3, gamma: float = 0.95, tau: float = 0.001,
                 buffer_size: int = 2000, critic_output: str = "sigmoid",
                 reward_scale: float | None = None, optimizer: str = "sgd",
                 noise: str = "gaussian"):
        if not 0 <= gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        self.obs_dim, self.act_dim, self.extra_dim = obs_dim, act_dim, extra_dim
        self.gamma, self.tau = gamma, tau
        if reward_scale is None:
            reward_scale = 1.0 - gamma if critic_output == "sigmoid" else 1.0
        self.reward_scale = reward_scale
        self.actor = Mlp.init([obs_dim, *hidden, act_dim], rng, "sigmoid", actor_lr)
        self.critic = Mlp.init([obs_dim + act_dim + extra_dim, *hidden, 1], rng,
                               critic_output, critic_lr)
        self.actor_target = self.actor.copy()
        self.critic_target_net = self.critic.copy()
        self.actor_opt = make_optimizer(optimizer)
        self.critic_opt = make_optimizer(optimizer)
        self.buffer = ReplayBuffer(buffer_size, rng)
        self.noise = OrnsteinUhlenbeckNoise(act_dim) if noise == "ou" else GaussianNoise(act_dim)

    @property
    def networks(self) -> dict[str, Mlp]:
        return {"actor": self.actor, "critic": self.critic,
                "actor_target": self.actor_target, "critic_target": self.critic_target_net}

    def select_action(self, obs, explore: bool = False, rng: np.random.Generator | None = None,
                      sigma: float = 0.0) -> np.ndarray:
        a = self.actor(np.asarray(obs, float))
        if explore:
            a = np.clip(a + self.noise(rng, sigma), 0.0, 1.0)
        return a

    @staticmethod
    def _critic_input(obs, act, extra):
        parts = [obs, act] if extra is None else [obs, act, extra]
        return np.hstack(parts)

    def critic_target(self, batch: Batch) -> np.ndarray:
        """``r + gamma * Q'(o', mu'(o'))`` using only the target networks."""
        next_act = self.actor_target(batch.next_obs)
        q_next = self.critic_target_net(self._critic_input(batch.next_obs, next_act,
                                                           batch.next_extra))[:, 0]
        return self.reward_scale * np.asarray(batch.rew, float) + self.gamma * q_next

    def update_critic(self, batch: Batch, targets: np.ndarray | None = None) -> float:
        """One descent step on the mean squared TD error; returns the pre-step loss."""
        if targets is None:
            targets = self.critic_target(batch)
        q, cache = self.critic.forward(self._critic_input(batch.obs, batch.act, batch.extra))
        err = q[:, 0] - targets
        loss = float(np.mean(err ** 2))
        if not np.isfinite(loss):
            raise NumericalError("non-finite critic loss")
        grads, _ = self.critic.backward(cache, (2.0 / len(err)) * err[:, None])
        self.critic_opt.step(self.critic, grads, "descend")
        return loss

    def actor_gradient(self, batch: Batch):
        """Policy gradient ``mean(grad_theta mu(o) . grad_a Q(o, mu(o)))`` and mean Q."""
        act, actor_cache = self.actor.forward(batch.obs)
        q, critic_cache = self.critic.forward(self._critic_input(batch.obs, act, batch.extra))
        n = len(q)
        _, dq_din = self.critic.backward(critic_cache, np.full((n, 1), 1.0 / n))
        dq_da = dq_din[:, self.obs_dim:self.obs_dim + self.act_dim]
        grads, _ = self.actor.backward(actor_cache, dq_da)
        return grads, float(q.mean())

    def update_actor(self, batch: Batch) -> float:
        """One ascent step of the actor along the policy gradient; returns mean Q."""
        grads, q_mean = self.actor_gradient(batch)
        self.actor_opt.step(self.actor, grads, "ascend")
        return q_mean

    def update_targets(self) -> None:
        soft_update(self.critic_target_net, self.critic, self.tau)
        soft_update(self.actor_target, self.actor, self.tau)

    def train_step(self, batch: Batch, targets: np.ndarray | None = None) -> tuple[float, float]:
        loss = self.update_critic(batch, targets)
        q = self.update_actor(batch)
        self.update_targets()
        return loss, q

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, net in self.networks.items():
            (directory / f"{name}.bin").write_bytes(dumps_mlp(net))

    def load(self, directory: str | Path) -> None:
        directory = Path(directory)
        self.actor = loads_mlp((directory / "actor.bin").read_bytes())
        self.critic = loads_mlp((directory / "critic.bin").read_bytes())
        self.actor_target = loads_mlp((directory / "actor_target.bin").read_bytes())
        self.critic_target_net = loads_mlp((directory / "critic_target.bin").read_bytes())
