"""Small dense networks with hand-written reverse-mode gradients.

Hidden layers use ReLU, the output layer is logistic (or linear on request).
Inputs are row batches of shape ``(B, n_in)``; a 1-D input is treated as a
batch of one and returned 1-D.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"SGMLP"
CHECKPOINT_VERSION = 1
_OUTPUTS = ("sigmoid", "linear")


class NumericalError(ArithmeticError):
    pass


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Mlp:
    weights: list[np.ndarray]          # W[l] has shape (n_l, n_{l+1})
    biases: list[np.ndarray]
    output: str = "sigmoid"
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.output not in _OUTPUTS:
            raise ValueError(f"output activation must be one of {_OUTPUTS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        for W, b in zip(self.weights, self.biases):
            if W.shape[1] != b.shape[0]:
                raise ValueError("bias length does not match layer width")
        for W0, W1 in zip(self.weights, self.weights[1:]):
            if W0.shape[1] != W1.shape[0]:
                raise ValueError("inconsistent layer dimensions")

    @classmethod
    def init(cls, layer_dims, rng: np.random.Generator, output: str = "sigmoid",
             learning_rate: float = 1e-3) -> "Mlp":
        """Uniform ``+-1/sqrt(fan_in)`` initialisation."""
        weights, biases = [], []
        for n_in, n_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = 1.0 / np.sqrt(n_in)
            weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            biases.append(rng.uniform(-bound, bound, size=n_out))
        return cls(weights, biases, output, learning_rate)

    @classmethod
    def zeros(cls, layer_dims, output: str = "sigmoid", learning_rate: float = 1e-3) -> "Mlp":
        return cls([np.zeros((a, b)) for a, b in zip(layer_dims[:-1], layer_dims[1:])],
                   [np.zeros(b) for b in layer_dims[1:]], output, learning_rate)

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in ``W0, b0, W1, b1, ...`` order (views, not copies)."""
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def copy(self) -> "Mlp":
        return Mlp([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                   self.output, self.learning_rate)

    def forward(self, x):
        """Return ``(output, cache)``; the cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.shape[1] != self.layer_dims[0]:
            raise ValueError(f"input width {a.shape[1]} != {self.layer_dims[0]}")
        acts = [a]
        last = len(self.weights) - 1
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            if l < last:
                a = np.maximum(z, 0.0)
            elif self.output == "sigmoid":
                a = sigmoid(z)
            else:
                a = z
            acts.append(a)
        y = acts[-1][0] if squeeze else acts[-1]
        return y, (acts, squeeze)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, output_gradient):
        """Gradients of ``sum(output_gradient * output)``.

        Returns ``(grads, input_gradient)`` with ``grads`` ordered like
        :attr:`params`. Gradients are summed over the batch.
        """
        acts, squeeze = cache
        g = np.asarray(output_gradient, dtype=float)
        if squeeze:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValueError(f"output gradient shape {g.shape} != {acts[-1].shape}")
        y = acts[-1]
        dz = g * y * (1.0 - y) if self.output == "sigmoid" else g
        grads: list[np.ndarray] = []
        for l in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[l]
            grads.append(dz.sum(axis=0))
            grads.append(a_prev.T @ dz)
            da = dz @ self.weights[l].T
            if l > 0:
                dz = da * (acts[l] > 0)
        grads.reverse()
        return grads, (da[0] if squeeze else da)


def _check_finite(grads) -> None:
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient; update rejected")


def sgd_step(net: Mlp, grads, direction: str = "descend") -> Mlp:
    """In-place ``theta -/+= lr * grad``; ``direction`` is ``descend`` or ``ascend``."""
    _check_finite(grads)
    sign = {"descend": -1.0, "ascend": 1.0}[direction]
    for p, g in zip(net.params, grads):
        p += sign * net.learning_rate * g
    return net


@dataclass
class Adam:
    """Adam moments for one network; ``step`` mirrors :func:`sgd_step`."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    def step(self, net: Mlp, grads, direction: str = "descend") -> Mlp:
        _check_finite(grads)
        sign = {"descend": -1.0, "ascend": 1.0}[direction]
        if not self.m:
            self.m = [np.zeros_like(g) for g in grads]
            self.v = [np.zeros_like(g) for g in grads]
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(net.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p += sign * net.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return net


class Sgd:
    def step(self, net: Mlp, grads, direction: str = "descend") -> Mlp:
        return sgd_step(net, grads, direction)


def make_optimizer(kind: str):
    return Adam() if kind == "adam" else Sgd()


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """In-place ``target <- tau * online + (1 - tau) * target``."""
    if target.layer_dims != online.layer_dims:
        raise ValueError("target and online networks differ in shape")
    for pt, po in zip(target.params, online.params):
        pt *= 1.0 - tau
        pt += tau * po
    return target


# ---------------------------------------------------------------- checkpoints
#
# layout: magic | u32 version | u8 output | u32 n_dims | u32 dims... |
#         f64 learning_rate | per layer: W row-major, then b (f64 LE) |
#         sha256 of everything before it

def dumps_mlp(net: Mlp) -> bytes:
    dims = net.layer_dims
    body = bytearray(CHECKPOINT_MAGIC)
    body += struct.pack("<IBI", CHECKPOINT_VERSION, _OUTPUTS.index(net.output), len(dims))
    body += struct.pack(f"<{len(dims)}I", *dims)
    body += struct.pack("<d", net.learning_rate)
    for W, b in zip(net.weights, net.biases):
        body += np.ascontiguousarray(W, dtype="<f8").tobytes()
        body += np.ascontiguousarray(b, dtype="<f8").tobytes()
    return bytes(body) + hashlib.sha256(body).digest()


def loads_mlp(data: bytes) -> Mlp:
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ValueError("checkpoint checksum mismatch")
    if not body.startswith(CHECKPOINT_MAGIC):
        raise ValueError("not a network checkpoint")
    off = len(CHECKPOINT_MAGIC)
    version, out_idx, n_dims = struct.unpack_from("<IBI", body, off)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off += struct.calcsize("<IBI")
    dims = struct.unpack_from(f"<{n_dims}I", body, off)
    off += 4 * n_dims
    (lr,) = struct.unpack_from("<d", body, off)
    off += 8
    weights, biases = [], []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        W = np.frombuffer(body, dtype="<f8", count=n_in * n_out, offset=off)
        off += 8 * n_in * n_out
        b = np.frombuffer(body, dtype="<f8", count=n_out, offset=off)
        off += 8 * n_out
        weights.append(W.reshape(n_in, n_out).astype(float))
        biases.append(b.astype(float))
    if off != len(body):
        raise ValueError("trailing bytes in checkpoint")
    return Mlp(weights, biases, _OUTPUTS[out_idx], lr)
