"""From-scratch Q-network: a 22-24-16-5 MLP with leaky-ReLU hidden layers.

Forward, mean-squared-error backward over the chosen-action outputs, plain
SGD and adaptive-moment optimizers, and a binary checkpoint format:

    magic    8 bytes  b"UAVQNET\\0"
    version  u32 LE   1
    n_layers u32 LE   3
    shapes   per layer: u32 fan_in, u32 fan_out
    params   float64 LE, order W1 (row-major, out x in), b1, W2, b2, W3, b3
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

STATE_DIM = 22
N_ACTIONS = 5
HIDDEN = (24, 16)
LEAKY_SLOPE = 0.01

_CKPT_MAGIC = b"UAVQNET\x00"
_CKPT_VERSION = 1


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


@dataclass
class QNetwork:
    """Dense value network mapping a 22-value state to 5 action values."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @classmethod
    def sizes(cls) -> tuple[tuple[int, int], ...]:
        return ((STATE_DIM, HIDDEN[0]), (HIDDEN[0], HIDDEN[1]), (HIDDEN[1], N_ACTIONS))

    @classmethod
    def init_random(cls, rng: np.random.Generator) -> "QNetwork":
        """Uniform +-1/sqrt(fan_in) weights and biases, layer by layer."""
        parts = []
        for fan_in, fan_out in cls.sizes():
            bound = 1.0 / np.sqrt(fan_in)
            parts.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            parts.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(*parts)

    @classmethod
    def zeros(cls) -> "QNetwork":
        parts = []
        for fan_in, fan_out in cls.sizes():
            parts.append(np.zeros((fan_out, fan_in)))
            parts.append(np.zeros(fan_out))
        return cls(*parts)

    def copy(self) -> "QNetwork":
        return QNetwork(*(p.copy() for p in self._parts()))

    def _parts(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self._parts())

    def to_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self._parts()])

    def from_flat(self, flat: np.ndarray) -> None:
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        i = 0
        for p in self._parts():
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size

    def forward(self, s: np.ndarray) -> np.ndarray:
        return self.forward_batch(s[np.newaxis])[0]

    def forward_batch(self, s: np.ndarray) -> np.ndarray:
        if s.shape[-1] != STATE_DIM:
            raise ValueError(f"state must have {STATE_DIM} entries, got {s.shape[-1]}")
        h1 = _leaky(s @ self.w1.T + self.b1)
        h2 = _leaky(h1 @ self.w2.T + self.b2)
        return h2 @ self.w3.T + self.b3

    def loss_and_grad(
        self, s: np.ndarray, actions: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray]:
        """Mean squared error over chosen-action outputs and its gradient.

        loss = (1/M) * sum_t (target_t - Q(s_t, a_t))^2; only the chosen
        action's output contributes per sample. Returns a flat gradient in
        to_flat() parameter order.
        """
        if s.ndim != 2 or s.shape[0] == 0:
            raise ValueError("batch must be a non-empty (m, 22) array")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(targets))):
            raise FloatingPointError("non-finite values in training batch")
        m = s.shape[0]
        z1 = s @ self.w1.T + self.b1
        h1 = _leaky(z1)
        z2 = h1 @ self.w2.T + self.b2
        h2 = _leaky(z2)
        q = h2 @ self.w3.T + self.b3
        idx = np.arange(m)
        residual = q[idx, actions] - targets
        loss = float(np.mean(residual**2))
        dq = np.zeros_like(q)
        dq[idx, actions] = 2.0 * residual / m
        dw3 = dq.T @ h2
        db3 = dq.sum(axis=0)
        dz2 = (dq @ self.w3) * _leaky_grad(z2)
        dw2 = dz2.T @ h1
        db2 = dz2.sum(axis=0)
        dz1 = (dz2 @ self.w2) * _leaky_grad(z1)
        dw1 = dz1.T @ s
        db1 = dz1.sum(axis=0)
        grad = np.concatenate(
            [dw1.ravel(), db1.ravel(), dw2.ravel(), db2.ravel(), dw3.ravel(), db3.ravel()]
        )
        return loss, grad


class Sgd:
    """Plain stochastic gradient descent; the caller owns any rate schedule."""

    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


class Adam:
    """Adaptive-moment optimizer with bias correction."""

    def __init__(
        self,
        n_params: int,
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad**2
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def save_checkpoint(net: QNetwork, path: str | Path) -> None:
    sizes = net.sizes()
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<II", _CKPT_VERSION, len(sizes)))
        for fan_in, fan_out in sizes:
            f.write(struct.pack("<II", fan_in, fan_out))
        f.write(net.to_flat().astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> QNetwork:
    with open(path, "rb") as f:
        magic = f.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        version, n_layers = struct.unpack("<II", f.read(8))
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        shapes = [struct.unpack("<II", f.read(8)) for _ in range(n_layers)]
        if tuple(shapes) != QNetwork.sizes():
            raise ValueError(f"unexpected layer shapes {shapes}")
        net = QNetwork.zeros()
        data = f.read(net.n_params * 8)
        if len(data) != net.n_params * 8 or f.read(1):
            raise ValueError("checkpoint parameter block has the wrong size")
        net.from_flat(np.frombuffer(data, dtype="<f8"))
        return net
