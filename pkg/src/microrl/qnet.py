"""Shared action-value network Q(s, a; theta): 93 -> 100 (ReLU) -> 9.

All parameters live in one flat float64 vector laid out as
``w1 (row-major), b1, w2 (row-major), b2``; ``w1`` etc. are views into it, so
gradients, eligibility traces and checkpoints all share that layout.
"""

from __future__ import annotations

import hashlib
import math
import os
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import CheckpointError, DomainError, NumericDivergenceError, ShapeError
from .encoder import OBS_DIM
from .units import N_ACTIONS

N_HIDDEN = 100
CHECKPOINT_MAGIC = "psmagds-v1"


def n_params(n_in=OBS_DIM, n_hidden=N_HIDDEN, n_out=N_ACTIONS) -> int:
    return n_hidden * n_in + n_hidden + n_out * n_hidden + n_out


class QNetwork:
    def __init__(self, params=None, n_in=OBS_DIM, n_hidden=N_HIDDEN, n_out=N_ACTIONS):
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        size = n_params(n_in, n_hidden, n_out)
        if params is None:
            params = np.zeros(size)
        params = np.ascontiguousarray(params, dtype=np.float64)
        if params.shape != (size,):
            raise ShapeError(f"expected {size} parameters, got shape {params.shape}")
        self.params = params.copy()

    # layout views
    @property
    def w1(self):
        return self.params[: self.n_hidden * self.n_in].reshape(self.n_hidden, self.n_in)

    @property
    def b1(self):
        a = self.n_hidden * self.n_in
        return self.params[a : a + self.n_hidden]

    @property
    def w2(self):
        a = self.n_hidden * self.n_in + self.n_hidden
        return self.params[a : a + self.n_out * self.n_hidden].reshape(self.n_out, self.n_hidden)

    @property
    def b2(self):
        return self.params[-self.n_out :]

    @property
    def size(self) -> int:
        return self.params.shape[0]

    @classmethod
    def from_layers(cls, w1, b1, w2, b2) -> "QNetwork":
        w1, w2 = np.asarray(w1, dtype=float), np.asarray(w2, dtype=float)
        flat = np.concatenate([w1.ravel(), np.ravel(b1), w2.ravel(), np.ravel(b2)])
        return cls(flat, n_in=w1.shape[1], n_hidden=w1.shape[0], n_out=w2.shape[0])

    def copy(self) -> "QNetwork":
        return QNetwork(self.params, self.n_in, self.n_hidden, self.n_out)

    def _obs(self, obs):
        obs = np.ascontiguousarray(obs, dtype=np.float64)
        if obs.shape != (self.n_in,):
            raise ShapeError(f"observation must have shape ({self.n_in},), got {obs.shape}")
        return obs

    def forward(self, obs) -> np.ndarray:
        return kernels.q_values(self.params, self._obs(obs), self.n_in, self.n_hidden, self.n_out)

    values = forward

    def grad(self, obs, action: int) -> np.ndarray:
        """d q[action] / d params in the flat layout (ReLU'(0) taken as 0)."""
        action = self._action(action)
        return kernels.grad_q(self.params, self._obs(obs), action, self.n_in, self.n_hidden, self.n_out)

    def accumulate_trace(self, trace, obs, action: int, decay: float) -> None:
        """In place: ``trace <- decay * trace + grad(obs, action)``."""
        kernels.accumulate_trace(self.params, trace, self._obs(obs), self._action(action), float(decay),
                                 self.n_in, self.n_hidden, self.n_out)

    def add_scaled(self, step: float, direction, check: bool = True) -> None:
        """In place: ``params <- params + step * direction``."""
        if not check:
            kernels.axpy(self.params, step, direction)
            return
        direction = np.ascontiguousarray(direction, dtype=np.float64)
        if direction.shape != self.params.shape:
            raise ShapeError(f"direction shape {direction.shape} != {self.params.shape}")
        if not math.isfinite(step) or not np.isfinite(direction).all():
            raise NumericDivergenceError("non-finite step or direction")
        kernels.axpy(self.params, float(step), direction)

    def greedy(self, obs) -> int:
        return kernels.greedy(self.params, obs, self.n_in, self.n_hidden, self.n_out)

    def sarsa_update(self, trace, obs, action, reward, next_obs, next_action, done,
                     gamma, decay, alpha) -> float:
        """Fused TD update; same arithmetic as the step-by-step learner."""
        if done:
            next_obs, next_action = obs, 0
        return kernels.sarsa_update(self.params, trace, obs, action, reward, next_obs,
                                    next_action, done, gamma, decay, alpha,
                                    self.n_in, self.n_hidden, self.n_out)

    def _action(self, action):
        a = int(action)
        if not 0 <= a < self.n_out:
            raise ShapeError(f"action index {action} out of range 0..{self.n_out - 1}")
        return a

    def digest(self) -> str:
        return hashlib.sha256(self.params.tobytes()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, QNetwork) and np.array_equal(self.params, other.params) and (
            self.n_in, self.n_hidden, self.n_out) == (other.n_in, other.n_hidden, other.n_out)

    __hash__ = None


def forward(net: QNetwork, obs) -> np.ndarray:
    return net.forward(obs)


def grad_q(net: QNetwork, obs, action_index: int) -> np.ndarray:
    return net.grad(obs, action_index)


def init(seed: int, scale: float = 0.05) -> QNetwork:
    """Weights uniform in (-scale, scale) from a seeded generator, biases 0."""
    if not scale > 0:
        raise DomainError(f"scale must be > 0, got {scale!r}")
    rng = np.random.default_rng(seed)
    net = QNetwork()
    net.w1[:] = rng.uniform(-scale, scale, size=net.w1.shape)
    net.w2[:] = rng.uniform(-scale, scale, size=net.w2.shape)
    return net


def axpy_update(net: QNetwork, step: float, direction) -> QNetwork:
    net.add_scaled(step, direction)
    return net


def save_checkpoint(net: QNetwork, path) -> Path:
    """Text checkpoint: a header line then one parameter per line at 17
    significant digits (exact round trip). Written atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{CHECKPOINT_MAGIC} {net.n_in} {net.n_hidden} {net.n_out}"]
    lines += [format(float(v), ".17g") for v in net.params]
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return path


def load_checkpoint(path, expect=(OBS_DIM, N_HIDDEN, N_ACTIONS)) -> QNetwork:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise CheckpointError(f"{path}: cannot read checkpoint ({e.strerror})") from e
    lines = text.splitlines()
    if not lines:
        raise CheckpointError(f"{path}: empty checkpoint")
    head = lines[0].split()
    if len(head) != 4 or head[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}:1: bad header {lines[0]!r}")
    try:
        dims = tuple(int(x) for x in head[1:])
    except ValueError:
        raise CheckpointError(f"{path}:1: bad header {lines[0]!r}") from None
    if expect is not None and dims != tuple(expect):
        raise CheckpointError(f"{path}:1: network shape {dims} does not match expected {tuple(expect)}")
    size = n_params(*dims)
    body = lines[1:]
    if len(body) != size:
        raise CheckpointError(f"{path}:{len(lines) + 1}: expected {size} parameters, found {len(body)}")
    values = np.empty(size)
    for k, line in enumerate(body):
        try:
            v = float(line)
        except ValueError:
            raise CheckpointError(f"{path}:{k + 2}: cannot parse {line!r}") from None
        if not math.isfinite(v):
            raise CheckpointError(f"{path}:{k + 2}: non-finite parameter")
        values[k] = v
    return QNetwork(values, *dims)
