"""
One-step dynamics models for the model-predictive expert.

``DynModel`` is a learned delta model: a normalised 8 -> 100 -> 100 -> 6 MLP
predicting ``s_next - s`` from ``s`` and ``a``. ``OracleModel`` wraps the exact
vessel dynamics for runs configured with ``model=oracle``. Both expose
``predict(states, actions)`` over single vectors or batches.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptyBufferError, NonFiniteError
from .neural_core import (
    adam_step, backward, forward, init_adam, init_mlp, pack_adam, pack_network, unpack_adam, unpack_network,
)
from .replay import TransitionBatch, stack_batch
from .vessel_env import ACTION_DIM, PSI, STATE_DIM, BerthingTask, ShipParams, angle_difference, propagate, wrap_angle

logger = logging.getLogger(__name__)

INPUT_DIM = STATE_DIM + ACTION_DIM


def _stats(values):
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    # constant columns keep unit scale
    scale = np.where(scale > 1e-8, scale, 1.0)
    return mean, scale


@dataclass
class DynModel:
    """
    Learned delta model with input and output normalisation.

    Attributes:
        net (Mlp): Maps normalised ``s (+) a`` to normalised ``s_next - s``.
        in_mean, in_scale (ndarray): Input statistics, shape (8,).
        out_mean, out_scale (ndarray): Output statistics, shape (6,).
        adam (AdamState): Optimizer state of ``net``.
        lr (float): Adam learning rate.
    """
    net: object
    in_mean: np.ndarray = field(default_factory=lambda: np.zeros(INPUT_DIM))
    in_scale: np.ndarray = field(default_factory=lambda: np.ones(INPUT_DIM))
    out_mean: np.ndarray = field(default_factory=lambda: np.zeros(STATE_DIM))
    out_scale: np.ndarray = field(default_factory=lambda: np.ones(STATE_DIM))
    adam: object = None
    lr: float = 1e-3

    def __post_init__(self):
        if self.adam is None:
            self.adam = init_adam(self.net)
        if np.any(self.in_scale <= 0) or np.any(self.out_scale <= 0):
            raise ValueError("Normalisation scales must be strictly positive")

    def normalize(self, inputs):
        return (inputs - self.in_mean) / self.in_scale

    def normalize_delta(self, deltas):
        return (deltas - self.out_mean) / self.out_scale

    def denormalize(self, outputs):
        return outputs * self.out_scale + self.out_mean

    def predict_delta(self, states, actions):
        x = np.concatenate([np.asarray(states, dtype=float), np.asarray(actions, dtype=float)], axis=-1)
        return self.denormalize(forward(self.net, self.normalize(x)))

    def predict(self, states, actions):
        states = np.asarray(states, dtype=float)
        nxt = states + self.predict_delta(states, actions)
        nxt[..., PSI] = wrap_angle(nxt[..., PSI])
        return nxt


@dataclass(frozen=True)
class OracleModel:
    """The exact vessel dynamics used in place of a learned model."""
    params: ShipParams = ShipParams()
    task: BerthingTask = BerthingTask()

    def predict(self, states, actions):
        return propagate(states, actions, self.params, self.task)


def init_dyn_model(rng, hidden=(100, 100), lr=1e-3):
    net = init_mlp((INPUT_DIM, *hidden, STATE_DIM), rng)
    return DynModel(net=net, lr=lr)


def predict_next(m, s, a):
    """Predicted next state ``s + f(s, a)`` with psi wrapped."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a))):
        raise NonFiniteError(f"Cannot predict from non-finite input s={s}, a={a}")
    return m.predict(s, a)


def training_arrays(batch):
    """Model inputs ``s (+) a`` and delta targets with the heading difference wrapped."""
    inputs = np.concatenate([batch.states, batch.actions], axis=1)
    targets = batch.next_states - batch.states
    targets[:, PSI] = angle_difference(targets[:, PSI])
    return inputs, targets


def set_statistics(m, inputs, targets):
    m.in_mean, m.in_scale = _stats(inputs)
    m.out_mean, m.out_scale = _stats(targets)


def model_loss(m, inputs, targets):
    """Mean squared error in normalised output space."""
    pred = forward(m.net, m.normalize(inputs))
    loss = float(np.mean((pred - m.normalize_delta(targets)) ** 2))
    if not np.isfinite(loss):
        raise NonFiniteError(f"World-model loss is not finite: {loss}")
    return loss


def _train_step(m, inputs, targets):
    x = m.normalize(inputs)
    y = m.normalize_delta(targets)
    pred = forward(m.net, x)
    residual = pred - y
    loss = float(np.mean(residual ** 2))
    if not np.isfinite(loss):
        raise NonFiniteError(f"World-model loss is not finite: {loss}")
    grads = backward(m.net, x, 2.0 * residual / residual.size)
    adam_step(m.net, grads, m.adam, m.lr)
    return loss


def fit_model(m, batch, steps, refresh_stats=True):
    """
    Run ``steps`` Adam updates of the model on one fixed batch.

    Args:
        m (DynModel): Model to train in place.
        batch: A ``TransitionBatch`` or a list of transitions.
        steps (int): Number of updates.
        refresh_stats (bool): Recompute normalisation statistics from the batch first.

    Returns:
        float: Loss on the batch after the last update.

    Raises:
        EmptyBufferError: if the batch is empty.
        NonFiniteError: if the loss diverges.
    """
    if not isinstance(batch, TransitionBatch):
        batch = stack_batch(list(batch))
    if len(batch) == 0:
        raise EmptyBufferError("Cannot fit the world model on an empty batch")
    inputs, targets = training_arrays(batch)
    if refresh_stats:
        set_statistics(m, inputs, targets)
    for _ in range(steps):
        _train_step(m, inputs, targets)
    return model_loss(m, inputs, targets)


def refit_from_buffers(m, buffers, rng, steps=200, batch_size=64):
    """
    End-of-episode refit on everything the given buffers hold.

    Statistics come from the whole union; each of the ``steps`` updates uses a
    fresh minibatch. Oracle models are left untouched.

    Returns:
        float: Loss over the whole union after the refit, or None for an oracle
        model or empty buffers.
    """
    if isinstance(m, OracleModel):
        return None
    items = [item for buf in buffers for item in buf.items()]
    if not items:
        logger.debug("Skipping world-model refit, buffers are empty")
        return None
    inputs, targets = training_arrays(stack_batch(items))
    set_statistics(m, inputs, targets)
    n = len(items)
    for _ in range(steps):
        idx = rng.choice(n, size=batch_size, replace=n < batch_size)
        _train_step(m, inputs[idx], targets[idx])
    loss = model_loss(m, inputs, targets)
    logger.debug(f"World model refit on {n} transitions, loss {loss:.6g}")
    return loss


def pack_model(m, prefix='model'):
    arrays = pack_network(prefix, m.net)
    arrays.update({f"{prefix}/in_mean": m.in_mean, f"{prefix}/in_scale": m.in_scale,
                   f"{prefix}/out_mean": m.out_mean, f"{prefix}/out_scale": m.out_scale,
                   f"{prefix}/lr": np.asarray(m.lr)})
    arrays.update(pack_adam(f"{prefix}_adam", m.adam))
    return arrays


def unpack_model(arrays, prefix='model'):
    net = unpack_network(prefix, arrays)
    return DynModel(net=net,
                    in_mean=np.array(arrays[f"{prefix}/in_mean"]), in_scale=np.array(arrays[f"{prefix}/in_scale"]),
                    out_mean=np.array(arrays[f"{prefix}/out_mean"]), out_scale=np.array(arrays[f"{prefix}/out_scale"]),
                    adam=unpack_adam(f"{prefix}_adam", arrays, len(net.parameters())),
                    lr=float(arrays[f"{prefix}/lr"]))
