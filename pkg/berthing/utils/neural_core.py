"""
Small feedforward networks with hand-written reverse-mode gradients.

Networks are plain dataclasses of float64 weight matrices (``(out, in)``
layout) and bias vectors. Hidden layers use ReLU; the output layer is either
linear or tanh. Inputs may be a single vector or a batch of row vectors.

Also provides the Adam optimizer, Polyak target updates and an ``.npz``
checkpoint container that round-trips parameters bit-exactly.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import ArchitectureMismatchError, DimensionError, NonFiniteError

logger = logging.getLogger(__name__)


class Activation(str, enum.Enum):
    LINEAR = 'linear'
    TANH = 'tanh'


@dataclass
class Mlp:
    """
    Feedforward network.

    Attributes:
        layer_dims (tuple): Widths from input to output, e.g. (6, 30, 2).
        weights (list): One ``(out, in)`` matrix per layer.
        biases (list): One ``(out,)`` vector per layer.
        output_activation (Activation): Applied after the last affine map.
    """
    layer_dims: tuple
    weights: list
    biases: list
    output_activation: Activation = Activation.LINEAR

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        self.output_activation = Activation(self.output_activation)
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionError(f"Expected {len(self.layer_dims) - 1} layers for dims {self.layer_dims}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != expected or b.shape != (expected[0],):
                raise DimensionError(f"Layer {i} has shapes {w.shape}/{b.shape}, expected {expected}")

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def copy(self):
        return Mlp(self.layer_dims, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.output_activation)

    def parameters(self):
        """All parameter arrays, weights first then biases."""
        return [*self.weights, *self.biases]


@dataclass
class GradientBundle:
    """Parameter gradients shape-matched to an ``Mlp`` plus the input gradient."""
    weights: list
    biases: list
    inputs: np.ndarray

    def parameters(self):
        return [*self.weights, *self.biases]


@dataclass
class AdamState:
    """Adam moment accumulators shape-matched to one network."""
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_num: float = 1e-8


def init_mlp(layer_dims, rng, output_activation=Activation.LINEAR, final_scale=None):
    """
    Build a network with uniform fan-in initialisation.

    Every layer draws from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); ``final_scale``
    overrides the bound of the last layer (actors use 3e-3).
    """
    weights, biases = [], []
    n_layers = len(layer_dims) - 1
    for i in range(n_layers):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        if final_scale is not None and i == n_layers - 1:
            bound = final_scale
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(tuple(layer_dims), weights, biases, output_activation)


def zeros_like_mlp(net):
    return Mlp(net.layer_dims, [np.zeros_like(w) for w in net.weights],
               [np.zeros_like(b) for b in net.biases], net.output_activation)


def _check_input(net, x):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != net.input_dim:
        raise DimensionError(f"Input of shape {x.shape} does not fit a network with input dim {net.input_dim}")
    return x


def _forward_trace(net, x):
    """Forward pass keeping every layer input and pre-activation."""
    layer_inputs, pre_activations = [], []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        layer_inputs.append(h)
        z = h @ w.T + b
        pre_activations.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
        elif net.output_activation is Activation.TANH:
            h = np.tanh(z)
        else:
            h = z
    return h, layer_inputs, pre_activations


def forward(net, x):
    """Evaluate the network on a vector or a batch of row vectors."""
    x = _check_input(net, x)
    out, _, _ = _forward_trace(net, x)
    return out


def backward(net, x, upstream):
    """
    Gradients of ``<upstream, forward(net, x)>``.

    For a batch the parameter gradients are summed over rows and the input
    gradient keeps one row per sample.
    """
    x = _check_input(net, x)
    upstream = np.asarray(upstream, dtype=float)
    out, layer_inputs, pre_activations = _forward_trace(net, x)
    if upstream.shape != out.shape:
        raise DimensionError(f"Upstream of shape {upstream.shape} does not match output shape {out.shape}")

    batched = x.ndim == 2
    delta = upstream
    if net.output_activation is Activation.TANH:
        delta = delta * (1.0 - out ** 2)

    n_layers = len(net.weights)
    grad_w, grad_b = [None] * n_layers, [None] * n_layers
    for i in reversed(range(n_layers)):
        h = layer_inputs[i]
        if batched:
            grad_w[i] = delta.T @ h
            grad_b[i] = delta.sum(axis=0)
        else:
            grad_w[i] = np.outer(delta, h)
            grad_b[i] = delta.copy()
        delta = delta @ net.weights[i]
        if i > 0:
            delta = delta * (pre_activations[i - 1] > 0.0)
    return GradientBundle(grad_w, grad_b, delta)


def init_adam(net, beta1=0.9, beta2=0.999, eps_num=1e-8):
    zeros = [np.zeros_like(p) for p in net.parameters()]
    return AdamState(m=zeros, v=[z.copy() for z in zeros], t=0, beta1=beta1, beta2=beta2, eps_num=eps_num)


def adam_step(net, grads, state, lr, maximize=False):
    """
    One bias-corrected Adam update, in place.

    ``maximize`` ascends the gradient instead of descending it.

    Returns:
        tuple: (net, state), the same objects that were passed in.

    Raises:
        NonFiniteError: if any gradient entry is NaN or infinite.
    """
    params = net.parameters()
    grad_list = grads.parameters()
    if len(grad_list) != len(params) or len(state.m) != len(params):
        raise DimensionError("Gradient bundle or Adam state does not match the network")
    for g in grad_list:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("Non-finite gradient reached the optimizer")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    sign = 1.0 if maximize else -1.0
    for p, g, m, v in zip(params, grad_list, state.m, state.v):
        if g.shape != p.shape:
            raise DimensionError(f"Gradient shape {g.shape} does not match parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p += sign * lr * m_hat / (np.sqrt(v_hat) + state.eps_num)
    return net, state


def check_same_architecture(a, b):
    if a.layer_dims != b.layer_dims or a.output_activation is not b.output_activation:
        raise ArchitectureMismatchError(
            f"Architectures differ: {a.layer_dims}/{a.output_activation.value} "
            f"vs {b.layer_dims}/{b.output_activation.value}")


def soft_update(target, online, eps):
    """Polyak update ``target <- eps * online + (1 - eps) * target``, in place."""
    check_same_architecture(target, online)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"Soft-update rate must lie in [0, 1], got {eps}")
    for t, o in zip(target.parameters(), online.parameters()):
        if eps == 1.0:
            t[...] = o
        else:
            t += eps * (o - t)
    return target


# --- Checkpoint container ---

def pack_network(prefix, net):
    """Flatten a network into ``{prefix/key: array}`` entries."""
    arrays = {
        f"{prefix}/layer_dims": np.asarray(net.layer_dims, dtype=np.int64),
        f"{prefix}/output_activation": np.asarray(net.output_activation.value),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"{prefix}/W{i}"] = w
        arrays[f"{prefix}/b{i}"] = b
    return arrays


def unpack_network(prefix, arrays):
    dims = tuple(int(d) for d in arrays[f"{prefix}/layer_dims"])
    activation = Activation(str(arrays[f"{prefix}/output_activation"]))
    n_layers = len(dims) - 1
    weights = [np.array(arrays[f"{prefix}/W{i}"], dtype=float) for i in range(n_layers)]
    biases = [np.array(arrays[f"{prefix}/b{i}"], dtype=float) for i in range(n_layers)]
    return Mlp(dims, weights, biases, activation)


def pack_adam(prefix, state):
    arrays = {f"{prefix}/t": np.asarray(state.t, dtype=np.int64),
              f"{prefix}/betas": np.asarray([state.beta1, state.beta2, state.eps_num])}
    for i, (m, v) in enumerate(zip(state.m, state.v)):
        arrays[f"{prefix}/m{i}"] = m
        arrays[f"{prefix}/v{i}"] = v
    return arrays


def unpack_adam(prefix, arrays, n_params):
    beta1, beta2, eps_num = (float(x) for x in arrays[f"{prefix}/betas"])
    return AdamState(m=[np.array(arrays[f"{prefix}/m{i}"]) for i in range(n_params)],
                     v=[np.array(arrays[f"{prefix}/v{i}"]) for i in range(n_params)],
                     t=int(arrays[f"{prefix}/t"]), beta1=beta1, beta2=beta2, eps_num=eps_num)


def save_checkpoint(path, arrays):
    """Write a flat ``{name: array}`` mapping as an uncompressed ``.npz``."""
    with open(path, 'wb') as fh:
        np.savez(fh, **arrays)
    logger.info(f"Checkpoint written to {path} ({len(arrays)} arrays)")


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        return {key: data[key] for key in data.files}
