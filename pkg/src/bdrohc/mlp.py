"""Plain numpy multilayer perceptron for the action-value head.

ReLU hidden layers, identity output, double precision throughout.  Gradients
are hand-rolled reverse mode; the only loss ever differentiated is the
squared error of the selected output unit against a scalar target, averaged
over a batch.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import ACTION_COUNT


@dataclass(frozen=True)
class MlpConfig:
    """Layer widths, input first; the final width is the action count."""

    widths: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError("widths must be positive")
        if self.widths[-1] != ACTION_COUNT:
            raise ValueError(f"output width must be {ACTION_COUNT}")


class MlpParams:
    """Weight matrices (out x in) and bias vectors, one pair per layer."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = weights
        self.biases = biases

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_params(cfg: MlpConfig, rng) -> MlpParams:
    """Uniform init scaled by fan-in plus fan-out; zero biases."""
    weights = []
    biases = []
    for fan_in, fan_out in zip(cfg.widths[:-1], cfg.widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def copy_params(params: MlpParams) -> MlpParams:
    return params.copy()


def forward(params: MlpParams, x) -> np.ndarray:
    """Action values for a single input vector."""
    h = np.asarray(x, dtype=float)
    if h.shape != (params.weights[0].shape[1],):
        raise ValueError(
            f"input shape {h.shape} does not match width {params.weights[0].shape[1]}"
        )
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = w @ h + b
        np.maximum(h, 0.0, out=h)
    return params.weights[-1] @ h + params.biases[-1]


def forward_batch(params: MlpParams, x) -> np.ndarray:
    """Action values for a (batch, input) matrix."""
    h = np.asarray(x, dtype=float)
    if h.ndim != 2 or h.shape[1] != params.weights[0].shape[1]:
        raise ValueError(
            f"batch shape {h.shape} does not match width {params.weights[0].shape[1]}"
        )
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = h @ w.T + b
        np.maximum(h, 0.0, out=h)
    return h @ params.weights[-1].T + params.biases[-1]


def batch_td_loss_grad(params: MlpParams, x, actions, targets):
    """Mean over the batch of (Q[action] - target)**2 and its gradient.

    Returns (loss, (weight grads, bias grads)) with grads shaped like the
    parameters.  Only the selected output unit of each sample feeds back.
    """
    x = np.asarray(x, dtype=float)
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    n_layers = len(params.weights)
    batch = x.shape[0]
    if batch == 0:
        raise ValueError("batch must be nonempty")

    inputs = [x]          # input to each layer
    pre = []              # pre-activation of each hidden layer
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        inputs.append(h)
    out = h @ params.weights[-1].T + params.biases[-1]

    rows = np.arange(batch)
    err = out[rows, actions] - targets
    loss = float(np.mean(err ** 2))

    delta = np.zeros_like(out)
    delta[rows, actions] = 2.0 * err / batch
    d_weights: list[np.ndarray] = [np.empty(0)] * n_layers
    d_biases: list[np.ndarray] = [np.empty(0)] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        d_weights[layer] = delta.T @ inputs[layer]
        d_biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (pre[layer - 1] > 0.0)
    return loss, (d_weights, d_biases)


def td_loss_grad(params: MlpParams, x, action: int, target: float):
    """Single-sample squared error of the selected unit and its gradient."""
    x = np.asarray(x, dtype=float)
    return batch_td_loss_grad(params, x[None, :], [action], [target])


def sgd_step(params: MlpParams, grads, eta: float) -> MlpParams:
    """One plain gradient step; returns fresh parameters."""
    d_weights, d_biases = grads
    return MlpParams(
        [w - eta * g for w, g in zip(params.weights, d_weights)],
        [b - eta * g for b, g in zip(params.biases, d_biases)],
    )


def params_lerp(a: MlpParams, b: MlpParams, tau: float) -> MlpParams:
    """(1 - tau) * a + tau * b, elementwise; returns fresh parameters."""
    return MlpParams(
        [(1.0 - tau) * x + tau * y for x, y in zip(a.weights, b.weights)],
        [(1.0 - tau) * x + tau * y for x, y in zip(a.biases, b.biases)],
    )


def params_equal(a: MlpParams, b: MlpParams) -> bool:
    return (
        len(a.weights) == len(b.weights)
        and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        and all(np.array_equal(x, y) for x, y in zip(a.biases, b.biases))
    )


_MAGIC = b"QNET"


def save_params(params: MlpParams, path) -> None:
    """Flat binary dump: width list, then per layer the row-major weight
    matrix followed by the bias vector, all little-endian float64."""
    widths = params.widths
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", len(widths)))
        fh.write(struct.pack(f"<{len(widths)}q", *widths))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path) -> MlpParams:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a parameter file")
        (n,) = struct.unpack("<q", fh.read(8))
        widths = struct.unpack(f"<{n}q", fh.read(8 * n))
        weights = []
        biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8")
            weights.append(w.reshape(fan_out, fan_in).copy())
            biases.append(np.frombuffer(fh.read(8 * fan_out), dtype="<f8").copy())
        tail = fh.read()
        if tail:
            raise ValueError("trailing bytes in parameter file")
    return MlpParams(weights, biases)
