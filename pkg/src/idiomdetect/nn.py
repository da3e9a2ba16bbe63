"""Minimal deterministic neural core: dense layers, dropout, losses, AdamW.

Everything runs in float64 numpy on a seeded ``np.random.Generator``; given
(seed, data, hyperparameters) a training run is reproducible bit for bit on
one platform. No autodiff graph: the backward pass is hand-written for the
one architecture this toolkit needs (a stack of dense layers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .embedding import format_value
from .errors import FormatError, NumericError

ACTIVATIONS = ("sigmoid", "relu", "identity")
PROB_EPS = 1e-7

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    return np.random.default_rng(seed)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Sign-symmetric form: computes 1/(1+exp(-|z|)) once and reflects, so
    # sigmoid(-z) == 1 - sigmoid(z) holds exactly in floating point and no
    # exp() overflows.
    z = np.asarray(z, dtype=np.float64)
    p = 1.0 / (1.0 + np.exp(-np.abs(z)))
    return np.where(z >= 0.0, p, 1.0 - p)


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return sigmoid(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


def _activation_grad(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    # h is the activation output for pre-activation z.
    if name == "sigmoid":
        return h * (1.0 - h)
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)

    def __post_init__(self) -> None:
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(
                f"inconsistent layer shapes: weight {self.weight.shape}, bias {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise NumericError("layer parameters contain non-finite values")


@dataclass
class Mlp:
    """Dense layers with per-layer activation and dropout rate.

    Dropout applies to hidden activations only; the rate on the final layer
    is ignored. Adjacent layer dimensions must chain.
    """

    layers: list[DenseLayer]
    activations: list[str]
    dropout: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.dropout:
            self.dropout = [0.0] * len(self.layers)
        if not (len(self.layers) == len(self.activations) == len(self.dropout)):
            raise ValueError("layers, activations, and dropout lengths must match")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for rate in self.dropout:
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def dims(self) -> list[int]:
        return [self.in_dim] + [layer.weight.shape[0] for layer in self.layers]

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def param_names(self) -> list[str]:
        names: list[str] = []
        for i in range(len(self.layers)):
            names.append(f"layer{i}.weight")
            names.append(f"layer{i}.bias")
        return names


def init_mlp(
    dims: Sequence[int],
    activations: Sequence[str],
    dropout: Sequence[float],
    rng: Rng,
) -> Mlp:
    """Build an Mlp with Glorot-uniform weights and zero biases."""
    layers = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(weight=weight, bias=np.zeros(fan_out)))
    return Mlp(layers=layers, activations=list(activations), dropout=list(dropout))


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer, post-dropout of previous
    zs: list[np.ndarray]
    hs: list[np.ndarray]  # activations before dropout
    masks: list[np.ndarray | None]
    squeezed: bool


def forward(
    mlp: Mlp, x: np.ndarray, train: bool = False, rng: Rng | None = None
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a vector or a batch of row vectors.

    In train mode each hidden unit is zeroed with its layer's dropout rate
    and survivors are scaled by 1/(1-rate) (inverted dropout); eval mode is a
    pure function of (params, x).
    """
    x = np.asarray(x, dtype=np.float64)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != mlp.in_dim:
        raise ValueError(f"input shape {x.shape} does not match in_dim {mlp.in_dim}")
    if train and rng is None and any(r > 0.0 for r in mlp.dropout[:-1]):
        raise ValueError("train-mode forward with dropout requires an rng")

    inputs, zs, hs, masks = [], [], [], []
    a = x
    last = len(mlp.layers) - 1
    for i, layer in enumerate(mlp.layers):
        inputs.append(a)
        z = a @ layer.weight.T + layer.bias
        h = _apply_activation(mlp.activations[i], z)
        zs.append(z)
        hs.append(h)
        rate = mlp.dropout[i]
        if train and i < last and rate > 0.0:
            mask = (rng.random(h.shape) >= rate).astype(np.float64)
            a = h * mask / (1.0 - rate)
            masks.append(mask)
        else:
            a = h
            masks.append(None)
    out = a[0] if squeezed else a
    return out, ForwardCache(inputs=inputs, zs=zs, hs=hs, masks=masks, squeezed=squeezed)


def backward(mlp: Mlp, cache: ForwardCache, upstream: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss for every weight and bias.

    ``upstream`` is dLoss/dOutput with the same shape forward returned.
    Returns arrays in ``mlp.params()`` order.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if cache.squeezed:
        upstream = upstream[np.newaxis, :]
    if upstream.shape != (cache.inputs[0].shape[0], mlp.out_dim):
        raise ValueError(
            f"upstream shape {upstream.shape} does not match cached batch "
            f"({cache.inputs[0].shape[0]}, {mlp.out_dim})"
        )

    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(mlp.layers))
    da = upstream
    last = len(mlp.layers) - 1
    for i in range(last, -1, -1):
        rate = mlp.dropout[i]
        mask = cache.masks[i]
        dh = da * mask / (1.0 - rate) if mask is not None else da
        dz = dh * _activation_grad(mlp.activations[i], cache.zs[i], cache.hs[i])
        grads[2 * i] = dz.T @ cache.inputs[i]
        grads[2 * i + 1] = dz.sum(axis=0)
        da = dz @ mlp.layers[i].weight
    return grads


def clamp_prob(s: np.ndarray) -> np.ndarray:
    return np.clip(s, PROB_EPS, 1.0 - PROB_EPS)


def bce_loss(s, same_class) -> float | np.ndarray:
    """-log(s) for same-class pairs, -log(1-s) otherwise, with s clamped
    away from {0, 1} by 1e-7. Scalars in, scalar out; arrays elementwise."""
    s_arr = clamp_prob(np.asarray(s, dtype=np.float64))
    same = np.asarray(same_class, dtype=bool)
    loss = np.where(same, -np.log(s_arr), -np.log(1.0 - s_arr))
    return float(loss) if loss.ndim == 0 else loss


def mse_loss(s, same_class) -> float | np.ndarray:
    """(s - 1)^2 for same-class pairs, s^2 otherwise."""
    s_arr = np.asarray(s, dtype=np.float64)
    target = np.asarray(same_class, dtype=np.float64)
    loss = (s_arr - target) ** 2
    return float(loss) if loss.ndim == 0 else loss


def batch_loss_and_grad(
    kind: str, s: np.ndarray, same_class: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean loss over a batch of pair scores plus dLoss/ds per score."""
    s = np.asarray(s, dtype=np.float64)
    same = np.asarray(same_class, dtype=bool)
    n = s.shape[0]
    if kind == "bce":
        losses = bce_loss(s, same)
        s_c = clamp_prob(s)
        inside = (s > PROB_EPS) & (s < 1.0 - PROB_EPS)
        grad = np.where(same, -1.0 / s_c, 1.0 / (1.0 - s_c))
        grad = np.where(inside, grad, 0.0) / n
    elif kind == "mse":
        losses = mse_loss(s, same)
        grad = 2.0 * (s - same.astype(np.float64)) / n
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    return float(np.mean(losses)), grad


@dataclass
class AdamWConfig:
    learning_rate: float = 2e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class AdamWState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray]) -> "AdamWState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            t=0,
        )


def adamw_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamWState,
    config: AdamWConfig,
    names: Sequence[str] | None = None,
) -> None:
    """One decoupled-weight-decay Adam update, in place.

    param <- param - lr * (mhat / (sqrt(vhat) + eps) + weight_decay * param)

    Raises:
        NumericError: a gradient contains non-finite values (names the
            offending parameter).
    """
    state.t += 1
    bc1 = 1.0 - config.beta1**state.t
    bc2 = 1.0 - config.beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.all(np.isfinite(g)):
            name = names[i] if names else f"param{i}"
            raise NumericError(f"non-finite gradient for {name}")
        m, v = state.m[i], state.v[i]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p -= config.learning_rate * (
            m_hat / (np.sqrt(v_hat) + config.eps) + config.weight_decay * p
        )


def finite_diff_grad(
    f: Callable[[Sequence[np.ndarray]], float],
    params: Sequence[np.ndarray],
    h: float = 1e-5,
) -> list[np.ndarray]:
    """Central-difference gradient of a pure scalar function of the params."""
    work = [p.copy() for p in params]
    grads = [np.zeros_like(p) for p in params]
    for k, p in enumerate(work):
        flat = p.reshape(-1)
        grad_flat = grads[k].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = f(work)
            flat[j] = orig - h
            down = f(work)
            flat[j] = orig
            grad_flat[j] = (up - down) / (2.0 * h)
    return grads


def save_model(mlp: Mlp, header: dict, path: str | Path) -> None:
    """Write a model file: one canonical-json header line with the
    architecture merged in, then W/b lines per layer in the table's decimal
    convention (shortest round-trip 32-bit floats)."""
    full_header = dict(header)
    full_header["architecture"] = {
        "dims": mlp.dims,
        "activations": list(mlp.activations),
        "dropout": list(mlp.dropout),
    }
    lines = [json.dumps(full_header, sort_keys=True, separators=(",", ":"))]
    for layer in mlp.layers:
        lines.append("W\t" + "\t".join(format_value(v) for v in layer.weight.reshape(-1)))
        lines.append("b\t" + "\t".join(format_value(v) for v in layer.bias))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[Mlp, dict]:
    """Inverse of :func:`save_model`; values come back as float32-exact."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"model file not found: {path}")
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty model file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: header is not valid json: {exc}") from None
    arch = header.get("architecture")
    if not arch or "dims" not in arch:
        raise FormatError(f"{path}: header lacks an architecture block")
    dims = arch["dims"]
    expected_lines = 2 * (len(dims) - 1)
    if len(lines) - 1 != expected_lines:
        raise FormatError(
            f"{path}: expected {expected_lines} parameter lines, found {len(lines) - 1}"
        )

    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        w_fields = lines[1 + 2 * i].split("\t")
        b_fields = lines[2 + 2 * i].split("\t")
        if w_fields[0] != "W" or b_fields[0] != "b":
            raise FormatError(f"{path}: layer {i} lines must start with 'W' and 'b'")
        if len(w_fields) - 1 != fan_in * fan_out or len(b_fields) - 1 != fan_out:
            raise FormatError(f"{path}: layer {i} has the wrong number of values")
        weight = np.array([np.float32(v) for v in w_fields[1:]], dtype=np.float64)
        bias = np.array([np.float32(v) for v in b_fields[1:]], dtype=np.float64)
        layers.append(DenseLayer(weight=weight.reshape(fan_out, fan_in), bias=bias))
    mlp = Mlp(
        layers=layers,
        activations=list(arch["activations"]),
        dropout=[float(r) for r in arch["dropout"]],
    )
    return mlp, header
