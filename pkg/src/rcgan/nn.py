"""Minimal dense-network core: forward, reverse-mode gradients, Adam.

Everything is float64 numpy. Models here are thousand-scale, so clarity and
checkable gradients win over speed. The blockwise activation applies a
softmax over each categorical block and a sigmoid to each singleton block,
matching the encoded-row layout of a schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, Schema
from .errors import CheckpointError, TrainingError

IDENTITY = "identity"
RECTIFIER = "rectifier"
SIGMOID = "sigmoid"
BLOCKWISE = "blockwise"

ACTIVATIONS = (IDENTITY, RECTIFIER, SIGMOID, BLOCKWISE)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Two-branch form avoids overflow warnings for large |z|.
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class BlockLayout:
    """(start, stop, kind) blocks over an output vector; kind is "softmax"
    or "sigmoid". Built from a schema so generator heads mirror encoding."""

    blocks: tuple[tuple[int, int, str], ...]

    @classmethod
    def from_schema(cls, schema: Schema) -> "BlockLayout":
        blocks = []
        for start, stop, kind in schema.blocks():
            blocks.append((start, stop, "softmax" if kind == CATEGORICAL else "sigmoid"))
        return cls(tuple(blocks))

    @property
    def width(self) -> int:
        return self.blocks[-1][1] if self.blocks else 0


class DenseLayer:
    """y = act(x @ W.T + b) with W of shape (out, in)."""

    def __init__(self, weights, biases, activation, layout: BlockLayout | None = None):
        self.w = np.asarray(weights, dtype=float)
        self.b = np.asarray(biases, dtype=float)
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise ValueError("weights must be (out, in) and biases (out,)")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if activation == BLOCKWISE:
            if layout is None or layout.width != self.w.shape[0]:
                raise ValueError("blockwise activation needs a layout matching out width")
        self.activation = activation
        self.layout = layout

    @classmethod
    def init(cls, in_dim, out_dim, activation, rng, layout=None) -> "DenseLayer":
        # Glorot-uniform weights, zero biases.
        lim = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform(-lim, lim, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation, layout)

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    def apply_activation(self, z: np.ndarray) -> np.ndarray:
        if self.activation == IDENTITY:
            return z
        if self.activation == RECTIFIER:
            return np.maximum(z, 0.0)
        if self.activation == SIGMOID:
            return sigmoid(z)
        out = np.empty_like(z)
        for start, stop, kind in self.layout.blocks:
            if kind == "softmax":
                out[:, start:stop] = _softmax(z[:, start:stop])
            else:
                out[:, start:stop] = sigmoid(z[:, start:stop])
        return out

    def activation_grad(self, z: np.ndarray, a: np.ndarray, ga: np.ndarray) -> np.ndarray:
        """Gradient through the activation: dL/dz from dL/da."""
        if self.activation == IDENTITY:
            return ga
        if self.activation == RECTIFIER:
            return ga * (z > 0)
        if self.activation == SIGMOID:
            return ga * a * (1.0 - a)
        gz = np.empty_like(ga)
        for start, stop, kind in self.layout.blocks:
            ab = a[:, start:stop]
            gb = ga[:, start:stop]
            if kind == "softmax":
                dot = (gb * ab).sum(axis=1, keepdims=True)
                gz[:, start:stop] = ab * (gb - dot)
            else:
                gz[:, start:stop] = gb * ab * (1.0 - ab)
        return gz


@dataclass
class ForwardCache:
    """Per-layer inputs, pre-activations, and activations from one forward."""

    net: "Network"
    inputs: list[np.ndarray]
    zs: list[np.ndarray]
    outs: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.outs[-1]


@dataclass
class Gradients:
    params: list[np.ndarray]  # alternating dW, db per layer, front to back
    input_grad: np.ndarray


class Network:
    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.w, layer.b]
        return out

    def parameter_names(self) -> list[str]:
        out = []
        for i in range(len(self.layers)):
            out += [f"layer{i}.weights", f"layer{i}.biases"]
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def forward(self, x: np.ndarray) -> ForwardCache:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"batch width {x.shape} does not match input size {self.in_dim}")
        inputs, zs, outs = [], [], []
        cur = x
        for layer in self.layers:
            inputs.append(cur)
            z = cur @ layer.w.T + layer.b
            zs.append(z)
            cur = layer.apply_activation(z)
            outs.append(cur)
        return ForwardCache(self, inputs, zs, outs)

    def backward(self, cache: ForwardCache, grad_output: np.ndarray) -> Gradients:
        """Exact reverse-mode gradients of the forward map.

        grad_output is dL/doutput for the batch the cache came from.
        """
        if cache is None or cache.net is not self or len(cache.zs) != len(self.layers):
            raise ValueError("backward needs the forward cache from this network")
        ga = np.asarray(grad_output, dtype=float)
        if ga.shape != cache.output.shape:
            raise ValueError("grad_output shape does not match the cached output")
        param_grads: list[np.ndarray] = []
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            gz = layer.activation_grad(cache.zs[i], cache.outs[i], ga)
            dw = gz.T @ cache.inputs[i]
            db = gz.sum(axis=0)
            param_grads[:0] = [dw, db]
            ga = gz @ layer.w
        return Gradients(param_grads, ga)


@dataclass
class AdamConfig:
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8


class Adam:
    """Bias-corrected adaptive-moment optimizer updating arrays in place."""

    def __init__(self, params: list[np.ndarray], cfg: AdamConfig, names: list[str] | None = None):
        self.params = params
        self.cfg = cfg
        self.names = names or [f"param{i}" for i in range(len(params))]
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError(f"{len(grads)} gradients for {len(self.params)} parameters")
        for g, name in zip(grads, self.names):
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for {name}")
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= c.lr * (m / bc1) / (np.sqrt(v / bc2) + c.eps)


def grad_check(net: Network, loss_fn, batch: np.ndarray, h: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn maps a network output batch to (scalar loss, dloss/doutput).
    """
    cache = net.forward(batch)
    _, gout = loss_fn(cache.output)
    analytic = net.backward(cache, gout).params

    worst = 0.0
    for p, ga in zip(net.parameters(), analytic):
        flat = p.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up, _ = loss_fn(net.forward(batch).output)
            flat[i] = orig - h
            down, _ = loss_fn(net.forward(batch).output)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


CHECKPOINT_FORMAT = "rcgan-network-v1"


def _fmt(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_network(fh, net: Network) -> None:
    """Text serialization in full decimal precision; round-trips exactly."""
    fh.write(f"{CHECKPOINT_FORMAT}\n")
    fh.write(f"layers {len(net.layers)}\n")
    for layer in net.layers:
        fh.write(f"layer {layer.in_dim} {layer.out_dim} {layer.activation}\n")
        if layer.activation == BLOCKWISE:
            fh.write(f"blocks {len(layer.layout.blocks)}\n")
            for start, stop, kind in layer.layout.blocks:
                fh.write(f"block {start} {stop} {kind}\n")
        for row in layer.w:
            fh.write(_fmt(row) + "\n")
        fh.write(_fmt(layer.b) + "\n")


class _LineReader:
    def __init__(self, fh):
        self.fh = fh

    def next(self, what: str) -> str:
        line = self.fh.readline()
        if line == "":
            raise CheckpointError(f"truncated checkpoint: expected {what}")
        return line.rstrip("\n")


def read_network(fh) -> Network:
    reader = _LineReader(fh)
    tag = reader.next("format tag")
    if tag != CHECKPOINT_FORMAT:
        raise CheckpointError(f"expected {CHECKPOINT_FORMAT!r}, got {tag!r}")
    head = reader.next("layer count").split()
    if len(head) != 2 or head[0] != "layers":
        raise CheckpointError(f"malformed layer count line: {head!r}")
    layers = []
    for _ in range(int(head[1])):
        parts = reader.next("layer header").split()
        if len(parts) != 4 or parts[0] != "layer":
            raise CheckpointError(f"malformed layer header: {parts!r}")
        in_dim, out_dim, activation = int(parts[1]), int(parts[2]), parts[3]
        layout = None
        if activation == BLOCKWISE:
            bparts = reader.next("block count").split()
            if len(bparts) != 2 or bparts[0] != "blocks":
                raise CheckpointError(f"malformed block count: {bparts!r}")
            blocks = []
            for _ in range(int(bparts[1])):
                bp = reader.next("block").split()
                if len(bp) != 4 or bp[0] != "block":
                    raise CheckpointError(f"malformed block line: {bp!r}")
                blocks.append((int(bp[1]), int(bp[2]), bp[3]))
            layout = BlockLayout(tuple(blocks))
        try:
            w = np.array(
                [[float(v) for v in reader.next("weight row").split()] for _ in range(out_dim)]
            )
            b = np.array([float(v) for v in reader.next("bias row").split()])
        except ValueError as exc:
            raise CheckpointError(f"corrupt parameter data: {exc}") from exc
        if w.shape != (out_dim, in_dim) or b.shape != (out_dim,):
            raise CheckpointError("parameter shapes do not match the layer header")
        layers.append(DenseLayer(w, b, activation, layout))
    return Network(layers)
