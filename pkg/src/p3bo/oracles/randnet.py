"""Randomly initialised networks used as fixed objectives.

Weights are drawn from a Philox (counter-based) generator seeded with
``weight_seed``. Draw order is fixed: layer by layer from input to output,
each kernel in row-major order of its (fan_in, fan_out) shape, with
variance 1 / fan_in. Biases are constants (zero, plus LSTM forget bias 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seqcore import one_hot_batch

CONV_FILTERS = 128
CONV_WIDTH = 13


@dataclass(frozen=True)
class Architecture:
    kind: str  # "mlp" or "rnn"
    conv: bool = False
    hidden: tuple[int, ...] = (128,)

    def __post_init__(self):
        if self.kind not in ("mlp", "rnn"):
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.kind == "rnn" and self.conv:
            raise ValueError("recurrent architecture has no convolution")
        if not self.hidden:
            raise ValueError("at least one hidden layer required")

    def describe(self) -> str:
        return f"{self.kind} conv={int(self.conv)} hidden={','.join(map(str, self.hidden))}"

    @classmethod
    def parse(cls, text: str) -> "Architecture":
        parts = text.split()
        opts = dict(p.split("=", 1) for p in parts[1:])
        return cls(parts[0], bool(int(opts.get("conv", "0"))),
                   tuple(int(h) for h in opts.get("hidden", "128").split(",")))


def _gaussian(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.standard_normal((fan_in, fan_out)) * np.sqrt(1.0 / fan_in)


@dataclass
class RandomNetOracle:
    architecture: Architecture
    length: int
    vocab_size: int
    weight_seed: int
    weights: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.weights is None:
            self.weights = self._init_weights()

    @property
    def kind(self) -> str:
        return "random_mlp" if self.architecture.kind == "mlp" else "random_rnn"

    def layer_shapes(self) -> list[tuple[int, int]]:
        a, L, V = self.architecture, self.length, self.vocab_size
        shapes = []
        if a.kind == "mlp":
            if a.conv:
                shapes.append((CONV_WIDTH * V, CONV_FILTERS))
                width = L * CONV_FILTERS
            else:
                width = L * V
            for h in a.hidden:
                shapes.append((width, h))
                width = h
        else:
            width = V
            for h in a.hidden:
                shapes.append((width + h, 4 * h))
                width = h
        shapes.append((width, 1))
        return shapes

    def _init_weights(self) -> list[np.ndarray]:
        rng = np.random.Generator(np.random.Philox(self.weight_seed))
        return [_gaussian(rng, fi, fo) for fi, fo in self.layer_shapes()]

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        if self.architecture.kind == "mlp":
            return self._mlp(X)
        return self._rnn(X)

    def _mlp(self, X: np.ndarray) -> np.ndarray:
        n, L = X.shape
        V = self.vocab_size
        ws = list(self.weights)
        h = one_hot_batch(X, V).reshape(n, L, V)
        if self.architecture.conv:
            pad = CONV_WIDTH // 2
            padded = np.zeros((n, L + 2 * pad, V))
            padded[:, pad:pad + L] = h
            windows = np.stack([padded[:, i:i + CONV_WIDTH].reshape(n, -1) for i in range(L)], axis=1)
            h = np.maximum(windows @ ws.pop(0), 0.0)
        h = h.reshape(n, -1)
        for W in ws[:-1]:
            h = np.maximum(h @ W, 0.0)
        return (h @ ws[-1])[:, 0]

    def _rnn(self, X: np.ndarray) -> np.ndarray:
        n, L = X.shape
        V = self.vocab_size
        inputs = one_hot_batch(X, V).reshape(n, L, V)
        for W, hdim in zip(self.weights[:-1], self.architecture.hidden):
            bias = np.zeros(4 * hdim)
            bias[hdim:2 * hdim] = 1.0  # forget gate
            h = np.zeros((n, hdim))
            c = np.zeros((n, hdim))
            outs = []
            for t in range(L):
                z = np.concatenate([inputs[:, t], h], axis=1) @ W + bias
                i = _sigmoid(z[:, :hdim])
                f = _sigmoid(z[:, hdim:2 * hdim])
                g = np.tanh(z[:, 2 * hdim:3 * hdim])
                o = _sigmoid(z[:, 3 * hdim:])
                c = f * c + i * g
                h = o * np.tanh(c)
                outs.append(h)
            inputs = np.stack(outs, axis=1)
        return (inputs[:, -1] @ self.weights[-1])[:, 0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def random_net_forward(o: RandomNetOracle, x) -> float:
    return float(o.score(np.asarray(x, dtype=np.int64)[None, :])[0])
