"""Layers, loss and the layer-spec vocabulary for the neural models.

Each layer implements a fused forward pass in NumPy and registers one
backward closure on the output node; the recurrent layers backpropagate
through time inside that single closure.  Parameters are ``Tensor`` objects
with ``requires_grad=True`` and stable names, initialised with uniform
fan-in scaling from a seeded per-layer stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .tensor import EngineError, Tensor, accumulate, node

LAYER_KINDS = ("dense", "dropout", "embedding", "conv1d", "avgpool1d",
               "gru", "lstm", "flatten", "concat", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer; sizes are kind-specific."""

    kind: str
    units: int = 0
    activation: str = "none"
    rate: float = 0.0
    vocab_size: int = 0
    embed_dim: int = 0
    width: int = 0
    filters: int = 0
    window: int = 0          # avgpool1d; 0 means global pooling
    hidden: int = 0
    return_sequence: bool = False
    branches: tuple = ()     # concat only: tuple of tuples of LayerSpec

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise EngineError(f"unknown layer kind: {self.kind!r}")
        positive = {"dense": self.units, "embedding": self.vocab_size,
                    "conv1d": self.filters, "gru": self.hidden, "lstm": self.hidden}
        if self.kind in positive and positive[self.kind] < 1:
            raise EngineError(f"{self.kind} layer needs a positive size")
        if self.kind == "conv1d" and self.width < 1:
            raise EngineError("conv1d needs a positive kernel width")
        if self.kind == "dropout" and not (0.0 <= self.rate < 1.0):
            raise EngineError("dropout rate must lie in [0, 1)")
        if self.kind == "concat" and not self.branches:
            raise EngineError("concat layer needs at least one branch")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v not in (0, 0.0, False, (), "none")}
        d["kind"] = self.kind
        if self.kind == "concat":
            d["branches"] = [[s.to_dict() for s in br] for br in self.branches]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        d = dict(d)
        if "branches" in d:
            d["branches"] = tuple(
                tuple(cls.from_dict(s) for s in br) for br in d["branches"])
        return cls(**d)


def _uniform_fan_in(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base: stateless apart from parameter tensors."""

    def params(self) -> list[Tensor]:
        return []

    def __call__(self, x: Tensor, train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, in_dim: int, units: int, activation: str = "none",
                 rng: np.random.Generator | None = None, dtype=np.float64,
                 name: str = "dense"):
        if activation not in ("relu", "none"):
            raise EngineError(f"unsupported activation: {activation!r}")
        rng = rng or np.random.default_rng()
        self.activation = activation
        self.W = Tensor(_uniform_fan_in(rng, (in_dim, units), in_dim, dtype),
                        requires_grad=True, name=f"{name}.W")
        self.b = Tensor(np.zeros(units, dtype=dtype), requires_grad=True,
                        name=f"{name}.b")

    def params(self):
        return [self.W, self.b]

    def __call__(self, x, train=False, rng=None):
        W, b = self.W, self.b
        y = x.data @ W.data + b.data
        if self.activation == "relu":
            y = np.maximum(y, 0.0)
        mask = (y > 0.0) if self.activation == "relu" else None

        def backward_fn(dy):
            if mask is not None:
                dy = dy * mask
            accumulate(W, x.data.T @ dy)
            accumulate(b, dy.sum(axis=0))
            if x.requires_grad:
                accumulate(x, dy @ W.data.T)

        return node(y, (x, W, b), backward_fn, "dense")


class Dropout(Layer):
    """Inverted dropout: train-time scaling so that eval is the identity."""

    def __init__(self, rate: float):
        if not (0.0 <= rate < 1.0):
            raise EngineError("dropout rate must lie in [0, 1)")
        self.rate = rate

    def __call__(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            return x
        if rng is None:
            raise EngineError("train-mode dropout needs a seeded rng stream")
        keep = 1.0 - self.rate
        mask = (rng.random(x.data.shape) >= self.rate) / keep

        def backward_fn(dy):
            accumulate(x, dy * mask)

        return node(x.data * mask, (x,), backward_fn, "dropout")


class Embedding(Layer):
    """Index lookup [batch, time] -> [batch, time, dim]; index 0 is padding."""

    def __init__(self, vocab_size: int, dim: int, init_matrix=None,
                 rng: np.random.Generator | None = None, dtype=np.float64,
                 name: str = "embedding"):
        if init_matrix is not None:
            weights = np.array(init_matrix, dtype=dtype)
            if weights.shape != (vocab_size, dim):
                raise EngineError("embedding init matrix shape mismatch")
        else:
            rng = rng or np.random.default_rng()
            weights = rng.uniform(-0.05, 0.05, size=(vocab_size, dim)).astype(dtype)
        self.W = Tensor(weights, requires_grad=True, name=f"{name}.W")

    def params(self):
        return [self.W]

    def __call__(self, x, train=False, rng=None):
        idx = x.data
        W = self.W
        y = W.data[idx]

        def backward_fn(dy):
            dW = np.zeros_like(W.data)
            np.add.at(dW, idx, dy)
            accumulate(W, dW)

        return node(y, (x, W), backward_fn, "embedding")


class Flatten(Layer):
    def __call__(self, x, train=False, rng=None):
        shape = x.data.shape
        if len(shape) == 2:
            return x
        y = x.data.reshape(shape[0], -1)

        def backward_fn(dy):
            accumulate(x, dy.reshape(shape))

        return node(y, (x,), backward_fn, "flatten")


class Conv1D(Layer):
    """Valid (no padding) cross-correlation over time, plus bias and ReLU."""

    def __init__(self, width: int, in_ch: int, filters: int,
                 rng: np.random.Generator | None = None, dtype=np.float64,
                 name: str = "conv1d"):
        rng = rng or np.random.default_rng()
        fan_in = width * in_ch
        self.width = width
        self.in_ch = in_ch
        self.K = Tensor(_uniform_fan_in(rng, (width, in_ch, filters), fan_in, dtype),
                        requires_grad=True, name=f"{name}.K")
        self.b = Tensor(np.zeros(filters, dtype=dtype), requires_grad=True,
                        name=f"{name}.b")

    def params(self):
        return [self.K, self.b]

    def __call__(self, x, train=False, rng=None):
        B, T, C = x.data.shape
        w = self.width
        if T < w:
            raise EngineError(f"conv1d kernel width {w} exceeds sequence length {T}")
        K, b = self.K, self.b
        T_out = T - w + 1
        # cols[b, t] = x[b, t:t+w, :] flattened time-major
        windows = np.lib.stride_tricks.sliding_window_view(x.data, w, axis=1)
        cols = windows.transpose(0, 1, 3, 2).reshape(B, T_out, w * C)
        y = cols @ K.data.reshape(w * C, -1) + b.data
        y = np.maximum(y, 0.0)
        mask = y > 0.0

        def backward_fn(dy):
            dy = dy * mask
            flat_cols = cols.reshape(B * T_out, w * C)
            flat_dy = dy.reshape(B * T_out, -1)
            accumulate(K, (flat_cols.T @ flat_dy).reshape(K.data.shape))
            accumulate(b, flat_dy.sum(axis=0))
            if x.requires_grad:
                dcols = dy @ K.data.reshape(w * C, -1).T
                dx = np.zeros_like(x.data)
                for i in range(w):
                    dx[:, i:i + T_out, :] += dcols[:, :, i * C:(i + 1) * C]
                accumulate(x, dx)

        return node(y, (x, K, b), backward_fn, "conv1d")


class AvgPool1D(Layer):
    """Non-overlapping mean pooling with stride = window, or a global mean."""

    def __init__(self, window: int = 0):
        self.window = window  # 0 = global

    def __call__(self, x, train=False, rng=None):
        B, T, C = x.data.shape
        if self.window == 0:
            y = x.data.mean(axis=1)

            def backward_fn(dy):
                accumulate(x, np.repeat(dy[:, None, :] / T, T, axis=1))

            return node(y, (x,), backward_fn, "avgpool1d(global)")

        k = self.window
        if T < k:
            raise EngineError(f"avgpool window {k} exceeds sequence length {T}")
        T_out = T // k
        trimmed = x.data[:, :T_out * k, :].reshape(B, T_out, k, C)
        y = trimmed.mean(axis=2)

        def backward_fn(dy):
            dx = np.zeros_like(x.data)
            dx[:, :T_out * k, :] = np.repeat(dy / k, k, axis=1)
            accumulate(x, dx)

        return node(y, (x,), backward_fn, "avgpool1d")


def _sigmoid(a):
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


class GRU(Layer):
    """Gated recurrent layer.

    Per step: update gate z, reset gate r, candidate c, and

        h_t = (1 - z) * h_{t-1} + z * c

    Gate weights are stacked in one input kernel [in, 3H] and one recurrent
    kernel [H, 3H] in (z, r, c) column order; the candidate's recurrent
    term uses the reset-scaled state (r * h_{t-1}).
    """

    def __init__(self, in_dim: int, hidden: int, return_sequence: bool = False,
                 rng: np.random.Generator | None = None, dtype=np.float64,
                 name: str = "gru"):
        rng = rng or np.random.default_rng()
        self.hidden = hidden
        self.return_sequence = return_sequence
        self.Wx = Tensor(_uniform_fan_in(rng, (in_dim, 3 * hidden), in_dim, dtype),
                         requires_grad=True, name=f"{name}.Wx")
        self.Wh = Tensor(_uniform_fan_in(rng, (hidden, 3 * hidden), hidden, dtype),
                         requires_grad=True, name=f"{name}.Wh")
        self.b = Tensor(np.zeros(3 * hidden, dtype=dtype), requires_grad=True,
                        name=f"{name}.b")

    def params(self):
        return [self.Wx, self.Wh, self.b]

    def __call__(self, x, train=False, rng=None):
        B, T, _ = x.data.shape
        H = self.hidden
        Wx, Wh, b = self.Wx, self.Wh, self.b
        xp = x.data @ Wx.data + b.data  # [B, T, 3H], all input projections at once

        h = np.zeros((B, H), dtype=x.data.dtype)
        hs = np.empty((B, T, H), dtype=x.data.dtype)
        cache = []
        for t in range(T):
            h_prev = h
            rec_zr = h_prev @ Wh.data[:, :2 * H]
            z = _sigmoid(xp[:, t, :H] + rec_zr[:, :H])
            r = _sigmoid(xp[:, t, H:2 * H] + rec_zr[:, H:])
            rh = r * h_prev
            c = np.tanh(xp[:, t, 2 * H:] + rh @ Wh.data[:, 2 * H:])
            h = (1.0 - z) * h_prev + z * c
            hs[:, t, :] = h
            cache.append((h_prev, z, r, rh, c))

        y = hs if self.return_sequence else h

        def backward_fn(dy):
            dWx = np.zeros_like(Wx.data)
            dWh = np.zeros_like(Wh.data)
            db = np.zeros_like(b.data)
            dxp = np.zeros_like(xp)
            dh = np.zeros((B, H), dtype=x.data.dtype)
            for t in range(T - 1, -1, -1):
                h_prev, z, r, rh, c = cache[t]
                if self.return_sequence:
                    dh = dh + dy[:, t, :]
                elif t == T - 1:
                    dh = dh + dy
                dz = dh * (c - h_prev)
                dc = dh * z
                dh_prev = dh * (1.0 - z)

                dc_raw = dc * (1.0 - c * c)
                dxp[:, t, 2 * H:] = dc_raw
                dWh[:, 2 * H:] += rh.T @ dc_raw
                drh = dc_raw @ Wh.data[:, 2 * H:].T
                dr = drh * h_prev
                dh_prev += drh * r

                dz_raw = dz * z * (1.0 - z)
                dr_raw = dr * r * (1.0 - r)
                dzr = np.concatenate([dz_raw, dr_raw], axis=1)
                dxp[:, t, :2 * H] = dzr
                dWh[:, :2 * H] += h_prev.T @ dzr
                dh_prev += dzr @ Wh.data[:, :2 * H].T
                dh = dh_prev

            flat_dxp = dxp.reshape(B * T, 3 * H)
            accumulate(Wx, x.data.reshape(B * T, -1).T @ flat_dxp)
            accumulate(Wh, dWh)
            accumulate(b, flat_dxp.sum(axis=0))
            if x.requires_grad:
                accumulate(x, (flat_dxp @ Wx.data.T).reshape(x.data.shape))

        return node(y, (x, Wx, Wh, b), backward_fn, "gru")


class LSTM(Layer):
    """Long short-term memory layer with input/forget/output gates.

    Per step: c_t = f * c_{t-1} + i * g and h_t = o * tanh(c_t); gate
    kernels are stacked [in, 4H] / [H, 4H] in (i, f, g, o) column order.
    """

    def __init__(self, in_dim: int, hidden: int, return_sequence: bool = False,
                 rng: np.random.Generator | None = None, dtype=np.float64,
                 name: str = "lstm"):
        rng = rng or np.random.default_rng()
        self.hidden = hidden
        self.return_sequence = return_sequence
        self.Wx = Tensor(_uniform_fan_in(rng, (in_dim, 4 * hidden), in_dim, dtype),
                         requires_grad=True, name=f"{name}.Wx")
        self.Wh = Tensor(_uniform_fan_in(rng, (hidden, 4 * hidden), hidden, dtype),
                         requires_grad=True, name=f"{name}.Wh")
        self.b = Tensor(np.zeros(4 * hidden, dtype=dtype), requires_grad=True,
                        name=f"{name}.b")

    def params(self):
        return [self.Wx, self.Wh, self.b]

    def __call__(self, x, train=False, rng=None):
        B, T, _ = x.data.shape
        H = self.hidden
        Wx, Wh, b = self.Wx, self.Wh, self.b
        xp = x.data @ Wx.data + b.data  # [B, T, 4H]

        h = np.zeros((B, H), dtype=x.data.dtype)
        c = np.zeros((B, H), dtype=x.data.dtype)
        hs = np.empty((B, T, H), dtype=x.data.dtype)
        cache = []
        for t in range(T):
            h_prev, c_prev = h, c
            a = xp[:, t, :] + h_prev @ Wh.data
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = _sigmoid(a[:, 3 * H:])
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t, :] = h
            cache.append((h_prev, c_prev, i, f, g, o, tc))

        y = hs if self.return_sequence else h

        def backward_fn(dy):
            dWh = np.zeros_like(Wh.data)
            dxp = np.zeros_like(xp)
            dh = np.zeros((B, H), dtype=x.data.dtype)
            dc = np.zeros((B, H), dtype=x.data.dtype)
            for t in range(T - 1, -1, -1):
                h_prev, c_prev, i, f, g, o, tc = cache[t]
                if self.return_sequence:
                    dh = dh + dy[:, t, :]
                elif t == T - 1:
                    dh = dh + dy
                do = dh * tc
                dct = dc + dh * o * (1.0 - tc * tc)
                di = dct * g
                df = dct * c_prev
                dg = dct * i
                dc = dct * f

                dA = np.concatenate([di * i * (1.0 - i),
                                     df * f * (1.0 - f),
                                     dg * (1.0 - g * g),
                                     do * o * (1.0 - o)], axis=1)
                dxp[:, t, :] = dA
                dWh += h_prev.T @ dA
                dh = dA @ Wh.data.T

            flat_dxp = dxp.reshape(B * T, 4 * H)
            accumulate(Wx, x.data.reshape(B * T, -1).T @ flat_dxp)
            accumulate(Wh, dWh)
            accumulate(b, flat_dxp.sum(axis=0))
            if x.requires_grad:
                accumulate(x, (flat_dxp @ Wx.data.T).reshape(x.data.shape))

        return node(y, (x, Wx, Wh, b), backward_fn, "lstm")


class ConcatBranches(Layer):
    """Apply branch layer stacks to one input; concatenate on the last axis."""

    def __init__(self, branches: list[list[Layer]]):
        self.branches = branches

    def params(self):
        out = []
        for br in self.branches:
            for layer in br:
                out.extend(layer.params())
        return out

    def __call__(self, x, train=False, rng=None):
        outs = []
        for br in self.branches:
            h = x
            for layer in br:
                h = layer(h, train=train, rng=rng)
            outs.append(h)
        widths = [o.data.shape[-1] for o in outs]
        y = np.concatenate([o.data for o in outs], axis=-1)
        splits = np.cumsum(widths)[:-1]

        def backward_fn(dy):
            for o, part in zip(outs, np.split(dy, splits, axis=-1)):
                accumulate(o, part)

        return node(y, tuple(outs), backward_fn, "concat")


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_sparse_ce(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of the true class under softmax."""
    labels = np.asarray(labels)
    n_classes = logits.data.shape[1]
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise EngineError("label out of range for the logit width")
    B = logits.data.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    loss = -logp[np.arange(B), labels].mean()

    def backward_fn(dloss):
        probs = np.exp(logp)
        probs[np.arange(B), labels] -= 1.0
        accumulate(logits, probs * (dloss / B))

    return node(np.asarray(loss), (logits,), backward_fn, "softmax_sparse_ce")
