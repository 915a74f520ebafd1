"""Multilayer perceptron amplitude model ``F = sum_s f(s)|s><s|`` with analytic gradients."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

OUTPUT_MODES = ("nonneg", "complex", "signed")


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def encode_bits(s) -> np.ndarray:
    """Bits {0,1} -> inputs {+1,-1}; accepts a bitstring, a bit array or a batch."""
    if isinstance(s, str):
        s = [int(c) for c in s]
    return 1.0 - 2.0 * np.asarray(s, dtype=float)


class AmplitudeModel:
    """Tanh MLP mapping a bitstring to an amplitude.

    ``nonneg``: ``f(s) = softplus(z(s)) > 0`` (or ``exp`` if ``positive="exp"``).
    ``complex``: ``f(s) = softplus(z(s)) * exp(i phi(s))`` with a second linear head.
    ``signed``: ``f(s) = z(s)``, a plain real output used by the NN baseline.
    """

    def __init__(self, n_inputs: int, hidden=None, output_mode: str = "nonneg", seed=None, positive: str = "softplus"):
        if output_mode not in OUTPUT_MODES:
            raise ValueError(f"output_mode must be one of {OUTPUT_MODES}")
        if positive not in ("softplus", "exp"):
            raise ValueError("positive must be 'softplus' or 'exp'")
        hidden = (n_inputs, n_inputs) if hidden is None else tuple(int(h) for h in hidden)
        self.layer_sizes = [int(n_inputs), *hidden, 1]
        self.output_mode = output_mode
        self.positive = positive
        rng = np.random.default_rng(seed)
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(rng.uniform(-0.5, 0.5, size=(fan_out, fan_in)) * 2.0 / np.sqrt(fan_in))
            self.biases.append(np.zeros(fan_out))
        self.phase_w = np.zeros((1, self.layer_sizes[-2]))
        self.phase_b = np.zeros(1)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    # -- parameters --------------------------------------------------------

    def _arrays(self) -> list[np.ndarray]:
        arrs = []
        for w, b in zip(self.weights, self.biases):
            arrs += [w, b]
        if self.output_mode == "complex":
            arrs += [self.phase_w, self.phase_b]
        return arrs

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self._arrays())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays()])

    def set_flat(self, v: np.ndarray) -> None:
        v = np.asarray(v, dtype=float)
        if v.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {v.size}")
        i = 0
        for a in self._arrays():
            a[...] = v[i : i + a.size].reshape(a.shape)
            i += a.size

    def copy(self) -> "AmplitudeModel":
        m = AmplitudeModel.__new__(AmplitudeModel)
        m.layer_sizes = list(self.layer_sizes)
        m.output_mode, m.positive = self.output_mode, self.positive
        m.weights = [w.copy() for w in self.weights]
        m.biases = [b.copy() for b in self.biases]
        m.phase_w, m.phase_b = self.phase_w.copy(), self.phase_b.copy()
        return m

    def to_complex(self) -> "AmplitudeModel":
        """Same amplitudes, plus a zero-initialized phase head."""
        if self.output_mode != "nonneg":
            raise ValueError("only a nonneg model can be relaxed to complex output")
        m = self.copy()
        m.output_mode = "complex"
        m.phase_w[...] = 0.0
        m.phase_b[...] = 0.0
        return m

    # -- evaluation --------------------------------------------------------

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if x.shape[-1] != self.n_inputs:
            raise ValueError(f"bitstring length {x.shape[-1]} != model input size {self.n_inputs}")
        return x

    def _forward(self, s):
        x = self._check(encode_bits(s))
        acts = [x]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(np.tanh(acts[-1] @ w.T + b))
        z = (acts[-1] @ self.weights[-1].T + self.biases[-1])[:, 0]
        phi = (acts[-1] @ self.phase_w.T + self.phase_b)[:, 0] if self.output_mode == "complex" else None
        return acts, z, phi

    def _magnitude(self, z):
        if self.output_mode == "signed":
            return z, np.ones_like(z)
        if self.positive == "exp":
            e = np.exp(z)
            return e, e
        return softplus(z), sigmoid(z)

    def forward(self, s) -> np.ndarray:
        """Amplitudes for one bitstring or a batch ``(B, n)``; returns shape ``(B,)``."""
        _, z, phi = self._forward(s)
        r, _ = self._magnitude(z)
        if phi is not None:
            return r * np.exp(1j * phi)
        return r

    __call__ = forward

    def phases(self, s) -> np.ndarray:
        _, _, phi = self._forward(s)
        return np.zeros(np.atleast_2d(s).shape[0]) if phi is None else phi

    def backward(self, s, upstream, upstream_phase=None) -> np.ndarray:
        """``sum_b upstream[b] * d|f(s_b)|/dw + upstream_phase[b] * d phi(s_b)/dw``.

        Returned flat, in :meth:`get_flat` order. In nonneg/signed mode
        ``|f|`` is ``f`` itself.
        """
        acts, z, _ = self._forward(s)
        up = np.broadcast_to(np.asarray(upstream, dtype=float), z.shape)
        _, dr = self._magnitude(z)
        dz = (up * dr)[:, None]
        grads_w, grads_b = [None] * len(self.weights), [None] * len(self.weights)
        grads_w[-1] = dz.T @ acts[-1]
        grads_b[-1] = dz.sum(axis=0)
        da = dz @ self.weights[-1]
        extra = []
        if self.output_mode == "complex":
            uph = np.zeros_like(z) if upstream_phase is None else np.broadcast_to(np.asarray(upstream_phase, float), z.shape)
            dp = uph[:, None]
            extra = [(dp.T @ acts[-1]).ravel(), dp.sum(axis=0)]
            da = da + dp @ self.phase_w
        for i in range(len(self.weights) - 2, -1, -1):
            dzi = da * (1.0 - acts[i + 1] ** 2)
            grads_w[i] = dzi.T @ acts[i]
            grads_b[i] = dzi.sum(axis=0)
            da = dzi @ self.weights[i]
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts += [gw.ravel(), gb.ravel()]
        return np.concatenate(parts + extra)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "output_mode": self.output_mode,
            "positive": self.positive,
            "params": self.get_flat().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AmplitudeModel":
        sizes = d["layer_sizes"]
        m = cls(sizes[0], sizes[1:-1], d["output_mode"], seed=0, positive=d.get("positive", "softplus"))
        m.set_flat(np.array(d["params"]))
        return m

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "AmplitudeModel":
        return cls.from_dict(json.loads(text))


def forward(model: AmplitudeModel, s):
    return model.forward(s)


def backward(model: AmplitudeModel, s, upstream, upstream_phase=None) -> np.ndarray:
    return model.backward(s, upstream, upstream_phase)


def reset_to_identity(model: AmplitudeModel, seed=None, scale: float = 1e-4) -> AmplitudeModel:
    """Fresh model whose output is nearly constant, so ``F`` is proportional to the identity.

    Hidden layers get a normal re-initialization; the output heads are shrunk
    by ``scale`` and their biases zeroed, which keeps hidden features alive for
    the next round of training.
    """
    m = AmplitudeModel(model.n_inputs, model.layer_sizes[1:-1], model.output_mode, seed=seed, positive=model.positive)
    m.weights[-1] *= scale
    m.biases[-1][...] = 0.0
    rng = np.random.default_rng(seed)
    m.phase_w = rng.uniform(-0.5, 0.5, size=m.phase_w.shape) * scale
    return m


@dataclass
class Adam:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)
