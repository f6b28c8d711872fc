"""Two-layer ReLU rating network and the fitness formulas built on it.

Two training rules are available:

``paper-literal``
    output delta ``y (1 - y) (y - t)``, hidden delta ``h (1 - h) w2 delta``,
    weight step ``w <- w + eta * delta * w`` and bias step
    ``b <- b + eta * delta``, applied exactly as written even though the
    activation is ReLU.
``consistent``
    squared-error loss ``(y - t)**2 / 2`` with ReLU subgradients and the
    usual ``w <- w - eta * delta * input`` step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

MODES = ("paper-literal", "consistent")
FEATURE_NAMES = ("quotation", "delay", "plr", "load_variance", "cost_revenue")
NET_SCHEMA = "vnembed.fitnessnet/1"


@dataclass
class FitnessNet:
    hidden_weights: np.ndarray  # (inputs, hidden)
    hidden_biases: np.ndarray  # (hidden,)
    output_weights: np.ndarray  # (hidden,)
    output_bias: float
    learning_factor: float = 0.05
    rating_levels: int = 3
    mode: str = "consistent"

    def __post_init__(self):
        self.hidden_weights = np.asarray(self.hidden_weights, dtype=float)
        self.hidden_biases = np.asarray(self.hidden_biases, dtype=float)
        self.output_weights = np.asarray(self.output_weights, dtype=float)
        self.output_bias = float(self.output_bias)
        if self.hidden_weights.ndim != 2:
            raise ValueError("hidden_weights must be a matrix")
        h = self.hidden_weights.shape[1]
        if self.hidden_biases.shape != (h,) or self.output_weights.shape != (h,):
            raise ValueError("bias / output weight shapes do not match hidden width")
        if self.rating_levels < 2:
            raise ValueError("need at least two rating levels")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def init(cls, rng, n_inputs: int = len(FEATURE_NAMES), n_hidden: int = 8, **kw) -> FitnessNet:
        """Standard-normal weights and biases."""
        if isinstance(rng, (int, np.integer)) or rng is None:
            rng = np.random.default_rng(rng)
        return cls(rng.standard_normal((n_inputs, n_hidden)), rng.standard_normal(n_hidden),
                   rng.standard_normal(n_hidden), float(rng.standard_normal()), **kw)

    @property
    def n_inputs(self) -> int:
        return self.hidden_weights.shape[0]

    def copy(self) -> FitnessNet:
        return replace(self, hidden_weights=self.hidden_weights.copy(),
                       hidden_biases=self.hidden_biases.copy(),
                       output_weights=self.output_weights.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.hidden_weights).all() and np.isfinite(self.hidden_biases).all()
                    and np.isfinite(self.output_weights).all() and np.isfinite(self.output_bias))

    def to_dict(self) -> dict:
        return {"schema": NET_SCHEMA, "feature_schema": list(FEATURE_NAMES)[: self.n_inputs],
                "mode": self.mode, "learning_factor": self.learning_factor,
                "rating_levels": self.rating_levels,
                "hidden_weights": self.hidden_weights.tolist(),
                "hidden_biases": self.hidden_biases.tolist(),
                "output_weights": self.output_weights.tolist(),
                "output_bias": self.output_bias}

    @classmethod
    def from_dict(cls, data: dict) -> FitnessNet:
        if data.get("schema") != NET_SCHEMA:
            raise ValueError(f"unsupported net schema {data.get('schema')!r}")
        return cls(np.array(data["hidden_weights"]), np.array(data["hidden_biases"]),
                   np.array(data["output_weights"]), data["output_bias"],
                   learning_factor=data["learning_factor"], rating_levels=data["rating_levels"],
                   mode=data["mode"])


@dataclass
class LossFactors:
    output: float
    hidden: np.ndarray = field(repr=False)


def base_fitness(quotation: float, coeff: float = 1.0) -> float:
    if coeff <= 0:
        raise ValueError("conversion coefficient must be positive")
    return coeff * quotation


def _relu(z):
    return np.maximum(z, 0.0)


def _check_dim(net: FitnessNet, x: np.ndarray):
    if x.shape[-1] != net.n_inputs:
        raise ValueError(f"expected {net.n_inputs} features, got {x.shape[-1]}")


def bp_forward(net: FitnessNet, features) -> float:
    x = np.asarray(features, dtype=float)
    _check_dim(net, x)
    hidden = _relu(x @ net.hidden_weights + net.hidden_biases)
    return float(max(hidden @ net.output_weights + net.output_bias, 0.0))


def predict(net: FitnessNet, features) -> np.ndarray:
    """Vectorised forward pass over a (samples, inputs) matrix."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    _check_dim(net, x)
    hidden = _relu(x @ net.hidden_weights + net.hidden_biases)
    return _relu(hidden @ net.output_weights + net.output_bias)


def loss(net: FitnessNet, features, target: float) -> float:
    y = bp_forward(net, features)
    return 0.5 * (y - target) ** 2


def gradients(net: FitnessNet, features, target: float):
    """Squared-error gradients (d_hidden_weights, d_hidden_biases, d_output_weights, d_output_bias)."""
    x = np.asarray(features, dtype=float)
    z1 = x @ net.hidden_weights + net.hidden_biases
    h = _relu(z1)
    z2 = h @ net.output_weights + net.output_bias
    y = max(z2, 0.0)
    d_out = (y - target) * (1.0 if z2 > 0 else 0.0)
    d_hid = net.output_weights * d_out * (z1 > 0)
    return x[:, None] * d_hid, d_hid, d_out * h, d_out


def _step(net: FitnessNet, x: np.ndarray, target: float, mode: str) -> LossFactors:
    """One in-place update; returns the deltas computed before the update."""
    eta = net.learning_factor
    if mode == "consistent":
        g_w1, g_b1, g_w2, g_b = gradients(net, x, target)
        net.hidden_weights -= eta * g_w1
        net.hidden_biases -= eta * g_b1
        net.output_weights -= eta * g_w2
        net.output_bias -= eta * g_b
        return LossFactors(float(g_b), g_b1)
    if mode != "paper-literal":
        raise ValueError(f"unknown mode {mode!r}")
    h = _relu(x @ net.hidden_weights + net.hidden_biases)
    y = max(h @ net.output_weights + net.output_bias, 0.0)
    d_out = y * (1 - y) * (y - target)
    d_hid = h * (1 - h) * net.output_weights * d_out
    net.output_weights += eta * d_out * net.output_weights
    net.output_bias += eta * d_out
    net.hidden_weights += eta * d_hid[None, :] * net.hidden_weights
    net.hidden_biases += eta * d_hid
    return LossFactors(float(d_out), d_hid)


def bp_train_step(net: FitnessNet, sample, mode: str | None = None):
    """Return ``(updated copy of net, LossFactors)`` for one rated sample."""
    mode = mode or net.mode
    out = net.copy()
    factors = _step(out, np.asarray(sample.features, dtype=float), float(sample.rating), mode)
    return out, factors


def predicted_rating(net: FitnessNet, features) -> np.ndarray:
    """Network output clamped to the rating scale [1, n]."""
    return np.clip(predict(net, features), 1.0, net.rating_levels)


def holdout_error(net: FitnessNet, samples) -> float:
    if not samples:
        return 0.0
    x = np.array([s.features for s in samples], dtype=float)
    t = np.array([s.rating for s in samples], dtype=float)
    return float(np.mean(np.abs(predicted_rating(net, x) - t)))


def accuracy(net: FitnessNet, samples) -> float:
    """Share of samples whose rounded clamped prediction equals the rating."""
    x = np.array([s.features for s in samples], dtype=float)
    t = np.array([s.rating for s in samples])
    return float(np.mean(np.rint(predicted_rating(net, x)).astype(int) == t))


def train(net: FitnessNet, dataset, epochs: int, mode: str | None = None, seed=0,
          holdout: float = 0.1) -> FitnessNet:
    """SGD over ``dataset`` keeping the epoch with the lowest holdout error.

    The initial network takes part in the comparison, so ``epochs=0`` returns
    an unchanged copy.  Training stops early if the weights stop being finite.
    """
    if not dataset:
        raise ValueError("empty dataset")
    mode = mode or net.mode
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_hold = int(round(holdout * len(dataset))) if len(dataset) > 1 else 0
    n_hold = min(max(n_hold, 1 if len(dataset) > 1 else 0), len(dataset) - 1)
    held = [dataset[i] for i in order[:n_hold]]
    fit = [dataset[i] for i in order[n_hold:]]
    eval_set = held or fit
    xs = np.array([s.features for s in fit], dtype=float)
    ts = np.array([s.rating for s in fit], dtype=float)

    work = net.copy()
    work.mode = mode
    best, best_err = work.copy(), holdout_error(work, eval_set)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            for i in rng.permutation(len(fit)):
                _step(work, xs[i], ts[i], mode)
            if not work.is_finite():
                break
            err = holdout_error(work, eval_set)
            if err < best_err:
                best, best_err = work.copy(), err
    return best


def blended_fitness(net: FitnessNet | None, features, fitness, user_weight: float,
                    n: int | None = None):
    """Blend base fitness with the network rating (rating 1 is best).

    Works on a single feature vector or a (samples, inputs) matrix with a
    matching fitness array.  The raw output is clamped to [1, n] first.
    """
    if not 0 <= user_weight <= 1:
        raise ValueError("user_weight must lie in [0, 1]")
    f = np.asarray(fitness, dtype=float)
    if net is None or user_weight == 0:
        return f if f.ndim else float(f)
    n = n or net.rating_levels
    x = np.asarray(features, dtype=float)
    rating = np.clip(predict(net, x), 1.0, n)
    out = user_weight * (rating / n) * f + (1 - user_weight) * f
    return out if x.ndim == 2 else float(out[0])
