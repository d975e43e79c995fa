"""Bernoulli-Bernoulli restricted Boltzmann machine trained with CD-1."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .descriptors import FeatureVector, as_matrix
from .errors import DimensionMismatch, EmptyBatch, EmptyInput, TooLarge, ZeroUnits

INIT_STD = 0.01
MAX_ENUMERATED_UNITS = 20


@dataclass(frozen=True)
class RbmHyper:
    learning_rate: float = 0.1
    batch_size: int = 50
    epochs: int = 100
    seed: int = 0


@dataclass
class RbmModel:
    weights: np.ndarray  # (n_visible, n_hidden)
    visible_bias: np.ndarray
    hidden_bias: np.ndarray
    hyper: RbmHyper = field(default_factory=RbmHyper)

    @property
    def n_visible(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "RbmModel":
        return RbmModel(self.weights.copy(), self.visible_bias.copy(), self.hidden_bias.copy(), self.hyper)

    def to_json(self) -> str:
        def nums(a):
            return "[" + ", ".join(format(float(v), ".17g") for v in np.ravel(a)) + "]"

        return (
            "{"
            f'"n_visible": {self.n_visible}, "n_hidden": {self.n_hidden}, '
            f'"weights": {nums(self.weights)}, "visible_bias": {nums(self.visible_bias)}, '
            f'"hidden_bias": {nums(self.hidden_bias)}, "hyper": {json.dumps(asdict(self.hyper))}'
            "}"
        )

    @classmethod
    def from_json(cls, text: str) -> "RbmModel":
        obj = json.loads(text)
        nv, nh = obj["n_visible"], obj["n_hidden"]
        return cls(
            np.array(obj["weights"], dtype=np.float64).reshape(nv, nh),
            np.array(obj["visible_bias"], dtype=np.float64),
            np.array(obj["hidden_bias"], dtype=np.float64),
            RbmHyper(**obj["hyper"]),
        )


@dataclass
class TrainTrace:
    per_epoch_reconstruction_error: list[float] = field(default_factory=list)


def sigmoid(x):
    # tanh form cannot overflow for large |x|
    return 0.5 + 0.5 * np.tanh(0.5 * np.asarray(x, dtype=np.float64))


def rbm_init(n_visible: int, n_hidden: int, seed: int = 0, hyper: RbmHyper | None = None) -> RbmModel:
    if n_visible < 1 or n_hidden < 1:
        raise ZeroUnits("an RBM needs at least one visible and one hidden unit")
    rng = np.random.default_rng(seed)
    return RbmModel(
        rng.normal(0.0, INIT_STD, size=(n_visible, n_hidden)),
        np.zeros(n_visible),
        np.zeros(n_hidden),
        hyper or RbmHyper(seed=seed),
    )


def hidden_probabilities(model: RbmModel, v) -> np.ndarray:
    """P(h_j = 1 | v); accepts one vector or a (batch, n_visible) matrix."""
    v = np.asarray(getattr(v, "values", v), dtype=np.float64)
    if v.shape[-1] != model.n_visible:
        raise DimensionMismatch(f"expected {model.n_visible} visible values, got {v.shape[-1]}")
    return sigmoid(v @ model.weights + model.hidden_bias)


def visible_probabilities(model: RbmModel, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != model.n_hidden:
        raise DimensionMismatch(f"expected {model.n_hidden} hidden values, got {h.shape[-1]}")
    return sigmoid(h @ model.weights.T + model.visible_bias)


def cd1_statistics(model: RbmModel, batch, rng: np.random.Generator):
    """Batch-averaged CD-1 gradient estimate and the reconstruction.

    Positive phase uses hidden probabilities given the data; one binary
    hidden sample drives the reconstruction; the negative phase uses
    probabilities throughout.  Returns ``(dW, dvb, dhb, v_recon)``.
    """
    v = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if v.shape[0] == 0:
        raise EmptyBatch("empty batch")
    if v.shape[1] != model.n_visible:
        raise DimensionMismatch(f"expected {model.n_visible} visible values, got {v.shape[1]}")
    h_pos = hidden_probabilities(model, v)
    h_sample = (rng.random(h_pos.shape) < h_pos).astype(np.float64)
    v_neg = visible_probabilities(model, h_sample)
    h_neg = hidden_probabilities(model, v_neg)
    n = v.shape[0]
    dw = (v.T @ h_pos - v_neg.T @ h_neg) / n
    dvb = (v - v_neg).mean(axis=0)
    dhb = (h_pos - h_neg).mean(axis=0)
    return dw, dvb, dhb, v_neg


def cd1_batch_update(model: RbmModel, batch, learning_rate: float, rng: np.random.Generator) -> RbmModel:
    """Return a new model after one CD-1 step on ``batch``."""
    dw, dvb, dhb, _ = cd1_statistics(model, batch, rng)
    return RbmModel(
        model.weights + learning_rate * dw,
        model.visible_bias + learning_rate * dvb,
        model.hidden_bias + learning_rate * dhb,
        model.hyper,
    )


def rbm_train(data, n_hidden: int, hyper: RbmHyper = RbmHyper()):
    """Train from ``rbm_init(n_visible, n_hidden, hyper.seed)``.

    A second generator seeded from ``[seed, 1]`` drives the per-epoch
    shuffles and hidden sampling.  Returns ``(model, trace)``.
    """
    x = as_matrix(data)
    if x.size == 0:
        raise EmptyInput("no training data")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("RBM inputs must lie in [0, 1]")
    if hyper.batch_size < 1:
        raise ValueError("batch_size must be positive")
    model = rbm_init(x.shape[1], n_hidden, hyper.seed, hyper)
    rng = np.random.default_rng([hyper.seed, 1])
    w, vb, hb = model.weights, model.visible_bias, model.hidden_bias
    trace = TrainTrace()
    n = x.shape[0]
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        sq_err = 0.0
        for start in range(0, n, hyper.batch_size):
            batch = x[order[start:start + hyper.batch_size]]
            dw, dvb, dhb, recon = cd1_statistics(model, batch, rng)
            w += hyper.learning_rate * dw
            vb += hyper.learning_rate * dvb
            hb += hyper.learning_rate * dhb
            sq_err += float(((batch - recon) ** 2).sum())
        trace.per_epoch_reconstruction_error.append(sq_err / (n * x.shape[1]))
    return model, trace


def rbm_transform(model: RbmModel, v) -> np.ndarray:
    """Hidden-unit probabilities as learned features (no sampling).

    ``v`` may be one FeatureVector, a sequence of them, or an array.
    """
    if isinstance(v, FeatureVector):
        return hidden_probabilities(model, v.values)
    if not isinstance(v, np.ndarray):
        v = as_matrix(v)
    return hidden_probabilities(model, v)


# ---------------------------------------------------------------------------
# exact oracle for tiny models


def _all_states(n):
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)))


def log_partition(model: RbmModel) -> float:
    """log Z by summing exp(-E) over every joint (v, h) state."""
    if model.n_visible + model.n_hidden > MAX_ENUMERATED_UNITS:
        raise TooLarge("exact enumeration limited to 20 units")
    v = _all_states(model.n_visible)
    h = _all_states(model.n_hidden)
    neg_energy = (v @ model.weights @ h.T) + (v @ model.visible_bias)[:, None] + (h @ model.hidden_bias)[None, :]
    e = neg_energy.astype(np.longdouble)
    top = e.max()
    return float(top + np.log(np.exp(e - top).sum()))


def log_likelihood(model: RbmModel, data) -> float:
    """Mean exact log p(v) over binary ``data``."""
    v = np.atleast_2d(np.asarray(data, dtype=np.float64))
    # -F(v) = v.b + sum_j log(1 + exp(c_j + v W_j))
    neg_free = v @ model.visible_bias + np.logaddexp(0.0, v @ model.weights + model.hidden_bias).sum(axis=1)
    return float(neg_free.mean()) - log_partition(model)


def exact_gradient_oracle(model: RbmModel, data):
    """Exact gradient of the mean log-likelihood by full state enumeration.

    Returns ``(dW, dvb, dhb)``: data expectations (hidden units averaged
    analytically) minus model expectations under the normalized Gibbs
    distribution.
    """
    if model.n_visible + model.n_hidden > MAX_ENUMERATED_UNITS:
        raise TooLarge("exact enumeration limited to 20 units")
    v_data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if not np.isin(v_data, (0.0, 1.0)).all():
        raise ValueError("oracle data must be binary")
    if v_data.shape[1] != model.n_visible:
        raise DimensionMismatch(f"expected {model.n_visible} visible values")

    ph = hidden_probabilities(model, v_data)
    pos_w = v_data.T @ ph / v_data.shape[0]
    pos_vb = v_data.mean(axis=0)
    pos_hb = ph.mean(axis=0)

    v = _all_states(model.n_visible)
    h = _all_states(model.n_hidden)
    neg_energy = ((v @ model.weights @ h.T) + (v @ model.visible_bias)[:, None]
                  + (h @ model.hidden_bias)[None, :]).astype(np.longdouble)
    p = np.exp(neg_energy - neg_energy.max())
    p /= p.sum()
    pv = p.sum(axis=1)
    ph_marg = p.sum(axis=0)
    neg_w = (v.astype(np.longdouble).T @ p @ h.astype(np.longdouble))
    neg_vb = pv @ v.astype(np.longdouble)
    neg_hb = ph_marg @ h.astype(np.longdouble)
    return (
        (pos_w - neg_w).astype(np.float64),
        (pos_vb - neg_vb).astype(np.float64),
        (pos_hb - neg_hb).astype(np.float64),
    )
