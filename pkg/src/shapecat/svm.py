"""Linear max-margin classifier trained by stochastic subgradient descent.

The objective is

    lambda/2 * (||w||^2 + b^2) + 1/N * sum_i max(0, 1 - y_i (w . x_i + b)),
    lambda = 1 / (C N)

with step size ``1 / (lambda t)`` (the Pegasos schedule), one sample per
step, visiting samples in a freshly shuffled order each epoch.

The bias is learned as the weight of a constant input of 1 and so shares
the shrinkage of the other weights.  Left unregularized, the first steps
(size C N) throw it far off and it takes thousands of epochs to recover.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .dataset_io import ClassLabel
from .descriptors import as_matrix
from .errors import DimensionMismatch, EmptyInput, SingleClass, TooFewSamples

DEFAULT_C = 1.0
DEFAULT_EPOCHS = 200
TRAIN_FRACTION = 0.6


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float
    c: float = DEFAULT_C
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0

    @property
    def dimension(self) -> int:
        return self.weights.size

    def decision_function(self, x) -> np.ndarray:
        x = as_matrix(x)
        if x.shape[1] != self.dimension:
            raise DimensionMismatch(f"model expects {self.dimension} features, got {x.shape[1]}")
        return x @ self.weights + self.bias

    def predict(self, x) -> np.ndarray:
        """Labels in {+1, -1}; a zero decision value maps to +1."""
        return np.where(self.decision_function(x) >= 0, 1, -1)

    def to_json(self) -> str:
        nums = ", ".join(format(float(w), ".17g") for w in self.weights)
        return (
            "{"
            f'"dimension": {self.dimension}, "weights": [{nums}], '
            f'"bias": {format(float(self.bias), ".17g")}, '
            f'"c": {format(float(self.c), ".17g")}, "epochs": {int(self.epochs)}, "seed": {int(self.seed)}'
            "}"
        )

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        obj = json.loads(text)
        weights = np.array(obj["weights"], dtype=np.float64)
        if weights.size != obj["dimension"]:
            raise DimensionMismatch("weights length disagrees with dimension")
        return cls(weights, float(obj["bias"]), float(obj["c"]), int(obj["epochs"]), int(obj["seed"]))


@numba.njit(cache=True, nogil=True)
def _pegasos(x, y, order, lam):
    # the last column of x is the constant bias input
    d = x.shape[1]
    w = np.zeros(d)
    t = 0
    for idx in order:
        t += 1
        eta = 1.0 / (lam * t)
        margin = 0.0
        for k in range(d):
            margin += w[k] * x[idx, k]
        margin *= y[idx]
        shrink = 1.0 - eta * lam
        for k in range(d):
            w[k] *= shrink
        if margin < 1.0:
            step = eta * y[idx]
            for k in range(d):
                w[k] += step * x[idx, k]
    return w


def svm_train(x, y, c: float = DEFAULT_C, epochs: int = DEFAULT_EPOCHS, seed: int = 0) -> SvmModel:
    """Fit on features ``x`` and labels ``y`` in {+1, -1}."""
    x = np.ascontiguousarray(as_matrix(x))
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("no training samples")
    if y.shape != (x.shape[0],):
        raise DimensionMismatch(f"{y.size} labels for {x.shape[0]} samples")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("labels must be +1 or -1")
    if np.unique(y).size < 2:
        raise SingleClass("training labels contain only one class")
    if c <= 0:
        raise ValueError("c must be positive")
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(n) for _ in range(epochs)]) if epochs else np.zeros(0, np.int64)
    augmented = np.hstack([x, np.ones((n, 1))])
    w = _pegasos(augmented, y, order.astype(np.int64), 1.0 / (c * n))
    return SvmModel(w[:-1].copy(), float(w[-1]), c, epochs, seed)


def svm_predict(model: SvmModel, x) -> int:
    return int(model.predict(np.asarray(getattr(x, "values", x), dtype=np.float64)[None, :])[0])


def hinge_objective(model: SvmModel, x, y, regularize_bias: bool = False) -> float:
    """Regularized mean hinge loss on ``(x, y)``.

    By default only ``w`` is penalized; ``regularize_bias`` adds ``b^2``,
    which is the quantity the trainer actually descends.
    """
    x = as_matrix(x)
    y = np.asarray(y, dtype=np.float64)
    lam = 1.0 / (model.c * x.shape[0])
    losses = np.maximum(0.0, 1.0 - y * (x @ model.weights + model.bias))
    norm2 = float(model.weights @ model.weights)
    if regularize_bias:
        norm2 += model.bias ** 2
    return 0.5 * lam * norm2 + float(losses.mean())


def encode_labels(labels, positive: ClassLabel = ClassLabel.ANIMAL) -> np.ndarray:
    return np.array([1 if lab == positive else -1 for lab in labels], dtype=np.int64)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = TRAIN_FRACTION
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def split_indices(n: int, spec: SplitSpec):
    """Shuffled index split; the first ceil(fraction * n) go to training."""
    if n < 2:
        raise TooFewSamples(f"cannot split {n} samples")
    n_train = min(n - 1, math.ceil(spec.train_fraction * n))
    perm = np.random.default_rng(spec.seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def split_train_test(dataset, spec: SplitSpec):
    """Split a sequence (or array) into ``(train, test)`` per ``spec``."""
    tr, te = split_indices(len(dataset), spec)
    if isinstance(dataset, np.ndarray):
        return dataset[tr], dataset[te]
    return [dataset[i] for i in tr], [dataset[i] for i in te]


@dataclass
class RepeatedEvalReport:
    per_run_accuracy: list[float]
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        acc = np.asarray(self.per_run_accuracy, dtype=np.float64)
        self.mean = float(acc.mean())
        self.std = float(acc.std())  # population


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    return 100.0 * float(np.mean(pred == np.asarray(truth)))


def repeated_eval(features, labels, positive: ClassLabel = ClassLabel.ANIMAL, n_runs: int = 10,
                  base_seed: int = 0, c: float = DEFAULT_C, epochs: int = DEFAULT_EPOCHS,
                  train_fraction: float = TRAIN_FRACTION, transform=None) -> RepeatedEvalReport:
    """Mean test accuracy over ``n_runs`` seeded random splits.

    Run ``r`` splits with seed ``base_seed + r`` and trains with the same
    seed.  ``transform(x_train, x_test, run)`` may map both splits into a
    new feature space first; it is fitted on the training split only.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    x = as_matrix(features)
    y = encode_labels(labels, positive)
    if y.size != x.shape[0]:
        raise DimensionMismatch(f"{y.size} labels for {x.shape[0]} samples")
    accs = []
    for r in range(n_runs):
        seed = base_seed + r
        tr, te = split_indices(x.shape[0], SplitSpec(train_fraction, seed))
        x_tr, x_te = x[tr], x[te]
        if transform is not None:
            x_tr, x_te = transform(x_tr, x_te, r)
        model = svm_train(x_tr, y[tr], c, epochs, seed)
        accs.append(accuracy(model.predict(x_te), y[te]))
    return RepeatedEvalReport(accs)
