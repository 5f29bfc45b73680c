"""From-scratch dense regressor: forward, MAE loss, backprop, Adam, training.

Models are plain stacks of dense layers, ReLU on every hidden layer and a
single linear output unit. All arithmetic is 64-bit; the deployable
bundle narrows weights to 32-bit at export time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .dataset import CleanDataset
from .encoding import FeatureEncoder, encode_matrix
from .errors import EmptyBatchError, ShapeError, TrainingDivergedError

RELU = "relu"
LINEAR = "linear"


@dataclass(frozen=True)
class ArchSpec:
    """Hidden-layer widths around a fixed 4-input, 1-output dense stack."""

    input_dim: int = 4
    hidden: tuple[int, ...] = (256, 512, 128)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if any(w < 1 for w in self.hidden):
            raise ValueError(f"hidden widths must be >= 1, got {self.hidden}")
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))

    @property
    def summary(self) -> str:
        return "-".join(str(d) for d in (self.input_dim, *self.hidden, 1))

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden, 1)
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


@dataclass
class DenseLayer:
    weights: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str

    def __post_init__(self):
        if self.activation not in (RELU, LINEAR):
            raise ValueError(f"unknown activation: {self.activation}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ShapeError(
                f"layer shapes inconsistent: weights {self.weights.shape}, "
                f"bias {self.bias.shape}"
            )

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


@dataclass
class MLPModel:
    arch: ArchSpec
    layers: list[DenseLayer]

    def __post_init__(self):
        expected = self.arch.layer_dims()
        actual = [(l.weights.shape[0], l.weights.shape[1]) for l in self.layers]
        if actual != expected:
            raise ShapeError(f"layer dims {actual} do not match arch {expected}")
        if self.layers[-1].activation != LINEAR:
            raise ValueError("output layer must be linear")

    @property
    def n_hidden(self) -> int:
        return len(self.layers) - 1

    def weight_list(self) -> list[np.ndarray]:
        return [l.weights for l in self.layers]

    def bias_list(self) -> list[np.ndarray]:
        return [l.bias for l in self.layers]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out.append(l.weights)
            out.append(l.bias)
        return out

    def copy(self) -> "MLPModel":
        return MLPModel(self.arch, [l.copy() for l in self.layers])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 42
    target_scaling: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class AdamState:
    first_moments: list[np.ndarray]
    second_moments: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_model(cls, model: MLPModel) -> "AdamState":
        params = model.parameters()
        return cls(
            first_moments=[np.zeros_like(p) for p in params],
            second_moments=[np.zeros_like(p) for p in params],
            t=0,
        )

    def copy(self) -> "AdamState":
        return AdamState(
            [m.copy() for m in self.first_moments],
            [v.copy() for v in self.second_moments],
            self.t,
        )


@dataclass
class TrainHistory:
    """Per-epoch mean absolute error, always in IDR."""

    train_mae: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_mae)


def init_model(arch: ArchSpec, seed: int) -> MLPModel:
    """Glorot-uniform weights, zero biases, deterministic under the seed."""
    rng = np.random.default_rng(seed)
    layers = []
    dims = arch.layer_dims()
    for i, (fan_in, fan_out) in enumerate(dims):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(
            DenseLayer(
                weights=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                bias=np.zeros(fan_out),
                activation=LINEAR if i == len(dims) - 1 else RELU,
            )
        )
    return MLPModel(arch=arch, layers=layers)


def _as_batch(X, input_dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D batch, got {X.ndim}-D input")
    if X.shape[1] != input_dim:
        raise ShapeError(f"expected {input_dim} input columns, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def forward(model: MLPModel, X) -> np.ndarray:
    """Predictions for a batch; returns a vector of length n."""
    X = _as_batch(X, model.arch.input_dim)
    return kernels.forward(X, model.weight_list(), model.bias_list())


def mae_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean absolute error and its gradient wrt predictions; sign(0) = 0."""
    pred = np.ascontiguousarray(pred, dtype=np.float64)
    target = np.ascontiguousarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise EmptyBatchError("mae_loss over an empty batch")
    return kernels.mae_loss_grad(pred, target)


def backward(model: MLPModel, X, target) -> list[np.ndarray]:
    """Exact gradients of mae_loss(forward(X)) for every weight and bias.

    Returned flat, interleaved like ``model.parameters()``:
    [dW0, db0, dW1, db1, ...].
    """
    X = _as_batch(X, model.arch.input_dim)
    target = np.ascontiguousarray(target, dtype=np.float64)
    if target.shape != (X.shape[0],):
        raise ShapeError(f"target shape {target.shape} != ({X.shape[0]},)")
    if X.shape[0] == 0:
        raise EmptyBatchError("backward over an empty batch")
    _, weight_grads, bias_grads = kernels.forward_backward_mae(
        X, model.weight_list(), model.bias_list(), target
    )
    grads = []
    for dW, db in zip(weight_grads, bias_grads):
        grads.append(dW)
        grads.append(db)
    return grads


def adam_step(
    model: MLPModel, grads: list[np.ndarray], state: AdamState, cfg: TrainConfig
) -> tuple[MLPModel, AdamState]:
    """One Adam update; returns fresh (model, state), inputs untouched."""
    params = model.parameters()
    if len(grads) != len(params):
        raise ShapeError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")

    new_model = model.copy()
    new_state = state.copy()
    new_state.t += 1
    kernels.adam_update(
        new_model.parameters(),
        grads,
        new_state.first_moments,
        new_state.second_moments,
        new_state.t,
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    )
    return new_model, new_state


def fit(
    model: MLPModel,
    X_train,
    y_train,
    X_val=None,
    y_val=None,
    cfg: TrainConfig = TrainConfig(),
) -> TrainHistory:
    """Mini-batch Adam training, in place, in the units of ``y_train``.

    The train-MAE history entry for an epoch is the sample-weighted mean
    of its batch losses; the validation entry is a full pass at epoch end.
    """
    X_train = _as_batch(X_train, model.arch.input_dim)
    y_train = np.ascontiguousarray(y_train, dtype=np.float64)
    n = y_train.shape[0]
    if n == 0:
        raise EmptyBatchError("cannot train on an empty dataset")
    if X_train.shape[0] != n:
        raise ShapeError(f"{X_train.shape[0]} rows of X vs {n} targets")
    has_val = X_val is not None and y_val is not None
    if has_val:
        X_val = _as_batch(X_val, model.arch.input_dim)
        y_val = np.ascontiguousarray(y_val, dtype=np.float64)

    weights = model.weight_list()
    biases = model.bias_list()
    params = model.parameters()
    state = AdamState.for_model(model)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()

    # Overflow in a diverging run is reported as the typed error below,
    # not as numpy warnings from the reference backend.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            perm = rng.permutation(n)
            abs_err_sum = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                Xb = X_train[idx]
                yb = y_train[idx]
                loss, weight_grads, bias_grads = kernels.forward_backward_mae(
                    Xb, weights, biases, yb
                )
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch, cfg.learning_rate)
                grads = []
                for dW, db in zip(weight_grads, bias_grads):
                    grads.append(dW)
                    grads.append(db)
                state.t += 1
                kernels.adam_update(
                    params,
                    grads,
                    state.first_moments,
                    state.second_moments,
                    state.t,
                    cfg.learning_rate,
                    cfg.beta1,
                    cfg.beta2,
                    cfg.epsilon,
                )
                abs_err_sum += loss * idx.shape[0]
            history.train_mae.append(abs_err_sum / n)
            if has_val:
                val_pred = kernels.forward(X_val, weights, biases)
                history.val_mae.append(float(np.abs(val_pred - y_val).mean()))
    return history


def _fold_output_scaling(model: MLPModel, mean: float, std: float) -> None:
    """Absorb a linear de-standardization into the output layer."""
    head = model.layers[-1]
    head.weights *= std
    head.bias *= std
    head.bias += mean


def train(
    arch: ArchSpec,
    X_train,
    y_train,
    X_val=None,
    y_val=None,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[MLPModel, TrainHistory]:
    """Initialize and train a model; the result predicts directly in IDR.

    With ``cfg.target_scaling`` the targets are standardized for the
    optimizer and the inverse transform is folded into the output layer
    afterwards, so reported history and downstream predictions stay in
    IDR either way.
    """
    model = init_model(arch, cfg.seed)
    y_train = np.ascontiguousarray(y_train, dtype=np.float64)
    if cfg.target_scaling:
        mean = float(y_train.mean())
        std = float(y_train.std())
        if std == 0.0:
            std = 1.0
        y_fit = (y_train - mean) / std
        y_val_fit = None
        if y_val is not None:
            y_val_fit = (np.ascontiguousarray(y_val, dtype=np.float64) - mean) / std
        history = fit(model, X_train, y_fit, X_val, y_val_fit, cfg)
        history.train_mae = [m * std for m in history.train_mae]
        history.val_mae = [m * std for m in history.val_mae]
        _fold_output_scaling(model, mean, std)
    else:
        history = fit(model, X_train, y_train, X_val, y_val, cfg)
    return model, history


def layer_param_counts(arch: ArchSpec) -> list[int]:
    """Trainable parameters per dense layer (weights plus bias)."""
    return [fan_in * fan_out + fan_out for fan_in, fan_out in arch.layer_dims()]


def param_count(arch: ArchSpec, n_features: int) -> tuple[int, int, int]:
    """(total, trainable, non_trainable) parameter counts.

    The non-trainable part is the frozen normalization state:
    2 * n_features + 1 scalars.
    """
    trainable = sum(layer_param_counts(arch))
    non_trainable = 2 * n_features + 1
    return trainable + non_trainable, trainable, non_trainable


def evaluate(model: MLPModel, encoder: FeatureEncoder, test: CleanDataset) -> float:
    """MAE in IDR of the model over an encoded dataset; pure."""
    if len(test.records) == 0:
        raise EmptyBatchError("cannot evaluate on an empty dataset")
    X, y = encode_matrix(encoder, test)
    loss, _ = mae_loss(forward(model, X), y)
    return loss
