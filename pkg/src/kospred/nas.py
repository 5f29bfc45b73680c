"""Architecture search with function-preserving network morphisms.

A seeded batch of random architectures warm-starts the search; afterwards
the incumbent best model is repeatedly grown by a widening or deepening
morphism and fine-tuned. Both morphisms leave the computed function
unchanged at the moment they are applied, so a child never starts worse
than its parent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import MorphismError, SearchFailedError, TrainingDivergedError
from .neuralnet import (
    RELU,
    ArchSpec,
    DenseLayer,
    MLPModel,
    TrainConfig,
    _fold_output_scaling,
    fit,
    init_model,
)
from . import _kernels as kernels


@dataclass(frozen=True)
class SearchSpace:
    min_depth: int = 1
    max_depth: int = 4
    width_choices: tuple[int, ...] = (16, 32, 64, 128, 256, 512, 1024)
    # When set, position i draws from its own choice set (pins a layer
    # when the set is a singleton). Length must cover max_depth.
    width_choices_per_layer: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if not 1 <= self.min_depth <= self.max_depth:
            raise ValueError(f"bad depth range [{self.min_depth}, {self.max_depth}]")
        if not self.width_choices:
            raise ValueError("width_choices must be non-empty")
        per_layer = self.width_choices_per_layer
        if per_layer is not None:
            if len(per_layer) < self.max_depth:
                raise ValueError("width_choices_per_layer must cover max_depth")
            if any(not choices for choices in per_layer):
                raise ValueError("every per-layer choice set must be non-empty")

    def choices_for(self, position: int) -> tuple[int, ...]:
        if self.width_choices_per_layer is not None:
            return self.width_choices_per_layer[position]
        return self.width_choices

    def contains(self, arch: ArchSpec) -> bool:
        if not self.min_depth <= len(arch.hidden) <= self.max_depth:
            return False
        return all(w in self.choices_for(i) for i, w in enumerate(arch.hidden))


@dataclass(frozen=True)
class SearchBudget:
    n_random: int = 8
    n_morph: int = 8
    epochs_per_trial: int = 30
    seed: int = 42

    def __post_init__(self):
        if self.n_random < 1:
            raise ValueError(f"n_random must be >= 1, got {self.n_random}")
        if self.n_morph < 0:
            raise ValueError(f"n_morph must be >= 0, got {self.n_morph}")
        if self.epochs_per_trial < 1:
            raise ValueError(f"epochs_per_trial must be >= 1, got {self.epochs_per_trial}")


@dataclass(frozen=True)
class Trial:
    trial_id: int
    arch: ArchSpec
    seed: int
    val_mae: float | None
    parent: int | None = None
    morphism: dict | None = None
    epochs_spent: int = 0
    diverged: bool = False

    def as_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "hidden": list(self.arch.hidden),
            "seed": self.seed,
            "val_mae": self.val_mae,
            "parent": self.parent,
            "morphism": self.morphism,
            "epochs_spent": self.epochs_spent,
            "diverged": self.diverged,
        }


def random_arch(space: SearchSpace, rng: np.random.Generator) -> ArchSpec:
    """Draw depth uniformly from the range, each width uniformly per position."""
    depth = int(rng.integers(space.min_depth, space.max_depth + 1))
    hidden = []
    for i in range(depth):
        choices = space.choices_for(i)
        hidden.append(int(choices[rng.integers(len(choices))]))
    return ArchSpec(input_dim=4, hidden=tuple(hidden))


def widen(
    model: MLPModel, hidden_index: int, new_width: int, rng: np.random.Generator
) -> MLPModel:
    """Grow one hidden layer to ``new_width`` without changing the function.

    New units replicate randomly chosen existing units (incoming weights
    and bias copied); every outgoing weight is divided by its unit's final
    replication count, so each group still contributes its original sum.
    """
    if not 0 <= hidden_index < model.n_hidden:
        raise MorphismError(
            f"hidden_index {hidden_index} out of range for {model.n_hidden} hidden layers"
        )
    layer = model.layers[hidden_index]
    next_layer = model.layers[hidden_index + 1]
    old_width = layer.weights.shape[1]
    if new_width < old_width:
        raise MorphismError(f"cannot shrink layer from {old_width} to {new_width}")

    mapping = np.concatenate(
        [np.arange(old_width), rng.integers(0, old_width, size=new_width - old_width)]
    )
    counts = np.bincount(mapping, minlength=old_width)

    new_layers = [l.copy() for l in model.layers]
    new_layers[hidden_index] = DenseLayer(
        weights=np.ascontiguousarray(layer.weights[:, mapping]),
        bias=np.ascontiguousarray(layer.bias[mapping]),
        activation=layer.activation,
    )
    new_layers[hidden_index + 1] = DenseLayer(
        weights=np.ascontiguousarray(
            next_layer.weights[mapping, :] / counts[mapping][:, None]
        ),
        bias=next_layer.bias.copy(),
        activation=next_layer.activation,
    )
    hidden = list(model.arch.hidden)
    hidden[hidden_index] = new_width
    return MLPModel(arch=replace(model.arch, hidden=tuple(hidden)), layers=new_layers)


def deepen(model: MLPModel, insert_after: int) -> MLPModel:
    """Insert an identity ReLU layer after a hidden layer; depth grows by 1.

    The preceding activations are ReLU outputs and therefore non-negative,
    so relu(I @ x) == x and the function is preserved. Inserting anywhere
    else (before the first hidden layer, or after the linear head) would
    break on negative values and is rejected.
    """
    if not 0 <= insert_after < model.n_hidden:
        raise MorphismError(
            f"can only insert after a ReLU hidden layer; index {insert_after} "
            f"is invalid for {model.n_hidden} hidden layers"
        )
    width = model.arch.hidden[insert_after]
    identity = DenseLayer(
        weights=np.eye(width, dtype=np.float64),
        bias=np.zeros(width, dtype=np.float64),
        activation=RELU,
    )
    new_layers = [l.copy() for l in model.layers]
    new_layers.insert(insert_after + 1, identity)
    hidden = list(model.arch.hidden)
    hidden.insert(insert_after + 1, width)
    return MLPModel(arch=replace(model.arch, hidden=tuple(hidden)), layers=new_layers)


def _legal_morphisms(model: MLPModel, space: SearchSpace) -> list[str]:
    kinds = []
    if any(
        any(c > w for c in space.width_choices)
        for w in model.arch.hidden
    ):
        kinds.append("widen")
    if len(model.arch.hidden) < space.max_depth:
        kinds.append("deepen")
    return kinds


def _draw_morphism(
    model: MLPModel, space: SearchSpace, rng: np.random.Generator
) -> tuple[MLPModel, dict] | None:
    kinds = _legal_morphisms(model, space)
    if not kinds:
        return None
    kind = kinds[0] if len(kinds) == 1 else kinds[int(rng.integers(2))]
    if kind == "widen":
        growable = [
            i
            for i, w in enumerate(model.arch.hidden)
            if any(c > w for c in space.width_choices)
        ]
        layer = growable[int(rng.integers(len(growable)))]
        options = sorted(c for c in space.width_choices if c > model.arch.hidden[layer])
        new_width = options[int(rng.integers(len(options)))]
        child = widen(model, layer, new_width, rng)
        return child, {"kind": "widen", "hidden_index": layer, "new_width": new_width}
    insert_after = int(rng.integers(model.n_hidden))
    child = deepen(model, insert_after)
    return child, {"kind": "deepen", "insert_after": insert_after}


def _val_mae(weights, biases, X_val, y_val, scale: float, shift: float) -> float:
    pred = kernels.forward(X_val, weights, biases)
    return float(np.abs((pred * scale + shift) - y_val).mean())


def search(
    X_train,
    y_train,
    X_val,
    y_val,
    space: SearchSpace = SearchSpace(),
    budget: SearchBudget = SearchBudget(),
    base_config: TrainConfig | None = None,
) -> tuple[MLPModel, list[Trial]]:
    """Random warm start followed by morphism hill-climbing.

    Returns the best model (predicting in IDR) and the full trial ledger.
    Deterministic under ``budget.seed``. Raises :class:`SearchFailedError`
    if every trial diverges.
    """
    cfg = base_config if base_config is not None else TrainConfig()
    cfg = replace(cfg, epochs=budget.epochs_per_trial)
    X_train = np.ascontiguousarray(np.asarray(X_train, dtype=np.float64))
    y_train = np.ascontiguousarray(np.asarray(y_train, dtype=np.float64))
    X_val = np.ascontiguousarray(np.asarray(X_val, dtype=np.float64))
    y_val = np.ascontiguousarray(np.asarray(y_val, dtype=np.float64))

    if cfg.target_scaling:
        shift = float(y_train.mean())
        scale = float(y_train.std()) or 1.0
    else:
        shift, scale = 0.0, 1.0
    y_fit = (y_train - shift) / scale if cfg.target_scaling else y_train

    rng = np.random.default_rng(budget.seed)
    trials: list[Trial] = []
    best_model: MLPModel | None = None
    best_val = np.inf
    best_id = -1

    def run_trial(model, arch, parent, morphism):
        nonlocal best_model, best_val, best_id
        trial_seed = int(rng.integers(0, 2**63))
        trial_cfg = replace(cfg, seed=trial_seed)
        trial_id = len(trials)
        try:
            fit(model, X_train, y_fit, cfg=trial_cfg)
            val = _val_mae(model.weight_list(), model.bias_list(), X_val, y_val, scale, shift)
            trials.append(
                Trial(
                    trial_id=trial_id,
                    arch=arch,
                    seed=trial_seed,
                    val_mae=val,
                    parent=parent,
                    morphism=morphism,
                    epochs_spent=budget.epochs_per_trial,
                )
            )
            if val < best_val:
                best_val = val
                best_model = model
                best_id = trial_id
        except TrainingDivergedError:
            trials.append(
                Trial(
                    trial_id=trial_id,
                    arch=arch,
                    seed=trial_seed,
                    val_mae=None,
                    parent=parent,
                    morphism=morphism,
                    epochs_spent=budget.epochs_per_trial,
                    diverged=True,
                )
            )

    for _ in range(budget.n_random):
        arch = random_arch(space, rng)
        run_trial(init_model(arch, int(rng.integers(0, 2**63))), arch, None, None)

    if best_model is None:
        raise SearchFailedError("every warm-start trial diverged", trials)

    for _ in range(budget.n_morph):
        drawn = _draw_morphism(best_model, space, rng)
        if drawn is None:
            break  # incumbent already saturates the space
        child, morphism = drawn
        run_trial(child, child.arch, best_id, morphism)

    result = best_model.copy()
    if cfg.target_scaling:
        _fold_output_scaling(result, shift, scale)
    return result, trials
