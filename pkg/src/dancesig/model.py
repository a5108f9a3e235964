"""Sequence classifier: LSTM -> dense+BN -> dense+BN -> softmax over 6 classes.

The sequence embedding is the LSTM's final hidden state.  Head sizing
follows the quarter/half rule: dense1 = hidden // 4, dense2 = dense1 // 2.
Training is Adam on categorical cross-entropy with shuffled batches and
early stopping on validation loss.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, TrainingError
from .features import FeatureChunk, layout_hash
from .neural import (
    ACTIVATIONS,
    AdamState,
    adam_step,
    batchnorm_backward,
    batchnorm_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    init_batchnorm,
    init_dense,
    init_lstm_params,
    lstm_backward,
    lstm_forward,
    softmax,
    softmax_cross_entropy_backward,
)

NUM_CLASSES = 6
DEFAULT_CLASS_NAMES = (
    "Bharatnatyam",
    "Kathak",
    "Kuchipudi",
    "Manipuri",
    "Mohiniattam",
    "Odissi",
)


@dataclass
class ModelConfig:
    """Architecture settings; dense sizes derive from the hidden size."""

    input_dim: int
    lstm_hidden: int = 512
    num_classes: int = NUM_CLASSES
    activation: str = "relu"
    sequence_length: int = 48
    peephole: str = "diagonal"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1: {self.input_dim}")
        if self.lstm_hidden < 8:
            raise ConfigError(
                f"lstm_hidden must be >= 8 so the quarter/half head is "
                f"non-degenerate: {self.lstm_hidden}"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def dense1(self) -> int:
        return self.lstm_hidden // 4

    @property
    def dense2(self) -> int:
        return self.dense1 // 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dense1"] = self.dense1
        d["dense2"] = self.dense2
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            lstm_hidden=int(d["lstm_hidden"]),
            num_classes=int(d.get("num_classes", NUM_CLASSES)),
            activation=d.get("activation", "relu"),
            sequence_length=int(d.get("sequence_length", 48)),
            peephole=d.get("peephole", "diagonal"),
        )


@dataclass
class TrainConfig:
    """Optimizer and loop settings."""

    learning_rate: float = 1e-4
    decay: float = 1e-6
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    monitor: str = "loss"  # or "accuracy"

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.max_epochs) <= 0:
            raise ConfigError("learning_rate, batch_size, max_epochs must be positive")
        if self.decay < 0:
            raise ConfigError("decay must be >= 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.monitor not in ("loss", "accuracy"):
            raise ConfigError(f"unknown monitor {self.monitor!r}")

    def to_dict(self) -> dict:
        return asdict(self)


class SequenceClassifier:
    """The network itself, with explicit layer sizes.

    build_model() applies the quarter/half rule from a ModelConfig; the
    direct constructor is free of it so tiny verification models can use
    arbitrary head sizes.
    """

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        dense1_dim: int,
        dense2_dim: int,
        num_classes: int = NUM_CLASSES,
        activation: str = "relu",
        seed: int = 0,
        dtype=np.float32,
        peephole: str = "diagonal",
    ):
        if min(input_dim, hidden_dim, dense1_dim, dense2_dim, num_classes) < 1:
            raise ConfigError("all layer sizes must be >= 1")
        rng = np.random.default_rng(seed)
        self.activation = activation
        self.act_forward, self.act_backward = ACTIVATIONS[activation]
        self.dtype = np.dtype(dtype)
        self.lstm = init_lstm_params(input_dim, hidden_dim, rng, dtype, peephole)
        self.dense1 = init_dense(hidden_dim, dense1_dim, rng, dtype)
        self.bn1 = init_batchnorm(dense1_dim, dtype)
        self.dense2 = init_dense(dense1_dim, dense2_dim, rng, dtype)
        self.bn2 = init_batchnorm(dense2_dim, dtype)
        self.dense3 = init_dense(dense2_dim, num_classes, rng, dtype)

    @property
    def input_dim(self) -> int:
        return self.lstm.input_dim

    @property
    def num_classes(self) -> int:
        return self.dense3.W.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        """Trainable tensors, keyed 'layer.tensor'."""
        out = {}
        for prefix, layer in (
            ("lstm", self.lstm),
            ("dense1", self.dense1),
            ("bn1", self.bn1),
            ("dense2", self.dense2),
            ("bn2", self.bn2),
            ("dense3", self.dense3),
        ):
            for name, tensor in layer.tensors().items():
                out[f"{prefix}.{name}"] = tensor
        return out

    def state_tensors(self) -> dict[str, np.ndarray]:
        """Trainable tensors plus batch-norm running statistics."""
        out = self.params()
        out["bn1.running_mean"] = self.bn1.running_mean
        out["bn1.running_var"] = self.bn1.running_var
        out["bn2.running_mean"] = self.bn2.running_mean
        out["bn2.running_var"] = self.bn2.running_var
        return out

    def copy_state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state_tensors().items()}

    def restore_state(self, snapshot: dict[str, np.ndarray]) -> None:
        tensors = self.state_tensors()
        if set(tensors) != set(snapshot):
            raise ContractError("snapshot keys do not match model tensors")
        for k, v in tensors.items():
            v[...] = snapshot[k]

    def forward(self, X, mode: str = "infer", update_running: bool = False,
                return_cache: bool = False):
        """Class probabilities for a (N, T, D) batch (or a single (T, D))."""
        X = np.asarray(X, dtype=self.dtype)
        single = X.ndim == 2
        if single:
            X = X[None]
        h_T, lstm_cache = lstm_forward(X, self.lstm)
        z1, c_d1 = dense_forward(h_T, self.dense1)
        n1, c_b1 = batchnorm_forward(z1, self.bn1, mode, update_running)
        a1, c_a1 = self.act_forward(n1)
        z2, c_d2 = dense_forward(a1, self.dense2)
        n2, c_b2 = batchnorm_forward(z2, self.bn2, mode, update_running)
        a2, c_a2 = self.act_forward(n2)
        z3, c_d3 = dense_forward(a2, self.dense3)
        probs = softmax(z3)
        if not return_cache:
            return probs[0] if single else probs
        cache = {
            "lstm": lstm_cache, "d1": c_d1, "b1": c_b1, "a1": c_a1,
            "d2": c_d2, "b2": c_b2, "a2": c_a2, "d3": c_d3,
        }
        return probs, cache

    def loss(self, X, labels, mode: str = "train", update_running: bool = False) -> float:
        probs = self.forward(X, mode=mode, update_running=update_running)
        return cross_entropy(np.atleast_2d(probs), labels)

    def loss_and_grads(self, X, labels):
        """Train-mode forward + full backward.

        Returns (loss, probabilities, gradients keyed like params()).
        """
        labels = np.asarray(labels, dtype=np.int64)
        probs, cache = self.forward(
            X, mode="train", update_running=True, return_cache=True
        )
        loss = cross_entropy(probs, labels)
        dz3 = softmax_cross_entropy_backward(probs, labels)
        da2, g_d3 = dense_backward(cache["d3"], self.dense3, dz3)
        dn2 = self.act_backward(cache["a2"], da2)
        dz2, g_b2 = batchnorm_backward(cache["b2"], self.bn2, dn2)
        da1, g_d2 = dense_backward(cache["d2"], self.dense2, dz2)
        dn1 = self.act_backward(cache["a1"], da1)
        dz1, g_b1 = batchnorm_backward(cache["b1"], self.bn1, dn1)
        dh_T, g_d1 = dense_backward(cache["d1"], self.dense1, dz1)
        g_lstm = lstm_backward(cache["lstm"], self.lstm, dh_T)
        grads = {}
        for prefix, g in (
            ("lstm", g_lstm), ("dense1", g_d1), ("bn1", g_b1),
            ("dense2", g_d2), ("bn2", g_b2), ("dense3", g_d3),
        ):
            for name, tensor in g.items():
                grads[f"{prefix}.{name}"] = tensor
        return loss, probs, grads

    def evaluate(self, X, labels, batch_size: int = 32) -> tuple[float, float]:
        """Mean cross-entropy and accuracy in infer mode."""
        labels = np.asarray(labels, dtype=np.int64)
        n = len(labels)
        total_nll = 0.0
        correct = 0
        for start in range(0, n, batch_size):
            sl = slice(start, min(start + batch_size, n))
            probs = np.atleast_2d(self.forward(X[sl], mode="infer"))
            total_nll += cross_entropy(probs, labels[sl]) * (sl.stop - sl.start)
            correct += int((probs.argmax(axis=1) == labels[sl]).sum())
        return total_nll / n, correct / n


def build_model(config: ModelConfig, seed: int = 0, dtype=np.float32) -> SequenceClassifier:
    """Instantiate the classifier with quarter/half head sizing."""
    return SequenceClassifier(
        input_dim=config.input_dim,
        hidden_dim=config.lstm_hidden,
        dense1_dim=config.dense1,
        dense2_dim=config.dense2,
        num_classes=config.num_classes,
        activation=config.activation,
        seed=seed,
        dtype=dtype,
        peephole=config.peephole,
    )


@dataclass
class ChunkDataset:
    """Stacked feature chunks ready for the training loop."""

    X: np.ndarray  # (N, T, D) float32
    y: np.ndarray  # (N,) int64
    stream_layout: list[tuple[str, int]]
    clip_ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def from_chunks(cls, chunks: list[FeatureChunk]) -> "ChunkDataset":
        if not chunks:
            raise ValueError("no chunks to stack")
        layout = chunks[0].stream_layout
        shape = chunks[0].matrix.shape
        for ch in chunks:
            if ch.stream_layout != layout:
                raise ContractError(
                    f"chunk {ch.clip_id!r} layout {ch.stream_layout} differs "
                    f"from {layout}"
                )
            if ch.matrix.shape != shape:
                raise ContractError(
                    f"chunk {ch.clip_id!r} shape {ch.matrix.shape} differs "
                    f"from {shape}"
                )
            if ch.label is None:
                raise ContractError(f"chunk {ch.clip_id!r} has no label")
        return cls(
            X=np.stack([ch.matrix for ch in chunks]),
            y=np.array([ch.label for ch in chunks], dtype=np.int64),
            stream_layout=list(layout),
            clip_ids=[ch.clip_id for ch in chunks],
        )


class EarlyStopper:
    """Stop when the monitored value has not improved for `patience` epochs."""

    def __init__(self, patience: int = 5):
        self.patience = patience
        self.best = math.inf
        self.best_epoch: int | None = None
        self.epochs_without_improvement = 0

    def update(self, epoch: int, value: float) -> bool:
        """Record one epoch; returns True when the value improved."""
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.epochs_without_improvement = 0
            return True
        self.epochs_without_improvement += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.epochs_without_improvement >= self.patience


def _batch_slices(n: int, batch_size: int, needs_pairs: bool):
    """Consecutive batch index ranges; a trailing singleton is folded into
    the previous batch when train-mode batch norm requires >= 2 samples."""
    bounds = list(range(0, n, batch_size)) + [n]
    slices = [(a, b) for a, b in zip(bounds, bounds[1:])]
    if needs_pairs and len(slices) > 1 and slices[-1][1] - slices[-1][0] == 1:
        last = slices.pop()
        prev = slices.pop()
        slices.append((prev[0], last[1]))
    return slices


def train_classifier(
    model: SequenceClassifier,
    fit: ChunkDataset,
    validation: ChunkDataset | None,
    config: TrainConfig,
    val_metric_fn=None,
    epoch_callback=None,
) -> tuple[SequenceClassifier, dict]:
    """Adam training with shuffled batches and patience-based early stopping.

    Epochs are 1-based in the returned history.  When validation is present
    (or val_metric_fn injected), the weights from the best epoch are
    restored before returning.  val_metric_fn(epoch, model) -> float is the
    injection seam for the monitored value; lower must mean better.
    """
    if len(fit) == 0:
        raise ValueError("fit set is empty")
    if fit.X.shape[-1] != model.input_dim:
        raise ContractError(
            f"chunk dim {fit.X.shape[-1]} does not match model input "
            f"{model.input_dim}"
        )
    n = len(fit)
    if n == 1:
        raise ContractError("training needs at least 2 samples (batch norm)")
    monitoring = val_metric_fn is not None or (
        validation is not None and len(validation) > 0
    )
    rng = np.random.default_rng(config.seed)
    adam = AdamState(learning_rate=config.learning_rate, decay=config.decay)
    params = model.params()
    stopper = EarlyStopper(patience=config.patience)
    best_snapshot = None
    history: dict = {
        "train_loss": [], "train_acc": [], "val_loss": [], "val_acc": [],
        "best_epoch": None, "stopped_epoch": 0, "monitor": config.monitor,
    }

    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n)
        epoch_nll = 0.0
        correct = 0
        for batch_no, (a, b) in enumerate(
            _batch_slices(n, config.batch_size, needs_pairs=True)
        ):
            idx = perm[a:b]
            loss, probs, grads = model.loss_and_grads(fit.X[idx], fit.y[idx])
            if not math.isfinite(loss):
                norms = {k: float(np.linalg.norm(v)) for k, v in params.items()}
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batch_no}; "
                    f"parameter norms: {norms}"
                )
            adam_step(params, grads, adam)
            epoch_nll += loss * len(idx)
            correct += int((probs.argmax(axis=1) == fit.y[idx]).sum())
        history["train_loss"].append(epoch_nll / n)
        history["train_acc"].append(correct / n)

        if validation is not None and len(validation) > 0:
            val_loss, val_acc = model.evaluate(
                validation.X, validation.y, config.batch_size
            )
            history["val_loss"].append(val_loss)
            history["val_acc"].append(val_acc)
            monitored = val_loss if config.monitor == "loss" else -val_acc
        else:
            monitored = None
        if val_metric_fn is not None:
            monitored = float(val_metric_fn(epoch, model))
            if validation is None or len(validation) == 0:
                history["val_loss"].append(monitored)

        if epoch_callback is not None:
            epoch_callback(epoch, model, history)
        if monitoring:
            if stopper.update(epoch, monitored):
                best_snapshot = model.copy_state()
                history["best_epoch"] = epoch
            if stopper.should_stop:
                break

    history["stopped_epoch"] = epoch
    if best_snapshot is not None:
        model.restore_state(best_snapshot)
    return model, history


@dataclass
class TrainedModel:
    """A classifier plus everything needed to use and persist it."""

    classifier: SequenceClassifier
    config: ModelConfig
    class_names: list[str]
    stream_layout: list[tuple[str, int]]
    history: dict
    seed: int

    @property
    def layout_hash(self) -> str:
        return layout_hash(self.stream_layout)


def predict(trained: TrainedModel, chunk: FeatureChunk) -> tuple[int, np.ndarray]:
    """Predicted class index and the 6 probabilities for one chunk.

    Ties break to the lowest class index.  The chunk's stream layout must
    hash-match the layout the model was trained on.
    """
    from .errors import LayoutError

    if layout_hash(chunk.stream_layout) != trained.layout_hash:
        raise LayoutError(
            f"chunk {chunk.clip_id!r} layout {chunk.stream_layout} does not "
            f"match the model's training layout {trained.stream_layout}"
        )
    probs = trained.classifier.forward(chunk.matrix, mode="infer")
    return int(np.argmax(probs)), probs
