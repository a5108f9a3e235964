"""Binary checkpoint container for trained models.

Layout (little-endian):
    magic b"NRCK" | version u32 | meta_len u32 | meta JSON (UTF-8)
    | tensor_count u32
    | per tensor: name_len u32, name UTF-8, rank u32, dims u32*rank,
                  row-major float32 data

The metadata block carries the model config, class names, stream layout
and its hash, training history, and the RNG seed.  Tensor data round-trips
bit-exactly; models must be float32 to be persisted.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointError, ContractError
from .features import layout_hash
from .model import ModelConfig, SequenceClassifier, TrainedModel

CHECKPOINT_MAGIC = b"NRCK"
CHECKPOINT_VERSION = 1


def checkpoint_bytes(trained: TrainedModel) -> bytes:
    tensors = trained.classifier.state_tensors()
    for name, t in tensors.items():
        if t.dtype != np.float32:
            raise ContractError(
                f"checkpoint tensors must be float32; {name!r} is {t.dtype} "
                "(wide-precision models are for verification, not persistence)"
            )
    meta = {
        "model_config": trained.config.to_dict(),
        "class_names": list(trained.class_names),
        "stream_layout": [[n, d] for n, d in trained.stream_layout],
        "layout_hash": trained.layout_hash,
        "history": trained.history,
        "seed": trained.seed,
    }
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<II", CHECKPOINT_VERSION, len(meta_blob)),
        meta_blob,
        struct.pack("<I", len(tensors)),
    ]
    for name in sorted(tensors):
        t = np.ascontiguousarray(tensors[name])
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<I", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<I", t.ndim))
        parts.append(struct.pack(f"<{t.ndim}I", *t.shape))
        parts.append(t.astype("<f4", copy=False).tobytes())
    return b"".join(parts)


def save_checkpoint(trained: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(trained))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint_bytes(data: bytes) -> TrainedModel:
    r = _Reader(data)
    if r.take(4) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} "
            f"(this build reads {CHECKPOINT_VERSION})"
        )
    meta_len = r.u32()
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"checkpoint metadata unreadable: {exc}") from None
    for key in ("model_config", "class_names", "stream_layout", "layout_hash"):
        if key not in meta:
            raise CheckpointError(f"checkpoint metadata missing {key!r}")

    tensors: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = r.take(4 * count)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after the last tensor record")

    config = ModelConfig.from_dict(meta["model_config"])
    classifier = SequenceClassifier(
        input_dim=config.input_dim,
        hidden_dim=config.lstm_hidden,
        dense1_dim=int(meta["model_config"].get("dense1", config.dense1)),
        dense2_dim=int(meta["model_config"].get("dense2", config.dense2)),
        num_classes=config.num_classes,
        activation=config.activation,
        seed=int(meta.get("seed", 0)),
        dtype=np.float32,
        peephole=config.peephole,
    )
    expected = classifier.state_tensors()
    if set(expected) != set(tensors):
        missing = set(expected).symmetric_difference(tensors)
        raise CheckpointError(f"tensor records do not match architecture: {sorted(missing)}")
    for name, target in expected.items():
        if tensors[name].shape != target.shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {target.shape}"
            )
        target[...] = tensors[name]

    stream_layout = [(n, int(d)) for n, d in meta["stream_layout"]]
    if layout_hash(stream_layout) != meta["layout_hash"]:
        raise CheckpointError("stream layout does not match its recorded hash")
    return TrainedModel(
        classifier=classifier,
        config=config,
        class_names=list(meta["class_names"]),
        stream_layout=stream_layout,
        history=meta.get("history", {}),
        seed=int(meta.get("seed", 0)),
    )


def load_checkpoint(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return load_checkpoint_bytes(fh.read())
