"""Skeleton sequences, dataset manifests, frame sampling, and splits.

Skeleton files are UTF-8 text with one frame per line::

    frame_index x1 y1 x2 y2 ... x16 y16 [c1 ... c16]

The 32 coordinates follow the anchor-joint order below; an optional
trailing block of 16 per-joint confidences is parsed and discarded.
Coordinates are in pixels with the image convention (y grows downward).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError

# Anchor joints, 1-based indices 1..16.  Order is load-bearing: every
# coordinate array in this package is stored in this order.
ANCHOR_JOINT_NAMES = (
    "foot_right",
    "knee_right",
    "hip_right",
    "hip_left",
    "knee_left",
    "foot_left",
    "hip_center",
    "spine",
    "shoulder_center",
    "head",
    "hand_right",
    "elbow_right",
    "shoulder_right",
    "shoulder_left",
    "elbow_left",
    "hand_left",
)

NUM_JOINTS = 16

_NAME_TO_INDEX = {name: i + 1 for i, name in enumerate(ANCHOR_JOINT_NAMES)}


def joint_index(name: str) -> int:
    """1-based index of a named anchor joint."""
    try:
        return _NAME_TO_INDEX[name]
    except KeyError:
        raise KeyError(f"unknown anchor joint name: {name!r}") from None


def joint_name(index: int) -> str:
    """Name of a 1-based anchor-joint index."""
    if not 1 <= index <= NUM_JOINTS:
        raise IndexError(f"anchor joint index out of range 1..16: {index}")
    return ANCHOR_JOINT_NAMES[index - 1]


@dataclass
class SkeletonFrame:
    """One frame of 16 (x, y) joint positions in pixels."""

    positions: np.ndarray  # (16, 2) float64
    frame_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.shape != (NUM_JOINTS, 2):
            raise SchemaError(
                f"frame {self.frame_index}: expected 16 (x, y) positions, "
                f"got array of shape {self.positions.shape}"
            )
        if not np.isfinite(self.positions).all():
            raise ValueError(f"frame {self.frame_index}: non-finite coordinate")


@dataclass
class SkeletonSequence:
    """An ordered clip of skeleton frames with metadata."""

    clip_id: str
    frames: list[SkeletonFrame]
    fps: float = 25.0
    label: int | None = None

    def __post_init__(self):
        if not self.frames:
            raise SchemaError(f"clip {self.clip_id!r}: no frames")
        if self.fps <= 0:
            raise ValueError(f"clip {self.clip_id!r}: fps must be positive")
        indices = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise SchemaError(
                f"clip {self.clip_id!r}: frame_index must be strictly increasing"
            )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        """Clip duration in seconds at the declared frame rate."""
        return len(self.frames) / self.fps


def parse_skeleton_file(
    data: bytes | str,
    clip_id: str = "",
    fps: float = 25.0,
    label: int | None = None,
) -> SkeletonSequence:
    """Parse the line-delimited skeleton format into a validated sequence.

    Raises ParseError (with line number) for unreadable tokens, SchemaError
    for wrong joint counts or ordering, ValueError for non-finite values.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    frames: list[SkeletonFrame] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        # 1 index + 32 coords, optionally + 16 confidences (ignored)
        if len(tokens) not in (1 + 2 * NUM_JOINTS, 1 + 3 * NUM_JOINTS):
            n_coord_tokens = len(tokens) - 1
            raise SchemaError(
                f"line {lineno}: frame record has {n_coord_tokens} values; "
                f"expected {2 * NUM_JOINTS} coordinates for 16 joints "
                f"(plus optional 16 confidences)"
            )
        try:
            frame_index = int(tokens[0])
            coords = [float(t) for t in tokens[1 : 1 + 2 * NUM_JOINTS]]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if frame_index < 0:
            raise SchemaError(f"line {lineno}: negative frame_index {frame_index}")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"line {lineno}: non-finite coordinate")
        positions = np.array(coords, dtype=np.float64).reshape(NUM_JOINTS, 2)
        frames.append(SkeletonFrame(positions=positions, frame_index=frame_index))
    if not frames:
        raise SchemaError("skeleton file contains no frames")
    return SkeletonSequence(clip_id=clip_id, frames=frames, fps=fps, label=label)


def serialize_skeleton(sequence: SkeletonSequence) -> bytes:
    """Inverse of parse_skeleton_file; round-trips coordinates bit-exactly."""
    lines = []
    for frame in sequence.frames:
        coords = " ".join(repr(float(v)) for v in frame.positions.ravel())
        lines.append(f"{frame.frame_index} {coords}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def sample_indices(total: int, count: int) -> np.ndarray:
    """Uniformly spread `count` indices over [0, total), with repetition
    when total < count.  Computed as round(linspace(0, total-1, count))."""
    if total < 1:
        raise ValueError("cannot sample from an empty sequence")
    if count < 1:
        raise ValueError("count must be >= 1")
    return np.rint(np.linspace(0.0, total - 1, num=count)).astype(np.int64)


def sample_frames(sequence: SkeletonSequence, count: int) -> np.ndarray:
    """Uniform frame sampling over a clip; see sample_indices."""
    return sample_indices(len(sequence), count)


@dataclass
class ManifestEntry:
    """One labeled clip: a skeleton file and/or named feature files."""

    label: int
    skeleton: str | None = None
    features: dict[str, str] = field(default_factory=dict)
    clip_id: str = ""

    def __post_init__(self):
        if self.skeleton is None and not self.features:
            raise SchemaError("manifest entry has neither skeleton nor features")
        paths = list(self.features.values())
        if self.skeleton is not None:
            paths.append(self.skeleton)
        if len(set(paths)) != len(paths):
            raise SchemaError(f"manifest entry {self.clip_id!r}: duplicate paths")
        if not self.clip_id:
            first = self.skeleton if self.skeleton is not None else paths[0]
            stem = first.replace("\\", "/").rsplit("/", 1)[-1]
            self.clip_id = stem.split(".", 1)[0]

    def to_dict(self) -> dict:
        out: dict = {"label": self.label, "clip_id": self.clip_id}
        if self.skeleton is not None:
            out["skeleton"] = self.skeleton
        if self.features:
            out["features"] = dict(sorted(self.features.items()))
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        return cls(
            label=int(d["label"]),
            skeleton=d.get("skeleton"),
            features=dict(d.get("features", {})),
            clip_id=d.get("clip_id", ""),
        )


@dataclass
class DatasetManifest:
    """Class names plus the labeled entries of a dataset."""

    class_names: list[str]
    entries: list[ManifestEntry]

    def __post_init__(self):
        n = len(self.class_names)
        for e in self.entries:
            if not 0 <= e.label < n:
                raise SchemaError(
                    f"entry {e.clip_id!r}: label {e.label} out of range for "
                    f"{n} classes"
                )

    def class_counts(self) -> list[int]:
        counts = [0] * len(self.class_names)
        for e in self.entries:
            counts[e.label] += 1
        return counts

    def to_json(self) -> str:
        doc = {
            "class_names": list(self.class_names),
            "entries": [e.to_dict() for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str | bytes) -> "DatasetManifest":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"manifest is not valid JSON: {exc}") from None
        if "class_names" not in doc or "entries" not in doc:
            raise SchemaError("manifest missing 'class_names' or 'entries'")
        return cls(
            class_names=list(doc["class_names"]),
            entries=[ManifestEntry.from_dict(d) for d in doc["entries"]],
        )


def load_manifest(path) -> DatasetManifest:
    with open(path, "rb") as fh:
        return DatasetManifest.from_json(fh.read())


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())


def _stratified_split(
    manifest: DatasetManifest, first_fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Split entries per class: the first output gets ceil(fraction * n_c)
    of each class, chosen by a seeded shuffle; original order is kept."""
    by_class: dict[int, list[int]] = {c: [] for c in range(len(manifest.class_names))}
    for idx, e in enumerate(manifest.entries):
        by_class[e.label].append(idx)
    for c, idxs in by_class.items():
        if not idxs:
            raise ValueError(
                f"class {manifest.class_names[c]!r} has no entries; "
                "cannot split stratified"
            )
    rng = random.Random(seed)
    first_idx: set[int] = set()
    for c in sorted(by_class):
        idxs = list(by_class[c])
        rng.shuffle(idxs)
        n_first = math.ceil(first_fraction * len(idxs))
        first_idx.update(idxs[:n_first])
    first_entries = [e for i, e in enumerate(manifest.entries) if i in first_idx]
    rest_entries = [e for i, e in enumerate(manifest.entries) if i not in first_idx]
    names = list(manifest.class_names)
    return (
        DatasetManifest(class_names=names, entries=first_entries),
        DatasetManifest(class_names=names, entries=rest_entries),
    )


def split_dataset(
    manifest: DatasetManifest, train_fraction: float = 0.7, seed: int = 0
) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified train/test split; train gets ceil(fraction * n_c) per class."""
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError(f"train_fraction must be in (0, 1]: {train_fraction}")
    return _stratified_split(manifest, train_fraction, seed)


def carve_validation(
    manifest: DatasetManifest, fraction: float = 0.1, seed: int = 0
) -> tuple[DatasetManifest, DatasetManifest]:
    """Carve a validation set out of a training manifest.

    `fraction` is the validation share; the fit manifest keeps
    ceil((1 - fraction) * n_c) entries per class.  fraction 0 returns an
    empty validation manifest (early stopping is then disabled downstream).
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"validation fraction must be in [0, 1): {fraction}")
    if fraction == 0.0:
        return (
            DatasetManifest(list(manifest.class_names), list(manifest.entries)),
            DatasetManifest(list(manifest.class_names), []),
        )
    return _stratified_split(manifest, 1.0 - fraction, seed)
