"""Per-frame feature streams, file containers, and chunk fusion.

Feature file (`.nrft`): little-endian binary
    magic  b"NRFT" | version u32 | rows u32 | dim u32 | rows*dim float32
A UTF-8 text variant (one whitespace-separated row per line) is accepted
on ingest.

Chunk cache file (`.nrch`): the same container with a metadata block
    magic  b"NRCH" | version u32 | rows u32 | dim u32
    meta_len u32 | meta JSON (clip_id, label, stream_layout) | float32 data
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .skeleton import sample_indices

FEATURE_MAGIC = b"NRFT"
CHUNK_MAGIC = b"NRCH"
FORMAT_VERSION = 1

# Canonical stream order used when fusing the full descriptor.
CANONICAL_STREAMS = ("inception", "kinetics", "pose")


@dataclass
class FeatureStream:
    """A named T x dim matrix of per-frame features."""

    name: str
    rows: np.ndarray  # (T, per_frame_dim) float32

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float32)
        if self.rows.ndim != 2 or self.rows.shape[0] < 1 or self.rows.shape[1] < 1:
            raise SchemaError(
                f"stream {self.name!r}: expected a non-empty 2-D matrix, "
                f"got shape {self.rows.shape}"
            )
        if not np.isfinite(self.rows).all():
            raise ValueError(f"stream {self.name!r}: non-finite feature value")

    @property
    def per_frame_dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class FeatureChunk:
    """Fixed-length training sample: sampled rows of fused streams."""

    clip_id: str
    matrix: np.ndarray  # (sequence_length, D) float32
    stream_layout: list[tuple[str, int]]
    label: int | None = None

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        self.stream_layout = [(str(n), int(d)) for n, d in self.stream_layout]
        layout_dim = sum(d for _, d in self.stream_layout)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != layout_dim:
            raise SchemaError(
                f"chunk {self.clip_id!r}: matrix shape {self.matrix.shape} does "
                f"not match stream layout (D={layout_dim})"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def column_block(self, name: str) -> np.ndarray:
        """The column slice belonging to one stream."""
        offset = 0
        for n, d in self.stream_layout:
            if n == name:
                return self.matrix[:, offset : offset + d]
            offset += d
        raise KeyError(f"chunk {self.clip_id!r} has no stream {name!r}")


def layout_hash(stream_layout) -> str:
    """Stable hash of a stream layout, used to guard trained checkpoints."""
    canonical = json.dumps([[str(n), int(d)] for n, d in stream_layout])
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_text_feature(text: str, name: str) -> FeatureStream:
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            row = [float(t) for t in tokens]
        except ValueError as exc:
            raise SchemaError(f"feature text line {lineno}: {exc}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaError(
                f"feature text line {lineno}: ragged row of {len(row)} values, "
                f"expected {width}"
            )
        rows.append(row)
    if not rows:
        raise SchemaError("feature file contains no rows")
    return FeatureStream(name=name, rows=np.array(rows, dtype=np.float32))


def load_feature_bytes(data: bytes, name: str = "") -> FeatureStream:
    """Parse a feature file (binary NRFT or its text variant)."""
    if data[:4] == FEATURE_MAGIC:
        if len(data) < 16:
            raise SchemaError("feature file truncated header")
        version, rows, dim = struct.unpack_from("<III", data, 4)
        if version != FORMAT_VERSION:
            raise SchemaError(f"unsupported feature format version {version}")
        expected = 16 + 4 * rows * dim
        if len(data) != expected:
            raise SchemaError(
                f"feature file length {len(data)} does not match "
                f"{rows}x{dim} float32 payload ({expected})"
            )
        if rows < 1 or dim < 1:
            raise SchemaError(f"feature file declares empty matrix {rows}x{dim}")
        matrix = np.frombuffer(data, dtype="<f4", offset=16).reshape(rows, dim)
        return FeatureStream(name=name, rows=matrix.copy())
    return _parse_text_feature(data.decode("utf-8"), name)


def feature_bytes(stream: FeatureStream) -> bytes:
    """Serialize a stream to the binary NRFT container."""
    rows, dim = stream.rows.shape
    header = FEATURE_MAGIC + struct.pack("<III", FORMAT_VERSION, rows, dim)
    return header + stream.rows.astype("<f4", copy=False).tobytes()


def load_feature_file(path, name: str | None = None) -> FeatureStream:
    with open(path, "rb") as fh:
        data = fh.read()
    if name is None:
        name = str(path).replace("\\", "/").rsplit("/", 1)[-1].split(".", 1)[0]
    return load_feature_bytes(data, name)


def save_feature_file(stream: FeatureStream, path) -> None:
    with open(path, "wb") as fh:
        fh.write(feature_bytes(stream))


def reshape_segment_features(
    segment_vectors: np.ndarray, frames_per_segment: int = 16
) -> np.ndarray:
    """Expand S x (frames_per_segment * d) segment vectors to per-frame rows.

    Segment s, frame k maps to output row s*frames_per_segment + k holding
    entries [k*d, (k+1)*d) of the segment vector.
    """
    segment_vectors = np.asarray(segment_vectors)
    if segment_vectors.ndim != 2:
        raise SchemaError(
            f"expected 2-D segment matrix, got shape {segment_vectors.shape}"
        )
    n_segments, width = segment_vectors.shape
    if width % frames_per_segment != 0:
        raise SchemaError(
            f"segment width {width} is not divisible by "
            f"frames_per_segment={frames_per_segment}"
        )
    per_frame = width // frames_per_segment
    return segment_vectors.reshape(n_segments * frames_per_segment, per_frame)


def fuse(
    streams: list[FeatureStream],
    sampled_length: int = 48,
    clip_id: str = "",
    label: int | None = None,
) -> FeatureChunk:
    """Resample each stream to `sampled_length` rows and concatenate columns.

    Streams keep their declared order; each is sampled independently over
    its own row count with the uniform rule, so streams of different native
    frame counts line up.
    """
    if not streams:
        raise ValueError("fuse needs at least one stream")
    blocks = []
    layout = []
    for s in streams:
        idx = sample_indices(s.rows.shape[0], sampled_length)
        blocks.append(s.rows[idx])
        layout.append((s.name, s.per_frame_dim))
    return FeatureChunk(
        clip_id=clip_id,
        matrix=np.hstack(blocks),
        stream_layout=layout,
        label=label,
    )


def chunk_bytes(chunk: FeatureChunk) -> bytes:
    """Serialize a chunk to the binary NRCH container."""
    rows, dim = chunk.matrix.shape
    meta = json.dumps(
        {
            "clip_id": chunk.clip_id,
            "label": chunk.label,
            "stream_layout": [[n, d] for n, d in chunk.stream_layout],
        },
        sort_keys=True,
    ).encode("utf-8")
    header = CHUNK_MAGIC + struct.pack("<IIII", FORMAT_VERSION, rows, dim, len(meta))
    return header + meta + chunk.matrix.astype("<f4", copy=False).tobytes()


def load_chunk_bytes(data: bytes) -> FeatureChunk:
    if data[:4] != CHUNK_MAGIC:
        raise SchemaError("not a chunk cache file (bad magic)")
    if len(data) < 20:
        raise SchemaError("chunk file truncated header")
    version, rows, dim, meta_len = struct.unpack_from("<IIII", data, 4)
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported chunk format version {version}")
    meta_end = 20 + meta_len
    expected = meta_end + 4 * rows * dim
    if len(data) != expected:
        raise SchemaError(
            f"chunk file length {len(data)} does not match header ({expected})"
        )
    try:
        meta = json.loads(data[20:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"chunk metadata unreadable: {exc}") from None
    matrix = np.frombuffer(data, dtype="<f4", offset=meta_end).reshape(rows, dim)
    label = meta.get("label")
    return FeatureChunk(
        clip_id=meta.get("clip_id", ""),
        matrix=matrix.copy(),
        stream_layout=[(n, d) for n, d in meta.get("stream_layout", [])],
        label=None if label is None else int(label),
    )


def load_chunk_file(path) -> FeatureChunk:
    with open(path, "rb") as fh:
        return load_chunk_bytes(fh.read())


def save_chunk_file(chunk: FeatureChunk, path) -> None:
    with open(path, "wb") as fh:
        fh.write(chunk_bytes(chunk))
