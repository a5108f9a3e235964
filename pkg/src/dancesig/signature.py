"""Per-frame 75-D pose signature from 2D anchor joints.

Layout of the 75 entries, in this fixed order:

    [ 0:15)  radial_distances    distance from hip_center to every other
                                 joint (ascending joint index), / scale
    [15:23)  pair_angles         atan2 angle of the a->b segment for the
                                 8 anchor pairs below, radians in (-pi, pi]
    [23:27)  symmetry_distances  leg pairs {1,6},{2,5} and hand pairs
                                 {11,16},{12,15}, / scale
    [27:59)  flow_vectors        per-joint (dx, dy) to the previous sampled
                                 frame, / scale, joint-major
    [59:75)  flow_directions     atan2 of each joint's flow, 0 when still

All distances are normalized by the torso length (hip_center to
shoulder_center), falling back to the joint bounding-box diagonal for
degenerate torsos, so the signature is invariant to translation and
uniform scaling of the image.  Angles use the pixel convention (y grows
downward); rotating the image by theta shifts every angle by theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoseError
from .skeleton import NUM_JOINTS, SkeletonFrame, SkeletonSequence

# 1-based joint indices of the fixed feature definitions.
REFERENCE_JOINT = 7  # hip_center
TORSO_TOP_JOINT = 9  # shoulder_center
ANGLE_PAIRS = ((1, 3), (2, 7), (4, 6), (5, 7), (11, 13), (9, 12), (9, 15), (14, 16))
SYMMETRY_PAIRS = ((1, 6), (2, 5), (11, 16), (12, 15))

SEGMENT_SIZES = (
    ("radial_distances", 15),
    ("pair_angles", 8),
    ("symmetry_distances", 4),
    ("flow_vectors", 32),
    ("flow_directions", 16),
)
SIGNATURE_DIM = 75

TORSO_EPS = 1e-6  # px; below this the torso is considered degenerate
FLOW_EPS = 1e-9  # on normalized flow magnitude; below this direction = 0


@dataclass(frozen=True)
class NormalizationScale:
    """Pixel length used to normalize all distances of one frame."""

    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive: {self.scale}")


@dataclass
class PoseSignature:
    """One frame's 75-D signature, split into its named segments."""

    radial_distances: np.ndarray  # (15,)
    pair_angles: np.ndarray  # (8,)
    symmetry_distances: np.ndarray  # (4,)
    flow_vectors: np.ndarray  # (32,) joint-major (dx, dy)
    flow_directions: np.ndarray  # (16,)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.radial_distances,
                self.pair_angles,
                self.symmetry_distances,
                self.flow_vectors,
                self.flow_directions,
            ]
        )


def wrap_angle(a):
    """Wrap radians into (-pi, pi]."""
    r = np.mod(a, 2.0 * np.pi)  # [0, 2pi)
    return np.where(r > np.pi, r - 2.0 * np.pi, r)


def reference_scale(frame: SkeletonFrame) -> NormalizationScale:
    """Torso length of a frame, with bounding-box-diagonal fallback."""
    p = frame.positions
    torso = float(np.hypot(*(p[TORSO_TOP_JOINT - 1] - p[REFERENCE_JOINT - 1])))
    if torso >= TORSO_EPS:
        return NormalizationScale(torso)
    span = p.max(axis=0) - p.min(axis=0)
    diagonal = float(np.hypot(span[0], span[1]))
    if diagonal >= TORSO_EPS:
        return NormalizationScale(diagonal)
    raise DegeneratePoseError(
        f"frame {frame.frame_index}: all joints coincide; no usable scale"
    )


def radial_distances(frame: SkeletonFrame, scale: NormalizationScale) -> np.ndarray:
    """Normalized Euclidean distance from hip_center to every other joint."""
    p = frame.positions
    ref = p[REFERENCE_JOINT - 1]
    others = np.delete(np.arange(NUM_JOINTS), REFERENCE_JOINT - 1)
    diff = p[others] - ref
    return np.hypot(diff[:, 0], diff[:, 1]) / scale.scale


def pair_angles(frame: SkeletonFrame) -> np.ndarray:
    """Angle of the a->b segment for each anchor pair, 0 for coincident pairs."""
    p = frame.positions
    out = np.zeros(len(ANGLE_PAIRS), dtype=np.float64)
    for k, (a, b) in enumerate(ANGLE_PAIRS):
        dx, dy = p[b - 1] - p[a - 1]
        if dx == 0.0 and dy == 0.0:
            continue
        out[k] = wrap_angle(np.arctan2(dy, dx))
    return out


def symmetry_distances(frame: SkeletonFrame, scale: NormalizationScale) -> np.ndarray:
    """Normalized distances of the left/right leg and hand joint pairs."""
    p = frame.positions
    out = np.empty(len(SYMMETRY_PAIRS), dtype=np.float64)
    for k, (a, b) in enumerate(SYMMETRY_PAIRS):
        dx, dy = p[b - 1] - p[a - 1]
        out[k] = np.hypot(dx, dy) / scale.scale
    return out


def joint_flow(
    prev: SkeletonFrame | None,
    curr: SkeletonFrame,
    scale: NormalizationScale,
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized per-joint displacement to the previous sampled frame.

    Returns (flow_vectors, flow_directions).  Both are all-zero for the
    first frame; a joint whose normalized displacement is below FLOW_EPS
    gets direction 0.
    """
    if prev is None:
        return (
            np.zeros(2 * NUM_JOINTS, dtype=np.float64),
            np.zeros(NUM_JOINTS, dtype=np.float64),
        )
    delta = (curr.positions - prev.positions) / scale.scale
    magnitude = np.hypot(delta[:, 0], delta[:, 1])
    directions = np.where(
        magnitude < FLOW_EPS, 0.0, wrap_angle(np.arctan2(delta[:, 1], delta[:, 0]))
    )
    return delta.reshape(-1).copy(), directions


def pose_signature(prev: SkeletonFrame | None, curr: SkeletonFrame) -> PoseSignature:
    """Full 75-D signature of a frame given its previous sampled frame."""
    scale = reference_scale(curr)
    flow_vec, flow_dir = joint_flow(prev, curr, scale)
    return PoseSignature(
        radial_distances=radial_distances(curr, scale),
        pair_angles=pair_angles(curr),
        symmetry_distances=symmetry_distances(curr, scale),
        flow_vectors=flow_vec,
        flow_directions=flow_dir,
    )


def signature_sequence(sequence: SkeletonSequence, indices) -> np.ndarray:
    """Signatures of the sampled frames as a (len(indices), 75) matrix.

    Flow is computed between *sampled* neighbors, so repeated indices
    (short clips) yield zero flow on the repeated rows.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("no frame indices to extract")
    if indices.min() < 0 or indices.max() >= len(sequence):
        raise IndexError(
            f"clip {sequence.clip_id!r}: sampled index out of range 0..{len(sequence) - 1}"
        )
    rows = np.empty((indices.size, SIGNATURE_DIM), dtype=np.float64)
    prev = None
    for t, idx in enumerate(indices):
        curr = sequence.frames[idx]
        rows[t] = pose_signature(prev, curr).vector
        prev = curr
    return rows
