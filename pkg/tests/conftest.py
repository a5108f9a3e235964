"""Shared fixture builders for the test suite."""

import numpy as np
import pytest

from dancesig.features import FeatureChunk
from dancesig.skeleton import NUM_JOINTS, SkeletonFrame, SkeletonSequence

# Coordinates are drawn on a dyadic grid so that adding a grid-aligned
# translation is exact in float64 and invariance checks can demand exact
# equality.
GRID = 2.0**-20
SPAN = 256.0


def dyadic_uniform(rng, low, high, size):
    """Uniform values on the dyadic grid in [low, high)."""
    n_cells = int(round((high - low) / GRID))
    return low + rng.integers(0, n_cells, size=size) * GRID


def random_frame(rng, frame_index=0):
    """A random 16-joint frame with a non-degenerate torso."""
    pos = dyadic_uniform(rng, 0.0, SPAN, (NUM_JOINTS, 2))
    # hip_center (7) to shoulder_center (9) must not collapse
    while np.hypot(*(pos[8] - pos[6])) < 1.0:
        pos[8] = dyadic_uniform(rng, 0.0, SPAN, 2)
    return SkeletonFrame(positions=pos, frame_index=frame_index)


def random_frame_pair(rng):
    """Two frames of the same skeleton with modest joint motion."""
    prev = random_frame(rng, frame_index=0)
    delta = dyadic_uniform(rng, -8.0, 8.0, (NUM_JOINTS, 2))
    curr = SkeletonFrame(positions=prev.positions + delta, frame_index=1)
    while np.hypot(*(curr.positions[8] - curr.positions[6])) < 1.0:
        curr.positions[8] = dyadic_uniform(rng, 0.0, SPAN, 2)
    return prev, curr


def walking_sequence(rng, n_frames, clip_id="clip", fps=25.0, label=None):
    """A clip whose joints drift smoothly frame to frame."""
    frames = [random_frame(rng, frame_index=0)]
    for t in range(1, n_frames):
        step = dyadic_uniform(rng, -2.0, 2.0, (NUM_JOINTS, 2))
        pos = frames[-1].positions + step
        frames.append(SkeletonFrame(positions=pos, frame_index=t))
    return SkeletonSequence(clip_id=clip_id, frames=frames, fps=fps, label=label)


class ChunkGenerator:
    """Synthetic separable chunk sets: one tight cluster per class.

    Class identity lives in the per-class mean row; noise_scale controls
    the cluster radius.  Fresh draws from the same generator share the
    class structure, so a held-out draw tests generalization.
    """

    def __init__(self, num_classes=6, dim=75, seq_len=48, spread=3.0,
                 noise_scale=0.05, means_seed=123):
        self.num_classes = num_classes
        self.dim = dim
        self.seq_len = seq_len
        self.noise_scale = noise_scale
        mean_rng = np.random.default_rng(means_seed)
        self.means = mean_rng.normal(0.0, spread, size=(num_classes, dim))

    def draw(self, per_class, draw_seed):
        rng = np.random.default_rng(draw_seed)
        chunks = []
        for c in range(self.num_classes):
            for k in range(per_class):
                matrix = self.means[c] + self.noise_scale * rng.normal(
                    size=(self.seq_len, self.dim)
                )
                chunks.append(
                    FeatureChunk(
                        clip_id=f"class{c}_sample{k}",
                        matrix=matrix.astype(np.float32),
                        stream_layout=[("pose", self.dim)],
                        label=c,
                    )
                )
        return chunks


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
