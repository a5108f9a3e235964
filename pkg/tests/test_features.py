"""feature-fusion module: containers, reshape, and chunk assembly."""

import numpy as np
import pytest

from dancesig.errors import SchemaError
from dancesig.features import (
    FeatureChunk,
    FeatureStream,
    chunk_bytes,
    feature_bytes,
    fuse,
    layout_hash,
    load_chunk_bytes,
    load_feature_bytes,
    reshape_segment_features,
)


def stream(name, rows, dim, rng=None, seed=0):
    rng = rng or np.random.default_rng(seed)
    return FeatureStream(name=name, rows=rng.normal(size=(rows, dim)).astype(np.float32))


class TestFeatureFiles:
    def test_binary_roundtrip_bit_exact(self, rng):
        s = stream("inception", 48, 2048, rng)
        again = load_feature_bytes(feature_bytes(s), "inception")
        assert again.per_frame_dim == 2048
        np.testing.assert_array_equal(again.rows, s.rows)

    def test_kinetics_dim(self, rng):
        s = stream("kinetics", 48, 128, rng)
        assert load_feature_bytes(feature_bytes(s), "k").per_frame_dim == 128

    def test_text_variant(self):
        text = b"1.5 2.5 3.5\n4.5 5.5 6.5\n"
        s = load_feature_bytes(text, "t")
        np.testing.assert_array_equal(
            s.rows, np.array([[1.5, 2.5, 3.5], [4.5, 5.5, 6.5]], dtype=np.float32)
        )

    def test_text_ragged_rows(self):
        with pytest.raises(SchemaError, match="ragged"):
            load_feature_bytes(b"1 2 3\n4 5\n", "t")

    def test_nan_rejected_binary(self, rng):
        s = stream("x", 4, 3, rng)
        raw = bytearray(feature_bytes(s))
        raw[16:20] = np.float32("nan").tobytes()
        with pytest.raises(ValueError, match="non-finite"):
            load_feature_bytes(bytes(raw), "x")

    def test_nan_rejected_text(self):
        with pytest.raises(ValueError, match="non-finite"):
            load_feature_bytes(b"1.0 nan\n", "t")

    def test_truncated_binary(self, rng):
        raw = feature_bytes(stream("x", 4, 3, rng))
        with pytest.raises(SchemaError, match="length"):
            load_feature_bytes(raw[:-4], "x")

    def test_bad_version(self, rng):
        raw = bytearray(feature_bytes(stream("x", 2, 2, rng)))
        raw[4:8] = (99).to_bytes(4, "little")
        with pytest.raises(SchemaError, match="version"):
            load_feature_bytes(bytes(raw), "x")

    def test_empty_text(self):
        with pytest.raises(SchemaError, match="no rows"):
            load_feature_bytes(b"\n\n", "t")


class TestReshapeSegments:
    def test_one_segment(self, rng):
        seg = rng.normal(size=(1, 2048)).astype(np.float32)
        frames = reshape_segment_features(seg, 16)
        assert frames.shape == (16, 128)
        np.testing.assert_array_equal(frames[3], seg[0, 3 * 128 : 4 * 128])

    def test_three_segments_give_48_rows(self, rng):
        seg = rng.normal(size=(3, 2048)).astype(np.float32)
        assert reshape_segment_features(seg, 16).shape == (48, 128)

    def test_flatten_roundtrip(self, rng):
        seg = rng.normal(size=(5, 2048)).astype(np.float32)
        frames = reshape_segment_features(seg, 16)
        np.testing.assert_array_equal(frames.reshape(5, 2048), seg)

    def test_wrong_width(self, rng):
        with pytest.raises(SchemaError, match="divisible"):
            reshape_segment_features(rng.normal(size=(2, 2047)), 16)


class TestFuse:
    def test_full_descriptor_is_2251(self, rng):
        chunk = fuse(
            [
                stream("inception", 48, 2048, rng),
                stream("kinetics", 48, 128, rng),
                stream("pose", 48, 75, rng),
            ],
            sampled_length=48,
        )
        assert chunk.dim == 2251
        assert chunk.matrix.shape == (48, 2251)
        assert chunk.stream_layout == [
            ("inception", 2048),
            ("kinetics", 128),
            ("pose", 75),
        ]

    def test_pose_only_is_75(self, rng):
        chunk = fuse([stream("pose", 48, 75, rng)], sampled_length=48)
        assert chunk.dim == 75

    def test_identity_when_already_48(self, rng):
        s = stream("pose", 48, 75, rng)
        chunk = fuse([s], sampled_length=48)
        np.testing.assert_array_equal(chunk.matrix, s.rows)

    def test_blocks_bit_exact(self, rng):
        a = stream("inception", 48, 7, rng)
        b = stream("pose", 48, 3, rng)
        chunk = fuse([a, b], sampled_length=48)
        np.testing.assert_array_equal(chunk.column_block("inception"), a.rows)
        np.testing.assert_array_equal(chunk.column_block("pose"), b.rows)

    def test_streams_resampled_independently(self, rng):
        long = stream("inception", 96, 4, rng)
        short = stream("pose", 12, 2, rng)
        chunk = fuse([long, short], sampled_length=48)
        from dancesig.skeleton import sample_indices

        np.testing.assert_array_equal(
            chunk.column_block("inception"), long.rows[sample_indices(96, 48)]
        )
        np.testing.assert_array_equal(
            chunk.column_block("pose"), short.rows[sample_indices(12, 48)]
        )

    def test_offsets_partition(self, rng):
        chunk = fuse(
            [stream("a", 10, 3, rng), stream("b", 10, 5, rng), stream("c", 10, 2, rng)],
            sampled_length=4,
        )
        assert sum(d for _, d in chunk.stream_layout) == chunk.dim == 10

    def test_empty_list(self):
        with pytest.raises(ValueError):
            fuse([], sampled_length=48)


class TestChunkFiles:
    def test_roundtrip(self, rng):
        chunk = fuse(
            [stream("pose", 48, 75, rng)], sampled_length=48, clip_id="c1", label=4
        )
        again = load_chunk_bytes(chunk_bytes(chunk))
        assert again.clip_id == "c1"
        assert again.label == 4
        assert again.stream_layout == chunk.stream_layout
        np.testing.assert_array_equal(again.matrix, chunk.matrix)

    def test_unlabeled_roundtrip(self, rng):
        chunk = fuse([stream("pose", 8, 5, rng)], sampled_length=8, clip_id="u")
        assert load_chunk_bytes(chunk_bytes(chunk)).label is None

    def test_bad_magic(self, rng):
        raw = bytearray(chunk_bytes(fuse([stream("p", 4, 2, rng)], 4)))
        raw[:4] = b"XXXX"
        with pytest.raises(SchemaError, match="magic"):
            load_chunk_bytes(bytes(raw))

    def test_layout_hash_stable_and_sensitive(self):
        a = layout_hash([("inception", 2048), ("pose", 75)])
        assert a == layout_hash([("inception", 2048), ("pose", 75)])
        assert a != layout_hash([("pose", 75), ("inception", 2048)])
        assert a != layout_hash([("inception", 2048), ("pose", 76)])

    def test_chunk_layout_mismatch(self, rng):
        with pytest.raises(SchemaError, match="layout"):
            FeatureChunk(
                clip_id="bad",
                matrix=rng.normal(size=(4, 10)).astype(np.float32),
                stream_layout=[("pose", 9)],
            )
