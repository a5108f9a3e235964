"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see a pass/fail line
per criterion.
"""

import math
import time

import numpy as np
import pytest

from conftest import ChunkGenerator, dyadic_uniform, random_frame_pair
from dancesig.checkpoint import load_checkpoint, save_checkpoint
from dancesig.errors import LayoutError
from dancesig.features import FeatureChunk, FeatureStream, fuse
from dancesig.metrics import (
    ConfusionMatrix,
    confusion_matrix,
    per_class_metrics,
    render_report,
)
from dancesig.model import (
    ChunkDataset,
    ModelConfig,
    SequenceClassifier,
    TrainConfig,
    TrainedModel,
    build_model,
    predict,
    train_classifier,
)
from dancesig.neural import (
    LstmParams,
    finite_difference_gradient,
    lstm_cell_forward,
    relative_error,
)
from dancesig.signature import SEGMENT_SIZES, pose_signature, wrap_angle
from dancesig.skeleton import SkeletonFrame


def report(n, name):
    print(f"\n[PASS] criterion {n}: {name}")


def test_criterion_01_pose_signature_invariances():
    started = time.perf_counter()
    rng = np.random.default_rng(11)
    for _ in range(200):
        prev, curr = random_frame_pair(rng)
        base = pose_signature(prev, curr)
        base_vec = base.vector

        # translation: exact equality entry for entry
        shift = dyadic_uniform(rng, -128.0, 128.0, 2)
        moved = pose_signature(
            SkeletonFrame(prev.positions + shift, 0),
            SkeletonFrame(curr.positions + shift, 1),
        ).vector
        np.testing.assert_array_equal(moved, base_vec)

        # uniform scaling: nothing moves more than 1e-9 relative
        s = float(rng.uniform(0.1, 10.0))
        scaled = pose_signature(
            SkeletonFrame(prev.positions * s, 0),
            SkeletonFrame(curr.positions * s, 1),
        ).vector
        np.testing.assert_allclose(scaled, base_vec, rtol=1e-9, atol=1e-12)

        # rotation: every pair angle and nonzero flow direction shifts by
        # exactly theta (wrapped); distances are unchanged
        theta = float(rng.uniform(-math.pi, math.pi))
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)],
             [math.sin(theta), math.cos(theta)]]
        )
        turned = pose_signature(
            SkeletonFrame(prev.positions @ rot.T, 0),
            SkeletonFrame(curr.positions @ rot.T, 1),
        )
        np.testing.assert_allclose(
            turned.pair_angles,
            wrap_angle(base.pair_angles + theta),
            rtol=1e-9, atol=1e-9,
        )
        moving = base.flow_directions != 0.0
        np.testing.assert_allclose(
            turned.flow_directions[moving],
            wrap_angle(base.flow_directions[moving] + theta),
            rtol=1e-9, atol=1e-9,
        )
        np.testing.assert_allclose(
            turned.radial_distances, base.radial_distances, rtol=1e-9
        )
        np.testing.assert_allclose(
            turned.symmetry_distances, base.symmetry_distances, rtol=1e-9
        )
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"invariance suite took {elapsed:.1f}s"
    report(1, f"pose-signature invariance suite (200 pairs, {elapsed:.2f}s)")


def test_criterion_02_dimensional_contract():
    rng = np.random.default_rng(2)
    prev, curr = random_frame_pair(rng)
    sig = pose_signature(prev, curr)
    sizes = [(name, len(getattr(sig, name))) for name, _ in SEGMENT_SIZES]
    assert sizes == list(SEGMENT_SIZES)
    assert [n for _, n in sizes] == [15, 8, 4, 32, 16]
    assert sig.vector.shape == (75,)

    streams = [
        FeatureStream("inception", rng.normal(size=(48, 2048)).astype(np.float32)),
        FeatureStream("kinetics", rng.normal(size=(48, 128)).astype(np.float32)),
        FeatureStream("pose", rng.normal(size=(48, 75)).astype(np.float32)),
    ]
    chunk = fuse(streams, sampled_length=48)
    assert chunk.dim == 2251
    report(2, "signature is 15/8/4/32/16 = 75; fused descriptor D = 2251")


def test_criterion_03_gradient_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(7)
    model = SequenceClassifier(
        input_dim=5, hidden_dim=4, dense1_dim=3, dense2_dim=2, num_classes=6,
        seed=3, dtype=np.float64,
    )
    # a 2-sample batch saturates batch norm at tiny epsilon (outputs are
    # exactly +-1), which hides upstream gradient signal from finite
    # differences; a loose epsilon keeps the check meaningful
    model.bn1.epsilon = 0.1
    model.bn2.epsilon = 0.1
    for tensor in model.params().values():
        tensor += rng.normal(0, 0.3, size=tensor.shape)
    X = rng.normal(size=(2, 3, 5))
    labels = np.array([1, 4])

    _, _, analytic = model.loss_and_grads(X, labels)

    def loss_fn():
        return model.loss(X, labels, mode="train", update_running=False)

    numeric = finite_difference_gradient(loss_fn, model.params(), step=1e-5)
    worst_name, worst = None, 0.0
    for name in analytic:
        err = relative_error(analytic[name], numeric[name])
        if err > worst:
            worst_name, worst = name, err
    assert worst < 1e-5, f"{worst_name}: {worst:.3e}"
    assert any(k.startswith("lstm.w_c") for k in analytic)  # peepholes covered
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    report(3, f"analytic vs finite-difference gradients, worst {worst:.2e} "
              f"({worst_name}, {elapsed:.1f}s)")


def test_criterion_04_lstm_closed_forms():
    H = 4
    p = LstmParams(
        W_x=np.zeros((4 * H, 3)), W_h=np.zeros((4 * H, H)), b=np.zeros(4 * H),
        w_ci=np.zeros(H), w_cf=np.zeros(H), w_co=np.zeros(H),
    )
    c_prev = np.array([0.4, -1.2, 2.0, 0.0])
    h, c, cache = lstm_cell_forward(np.ones(3), np.zeros(H), c_prev, p)
    for gate in ("i", "f", "o"):
        np.testing.assert_array_equal(cache[gate], np.full((1, H), 0.5))
    np.testing.assert_allclose(h, 0.5 * np.tanh(0.5 * c_prev), atol=1e-15)

    # independent scalar script for one cell step
    w = dict(wxi=0.3, whi=-0.4, wci=0.25, bi=0.1, wxf=-0.2, whf=0.5,
             wcf=-0.35, bf=0.9, wxc=0.7, whc=0.15, bc=-0.05, wxo=0.45,
             who=-0.6, wco=0.3, bo=0.2)
    ps = LstmParams(
        W_x=np.array([[w["wxi"]], [w["wxf"]], [w["wxc"]], [w["wxo"]]]),
        W_h=np.array([[w["whi"]], [w["whf"]], [w["whc"]], [w["who"]]]),
        b=np.array([w["bi"], w["bf"], w["bc"], w["bo"]]),
        w_ci=np.array([w["wci"]]), w_cf=np.array([w["wcf"]]),
        w_co=np.array([w["wco"]]),
    )
    x, h0, c0 = 0.8, -0.3, 0.6
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    i = sig(w["wxi"] * x + w["whi"] * h0 + w["wci"] * c0 + w["bi"])
    f = sig(w["wxf"] * x + w["whf"] * h0 + w["wcf"] * c0 + w["bf"])
    c_want = f * c0 + i * math.tanh(w["wxc"] * x + w["whc"] * h0 + w["bc"])
    o = sig(w["wxo"] * x + w["who"] * h0 + w["wco"] * c_want + w["bo"])
    h_want = o * math.tanh(c_want)
    h_got, c_got, _ = lstm_cell_forward(
        np.array([x]), np.array([h0]), np.array([c0]), ps
    )
    assert abs(h_got[0] - h_want) < 1e-12
    assert abs(c_got[0] - c_want) < 1e-12
    report(4, "zero-parameter gates are exactly 0.5; scalar cell matches the "
              "independent script to 1e-12")


def test_criterion_05_loss_values():
    from dancesig.neural import cross_entropy

    uniform = np.full((4, 6), 1.0 / 6.0)
    assert abs(cross_entropy(uniform, [0, 1, 2, 5]) - math.log(6.0)) < 1e-6

    perfect = np.zeros((3, 6))
    for n, c in enumerate([2, 0, 4]):
        perfect[n, c] = 1.0
    assert cross_entropy(perfect, [2, 0, 4]) <= 1e-6
    report(5, "uniform loss = ln 6 within 1e-6; perfect prediction <= 1e-6")


def test_criterion_06_overfit_synthetic():
    started = time.perf_counter()
    gen = ChunkGenerator(num_classes=6, dim=75, seq_len=48, spread=3.0,
                         noise_scale=0.05)
    fit = ChunkDataset.from_chunks(gen.draw(20, draw_seed=1))   # 6 x 20 chunks
    held = ChunkDataset.from_chunks(gen.draw(5, draw_seed=2))
    assert len(fit) == 120 and fit.X.shape[-1] == 75

    model = SequenceClassifier(75, 128, 32, 16, 6, seed=11)
    config = TrainConfig(  # stock training defaults
        learning_rate=1e-4, decay=1e-6, batch_size=32, max_epochs=100, seed=7,
    )
    model, history = train_classifier(model, fit, None, config)
    assert max(history["train_acc"]) == 1.0, history["train_acc"][-5:]
    _, held_acc = model.evaluate(held.X, held.y)
    assert held_acc >= 0.95, held_acc

    # evaluating the overfit model on its own train set reports 100.0
    names = ["Bharatnatyam", "Kathak", "Kuchipudi", "Manipuri",
             "Mohiniattam", "Odissi"]
    preds = [int(np.argmax(model.forward(x, mode="infer"))) for x in fit.X]
    train_report = per_class_metrics(confusion_matrix(preds, fit.y, names))
    assert train_report.average_accuracy == 100.0
    assert "100.00" in render_report(train_report, "text")

    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    first = next(i + 1 for i, a in enumerate(history["train_acc"]) if a == 1.0)
    report(6, f"overfit: 100% train by epoch {first}, train-set evaluation "
              f"100.0, held-out {held_acc:.2%} ({elapsed:.0f}s)")


def test_criterion_07_early_stopping():
    gen = ChunkGenerator(num_classes=2, dim=8, seq_len=4, noise_scale=0.05)
    fit = ChunkDataset.from_chunks(gen.draw(4, draw_seed=1))
    trace = [1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.1, 0.05]
    snapshots = {}
    model = SequenceClassifier(8, 16, 4, 2, 2, seed=5)
    model, history = train_classifier(
        model, fit, None,
        TrainConfig(max_epochs=100, patience=5, seed=7),
        val_metric_fn=lambda epoch, m: trace[epoch - 1],
        epoch_callback=lambda e, m, h: snapshots.__setitem__(e, m.copy_state()),
    )
    assert history["stopped_epoch"] == 7  # five straight non-improvements
    assert history["best_epoch"] == 2
    for name, tensor in model.state_tensors().items():
        np.testing.assert_array_equal(tensor, snapshots[2][name])

    # a never-improving tail cannot stop the run before max_epochs
    model2 = SequenceClassifier(8, 16, 4, 2, 2, seed=5)
    _, history2 = train_classifier(
        model2, fit, None, TrainConfig(max_epochs=8, patience=5, seed=7),
        val_metric_fn=lambda epoch, m: 1.0 / epoch,
    )
    assert history2["stopped_epoch"] == 8
    report(7, "patience-5 stop after epoch 7 with exact epoch-2 restoration")


def test_criterion_08_metrics_oracle():
    rng = np.random.default_rng(88)

    def brute_force(counts):
        C = len(counts)
        rows = []
        for c in range(C):
            col = sum(counts[r][c] for r in range(C))
            row = sum(counts[c])
            tp = counts[c][c]
            precision = tp / col if col else 0.0
            recall = tp / row if row else 0.0
            f1 = (2 * precision * recall / (precision + recall)
                  if precision + recall else 0.0)
            rows.append((precision, recall, f1, row))
        return rows

    for _ in range(50):
        C = int(rng.integers(2, 8))
        counts = rng.integers(0, 25, size=(C, C))
        rep = per_class_metrics(
            ConfusionMatrix(counts, [f"c{i}" for i in range(C)])
        )
        for m, (p, r, f1, s) in zip(rep.per_class, brute_force(counts.tolist())):
            assert abs(m.precision - p) < 1e-12
            assert abs(m.recall - r) < 1e-12
            assert abs(m.f1 - f1) < 1e-12
            assert m.support == s
            assert m.class_accuracy == 100.0 * m.recall  # exact identity
        total = counts.sum()
        if total:
            assert rep.average_accuracy == 100.0 * np.trace(counts) / total

    names = ["Bharatnatyam", "Kathak", "Kuchipudi", "Manipuri",
             "Mohiniattam", "Odissi"]
    preds = rng.integers(0, 6, 200)
    labels = rng.integers(0, 6, 200)
    text = render_report(per_class_metrics(confusion_matrix(preds, labels, names)))
    head = text.splitlines()[0]
    for column in ("Precision", "Recall", "F1-score", "Support", "Class Accuracy"):
        assert column in head
    assert any(line.startswith("Average") for line in text.splitlines())
    report(8, "metrics match brute force to 1e-12; identities exact; "
              "report has the full column set plus an Average row")


def test_criterion_09_train_determinism(tmp_path):
    from conftest import walking_sequence
    from dancesig.cli import main
    from dancesig.skeleton import DatasetManifest, ManifestEntry, serialize_skeleton

    rng = np.random.default_rng(99)
    (tmp_path / "clips").mkdir()
    entries = []
    for c in range(6):
        for k in range(3):
            clip_id = f"c{c}_{k}"
            seq = walking_sequence(rng, 8, clip_id=clip_id)
            for f in seq.frames:
                f.positions += 40.0 * c
            (tmp_path / "clips" / f"{clip_id}.skel").write_bytes(
                serialize_skeleton(seq)
            )
            entries.append(ManifestEntry(label=c, skeleton=f"clips/{clip_id}.skel"))
    manifest = DatasetManifest(
        class_names=["Bharatnatyam", "Kathak", "Kuchipudi", "Manipuri",
                     "Mohiniattam", "Odissi"],
        entries=entries,
    )
    (tmp_path / "manifest.json").write_text(manifest.to_json())

    args = ["train", "--manifest", str(tmp_path / "manifest.json"),
            "--streams", "pose", "--sample-len", "8", "--hidden", "8",
            "--max-epochs", "3", "--val-frac", "0.34", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "run_a")]) == 0
    assert main(args + ["--out", str(tmp_path / "run_b")]) == 0
    ckpt_a = (tmp_path / "run_a" / "model.nrck").read_bytes()
    ckpt_b = (tmp_path / "run_b" / "model.nrck").read_bytes()
    hist_a = (tmp_path / "run_a" / "history.json").read_bytes()
    hist_b = (tmp_path / "run_b" / "history.json").read_bytes()
    assert ckpt_a == ckpt_b
    assert hist_a == hist_b
    report(9, "train --seed 7 twice: byte-identical checkpoint and history")


def test_criterion_10_persistence(tmp_path):
    rng = np.random.default_rng(10)
    config = ModelConfig(input_dim=9, lstm_hidden=16)
    classifier = build_model(config, seed=6)
    for t in classifier.state_tensors().values():
        t += rng.normal(0, 0.1, t.shape).astype(np.float32)
    trained = TrainedModel(
        classifier=classifier, config=config,
        class_names=list("abcdef"),
        stream_layout=[("pose", 9)],
        history={"train_loss": [1.0], "train_acc": [0.5], "val_loss": [],
                 "val_acc": [], "best_epoch": None, "stopped_epoch": 1,
                 "monitor": "loss"},
        seed=6,
    )
    chunk = FeatureChunk("x", rng.normal(size=(5, 9)).astype(np.float32),
                         [("pose", 9)])
    before_cls, before_probs = predict(trained, chunk)

    path = tmp_path / "model.nrck"
    save_checkpoint(trained, path)
    loaded = load_checkpoint(path)
    for name, tensor in trained.classifier.state_tensors().items():
        np.testing.assert_array_equal(
            loaded.classifier.state_tensors()[name], tensor
        )
    after_cls, after_probs = predict(loaded, chunk)
    assert after_cls == before_cls
    np.testing.assert_array_equal(after_probs, before_probs)

    wrong_layout = FeatureChunk(
        "y", rng.normal(size=(5, 9)).astype(np.float32), [("kinetics", 9)]
    )
    with pytest.raises(LayoutError):
        predict(loaded, wrong_layout)
    report(10, "checkpoint round-trips bit-exactly; predictions identical; "
               "layout-hash mismatch rejected")
