"""Command-line entry point: signature, fuse, split, train, evaluate,
predict, inspect.

Every subcommand writes a config_echo.json with the effective settings so
a run can be reproduced from its output directory.  Exit codes: 0 success,
2 bad input/config, 3 partial failure (some clips skipped), 4 training
abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import DanceSigError, LayoutError, TrainingError
from .features import (
    CANONICAL_STREAMS,
    FeatureStream,
    fuse,
    load_chunk_file,
    load_feature_file,
    reshape_segment_features,
    save_chunk_file,
    save_feature_file,
)
from .metrics import (
    confusion_matrix,
    per_class_metrics,
    render_confusion,
    render_report,
)
from .model import (
    ChunkDataset,
    ModelConfig,
    TrainConfig,
    TrainedModel,
    build_model,
    predict,
    train_classifier,
)
from .neural import active_backend
from .signature import signature_sequence
from .skeleton import (
    DatasetManifest,
    ManifestEntry,
    carve_validation,
    load_manifest,
    parse_skeleton_file,
    sample_frames,
    save_manifest,
    split_dataset,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARTIAL = 3
EXIT_TRAINING = 4


def _echo_config(out_dir: Path, subcommand: str, settings: dict) -> None:
    doc = {
        "subcommand": subcommand,
        "version": __version__,
        "kernel_backend": active_backend(),
        "settings": settings,
    }
    (out_dir / "config_echo.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _pose_stream_from_skeleton(path: Path, sample_len: int) -> FeatureStream:
    seq = parse_skeleton_file(path.read_bytes(), clip_id=path.stem)
    idx = sample_frames(seq, sample_len)
    rows = signature_sequence(seq, idx).astype(np.float32)
    return FeatureStream(name="pose", rows=rows)


def _entry_stream(
    entry: ManifestEntry, base: Path, name: str, sample_len: int, segment_streams
) -> FeatureStream:
    if name == "pose" and name not in entry.features:
        if entry.skeleton is None:
            raise LayoutError(
                f"entry {entry.clip_id!r}: no 'pose' feature file and no skeleton"
            )
        return _pose_stream_from_skeleton(base / entry.skeleton, sample_len)
    if name not in entry.features:
        raise LayoutError(f"entry {entry.clip_id!r}: missing stream {name!r}")
    stream = load_feature_file(base / entry.features[name], name)
    if name in segment_streams:
        stream = FeatureStream(
            name=name, rows=reshape_segment_features(stream.rows, 16)
        )
    return stream


def _entry_chunk(entry, base, streams, sample_len, segment_streams):
    loaded = [
        _entry_stream(entry, base, n, sample_len, segment_streams) for n in streams
    ]
    return fuse(
        loaded, sampled_length=sample_len, clip_id=entry.clip_id, label=entry.label
    )


def _auto_streams(manifest: DatasetManifest) -> list[str]:
    """Canonical streams available on every entry (pose counts if a
    skeleton file can stand in for it)."""
    chosen = []
    for name in CANONICAL_STREAMS:
        def has(e):
            if name in e.features:
                return True
            return name == "pose" and e.skeleton is not None
        if all(has(e) for e in manifest.entries):
            chosen.append(name)
    if not chosen:
        raise LayoutError("no stream is available on every manifest entry")
    return chosen


def _parse_streams(arg: str, manifest: DatasetManifest | None) -> list[str]:
    if arg == "auto":
        if manifest is None:
            raise LayoutError("--streams auto needs a manifest")
        return _auto_streams(manifest)
    streams = [s.strip() for s in arg.split(",") if s.strip()]
    if not streams:
        raise LayoutError(f"no stream names in {arg!r}")
    return streams


def _manifest_chunks(manifest, base, streams, sample_len, segment_streams):
    return [
        _entry_chunk(e, base, streams, sample_len, segment_streams)
        for e in manifest.entries
    ]


def _rebase_manifest(manifest: DatasetManifest, base: Path, out: Path) -> DatasetManifest:
    """Rewrite entry paths so a manifest saved under `out` still resolves."""
    import os

    def rel(p: str) -> str:
        return Path(os.path.relpath(base / p, out)).as_posix()

    entries = [
        ManifestEntry(
            label=e.label,
            skeleton=None if e.skeleton is None else rel(e.skeleton),
            features={k: rel(v) for k, v in e.features.items()},
            clip_id=e.clip_id,
        )
        for e in manifest.entries
    ]
    return DatasetManifest(class_names=list(manifest.class_names), entries=entries)


# ----------------------------------------------------------- subcommands --
def cmd_signature(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    failures = []
    for path_str in args.skeletons:
        path = Path(path_str)
        try:
            stream = _pose_stream_from_skeleton(path, args.sample_len)
        except (DanceSigError, ValueError, OSError) as exc:
            failures.append(path_str)
            print(f"error: {path_str}: {exc}", file=sys.stderr)
            continue
        fname = f"{path.stem}.pose.nrft"
        save_feature_file(stream, out / fname)
        index[path.stem] = {
            "file": fname,
            "rows": int(stream.rows.shape[0]),
            "dim": int(stream.rows.shape[1]),
        }
    (out / "index.json").write_text(
        json.dumps({"clips": index}, indent=2, sort_keys=True) + "\n"
    )
    _echo_config(out, "signature", {
        "skeletons": list(args.skeletons), "out": str(args.out),
        "sample_len": args.sample_len,
    })
    if failures:
        print(
            f"{len(index)} clip(s) written, {len(failures)} failed", file=sys.stderr
        )
        return EXIT_PARTIAL
    print(f"{len(index)} clip(s) written to {out}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    manifest = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    streams = _parse_streams(args.streams, manifest)
    segment_streams = set(args.segment_stream or [])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    failures = []
    for entry in manifest.entries:
        try:
            chunk = _entry_chunk(entry, base, streams, args.sample_len, segment_streams)
        except (DanceSigError, ValueError, OSError) as exc:
            failures.append(entry.clip_id)
            print(f"error: {entry.clip_id}: {exc}", file=sys.stderr)
            continue
        fname = f"{entry.clip_id}.chunk.nrch"
        save_chunk_file(chunk, out / fname)
        index[entry.clip_id] = {
            "file": fname, "label": entry.label, "dim": chunk.dim,
        }
    (out / "index.json").write_text(
        json.dumps(
            {"clips": index, "streams": streams}, indent=2, sort_keys=True
        ) + "\n"
    )
    _echo_config(out, "fuse", {
        "manifest": str(args.manifest), "out": str(args.out),
        "streams": streams, "sample_len": args.sample_len,
        "segment_streams": sorted(segment_streams),
    })
    if failures:
        print(f"{len(index)} chunk(s) written, {len(failures)} failed", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"{len(index)} chunk(s) written to {out}")
    return EXIT_OK


def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = Path(args.manifest).parent
    train, test = split_dataset(manifest, args.train_frac, args.seed)
    save_manifest(_rebase_manifest(train, base, out), out / "train_manifest.json")
    save_manifest(_rebase_manifest(test, base, out), out / "test_manifest.json")
    _echo_config(out, "split", {
        "manifest": str(args.manifest), "out": str(args.out),
        "train_frac": args.train_frac, "seed": args.seed,
    })
    print(
        f"split {len(manifest.entries)} entries -> "
        f"{len(train.entries)} train / {len(test.entries)} test"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    streams = _parse_streams(args.streams, manifest)
    segment_streams = set(args.segment_stream or [])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    train_manifest, test_manifest = split_dataset(
        manifest, args.train_frac, args.seed
    )
    fit_manifest, val_manifest = carve_validation(
        train_manifest, args.val_frac, args.seed + 1
    )
    fit = ChunkDataset.from_chunks(
        _manifest_chunks(fit_manifest, base, streams, args.sample_len, segment_streams)
    )
    validation = None
    if val_manifest.entries:
        validation = ChunkDataset.from_chunks(
            _manifest_chunks(
                val_manifest, base, streams, args.sample_len, segment_streams
            )
        )

    model_config = ModelConfig(
        input_dim=fit.X.shape[-1],
        lstm_hidden=args.hidden,
        num_classes=len(manifest.class_names),
        activation=args.activation,
        sequence_length=args.sample_len,
        peephole=args.peephole,
    )
    train_config = TrainConfig(
        learning_rate=args.lr,
        decay=args.decay,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
    )
    classifier = build_model(model_config, seed=args.seed)
    classifier, history = train_classifier(classifier, fit, validation, train_config)
    trained = TrainedModel(
        classifier=classifier,
        config=model_config,
        class_names=list(manifest.class_names),
        stream_layout=list(fit.stream_layout),
        history=history,
        seed=args.seed,
    )
    save_checkpoint(trained, out / "model.nrck")
    (out / "history.json").write_text(
        json.dumps(history, indent=2, sort_keys=True) + "\n"
    )
    for mani, name in (
        (train_manifest, "train_manifest.json"),
        (test_manifest, "test_manifest.json"),
        (fit_manifest, "fit_manifest.json"),
        (val_manifest, "val_manifest.json"),
    ):
        save_manifest(_rebase_manifest(mani, base, out), out / name)
    _echo_config(out, "train", {
        "manifest": str(args.manifest), "out": str(args.out),
        "streams": streams, "segment_streams": sorted(segment_streams),
        "sample_len": args.sample_len, "train_frac": args.train_frac,
        "val_frac": args.val_frac, "model": model_config.to_dict(),
        "train": train_config.to_dict(),
    })
    best = history["best_epoch"]
    print(
        f"trained {history['stopped_epoch']} epoch(s)"
        + (f", best epoch {best}" if best else "")
        + f"; checkpoint: {out / 'model.nrck'}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    trained = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    streams = [name for name, _ in trained.stream_layout]
    segment_streams = set(args.segment_stream or [])
    sample_len = trained.config.sequence_length
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    chunks = _manifest_chunks(manifest, base, streams, sample_len, segment_streams)
    predictions = []
    labels = []
    for chunk in chunks:
        cls, _ = predict(trained, chunk)
        predictions.append(cls)
        labels.append(chunk.label)
    cm = confusion_matrix(predictions, labels, trained.class_names)
    report = per_class_metrics(cm, source=str(args.checkpoint))
    (out / "report.txt").write_text(render_report(report, "text"))
    (out / "report.json").write_text(render_report(report, "json"))
    (out / "confusion_matrix.txt").write_text(render_confusion(cm))
    _echo_config(out, "evaluate", {
        "checkpoint": str(args.checkpoint), "manifest": str(args.manifest),
        "out": str(args.out), "streams": streams,
        "segment_streams": sorted(segment_streams), "sample_len": sample_len,
    })
    print(render_report(report, "text"))
    return EXIT_OK


def _predict_input_chunk(args, trained):
    sample_len = trained.config.sequence_length
    if args.chunk:
        return load_chunk_file(args.chunk)
    layout_names = [name for name, _ in trained.stream_layout]
    if args.skeleton:
        if layout_names != ["pose"]:
            raise LayoutError(
                f"checkpoint needs streams {layout_names}; a skeleton file "
                "alone provides only 'pose'"
            )
        stream = _pose_stream_from_skeleton(Path(args.skeleton), sample_len)
        return fuse([stream], sample_len, clip_id=Path(args.skeleton).stem)
    if args.features:
        provided = {}
        for spec in args.features:
            if "=" not in spec:
                raise LayoutError(f"--features wants name=path, got {spec!r}")
            name, _, path = spec.partition("=")
            provided[name] = path
        streams = []
        for name in layout_names:
            if name not in provided:
                raise LayoutError(f"missing stream {name!r} required by checkpoint")
            streams.append(load_feature_file(Path(provided[name]), name))
        return fuse(streams, sample_len, clip_id="input")
    raise LayoutError("predict needs --chunk, --skeleton, or --features")


def cmd_predict(args) -> int:
    trained = load_checkpoint(args.checkpoint)
    chunk = _predict_input_chunk(args, trained)
    cls, probs = predict(trained, chunk)
    print(f"predicted: {trained.class_names[cls]}")
    for name, p in zip(trained.class_names, probs):
        print(f"  {name:<16} {p:.6f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    path = Path(args.path)
    data = path.read_bytes()
    if data[:4] == b"NRCK":
        trained = load_checkpoint(path)
        print(f"checkpoint {path}")
        print(f"  classes: {', '.join(trained.class_names)}")
        print(f"  layout:  {trained.stream_layout} (hash {trained.layout_hash[:12]})")
        print(f"  config:  {trained.config.to_dict()}")
        hist = trained.history
        if hist.get("train_loss"):
            print(
                f"  history: {len(hist['train_loss'])} epoch(s), "
                f"best {hist.get('best_epoch')}, "
                f"final train acc {hist['train_acc'][-1]:.3f}"
            )
        n_params = sum(
            t.size for t in trained.classifier.params().values()
        )
        print(f"  parameters: {n_params}")
    elif data[:4] == b"NRCH":
        chunk = load_chunk_file(path)
        print(f"chunk {path}")
        print(f"  clip: {chunk.clip_id!r}  label: {chunk.label}")
        print(f"  matrix: {chunk.matrix.shape}  layout: {chunk.stream_layout}")
    elif data[:4] == b"NRFT":
        stream = load_feature_file(path)
        print(f"feature file {path}")
        print(f"  rows: {stream.rows.shape[0]}  dim: {stream.per_frame_dim}")
    else:
        manifest = load_manifest(path)
        print(f"manifest {path}")
        print(f"  classes: {', '.join(manifest.class_names)}")
        print(f"  entries: {len(manifest.entries)}  per-class: {manifest.class_counts()}")
    return EXIT_OK


# ------------------------------------------------------------ arg parser --
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dancesig",
        description="Pose-signature extraction and LSTM dance-form classification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("signature", help="skeleton clips -> pose feature files")
    p.add_argument("skeletons", nargs="+", help="skeleton text files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sample-len", type=int, default=48, dest="sample_len")
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("fuse", help="manifest -> fused chunk cache files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--streams", default="auto",
                   help="comma list (inception,kinetics,pose) or 'auto'")
    p.add_argument("--segment-stream", action="append", dest="segment_stream",
                   help="stream whose files hold 16-frame segment vectors")
    p.add_argument("--sample-len", type=int, default=48, dest="sample_len")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("split", help="stratified train/test manifests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-frac", type=float, default=0.7, dest="train_frac")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="split, fuse, and train a classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--streams", default="auto")
    p.add_argument("--segment-stream", action="append", dest="segment_stream")
    p.add_argument("--sample-len", type=int, default=48, dest="sample_len")
    p.add_argument("--train-frac", type=float, default=0.7, dest="train_frac")
    p.add_argument("--val-frac", type=float, default=0.1, dest="val_frac")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--activation", default="relu", choices=["relu", "tanh"])
    p.add_argument("--peephole", default="diagonal", choices=["diagonal", "full"])
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--decay", type=float, default=1e-6)
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--max-epochs", type=int, default=100, dest="max_epochs")
    p.add_argument("--patience", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="report metrics of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--segment-stream", action="append", dest="segment_stream")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one clip")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--chunk", help="fused .nrch chunk file")
    p.add_argument("--skeleton", help="skeleton text file (pose-only models)")
    p.add_argument("--features", nargs="+",
                   help="name=path pairs for each stream the model needs")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="describe a dancesig file")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (DanceSigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
