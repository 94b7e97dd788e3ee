"""Command-line entry points.

Subcommands cover the pipeline end to end: ingest, synth, features,
augment, train, detect, evaluate, report, plot. Global flags (--config,
--seed, --out, --quiet) attach to every subcommand; values from a
`key = value` config file fill in whatever the command line leaves unset.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._parallel import parallel_map
from .annotations import parse_annotations, write_annotations
from .audio import load_wav, save_wav
from .augment import augment_amplitude
from .cache import save_features
from .checkpoint import load_checkpoint, save_checkpoint
from .chroma import chromagram
from .corpus import build_index, parse_config_text, write_meta
from .errors import DataError, NumericalError
from .estimators import NeuralDetector, RuleBasedDetector
from .events import annotations_to_events, frames_to_events
from .features import log_compress, rms_energy, tonic_normalize
from .frames import resample_frames
from .pairs import align_pair, load_pair
from .pipeline import (
    FRAME_HOP,
    evaluate_probs,
    pair_features,
    prepare_chunks,
)
from .pitch import extract_pitch
from .plotsvg import plot_detection
from .reporting import (
    parse_csv_report,
    render_csv_report,
    render_manifest,
    render_text_report,
    rows_from_report,
)
from .rules import format_threshold
from .splits import make_splits
from .standardize import Standardizer
from .synth import load_corpus_recipe, write_synth_corpus
from .training import predict as nn_predict

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

MODELS = ("rb", "cnn", "tcn")
MISTAKE_CLASSES_CLI = ("F", "A")
FEATURE_KINDS_CLI = ("contour", "chroma")
UNVOICED_SENTINEL = -1.0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Validated knobs shared by the train/evaluate pipelines."""

    root: Path
    mistake_class: str = "F"
    feature_kind: str = "contour"
    model: str = "rb"
    scenario: int = 1
    frame_collar: float = 0.080
    event_collar: float = 0.200
    high: float = 0.6
    low: float = 0.4
    min_dur: float = 0.100
    merge_gap: float = 0.050
    seed: int = 0
    out_dir: Path | None = None

    def __post_init__(self) -> None:
        if not self.root.is_dir():
            raise DataError(f"corpus root {self.root} is not a directory")
        if self.mistake_class not in MISTAKE_CLASSES_CLI:
            raise _UsageError(f"mistake class must be F or A, got {self.mistake_class}")
        if self.feature_kind not in FEATURE_KINDS_CLI:
            raise _UsageError(f"feature kind must be contour or chroma")
        if self.model not in MODELS:
            raise _UsageError(f"model must be one of {MODELS}")
        if self.scenario not in (1, 2, 3, 4):
            raise _UsageError(f"scenario must be 1..4, got {self.scenario}")

    @property
    def collar_c(self) -> int:
        return int(round(self.frame_collar / FRAME_HOP))


def _load_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    path = Path(args.config)
    if not path.is_file():
        raise DataError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(encoding="utf-8"))


def _opt(args, config: dict, name: str, default, cast):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        try:
            return cast(config[name])
        except ValueError:
            raise DataError(f"config key {name!r} has invalid value {config[name]!r}")
    return default


def _seed(args, config) -> int:
    return _opt(args, config, "seed", 0, int)


def _out_dir(args, config, required: bool = True) -> Path | None:
    out = _opt(args, config, "out", None, str)
    if out is None:
        if required:
            raise _UsageError("--out is required for this command")
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _run_config(args, config, require_out: bool = True) -> RunConfig:
    return RunConfig(
        root=Path(args.root),
        mistake_class=_opt(args, config, "mistake_class", "F", str),
        feature_kind=_opt(args, config, "feature", "contour", str),
        model=_opt(args, config, "model", "rb", str),
        scenario=_opt(args, config, "scenario", 1, int),
        frame_collar=_opt(args, config, "frame_collar", 0.080, float),
        event_collar=_opt(args, config, "event_collar", 0.200, float),
        high=_opt(args, config, "high", 0.6, float),
        low=_opt(args, config, "low", 0.4, float),
        min_dur=_opt(args, config, "min_dur", 0.100, float),
        merge_gap=_opt(args, config, "merge_gap", 0.050, float),
        seed=_seed(args, config),
        out_dir=_out_dir(args, config, required=require_out),
    )


def cmd_ingest(args) -> int:
    config = _load_config(args)
    index = build_index(args.root)
    for warning in index.warnings:
        _say(args, f"warning: {warning}")
    _say(
        args,
        f"teachers {len(index.teachers)} learners {len(index.learner_ids())} "
        f"pairs {len(index)}",
    )
    out = _out_dir(args, config, required=False)
    if out is not None:
        lines = [
            f"{k[0]}\t{k[1]}\t{index.pairing[k]}" for k in index.pair_keys()
        ]
        (out / "pairs.txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
        _say(args, f"wrote {out / 'pairs.txt'}")
    return EXIT_OK


def cmd_synth(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    recipe = load_corpus_recipe(args.recipe)
    written = write_synth_corpus(out, recipe, seed=_seed(args, config))
    _say(args, f"wrote {len(written)} recording directories under {out}")
    return EXIT_OK


def _pair_series(pair, kind: str):
    series = {}
    for role, rec in (("teacher", pair.teacher), ("learner", pair.learner)):
        contour = extract_pitch(rec.clip, hop=FRAME_HOP)
        series[f"{role}_pitch_norm"] = tonic_normalize(contour, rec.meta.tonic)
        series[f"{role}_log_energy"] = log_compress(rms_energy(rec.clip, hop=FRAME_HOP))
        if kind == "chroma":
            n_target = series[f"{role}_pitch_norm"].n_frames
            series[f"{role}_chroma"] = resample_frames(
                chromagram(rec.clip, rec.meta.tonic), FRAME_HOP, n_frames=n_target
            )
    return series


def cmd_features(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    kind = _opt(args, config, "feature", "contour", str)
    if kind not in FEATURE_KINDS_CLI:
        raise _UsageError("feature kind must be contour or chroma")
    index = build_index(args.root)

    def one(key):
        pair = align_pair(load_pair(index, key))
        series = _pair_series(pair, kind)
        path = out / f"{key[0]}__{key[1]}.npz"
        save_features(
            path,
            series,
            extra={"learner": key[0], "lesson": key[1], "kind": kind},
        )
        return path

    paths = parallel_map(one, index.pair_keys())
    for path in paths:
        _say(args, f"wrote {path}")
    return EXIT_OK


def cmd_augment(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    count = _opt(args, config, "count", 1, int)
    seed = _seed(args, config)
    index = build_index(args.root)
    if not index.learners:
        raise DataError(f"no learner recordings under {args.root}")

    for lesson_id, entry in sorted(index.teachers.items()):
        dest = out / "teachers" / lesson_id
        dest.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(entry.audio_path, dest / "audio.wav")
        write_meta(dest / "meta.cfg", entry.meta)

    for i, key in enumerate(index.pair_keys()):
        pair = load_pair(index, key)
        clip = pair.learner.clip
        contour = extract_pitch(clip, hop=FRAME_HOP)
        augmented, records = augment_amplitude(
            clip, contour, count, seed=seed + 7919 * i
        )
        merged = sorted(
            pair.annotations + [r.annotation for r in records],
            key=lambda a: (a.start, a.end, a.label),
        )
        dest = out / "learners" / key[0] / key[1]
        dest.mkdir(parents=True, exist_ok=True)
        save_wav(dest / "audio.wav", augmented)
        write_meta(dest / "meta.cfg", pair.learner.meta)
        write_annotations(dest / "annotations.txt", merged)
        _say(args, f"{key[0]}/{key[1]}: {len(records)} segments rescaled")
    return EXIT_OK


def _fit_detector(cfg: RunConfig, index, plan, args):
    train_chunks = prepare_chunks(
        index, plan.train, cfg.mistake_class, cfg.feature_kind, map_fn=parallel_map
    )
    if not train_chunks:
        raise DataError("training split produced no chunks")
    x = [s.features for s in train_chunks]
    y = [s.labels for s in train_chunks]
    m = [s.mask for s in train_chunks]

    if cfg.model == "rb":
        detector = RuleBasedDetector(
            mistake_class=cfg.mistake_class, collar_c=cfg.collar_c
        )
        detector.fit(x, y, mask=m)
        return detector, train_chunks

    val_chunks = prepare_chunks(
        index, plan.val, cfg.mistake_class, cfg.feature_kind, map_fn=parallel_map
    )
    if not val_chunks:
        raise DataError("validation split produced no chunks")
    config = _load_config(args)
    detector = NeuralDetector(
        arch=cfg.model,
        max_epochs=_opt(args, config, "epochs", 50, int),
        patience=_opt(args, config, "patience", 10, int),
        batch_size=_opt(args, config, "batch_size", 32, int),
        learning_rate=_opt(args, config, "learning_rate", 0.001, float),
        seed=cfg.seed,
        sentinel=(
            UNVOICED_SENTINEL
            if cfg.mistake_class == "F" and cfg.feature_kind == "contour"
            else None
        ),
    )
    detector.fit(
        x,
        y,
        mask=m,
        X_val=[s.features for s in val_chunks],
        y_val=[s.labels for s in val_chunks],
        val_mask=[s.mask for s in val_chunks],
    )
    return detector, train_chunks


def cmd_train(args) -> int:
    config = _load_config(args)
    cfg = _run_config(args, config)
    index = build_index(cfg.root)
    plan = make_splits(index, cfg.scenario, cfg.seed)
    detector, _ = _fit_detector(cfg, index, plan, args)
    out = cfg.out_dir

    if cfg.model == "rb":
        lines = [
            f"mistake_class = {cfg.mistake_class}",
            f"threshold = {detector.threshold_!r}",
            f"train_f1 = {detector.train_f1_!r}",
            f"display = {format_threshold(detector.threshold_, cfg.mistake_class)}",
        ]
        (out / "thresholds.cfg").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
        _say(args, f"wrote {out / 'thresholds.cfg'}")
    else:
        save_checkpoint(
            out / "checkpoint.npz",
            detector.model_,
            stats=detector.scaler_.stats_,
            extra={
                "mistake_class": cfg.mistake_class,
                "feature_kind": cfg.feature_kind,
                "seed": cfg.seed,
                "sentinel": detector.sentinel,
                "threshold": detector.threshold,
            },
        )
        (out / "train_report.txt").write_text(
            detector.report_.format_lines(), encoding="utf-8"
        )
        _say(args, f"wrote {out / 'checkpoint.npz'}")

    manifest = {
        "command": "train",
        "model": cfg.model,
        "mistake_class": cfg.mistake_class,
        "feature_kind": cfg.feature_kind,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "split_digest": plan.digest(),
    }
    (out / "manifest.cfg").write_text(render_manifest(manifest), encoding="utf-8")
    return EXIT_OK


def _load_trained(from_dir: Path):
    """(kind, payload): a saved neural checkpoint or rule thresholds."""
    ckpt = from_dir / "checkpoint.npz"
    thresholds = from_dir / "thresholds.cfg"
    if ckpt.is_file():
        model, stats, extra = load_checkpoint(ckpt)
        scaler = Standardizer(sentinel=extra.get("sentinel"))
        scaler.stats_ = stats
        return "neural", (model, scaler, extra)
    if thresholds.is_file():
        fields = parse_config_text(thresholds.read_text(encoding="utf-8"))
        if "threshold" not in fields or "mistake_class" not in fields:
            raise DataError(f"{thresholds}: missing threshold or mistake_class")
        return "rb", (float(fields["threshold"]), fields["mistake_class"])
    raise DataError(f"no checkpoint.npz or thresholds.cfg under {from_dir}")


def cmd_detect(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    index = build_index(args.root)
    key = (args.learner, args.lesson)
    if key not in index.learners:
        raise DataError(f"no learner take {args.learner}/{args.lesson} in corpus")
    pair = align_pair(load_pair(index, key))

    kind, payload = _load_trained(Path(args.trained))
    if kind == "neural":
        model, scaler, extra = payload
        mclass = extra.get("mistake_class", "F")
        feature_kind = extra.get("feature_kind", "contour")
        features = pair_features(pair, mclass, feature_kind)
        probs = nn_predict(model, scaler.transform(features))
        high = _opt(args, config, "high", 0.6, float)
        low = _opt(args, config, "low", 0.4, float)
    else:
        threshold, mclass = payload
        feature_kind = "contour"
        features = pair_features(pair, mclass, feature_kind)
        from .rules import detect_with_threshold

        probs = detect_with_threshold(
            features[0], features[1], mclass, threshold
        ).astype(np.float64)
        high = low = 0.5

    events = frames_to_events(
        probs,
        hop=FRAME_HOP,
        high=high,
        low=low,
        min_dur=_opt(args, config, "min_dur", 0.100, float),
        merge_gap=_opt(args, config, "merge_gap", 0.050, float),
    )
    from .annotations import MistakeAnnotation

    predicted = [
        MistakeAnnotation(start=ev.start, end=ev.end, label=mclass) for ev in events
    ]
    pred_path = out / "predicted.txt"
    write_annotations(pred_path, predicted)
    _say(args, f"wrote {pred_path} ({len(predicted)} events)")

    if args.plot:
        t_contour = extract_pitch(pair.teacher.clip, hop=FRAME_HOP)
        l_contour = extract_pitch(pair.learner.clip, hop=FRAME_HOP)
        gt_events = annotations_to_events(pair.annotations, mclass)
        svg = plot_detection(
            t_contour,
            l_contour,
            events,
            gt_events,
            title=f"{args.learner}/{args.lesson} class {mclass}",
        )
        plot_path = out / "detection.svg"
        plot_path.write_text(svg, encoding="utf-8")
        _say(args, f"wrote {plot_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    cfg = _run_config(args, config)
    index = build_index(cfg.root)
    plan = make_splits(index, cfg.scenario, cfg.seed)
    detector, _ = _fit_detector(cfg, index, plan, args)

    test_chunks = prepare_chunks(
        index, plan.test, cfg.mistake_class, cfg.feature_kind, map_fn=parallel_map
    )
    if not test_chunks:
        raise DataError("test split produced no chunks")
    probs = detector.predict_proba([s.features for s in test_chunks])
    report = evaluate_probs(
        test_chunks,
        probs,
        cfg.mistake_class,
        collar_c=cfg.collar_c,
        event_collar=cfg.event_collar,
        high=cfg.high,
        low=cfg.low,
        min_dur=cfg.min_dur,
        merge_gap=cfg.merge_gap,
    )
    rows = rows_from_report(cfg.model, f"S{cfg.scenario}", report)

    cross_root = getattr(args, "cross_root", None)
    if cross_root:
        other = build_index(cross_root)
        other_chunks = prepare_chunks(
            other,
            other.pair_keys(),
            cfg.mistake_class,
            cfg.feature_kind,
            map_fn=parallel_map,
        )
        if not other_chunks:
            raise DataError(f"no pairs under cross-evaluation root {cross_root}")
        cross_probs = detector.predict_proba([s.features for s in other_chunks])
        cross = evaluate_probs(
            other_chunks,
            cross_probs,
            cfg.mistake_class,
            collar_c=cfg.collar_c,
            event_collar=cfg.event_collar,
            high=cfg.high,
            low=cfg.low,
            min_dur=cfg.min_dur,
            merge_gap=cfg.merge_gap,
        )
        rows.extend(rows_from_report(f"{cfg.model}-cross", f"S{cfg.scenario}", cross))

    out = cfg.out_dir
    (out / "report.txt").write_text(render_text_report(rows), encoding="utf-8")
    (out / "report.csv").write_text(render_csv_report(rows), encoding="utf-8")
    manifest = {
        "command": "evaluate",
        "model": cfg.model,
        "mistake_class": cfg.mistake_class,
        "feature_kind": cfg.feature_kind,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "frame_collar": cfg.frame_collar,
        "event_collar": cfg.event_collar,
        "hysteresis.high": cfg.high,
        "hysteresis.low": cfg.low,
        "hysteresis.min_dur": cfg.min_dur,
        "hysteresis.merge_gap": cfg.merge_gap,
        "split_digest": plan.digest(),
    }
    (out / "manifest.cfg").write_text(render_manifest(manifest), encoding="utf-8")
    _say(args, f"wrote {out / 'report.txt'}")
    return EXIT_OK


def cmd_report(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    rows = []
    for path in args.csvs:
        path = Path(path)
        if not path.is_file():
            raise DataError(f"{path}: no such report CSV")
        try:
            rows.extend(parse_csv_report(path.read_text(encoding="utf-8")))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}")
    (out / "combined.txt").write_text(render_text_report(rows), encoding="utf-8")
    (out / "combined.csv").write_text(render_csv_report(rows), encoding="utf-8")
    _say(args, f"wrote {out / 'combined.txt'}")
    return EXIT_OK


def cmd_plot(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    index = build_index(args.root)
    key = (args.learner, args.lesson)
    if key not in index.learners:
        raise DataError(f"no learner take {args.learner}/{args.lesson} in corpus")
    pair = align_pair(load_pair(index, key))
    mclass = _opt(args, config, "mistake_class", "F", str)

    pred_events = []
    if args.pred:
        pred_path = Path(args.pred)
        if not pred_path.is_file():
            raise DataError(f"{pred_path}: no such prediction file")
        pred_events = annotations_to_events(parse_annotations(pred_path), mclass)
    gt_events = annotations_to_events(pair.annotations, mclass)

    t_contour = extract_pitch(pair.teacher.clip, hop=FRAME_HOP)
    l_contour = extract_pitch(pair.learner.clip, hop=FRAME_HOP)
    svg = plot_detection(
        t_contour,
        l_contour,
        pred_events,
        gt_events,
        title=f"{args.learner}/{args.lesson} class {mclass}",
    )
    path = out / "contours.svg"
    path.write_text(svg, encoding="utf-8")
    _say(args, f"wrote {path}")
    return EXIT_OK


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(
        prog="mistake-detect",
        description="Detect pitch and loudness mistakes in imitation-based singing lessons.",
        epilog=(
            "global flags on every subcommand: --config PATH, --seed N, "
            "--out DIR, --quiet"
        ),
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", parents=[common], help="index a corpus and report its pairs")
    p.add_argument("root")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="render a synthetic corpus from a recipe")
    p.add_argument("recipe")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("features", parents=[common], help="extract and cache frame features")
    p.add_argument("root")
    p.add_argument("--feature", choices=FEATURE_KINDS_CLI, help="feature kind")
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("augment", parents=[common], help="rescale static segments into A mistakes")
    p.add_argument("root")
    p.add_argument("--count", type=int, help="segments to rescale per take (default 1)")
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("train", parents=[common], help="fit a detector on the training split")
    p.add_argument("root")
    p.add_argument("--model", choices=MODELS, help="rb, cnn, or tcn")
    p.add_argument("--mistake-class", dest="mistake_class", choices=MISTAKE_CLASSES_CLI)
    p.add_argument("--feature", choices=FEATURE_KINDS_CLI)
    p.add_argument("--scenario", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--epochs", type=int, help="training epoch cap")
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("detect", parents=[common], help="run a trained detector on one take")
    p.add_argument("root")
    p.add_argument("--learner", required=True)
    p.add_argument("--lesson", required=True)
    p.add_argument("--trained", required=True, help="directory written by train")
    p.add_argument("--plot", action="store_true", help="also write an SVG overlay")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("evaluate", parents=[common], help="fit and score a detector on a split")
    p.add_argument("root")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--mistake-class", dest="mistake_class", choices=MISTAKE_CLASSES_CLI)
    p.add_argument("--feature", choices=FEATURE_KINDS_CLI)
    p.add_argument("--scenario", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--cross-root", dest="cross_root", help="second corpus for cross-teacher rows")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="merge metric CSVs into one report")
    p.add_argument("csvs", nargs="+")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("plot", parents=[common], help="plot contours with marked regions")
    p.add_argument("root")
    p.add_argument("--learner", required=True)
    p.add_argument("--lesson", required=True)
    p.add_argument("--pred", help="annotation file of predicted events")
    p.set_defaults(handler=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "command", None) is None:
        print("error: usage: a subcommand is required (see --help)", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
