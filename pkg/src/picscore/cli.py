"""Command line pipeline: synth, split, train, score, fuse, eval, curve.

Every command writes a small JSON manifest next to each output artifact
recording the command, inputs, outputs, and parameters, so a run can be
reproduced bit-exactly. Numeric CSV output uses fixed 6-decimal formatting.

Exit codes: 0 success, 2 usage or validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    dtc_confidence,
    erbc_confidence,
    fit_dtc,
    fit_erbc,
    fit_lrc,
    lrc_confidence,
)
from .dataset import GENUINE, IMPOSTER, load_scores, save_scores, split_subject_exclusive
from .density import fit_model, load_model, save_model
from .metrics import calibration_report, ccc, fnmr_at_fmr
from .pic import pic_multi, pic_threshold_for_fmr, pic_values
from .synth import SynthConfig, generate

FUSED_COLUMNS = ("probe_id", "claimed_id", "label", "n_used", "pic", "decision", "confidence")
CCC_COLUMNS = ("bin_center", "pred_mean", "pred_std", "count")
CALIBRATION_COLUMNS = ("bin_lo", "bin_hi", "count", "p_true", "p_pred_mean", "p_pred_std")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _write_manifest(command: str, inputs: dict, outputs: dict, parameters: dict) -> None:
    doc = {
        "command": command,
        "tool": "picscore",
        "tool_version": __version__,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "parameters": parameters,
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    for out_path in outputs.values():
        Path(str(out_path) + ".manifest.json").write_text(text)


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _read_rows(path: str) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: no records (empty file)")
        fields = list(reader.fieldnames)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no records")
    return fields, rows


def _row_float(row: dict, column: str, row_number: int) -> float:
    raw = (row.get(column) or "").strip()
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"row {row_number}: invalid {column} value {raw!r}") from None


def _require_columns(fields: list[str], needed: tuple[str, ...], path: str) -> None:
    missing = [c for c in needed if c not in fields]
    if missing:
        raise ValueError(f"{path}: missing required column(s): {', '.join(missing)}")


def cmd_synth(args) -> int:
    config = SynthConfig(
        genuine_mean=args.genuine_mean,
        genuine_std=args.genuine_std,
        imposter_mean=args.imposter_mean,
        imposter_std=args.imposter_std,
        n_genuine=args.n_genuine,
        n_imposter=args.n_imposter,
        seed=args.seed,
        n_subjects=args.n_subjects,
        refs_per_probe=args.refs_per_probe,
    )
    score_set = generate(config)
    save_scores(score_set, args.out)
    _write_manifest(
        "synth",
        {},
        {"scores": args.out},
        {
            "genuine_mean": args.genuine_mean,
            "genuine_std": args.genuine_std,
            "imposter_mean": args.imposter_mean,
            "imposter_std": args.imposter_std,
            "n_genuine": args.n_genuine,
            "n_imposter": args.n_imposter,
            "n_subjects": args.n_subjects,
            "refs_per_probe": args.refs_per_probe,
            "seed": args.seed,
        },
    )
    print(f"wrote {len(score_set)} records ({score_set.n_genuine} genuine, "
          f"{score_set.n_imposter} imposter) to {args.out}")
    return 0


def cmd_split(args) -> int:
    score_set = load_scores(args.input)
    train, test = split_subject_exclusive(score_set.records, args.fraction, args.seed)
    dropped = len(score_set) - len(train) - len(test)
    save_scores(train, args.out_train)
    save_scores(test, args.out_test)
    _write_manifest(
        "split",
        {"scores": args.input},
        {"train": args.out_train, "test": args.out_test},
        {"fraction": args.fraction, "seed": args.seed},
    )
    print(f"train: {train.n_genuine} genuine / {train.n_imposter} imposter")
    print(f"test:  {test.n_genuine} genuine / {test.n_imposter} imposter")
    print(f"dropped {dropped} cross-partition comparisons")
    return 0


def cmd_train(args) -> int:
    train = load_scores(args.input)
    model = fit_model(
        train,
        prior_genuine=args.prior,
        resolution=args.resolution,
        genuine_bandwidth=args.bandwidth,
        imposter_bandwidth=args.bandwidth,
    )
    save_model(model, args.out)
    _write_manifest(
        "train",
        {"train": args.input},
        {"model": args.out},
        {
            "prior": args.prior,
            "resolution": args.resolution,
            "bandwidth": args.bandwidth,
        },
    )
    print(f"genuine:  bandwidth {model.genuine.bandwidth:.6g}, "
          f"{train.n_genuine} scores")
    print(f"imposter: bandwidth {model.imposter.bandwidth:.6g}, "
          f"{train.n_imposter} scores")
    print(f"grid: [{model.genuine.grid_min:.6g}, {model.genuine.grid_max:.6g}] "
          f"at {model.genuine.grid_resolution} points")
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    fields, rows = _read_rows(args.input)
    _require_columns(fields, ("score",), args.input)
    for appended in ("pic", "decision", "confidence"):
        if appended in fields:
            raise ValueError(f"{args.input}: column {appended!r} already present")

    scores = np.array(
        [_row_float(row, "score", i) for i, row in enumerate(rows, start=1)], dtype=float
    )
    values = pic_values(model, scores)
    threshold = pic_threshold_for_fmr(args.fmr)

    out_fields = fields + ["pic", "decision", "confidence"]
    with open(args.out, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=out_fields, lineterminator="\n")
        writer.writeheader()
        for row, value in zip(rows, values):
            decision = GENUINE if value >= threshold else IMPOSTER
            confidence = value if decision == GENUINE else 1.0 - value
            row = dict(row)
            row["pic"] = _fmt(value)
            row["decision"] = decision
            row["confidence"] = _fmt(confidence)
            writer.writerow(row)

    _write_manifest(
        "score",
        {"model": args.model, "scores": args.input},
        {"scored": args.out},
        {"fmr": args.fmr},
    )
    print(f"scored {len(rows)} rows at pic threshold {_fmt(threshold)}")
    return 0


def cmd_fuse(args) -> int:
    model = load_model(args.model)
    fields, rows = _read_rows(args.input)
    _require_columns(fields, ("score", "label", "probe_id", "subject_b"), args.input)

    groups: dict[tuple[str, str], dict] = {}
    for i, row in enumerate(rows, start=1):
        probe = (row.get("probe_id") or "").strip()
        claimed = (row.get("subject_b") or "").strip()
        label = (row.get("label") or "").strip().lower()
        if not probe or not claimed:
            raise ValueError(f"row {i}: probe_id and subject_b are required for fusion")
        if label not in (GENUINE, IMPOSTER):
            raise ValueError(f"row {i}: unknown label {row.get('label')!r}")
        score = _row_float(row, "score", i)
        key = (probe, claimed)
        group = groups.setdefault(key, {"label": label, "scores": []})
        if group["label"] != label:
            raise ValueError(
                f"row {i}: group ({probe}, {claimed}) mixes genuine and imposter labels"
            )
        group["scores"].append(score)

    threshold = pic_threshold_for_fmr(args.fmr)
    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FUSED_COLUMNS)
        for (probe, claimed), group in groups.items():
            used = group["scores"][: args.max_refs]
            joint = pic_multi(model, used)
            decision = GENUINE if joint.value >= threshold else IMPOSTER
            confidence = joint.value if decision == GENUINE else 1.0 - joint.value
            writer.writerow(
                [
                    probe,
                    claimed,
                    group["label"],
                    len(used),
                    _fmt(joint.value),
                    decision,
                    _fmt(confidence),
                ]
            )

    _write_manifest(
        "fuse",
        {"model": args.model, "scores": args.input},
        {"fused": args.out},
        {"max_refs": args.max_refs, "fmr": args.fmr},
    )
    print(f"fused {len(rows)} rows into {len(groups)} groups (max {args.max_refs} refs)")
    return 0


def _eval_pic(fields, rows, path):
    _require_columns(fields, ("label", "pic", "decision", "confidence"), path)
    labels, values, decisions, confidences = [], [], [], []
    for i, row in enumerate(rows, start=1):
        label = (row.get("label") or "").strip().lower()
        if label not in (GENUINE, IMPOSTER):
            raise ValueError(f"row {i}: unknown label {row.get('label')!r}")
        decision = (row.get("decision") or "").strip().lower()
        if decision not in (GENUINE, IMPOSTER):
            raise ValueError(f"row {i}: unknown decision {row.get('decision')!r}")
        labels.append(label)
        decisions.append(decision)
        values.append(_row_float(row, "pic", i))
        confidences.append(_row_float(row, "confidence", i))
    return labels, np.array(values), decisions, np.array(confidences)


def _eval_baseline(args, fields, rows, path):
    _require_columns(fields, ("score", "label"), path)
    if not args.train:
        raise ValueError(f"--train is required for estimator {args.estimator!r}")
    train = load_scores(args.train)

    labels, scores = [], []
    for i, row in enumerate(rows, start=1):
        label = (row.get("label") or "").strip().lower()
        if label not in (GENUINE, IMPOSTER):
            raise ValueError(f"row {i}: unknown label {row.get('label')!r}")
        labels.append(label)
        scores.append(_row_float(row, "score", i))
    scores = np.array(scores)

    if args.estimator == "dtc":
        est = fit_dtc(train, args.fmr)
        confidences = dtc_confidence(est, scores)
    elif args.estimator == "erbc":
        est = fit_erbc(train, args.fmr)
        confidences = erbc_confidence(est, scores)
    else:  # lrc
        if not args.model:
            raise ValueError("--model is required for estimator 'lrc'")
        model = load_model(args.model)
        est = fit_lrc(train, model, args.fmr)
        confidences = lrc_confidence(est, model, scores)

    decisions = [GENUINE if s >= est.threshold else IMPOSTER for s in scores]
    return labels, scores, decisions, confidences


def cmd_eval(args) -> int:
    fields, rows = _read_rows(args.input)
    if args.estimator == "pic":
        labels, values, decisions, confidences = _eval_pic(fields, rows, args.input)
    else:
        if "score" not in fields:
            raise ValueError(
                f"{args.input}: estimator {args.estimator!r} needs raw scores "
                "(fused input supports the pic estimator only)"
            )
        labels, values, decisions, confidences = _eval_baseline(args, fields, rows, args.input)

    correct = np.array([d == l for d, l in zip(decisions, labels)], dtype=bool)
    keep = np.ones(len(rows), dtype=bool)
    if args.decisions != "all":
        keep = np.array([d == args.decisions for d in decisions], dtype=bool)
        if not keep.any():
            raise ValueError(f"no rows with decision {args.decisions!r} to evaluate")
    report = calibration_report(np.asarray(confidences)[keep], correct[keep], args.ece_bins)

    label_arr = np.array(labels)
    genuine_vals = np.asarray(values)[label_arr == GENUINE]
    imposter_vals = np.asarray(values)[label_arr == IMPOSTER]
    if genuine_vals.size == 0 or imposter_vals.size == 0:
        raise ValueError(f"{args.input}: need both genuine and imposter rows for verification")
    verification = fnmr_at_fmr(genuine_vals, imposter_vals, args.fmr)

    calibration_path = f"{args.out}.calibration.csv"
    summary_path = f"{args.out}.summary.csv"
    with open(calibration_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CALIBRATION_COLUMNS)
        for b in report.bins:
            writer.writerow(
                [_fmt(b.lo), _fmt(b.hi), b.count, _fmt(b.p_true), _fmt(b.p_pred_mean),
                 _fmt(b.p_pred_std)]
            )
    summary_rows = [
        ("estimator", args.estimator),
        ("decision_filter", args.decisions),
        ("n_samples", report.n_samples),
        ("ece_bins", report.n_bins),
        ("ece", _fmt(report.ece)),
        ("mce", _fmt(report.mce)),
        ("target_fmr", args.fmr),
        ("threshold", _fmt(verification.threshold)),
        ("fmr", _fmt(verification.fmr)),
        ("fnmr", _fmt(verification.fnmr)),
        ("n_genuine", verification.n_genuine),
        ("n_imposter", verification.n_imposter),
    ]
    with open(summary_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("key", "value"))
        writer.writerows(summary_rows)

    _write_manifest(
        "eval",
        {"scored": args.input, "train": args.train or "", "model": args.model or ""},
        {"calibration": calibration_path, "summary": summary_path},
        {
            "estimator": args.estimator,
            "fmr": args.fmr,
            "ece_bins": args.ece_bins,
            "decisions": args.decisions,
        },
    )
    print(f"estimator {args.estimator}: ECE {_fmt(report.ece)}, MCE {_fmt(report.mce)} "
          f"over {report.n_samples} samples ({args.ece_bins} bins)")
    print(f"FNMR {_fmt(verification.fnmr)} at FMR {_fmt(verification.fmr)} "
          f"(target {args.fmr:g}, threshold {_fmt(verification.threshold)})")
    return 0


def cmd_curve(args) -> int:
    model = load_model(args.test_model)
    fields, rows = _read_rows(args.input)
    _require_columns(fields, ("score", "decision", "confidence"), args.input)

    scores, predicted, genuine_decision = [], [], []
    for i, row in enumerate(rows, start=1):
        decision = (row.get("decision") or "").strip().lower()
        if decision not in (GENUINE, IMPOSTER):
            raise ValueError(f"row {i}: unknown decision {row.get('decision')!r}")
        scores.append(_row_float(row, "score", i))
        predicted.append(_row_float(row, "confidence", i))
        genuine_decision.append(decision == GENUINE)

    posterior = pic_values(model, np.array(scores))
    true_conf = np.where(np.array(genuine_decision), posterior, 1.0 - posterior)
    series = ccc(true_conf, np.array(predicted), args.bins)

    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CCC_COLUMNS)
        for point in series:
            writer.writerow(
                [_fmt(point.center), _fmt(point.pred_mean), _fmt(point.pred_std), point.count]
            )

    _write_manifest(
        "curve",
        {"scored": args.input, "test_model": args.test_model},
        {"curve": args.out},
        {"bins": args.bins},
    )
    print(f"wrote {args.bins}-bin calibration curve for {len(rows)} samples to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picscore",
        description="Probabilistic confidence calibration for biometric comparison scores.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic labeled scores")
    p.add_argument("out", help="output CSV path")
    p.add_argument("--genuine-mean", type=float, default=0.7)
    p.add_argument("--genuine-std", type=float, default=0.1)
    p.add_argument("--imposter-mean", type=float, default=0.2)
    p.add_argument("--imposter-std", type=float, default=0.1)
    p.add_argument("--n-genuine", type=_positive_int, default=1000)
    p.add_argument("--n-imposter", type=_positive_int, default=1000)
    p.add_argument("--n-subjects", type=_positive_int, default=100)
    p.add_argument("--refs-per-probe", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="subject-exclusive train/test split")
    p.add_argument("input", help="labeled scores CSV")
    p.add_argument("--fraction", type=_fraction, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit the genuine/imposter density model")
    p.add_argument("input", help="training scores CSV")
    p.add_argument("out", help="output model JSON path")
    p.add_argument("--prior", type=_fraction, default=0.5)
    p.add_argument("--resolution", type=_positive_int, default=4096)
    p.add_argument("--bandwidth", type=float, default=None,
                   help="kernel bandwidth for both classes (default: per-class auto)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="append pic/decision/confidence columns")
    p.add_argument("model", help="model JSON path")
    p.add_argument("input", help="scores CSV")
    p.add_argument("out", help="output CSV path")
    p.add_argument("--fmr", type=_fraction, default=1e-3)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fuse", help="joint confidence per (probe, claimed identity) group")
    p.add_argument("model", help="model JSON path")
    p.add_argument("input", help="scores CSV with probe_id and subject_b")
    p.add_argument("out", help="output CSV path")
    p.add_argument("--max-refs", type=_positive_int, default=5,
                   help="use at most this many references per group (file order)")
    p.add_argument("--fmr", type=_fraction, default=1e-3)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="calibration and verification report")
    p.add_argument("input", help="scored or fused CSV")
    p.add_argument("out", help="output report prefix")
    p.add_argument("--estimator", choices=("pic", "dtc", "lrc", "erbc"), default="pic")
    p.add_argument("--fmr", type=_fraction, default=1e-3)
    p.add_argument("--ece-bins", type=_positive_int, default=10)
    p.add_argument("--decisions", choices=("all", "genuine", "imposter"), default="all",
                   help="restrict calibration metrics to one decision branch")
    p.add_argument("--train", default=None, help="training CSV (required for baselines)")
    p.add_argument("--model", default=None, help="model JSON (required for lrc)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="confidence calibration curve series")
    p.add_argument("input", help="scored CSV")
    p.add_argument("test_model", help="model JSON fitted on the evaluation scores")
    p.add_argument("out", help="output CSV path")
    p.add_argument("--bins", type=_positive_int, default=30)
    p.set_defaults(func=cmd_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
