"""Operator command line: generate, extract-features, train, evaluate,
agreement, predict, serve.

Exit codes: 0 success, 1 runtime error, 2 usage error. Every subcommand is
deterministic given its flags (including --seed).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

from .classifier import ForestParams
from .core import CATEGORIES, EmochatError
from .corpus import (
    annotations_from_jsonl,
    corpus_from_jsonl,
    corpus_to_jsonl,
    featurize_records,
)
from .features import build_feature_row
from .fusion import MODES, SuiteParams, load_suite, save_suite, train_suite
from .evaluation import agreement_summary, evaluate_suite
from .synthetic import CorpusConfig, generate_corpus


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emochat",
        description="Emotion-aware chat toolkit: keystroke + text emotion fusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a labeled synthetic corpus (JSONL)")
    p.add_argument("--out", required=True, help="output corpus path (.jsonl)")
    p.add_argument("--per-category", type=int, default=100)
    p.add_argument("--kd-signal", choices=("on", "off"), default="on")
    p.add_argument("--text-signal", choices=("on", "off"), default="on")
    p.add_argument("--hard-mode", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("extract-features", help="corpus JSONL -> feature CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--pause-threshold-ms", type=float, default=1000.0)

    p = sub.add_parser("train", help="train a 9-model suite from a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="suite output directory")
    p.add_argument("--mode", choices=MODES, default="fusion")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--classifier", choices=("forest", "logistic"), default="forest")
    p.add_argument("--pause-threshold-ms", type=float, default=1000.0)

    p = sub.add_parser("evaluate", help="evaluate a trained suite on a labeled corpus")
    p.add_argument("--suite", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--outdir", help="also write metrics.csv and metrics.png here")
    p.add_argument("--pause-threshold-ms", type=float, default=1000.0)

    p = sub.add_parser("agreement", help="Krippendorff alpha between two annotation files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--json", action="store_true")
    p.add_argument("--outdir", help="also write agreement.csv and agreement.png here")

    p = sub.add_parser("predict", help="predict emotions for a recorded session")
    p.add_argument("--suite", required=True)
    p.add_argument("--session", required=True, help="recorded session JSONL (corpus schema)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--pause-threshold-ms", type=float, default=1000.0)

    p = sub.add_parser("serve", help="run the real-time chat service")
    p.add_argument("--config", required=True)

    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    config = CorpusConfig(
        counts={c: args.per_category for c in CATEGORIES},
        kd_signal=args.kd_signal == "on",
        text_signal=args.text_signal == "on",
        hard_mode=args.hard_mode,
    )
    records = generate_corpus(config, seed=args.seed)
    corpus_to_jsonl(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_extract_features(args: argparse.Namespace) -> int:
    from .report import feature_rows_to_csv

    records = corpus_from_jsonl(args.corpus)
    rows = [
        build_feature_row(r.message, r.window, args.pause_threshold_ms) for r in records
    ]
    feature_rows_to_csv(rows, args.out)
    print(f"wrote {len(rows)} feature rows to {args.out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    records = corpus_from_jsonl(args.corpus)
    rows = featurize_records(records, pause_threshold_ms=args.pause_threshold_ms)
    params = SuiteParams(
        classifier=args.classifier,
        forest=ForestParams(n_trees=args.trees, max_depth=args.depth, min_leaf=args.min_leaf),
    )
    suite = train_suite(rows, mode=args.mode, params=params, seed=args.seed)
    save_suite(suite, args.out)
    print(f"trained {args.mode} suite ({args.classifier}) on {len(rows)} rows -> {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    from .report import (
        ensure_outdir,
        format_metrics_table,
        metrics_matrix,
        metrics_to_csv,
        render_metrics_figure,
    )

    suite = load_suite(args.suite)
    records = corpus_from_jsonl(args.corpus)
    rows = featurize_records(records, pause_threshold_ms=args.pause_threshold_ms)
    reports = evaluate_suite(suite, rows)
    if args.json:
        print(json.dumps({"mode": suite.mode, "metrics": metrics_matrix(reports)}, indent=2))
    else:
        print(format_metrics_table(reports))
    if args.outdir:
        outdir = ensure_outdir(args.outdir)
        metrics_to_csv(reports, os.path.join(outdir, "metrics.csv"))
        render_metrics_figure(reports, os.path.join(outdir, "metrics.png"))
        print(f"wrote metrics.csv and metrics.png to {outdir}")
    return 0


def _cmd_agreement(args: argparse.Namespace) -> int:
    from .report import (
        agreement_to_csv,
        ensure_outdir,
        format_agreement_table,
        render_agreement_figure,
    )

    a1 = annotations_from_jsonl(args.file_a)
    a2 = annotations_from_jsonl(args.file_b)
    summary = agreement_summary(a1, a2)
    if args.json:
        print(
            json.dumps(
                {t: {"alpha": r.alpha, "metric": r.metric} for t, r in summary.items()},
                indent=2,
            )
        )
    else:
        print(format_agreement_table(summary))
    if args.outdir:
        outdir = ensure_outdir(args.outdir)
        agreement_to_csv(summary, os.path.join(outdir, "agreement.csv"))
        render_agreement_figure(summary, os.path.join(outdir, "agreement.png"))
        print(f"wrote agreement.csv and agreement.png to {outdir}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    from .fusion import predict_message

    suite = load_suite(args.suite)
    records = corpus_from_jsonl(args.session)
    rows = featurize_records(records, pause_threshold_ms=args.pause_threshold_ms)
    out = []
    for record, row in zip(records, rows):
        values = suite.slice_values(row.fused.values)
        pred = predict_message(suite, values, message_id=record.message.message_id)
        out.append(
            {
                "message_id": pred.message_id,
                "valence": pred.valence,
                "arousal": pred.arousal,
                "labels": [{"label": lab, "confidence": round(conf, 4)} for lab, conf in pred.labels],
                "source": pred.source,
            }
        )
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for doc in out:
            labels = ", ".join(f"{d['label']}={d['confidence']:.2f}" for d in doc["labels"])
            print(
                f"{doc['message_id']}: valence={doc['valence']:+d} "
                f"arousal={doc['arousal']:+d} labels=[{labels}] source={doc['source']}"
            )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .config import load_config
    from .service import serve
    from .textanalysis import LexiconAnalyzer, RemoteAnalyzer

    config = load_config(args.config)
    suite = load_suite(config.suite_dir) if config.suite_dir else None
    analyzer = None
    fallback = None
    if config.analyzer_mode == "remote":
        analyzer = RemoteAnalyzer(
            endpoint=config.endpoint,
            model=config.model,
            api_key=os.environ.get(config.api_key_env, ""),
            timeout_s=config.timeout_s,
            max_concurrency=config.max_concurrency,
        )
        fallback = LexiconAnalyzer()
    try:
        asyncio.run(serve(config, suite, analyzer, fallback))
    except KeyboardInterrupt:
        pass
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "extract-features": _cmd_extract_features,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "agreement": _cmd_agreement,
    "predict": _cmd_predict,
    "serve": _cmd_serve,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except EmochatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    try:
        code = dispatch(sys.argv[1:])
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream pager/head closed the pipe; not our error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
