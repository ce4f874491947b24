"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, DataError
from ..learn import FUSION_STRATEGIES
from .config import RunConfig
from .manifest import load_manifest
from .steps import audit_run, cmd_extract, cmd_graph_export, cmd_predict, cmd_train
from .synth import SynthConfig, generate_corpus

log = logging.getLogger("voicevg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("envelope / peaks / graph")
    g.add_argument("--window-ms", dest="window_ms", type=float)
    g.add_argument("--min-distance-ms", dest="min_distance_ms", type=float)
    g.add_argument("--min-prominence", dest="min_prominence", type=float)
    g.add_argument("--vg-input", dest="vg_input", choices=("peaks", "raw"))
    g.add_argument("--vg-builder", dest="vg_builder", choices=("fast", "naive"))
    g = p.add_argument_group("spectral")
    g.add_argument("--frame-ms", dest="frame_ms", type=float)
    g.add_argument("--hop-ms", dest="hop_ms", type=float)
    g.add_argument("--fft-size", dest="fft_size", type=int)
    g.add_argument("--n-mels", dest="n_mels", type=int)
    g.add_argument("--n-mfcc", dest="n_mfcc", type=int)
    g.add_argument("--f-min", dest="f_min", type=float)
    g.add_argument("--f-max", dest="f_max", type=float)
    g = p.add_argument_group("forest / scoring")
    g.add_argument("--n-trees", dest="n_trees", type=int)
    g.add_argument("--max-depth", dest="max_depth", type=int)
    g.add_argument("--min-leaf", dest="min_leaf", type=int)
    g.add_argument("--features-per-split", dest="features_per_split", type=int)
    g.add_argument("--zscore", action="store_true", default=None,
                   help="z-score features with training-split statistics")
    g.add_argument("--c", type=float, help="max/mean blend factor for per-subject aggregation (default 2)")
    g.add_argument("--fusion", choices=FUSION_STRATEGIES)
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _config_flags()
    parser = _Parser(prog="voicevg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate the synthetic two-class corpus")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--subjects-per-class", type=int, default=60)
    p.add_argument("--split", default="40,10,10", help="train,val,test subjects per class")
    p.add_argument("--clips-per-subject", type=int, default=3)
    p.add_argument("--duration", type=float, default=2.0, help="clip length in seconds")
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--seed", type=int, default=0)

    for name, text in (("extract", "compute per-clip feature CSVs"),
                       ("train", "train one forest per feature family (+ fusion)"),
                       ("predict", "score subjects and write the prediction report")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--manifest", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path, help="run directory")
        if name == "predict":
            p.add_argument("--split", default="test", choices=("train", "val", "test"))

    p = sub.add_parser("graph-export", parents=[common], help="export one clip's visibility graph")
    p.add_argument("wav", type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("report", help="print the metrics of a finished run")
    p.add_argument("--out", required=True, type=Path, help="run directory")
    p.add_argument("--manifest", type=Path, help="also audit the run for split leakage")
    return parser


def _print_report(run_dir: Path, out=None) -> None:
    out = out or sys.stdout
    metrics = run_dir / "predictions" / "metrics.csv"
    if not metrics.exists():
        raise DataError(f"{metrics} not found; run predict on a labelled split first")
    with metrics.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'MODEL':<10}{'F1':>8}{'PREC.':>8}{'RECALL':>8}{'ACC.':>8}{'AUC':>8}", file=out)
    for r in rows:
        vals = [float(r[k]) * 100 for k in ("f1", "precision", "recall", "accuracy")]
        auc = f"{float(r['roc_auc']) * 100:8.1f}" if r["roc_auc"] else f"{'-':>8}"
        print(f"{r['model'].upper():<10}" + "".join(f"{v:8.1f}" for v in vals) + auc, file=out)
    info = run_dir / "predictions" / "run_config.json"
    if info.exists():
        cfg = json.loads(info.read_text())
        print(f"split={cfg['split']} c={cfg['config']['c']} fusion={cfg['config']['fusion']}", file=out)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "synth":
        split = tuple(int(x) for x in args.split.split(","))
        if len(split) != 3:
            raise ConfigError("--split needs three comma-separated counts")
        try:
            cfg = SynthConfig(args.subjects_per_class, split, args.clips_per_subject,
                              args.duration, args.sample_rate, args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        print(generate_corpus(args.out, cfg))
        return EXIT_OK

    if args.command == "report":
        if args.manifest is not None:
            audit_run(load_manifest(args.manifest), args.out)
        _print_report(args.out)
        return EXIT_OK

    config = RunConfig.from_namespace(args)
    if args.command == "graph-export":
        for path in cmd_graph_export(args.wav, config, args.out):
            print(path)
        return EXIT_OK

    manifest = load_manifest(args.manifest)
    run_dir = args.out
    if args.command == "extract":
        res = cmd_extract(manifest, config, run_dir)
        print(json.dumps({"rows": res.n_rows, "errors": len(res.errors)}))
    elif args.command == "train":
        report = cmd_train(manifest, config, run_dir / "features", run_dir / "models")
        print(json.dumps({f: e["status"] for f, e in report["families"].items()}
                         | {"fusion": report["fusion"]["status"]}))
    elif args.command == "predict":
        res = cmd_predict(manifest, config, run_dir / "features", run_dir / "models", run_dir, args.split)
        audit_run(manifest, run_dir)
        print(res.report)
        if res.metrics:
            _print_report(run_dir)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ConfigError as exc:
        print(f"voicevg: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"voicevg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"voicevg: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
