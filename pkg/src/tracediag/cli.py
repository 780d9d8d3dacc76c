"""Command-line entry points: ``tracediag [diagnose] ...`` and ``tracediag synth ...``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import EmptyInput, InvalidFault, InvalidRun, ParseError, SchemaMismatch, UnknownMetric
from .estimators import ClosestRunSelector, MetricRanker, StackComparator
from .report import DiagnosisReport, emit_plot_data, render_json, render_text
from .selection import SelectorConfig, select_closest_run
from .stacks import KINDS
from .synth import FaultSpec, GenConfig, make_fixture
from .trace_io import FAULT_KINDS, dump_manifest, read_trace, save_trace

AUTO = "auto"


@dataclass(frozen=True)
class PipelineConfig:
    normal: tuple
    abnormal: str
    select_regions: bool = False
    metric: Optional[str] = None
    stacks: Optional[str] = None
    mode: str = "all"
    top_k: int = 25
    window_sizes: tuple = (32, 64, 128)
    stride: float = 0.5
    len_threshold: int = 3
    rho: int = 2
    anomalous_windows: int = 5
    top_regions: int = 3
    top_metrics: int = 3
    top_stacks: int = 3
    pairing: str = "nearest"

    def echo(self) -> dict:
        out = asdict(self)
        out["normal"] = list(self.normal)
        out["window_sizes"] = list(self.window_sizes)
        return out

    @classmethod
    def from_echo(cls, echo: dict) -> "PipelineConfig":
        kw = dict(echo)
        kw["normal"] = tuple(kw["normal"])
        kw["window_sizes"] = tuple(kw["window_sizes"])
        return cls(**kw)


def _labels(paths) -> list[str]:
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    return [str(p) for p in paths]


def _load(path, label):
    try:
        return read_trace(path, label=label)
    except ParseError as exc:
        raise ParseError(exc.line, f"{path}: {exc.reason}") from None


def run_pipeline(cfg: PipelineConfig) -> DiagnosisReport:
    """parse -> select run -> rank metrics -> localize regions -> compare stacks."""
    if not cfg.normal:
        raise EmptyInput("at least one normal trace is required")
    labels = _labels(list(cfg.normal) + [cfg.abnormal])
    normals = [_load(p, lab) for p, lab in zip(cfg.normal, labels)]
    abnormal = _load(cfg.abnormal, labels[-1] if labels[-1] not in labels[:-1] else cfg.abnormal)
    windows = dict(window_sizes=tuple(cfg.window_sizes), stride=cfg.stride)

    selector = ClosestRunSelector(top_k=cfg.top_k, pairing=cfg.pairing, **windows).fit(normals)
    dists = selector.score(abnormal)
    selection = None
    reference = normals[0]
    if len(normals) > 1:
        selection = select_closest_run(dists, SelectorConfig(cfg.top_k))
        reference = selector.runs_[selection.chosen]

    ranker = MetricRanker(n_windows=cfg.anomalous_windows, top_regions=cfg.top_regions, **windows).fit(reference)
    report = DiagnosisReport(metric_scores=ranker.rank(abnormal), config_echo=cfg.echo(),
                             selected_run=selection, window_distances=dists)

    if cfg.select_regions or cfg.stacks == AUTO:
        metric = cfg.metric or report.metric_scores[0].metric
        report.region_metric = metric
        report.region_scores = ranker.localize(abnormal, metric)

    if cfg.stacks:
        region = cfg.stacks
        if region == AUTO:
            region = report.region_scores[0].region if report.region_scores else None
        if region is None:
            report.warnings.append("stack analysis skipped: no suspicious region found")
        else:
            comparator = StackComparator(region_filter=region, len_threshold=cfg.len_threshold,
                                         rho=cfg.rho, mode=cfg.mode).fit(reference)
            pairs = comparator.compare(abnormal)
            report.stack_region = region
            report.stack_totals = {k: len(v) for k, v in pairs.items()}
            report.stack_pairs = {k: v[: cfg.top_stacks] for k, v in pairs.items()}
            report.warnings += [f"{reference.label}: {w}" for w in comparator.normal_warnings_]
            report.warnings += [f"{abnormal.label}: {w}" for w in comparator.abnormal_warnings_]
    return report


def _sizes(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def diagnose_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tracediag", description="Diagnose an abnormal run against normal runs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-n", "--normal", action="append", required=True, metavar="TRACE",
                   help="normal run trace (repeat for several runs)")
    p.add_argument("-a", "--abnormal", required=True, metavar="TRACE")
    p.add_argument("--select-regions", action="store_true", help="localize suspicious code regions")
    p.add_argument("-m", "--metric", help="metric driving region localization (default: top-ranked)")
    p.add_argument("--stacks", nargs="?", const=AUTO, metavar="REGION",
                   help="compare call stacks of REGION (default: top localized region)")
    p.add_argument("--mode", choices=KINDS + ("all",), default="all")
    p.add_argument("--top-k", type=int, default=25, help="closest windows tallied for run selection")
    p.add_argument("--window-sizes", type=_sizes, default=(32, 64, 128), metavar="S1,S2,...")
    p.add_argument("--stride", type=float, default=0.5, help="window step as a fraction of its size")
    p.add_argument("--len-threshold", type=int, default=3, help="stack length gate N")
    p.add_argument("--rho", type=int, default=2, help="disjoint overlap bound")
    p.add_argument("--anomalous-windows", type=int, default=5, help="anomalous windows per size class")
    p.add_argument("--top-regions", type=int, default=3)
    p.add_argument("--top-metrics", type=int, default=3)
    p.add_argument("--top-stacks", type=int, default=3, help="stack pairs reported per kind")
    p.add_argument("--pairing", choices=("nearest", "aligned"), default="nearest")
    p.add_argument("--report", choices=("text", "json", "csv"), default="text")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    return p


def _write(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _fail(code: int, msg: str) -> int:
    print(f"tracediag: error: {msg}", file=sys.stderr)
    return code


def diagnose_main(argv) -> int:
    parser = diagnose_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = PipelineConfig(
            normal=tuple(args.normal), abnormal=args.abnormal, select_regions=args.select_regions,
            metric=args.metric, stacks=args.stacks, mode=args.mode, top_k=args.top_k,
            window_sizes=args.window_sizes, stride=args.stride, len_threshold=args.len_threshold,
            rho=args.rho, anomalous_windows=args.anomalous_windows, top_regions=args.top_regions,
            top_metrics=args.top_metrics, top_stacks=args.top_stacks, pairing=args.pairing,
        )
        report = run_pipeline(cfg)
    except (ParseError, SchemaMismatch, InvalidRun, OSError) as exc:
        return _fail(1, str(exc))
    except UnknownMetric as exc:
        return _fail(2, f"unknown metric {exc.args[0]!r}")
    except ValueError as exc:
        return _fail(2, str(exc))
    if args.report == "json":
        _write(render_json(report), args.output)
    elif args.report == "csv":
        _write(emit_plot_data(report.window_distances), args.output)
    else:
        _write(render_text(report), args.output)
    return 0


def synth_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tracediag synth", description="Write a synthetic fault-injection fixture.")
    p.add_argument("--fault", choices=FAULT_KINDS, required=True)
    p.add_argument("--metric", help="leak target metric")
    p.add_argument("--method", help="target method (name or region/method) for stack faults")
    p.add_argument("--magnitude", type=float, default=10.0)
    p.add_argument("--onset", type=float, default=0.5, help="fault onset as a fraction of the run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normals", type=int, default=1, help="number of normal runs")
    p.add_argument("--source", type=int, default=0, help="normal run the abnormal run derives from")
    p.add_argument("--events", type=int, default=2000)
    p.add_argument("--metrics", type=int, default=8)
    p.add_argument("--threads", type=int, default=2)
    p.add_argument("--base-correlation", type=float, default=0.8)
    p.add_argument("--out", default=".", help="output directory")
    return p


def synth_command(args) -> list[Path]:
    cfg = GenConfig(seed=args.seed, n_metrics=args.metrics, n_events=args.events,
                    n_threads=args.threads, base_correlation=args.base_correlation)
    fault = FaultSpec(args.fault, metric=args.metric, method=args.method,
                      magnitude=args.magnitude, onset_fraction=args.onset)
    normals, abnormal, manifest = make_fixture(cfg, fault, n_normals=args.normals, source=args.source)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [save_trace(r, out / f"{r.label}.trc") for r in normals]
    paths.append(save_trace(abnormal, out / "abnormal.trc"))
    manifest_path = out / "manifest.tsv"
    manifest_path.write_bytes(dump_manifest(manifest))
    paths.append(manifest_path)
    return paths


def synth_main(argv) -> int:
    try:
        args = synth_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        paths = synth_command(args)
    except (InvalidFault, ValueError) as exc:
        return _fail(2, str(exc))
    for p in paths:
        print(p)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "synth":
        return synth_main(argv[1:])
    if argv and argv[0] == "diagnose":
        argv = argv[1:]
    return diagnose_main(argv)


if __name__ == "__main__":
    sys.exit(main())
