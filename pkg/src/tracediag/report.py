"""Diagnosis report container and its text, JSON and CSV renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

from .correlation import WindowDistance
from .diagnosis import MetricScore, RegionScore
from .selection import SelectionResult
from .stacks import KINDS, StackPair

BAR = "====="


@dataclass
class DiagnosisReport:
    metric_scores: list
    config_echo: dict
    selected_run: Optional[SelectionResult] = None
    region_scores: Optional[list] = None
    region_metric: Optional[str] = None
    stack_region: Optional[str] = None
    stack_pairs: Optional[dict] = None
    stack_totals: Optional[dict] = None
    warnings: list = field(default_factory=list)
    # plot data, not part of the rendered report
    window_distances: list = field(default_factory=list, repr=False)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _header(title: str) -> str:
    return f"{BAR} {title} {BAR}"


def _metrics_block(scores: list[MetricScore], top: int) -> list[str]:
    lines = [_header(f"Top-{top} Abnormal Metrics"), "Format: [Rank] [Metric]"]
    lines += [f"[{m.rank}]: {m.metric}" for m in scores[:top]]
    if len(scores) > top:
        lines += ["", _header("Other Metrics")]
        lines += [f"[{m.rank}]: {m.metric}" for m in scores[top:]]
    return lines


def _regions_block(regions: list[RegionScore], top: int) -> list[str]:
    lines = [_header(f"Top-{top} Abnormal Code Regions")]
    for r in regions[:top]:
        lines += [f"[{r.rank}]:", f"    [{r.count}] {r.region}"]
    return lines


def _selection_block(sel: SelectionResult, top_k: int) -> list[str]:
    lines = [_header("Closest Normal Run"), f"[Selected]: {sel.chosen}",
             f"Format: [Windows in top-{top_k}] [Mean distance] [Run]"]
    for label in sorted(sel.tally, key=lambda r: (-sel.tally[r], sel.mean_distance[r], r)):
        lines.append(f"    [{sel.tally[label]}] {_fmt(sel.mean_distance[label])} {label}")
    return lines


def _frames(stack, indent="        ") -> list[str]:
    return [indent + str(f) for f in stack.frames]


def _stack_block(kind: str, pairs: list[StackPair], total: int) -> list[str]:
    lines = [_header(f"{kind.capitalize()} Call Stacks ({total} found)")]
    if kind == "disjoint":
        lines.append("Format: [Rank] [Max overlap] [Abnormal freq]")
    else:
        lines.append("Format: [Rank] [Score] [Abnormal freq/Normal freq]")
    for rank, p in enumerate(pairs, start=1):
        if p.normal is None:
            lines.append(f"[{rank}]: [{int(p.score)}] [{p.abnormal.freq}]")
            lines += ["    abnormal:"] + _frames(p.abnormal.stack)
        else:
            lines.append(f"[{rank}]: [{_fmt(p.score)}] [{p.abnormal.freq}/{p.normal.freq}]")
            lines += ["    abnormal:"] + _frames(p.abnormal.stack)
            lines += ["    normal:"] + _frames(p.normal.stack)
    return lines


def render_text(report: DiagnosisReport) -> str:
    """Canonical plain-text report; sections appear only for stages that produced output."""
    cfg = report.config_echo
    blocks = []
    if report.selected_run is not None:
        blocks.append(_selection_block(report.selected_run, cfg.get("top_k", 25)))
    blocks.append(_metrics_block(report.metric_scores, cfg.get("top_metrics", 3)))
    if report.region_scores:
        blocks.append(_regions_block(report.region_scores, cfg.get("top_regions", 3)))
    if report.stack_pairs is not None:
        for kind in KINDS:
            if kind in report.stack_pairs:
                blocks.append(_stack_block(kind, report.stack_pairs[kind], report.stack_totals[kind]))
    if report.warnings:
        blocks.append([_header("Warnings")] + list(report.warnings))
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


def _stack_json(stack) -> list[str]:
    return [str(f) for f in stack.frames]


def _pair_json(p: StackPair) -> dict:
    out = {"score": p.score, "abnormal": {"frames": _stack_json(p.abnormal.stack), "freq": p.abnormal.freq}}
    out["normal"] = None if p.normal is None else {"frames": _stack_json(p.normal.stack), "freq": p.normal.freq}
    return out


def report_dict(report: DiagnosisReport) -> dict:
    out: dict = {}
    if report.selected_run is not None:
        sel = report.selected_run
        out["selected_run"] = {"chosen": sel.chosen, "tally": dict(sel.tally), "mean_distance": dict(sel.mean_distance)}
    out["metric_scores"] = [{"rank": m.rank, "metric": m.metric, "score": m.score} for m in report.metric_scores]
    if report.region_scores is not None:
        out["region_metric"] = report.region_metric
        out["region_scores"] = [{"rank": r.rank, "region": r.region, "count": r.count} for r in report.region_scores]
    if report.stack_pairs is not None:
        out["stack_region"] = report.stack_region
        out["stack_pairs"] = {k: [_pair_json(p) for p in v] for k, v in report.stack_pairs.items()}
        out["stack_totals"] = dict(report.stack_totals)
    out["warnings"] = list(report.warnings)
    out["config_echo"] = dict(report.config_echo)
    return out


def render_json(report: DiagnosisReport) -> str:
    return json.dumps(report_dict(report), indent=2) + "\n"


def emit_plot_data(dists: list[WindowDistance]) -> str:
    """CSV of window distances, one row per (abnormal window, normal run)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["abnormal_window", "normal_run", "distance"])
    for d in sorted(dists, key=lambda d: (d.abnormal_window, d.normal_run)):
        writer.writerow([str(d.abnormal_window), d.normal_run, repr(float(d.distance))])
    return buf.getvalue()


_PAIR_SCHEMA = {
    "type": "object",
    "required": ["score", "abnormal", "normal"],
    "properties": {
        "score": {"type": "number"},
        "abnormal": {"$ref": "#/$defs/record"},
        "normal": {"oneOf": [{"type": "null"}, {"$ref": "#/$defs/record"}]},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["metric_scores", "warnings", "config_echo"],
    "additionalProperties": False,
    "$defs": {
        "record": {
            "type": "object",
            "required": ["frames", "freq"],
            "properties": {
                "frames": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "freq": {"type": "integer", "minimum": 1},
            },
        },
    },
    "properties": {
        "selected_run": {
            "type": "object",
            "required": ["chosen", "tally", "mean_distance"],
            "properties": {
                "chosen": {"type": "string"},
                "tally": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
                "mean_distance": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
            },
        },
        "metric_scores": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rank", "metric", "score"],
                "properties": {
                    "rank": {"type": "integer", "minimum": 1},
                    "metric": {"type": "string"},
                    "score": {"type": "number", "minimum": 0},
                },
            },
        },
        "region_metric": {"type": "string"},
        "region_scores": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rank", "region", "count"],
                "properties": {
                    "rank": {"type": "integer", "minimum": 1},
                    "region": {"type": "string"},
                    "count": {"type": "integer", "minimum": 0},
                },
            },
        },
        "stack_region": {"type": "string"},
        "stack_pairs": {
            "type": "object",
            "propertyNames": {"enum": list(KINDS)},
            "additionalProperties": {"type": "array", "items": _PAIR_SCHEMA},
        },
        "stack_totals": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "config_echo": {"type": "object"},
    },
}
