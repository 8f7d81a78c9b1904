"""Figures and tabular summaries for a run directory.

Reads the artifacts a run (and optionally a check) left behind and renders
them to files next to the inputs: a timeline of the trace per agent, a bar
chart of property outcomes when a property report is present, and a
delimited summary of consent lifecycles, properties, and anomaly counts.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .consent import fold_consent
from .ledger import load_and_validate
from .simnet import TraceEvent, read_trace

_STATUS_COLORS = {
    "committed": "#2b6cb0",
    "observed": "#2f855a",
    "rejected": "#c53030",
    "injected": "#b7791f",
}

_PROPERTY_COLORS = {
    "holds": "#2f855a",
    "violated": "#c53030",
    "bound_explosion": "#b7791f",
}


class ReportError(ValueError):
    """Missing or unreadable run artifacts."""


def _timeline(events: list[TraceEvent], path: Path) -> None:
    actors = sorted({e.actor for e in events})
    lanes = {a: i for i, a in enumerate(actors)}
    fig, ax = plt.subplots(figsize=(10, 1 + 0.6 * max(len(actors), 1)))
    seen_status = []
    for e in events:
        color = _STATUS_COLORS[e.status]
        label = e.status if e.status not in seen_status else None
        if label:
            seen_status.append(e.status)
        ax.scatter(e.tick, lanes[e.actor], color=color, s=36, label=label, zorder=3)
        ax.annotate(
            e.tag.replace("Send", "").replace("Recv", "r:"),
            (e.tick, lanes[e.actor]),
            textcoords="offset points",
            xytext=(0, 7),
            fontsize=6,
            rotation=30,
            ha="left",
        )
    ax.set_yticks(range(len(actors)))
    ax.set_yticklabels(actors)
    ax.set_xlabel("tick")
    ax.set_title("run timeline")
    ax.grid(axis="x", linestyle=":", alpha=0.5, zorder=0)
    if seen_status:
        ax.legend(loc="upper left", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _properties_chart(doc: dict, path: Path) -> None:
    props = doc.get("properties", {})
    names = sorted(props)
    fig, ax = plt.subplots(figsize=(7, 1 + 0.4 * max(len(names), 1)))
    for i, name in enumerate(names):
        entry = props[name]
        color = _PROPERTY_COLORS.get(entry["status"], "#718096")
        alpha = 0.45 if entry.get("vacuous") else 1.0
        ax.barh(i, 1.0, color=color, alpha=alpha)
        text = entry["status"] + (" (vacuous)" if entry.get("vacuous") else "")
        ax.text(0.02, i, text, va="center", fontsize=8, color="white")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.set_xticks([])
    ax.set_title("property outcomes")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _summary_rows(out_dir: Path) -> list[list[str]]:
    rows: list[list[str]] = [["section", "name", "value", "extra"]]
    chain_path = out_dir / "chain.cchn"
    if chain_path.exists():
        chain, result = load_and_validate(chain_path.read_bytes())
        rows.append(["chain", "valid", str(result.ok).lower(), result.detail])
        if chain is not None:
            refs: list[bytes] = []
            for _ts, action, _loc in chain.iter_committed():
                if action.rf is not None and action.rf not in refs:
                    refs.append(action.rf)
            for rf in refs:
                events = [(ts, a) for ts, a, _ in chain.iter_committed() if a.rf == rf]
                record, _ = fold_consent(events)
                if record is None:
                    rows.append(["consent", rf.hex(), "unrequested", ""])
                else:
                    rows.append(["consent", rf.hex(), record.phase.value, record.validity.value])
    props_path = out_dir / "properties.json"
    if props_path.exists():
        doc = json.loads(props_path.read_text())
        for name in sorted(doc.get("properties", {})):
            entry = doc["properties"][name]
            rows.append(["property", name, entry["status"], "vacuous" if entry.get("vacuous") else ""])
    anomalies_path = out_dir / "anomalies.json"
    if anomalies_path.exists():
        doc = json.loads(anomalies_path.read_text())
        counts: dict[str, int] = {}
        for entry in doc.get("anomalies", []):
            counts[entry["kind"]] = counts.get(entry["kind"], 0) + 1
        for kind in sorted(counts):
            rows.append(["anomaly", kind, str(counts[kind]), ""])
    return rows


def render_report(out_dir: str | Path) -> list[Path]:
    """Render figures and the summary for one run directory; returns the
    files written. The trace is required, everything else is optional."""
    out_dir = Path(out_dir)
    trace_path = out_dir / "trace.ndjson"
    if not trace_path.exists():
        raise ReportError(f"no trace at {trace_path}")
    events = read_trace(trace_path)
    written: list[Path] = []

    timeline = out_dir / "timeline.png"
    _timeline(events, timeline)
    written.append(timeline)

    props_path = out_dir / "properties.json"
    if props_path.exists():
        chart = out_dir / "properties.png"
        _properties_chart(json.loads(props_path.read_text()), chart)
        written.append(chart)

    summary = out_dir / "summary.csv"
    with summary.open("w", newline="") as handle:
        csv.writer(handle).writerows(_summary_rows(out_dir))
    written.append(summary)
    return written
