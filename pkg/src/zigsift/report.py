"""Report writers: delimited text, JSON, and rendered figures.

Figures are optional at runtime — matplotlib is imported lazily with the Agg
backend so headless use and library consumers that never plot pay nothing.
"""

import json
import sys
from pathlib import Path

from .pipeline import AnalysisResult
from .util import format_addr16

IDENT_COLUMNS = ("time", "node", "command", "device", "event", "manufacturer",
                 "oui_class", "m", "dt", "et", "score", "evidence")


def write_identifications(result: AnalysisResult, out=sys.stdout) -> None:
    """One tab-separated row per identification (header first)."""
    out.write("\t".join(IDENT_COLUMNS) + "\n")
    for ident in result.identifications:
        d = ident.as_dict()
        d["manufacturer"] = d["manufacturer"] or "-"
        d["evidence"] = ",".join(str(i) for i in d["evidence"])
        out.write("\t".join(str(d[c]) for c in IDENT_COLUMNS) + "\n")


def write_matches(result: AnalysisResult, out=sys.stdout) -> None:
    out.write("node\tlabel\tbasis\tstored_interval\tobserved_interval\tbursts\n")
    for m in result.matches:
        d = m.as_dict()
        out.write(f"{d['node']}\t{d['label']}\t{d['basis']}\t"
                  f"{d['stored_interval']}\t{d['observed_interval']}\t"
                  f"{d['bursts']}\n")


def write_json_report(result: AnalysisResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_json_dict(), fh, indent=2)
        fh.write("\n")


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_figures(result: AnalysisResult, directory: str,
                   prefix: str = "capture") -> list[str]:
    """Render summary figures as PNG files; returns the paths written."""
    plt = _pyplot()
    outdir = Path(directory)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    # Identified events over time, one lane per node.
    fig, ax = plt.subplots(figsize=(9, 4.5))
    idents = result.identifications
    nodes = sorted({i.node for i in idents})
    lanes = {addr: y for y, addr in enumerate(nodes)}
    events = sorted({i.event for i in idents})
    cmap = plt.get_cmap("tab10")
    colors = {ev: cmap(k % 10) for k, ev in enumerate(events)}
    for ev in events:
        xs = [i.time for i in idents if i.event == ev]
        ys = [lanes[i.node] for i in idents if i.event == ev]
        ax.scatter(xs, ys, label=ev, color=colors[ev], s=36)
    ax.set_yticks(list(lanes.values()))
    ax.set_yticklabels([format_addr16(a) for a in nodes])
    ax.set_xlabel("capture time (s)")
    ax.set_title("identified events")
    if events:
        ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    path = outdir / f"{prefix}-events.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(str(path))

    # Score distribution.
    fig, ax = plt.subplots(figsize=(6, 4))
    scores = [i.score.total for i in idents]
    ax.hist(scores, bins=[x / 2 for x in range(0, 11)], edgecolor="black")
    ax.set_xlabel("identification score")
    ax.set_ylabel("count")
    ax.set_title("score distribution")
    fig.tight_layout()
    path = outdir / f"{prefix}-scores.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(str(path))

    # Application traffic per node (burst counts), with roles.
    fig, ax = plt.subplots(figsize=(7, 4))
    addrs = sorted(result.node_bursts)
    counts = [len(result.node_bursts[a]) for a in addrs]
    labels = [f"{format_addr16(a)}\n{result.node_map.ltype_of(a).value}"
              for a in addrs]
    ax.bar(range(len(addrs)), counts, color="#4878a8")
    ax.set_xticks(range(len(addrs)))
    ax.set_xticklabels(labels, fontsize="small")
    ax.set_ylabel("application bursts")
    ax.set_title("traffic per node")
    fig.tight_layout()
    path = outdir / f"{prefix}-traffic.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(str(path))

    return written
