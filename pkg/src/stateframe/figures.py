"""Figure rendering for validation reports.

Written for the CLI's report path: when asked, a run drops a small set of
PNGs next to its report so the compliance picture can be read at a
glance without parsing JSON.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .compliance import ExceptionKind, ExceptionReport
from .graph import StateGraph

_KIND_LABELS = {
    ExceptionKind.STATE_VALUE_MISMATCH: "state value",
    ExceptionKind.ITEM_CODE_VALUE_MISMATCH: "item code",
    ExceptionKind.CROSS_COUNTRY_MISMATCH: "cross country",
    ExceptionKind.MISSING_EXPECTED_VALUE: "missing value",
}


def save_report_figures(report: ExceptionReport, graph: StateGraph, out_dir: Path) -> list[Path]:
    """Render the summary figures into out_dir, returning the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        _exceptions_by_kind(report, out_dir / "exceptions_by_kind.png"),
        _compliance_summary(report, out_dir / "compliance_summary.png"),
        _state_graph(graph, out_dir / "state_graph.png"),
    ]


def _exceptions_by_kind(report: ExceptionReport, path: Path) -> Path:
    counts = {kind: 0 for kind in ExceptionKind}
    for exc in report.exceptions:
        counts[exc.kind] += 1
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [_KIND_LABELS[k] for k in ExceptionKind]
    values = [counts[k] for k in ExceptionKind]
    ax.bar(labels, values, color="#b23a48")
    ax.set_ylabel("exceptions")
    ax.set_title("Coherence exceptions by kind")
    ax.yaxis.get_major_locator().set_params(integer=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _compliance_summary(report: ExceptionReport, path: Path) -> Path:
    compliant = report.final_products_compliant
    failing = report.final_products_checked - compliant
    fig, ax = plt.subplots(figsize=(6, 2.8))
    ax.barh(["final products"], [compliant], color="#3a7d44", label="compliant")
    ax.barh(["final products"], [failing], left=[compliant], color="#b23a48", label="with exceptions")
    ax.set_xlim(0, max(report.final_products_checked, 1))
    ax.set_title(f"Compliance: {report.ratio_display()} of final products")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _state_graph(graph: StateGraph, path: Path) -> Path:
    """Layered drawing of the filiation DAG, shared states highlighted."""
    depth = _depths(graph)
    layers: dict[int, list[str]] = {}
    for code in sorted(graph.nodes):
        layers.setdefault(depth[code], []).append(code)
    pos: dict[str, tuple[float, float]] = {}
    for level, codes in layers.items():
        for i, code in enumerate(codes):
            pos[code] = (i - (len(codes) - 1) / 2, -level)

    fig, ax = plt.subplots(figsize=(8, 5))
    for parent, kids in graph.children.items():
        for child in kids:
            (x0, y0), (x1, y1) = pos[parent], pos[child]
            ax.plot([x0, x1], [y0, y1], color="#9a9a9a", linewidth=0.8, zorder=1)
    for code, (x, y) in pos.items():
        if code in graph.product_of_final:
            color = "#2b6cb0"
        elif len(graph.ownership.get(code, ())) > 1:
            color = "#d69e2e"
        else:
            color = "#3a7d44"
        ax.scatter([x], [y], s=160, color=color, zorder=2)
        if len(pos) <= 40:
            ax.annotate(code, (x, y), textcoords="offset points", xytext=(0, 9),
                        ha="center", fontsize=7)
    ax.set_axis_off()
    ax.set_title("Production state graph (blue: final, amber: shared)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _depths(graph: StateGraph) -> dict[str, int]:
    """Longest distance from any final (roots at depth 0)."""
    in_degree = {code: 0 for code in graph.nodes}
    for kids in graph.children.values():
        for child in kids:
            in_degree[child] += 1
    depth = {code: 0 for code in graph.nodes}
    queue = [code for code, deg in in_degree.items() if deg == 0]
    while queue:
        node = queue.pop()
        for child in graph.children[node]:
            depth[child] = max(depth[child], depth[node] + 1)
            in_degree[child] -= 1
            if in_degree[child] == 0:
                queue.append(child)
    return depth
