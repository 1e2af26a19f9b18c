# credex/render.py
import io
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader, select_autoescape

from credex import config
from credex.belief import Subset
from credex.errors import InputError, UnsupportedDimension
from credex.explain import DnfExplanation, DnfTable, RepresentativenessReport, region_boxes, tree_to_dnf
from credex.iemm import ExplainerTree, Leaf, Node
from credex.partition import CredalPartition, Dataset, dominant_focal

BASE_DIR = os.path.dirname(__file__)
TEMPLATE_DIR = os.path.join(BASE_DIR, "templates")

env = Environment(
    loader=FileSystemLoader(TEMPLATE_DIR),
    autoescape=select_autoescape(enabled_extensions=("svg.j2",), default_for_string=False, default=False),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39",
    "#7b4173", "#3182bd",
)

FORMAT_ALIASES = {"md": "markdown", "markdown": "markdown", "csv": "csv", "json": "json",
                  "dot": "dot", "svg": "svg-scatter", "svg-scatter": "svg-scatter"}


def render_template(template_name: str, **kwargs) -> str:
    template = env.get_template(template_name)
    return template.render(**kwargs)


def display_key(a: Subset) -> str:
    if a == a.frame.omega and a.frame.cardinality > 1:
        return "Ω"
    if a.is_singleton:
        return a.labels[0]
    return "{" + ",".join(a.labels) + "}"


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _csv(df: pd.DataFrame) -> str:
    buf = io.StringIO()
    df.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


# ---------- explanations ----------
def _as_table(obj: Union[DnfTable, DnfExplanation, ExplainerTree]) -> DnfTable:
    if isinstance(obj, DnfTable):
        return obj
    if isinstance(obj, ExplainerTree):
        return DnfTable(obj.focal_sets, ((obj.label, tree_to_dnf(obj)),))
    return DnfTable(obj.focal_sets, (("-", obj),))


def render_dnf_markdown(obj: Union[DnfTable, DnfExplanation, ExplainerTree]) -> str:
    table = _as_table(obj)
    return render_template(
        "dnf_table.md.j2",
        columns=[display_key(a) for a in table.focal_sets],
        rows=table.cells(),
    )


def render_dnf_csv(obj: Union[DnfTable, DnfExplanation, ExplainerTree]) -> str:
    table = _as_table(obj)
    cols = [display_key(a) for a in table.focal_sets]
    records = [[label, *cells] for label, cells in table.cells()]
    return _csv(pd.DataFrame(records, columns=["lambda", *cols]))


def dnf_table_json(obj: Union[DnfTable, DnfExplanation, ExplainerTree]) -> Dict[str, Any]:
    table = _as_table(obj)
    return {label: dnf.to_json() for label, dnf in table.rows}


# ---------- representativeness ----------
def render_matrix_markdown(report: RepresentativenessReport, digits: int = 6) -> str:
    rows = []
    for i, label in enumerate(report.train_labels):
        cells = []
        for j in range(len(report.eval_labels)):
            v = f"{report.values[i, j]:.{digits}f}"
            cells.append(f"**{v}**" if report.bold[i, j] else v)
        rows.append((label, cells))
    return render_template("matrix.md.j2", columns=list(report.eval_labels), rows=rows)


def render_matrix_csv(report: RepresentativenessReport) -> str:
    df = pd.DataFrame(report.values, columns=[f"U^{e}" for e in report.eval_labels])
    df.insert(0, "train_lambda", list(report.train_labels))
    return _csv(df)


def report_json(report: RepresentativenessReport) -> Dict[str, Any]:
    return {
        "train_lambdas": list(report.train_labels),
        "eval_lambdas": list(report.eval_labels),
        "values": report.values.tolist(),
        "bold": report.bold.tolist(),
    }


# ---------- trees ----------
def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_tree_dot(tree: ExplainerTree) -> str:
    nodes: List[Dict[str, str]] = []
    edges: List[Dict[str, str]] = []

    def visit(node: Node) -> str:
        nid = f"n{len(nodes)}"
        if isinstance(node, Leaf):
            nodes.append({"id": nid, "label": _dot_escape(display_key(tree.focal_sets[node.focal])), "shape": "box"})
            return nid
        entry = {"id": nid, "label": "", "shape": "ellipse"}
        nodes.append(entry)
        name = _dot_escape(tree.feature_names[node.dim])
        entry["label"] = f"{name} ≤ {node.threshold:.2f}\\ncost {node.cost:.4g}"
        left = visit(node.left)
        right = visit(node.right)
        edges.append({"src": nid, "dst": left, "label": "yes"})
        edges.append({"src": nid, "dst": right, "label": "no"})
        return nid

    visit(tree.root)
    return render_template("tree.dot.j2", name=_dot_escape(f"lambda_{tree.label}"), nodes=nodes, edges=edges)


# ---------- scatter ----------
@dataclass(frozen=True, eq=False)
class ScatterScene:
    tree: ExplainerTree
    data: Dataset
    partition: CredalPartition


def render_scatter_svg(scene: ScatterScene, size: Optional[int] = None) -> str:
    data, tree, p = scene.data, scene.tree, scene.partition
    if data.dim != 2:
        raise UnsupportedDimension(f"scatter plots need 2-D data, got {data.dim} dimensions")
    size = size or config.CREDEX_SVG_SIZE
    lo, hi = data.bounds()
    cen = tree.centroids.points
    lo = np.minimum(lo, cen.min(axis=0))
    hi = np.maximum(hi, cen.max(axis=0))
    pad = 0.05 * np.where(hi > lo, hi - lo, 1.0)
    lo, hi = lo - pad, hi + pad
    span = hi - lo

    def px(pt) -> tuple:
        return (
            round(float((pt[0] - lo[0]) / span[0] * size), 2),
            round(float((hi[1] - pt[1]) / span[1] * size), 2),
        )

    boxes = []
    for focal, a, b in region_boxes(tree, lo, hi):
        x0, y1 = px(a)
        x1, y0 = px(b)
        boxes.append({"x": x0, "y": y0, "w": round(x1 - x0, 2), "h": round(y1 - y0, 2),
                      "color": PALETTE[focal % len(PALETTE)], "label": display_key(tree.focal_sets[focal])})
    dom = dominant_focal(p)
    points = [{"xy": px(z), "color": PALETTE[int(k) % len(PALETTE)]} for z, k in zip(data.values, dom)]
    centroids = [{"xy": px(c), "label": display_key(a)} for c, a in zip(cen, tree.focal_sets)]
    legend = [{"color": PALETTE[k % len(PALETTE)], "label": display_key(a)} for k, a in enumerate(tree.focal_sets)]
    return render_template(
        "scatter.svg.j2",
        size=size,
        title=f"lambda = {tree.label}",
        features=data.feature_names,
        boxes=boxes,
        points=points,
        centroids=centroids,
        legend=legend,
    )


def render_report(obj: Any, fmt: str) -> str:
    """Text form of a report, explanation table, tree or scatter scene."""
    kind = FORMAT_ALIASES.get(fmt.strip().lower())
    if kind is None:
        raise InputError(f"unknown format {fmt!r}; expected one of {sorted(FORMAT_ALIASES)}")
    if isinstance(obj, RepresentativenessReport):
        if kind == "markdown":
            return render_matrix_markdown(obj)
        if kind == "csv":
            return render_matrix_csv(obj)
        if kind == "json":
            return _dumps(report_json(obj))
    elif isinstance(obj, (DnfTable, DnfExplanation)):
        if kind == "markdown":
            return render_dnf_markdown(obj)
        if kind == "csv":
            return render_dnf_csv(obj)
        if kind == "json":
            return _dumps(dnf_table_json(obj))
    elif isinstance(obj, ExplainerTree):
        if kind == "json":
            return _dumps(obj.to_json())
        if kind == "dot":
            return render_tree_dot(obj)
        if kind == "markdown":
            return render_dnf_markdown(obj)
        if kind == "csv":
            return render_dnf_csv(obj)
    elif isinstance(obj, ScatterScene):
        if kind == "svg-scatter":
            return render_scatter_svg(obj)
    raise InputError(f"cannot render {type(obj).__name__} as {kind}")
