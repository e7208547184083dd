"""Visualization mini-language: parse, validate, build chart documents.

Responses name a chart by index into the canonical type list; index 0
stays pinned to scatterplot because recorded traffic depends on it.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .engine import QueryResult
from .errors import MetasqlError

VIZ_TYPE_NAMES = ("scatterplot", "bar chart", "line chart", "histogram")

# wire tokens the UI switches on, same order as VIZ_TYPE_NAMES
VIZ_KIND_TOKENS = ("scatter", "bar", "line", "histogram")


class VizError(MetasqlError):
    """Malformed or invalid visualization spec; message feeds the retry."""


@dataclass(frozen=True)
class VizSpec:
    viz_type: int
    x_axis: str
    y_axis: Optional[str] = None

    @property
    def type_name(self) -> str:
        return VIZ_TYPE_NAMES[self.viz_type]

    @property
    def kind(self) -> str:
        return VIZ_KIND_TOKENS[self.viz_type]


_RESPONSE_RE = re.compile(
    r"VizType:\s*(-?\d+)\s*;\s*Xaxis:\s*([^;\n]+?)\s*"
    r"(?:;\s*Yaxis:\s*([^;\n]+?)\s*)?(?=$|[;\n])")


def parse_viz_response(text: str) -> VizSpec:
    """Extract the first spec line from a completion.

    Surrounding whitespace and trailing prose are tolerated; a missing
    or mangled spec raises VizError.
    """
    m = _RESPONSE_RE.search(text or "")
    if m is None:
        raise VizError("no visualization spec found in response")
    viz_type = int(m.group(1))
    if not 0 <= viz_type < len(VIZ_TYPE_NAMES):
        raise VizError(
            f"visualization type {viz_type} out of range 0..{len(VIZ_TYPE_NAMES) - 1}")
    y = m.group(3)
    return VizSpec(viz_type=viz_type, x_axis=m.group(2).strip(),
                   y_axis=y.strip() if y else None)


def format_viz_spec(spec: VizSpec) -> str:
    text = f"VizType: {spec.viz_type}; Xaxis: {spec.x_axis}"
    if spec.y_axis is not None:
        text += f"; Yaxis: {spec.y_axis}"
    return text


def validate_viz_spec(spec: VizSpec, columns: list[str]) -> None:
    """Check axis columns against the result's columns.

    Histograms take exactly one axis; every other type needs both.
    """
    if not 0 <= spec.viz_type < len(VIZ_TYPE_NAMES):
        raise VizError(f"visualization type {spec.viz_type} out of range")
    if _lookup(columns, spec.x_axis) is None:
        raise VizError(f"unknown x-axis column {spec.x_axis!r}")
    if spec.type_name == "histogram":
        if spec.y_axis is not None:
            raise VizError("histogram takes a single axis column")
        return
    if spec.y_axis is None:
        raise VizError(f"{spec.type_name} requires a y-axis column")
    if _lookup(columns, spec.y_axis) is None:
        raise VizError(f"unknown y-axis column {spec.y_axis!r}")


def _lookup(columns: list[str], name: str) -> Optional[int]:
    if name in columns:
        return columns.index(name)
    lowered = [c.lower() for c in columns]
    if name.lower() in lowered:
        return lowered.index(name.lower())
    return None


@dataclass
class ChartDocument:
    """Wire format served to the UI."""
    kind: str
    title: str
    x_label: str
    y_label: Optional[str] = None
    x_values: list = field(default_factory=list)
    y_values: Optional[list] = None

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "title": self.title, "x_label": self.x_label,
               "x_values": self.x_values}
        if self.y_label is not None:
            doc["y_label"] = self.y_label
        if self.y_values is not None:
            doc["y_values"] = self.y_values
        return doc


def build_chart(spec: VizSpec, result: QueryResult, title: str) -> ChartDocument:
    """Project the result columns onto a chart document.

    Rows where any plotted value is null are dropped pairwise so the
    axes stay aligned.
    """
    names = result.column_names
    validate_viz_spec(spec, names)
    xi = _lookup(names, spec.x_axis)
    if spec.type_name == "histogram":
        xs = [row[xi] for row in result.rows if row[xi] is not None]
        return ChartDocument(kind=spec.kind, title=title,
                             x_label=names[xi], x_values=xs)
    yi = _lookup(names, spec.y_axis)
    xs, ys = [], []
    for row in result.rows:
        if row[xi] is None or row[yi] is None:
            continue
        xs.append(row[xi])
        ys.append(row[yi])
    return ChartDocument(kind=spec.kind, title=title, x_label=names[xi],
                         y_label=names[yi], x_values=xs, y_values=ys)
