"""Causal Debate Chart as standalone SVG: a bidirectional bar chart of the ten ratings."""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .prompts import PATTERN_CODES
from .verdict import EdgeAuditProfile, Verdict

ROW_LABELS = {
    "general": "changing",
    "hh": "higher → higher",
    "hl": "higher → lower",
    "lh": "lower → higher",
    "ll": "lower → lower",
}


@dataclass(frozen=True)
class ChartStyle:
    general_color: str = "#9e9e9e"
    specific_palette: dict = field(default_factory=lambda: {
        "hh": "#1f77b4",
        "hl": "#ff7f0e",
        "lh": "#2ca02c",
        "ll": "#d62728",
    })
    unit: int = 50  # pixels per rating point
    bar_height: int = 22
    row_gap: int = 10
    label_width: int = 130
    header_height: int = 48
    footer_height: int = 44
    font_family: str = "Helvetica, Arial, sans-serif"

    def __post_init__(self):
        colors = [self.specific_palette[k] for k in PATTERN_CODES]
        if len({c.lower() for c in colors}) != 4:
            raise ValueError("specific palette colors must be pairwise distinct")
        if self.general_color.lower() in {c.lower() for c in colors}:
            raise ValueError("specific palette must not reuse the general (gray) color")

    def color(self, kind: str) -> str:
        return self.general_color if kind == "general" else self.specific_palette[kind]

    @property
    def width(self) -> int:
        return 2 * (4 * self.unit + self.label_width // 2) + 40

    def height(self, footer: bool) -> int:
        rows = 5 * (self.bar_height + self.row_gap)
        return self.header_height + rows + (self.footer_height if footer else 10)


def _esc(s: str) -> str:
    return html.escape(s, quote=True)


def render_debate_chart(profile: EdgeAuditProfile, style: ChartStyle | None = None,
                        verdict: Verdict | None = None) -> str:
    style = style or ChartStyle()
    w, h = style.width, style.height(verdict is not None)
    cx = w // 2
    half_label = style.label_width // 2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" '
        f'font-family="{_esc(style.font_family)}" font-size="12">',
        f"<title>{_esc(profile.edge_label)} {_esc(profile.responder)}: "
        f"{_esc(profile.a_name)} vs {_esc(profile.b_name)}</title>",
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
        f'<text x="{cx - half_label - 2 * style.unit}" y="28" text-anchor="middle" font-weight="bold" '
        f'class="header" data-side="A">{_esc(profile.a_name)}</text>',
        f'<text x="{cx + half_label + 2 * style.unit}" y="28" text-anchor="middle" font-weight="bold" '
        f'class="header" data-side="B">{_esc(profile.b_name)}</text>',
    ]
    for row, pair in enumerate(profile.pairs):
        y = style.header_height + row * (style.bar_height + style.row_gap)
        color = style.color(pair.kind)
        out.append(f'<text x="{cx}" y="{y + style.bar_height * 0.7:.1f}" text-anchor="middle" '
                   f'fill="#333333">{_esc(ROW_LABELS[pair.kind])}</text>')
        for side, rating in (("A", pair.a_side), ("B", pair.b_side)):
            length = 0 if rating is None else rating * style.unit
            x = cx - half_label - length if side == "A" else cx + half_label
            out.append(
                f'<rect class="bar" x="{x}" y="{y}" width="{length}" height="{style.bar_height}" '
                f'fill="{color}" data-side="{side}" data-kind="{pair.kind}" '
                f'data-rating="{"" if rating is None else rating}"/>'
            )
            label = "?" if rating is None else str(rating)
            tx = x - 4 if side == "A" else x + length + 4
            anchor = "end" if side == "A" else "start"
            out.append(f'<text x="{tx}" y="{y + style.bar_height * 0.7:.1f}" text-anchor="{anchor}" '
                       f'fill="#333333">{label}</text>')
    axis_top = style.header_height - 4
    axis_bottom = style.header_height + 5 * (style.bar_height + style.row_gap) - style.row_gap + 4
    for x in (cx - half_label, cx + half_label):
        out.append(f'<line x1="{x}" y1="{axis_top}" x2="{x}" y2="{axis_bottom}" stroke="#333333"/>')
    if verdict is not None:
        text = verdict.code
        if verdict.reasons:
            text += " (" + ", ".join(verdict.reasons) + ")"
        elif verdict.dominant is not None:
            dominant = profile.a_name if verdict.dominant.value == "A" else profile.b_name
            text += f" ({dominant} dominant)"
        out.append(f'<text x="{cx}" y="{h - 16}" text-anchor="middle" class="verdict">{_esc(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def chart_filename(edge_label: str, responder: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]+", "_", responder).strip("_")
    return f"{edge_label}_{safe}.svg"


def render_chart_index(entries: Iterable[tuple[str, str, str]], title: str = "Causal debate charts") -> str:
    """Static HTML page; ``entries`` are (edge label, responder, file name)."""
    items = "\n".join(
        f'<li><a href="{_esc(fname)}">{_esc(edge)} / {_esc(resp)}</a><br>'
        f'<img src="{_esc(fname)}" alt="{_esc(edge)} {_esc(resp)}"></li>'
        for edge, resp, fname in entries
    )
    return (
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\">"
        f"<title>{_esc(title)}</title></head>\n<body>\n<h1>{_esc(title)}</h1>\n<ul>\n{items}\n</ul>\n</body>\n</html>\n"
    )


def write_charts(profiles: Iterable[tuple[EdgeAuditProfile, Verdict | None]], out_dir: str | Path,
                 style: ChartStyle | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written, entries = [], []
    for profile, verdict in profiles:
        name = chart_filename(profile.edge_label, profile.responder)
        path = out_dir / name
        path.write_text(render_debate_chart(profile, style, verdict), encoding="utf-8")
        written.append(path)
        entries.append((profile.edge_label, profile.responder, name))
    (out_dir / "index.html").write_text(render_chart_index(entries), encoding="utf-8")
    return written
