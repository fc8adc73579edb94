"""Hallucination rates, before/after improvements, and CSV/Markdown reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Mapping, Sequence

from .verdict import Verdict

UNPARSEABLE = "unparseable"
TABLE_KEY = "C = causality N = no causality H = hallucination U = unparseable"
DISCREPANCY_TOLERANCE = Decimal("0.05")


def round_half_up(value: Fraction | int, places: int = 1) -> Decimal:
    value = Fraction(value)
    scale = 10 ** places
    n = math.floor(value * scale + Fraction(1, 2))
    return Decimal(n).scaleb(-places).quantize(Decimal(1).scaleb(-places))


def fmt_pct(value: Decimal | None) -> str:
    return "n/a" if value is None else f"{value}%"


@dataclass(frozen=True)
class VerdictMatrix:
    edges: tuple[str, ...]
    responders: tuple[str, ...]
    cells: Mapping[tuple[str, str], Verdict | str]
    edge_descriptions: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "responders", tuple(self.responders))
        for e in self.edges:
            for r in self.responders:
                cell = self.cells.get((e, r))
                if cell is None:
                    raise ValueError(f"missing cell ({e}, {r})")
                if not isinstance(cell, Verdict) and cell != UNPARSEABLE:
                    raise ValueError(f"cell ({e}, {r}) is neither a verdict nor unparseable")

    def code(self, edge: str, responder: str) -> str:
        cell = self.cells[(edge, responder)]
        return "U" if cell == UNPARSEABLE else cell.code

    def describe(self, edge: str) -> str:
        return self.edge_descriptions.get(edge, edge)

    @classmethod
    def from_codes(cls, rows: Mapping[str, str] | Sequence[tuple[str, str]], responders: Sequence[str],
                   edge_descriptions: Mapping[str, str] | None = None) -> VerdictMatrix:
        """Build from C/N/H/U code strings, one string per edge (e.g. ``"HCHHCC"``)."""
        from .prompts import Side
        from .verdict import NO_CAUSALITY, Verdict, VerdictKind

        by_code = {
            "C": Verdict(VerdictKind.CAUSALITY, Side.A),
            "N": NO_CAUSALITY,
            "H": Verdict(VerdictKind.HALLUCINATION, None, ("general_colored_contradiction",)),
            "U": UNPARSEABLE,
        }
        items = list(rows.items()) if isinstance(rows, Mapping) else list(rows)
        cells = {}
        for edge, codes in items:
            if len(codes) != len(responders):
                raise ValueError(f"row {edge} has {len(codes)} cells for {len(responders)} responders")
            for r, c in zip(responders, codes):
                cells[(edge, r)] = by_code[c]
        return cls(tuple(e for e, _ in items), tuple(responders), cells, dict(edge_descriptions or {}))

    def to_dict(self) -> dict:
        return {
            "edges": [{"label": e, "description": self.describe(e)} for e in self.edges],
            "responders": list(self.responders),
            "cells": [
                {"edge": e, "responder": r,
                 **({"verdict": UNPARSEABLE, "code": "U"} if self.cells[(e, r)] == UNPARSEABLE
                    else self.cells[(e, r)].to_dict())}
                for e in self.edges for r in self.responders
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> VerdictMatrix:
        cells = {}
        for c in data["cells"]:
            cells[(c["edge"], c["responder"])] = UNPARSEABLE if c["verdict"] == UNPARSEABLE else Verdict.from_dict(c)
        edges = [e["label"] for e in data["edges"]]
        descriptions = {e["label"]: e["description"] for e in data["edges"]}
        return cls(tuple(edges), tuple(data["responders"]), cells, descriptions)


@dataclass(frozen=True)
class Rate:
    count: int
    total: int
    unparseable: int = 0

    @property
    def exact(self) -> Fraction | None:
        return Fraction(100 * self.count, self.total) if self.total else None

    @property
    def display(self) -> Decimal | None:
        return None if self.exact is None else round_half_up(self.exact)


@dataclass(frozen=True)
class RateSummary:
    per_responder: dict[str, Rate]
    per_edge: dict[str, Rate]
    overall_exact: Fraction | None
    total_hallucinations: int
    unparseable_cells: int

    @property
    def overall(self) -> Decimal | None:
        return None if self.overall_exact is None else round_half_up(self.overall_exact)

    @property
    def responders(self) -> tuple[str, ...]:
        return tuple(self.per_responder)


def compute_rates(m: VerdictMatrix) -> RateSummary:
    if not m.edges or not m.responders:
        raise ValueError("cannot compute rates on an empty verdict matrix")

    def rate(cells) -> Rate:
        cells = list(cells)
        bad = sum(1 for c in cells if c == UNPARSEABLE)
        good = [c for c in cells if c != UNPARSEABLE]
        return Rate(sum(1 for c in good if c.is_hallucination), len(good), bad)

    per_responder = {r: rate(m.cells[(e, r)] for e in m.edges) for r in m.responders}
    per_edge = {e: rate(m.cells[(e, r)] for r in m.responders) for e in m.edges}
    defined = [x.exact for x in per_responder.values() if x.exact is not None]
    overall = sum(defined, Fraction(0)) / len(defined) if defined else None
    return RateSummary(
        per_responder, per_edge, overall,
        sum(x.count for x in per_responder.values()),
        sum(x.unparseable for x in per_responder.values()),
    )


@dataclass(frozen=True)
class ImprovementRow:
    responder: str
    before: Decimal
    after: Decimal
    exact_delta: Fraction

    @property
    def improvement(self) -> Decimal:
        return self.before - self.after


@dataclass(frozen=True)
class Discrepancy:
    cell: str
    reported: Decimal
    derived: Decimal
    note: str


@dataclass(frozen=True)
class ImprovementTable:
    rows: tuple[ImprovementRow, ...]
    before_average: Decimal | None
    after_average: Decimal | None
    discrepancies: tuple[Discrepancy, ...] = ()

    @property
    def average_improvement_exact(self) -> Fraction | None:
        if not self.rows:
            return None
        return sum((Fraction(r.improvement) for r in self.rows), Fraction(0)) / len(self.rows)

    @property
    def average_improvement(self) -> Decimal | None:
        exact = self.average_improvement_exact
        return None if exact is None else round_half_up(exact)

    def with_reported(self, reported: Mapping[str, Decimal | str | float]) -> ImprovementTable:
        """Compare published aggregate cells against what the rows actually yield.

        Keys: ``before_average``, ``after_average``, ``average_improvement``.
        """
        derived = {
            "before_average": self.before_average,
            "after_average": self.after_average,
            "average_improvement": self.average_improvement,
        }
        found = []
        for cell, value in reported.items():
            if cell not in derived:
                raise KeyError(f"unknown aggregate cell {cell!r}")
            want = Decimal(str(value))
            got = derived[cell]
            if got is None or abs(want - got) > DISCREPANCY_TOLERANCE:
                found.append(Discrepancy(
                    cell, want, got,
                    f"reported {want}% is not derivable from the per-responder rates (mean gives {got}%)",
                ))
        return ImprovementTable(self.rows, self.before_average, self.after_average, tuple(found))


def compute_improvement(before: RateSummary, after: RateSummary) -> ImprovementTable:
    if set(before.per_responder) != set(after.per_responder):
        raise ValueError("before and after summaries cover different responders")
    rows = []
    for r in before.per_responder:
        b, a = before.per_responder[r], after.per_responder[r]
        if b.exact is None or a.exact is None:
            raise ValueError(f"responder {r!r} has no evaluable cells")
        rows.append(ImprovementRow(r, b.display, a.display, b.exact - a.exact))
    return ImprovementTable(tuple(rows), before.overall, after.overall)


@dataclass(frozen=True)
class DebateRow:
    number: int
    proposition: str
    opposition: str
    arbiter: str
    rate: Rate


@dataclass(frozen=True)
class DebateResults:
    rows: tuple[DebateRow, ...]

    @property
    def average_exact(self) -> Fraction | None:
        rates = [r.rate.exact for r in self.rows if r.rate.exact is not None]
        return sum(rates, Fraction(0)) / len(rates) if rates else None

    @property
    def average(self) -> Decimal | None:
        exact = self.average_exact
        return None if exact is None else round_half_up(exact)


def debate_results(m: VerdictMatrix) -> DebateResults:
    """Rows from a matrix whose responders are ``debate:prop|opp|arb`` labels."""
    summary = compute_rates(m)
    rows = []
    for i, label in enumerate(m.responders, 1):
        roles = label.split(":", 1)[-1].split("|")
        if len(roles) != 3:
            raise ValueError(f"responder {label!r} is not a debate lineup label")
        rows.append(DebateRow(i, *roles, summary.per_responder[label]))
    return DebateResults(tuple(rows))


# --- rendering --------------------------------------------------------------

def _provenance_lines(provenance: Mapping[str, str] | None, prefix: str) -> list[str]:
    if not provenance:
        return []
    return [f"{prefix}{k}: {v}" for k, v in provenance.items()]


def _md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return out


def _csv(header: list[str], rows: list[list[str]], provenance) -> str:
    buf = io.StringIO()
    for line in _provenance_lines(provenance, "# "):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _survey_parts(m: VerdictMatrix) -> tuple[list[str], list[list[str]], list[str] | None]:
    header = ["Edge/LLM", *m.responders, "Edge hallucination rate"]
    if not m.edges or not m.responders:
        return header, [], None
    s = compute_rates(m)
    rows = [[m.describe(e), *(m.code(e, r) for r in m.responders), fmt_pct(s.per_edge[e].display)]
            for e in m.edges]
    footer = ["LLM hallucination rate", *(fmt_pct(s.per_responder[r].display) for r in m.responders),
              f"Average {fmt_pct(s.overall)}"]
    return header, rows, footer


def render_survey(m: VerdictMatrix, format: str, provenance=None) -> str:
    header, rows, footer = _survey_parts(m)
    if format == "csv":
        csv_header = ["edge", *m.responders, "edge_hallucination_rate"]
        csv_rows = [[r[0], *r[1:-1], r[-1].rstrip("%")] for r in rows]
        if footer:
            csv_rows.append(["llm_hallucination_rate", *(c.rstrip("%") for c in footer[1:-1]),
                             footer[-1].removeprefix("Average ").rstrip("%")])
        return _csv(csv_header, csv_rows, provenance)
    lines = _provenance_lines(provenance, "<!-- ")
    lines = [line + " -->" for line in lines]
    lines += ["# Hallucination survey", ""]
    lines += _md_table(header, rows + ([footer] if footer else []))
    if footer:
        s = compute_rates(m)
        lines += ["", f"Key: {TABLE_KEY}"]
        if s.unparseable_cells:
            lines.append(f"Unparseable cells excluded from rates: {s.unparseable_cells}")
    return "\n".join(lines) + "\n"


def render_improvement(t: ImprovementTable, format: str, provenance=None) -> str:
    responders = [r.responder for r in t.rows]
    header = ["Treatment/LLM", *responders, "Average LLM hallucination rate"]
    rows = []
    if t.rows:
        rows = [
            ["Before", *(fmt_pct(r.before) for r in t.rows), fmt_pct(t.before_average)],
            ["After", *(fmt_pct(r.after) for r in t.rows), fmt_pct(t.after_average)],
            ["Improvement", *(fmt_pct(r.improvement) for r in t.rows), f"Average {fmt_pct(t.average_improvement)}"],
            ["Improvement (exact)", *(fmt_pct(round_half_up(r.exact_delta)) for r in t.rows),
             f"Average {fmt_pct(round_half_up(sum((r.exact_delta for r in t.rows), Fraction(0)) / len(t.rows)))}"],
        ]
    if format == "csv":
        csv_rows = [[c.removeprefix("Average ").rstrip("%") for c in row] for row in rows]
        csv_rows += [["discrepancy", d.cell, str(d.reported), str(d.derived)] for d in t.discrepancies]
        return _csv(["treatment", *responders, "average"], csv_rows, provenance)
    lines = [line + " -->" for line in _provenance_lines(provenance, "<!-- ")]
    lines += ["# RAG improvement", ""]
    lines += _md_table(header, rows)
    if t.discrepancies:
        lines += ["", "## Discrepancies", ""]
        lines += [f"- {d.cell}: {d.note}" for d in t.discrepancies]
    return "\n".join(lines) + "\n"


def render_debate(d: DebateResults, format: str, provenance=None) -> str:
    header = ["Debate/Lineup", "Proposition", "Opposition", "Arbiter", "LLM hallucination rate"]
    rows = [[str(r.number), r.proposition, r.opposition, r.arbiter, fmt_pct(r.rate.display)] for r in d.rows]
    footer = ["", "", "", "", f"Average {fmt_pct(d.average)}"] if d.rows else None
    if format == "csv":
        csv_rows = [[*r[:-1], r[-1].rstrip("%")] for r in rows]
        if footer:
            csv_rows.append(["average", "", "", "", footer[-1].removeprefix("Average ").rstrip("%")])
        return _csv(["debate", "proposition", "opposition", "arbiter", "hallucination_rate"], csv_rows, provenance)
    lines = [line + " -->" for line in _provenance_lines(provenance, "<!-- ")]
    lines += ["# Multi-LLM debate with arbiter", ""]
    lines += _md_table(header, rows + ([footer] if footer else []))
    return "\n".join(lines) + "\n"


def emit_report(data, format: str = "markdown", provenance: Mapping[str, str] | None = None) -> str:
    if format not in ("markdown", "csv"):
        raise ValueError(f"unknown report format {format!r}")
    if isinstance(data, VerdictMatrix):
        return render_survey(data, format, provenance)
    if isinstance(data, ImprovementTable):
        return render_improvement(data, format, provenance)
    if isinstance(data, DebateResults):
        return render_debate(data, format, provenance)
    raise TypeError(f"cannot report on {type(data).__name__}")
