"""Published survey tables encoded as fixtures, and the life-expectancy graph."""

from __future__ import annotations

from decimal import Decimal
from importlib import resources

from .graph import CausalGraph, parse_graph
from .metrics import VerdictMatrix
from .verdict import NO_CAUSALITY, Verdict, VerdictKind

SURVEY_MODELS = ("GPT-3.5", "GPT-4", "Llama3 8b", "Mixtral 8x7b", "Gemini 1.5 Pro", "Claude 3.5 Sonnet")

# edge label, endpoints as printed, verdict codes per SURVEY_MODELS
TABLE1_ROWS = (
    ("E1", "V1->V7", "HCHHCC"),
    ("E2", "V4->V2", "HNNNNH"),
    ("E3", "V4->V3", "CHNHNN"),
    ("E4", "V4->V5", "NCHCCH"),
    ("E5", "V5->V3", "HHHHHH"),
    ("E6", "V6->V1", "HCCCCC"),
    ("E7", "V6->V2", "HNHNNN"),
    ("E8", "V6->V4", "HNHHNH"),
    ("E9", "V6->V7", "HNHCCC"),
    ("E10", "V6->V1", "CCNHCH"),
    ("E11", "V7->V1", "HHHHCH"),
    ("E12", "V7->V4", "CCHCHH"),
    ("E13", "V8->V1", "HHHHHC"),
    ("E14", "V8->V3", "HNNHNH"),
    ("E15", "V8->V7", "HHNHCC"),
    ("E16", "V9->V3", "HNNHNC"),
    ("E17", "V9->V7", "HCHHHC"),
    ("E18", "V9->V6", "CNNHHH"),
)

TABLE1_MODEL_RATES = dict(zip(SURVEY_MODELS, map(Decimal, ("72.2", "27.8", "55.6", "66.7", "27.8", "50.0"))))
TABLE1_EDGE_RATES = dict(zip(
    (row[0] for row in TABLE1_ROWS),
    map(Decimal, ("50.0", "33.3", "33.3", "33.3", "100.0", "16.7", "33.3", "66.7", "33.3",
                  "33.3", "83.3", "50.0", "83.3", "50.0", "50.0", "33.3", "66.7", "50.0")),
))
TABLE1_AVERAGE = Decimal("50.0")

TABLE2_AFTER_RATES = dict(zip(SURVEY_MODELS, map(Decimal, ("5.6", "5.6", "27.8", "16.7", "5.6", "5.6"))))
TABLE2_IMPROVEMENTS = dict(zip(SURVEY_MODELS, map(Decimal, ("66.6", "22.2", "27.8", "50.0", "22.2", "44.4"))))
# aggregate cells as published; the last two do not follow from the rows above
TABLE2_REPORTED_AGGREGATES = {
    "before_average": Decimal("50"),
    "after_average": Decimal("13.9"),
    "average_improvement": Decimal("36.1"),
}

# (proposition, opposition, arbiter, published rate)
TABLE3_ROWS = (
    ("Claude", "GPT-4", "Gemini", Decimal("11.1")),
    ("GPT-4", "Claude", "Gemini", Decimal("5.6")),
    ("Gemini", "Claude", "GPT-4", Decimal("16.7")),
    ("Claude", "Gemini", "GPT-4", Decimal("16.7")),
)
TABLE3_AVERAGE = Decimal("12.5")
TABLE3_MODELS = ("GPT-4", "Gemini", "Claude")
TABLE3_ARBITERS = ("Gemini", "GPT-4")


def life_expectancy_graph() -> CausalGraph:
    text = resources.files("causal_audit").joinpath("data/life_expectancy.json").read_text(encoding="utf-8")
    return parse_graph(text, "json")


def table1_matrix() -> VerdictMatrix:
    return VerdictMatrix.from_codes(
        [(label, codes) for label, _, codes in TABLE1_ROWS],
        SURVEY_MODELS,
        {label: f"{label} ({pair})" for label, pair, _ in TABLE1_ROWS},
    )


def _counts_matrix(counts: dict[str, int], n_edges: int = 18) -> VerdictMatrix:
    # responder r hallucinates on its first counts[r] edges, no causality elsewhere
    edges = tuple(f"E{i + 1}" for i in range(n_edges))
    halluc = Verdict(VerdictKind.HALLUCINATION, None, ("general_colored_contradiction",))
    cells = {(e, r): (halluc if i < counts[r] else NO_CAUSALITY)
             for r in counts for i, e in enumerate(edges)}
    return VerdictMatrix(edges, tuple(counts), cells)


def table2_after_matrix() -> VerdictMatrix:
    """Synthetic post-RAG matrix whose per-model counts give the published rates (1, 1, 5, 3, 1, 1 of 18)."""
    return _counts_matrix(dict(zip(SURVEY_MODELS, (1, 1, 5, 3, 1, 1))))


def table3_matrix() -> VerdictMatrix:
    """Synthetic debate matrix with the published per-lineup counts (2, 1, 3, 3 of 18)."""
    labels = [f"debate:{p}|{o}|{a}" for p, o, a, _ in TABLE3_ROWS]
    return _counts_matrix(dict(zip(labels, (2, 1, 3, 3))))

