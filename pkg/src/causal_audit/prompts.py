"""The ten-prompt audit battery for one edge, plus the arbiter prompt."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .graph import CausalGraph, Edge

SCALE_PREAMBLE = (
    "On a scale from 1 to 4, where 4 represents strong or most likely, "
    "rate the cause-and-effect relationship: "
)
ARBITER_INSTRUCTION = (
    "Using the responses of the two debaters and your own knowledge, generate a final "
    "rating in response to the question: On a scale from 1 to 4, 4 represents strong or "
    "most likely, rate the cause-and-effect relationship: {input}"
)


class Side(str, Enum):
    A = "A"  # edge.source
    B = "B"  # edge.target

    @property
    def other(self) -> Side:
        return Side.B if self is Side.A else Side.A


class Polarity(str, Enum):
    HIGHER = "higher"
    LOWER = "lower"


_H, _L = Polarity.HIGHER, Polarity.LOWER
POLARITY_PATTERNS: tuple[tuple[Polarity, Polarity], ...] = ((_H, _H), (_H, _L), (_L, _H), (_L, _L))
PATTERN_CODES = ("hh", "hl", "lh", "ll")


@dataclass(frozen=True)
class PromptKind:
    claimed_cause: Side
    antecedent: Polarity | None = None
    consequent: Polarity | None = None

    @property
    def general(self) -> bool:
        return self.antecedent is None

    @property
    def pattern(self) -> str | None:
        if self.general:
            return None
        return self.antecedent.value[0] + self.consequent.value[0]

    def mirrored(self) -> PromptKind:
        return PromptKind(self.claimed_cause.other, self.antecedent, self.consequent)

    def code(self) -> str:
        return f"general:{self.claimed_cause.value}" if self.general else f"{self.pattern}:{self.claimed_cause.value}"


def _canonical_kinds() -> tuple[PromptKind, ...]:
    kinds = [PromptKind(Side.A), PromptKind(Side.B)]
    for side in (Side.A, Side.B):
        kinds.extend(PromptKind(side, p, q) for p, q in POLARITY_PATTERNS)
    return tuple(kinds)


CANONICAL_KINDS = _canonical_kinds()


def claim_text(kind: PromptKind, cause: str, effect: str) -> str:
    if kind.general:
        return f"changing {cause} causes a change in {effect}"
    return f"{kind.antecedent.value} {cause} causes {kind.consequent.value} {effect}"


def render_prompt(kind: PromptKind, a_name: str, b_name: str) -> str:
    cause, effect = (a_name, b_name) if kind.claimed_cause is Side.A else (b_name, a_name)
    return SCALE_PREAMBLE + claim_text(kind, cause, effect)


@dataclass(frozen=True)
class EdgePrompt:
    index: int
    kind: PromptKind
    text: str

    @property
    def claim(self) -> str:
        return strip_preamble(self.text)


@dataclass(frozen=True)
class EdgePromptSet:
    edge: Edge
    edge_label: str
    a_name: str
    b_name: str
    prompts: tuple[EdgePrompt, ...]

    def __iter__(self):
        return iter(self.prompts)

    def __len__(self):
        return len(self.prompts)

    def __getitem__(self, i: int) -> EdgePrompt:
        return self.prompts[i]

    def to_dict(self) -> dict:
        return {
            "edge": self.edge_label,
            "a": self.a_name,
            "b": self.b_name,
            "prompts": [{"index": p.index, "kind": p.kind.code(), "text": p.text} for p in self.prompts],
        }


def build_prompt_set(edge: Edge, graph: CausalGraph, index: int | None = None) -> EdgePromptSet:
    """``index`` disambiguates repeated edges; by default the first equal edge is used."""
    if index is None:
        index = graph.index_of(edge)
    elif graph.edges[index] != edge:
        raise ValueError(f"edge {index} of the graph is not {edge.source}->{edge.target}")
    a = graph.variable(edge.source).display_name
    b = graph.variable(edge.target).display_name
    prompts = tuple(EdgePrompt(i, k, render_prompt(k, a, b)) for i, k in enumerate(CANONICAL_KINDS))
    return EdgePromptSet(edge, graph.edge_label(index), a, b, prompts)


def strip_preamble(question: str) -> str:
    return question[len(SCALE_PREAMBLE):] if question.startswith(SCALE_PREAMBLE) else question


def render_arbiter_prompt(question: str, response_prop: str, response_opp: str, *, swap_order: bool = False) -> str:
    """Embed both debater responses, then the arbiter instruction for ``question``.

    ``question`` may be a full battery prompt; its scale preamble is dropped
    because the arbiter instruction restates the scale.
    """
    if not question or not question.strip():
        raise ValueError("arbiter question must be non-empty")
    if not response_prop or not response_prop.strip():
        raise ValueError("proposition response must be non-empty")
    if not response_opp or not response_opp.strip():
        raise ValueError("opposition response must be non-empty")
    blocks = [("Proposition", response_prop), ("Opposition", response_opp)]
    if swap_order:
        blocks.reverse()
    parts = [f"{role} debater response:\n{text}" for role, text in blocks]
    parts.append(ARBITER_INSTRUCTION.format(input=strip_preamble(question)))
    return "\n\n".join(parts)
