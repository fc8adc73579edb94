"""Causal-fact corpora and exact-name retrieval into request context."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .gateway import CompletionRequest
from .graph import CausalGraph, Edge

CONTEXT_HEADER = "Use the following established facts when answering:"

AFFIRMATIVE = "affirmative"
NEGATED = "negated"
PROPOSITION = "proposition"
OPPOSITION = "opposition"


@dataclass(frozen=True)
class CausalFact:
    cause: str
    effect: str
    polarity: str = AFFIRMATIVE

    def __post_init__(self):
        if self.polarity not in (AFFIRMATIVE, NEGATED):
            raise ValueError(f"unknown polarity {self.polarity!r}")

    @property
    def statement(self) -> str:
        if self.polarity == AFFIRMATIVE:
            return f"{self.cause} strongly affects {self.effect}."
        return f"{self.cause} does not affect {self.effect}."

    @property
    def key(self) -> tuple[str, str, str]:
        return (_norm(self.cause), _norm(self.effect), self.polarity)


@dataclass(frozen=True)
class Corpus:
    facts: tuple[CausalFact, ...] = ()
    origin: str = "reference_graph"

    def __post_init__(self):
        object.__setattr__(self, "facts", tuple(self.facts))
        keys = [f.key for f in self.facts]
        if len(set(keys)) != len(keys):
            raise ValueError("corpus contains duplicate facts")

    def __len__(self):
        return len(self.facts)

    def statements(self) -> list[str]:
        return render_statements(self.facts)

    def to_text(self) -> str:
        return "".join(s + "\n" for s in self.statements())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _norm(name: str) -> str:
    return " ".join(name.replace("_", " ").split()).casefold()


def render_statements(facts) -> list[str]:
    """One line per fact; an affirmative (X, Y) followed by negated (Y, X) merges into one sentence."""
    out = []
    facts = list(facts)
    i = 0
    while i < len(facts):
        f = facts[i]
        nxt = facts[i + 1] if i + 1 < len(facts) else None
        if (nxt is not None and f.polarity == AFFIRMATIVE and nxt.polarity == NEGATED
                and _norm(nxt.cause) == _norm(f.effect) and _norm(nxt.effect) == _norm(f.cause)):
            out.append(f"{f.cause} strongly affects {f.effect}, but {f.effect} does not affect {f.cause}.")
            i += 2
        else:
            out.append(f.statement)
            i += 1
    return out


def build_corpus(reference: CausalGraph) -> Corpus:
    facts: list[CausalFact] = []
    seen: set = set()
    for e in reference.edges:
        if not e.directed:
            continue
        fact = CausalFact(reference.variable(e.source).display_name, reference.variable(e.target).display_name)
        if fact.key not in seen:
            seen.add(fact.key)
            facts.append(fact)
    return Corpus(tuple(facts), "reference_graph")


def build_stance_corpus(edge: Edge, stance: str, graph: CausalGraph) -> Corpus:
    graph.index_of(edge)
    a = graph.variable(edge.source).display_name
    b = graph.variable(edge.target).display_name
    if stance == PROPOSITION:
        x, y = a, b
    elif stance == OPPOSITION:
        x, y = b, a
    else:
        raise ValueError(f"unknown stance {stance!r}")
    return Corpus((CausalFact(x, y, AFFIRMATIVE), CausalFact(y, x, NEGATED)), "stance")


_PAIR_RE = re.compile(r"^(?P<x>.+?) strongly affects (?P<y>.+?), but (?P<y2>.+?) does not affect (?P<x2>.+?)\.$")
_AFF_RE = re.compile(r"^(?P<x>.+?) strongly affects (?P<y>.+?)\.$")
_NEG_RE = re.compile(r"^(?P<x>.+?) does not affect (?P<y>.+?)\.$")


def parse_corpus(text: str, origin: str = "reference_graph") -> Corpus:
    facts: list[CausalFact] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if m := _PAIR_RE.match(line):
            if _norm(m["y2"]) != _norm(m["y"]) or _norm(m["x2"]) != _norm(m["x"]):
                raise ValueError(f"line {lineno}: mismatched names in compound statement")
            facts += [CausalFact(m["x"], m["y"], AFFIRMATIVE), CausalFact(m["y"], m["x"], NEGATED)]
        elif m := _NEG_RE.match(line):
            facts.append(CausalFact(m["x"], m["y"], NEGATED))
        elif m := _AFF_RE.match(line):
            facts.append(CausalFact(m["x"], m["y"], AFFIRMATIVE))
        else:
            raise ValueError(f"line {lineno}: not a causal statement: {line!r}")
    return Corpus(tuple(facts), origin)


def load_corpus(path: str | Path) -> Corpus:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def relevant_facts(corpus: Corpus, names: tuple[str, str]) -> list[CausalFact]:
    wanted = {_norm(n) for n in names}
    return [f for f in corpus.facts if _norm(f.cause) in wanted or _norm(f.effect) in wanted]


def retrieve_and_augment(corpus: Corpus, request: CompletionRequest, edge: Edge,
                         graph: CausalGraph | None = None) -> CompletionRequest:
    """Prepend the facts mentioning either endpoint to the request context.

    Endpoint names come from ``graph`` when given, otherwise the edge ids are
    used as names. The question is never modified.
    """
    if graph is not None:
        names = (graph.variable(edge.source).display_name, graph.variable(edge.target).display_name)
    else:
        names = (edge.source, edge.target)
    lines = render_statements(relevant_facts(corpus, names))
    if not lines:
        return request

    old = request.context or ""
    if CONTEXT_HEADER in old.split("\n"):
        # already augmented: append only missing lines to the existing fact block
        old_lines = old.split("\n")
        start = old_lines.index(CONTEXT_HEADER)
        end = start + 1
        while end < len(old_lines) and old_lines[end].strip():
            end += 1
        present = set(old_lines[start + 1:end])
        missing = [s for s in lines if s not in present]
        if not missing:
            return request
        new_lines = old_lines[:end] + missing + old_lines[end:]
        return request.with_context("\n".join(new_lines))

    block = "\n".join([CONTEXT_HEADER, *lines])
    return request.with_context(block + ("\n\n" + old if old else ""))
