"""Causal graph model: variables, edges, JSON/DOT parsing and validation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class GraphError(ValueError):
    """Raised when a graph document cannot be turned into a valid CausalGraph."""


class GraphSyntaxError(GraphError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownVariableError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


def display_name(name: str) -> str:
    return name.replace("_", " ")


@dataclass(frozen=True)
class Variable:
    id: str
    name: str

    @property
    def display_name(self) -> str:
        return display_name(self.name)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    directed: bool = True

    def swapped(self) -> Edge:
        return Edge(self.target, self.source, self.directed)


@dataclass(frozen=True)
class Violation:
    code: str
    severity: str  # "error" | "warning"
    message: str
    edge_index: int | None = None
    variable_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "edge_index": self.edge_index,
            "variable_id": self.variable_id,
        }


@dataclass(frozen=True)
class CausalGraph:
    """Immutable graph under audit.

    Construction does not enforce invariants, so that ``validate_graph`` can
    report on arbitrary graphs; ``parse_graph`` rejects invalid documents.
    """

    variables: tuple[Variable, ...] = ()
    edges: tuple[Edge, ...] = ()
    label: str = ""
    _by_id: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "_by_id", {v.id: v for v in self.variables})

    def variable(self, var_id: str) -> Variable:
        try:
            return self._by_id[var_id]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {var_id!r}") from None

    def has_variable(self, var_id: str) -> bool:
        return var_id in self._by_id

    def edge_label(self, index: int) -> str:
        if not 0 <= index < len(self.edges):
            raise IndexError(index)
        return f"E{index + 1}"

    def edge_index(self, label: str) -> int:
        m = re.fullmatch(r"E([1-9]\d*)", label)
        if not m or int(m.group(1)) > len(self.edges):
            raise KeyError(f"no edge labelled {label!r}")
        return int(m.group(1)) - 1

    def index_of(self, edge: Edge) -> int:
        """Index of the first edge equal to ``edge``."""
        for i, e in enumerate(self.edges):
            if e == edge:
                return i
        raise GraphError(f"edge {edge.source}->{edge.target} is not in graph {self.label!r}")

    def labelled_edges(self) -> Iterator[tuple[str, Edge]]:
        for i, e in enumerate(self.edges):
            yield f"E{i + 1}", e

    def describe_edge(self, index: int) -> str:
        e = self.edges[index]
        arrow = "->" if e.directed else "--"
        return f"E{index + 1} ({e.source}{arrow}{e.target})"

    @property
    def directed_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.directed)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "variables": [{"id": v.id, "name": v.name} for v in self.variables],
            "edges": [{"from": e.source, "to": e.target, "directed": e.directed} for e in self.edges],
        }


def validate_graph(g: CausalGraph) -> list[Violation]:
    out: list[Violation] = []
    seen_ids: set[str] = set()
    for v in g.variables:
        if v.id in seen_ids:
            out.append(Violation("duplicate_variable", "error", f"variable id {v.id!r} declared twice", variable_id=v.id))
        seen_ids.add(v.id)
        if not v.name:
            out.append(Violation("empty_name", "error", f"variable {v.id!r} has an empty name", variable_id=v.id))

    seen_edges: dict[tuple[str, str, bool], int] = {}
    touched: set[str] = set()
    for i, e in enumerate(g.edges):
        label = f"E{i + 1}"
        for end in (e.source, e.target):
            if end not in seen_ids:
                out.append(Violation("dangling_reference", "error",
                                     f"{label} references undeclared variable {end!r}",
                                     edge_index=i, variable_id=end))
        if e.source == e.target:
            out.append(Violation("self_loop", "error", f"{label} is a self-loop on {e.source!r}",
                                 edge_index=i, variable_id=e.source))
        key = (e.source, e.target, True) if e.directed else (*sorted((e.source, e.target)), False)
        if key in seen_edges:
            first = seen_edges[key]
            out.append(Violation("duplicate_edge", "warning",
                                 f"{label} duplicates E{first + 1} ({e.source}->{e.target})", edge_index=i))
        else:
            seen_edges[key] = i
        touched.update((e.source, e.target))

    for v in g.variables:
        if v.id not in touched:
            out.append(Violation("isolated_variable", "warning", f"variable {v.id!r} has no edges", variable_id=v.id))
    return out


def _check(g: CausalGraph) -> CausalGraph:
    for v in validate_graph(g):
        if v.code == "dangling_reference":
            raise UnknownVariableError(v.message)
        if v.code == "self_loop":
            raise SelfLoopError(v.message)
        if v.severity == "error":
            raise GraphError(v.message)
    return g


def parse_graph(document: str, format: str = "json") -> CausalGraph:
    if format == "json":
        return _check(_parse_json(document))
    if format == "dot":
        return _check(_DotParser(document).parse())
    raise ValueError(f"unsupported graph format {format!r}")


def load_graph(path) -> CausalGraph:
    from pathlib import Path

    p = Path(path)
    fmt = "dot" if p.suffix.lower() in (".dot", ".gv") else "json"
    return parse_graph(p.read_text(encoding="utf-8"), fmt)


def serialize_graph(g: CausalGraph, format: str = "json") -> str:
    if format == "json":
        return json.dumps(g.to_dict(), indent=2) + "\n"
    if format == "dot":
        return _to_dot(g)
    raise ValueError(f"unsupported graph format {format!r}")


# --- JSON ---------------------------------------------------------------

def _parse_json(document: str) -> CausalGraph:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GraphSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise GraphError("graph document must be a JSON object")
    variables = []
    for i, raw in enumerate(data.get("variables", [])):
        if not isinstance(raw, dict) or not isinstance(raw.get("id"), str) or not isinstance(raw.get("name"), str):
            raise GraphError(f"variables[{i}] must have string 'id' and 'name'")
        variables.append(Variable(raw["id"], raw["name"]))
    edges = []
    for i, raw in enumerate(data.get("edges", [])):
        if not isinstance(raw, dict) or not isinstance(raw.get("from"), str) or not isinstance(raw.get("to"), str):
            raise GraphError(f"edges[{i}] must have string 'from' and 'to'")
        directed = raw.get("directed", True)
        if not isinstance(directed, bool):
            raise GraphError(f"edges[{i}].directed must be a boolean")
        edges.append(Edge(raw["from"], raw["to"], directed))
    label = data.get("label", "")
    if not isinstance(label, str):
        raise GraphError("'label' must be a string")
    return CausalGraph(tuple(variables), tuple(edges), label)


# --- DOT ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<arrow>->|--)
  | (?P<punct>[{}\[\];,=:])
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<id>[A-Za-z_\x80-￿][\w\x80-￿]*|-?(?:\.\d+|\d+(?:\.\d*)?))
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise GraphSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "string":
            toks.append(_Tok("id", re.sub(r'\\(.)', r"\1", value[1:-1]), line, pos - line_start + 1))
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    return toks


class _DotParser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        lines = text.split("\n")
        self._eof = (len(lines), len(lines[-1]) + 1)

    def _peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def _fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self._peek()
        if tok is None:
            raise GraphSyntaxError(f"{msg} at end of input", *self._eof)
        raise GraphSyntaxError(f"{msg}, got {tok.value!r}", tok.line, tok.col)

    def _next(self) -> _Tok:
        tok = self._peek()
        if tok is None:
            self._fail("unexpected end of input")
        self.i += 1
        return tok

    def _expect(self, kind: str, value: str | None = None) -> _Tok:
        tok = self._peek()
        if tok is None or tok.kind != kind or (value is not None and tok.value != value):
            self._fail(f"expected {value or kind}")
        self.i += 1
        return tok

    def _accept(self, kind: str, value: str | None = None) -> _Tok | None:
        tok = self._peek()
        if tok is not None and tok.kind == kind and (value is None or tok.value == value):
            self.i += 1
            return tok
        return None

    def parse(self) -> CausalGraph:
        self._accept("id", "strict")
        head = self._expect("id")
        if head.value not in ("digraph", "graph"):
            self._fail("expected 'digraph' or 'graph'", head)
        name_tok = self._accept("id")
        label = name_tok.value if name_tok else ""
        self._expect("punct", "{")

        variables: dict[str, Variable] = {}
        edges: list[Edge] = []
        while not self._accept("punct", "}"):
            tok = self._next()
            if tok.kind != "id":
                self._fail("expected statement", tok)
            if tok.value in ("node", "edge", "graph") and self._peek() and self._peek().value == "[":
                attrs = self._attrs()
                if tok.value == "graph" and "label" in attrs:
                    label = attrs["label"]
            elif self._peek() is not None and self._peek().kind == "punct" and self._peek().value == "=":
                self.i += 1
                value = self._expect("id").value
                if tok.value == "label":
                    label = value
            elif self._peek() is not None and self._peek().kind == "arrow":
                chain = [tok]
                ops = []
                while (op := self._accept("arrow")) is not None:
                    ops.append(op.value)
                    chain.append(self._expect("id"))
                attrs = self._attrs() if self._peek() and self._peek().value == "[" else {}
                undirected_attr = attrs.get("dir") == "none"
                for (a, b), op in zip(zip(chain, chain[1:]), ops):
                    edges.append(Edge(a.value, b.value, directed=(op == "->" and not undirected_attr)))
            else:
                attrs = self._attrs() if self._peek() and self._peek().value == "[" else {}
                if tok.value in variables:
                    self._fail(f"variable {tok.value!r} declared twice", tok)
                variables[tok.value] = Variable(tok.value, attrs.get("label", tok.value))
            while self._accept("punct", ";") or self._accept("punct", ","):
                pass
        if self._peek() is not None:
            self._fail("trailing content after graph body")
        return CausalGraph(tuple(variables.values()), tuple(edges), label)

    def _attrs(self) -> dict[str, str]:
        attrs: dict[str, str] = {}
        while self._accept("punct", "["):
            while not self._accept("punct", "]"):
                key = self._expect("id").value
                self._expect("punct", "=")
                attrs[key] = self._expect("id").value
                self._accept("punct", ",") or self._accept("punct", ";")
        return attrs


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(g: CausalGraph) -> str:
    lines = [f"digraph {_quote(g.label)} {{"]
    for v in g.variables:
        lines.append(f"  {_quote(v.id)} [label={_quote(v.name)}];")
    for e in g.edges:
        op = "->" if e.directed else "--"
        lines.append(f"  {_quote(e.source)} {op} {_quote(e.target)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_from_names(names: Iterable[str], edges: Iterable[tuple[str, str]], label: str = "") -> CausalGraph:
    """Convenience constructor: variables get ids V1..Vn in the given order."""
    names = list(names)
    ids = {n: f"V{i + 1}" for i, n in enumerate(names)}
    return CausalGraph(
        tuple(Variable(ids[n], n) for n in names),
        tuple(Edge(ids[a], ids[b]) for a, b in edges),
        label,
    )
