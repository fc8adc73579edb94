import json

import pytest
from hypothesis import given, strategies as st

from causal_audit.graph import (
    CausalGraph,
    Edge,
    GraphSyntaxError,
    SelfLoopError,
    UnknownVariableError,
    Variable,
    parse_graph,
    serialize_graph,
    validate_graph,
)


def test_life_expectancy_fixture_has_9_variables_18_edges(life_graph):
    assert len(life_graph.variables) == 9
    assert len(life_graph.edges) == 18
    # edges appear in published order
    assert life_graph.describe_edge(0) == "E1 (V1->V7)"
    assert life_graph.describe_edge(17) == "E18 (V9->V6)"


def test_empty_document_is_valid():
    g = parse_graph('{"label": "", "variables": [], "edges": []}')
    assert g.variables == () and g.edges == ()
    assert validate_graph(g) == []


def test_unknown_variable_rejected():
    doc = {"variables": [{"id": "V1", "name": "a"}], "edges": [{"from": "V1", "to": "V99", "directed": True}]}
    with pytest.raises(UnknownVariableError, match="V99"):
        parse_graph(json.dumps(doc))


def test_self_loop_rejected():
    doc = {"variables": [{"id": "V3", "name": "c"}], "edges": [{"from": "V3", "to": "V3", "directed": True}]}
    with pytest.raises(SelfLoopError):
        parse_graph(json.dumps(doc))


def test_json_syntax_error_reports_position():
    with pytest.raises(GraphSyntaxError) as info:
        parse_graph('{"variables": [\n  {"id": "V1",, }]}')
    assert info.value.line == 2
    assert info.value.column > 0


def test_edge_order_preserved_and_labels():
    g = parse_graph(json.dumps({
        "variables": [{"id": x, "name": x.lower()} for x in "XYZ"],
        "edges": [{"from": "Z", "to": "X"}, {"from": "X", "to": "Y"}, {"from": "Y", "to": "Z", "directed": False}],
    }))
    assert [(e.source, e.target, e.directed) for e in g.edges] == [("Z", "X", True), ("X", "Y", True), ("Y", "Z", False)]
    assert [g.edge_label(i) for i in range(3)] == ["E1", "E2", "E3"]
    assert [g.edge_index(f"E{i + 1}") for i in range(3)] == [0, 1, 2]


def test_display_name_replaces_underscores():
    assert Variable("V7", "primary_care_physicians_rate").display_name == "primary care physicians rate"


# --- validation -------------------------------------------------------------

def test_duplicate_directed_pair_warns(life_graph):
    violations = validate_graph(life_graph)
    dups = [v for v in violations if v.code == "duplicate_edge"]
    assert len(dups) == 1
    assert dups[0].edge_index == 9  # E10 repeats E6
    assert dups[0].severity == "warning"


def test_clean_two_variable_graph():
    g = CausalGraph((Variable("V1", "a"), Variable("V2", "b")), (Edge("V1", "V2"),))
    assert validate_graph(g) == []


def test_self_loop_violation_reported():
    g = CausalGraph((Variable("V3", "c"), Variable("V4", "d")), (Edge("V3", "V3"), Edge("V3", "V4")))
    codes = [v.code for v in validate_graph(g)]
    assert codes == ["self_loop"]


def test_dangling_and_isolated():
    g = CausalGraph((Variable("V1", "a"), Variable("V2", "b"), Variable("V3", "c")), (Edge("V1", "V9"),))
    codes = sorted(v.code for v in validate_graph(g))
    assert codes == ["dangling_reference", "isolated_variable", "isolated_variable"]


def test_undirected_duplicates_ignore_orientation():
    g = CausalGraph((Variable("V1", "a"), Variable("V2", "b")),
                    (Edge("V1", "V2", False), Edge("V2", "V1", False)))
    assert [v.code for v in validate_graph(g)] == ["duplicate_edge"]


# --- DOT ----------------------------------------------------------------------

DOT_DOC = """
// life expectancy excerpt
digraph "excerpt" {
  V1 [label="life_expectancy"];
  V7 [label="primary_care_physicians_rate", shape=box];
  V8 [label="median_household_income"]
  V7 -> V1;
  V8 -> V7 -> V1 [color=red];
  V1 -- V8;
  V8 -> V1 [dir=none];
}
"""


def test_dot_import():
    g = parse_graph(DOT_DOC, "dot")
    assert g.label == "excerpt"
    assert [v.name for v in g.variables] == ["life_expectancy", "primary_care_physicians_rate", "median_household_income"]
    assert [(e.source, e.target, e.directed) for e in g.edges] == [
        ("V7", "V1", True), ("V8", "V7", True), ("V7", "V1", True), ("V1", "V8", False), ("V8", "V1", False),
    ]


def test_dot_unknown_node_rejected():
    with pytest.raises(UnknownVariableError):
        parse_graph('digraph { a [label="x"]; a -> b; }', "dot")


def test_dot_syntax_error_position():
    with pytest.raises(GraphSyntaxError) as info:
        parse_graph('digraph g {\n  a [label="x"];\n  a -> ;\n}', "dot")
    assert (info.value.line, info.value.column) == (3, 8)


def test_dot_unterminated():
    with pytest.raises(GraphSyntaxError, match="end of input"):
        parse_graph('digraph g { a', "dot")


# --- round trip ---------------------------------------------------------------

@pytest.mark.parametrize("fmt", ["json", "dot"])
def test_round_trip_fixture(life_graph, fmt):
    assert parse_graph(serialize_graph(life_graph, fmt), fmt) == life_graph


_names = st.text(alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"), min_size=1, max_size=12)


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 6))
    ids = [f"V{i + 1}" for i in range(n)]
    variables = tuple(Variable(i, draw(_names)) for i in ids)
    edges = ()
    if n >= 2:
        pairs = draw(st.lists(st.tuples(st.sampled_from(ids), st.sampled_from(ids), st.booleans()), max_size=10))
        edges = tuple(Edge(a, b, d) for a, b, d in pairs if a != b)
    return CausalGraph(variables, edges, draw(st.text(max_size=10)))


@given(graphs(), st.sampled_from(["json", "dot"]))
def test_round_trip_property(g, fmt):
    assert parse_graph(serialize_graph(g, fmt), fmt) == g


@given(graphs())
def test_parsed_graphs_have_no_structural_errors(g):
    parsed = parse_graph(serialize_graph(g, "json"))
    codes = {v.code for v in validate_graph(parsed)}
    assert not codes & {"dangling_reference", "self_loop"}
