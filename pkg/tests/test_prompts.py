import pytest
from hypothesis import given, strategies as st

from causal_audit.graph import CausalGraph, Edge, Variable, graph_from_names
from causal_audit.prompts import (
    CANONICAL_KINDS,
    Polarity,
    PromptKind,
    Side,
    build_prompt_set,
    render_arbiter_prompt,
)

GENERAL_A = ("On a scale from 1 to 4, where 4 represents strong or most likely, rate the cause-and-effect "
             "relationship: changing percent fair or poor health rate causes a change in life expectancy")
GENERAL_B = ("On a scale from 1 to 4, where 4 represents strong or most likely, rate the cause-and-effect "
             "relationship: changing life expectancy causes a change in percent fair or poor health rate")


def test_general_prompts_byte_exact(pair_graph):
    ps = build_prompt_set(pair_graph.edges[0], pair_graph)
    assert ps[0].text == GENERAL_A
    assert ps[1].text == GENERAL_B


def test_ten_prompts_two_general(pair_graph):
    ps = build_prompt_set(pair_graph.edges[0], pair_graph)
    assert len(ps) == 10
    assert sum(p.kind.general for p in ps) == 2
    assert sum(not p.kind.general for p in ps) == 8


def test_canonical_order(pair_graph):
    codes = [k.code() for k in CANONICAL_KINDS]
    assert codes == ["general:A", "general:B", "hh:A", "hl:A", "lh:A", "ll:A", "hh:B", "hl:B", "lh:B", "ll:B"]


def test_specific_substitution():
    g = graph_from_names(["X", "Y"], [("X", "Y")])
    ps = build_prompt_set(g.edges[0], g)
    assert ps[3].kind == PromptKind(Side.A, Polarity.HIGHER, Polarity.LOWER)
    assert ps[3].text.endswith(": higher X causes lower Y")
    assert ps[8].text.endswith(": lower Y causes higher X")


def test_edge_not_in_graph(pair_graph):
    with pytest.raises(ValueError):
        build_prompt_set(Edge("V2", "V1"), pair_graph)


def test_repeated_edge_index_label(life_graph):
    e10 = life_graph.edges[9]
    assert build_prompt_set(e10, life_graph).edge_label == "E6"
    assert build_prompt_set(e10, life_graph, 9).edge_label == "E10"


ARBITER_TAIL = ("Using the responses of the two debaters and your own knowledge, generate a final rating in "
                "response to the question: On a scale from 1 to 4, 4 represents strong or most likely, rate the "
                "cause-and-effect relationship: changing percent fair or poor health rate causes a change in "
                "life expectancy")


def test_arbiter_prompt(pair_graph):
    ps = build_prompt_set(pair_graph.edges[0], pair_graph)
    text = render_arbiter_prompt(ps[0].text, "Rating: 4 strong link", "Rating: 1 no link")
    assert text.endswith(ARBITER_TAIL)
    assert text.index("Rating: 4 strong link") < text.index("Rating: 1 no link") < text.index("Using the responses")
    swapped = render_arbiter_prompt(ps[0].text, "Rating: 4 strong link", "Rating: 1 no link", swap_order=True)
    assert swapped.index("Rating: 1 no link") < swapped.index("Rating: 4 strong link")


def test_arbiter_identical_responses_both_embedded():
    text = render_arbiter_prompt("changing a causes a change in b", "Rating: 2", "Rating: 2")
    assert text.count("Rating: 2") == 2


@pytest.mark.parametrize("args", [("", "x", "y"), ("q", "x", ""), ("q", "  ", "y")])
def test_arbiter_rejects_empty(args):
    with pytest.raises(ValueError):
        render_arbiter_prompt(*args)


_name = st.text(alphabet="abcdefghij_ ", min_size=1, max_size=15).filter(lambda s: s.strip("_ "))


@given(_name, _name)
def test_mirror_property(a, b):
    g = CausalGraph((Variable("V1", a), Variable("V2", b)), (Edge("V1", "V2"), Edge("V2", "V1")))
    fwd = build_prompt_set(g.edges[0], g, 0)
    rev = build_prompt_set(g.edges[1], g, 1)
    for p in fwd:
        twin = next(q for q in rev if q.kind == p.kind.mirrored())
        assert twin.text == p.text


@given(_name, _name)
def test_deterministic_and_independent(a, b):
    g = CausalGraph((Variable("V1", a), Variable("V2", b), Variable("V3", "other_var")),
                    (Edge("V1", "V2"), Edge("V2", "V3")))
    one = build_prompt_set(g.edges[0], g)
    two = build_prompt_set(g.edges[0], g)
    assert [p.text for p in one] == [p.text for p in two]
    # nothing about other edges or graph structure leaks in
    assert not any("other var" in p.text or "E2" in p.text for p in one)
