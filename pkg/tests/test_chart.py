import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from causal_audit.chart import ChartStyle, chart_filename, render_debate_chart, write_charts
from causal_audit.verdict import EdgeAuditProfile, evaluate

SVG = "{http://www.w3.org/2000/svg}"


def bars(svg):
    root = ET.fromstring(svg.encode())
    return [r for r in root.iter(f"{SVG}rect") if r.get("class") == "bar"]


def profile(ratings, a="percent_fair_or_poor_health_rate", b="life_expectancy"):
    return EdgeAuditProfile("E6", "GPT-4", tuple(ratings), a, b)


def test_ten_bars_valid_svg():
    svg = render_debate_chart(profile([4, 1, 3, 2, 1, 4, 2, 2, 3, 1]))
    root = ET.fromstring(svg.encode())
    assert root.get("viewBox", "").startswith("0 0 ")
    assert len(bars(svg)) == 10
    headers = [t.text for t in root.iter(f"{SVG}text") if t.get("class") == "header"]
    assert headers == ["percent_fair_or_poor_health_rate", "life_expectancy"]


def test_all_fours_equal_max_bars():
    style = ChartStyle()
    widths = {int(b.get("width")) for b in bars(render_debate_chart(profile([4] * 10), style))}
    assert widths == {4 * style.unit}


def test_deterministic_bytes():
    p = profile([4, 1, 3, 2, 1, 4, 2, 2, 3, 1])
    assert render_debate_chart(p) == render_debate_chart(p)


def test_colors_general_gray_and_paired():
    style = ChartStyle()
    by_kind = {}
    for b in bars(render_debate_chart(profile([2] * 10), style)):
        by_kind.setdefault(b.get("data-kind"), set()).add(b.get("fill"))
    assert by_kind["general"] == {style.general_color}
    specific = [by_kind[k] for k in ("hh", "hl", "lh", "ll")]
    assert all(len(c) == 1 for c in specific)  # same pattern, same color on both sides
    assert len(set.union(*specific)) == 4


def test_palette_validation():
    with pytest.raises(ValueError):
        ChartStyle(specific_palette={"hh": "#111", "hl": "#111", "lh": "#222", "ll": "#333"})
    with pytest.raises(ValueError):
        ChartStyle(general_color="#111", specific_palette={"hh": "#111", "hl": "#000", "lh": "#222", "ll": "#333"})


@given(st.tuples(*[st.integers(1, 4)] * 10))
def test_length_proportional_and_mirror(r):
    style = ChartStyle()
    p = profile(r)
    got = {(b.get("data-side"), b.get("data-kind")): int(b.get("width")) for b in bars(render_debate_chart(p, style))}
    for pair in p.pairs:
        assert got[("A", pair.kind)] == pair.a_side * style.unit
        assert got[("B", pair.kind)] == pair.b_side * style.unit
    mirrored = {(b.get("data-side"), b.get("data-kind")): int(b.get("width"))
                for b in bars(render_debate_chart(p.swapped(), style))}
    for (side, kind), width in got.items():
        assert mirrored[("B" if side == "A" else "A", kind)] == width


def test_verdict_footer():
    p = profile([4, 1, 4, 1, 1, 4, 1, 1, 1, 1])
    svg = render_debate_chart(p, verdict=evaluate(p))
    root = ET.fromstring(svg.encode())
    footer = [t.text for t in root.iter(f"{SVG}text") if t.get("class") == "verdict"]
    assert footer == ["C (percent_fair_or_poor_health_rate dominant)"]


def test_write_charts_and_index(tmp_path):
    p = profile([1] * 10)
    q = EdgeAuditProfile("E2", "debate:a|b|c", (1,) * 10)
    write_charts([(p, evaluate(p)), (q, None)], tmp_path)
    assert (tmp_path / "E6_GPT-4.svg").exists()
    assert (tmp_path / chart_filename("E2", "debate:a|b|c")).exists()
    index = (tmp_path / "index.html").read_text()
    assert "E6_GPT-4.svg" in index and "E2_debate_a_b_c.svg" in index
