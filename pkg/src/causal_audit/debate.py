"""One-round proposition / opposition / arbiter debate per prompt."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .gateway import CompletionRequest, Gateway, GatewayError, ModelSpec, RatingParseError, extract_rating
from .graph import CausalGraph, Edge
from .prompts import EdgePrompt, build_prompt_set, render_arbiter_prompt
from .rag import OPPOSITION, PROPOSITION, build_stance_corpus, retrieve_and_augment
from .verdict import EdgeAuditProfile

STRESS_TEST = "stress_test"
FAIR = "fair"


class LineupError(ValueError):
    pass


@dataclass(frozen=True)
class DebateLineup:
    proposition: ModelSpec
    opposition: ModelSpec
    arbiter: ModelSpec
    stance_mode: str = FAIR

    def __post_init__(self):
        names = [self.proposition.name, self.opposition.name, self.arbiter.name]
        if len(set(names)) != 3:
            raise LineupError(f"debate roles need three distinct models, got {names}")
        if self.stance_mode not in (STRESS_TEST, FAIR):
            raise LineupError(f"unknown stance mode {self.stance_mode!r}")

    @property
    def label(self) -> str:
        return f"debate:{self.proposition.name}|{self.opposition.name}|{self.arbiter.name}"


@dataclass(frozen=True)
class DebateTranscript:
    edge_label: str
    prompt_index: int
    question: str
    proposition_response: str
    opposition_response: str
    arbiter_prompt: str
    arbiter_response: str
    final_rating: int | None
    lineup: str = ""
    proposition_context: str | None = None
    opposition_context: str | None = None

    @property
    def unparseable(self) -> bool:
        return self.final_rating is None

    def to_dict(self) -> dict:
        return {
            "lineup": self.lineup,
            "edge": self.edge_label,
            "prompt_index": self.prompt_index,
            "question": self.question,
            "proposition_context": self.proposition_context,
            "opposition_context": self.opposition_context,
            "proposition_response": self.proposition_response,
            "opposition_response": self.opposition_response,
            "arbiter_prompt": self.arbiter_prompt,
            "arbiter_response": self.arbiter_response,
            "final_rating": self.final_rating,
            "unparseable": self.unparseable,
        }


def _ask(gateway: Gateway, model: ModelSpec, request: CompletionRequest, role: str) -> str:
    try:
        return gateway.complete(model, request).text
    except GatewayError as exc:
        exc.role = role
        raise


def run_debate_round(edge: Edge, prompt: EdgePrompt, lineup: DebateLineup, *, graph: CausalGraph,
                     gateway: Gateway, swap_order: bool = False, index: int | None = None) -> DebateTranscript:
    edge_label = graph.edge_label(graph.index_of(edge) if index is None else index)
    tags = {"edge": edge_label, "prompt_index": prompt.index}
    prop_req = CompletionRequest(prompt.text, tags={**tags, "role": "proposition", "responder": lineup.proposition.name})
    opp_req = CompletionRequest(prompt.text, tags={**tags, "role": "opposition", "responder": lineup.opposition.name})
    if lineup.stance_mode == STRESS_TEST:
        prop_req = retrieve_and_augment(build_stance_corpus(edge, PROPOSITION, graph), prop_req, edge, graph)
        opp_req = retrieve_and_augment(build_stance_corpus(edge, OPPOSITION, graph), opp_req, edge, graph)

    # debaters answer independently; only the arbiter sees both
    with ThreadPoolExecutor(max_workers=2) as pool:
        prop_future = pool.submit(_ask, gateway, lineup.proposition, prop_req, "proposition")
        opp_future = pool.submit(_ask, gateway, lineup.opposition, opp_req, "opposition")
        prop_text = prop_future.result()
        opp_text = opp_future.result()

    arbiter_prompt = render_arbiter_prompt(prompt.text, prop_text, opp_text, swap_order=swap_order)
    arb_req = CompletionRequest(arbiter_prompt, tags={**tags, "role": "arbiter", "responder": lineup.arbiter.name})
    arb_text = _ask(gateway, lineup.arbiter, arb_req, "arbiter")
    try:
        rating = extract_rating(arb_text)
    except RatingParseError:
        rating = None
    return DebateTranscript(edge_label, prompt.index, prompt.text, prop_text, opp_text, arbiter_prompt,
                            arb_text, rating, lineup.label, prop_req.context, opp_req.context)


def run_debate_audit(edge: Edge, graph: CausalGraph, lineup: DebateLineup, *, gateway: Gateway,
                     swap_order: bool = False, index: int | None = None,
                     ) -> tuple[EdgeAuditProfile, list[DebateTranscript]]:
    prompt_set = build_prompt_set(edge, graph, index)
    index = graph.index_of(edge) if index is None else index
    transcripts = [run_debate_round(edge, p, lineup, graph=graph, gateway=gateway, swap_order=swap_order,
                                    index=index)
                   for p in prompt_set]
    profile = EdgeAuditProfile(prompt_set.edge_label, lineup.label, tuple(t.final_rating for t in transcripts),
                               prompt_set.a_name, prompt_set.b_name, tuple(t.arbiter_response for t in transcripts))
    return profile, transcripts


def enumerate_lineups(models: Sequence[ModelSpec], arbiter_pool: Sequence[ModelSpec | str],
                      stance_mode: str = FAIR) -> list[DebateLineup]:
    """All (proposition, opposition, arbiter) assignments of distinct models.

    Ordered by arbiter (pool order), then debater permutations in model order.
    """
    models = list(models)
    if len({m.name for m in models}) != len(models):
        raise LineupError("model names must be unique")
    if len(models) < 3:
        raise LineupError("a debate needs at least 3 distinct models")
    pool_names = [a if isinstance(a, str) else a.name for a in arbiter_pool]
    if not pool_names:
        raise LineupError("arbiter pool is empty")
    by_name = {m.name: m for m in models}
    missing = [n for n in pool_names if n not in by_name]
    if missing:
        raise LineupError(f"arbiters not among the models: {missing}")
    lineups = []
    for arb_name in dict.fromkeys(pool_names):
        arbiter = by_name[arb_name]
        debaters = [m for m in models if m.name != arb_name]
        for prop, opp in itertools.permutations(debaters, 2):
            lineups.append(DebateLineup(prop, opp, arbiter, stance_mode))
    return lineups
