"""Single-responder edge audit: prompts -> completions -> ratings -> profile."""

from __future__ import annotations

from dataclasses import dataclass

from .gateway import CompletionRequest, Gateway, GatewayError, ModelSpec, RatingParseError, extract_rating
from .graph import CausalGraph, Edge
from .prompts import build_prompt_set
from .rag import Corpus, retrieve_and_augment
from .verdict import EdgeAuditProfile


@dataclass(frozen=True)
class PromptExchange:
    edge_label: str
    responder: str
    prompt_index: int
    prompt_kind: str
    context: str | None
    question: str
    response: str
    rating: int | None
    source: str
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "edge": self.edge_label,
            "responder": self.responder,
            "prompt_index": self.prompt_index,
            "kind": self.prompt_kind,
            "context": self.context,
            "question": self.question,
            "response": self.response,
            "rating": self.rating,
            "source": self.source,
            "error": self.error,
        }


def audit_edge(edge: Edge, graph: CausalGraph, model: ModelSpec, gateway: Gateway,
               corpus: Corpus | None = None, responder: str | None = None, index: int | None = None,
               ) -> tuple[EdgeAuditProfile, list[PromptExchange]]:
    """Ask ``model`` the ten-prompt battery for ``edge``; with ``corpus``, inject retrieved facts."""
    prompt_set = build_prompt_set(edge, graph, index)
    responder = responder or model.name
    ratings: list[int | None] = []
    raw: list[str] = []
    exchanges: list[PromptExchange] = []
    for prompt in prompt_set:
        request = CompletionRequest(prompt.text, tags={
            "edge": prompt_set.edge_label, "prompt_index": prompt.index, "role": "solo", "responder": responder,
        })
        if corpus is not None:
            request = retrieve_and_augment(corpus, request, edge, graph)
        try:
            response = gateway.complete(model, request)
        except GatewayError as exc:
            exc.role = responder
            raise
        try:
            rating = extract_rating(response.text)
            error = None
        except RatingParseError as exc:
            rating, error = None, str(exc)
        ratings.append(rating)
        raw.append(response.text)
        exchanges.append(PromptExchange(prompt_set.edge_label, responder, prompt.index, prompt.kind.code(),
                                        request.context, request.question, response.text, rating,
                                        response.source, error))
    profile = EdgeAuditProfile(prompt_set.edge_label, responder, tuple(ratings),
                               prompt_set.a_name, prompt_set.b_name, tuple(raw))
    return profile, exchanges
