"""Survey orchestration: config, per-cell audits, and the on-disk run layout."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import __version__
from .audit import audit_edge
from .chart import write_charts
from .debate import FAIR, STRESS_TEST, DebateLineup, enumerate_lineups, run_debate_audit
from .gateway import REPLAY_POLICIES, Gateway, GatewayError, ModelSpec, ReplayStore
from .graph import CausalGraph, GraphError, load_graph
from .metrics import UNPARSEABLE, VerdictMatrix, compute_rates, debate_results, emit_report, render_debate
from .rag import Corpus, build_corpus, load_corpus
from .verdict import EdgeAuditProfile, StrengthThreshold, Verdict, evaluate

logger = logging.getLogger(__name__)

MODES = ("solo", "rag", "debate")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_UNPARSEABLE = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    graph: Path
    models: list[ModelSpec]
    mode: str = "solo"
    out: Path = Path("runs/latest")
    corpus: Path | None = None
    reference_graph: Path | None = None
    arbiter_pool: list[str] = field(default_factory=list)
    stance_mode: str = FAIR
    swap_order: bool = False
    t_strong: int = 3
    parallelism: int = 4
    replay: str = "record"
    cassettes: Path | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.models:
            raise ConfigError("at least one model is required")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError(f"model names must be unique: {names}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.replay not in REPLAY_POLICIES:
            raise ConfigError(f"replay must be one of {REPLAY_POLICIES}")
        try:
            StrengthThreshold(self.t_strong)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.mode == "rag" and not (self.corpus or self.reference_graph):
            raise ConfigError("rag mode needs 'corpus' or 'reference_graph'")
        if self.mode == "debate":
            if len(self.models) < 3:
                raise ConfigError("debate mode needs at least 3 models")
            if not self.arbiter_pool:
                raise ConfigError("debate mode needs a non-empty 'arbiter_pool'")
            unknown = set(self.arbiter_pool) - set(names)
            if unknown:
                raise ConfigError(f"arbiter_pool names unknown models: {sorted(unknown)}")
            if self.stance_mode not in (FAIR, STRESS_TEST):
                raise ConfigError(f"stance_mode must be {FAIR!r} or {STRESS_TEST!r}")

    @property
    def cassette_dir(self) -> Path:
        return self.cassettes if self.cassettes is not None else self.out / "cassettes"

    def semantic_dict(self) -> dict:
        """Fields that determine results; output location and execution knobs are excluded."""
        d: dict[str, Any] = {
            "mode": self.mode,
            "models": [m.to_dict() for m in self.models],
            "t_strong": self.t_strong,
        }
        if self.mode == "rag":
            d["corpus"] = self.corpus.name if self.corpus else None
            d["reference_graph"] = self.reference_graph.name if self.reference_graph else None
        if self.mode == "debate":
            d.update(arbiter_pool=list(self.arbiter_pool), stance_mode=self.stance_mode, swap_order=self.swap_order)
        return d


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def config_digest(cfg: RunConfig) -> str:
    return _digest(cfg.semantic_dict())


def graph_digest(g: CausalGraph) -> str:
    return _digest(g.to_dict())


def load_config(path: str | Path, **overrides) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(data, base_dir=path.parent, **overrides)


def config_from_dict(data: dict, base_dir: Path = Path("."), **overrides) -> RunConfig:
    data = dict(data)

    def p(value):
        if value is None:
            return None
        value = Path(value)
        return value if value.is_absolute() else base_dir / value

    try:
        models = [ModelSpec.from_dict(m, base_dir) for m in data.pop("models", [])]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model spec: {exc}") from None
    rag = data.pop("rag", {}) or {}
    debate = data.pop("debate", {}) or {}
    if "graph" not in data:
        raise ConfigError("config needs 'graph'")
    cfg = RunConfig(
        graph=p(data.pop("graph")),
        models=models,
        mode=data.pop("mode", "solo"),
        out=p(data.pop("out", "runs/latest")),
        corpus=p(rag.get("corpus")),
        reference_graph=p(rag.get("reference_graph")),
        arbiter_pool=list(debate.get("arbiter_pool", [])),
        stance_mode=debate.get("stance_mode", FAIR),
        swap_order=bool(debate.get("swap_order", False)),
        t_strong=data.pop("t_strong", 3),
        parallelism=data.pop("parallelism", 4),
        replay=data.pop("replay", "record"),
        cassettes=p(data.pop("cassettes", None)),
    )
    if data:
        raise ConfigError(f"unknown config fields: {sorted(data)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


@dataclass
class CellResult:
    edge_label: str
    responder: str
    profile: EdgeAuditProfile | None
    verdict: Verdict | str | None
    transcripts: list[dict]
    error: str | None = None


@dataclass
class RunSummary:
    matrix: VerdictMatrix | None
    cells: list[CellResult]
    exit_code: int
    out: Path
    manifest: dict

    @property
    def rates(self):
        return compute_rates(self.matrix) if self.matrix is not None else None


def _load_corpus(cfg: RunConfig) -> Corpus | None:
    if cfg.mode != "rag":
        return None
    if cfg.corpus is not None:
        return load_corpus(cfg.corpus)
    return build_corpus(load_graph(cfg.reference_graph))


def responders_for(cfg: RunConfig) -> list[ModelSpec | DebateLineup]:
    if cfg.mode == "debate":
        return list(enumerate_lineups(cfg.models, cfg.arbiter_pool, cfg.stance_mode))
    return list(cfg.models)


def _label(responder) -> str:
    return responder.label if isinstance(responder, DebateLineup) else responder.name


def run_cell(graph: CausalGraph, edge_index: int, responder, gateway: Gateway, cfg: RunConfig,
             corpus: Corpus | None, th: StrengthThreshold) -> CellResult:
    edge = graph.edges[edge_index]
    label = graph.edge_label(edge_index)
    try:
        if isinstance(responder, DebateLineup):
            profile, transcripts = run_debate_audit(edge, graph, responder, gateway=gateway,
                                                    swap_order=cfg.swap_order, index=edge_index)
            records = [t.to_dict() for t in transcripts]
        else:
            profile, exchanges = audit_edge(edge, graph, responder, gateway, corpus, index=edge_index)
            records = [x.to_dict() for x in exchanges]
    except GatewayError as exc:
        role = f" [{exc.role}]" if exc.role else ""
        return CellResult(label, _label(responder), None, None, [], f"{type(exc).__name__}{role}: {exc}")
    verdict = UNPARSEABLE if profile.unparseable else evaluate(profile, th)
    return CellResult(label, _label(responder), profile, verdict, records)


def run_survey(cfg: RunConfig, gateway: Gateway | None = None) -> RunSummary:
    try:
        cfg.validate()
        graph = load_graph(cfg.graph)
        corpus = _load_corpus(cfg)
        responders = responders_for(cfg)
    except (ConfigError, GraphError, OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    th = StrengthThreshold(cfg.t_strong)
    store = ReplayStore(cfg.cassette_dir)
    own_gateway = gateway is None
    if gateway is None:
        gateway = Gateway(store if cfg.replay != "live" else None, cfg.replay)

    tasks = [(i, r) for i in range(len(graph.edges)) for r in responders]
    try:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            cells = list(pool.map(lambda t: run_cell(graph, t[0], t[1], gateway, cfg, corpus, th), tasks))
    finally:
        if own_gateway:
            gateway.close()

    return _write_run(cfg, graph, responders, cells, store, th)


def _write_run(cfg: RunConfig, graph: CausalGraph, responders, cells: list[CellResult], store: ReplayStore,
               th: StrengthThreshold) -> RunSummary:
    # single writer: everything below runs on the calling thread
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    failed = [c for c in cells if c.error is not None]
    unparseable = [c for c in cells if c.verdict == UNPARSEABLE]
    exit_code = EXIT_PROVIDER if failed else EXIT_UNPARSEABLE if unparseable else EXIT_OK

    cdigest = config_digest(cfg)
    gdigest = graph_digest(graph)
    provenance = {
        "run_id": _digest([cdigest, gdigest])[:16],
        "config_digest": cdigest,
        "graph_digest": gdigest,
        "replay_store_digest": store.digest(),
    }
    manifest = {
        **provenance,
        "tool_version": __version__,
        "mode": cfg.mode,
        "t_strong": th.t_strong,
        "replay_policy": cfg.replay,
        "config": cfg.semantic_dict(),
        "graph": graph.to_dict(),
        "responders": [_label(r) for r in responders],
        "cells": [
            {
                "edge": c.edge_label,
                "responder": c.responder,
                "outcome": ("provider_error" if c.error else UNPARSEABLE if c.verdict == UNPARSEABLE
                            else c.verdict.code),
                "ratings": list(c.profile.ratings) if c.profile else None,
                "error": c.error,
            }
            for c in cells
        ],
        "exit_code": exit_code,
    }

    with (out / "transcripts.jsonl").open("w", encoding="utf-8") as fh:
        for c in cells:
            for rec in c.transcripts:
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")

    matrix = None
    if not failed:
        edges = tuple(graph.edge_label(i) for i in range(len(graph.edges)))
        labels = tuple(_label(r) for r in responders)
        matrix = VerdictMatrix(edges, labels, {(c.edge_label, c.responder): c.verdict for c in cells},
                               {graph.edge_label(i): graph.describe_edge(i) for i in range(len(graph.edges))})
        matrix_doc = {
            **provenance,
            "mode": cfg.mode,
            "t_strong": th.t_strong,
            "matrix": matrix.to_dict(),
            "profiles": [{k: v for k, v in c.profile.to_dict().items() if k != "raw_responses"} for c in cells],
        }
        (out / "matrix.json").write_text(json.dumps(matrix_doc, indent=2, ensure_ascii=False) + "\n",
                                         encoding="utf-8")
        report_md = emit_report(matrix, "markdown", provenance)
        if cfg.mode == "debate":
            report_md += "\n" + render_debate(debate_results(matrix), "markdown")
        (out / "report.md").write_text(report_md, encoding="utf-8")
        (out / "report.csv").write_text(emit_report(matrix, "csv", provenance), encoding="utf-8")
        write_charts(((c.profile, None if c.verdict == UNPARSEABLE else c.verdict) for c in cells),
                     out / "charts")

    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    for c in failed[:3]:
        logger.error("%s/%s failed: %s", c.edge_label, c.responder, c.error)
    if len(failed) > 3:
        logger.error("... and %d more failed cells; see %s", len(failed) - 3, out / "manifest.json")
    return RunSummary(matrix, cells, exit_code, out, manifest)


def load_run(run_dir: str | Path) -> tuple[VerdictMatrix, list[EdgeAuditProfile], dict]:
    doc = json.loads((Path(run_dir) / "matrix.json").read_text(encoding="utf-8"))
    matrix = VerdictMatrix.from_dict(doc["matrix"])
    profiles = [EdgeAuditProfile.from_dict(p) for p in doc["profiles"]]
    return matrix, profiles, doc
