"""``causal-audit`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .chart import ChartStyle, render_debate_chart, write_charts
from .fixtures import (
    TABLE2_REPORTED_AGGREGATES,
    table1_matrix,
    table2_after_matrix,
    table3_matrix,
)
from .gateway import Gateway, GatewayError, ReplayStore
from .graph import GraphError, load_graph
from .metrics import compute_improvement, compute_rates, debate_results, emit_report
from .prompts import build_prompt_set
from .rag import build_corpus
from .runner import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_PROVIDER,
    EXIT_UNPARSEABLE,
    ConfigError,
    load_config,
    load_run,
    run_survey,
)
from .verdict import EdgeAuditProfile, StrengthThreshold, evaluate, verdict_reasons_explained

log = logging.getLogger("causal_audit")


def _replay_policy(args) -> str | None:
    if getattr(args, "replay_only", False):
        return "replay_only"
    if getattr(args, "record", False):
        return "record"
    if getattr(args, "live", False):
        return "live"
    return None


def _add_run_flags(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    p.add_argument("--config", required=True, type=Path, help="run configuration JSON")
    if with_mode:
        p.add_argument("--mode", choices=("solo", "rag", "debate"))
    p.add_argument("--out", type=Path, help="output directory")
    policy = p.add_mutually_exclusive_group()
    policy.add_argument("--replay-only", action="store_true", help="serve cassettes only; never call providers")
    policy.add_argument("--record", action="store_true", help="replay when possible, record new responses")
    policy.add_argument("--live", action="store_true", help="always call providers, no cassettes")
    p.add_argument("--cassettes", type=Path, help="replay store directory (default: <out>/cassettes)")
    p.add_argument("--t-strong", type=int, help="smallest rating counted as strong (2-4)")
    p.add_argument("--parallelism", type=int)


def _config_from_args(args, **extra):
    return load_config(
        args.config,
        mode=extra.pop("mode", getattr(args, "mode", None)),
        out=args.out,
        replay=_replay_policy(args),
        cassettes=args.cassettes,
        t_strong=args.t_strong,
        parallelism=args.parallelism,
        **extra,
    )


def _summarize(summary) -> int:
    counts = {}
    for cell in summary.manifest["cells"]:
        counts[cell["outcome"]] = counts.get(cell["outcome"], 0) + 1
    print(f"wrote {summary.out} ({', '.join(f'{k}={v}' for k, v in sorted(counts.items()))})")
    if summary.matrix is not None:
        rates = compute_rates(summary.matrix)
        for r, rate in rates.per_responder.items():
            shown = "n/a" if rate.display is None else f"{rate.display}%"
            print(f"  {r}: {shown} hallucination ({rate.count}/{rate.total})")
        print(f"  average: {'n/a' if rates.overall is None else str(rates.overall) + '%'}")
    return summary.exit_code


def cmd_survey(args, **extra) -> int:
    cfg = _config_from_args(args, **extra)
    return _summarize(run_survey(cfg))


def cmd_rag_survey(args) -> int:
    extra = {"mode": "rag"}
    if args.corpus:
        extra["corpus"] = args.corpus
    if args.reference_graph:
        extra["reference_graph"] = args.reference_graph
    return cmd_survey(args, **extra)


def cmd_debate_survey(args) -> int:
    extra = {"mode": "debate"}
    if args.arbiter:
        extra["arbiter_pool"] = args.arbiter
    if args.stance_mode:
        extra["stance_mode"] = args.stance_mode
    if args.swap_order:
        extra["swap_order"] = True
    return cmd_survey(args, **extra)


def cmd_rag_build(args) -> int:
    corpus = build_corpus(load_graph(args.graph))
    if args.out:
        corpus.save(args.out)
        print(f"wrote {len(corpus)} facts to {args.out}")
    else:
        sys.stdout.write(corpus.to_text())
    return EXIT_OK


def cmd_audit(args) -> int:
    from .audit import audit_edge
    from .rag import load_corpus

    cfg = _config_from_args(args)
    graph = load_graph(cfg.graph)
    index = graph.edge_index(args.edge)
    edge = graph.edges[index]
    model = next((m for m in cfg.models if m.name == args.model), None) if args.model else cfg.models[0]
    if model is None:
        raise ConfigError(f"no model named {args.model!r} in config")
    corpus = None
    if cfg.mode == "rag":
        corpus = load_corpus(cfg.corpus) if cfg.corpus else build_corpus(load_graph(cfg.reference_graph))
    store = ReplayStore(cfg.cassette_dir)
    gateway = Gateway(store if cfg.replay != "live" else None, cfg.replay)
    try:
        profile, exchanges = audit_edge(edge, graph, model, gateway, corpus, index=index)
    finally:
        gateway.close()
    print(f"{graph.describe_edge(index)}: {profile.a_name} -> {profile.b_name} [{model.name}]")
    for x in exchanges:
        print(f"\n[{x.prompt_index}] {x.prompt_kind}")
        if x.context:
            print("  context: " + x.context.replace("\n", "\n           "))
        print(f"  prompt:  {x.question}")
        print(f"  reply:   {x.response.strip()[:400]}")
        print(f"  rating:  {x.rating if x.rating is not None else 'UNPARSEABLE (' + x.error + ')'}")
    if profile.unparseable:
        print("\nverdict: unparseable (excluded from rates)")
        return EXIT_UNPARSEABLE
    th = StrengthThreshold(cfg.t_strong)
    print("\n" + json.dumps(verdict_reasons_explained(profile, th), indent=2))
    if args.chart:
        args.chart.write_text(render_debate_chart(profile, ChartStyle(), evaluate(profile, th)), encoding="utf-8")
        print(f"chart written to {args.chart}")
    return EXIT_OK


def cmd_report(args) -> int:
    fmt = "csv" if args.format == "csv" else "markdown"
    if args.fixture:
        text = _fixture_report(args.fixture, fmt)
    elif args.before and args.after:
        before, _, _ = load_run(args.before)
        after, _, _ = load_run(args.after)
        text = emit_report(compute_improvement(compute_rates(before), compute_rates(after)), fmt)
    elif args.run:
        matrix, _, doc = load_run(args.run)
        provenance = {k: doc[k] for k in ("run_id", "config_digest", "graph_digest", "replay_store_digest")}
        text = emit_report(matrix, fmt, provenance)
        if doc.get("mode") == "debate" and fmt == "markdown":
            text += "\n" + emit_report(debate_results(matrix), fmt)
    else:
        raise ConfigError("report needs --run, --before/--after, or --fixture")
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fixture_report(name: str, fmt: str) -> str:
    if name == "table1":
        return emit_report(table1_matrix(), fmt)
    if name == "table2":
        table = compute_improvement(compute_rates(table1_matrix()), compute_rates(table2_after_matrix()))
        return emit_report(table.with_reported(TABLE2_REPORTED_AGGREGATES), fmt)
    if name == "table3":
        return emit_report(debate_results(table3_matrix()), fmt)
    raise ConfigError(f"unknown fixture {name!r}")


def cmd_chart(args) -> int:
    th = StrengthThreshold(args.t_strong or 3)
    if args.ratings:
        ratings = tuple(int(x) for x in args.ratings.split(","))
        a, b = args.names.split(",", 1) if args.names else ("A", "B")
        profile = EdgeAuditProfile(args.edge or "E1", args.responder or "manual", ratings, a, b)
        svg = render_debate_chart(profile, ChartStyle(), evaluate(profile, th))
        if args.out:
            args.out.write_text(svg, encoding="utf-8")
        else:
            sys.stdout.write(svg)
        return EXIT_OK
    if not args.run:
        raise ConfigError("chart needs --run DIR or --ratings r1,...,r10")
    _, profiles, _ = load_run(args.run)
    out = args.out or Path(args.run) / "charts"
    written = write_charts(((p, None if p.unparseable else evaluate(p, th)) for p in profiles), out)
    print(f"wrote {len(written)} charts to {out}")
    return EXIT_OK


def cmd_prompts(args) -> int:
    graph = load_graph(args.graph)
    index = graph.edge_index(args.edge)
    print(json.dumps(build_prompt_set(graph.edges[index], graph, index).to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causal-audit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("survey", help="audit every edge with every configured responder")
    _add_run_flags(p)
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("audit", help="audit one edge with one model, verbosely")
    _add_run_flags(p)
    p.add_argument("--edge", required=True, help="edge label, e.g. E1")
    p.add_argument("--model", help="model name from the config (default: first)")
    p.add_argument("--chart", type=Path, help="also write the debate chart SVG here")
    p.set_defaults(func=cmd_audit)

    rag = sub.add_parser("rag", help="retrieval-augmented surveys").add_subparsers(dest="rag_command", required=True)
    p = rag.add_parser("build", help="turn a reference graph into a fact corpus")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_rag_build)
    p = rag.add_parser("survey", help="survey with retrieved facts injected")
    _add_run_flags(p, with_mode=False)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--reference-graph", type=Path)
    p.set_defaults(func=cmd_rag_survey)

    debate = sub.add_parser("debate", help="debate-with-arbiter surveys").add_subparsers(
        dest="debate_command", required=True)
    p = debate.add_parser("survey", help="survey every lineup of the configured models")
    _add_run_flags(p, with_mode=False)
    p.add_argument("--arbiter", action="append", help="model allowed to arbitrate (repeatable)")
    p.add_argument("--stance-mode", choices=("fair", "stress_test"))
    p.add_argument("--swap-order", action="store_true", help="show the opposition response to the arbiter first")
    p.set_defaults(func=cmd_debate_survey)

    p = sub.add_parser("report", help="render reports from a run directory or a published-table fixture")
    p.add_argument("--run", type=Path)
    p.add_argument("--before", type=Path)
    p.add_argument("--after", type=Path)
    p.add_argument("--fixture", choices=("table1", "table2", "table3"))
    p.add_argument("--format", choices=("markdown", "md", "csv"), default="markdown")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("chart", help="render causal debate charts")
    p.add_argument("--run", type=Path)
    p.add_argument("--ratings", help="ten comma-separated ratings in canonical prompt order")
    p.add_argument("--names", help="A,B variable names for --ratings")
    p.add_argument("--edge")
    p.add_argument("--responder")
    p.add_argument("--t-strong", type=int)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("prompts", help="print the prompt battery for one edge")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--edge", required=True)
    p.set_defaults(func=cmd_prompts)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GatewayError as exc:
        role = f" [{exc.role}]" if exc.role else ""
        print(f"provider error{role}: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())
