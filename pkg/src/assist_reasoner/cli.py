"""Command-line interface: ``assist-reasoner assess|suggest|convert|export-dot``.

Exit status: 0 safe, 3 unsafe, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .action_genome import ConversionError, _atomic_write, convert_action_genome
from .enrichment import EnrichmentParams
from .graph import GraphError, to_dot
from .pipeline import (
    EXIT_INPUT_ERROR,
    EXIT_INTERNAL_ERROR,
    EXIT_SAFE,
    EXIT_UNSAFE,
    PipelineConfig,
    PipelineError,
    load_inputs,
    render_report,
    run_pipeline,
)
from .risk import RiskParams
from .scene_io import SchemaError, parse_scene_graph

_EXIT_PRIORITY = {EXIT_INTERNAL_ERROR: 3, EXIT_INPUT_ERROR: 2, EXIT_UNSAFE: 1, EXIT_SAFE: 0}


def _add_reasoning_flags(p: argparse.ArgumentParser, require_inputs: bool = True) -> None:
    d_en, d_risk = EnrichmentParams(), RiskParams()
    p.add_argument("--kb", required=require_inputs, help="commonsense triples CSV")
    p.add_argument("--lexicon", required=require_inputs, help="connotation lexicon TSV")
    g = p.add_argument_group("enrichment")
    g.add_argument("--top-k", type=int, default=d_en.top_k)
    g.add_argument("--min-confidence", type=float, default=d_en.min_confidence)
    g.add_argument("--max-depth", type=int, default=d_en.max_depth)
    g = p.add_argument_group("risk")
    g.add_argument("--alpha", type=float, default=d_risk.alpha, help="propagation damping")
    g.add_argument("--tol", type=float, default=d_risk.tol)
    g.add_argument("--max-iters", type=int, default=d_risk.max_iters)
    g.add_argument("--beta", type=float, default=d_risk.beta, help="spatial weighting gain")
    g.add_argument("--threshold", type=float, default=d_risk.threshold)
    g.add_argument("--child-adjustment", type=float, default=d_risk.child_adjustment)
    g.add_argument("--threshold-floor", type=float, default=d_risk.threshold_floor)
    g.add_argument("--child-present", action="store_true")
    g = p.add_argument_group("completion")
    g.add_argument("--rounds", type=int, default=3)
    g.add_argument("--epsilon", type=float, default=1e-3)


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        enrichment=EnrichmentParams(args.top_k, args.min_confidence, args.max_depth),
        risk=RiskParams(
            alpha=args.alpha,
            tol=args.tol,
            max_iters=args.max_iters,
            beta=args.beta,
            threshold=args.threshold,
            child_adjustment=args.child_adjustment,
            threshold_floor=args.threshold_floor,
        ),
        child_present=args.child_present,
        rounds=args.rounds,
        epsilon=args.epsilon,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assist-reasoner",
        description="Detect unsafe activities in scene graphs and suggest assistive actions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("assess", "decide whether the depicted activity is unsafe"),
        ("suggest", "assess, then synthesise an assistive action when unsafe"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("graphs", nargs="+", help="scene-graph JSON file(s)")
        _add_reasoning_flags(p)
        p.add_argument("--dot", help="write the final graph as Graphviz DOT (single input only)")
        p.add_argument("--enrichment-log", help="write the enrichment provenance log (single input only)")
        p.add_argument("--out-dir", help="write <name>.report.json per input instead of stdout")
        p.add_argument("--jobs", type=int, default=1, help="process inputs concurrently")

    p = sub.add_parser("convert", help="convert an ActionGenome annotation to scene-graph JSON")
    p.add_argument("annotation")
    p.add_argument("output_dir")

    p = sub.add_parser("export-dot", help="render a scene graph (optionally after reasoning) as DOT")
    p.add_argument("graph")
    _add_reasoning_flags(p, require_inputs=False)
    p.add_argument("--mode", choices=("assess", "suggest"), default="assess")
    p.add_argument("-o", "--output", help="output path (default: stdout)")
    return parser


def _err(message: str) -> None:
    print(f"assist-reasoner: error: {message}", file=sys.stderr)


def _run_reasoning(args) -> int:
    if len(args.graphs) > 1 and (args.dot or args.enrichment_log):
        _err("--dot and --enrichment-log accept a single input graph")
        return EXIT_INPUT_ERROR
    try:
        config = _config(args)
        kb, lexicon = load_inputs(args.kb, args.lexicon)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    except PipelineError as exc:
        _err(str(exc))
        return exc.exit_code

    def one(path):
        try:
            return path, run_pipeline(path, args.kb, args.lexicon, config, args.command,
                                      kb=kb, lexicon=lexicon,
                                      enrichment_log_ref=args.enrichment_log), None
        except PipelineError as exc:
            return path, None, exc

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        outcomes = list(pool.map(one, args.graphs))

    codes = []
    for path, result, exc in outcomes:
        if exc is not None:
            _err(f"{path}: {exc}")
            codes.append(exc.exit_code)
            continue
        codes.append(result.exit_code)
        text = result.render()
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            _atomic_write(out / (Path(path).stem + ".report.json"), text)
            print(f"{path}\t{result.report['verdict']}\t{result.report['risk']}")
        else:
            sys.stdout.write(text)
        if args.dot:
            Path(args.dot).write_text(to_dot(result.graph), encoding="utf-8")
        if args.enrichment_log:
            Path(args.enrichment_log).write_text(
                "".join(rec.line() + "\n" for rec in result.enrichment_log), encoding="utf-8"
            )
    return max(codes, key=_EXIT_PRIORITY.__getitem__)


def _run_convert(args) -> int:
    try:
        n = convert_action_genome(args.annotation, args.output_dir)
    except (ConversionError, GraphError) as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    print(n)
    return EXIT_SAFE


def _run_export_dot(args) -> int:
    try:
        if args.kb and args.lexicon:
            result = run_pipeline(args.graph, args.kb, args.lexicon, _config(args), args.mode)
            graph = result.graph
        else:
            graph = parse_scene_graph(args.graph)
    except PipelineError as exc:
        _err(str(exc))
        return exc.exit_code
    except (OSError, SchemaError, GraphError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    text = to_dot(graph)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_SAFE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("assess", "suggest"):
            return _run_reasoning(args)
        if args.command == "convert":
            return _run_convert(args)
        return _run_export_dot(args)
    except Exception as exc:  # noqa: BLE001
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
