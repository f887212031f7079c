"""End-to-end run: parse, enrich, ground, score, decide and (optionally) suggest."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from . import __version__
from .action import ActionPlan, complete_and_rank, plan
from .enrichment import EnrichmentParams, EnrichmentRecord, enrich, ground
from .graph import GraphError, SceneGraph, graph_sentiment
from .knowledge import ConnotationLexicon, KnowledgeBase, KnowledgeError, load_kb, load_lexicon
from .risk import RiskAssessment, RiskParams, assess
from .scene_io import SchemaError, parse_scene_graph

REPORT_SCHEMA_VERSION = "1.0"

EXIT_SAFE = 0
EXIT_INPUT_ERROR = 1
EXIT_INTERNAL_ERROR = 2
EXIT_UNSAFE = 3

MODES = ("assess", "suggest")


class PipelineError(Exception):
    def __init__(self, stage: str, message: str, exit_code: int):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.exit_code = exit_code


@dataclass(frozen=True)
class PipelineConfig:
    enrichment: EnrichmentParams = field(default_factory=EnrichmentParams)
    risk: RiskParams = field(default_factory=RiskParams)
    child_present: bool = False
    rounds: int = 3
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def as_dict(self) -> dict:
        return {
            "enrichment": asdict(self.enrichment),
            "risk": asdict(self.risk),
            "child_present": self.child_present,
            "rounds": self.rounds,
            "epsilon": self.epsilon,
        }


@dataclass
class PipelineResult:
    report: dict
    exit_code: int
    graph: SceneGraph
    assessment: RiskAssessment
    action_plan: Optional[ActionPlan] = None
    enrichment_log: List[EnrichmentRecord] = field(default_factory=list)

    def render(self) -> str:
        return render_report(self.report)


def _r(x: float) -> float:
    # fixed precision keeps reports byte-stable across libm implementations
    v = round(float(x), 9)
    return 0.0 if v == 0 else v


def _plan_dict(p: ActionPlan) -> dict:
    return {
        "directive": p.directive,
        "object": p.target,
        "summary": str(p),
        "iterations": p.iterations,
        "sentiment_before": _r(p.sentiment_before),
        "sentiment_after": _r(p.sentiment_after),
        "ranked": [
            {
                "object": c.object_label,
                "score": _r(c.score),
                "source_harm": c.source_harm,
                "rationale": c.rationale,
                "triple": [c.supporting_triple.head, c.supporting_triple.relation,
                           c.supporting_triple.tail, _r(c.supporting_triple.weight)],
            }
            for c in p.ranked
        ],
    }


def analyze(
    graph: SceneGraph,
    kb: KnowledgeBase,
    lexicon: ConnotationLexicon,
    config: Optional[PipelineConfig] = None,
    mode: str = "assess",
    inputs: Optional[dict] = None,
    enrichment_log_ref: Optional[str] = None,
) -> PipelineResult:
    """Run every stage after parsing on in-memory inputs."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or PipelineConfig()

    log: List[EnrichmentRecord] = []
    g = enrich(graph, kb, config.enrichment, log=log)
    g = ground(g, kb)
    g, assessment = assess(g, lexicon, config.risk, config.child_present)

    action_plan = None
    note = None
    if mode == "suggest":
        if assessment.unsafe:
            g, ranking, stats = complete_and_rank(
                g, kb, lexicon, assessment, config.rounds, config.epsilon
            )
            action_plan = plan(ranking, stats["rounds"], stats["sentiment_before"],
                               stats["sentiment_after"])
        else:
            note = "verdict is safe; no assistive action required"

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool_version": __version__,
        "mode": mode,
        "frame_id": graph.frame_id,
        "verdict": assessment.verdict,
        "risk": _r(assessment.risk),
        "effective_threshold": _r(assessment.effective_threshold),
        "child_context": assessment.child_context,
        "iterations_used": assessment.iterations_used,
        "graph_sentiment": _r(graph_sentiment(g)),
        "nodes": len(g),
        "edges": len(g.relations),
        "contributions": [
            {
                "id": c.id,
                "label": c.label,
                "base_polarity": _r(c.base_polarity),
                "proximity": _r(c.proximity),
                "spatial_factor": _r(c.spatial_factor),
                "sentiment": _r(c.sentiment),
                "pooling_weight": _r(c.pooling_weight),
            }
            for c in assessment.contributions
        ],
        "action_plan": _plan_dict(action_plan) if action_plan else None,
        "note": note,
        "enrichment": {
            "added_edges": len(log),
            "added_nodes": sum(1 for rec in log if rec.created),
            "log": enrichment_log_ref,
        },
        "inputs": inputs or {},
        "config": config.as_dict(),
    }
    code = EXIT_UNSAFE if assessment.unsafe else EXIT_SAFE
    return PipelineResult(report, code, g, assessment, action_plan, log)


def load_inputs(kb_path, lexicon_path):
    try:
        kb = load_kb(kb_path)
    except (OSError, KnowledgeError) as exc:
        raise PipelineError("load-kb", str(exc), EXIT_INPUT_ERROR) from None
    try:
        lexicon = load_lexicon(lexicon_path)
    except (OSError, KnowledgeError) as exc:
        raise PipelineError("load-lexicon", str(exc), EXIT_INPUT_ERROR) from None
    return kb, lexicon


def run_pipeline(
    graph_path,
    kb_path,
    lexicon_path,
    config: Optional[PipelineConfig] = None,
    mode: str = "assess",
    kb: Optional[KnowledgeBase] = None,
    lexicon: Optional[ConnotationLexicon] = None,
    enrichment_log_ref: Optional[str] = None,
) -> PipelineResult:
    """File-level entry point; raises :class:`PipelineError` tagged with the failing stage.

    Pre-loaded ``kb``/``lexicon`` may be passed to share them across runs.
    """
    if kb is None or lexicon is None:
        loaded_kb, loaded_lex = load_inputs(kb_path, lexicon_path)
        kb = loaded_kb if kb is None else kb
        lexicon = loaded_lex if lexicon is None else lexicon
    try:
        graph = parse_scene_graph(graph_path)
    except (OSError, SchemaError, GraphError) as exc:
        raise PipelineError("parse", str(exc), EXIT_INPUT_ERROR) from None
    inputs = {"graph": str(graph_path), "kb": str(kb_path), "lexicon": str(lexicon_path)}
    try:
        return analyze(graph, kb, lexicon, config, mode, inputs, enrichment_log_ref)
    except Exception as exc:  # noqa: BLE001 - any failure past parsing is ours
        raise PipelineError("analyze", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL_ERROR) from exc


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
