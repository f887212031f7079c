"""Commonsense risk assessment and assistive action synthesis over scene graphs."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Entity,
    GraphError,
    Relation,
    SceneGraph,
    build_graph,
    graph_sentiment,
    merge_nodes,
    relations_between,
    to_dot,
)
from .knowledge import (  # noqa: E402
    ConnotationLexicon,
    KnowledgeBase,
    Triple,
    load_kb,
    load_lexicon,
    outgoing,
    polarity,
    remedies_for,
)
from .enrichment import EnrichmentParams, context_confidence, enrich, ground  # noqa: E402
from .risk import (  # noqa: E402
    RiskAssessment,
    RiskParams,
    assign_sentiment,
    decide,
    pool_risk,
    propagate,
)
from .action import ActionPlan, RemedyCandidate, candidate_remedies, complete_and_rank, plan  # noqa: E402
from .scene_io import parse_scene_graph  # noqa: E402
from .pipeline import PipelineConfig, run_pipeline  # noqa: E402
