"""Assistive action synthesis by sentiment-guided graph completion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .graph import Entity, Relation, SceneGraph, build_graph, graph_sentiment
from .knowledge import ConnotationLexicon, KnowledgeBase, Triple, polarity, remedies_for
from .risk import RiskAssessment

COUNTERS = "counters"


@dataclass(frozen=True)
class RemedyCandidate:
    object_label: str
    score: float
    source_harm: str
    supporting_triple: Triple
    rationale: str

    def __post_init__(self):
        if not self.score > 0:
            raise ValueError("remedy score must be positive")


@dataclass(frozen=True)
class ActionPlan:
    directive: str  # "bring" or "warn"
    target: Optional[str]
    ranked: Tuple[RemedyCandidate, ...]
    iterations: int = 0
    sentiment_before: float = 0.0
    sentiment_after: float = 0.0

    def __str__(self) -> str:
        return f'Bring("{self.target}")' if self.directive == "bring" else "Warn"


def rank_key(c: RemedyCandidate):
    return (-c.score, c.object_label)


def harm_tokens(graph: SceneGraph, entity_id: str, kb: KnowledgeBase) -> set:
    """Tokens of the harm node's label plus those of its enriched successors."""
    toks = set(kb.tokens(graph.entity(entity_id).label))
    for r in graph.outgoing(entity_id):
        if r.provenance == "enriched":
            toks.update(kb.tokens(graph.entity(r.tail).label))
    return toks


def _merge_best(into: dict, cands: Iterable[RemedyCandidate]) -> None:
    for c in cands:
        prev = into.get(c.object_label)
        if prev is None or rank_key(c) < rank_key(prev) or (
            c.score == prev.score and c.source_harm < prev.source_harm
        ):
            into[c.object_label] = c


def candidate_remedies(
    graph: SceneGraph, kb: KnowledgeBase, lexicon: ConnotationLexicon
) -> List[RemedyCandidate]:
    """Score every remedy triple against every negative node.

    score = KB weight x polarity of the remedy phrase x severity of the harm,
    one candidate per object label (best score kept), ranked descending.
    """
    best: dict = {}
    for eid in sorted(graph.entities):
        harm = graph.entities[eid]
        if harm.sentiment >= 0:
            continue
        toks = harm_tokens(graph, eid, kb)
        if not toks:
            continue
        found = []
        for t in remedies_for(kb, toks, dedupe=False):
            pol = polarity(lexicon, t.tail)
            if pol <= 0:
                continue
            score = min(1.0, t.weight * pol * -harm.sentiment)
            if score > 0:
                found.append(RemedyCandidate(t.head, score, eid, t, t.tail))
        _merge_best(best, found)
    return sorted(best.values(), key=rank_key)


def complete_and_rank(
    graph: SceneGraph,
    kb: KnowledgeBase,
    lexicon: ConnotationLexicon,
    assessment: RiskAssessment,
    max_rounds: int = 3,
    epsilon: float = 1e-3,
) -> Tuple[SceneGraph, List[RemedyCandidate], dict]:
    """Grow the graph with positively weighted remedy nodes until S(G) settles.

    Returns the completed graph, the accumulated ranking and a small stats
    dict (``rounds``, ``sentiment_before``, ``sentiment_after``, ``history``).
    """
    if not assessment.unsafe:
        raise ValueError("completion requires an unsafe verdict")
    if max_rounds < 1 or epsilon <= 0:
        raise ValueError("max_rounds must be >= 1 and epsilon > 0")

    before = graph_sentiment(graph)
    history = [before]
    g = graph
    ranking: dict = {}
    rounds = 0
    for _ in range(max_rounds):
        cands = candidate_remedies(g, kb, lexicon)
        _merge_best(ranking, cands)
        ents = dict(g.entities)
        rels = list(g.relations)
        keys = {r.key for r in rels}
        by_label: dict = {}
        for e in sorted(g, key=lambda e: e.id):
            by_label.setdefault(e.label, e.id)
        changed = False
        for c in cands:
            node = by_label.get(c.object_label)
            if node is None:
                node = "r:" + c.object_label.replace(" ", "_")
                while node in ents:
                    node += "_"
                ents[node] = Entity(node, c.object_label, "commonsense",
                                    sentiment=c.score, provenance="enriched")
                by_label[c.object_label] = node
                changed = True
            if node == c.source_harm:
                continue
            rel = Relation(node, c.source_harm, COUNTERS, c.score, "enriched")
            if rel.key not in keys:
                keys.add(rel.key)
                rels.append(rel)
                changed = True
        if not changed:
            break
        g = build_graph(ents.values(), rels, g.frame_id, g.dims)
        rounds += 1
        history.append(graph_sentiment(g))
        if history[-1] - history[-2] < epsilon:
            break

    stats = {
        "rounds": rounds,
        "sentiment_before": before,
        "sentiment_after": graph_sentiment(g),
        "history": history,
    }
    return g, sorted(ranking.values(), key=rank_key), stats


def plan(
    ranking: Iterable[RemedyCandidate],
    iterations: int = 0,
    sentiment_before: float = 0.0,
    sentiment_after: float = 0.0,
) -> ActionPlan:
    """Bring the best-ranked object, or warn when nothing qualifies."""
    ranked = tuple(sorted(ranking, key=rank_key))
    if ranked:
        return ActionPlan("bring", ranked[0].object_label, ranked, iterations,
                          sentiment_before, sentiment_after)
    return ActionPlan("warn", None, ranked, iterations, sentiment_before, sentiment_after)
