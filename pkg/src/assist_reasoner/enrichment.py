"""Commonsense enrichment and grounding of perceived scene graphs."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, replace
from typing import List, Optional

from .graph import Entity, Relation, SceneGraph, build_graph, merge_nodes
from .knowledge import KnowledgeBase, Triple, fold, outgoing

GROUNDED_IN = "grounded in"


@dataclass(frozen=True)
class EnrichmentParams:
    top_k: int = 3
    min_confidence: float = 0.5
    max_depth: int = 1

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_confidence < 0:
            raise ValueError("min_confidence must be >= 0")


@dataclass(frozen=True)
class EnrichmentRecord:
    """One added edge (and possibly node) together with the score that admitted it."""

    source: str
    triple: Triple
    score: float
    target: str
    confidence: float
    created: bool
    depth: int

    def line(self) -> str:
        t = self.triple
        action = "add-node" if self.created else "link"
        return (
            f"{action} depth={self.depth} source={self.source} target={self.target} "
            f"triple=({t.head}|{t.relation}|{t.tail}|{t.weight!r}) "
            f"score={self.score!r} confidence={self.confidence!r}"
        )


def predicate_for(relation: str) -> str:
    """``CapableOf`` -> ``capable of``."""
    return " ".join(w.lower() for w in re.findall(r"[A-Z][a-z]*", relation))


def context_confidence(graph: SceneGraph, candidate: Triple, kb: KnowledgeBase) -> float:
    """KB weight boosted by how many perceived labels the tail refers to.

    A perceived label counts when it is itself a token of the tail, or when it
    is a kind of (IsA) one of the tail tokens.
    """
    tokens = set(kb.tokens(candidate.tail))
    labels = {e.label for e in graph.perceived()}
    overlap = sum(
        1 for lab in labels
        if lab in tokens or any(kb.is_a(lab, t) for t in tokens)
    )
    return candidate.weight * (1 + overlap)


def _new_id(label: str, taken) -> str:
    base = "k:" + label.replace(" ", "_")
    eid, n = base, 2
    while eid in taken:
        eid = f"{base}#{n}"
        n += 1
    return eid


def enrich(
    graph: SceneGraph,
    kb: KnowledgeBase,
    params: Optional[EnrichmentParams] = None,
    log: Optional[List[EnrichmentRecord]] = None,
) -> SceneGraph:
    """Attach the best-supported commonsense triples to the graph.

    Perceived entities are expanded first; with ``max_depth > 1`` the nodes
    created at one hop become sources for the next. A tail whose label is
    already present is linked to the existing node instead of duplicated.
    If ``log`` is given, one :class:`EnrichmentRecord` per added edge is
    appended to it.
    """
    params = params or EnrichmentParams()
    ents = dict(graph.entities)
    rels = list(graph.relations)
    keys = {r.key for r in rels}

    by_label: dict = {}
    for e in sorted(graph, key=lambda e: (e.provenance != "perceived", e.id)):
        by_label.setdefault(e.label, e.id)

    frontier = sorted(e.id for e in graph.perceived())
    for depth in range(1, params.max_depth + 1):
        created_now = []
        for src in frontier:
            scored = [(context_confidence(graph, t, kb), t) for t in outgoing(kb, ents[src].label)]
            scored = [c for c in scored if c[0] >= params.min_confidence]
            scored.sort(key=lambda c: (-c[0], c[1].relation, c[1].tail))
            kept = scored[: params.top_k]
            if not kept:
                continue
            top = kept[0][0]
            for score, t in kept:
                target = by_label.get(t.tail)
                created = target is None
                if target == src:
                    continue
                conf = min(1.0, score / top)
                if created:
                    target = _new_id(t.tail, ents)
                rel = Relation(src, target, predicate_for(t.relation), conf, "enriched")
                if rel.key in keys:
                    continue
                if created:
                    ents[target] = Entity(target, t.tail, "commonsense", provenance="enriched")
                    by_label[t.tail] = target
                    created_now.append(target)
                keys.add(rel.key)
                rels.append(rel)
                if log is not None:
                    log.append(EnrichmentRecord(src, t, score, target, conf, created, depth))
        frontier = created_now
        if not frontier:
            break

    return build_graph(ents.values(), rels, graph.frame_id, graph.dims)


def ground(graph: SceneGraph, kb: KnowledgeBase) -> SceneGraph:
    """Specialise generic enriched concepts onto perceived instances.

    A token ``t`` of an enriched label is rewritten to the label of a perceived
    entity ``Y`` when the KB states ``Y IsA t``; an edge ``grounded in`` to ``Y`` is added. If the rewritten label names a perceived entity exactly,
    the enriched node is merged into it.
    """
    perceived = sorted(graph.perceived(), key=lambda e: e.id)
    hypernym_of: dict = {}
    for y in perceived:
        for hypo, hyper in sorted(kb.isa_index):
            if hypo == y.label:
                hypernym_of.setdefault(hyper, y)

    g = graph
    for xid in sorted(e.id for e in graph if e.provenance == "enriched"):
        if xid not in g:
            continue
        x = g.entity(xid)
        words, targets = [], []
        for raw in x.label.split(" "):
            y = hypernym_of.get(fold(raw.strip(string.punctuation), kb.vocabulary))
            if y is None:
                words.append(raw)
            else:
                words.append(y.label)
                targets.append(y.id)
        if not targets:
            continue
        new_label = " ".join(words)
        ents = [replace(x, label=new_label, grounded=True) if e.id == xid else e for e in g]
        rels = list(g.relations) + [
            Relation(xid, yid, GROUNDED_IN, 1.0, "enriched") for yid in dict.fromkeys(targets)
        ]
        g = build_graph(ents, rels, g.frame_id, g.dims)
        same = [e for e in perceived if e.label == new_label]
        if same:
            g = merge_nodes(g, same[0].id, xid)
    return g
