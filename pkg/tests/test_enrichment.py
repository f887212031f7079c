import random

import pytest

from assist_reasoner.enrichment import (
    GROUNDED_IN,
    EnrichmentParams,
    context_confidence,
    enrich,
    ground,
    predicate_for,
)
from assist_reasoner.graph import Entity, Relation, build_graph
from assist_reasoner.knowledge import KnowledgeBase, Triple, parse_kb

from oracles import BODY_WORDS, HAZARD_WORDS, SCENE_WORDS, random_kb

DEPTH2 = EnrichmentParams(max_depth=2)


def labels(g, provenance=None):
    return sorted(e.label for e in g if provenance is None or e.provenance == provenance)


def random_case(seed):
    rng = random.Random(seed)
    kb = random_kb(rng, rng.randint(0, 80))
    isa = [Triple(rng.choice(SCENE_WORDS), "IsA", rng.choice(HAZARD_WORDS + BODY_WORDS), 1.0)
           for _ in range(rng.randint(0, 5))]
    kb = KnowledgeBase(kb.triples + tuple({t.key: t for t in isa}.values()))
    n = rng.randint(1, 6)
    ents = [Entity(f"e{i}", rng.choice(SCENE_WORDS + BODY_WORDS)) for i in range(n)]
    rels = []
    for _ in range(rng.randint(0, n)):
        if n > 1:
            h, t = rng.sample(range(n), 2)
            rels.append(Relation(f"e{h}", f"e{t}", "near"))
    params = EnrichmentParams(rng.randint(1, 4), rng.choice([0.0, 0.3, 0.5, 1.0]), rng.randint(1, 3))
    return build_graph(ents, rels, "r"), kb, params


class TestContextConfidence:
    def test_vegetables_beat_stabbing(self, knife_graph, knife_kb):
        veg, stab = (t for t in knife_kb.triples if t.head == "knife")
        assert veg.tail == "cutting vegetables"
        assert context_confidence(knife_graph, veg, knife_kb) == 2.0
        assert context_confidence(knife_graph, stab, knife_kb) == 1.0

    def test_no_overlap_is_raw_weight(self):
        kb = parse_kb("knife,UsedFor,stabbing,0.7\n")
        g = build_graph([Entity("e1", "person", "person")], [])
        assert context_confidence(g, kb.triples[0], kb) == 0.7

    def test_direct_label_token_counts(self):
        kb = parse_kb("heat,CapableOf,hurt hand,0.5\n")
        g = build_graph([Entity("e1", "hand")], [])
        assert context_confidence(g, kb.triples[0], kb) == 1.0

    def test_at_least_weight(self):
        for seed in range(30):
            g, kb, _ = random_case(seed)
            for t in kb.triples:
                assert context_confidence(g, t, kb) >= t.weight


class TestEnrich:
    def test_oven_two_hops(self, oven_graph, oven_kb):
        log = []
        g = enrich(oven_graph, oven_kb, DEPTH2, log=log)
        heat = g.by_label("heat")[0]
        hurt = g.by_label("hurt hand")[0]
        assert any(r.head == "e2" and r.predicate == "produces" and r.tail == heat.id for r in g.relations)
        assert any(r.head == heat.id and r.predicate == "capable of" and r.tail == hurt.id for r in g.relations)
        assert {rec.depth for rec in log if rec.target == hurt.id} == {2}

    def test_depth_one_stops_at_heat(self, oven_graph, oven_kb):
        g = enrich(oven_graph, oven_kb)
        assert g.by_label("heat") and not g.by_label("hurt hand")

    def test_empty_kb_identity(self, oven_graph):
        assert enrich(oven_graph, KnowledgeBase()) == oven_graph

    def test_knife_top1(self, knife_graph, knife_kb):
        g = enrich(knife_graph, knife_kb, EnrichmentParams(top_k=1))
        assert "cutting vegetables" in labels(g)
        assert "stabbing" not in labels(g)

    def test_knife_default_keeps_both_with_normalised_confidence(self, knife_graph, knife_kb):
        g = enrich(knife_graph, knife_kb)
        conf = {g.entity(r.tail).label: r.confidence for r in g.relations if r.head == "e2"}
        assert conf == {"cutting vegetables": 1.0, "stabbing": 0.5}

    def test_existing_label_is_linked_not_duplicated(self, oven_graph, oven_kb):
        g = enrich(oven_graph, oven_kb)
        assert len(g.by_label("oven")) == 1
        assert any(r.head == "e3" and r.tail == "e2" and r.predicate == "at location" for r in g.relations)

    def test_min_confidence_filters(self, knife_graph, knife_kb):
        g = enrich(knife_graph, knife_kb, EnrichmentParams(min_confidence=1.5))
        assert "stabbing" not in labels(g)
        assert "cutting vegetables" in labels(g)

    def test_predicate_names(self):
        assert predicate_for("CapableOf") == "capable of"
        assert predicate_for("IsA") == "is a"
        assert predicate_for("Produces") == "produces"

    def test_record_lines(self, oven_graph, oven_kb):
        log = []
        enrich(oven_graph, oven_kb, log=log)
        assert log[0].line().startswith("add-node depth=1 source=e2")

    def test_params_validation(self):
        with pytest.raises(ValueError):
            EnrichmentParams(top_k=0)
        with pytest.raises(ValueError):
            EnrichmentParams(max_depth=0)

    @pytest.mark.parametrize("seed", range(60))
    def test_properties(self, seed):
        g, kb, params = random_case(seed)
        log = []
        out = enrich(g, kb, params, log=log)
        # perceived subgraph untouched
        for e in g:
            assert out.entity(e.id) == e
        assert all(r in out.relations for r in g.relations)
        # growth bound
        sources = {(rec.depth, rec.source) for rec in log}
        added = len(out) - len(g)
        assert added <= params.top_k * max(1, len(sources)) * params.max_depth
        assert added == sum(rec.created for rec in log)
        # every enriched edge is explained by an admitted candidate
        new_edges = [r for r in out.relations if r not in g.relations]
        assert len(new_edges) == len(log)
        for rec in log:
            assert rec.score >= params.min_confidence
            assert 0 < rec.confidence <= 1
        # idempotent at depth 1
        if params.max_depth == 1:
            assert enrich(out, kb, params) == out

    def test_deterministic(self, oven_graph, oven_kb):
        assert enrich(oven_graph, oven_kb, DEPTH2) == enrich(oven_graph, oven_kb, DEPTH2)


class TestGround:
    def test_cutting_vegetables_becomes_cutting_tomato(self, knife_graph, knife_kb):
        g = ground(enrich(knife_graph, knife_kb), knife_kb)
        node = [e for e in g if e.provenance == "enriched" and "cutting" in e.label][0]
        assert node.label == "cutting tomato"
        assert node.grounded
        assert any(r.head == node.id and r.predicate == GROUNDED_IN and r.tail == "e3" for r in g.relations)

    def test_vegetable_node_merges_into_tomato(self, knife_graph, knife_kb):
        enriched = enrich(knife_graph, knife_kb)
        assert enriched.by_label("vegetable")
        g = ground(enriched, knife_kb)
        assert not g.by_label("vegetable")
        assert len(g) == len(enriched) - 1

    def test_no_isa_identity(self, oven_graph):
        kb = parse_kb("oven,Produces,heat,1.0\n")
        g = enrich(oven_graph, kb)
        assert ground(g, kb) == g

    def test_skin_merges_into_hand(self):
        ents = [
            Entity("e4", "hand", bbox=(1, 1, 2, 2)),
            Entity("k:skin", "skin", "commonsense", sentiment=-0.3, provenance="enriched"),
            Entity("k:heat", "heat", "commonsense", provenance="enriched"),
        ]
        rels = [Relation("k:heat", "k:skin", "capable of hurting", provenance="enriched")]
        g = build_graph(ents, rels, dims=(10, 10))
        kb = parse_kb("hand,IsA,skin,1.0\n")
        out = ground(g, kb)
        assert "k:skin" not in out
        assert out.entity("e4").label == "hand"
        assert out.entity("e4").sentiment == -0.3
        assert [(r.head, r.tail) for r in out.relations] == [("k:heat", "e4")]

    def test_hurt_skin_refined_to_hurt_hand(self):
        ents = [Entity("e4", "hand"), Entity("k:x", "hurt skin", "commonsense", provenance="enriched")]
        out = ground(build_graph(ents, []), parse_kb("hand,IsA,skin,1.0\n"))
        assert out.entity("k:x").label == "hurt hand"

    @pytest.mark.parametrize("seed", range(60))
    def test_never_grows_or_renames_perceived(self, seed):
        g, kb, params = random_case(seed)
        e = enrich(g, kb, params)
        out = ground(e, kb)
        assert len(out) <= len(e)
        for p in g:
            assert out.entity(p.id).label == p.label
