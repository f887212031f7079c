import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assist_reasoner.action import (
    COUNTERS,
    ActionPlan,
    RemedyCandidate,
    candidate_remedies,
    complete_and_rank,
    plan,
)
from assist_reasoner.enrichment import EnrichmentParams, enrich, ground
from assist_reasoner.graph import Entity, Relation, build_graph, graph_sentiment
from assist_reasoner.knowledge import ConnotationLexicon, KnowledgeBase, Triple, parse_kb
from assist_reasoner.risk import RiskAssessment, assess

from oracles import BODY_WORDS, HAZARD_WORDS, brute_force_remedy, random_kb, random_lexicon

UNSAFE = RiskAssessment(0.9, 0.5, "unsafe")
SAFE = RiskAssessment(0.1, 0.5, "safe")
LEX = ConnotationLexicon({"protect": 0.8, "hurt": -0.8, "heat": -0.4})
KB = parse_kb(
    "oven,Produces,heat,1.0\n"
    "heat,CapableOf,hurt hand,1.0\n"
    "glove,CapableOf,protect hand,1.0\n"
)


def heat_graph(s=-0.72):
    ents = [
        Entity("e2", "oven"),
        Entity("k:heat", "heat", "commonsense", sentiment=s, provenance="enriched"),
        Entity("k:hurt_hand", "hurt hand", "commonsense", provenance="enriched"),
    ]
    rels = [
        Relation("e2", "k:heat", "produces", provenance="enriched"),
        Relation("k:heat", "k:hurt_hand", "capable of", provenance="enriched"),
    ]
    return build_graph(ents, rels, "syn")


def cand(label, score, harm="h"):
    return RemedyCandidate(label, score, harm, Triple(label, "UsedFor", "x", 1.0), "x")


def oven_unsafe(oven_graph, oven_kb, lexicon):
    g = ground(enrich(oven_graph, oven_kb, EnrichmentParams(max_depth=2)), oven_kb)
    return assess(g, lexicon)


class TestCandidateRemedies:
    def test_glove_score(self):
        got = candidate_remedies(heat_graph(), KB, LEX)
        assert [c.object_label for c in got] == ["glove"]
        assert got[0].score == pytest.approx(0.288)
        assert got[0].source_harm == "k:heat"
        assert got[0].supporting_triple == Triple("glove", "CapableOf", "protect hand", 1.0)

    def test_no_negative_nodes(self):
        assert candidate_remedies(heat_graph(0.0), KB, LEX) == []

    def test_harmful_tail_filtered(self):
        # heat's own "hurt hand" shares the hand token but scores negative
        got = candidate_remedies(heat_graph(), KB, LEX)
        assert "heat" not in [c.object_label for c in got]

    def test_negative_polarity_remedy_dropped(self):
        kb = parse_kb("heat,CapableOf,hurt hand,1.0\nrope,UsedFor,hurt hand,1.0\n")
        assert candidate_remedies(heat_graph(), kb, LEX) == []

    def test_score_is_weight_times_polarity_times_severity(self):
        lex = ConnotationLexicon({"protect": 1.0, "hand": 1.0})
        kb = parse_kb("glove,CapableOf,protect hand,0.9\n")
        g = build_graph([Entity("a", "hand", sentiment=-1.0)], [])
        assert candidate_remedies(g, kb, lex)[0].score == 0.9

    def test_best_harm_kept_per_object(self):
        ents = [Entity("a", "hand", sentiment=-0.2), Entity("b", "hand", sentiment=-0.9)]
        kb = parse_kb("glove,CapableOf,protect hand,1.0\n")
        got = candidate_remedies(build_graph(ents, []), kb, LEX)
        assert len(got) == 1 and got[0].source_harm == "b"

    def test_oven_fixture_ranks_glove(self, oven_graph, oven_kb, lexicon):
        g, a = oven_unsafe(oven_graph, oven_kb, lexicon)
        assert a.unsafe
        assert candidate_remedies(g, oven_kb, lexicon)[0].object_label == "glove"

    @pytest.mark.parametrize("seed", range(80))
    def test_agrees_with_brute_force(self, seed):
        rng = random.Random(seed)
        kb, lex = random_kb(rng, rng.randint(5, 60)), random_lexicon(rng)
        ents = [Entity(f"n{i}", rng.choice(HAZARD_WORDS + BODY_WORDS), sentiment=round(rng.uniform(-1, 0.5), 3))
                for i in range(rng.randint(1, 6))]
        g = build_graph(ents, [])
        got = candidate_remedies(g, kb, lex)
        assert (got[0].object_label if got else None) == brute_force_remedy(g, kb, lex)
        assert all(0 < c.score <= 1 for c in got)
        assert [(-c.score, c.object_label) for c in got] == sorted((-c.score, c.object_label) for c in got)


class TestCompleteAndRank:
    def test_synthetic_glove_added(self):
        g, ranking, stats = complete_and_rank(heat_graph(), KB, LEX, UNSAFE)
        glove = g.by_label("glove")[0]
        assert glove.sentiment == pytest.approx(0.288)
        assert any(r.head == glove.id and r.tail == "k:heat" and r.predicate == COUNTERS for r in g.relations)
        assert [c.object_label for c in ranking] == ["glove"]
        assert stats["rounds"] == 1
        assert stats["sentiment_after"] > stats["sentiment_before"]

    def test_safe_verdict_rejected(self):
        with pytest.raises(ValueError):
            complete_and_rank(heat_graph(), KB, LEX, SAFE)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            complete_and_rank(heat_graph(), KB, LEX, UNSAFE, max_rounds=0)

    def test_empty_kb(self):
        g0 = heat_graph()
        g, ranking, stats = complete_and_rank(g0, KnowledgeBase(), LEX, UNSAFE)
        assert g == g0 and ranking == [] and stats["rounds"] == 0

    def test_oven_terminates_with_glove(self, oven_graph, oven_kb, lexicon):
        g0, a = oven_unsafe(oven_graph, oven_kb, lexicon)
        g, ranking, stats = complete_and_rank(g0, oven_kb, lexicon, a)
        assert ranking[0].object_label == "glove"
        assert 1 <= stats["rounds"] <= 3
        assert stats["sentiment_after"] > stats["sentiment_before"]
        assert len(g) == len(g0) + 1

    def test_existing_object_reused(self):
        g0 = build_graph(list(heat_graph()) + [Entity("e9", "glove")], heat_graph().relations)
        g, _, _ = complete_and_rank(g0, KB, LEX, UNSAFE)
        assert len(g) == len(g0)
        assert any(r.head == "e9" and r.predicate == COUNTERS for r in g.relations)

    @pytest.mark.parametrize("seed", range(60))
    def test_sentiment_never_drops(self, seed):
        rng = random.Random(seed)
        kb, lex = random_kb(rng, rng.randint(5, 80)), random_lexicon(rng)
        ents = [Entity(f"n{i}", rng.choice(HAZARD_WORDS + BODY_WORDS), sentiment=round(rng.uniform(-1, 0.2), 3))
                for i in range(rng.randint(1, 6))]
        g0 = build_graph(ents, [])
        g, ranking, stats = complete_and_rank(g0, kb, lex, UNSAFE, max_rounds=rng.randint(1, 4))
        hist = stats["history"]
        assert all(b >= a for a, b in zip(hist, hist[1:]))
        assert hist[0] == graph_sentiment(g0) and hist[-1] == graph_sentiment(g)
        for e in g0:
            assert g.entity(e.id) == e


class TestPlan:
    def test_bring_top(self):
        p = plan([cand("towel", 0.2), cand("glove", 0.288)])
        assert p.directive == "bring" and p.target == "glove"
        assert str(p) == 'Bring("glove")'

    def test_warn_when_empty(self):
        p = plan([])
        assert p == ActionPlan("warn", None, ())
        assert str(p) == "Warn"

    def test_tie_breaks_lexicographically(self):
        assert plan([cand("mitt", 0.5), cand("glove", 0.5)]).target == "glove"

    @given(st.lists(st.tuples(st.sampled_from(["a", "b", "c", "d", "e"]), st.floats(0.01, 1.0)),
                    min_size=1, max_size=6, unique_by=lambda t: t[0]), st.randoms())
    @settings(max_examples=100)
    def test_permutation_invariant(self, items, rnd):
        cands = [cand(label, s) for label, s in items]
        shuffled = cands[:]
        rnd.shuffle(shuffled)
        assert plan(cands) == plan(shuffled)
        assert plan(cands).target == min(items, key=lambda t: (-t[1], t[0]))[0]

    def test_score_must_be_positive(self):
        with pytest.raises(ValueError):
            cand("x", 0.0)
