"""The text -> ordered-events pipeline, map by map and composed."""

import random

from hypothesis import given, settings, strategies as st

from ceg_remedy.extraction import (
    AbstractionLexicons,
    CausalPattern,
    CAUSE_FIRST,
    EFFECT_FIRST,
    Document,
    GrammarRules,
    MentionPair,
    OrderedEvents,
    PhraseSpan,
    abstract_events,
    attach_phrases,
    extract_events,
    extract_mentions,
    merge_orders,
    parse_phrases,
    temporal_events,
)
from ceg_remedy.fixtures import MOTIVATING_LOG, reliability_extraction_config

NOUN_CHUNKS = GrammarRules(
    tag_lexicon={"seal": "NOUN", "deterioration": "NOUN", "oil": "NOUN",
                 "leak": "NOUN", "caused": "VERB", "the": "DET"},
    chunk_rules=((("NOUN", "NOUN"), "NP"),),
)


class TestParsePhrases:
    def test_noun_chunks(self):
        doc = Document.from_text("seal deterioration caused oil leak")
        spans = parse_phrases(doc, NOUN_CHUNKS)
        assert [s.indices for s in spans] == [(1, 2), (4, 5)]

    def test_empty_document(self):
        assert parse_phrases(Document("d", ()), NOUN_CHUNKS) == []

    def test_spans_pairwise_disjoint(self):
        rng = random.Random(0)
        words = list(NOUN_CHUNKS.tag_lexicon) + ["boom", "-", "then"]
        for _ in range(100):
            doc = Document("d", tuple(rng.choices(words, k=rng.randint(0, 12))))
            spans = parse_phrases(doc, NOUN_CHUNKS)
            seen = set()
            for s in spans:
                assert not (set(s.indices) & seen)
                seen |= set(s.indices)


class TestExtractMentions:
    def test_motivating_sentence(self, extraction_config):
        doc = Document.from_text(MOTIVATING_LOG)
        pairs = extract_mentions(doc, extraction_config.patterns)
        assert len(pairs) == 1
        assert doc.words(pairs[0].cause) == ("the", "seal", "deterioration")
        assert doc.words(pairs[0].effect) == ("oil", "leak", "in", "the",
                                              "conservator")

    def test_no_connective(self, extraction_config):
        doc = Document.from_text("oil leak observed on the gauge")
        assert extract_mentions(doc, extraction_config.patterns) == []

    def test_two_patterns_two_pairs(self):
        patterns = (CausalPattern(("caused",), CAUSE_FIRST, "strict"),
                    CausalPattern(("caused",), EFFECT_FIRST, "loose"))
        doc = Document.from_text("corrosion caused leak")
        pairs = extract_mentions(doc, patterns)
        assert len(pairs) == 2
        assert {p.relation for p in pairs} == {"strict", "loose"}

    def test_effect_first_orientation(self):
        patterns = (CausalPattern(("due", "to"), EFFECT_FIRST, "cause"),)
        doc = Document.from_text("oil leak due to seal wear")
        (pair,) = extract_mentions(doc, patterns)
        assert doc.words(pair.cause) == ("seal", "wear")
        assert doc.words(pair.effect) == ("oil", "leak")

    def test_never_crosses_sentence_boundary(self):
        patterns = (CausalPattern(("caused",), CAUSE_FIRST, "cause"),)
        doc = Document.from_text("noise . caused leak")
        assert extract_mentions(doc, patterns) == []


class TestAttachPhrases:
    def test_two_contained_phrases_split_the_cause(self):
        phrases = [PhraseSpan((1, 2), "NP"), PhraseSpan((3, 4), "NP")]
        mention = MentionPair((1, 2, 3, 4), (6, 7), "cause")
        out = attach_phrases(phrases, [mention])
        assert [(p.cause, p.effect) for p in out] == [
            ((1, 2), (6, 7)), ((3, 4), (6, 7))]

    def test_no_contained_phrase_passes_through(self):
        phrases = [PhraseSpan((8, 9), "NP")]
        mention = MentionPair((1, 2), (4, 5), "cause")
        assert attach_phrases(phrases, [mention]) == [mention]

    def test_empty_mentions(self):
        assert attach_phrases([PhraseSpan((1, 2), "NP")], []) == []

    def test_never_loses_mentions(self):
        rng = random.Random(1)
        for _ in range(50):
            phrases = [PhraseSpan((i, i + 1), "NP")
                       for i in rng.sample(range(1, 20, 3), rng.randint(0, 4))]
            mentions = [MentionPair(tuple(range(a, a + 4)),
                                    tuple(range(a + 5, a + 7)), "c")
                        for a in rng.sample(range(1, 12), rng.randint(1, 3))]
            assert len(attach_phrases(phrases, mentions)) >= len(mentions)


class TestAbstractEvents:
    def test_lexicon_application(self):
        doc = Document.from_text("seal deterioration broke oil leak")
        lex = AbstractionLexicons({"deterioration": "decay"}, {}, frozenset())
        out = abstract_events(doc, [MentionPair((1, 2), (4, 5), "c")], lex)
        assert out.events == (("seal", "decay"), ("oil", "leak"))
        assert out.order == frozenset({(0, 1)})

    def test_identity_with_empty_lexicons(self):
        doc = Document.from_text("a b c d")
        lex = AbstractionLexicons({}, {}, frozenset())
        out = abstract_events(doc, [MentionPair((1, 2), (3, 4), "c")], lex)
        assert out.events == (("a", "b"), ("c", "d"))

    def test_cause_precedes_effect(self):
        doc = Document.from_text("x y z")
        lex = AbstractionLexicons({}, {}, frozenset())
        out = abstract_events(doc, [MentionPair((3,), (1,), "c")], lex)
        assert out.order == frozenset({(0, 1)})
        assert out.events[0] == ("z",)

    def test_contradictory_pair_dropped(self):
        doc = Document.from_text("x y")
        lex = AbstractionLexicons({}, {}, frozenset())
        out = abstract_events(
            doc,
            [MentionPair((1,), (2,), "c"), MentionPair((2,), (1,), "c")],
            lex)
        assert out.order == frozenset({(0, 1)})
        assert out.is_acyclic()


VERBY = AbstractionLexicons({}, {"leak": "leak", "trip": "trip",
                                 "spark": "spark"}, frozenset())
RULES = {"after": "reverse", "before": "forward", "then": "forward"}


class TestTemporalEvents:
    def test_then_keeps_textual_order(self):
        out = temporal_events(Document.from_text("leak then trip"), VERBY, RULES)
        assert out.events == (("leak",), ("trip",))
        assert out.order == frozenset({(0, 1)})

    def test_single_verb(self):
        out = temporal_events(Document.from_text("pump started to leak"),
                              VERBY, RULES)
        assert out.events == (("leak",),)
        assert out.order == frozenset()

    def test_after_reverses(self):
        out = temporal_events(Document.from_text("trip after leak"), VERBY, RULES)
        assert (out.events.index(("leak",)),
                out.events.index(("trip",))) in out.order


class TestMergeOrders:
    def causal(self):
        return OrderedEvents((("seal", "decay"), ("oil", "leak")),
                             frozenset({(0, 1)}))

    def test_consistent_subset_is_noop(self):
        temporal = OrderedEvents((("decay",), ("leak",)), frozenset({(0, 1)}))
        out = merge_orders(self.causal(), temporal)
        assert out.events == self.causal().events
        assert out.order == self.causal().order

    def test_reversed_pair_ignored(self):
        temporal = OrderedEvents((("leak",), ("decay",)), frozenset({(0, 1)}))
        out = merge_orders(self.causal(), temporal)
        assert out.order == frozenset({(0, 1)})

    def test_new_event_added(self):
        temporal = OrderedEvents((("leak",), ("trip",)), frozenset({(0, 1)}))
        out = merge_orders(self.causal(), temporal)
        assert ("trip",) in out.events
        assert (1, out.events.index(("trip",))) in out.order

    def test_idempotent(self):
        temporal = OrderedEvents((("leak",), ("trip",)), frozenset({(0, 1)}))
        once = merge_orders(self.causal(), temporal)
        twice = merge_orders(once, temporal)
        assert once.canonical() == twice.canonical()


class TestComposedPipeline:
    def test_motivating_log(self, extraction_config):
        doc = Document.from_text(MOTIVATING_LOG, "motivating")
        out = extract_events(doc, extraction_config)
        i = out.events.index(("seal", "decay"))
        j = out.events.index(("oil", "leak"))
        assert (i, j) in out.order
        assert out.is_acyclic()

    def test_no_connectives_no_verbs(self, extraction_config):
        doc = Document.from_text("routine visual inspection completed")
        out = extract_events(doc, extraction_config)
        assert out.order == frozenset()

    def test_deterministic(self, extraction_config):
        doc = Document.from_text(MOTIVATING_LOG)
        a = extract_events(doc, extraction_config)
        b = extract_events(doc, extraction_config)
        assert a.canonical() == b.canonical()
        assert hash(a.canonical()) == hash(b.canonical())

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(
        ["seal", "deterioration", "caused", "oil", "leak", "the", "due",
         "to", "after", "then", "topping", "tripped", "-", "."]),
        max_size=14))
    def test_random_documents_acyclic(self, words):
        config = reliability_extraction_config()
        doc = Document("d", tuple(words))
        out = extract_events(doc, config)
        assert out.is_acyclic()
        again = extract_events(doc, config)
        assert out.canonical() == again.canonical()
