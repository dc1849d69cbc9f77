"""Rule-driven extraction of causally ordered core events from log text.

The pipeline is a fixed composition of five maps: chunk the document
into phrases, find cause/effect mention pairs around causal connectives,
attach phrases to mention pairs, abstract the tokens through lexicons,
and merge in a temporal ordering extracted from verbs and temporal
connectives.  Everything is table-driven: the grammar, the connective
patterns and the lexicons are plain data so a heavier tagger or ordering
model can be swapped in behind the same interface.

Sentence boundaries are period / semicolon / dash tokens; mention pairs
never span a boundary.  Mention spans are maximal token runs bounded by
the sentence edges and by other connective occurrences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

BOUNDARY_TOKENS = {".", ";", "-", "--"}
CAUSE_FIRST = "cause-first"
EFFECT_FIRST = "effect-first"

_TOKEN_RE = re.compile(r"[\w/']+|[.;,-]+")


@dataclass(frozen=True)
class Document:
    """Tokenised log entry; token indices are 1-based and contiguous."""

    doc_id: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str, doc_id: str = "") -> "Document":
        return cls(doc_id, tuple(_TOKEN_RE.findall(text.lower())))

    def words(self, indices: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.tokens[i - 1] for i in sorted(indices))

    def sentences(self) -> list[tuple[int, int]]:
        """Half-open 1-based (start, end) ranges between boundary tokens."""
        spans = []
        start = 1
        for i, tok in enumerate(self.tokens, start=1):
            if tok in BOUNDARY_TOKENS:
                if i > start:
                    spans.append((start, i))
                start = i + 1
        if len(self.tokens) + 1 > start:
            spans.append((start, len(self.tokens) + 1))
        return spans


@dataclass(frozen=True)
class PhraseSpan:
    indices: tuple[int, ...]
    phrase_type: str


@dataclass(frozen=True)
class GrammarRules:
    """Word-level tag lexicon plus ordered chunk rules (first match wins)."""

    tag_lexicon: Mapping[str, str]
    chunk_rules: tuple[tuple[tuple[str, ...], str], ...]

    def tag(self, word: str) -> str:
        if word in BOUNDARY_TOKENS:
            return "BOUNDARY"
        return self.tag_lexicon.get(word, "OTHER")


@dataclass(frozen=True)
class CausalPattern:
    connective: tuple[str, ...]
    slot_order: str  # CAUSE_FIRST or EFFECT_FIRST
    relation: str


@dataclass(frozen=True)
class MentionPair:
    cause: tuple[int, ...]
    effect: tuple[int, ...]
    relation: str


@dataclass(frozen=True)
class OrderedEvents:
    """Abstract events plus an irreflexive acyclic order over their indices."""

    events: tuple[tuple[str, ...], ...]
    order: frozenset[tuple[int, int]]

    def is_acyclic(self) -> bool:
        adj: dict[int, list[int]] = {}
        for a, b in self.order:
            if a == b:
                return False
            adj.setdefault(a, []).append(b)
        state: dict[int, int] = {}

        def dfs(n: int) -> bool:
            state[n] = 1
            for m in adj.get(n, ()):
                if state.get(m) == 1:
                    return False
                if state.get(m, 0) == 0 and not dfs(m):
                    return False
            state[n] = 2
            return True

        return all(dfs(n) for n in list(adj) if state.get(n, 0) == 0)

    def event_keys(self) -> tuple[str, ...]:
        return tuple(" ".join(e) for e in self.events)

    def canonical(self) -> tuple:
        return (self.events, tuple(sorted(self.order)))


@dataclass(frozen=True)
class AbstractionLexicons:
    noun_map: Mapping[str, str]
    verb_map: Mapping[str, str]
    stopwords: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ExtractionConfig:
    grammar: GrammarRules
    patterns: tuple[CausalPattern, ...]
    lexicons: AbstractionLexicons
    temporal_rules: Mapping[str, str] = field(default_factory=dict)  # word -> forward|reverse


def parse_phrases(doc: Document, rules: GrammarRules) -> list[PhraseSpan]:
    """Greedy left-to-right chunking into pairwise-disjoint phrase spans."""
    tags = [rules.tag(w) for w in doc.tokens]
    spans: list[PhraseSpan] = []
    i = 0
    n = len(tags)
    while i < n:
        for pattern, ptype in rules.chunk_rules:
            k = len(pattern)
            if i + k <= n and tuple(tags[i:i + k]) == pattern:
                spans.append(PhraseSpan(tuple(range(i + 1, i + k + 1)), ptype))
                i += k
                break
        else:
            i += 1
    return spans


def _match_connective(tokens: Sequence[str], start: int,
                      connective: tuple[str, ...]) -> bool:
    k = len(connective)
    return tuple(tokens[start:start + k]) == connective


def extract_mentions(doc: Document,
                     patterns: Iterable[CausalPattern]) -> list[MentionPair]:
    """Cause/effect mention pairs around each connective occurrence.

    Sides are the maximal non-overlapping token runs between the
    connective and the nearest sentence edge or other connective
    occurrence; a pattern with an empty side yields nothing.
    """
    patterns = list(patterns)
    pairs: list[MentionPair] = []
    for (s_start, s_end) in doc.sentences():
        sent = [doc.tokens[i - 1] for i in range(s_start, s_end)]
        occupied: list[tuple[int, int]] = []  # 0-based [start, end) connective slots
        hits: list[tuple[int, int, CausalPattern]] = []
        for pat in patterns:
            k = len(pat.connective)
            for j in range(len(sent) - k + 1):
                if _match_connective(sent, j, pat.connective):
                    hits.append((j, j + k, pat))
                    occupied.append((j, j + k))
        hits.sort(key=lambda h: (h[0], h[2].relation))
        for (j0, j1, pat) in hits:
            left_start = 0
            right_end = len(sent)
            for (o0, o1) in occupied:
                if (o0, o1) == (j0, j1):
                    continue
                if o1 <= j0:
                    left_start = max(left_start, o1)
                if o0 >= j1:
                    right_end = min(right_end, o0)
            left = tuple(range(s_start + left_start, s_start + j0))
            right = tuple(range(s_start + j1, s_start + right_end))
            if not left or not right:
                continue
            if pat.slot_order == CAUSE_FIRST:
                pairs.append(MentionPair(left, right, pat.relation))
            else:
                pairs.append(MentionPair(right, left, pat.relation))
    return pairs


def attach_phrases(phrases: Iterable[PhraseSpan],
                   mentions: Iterable[MentionPair]) -> list[MentionPair]:
    """Split each mention's cause side into the phrases it contains.

    A mention whose cause side holds phrase spans yields one pair per
    contained phrase, all sharing the effect side; otherwise the mention
    passes through unchanged.
    """
    out: list[MentionPair] = []
    for m in mentions:
        cause_set = set(m.cause)
        inside = [p for p in phrases if set(p.indices) <= cause_set]
        if inside:
            for p in inside:
                out.append(MentionPair(p.indices, m.effect, m.relation))
        else:
            out.append(m)
    return out


def _abstract(words: Sequence[str], lex: AbstractionLexicons) -> tuple[str, ...]:
    out = []
    for w in words:
        if w in lex.stopwords:
            continue
        if w in lex.noun_map:
            out.append(lex.noun_map[w])
        elif w in lex.verb_map:
            out.append(lex.verb_map[w])
        else:
            out.append(w)  # unmapped non-stopword kept verbatim
    return tuple(out)


def _would_cycle(order: set[tuple[int, int]], a: int, b: int) -> bool:
    if a == b:
        return True
    adj: dict[int, list[int]] = {}
    for (x, y) in order:
        adj.setdefault(x, []).append(y)
    stack, seen = [b], set()
    while stack:
        n = stack.pop()
        if n == a:
            return True
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


def abstract_events(doc: Document, pairs: Iterable[MentionPair],
                    lex: AbstractionLexicons) -> OrderedEvents:
    """Abstract causal phrase pairs into events with cause-before-effect order.

    Pairs whose endpoints abstract to the same event, or whose addition
    would close a cycle, are dropped (first-seen pairs win) so the
    emitted order is always a DAG.
    """
    events: list[tuple[str, ...]] = []
    order: set[tuple[int, int]] = set()

    def intern(tokens: tuple[str, ...]) -> int | None:
        if not tokens:
            return None
        if tokens not in events:
            events.append(tokens)
        return events.index(tokens)

    for m in pairs:
        c = intern(_abstract(doc.words(m.cause), lex))
        e = intern(_abstract(doc.words(m.effect), lex))
        if c is None or e is None or c == e:
            continue
        if _would_cycle(order, c, e):
            continue
        order.add((c, e))
    return OrderedEvents(tuple(events), frozenset(order))


def temporal_events(doc: Document, lex: AbstractionLexicons,
                    temporal_rules: Mapping[str, str]) -> OrderedEvents:
    """Verb events in textual order, with connective-directed overrides.

    Events are the verb-lexicon images of the document's verbs.  The
    default order chains successive events; a temporal connective
    flips (or confirms) the pair of events flanking it according to its
    configured direction.
    """
    positions: list[tuple[int, str]] = []
    first_seen: dict[str, int] = {}
    for i, w in enumerate(doc.tokens, start=1):
        if w in lex.verb_map:
            ev = lex.verb_map[w]
            positions.append((i, ev))
            first_seen.setdefault(ev, len(first_seen))
    events = [ev for ev, _ in sorted(first_seen.items(), key=lambda kv: kv[1])]
    index = {ev: k for k, ev in enumerate(events)}
    order: set[tuple[int, int]] = set()
    chain = [index[ev] for _, ev in positions]
    for a, b in zip(chain, chain[1:]):
        if a != b:
            order.add((a, b))
    for i, w in enumerate(doc.tokens, start=1):
        direction = temporal_rules.get(w)
        if direction is None:
            continue
        left = [index[ev] for (j, ev) in positions if j < i]
        right = [index[ev] for (j, ev) in positions if j > i]
        if not left or not right:
            continue
        a, b = left[-1], right[0]
        if a == b:
            continue
        if direction == "reverse":
            order.discard((a, b))
            if not _would_cycle(order, b, a):
                order.add((b, a))
        else:
            if not _would_cycle(order, a, b):
                order.add((a, b))
    return OrderedEvents(tuple((e,) for e in events), frozenset(order))


def merge_orders(causal: OrderedEvents, temporal: OrderedEvents) -> OrderedEvents:
    """Fold consistent temporal pairs into the causal order.

    A temporal pair already implied is skipped; a pair contradicting the
    causal order is ignored; a consistent new pair is appended, adding
    its events when absent.  The temporal ordering never overrides a
    causal one because temporal adjacency does not imply causation.
    """
    events = list(causal.events)
    order = set(causal.order)

    def locate(ev: tuple[str, ...]) -> int:
        token = ev[0]
        for k, existing in enumerate(events):
            if token in existing:
                return k
        events.append(ev)
        return len(events) - 1

    for (a, b) in sorted(temporal.order):
        ia = locate(temporal.events[a])
        ib = locate(temporal.events[b])
        if ia == ib or (ia, ib) in order:
            continue
        if _would_cycle(order, ia, ib):
            continue  # contradicts the causal order
        order.add((ia, ib))
    # events mentioned by no surviving pair still belong to the event set
    for ev in temporal.events:
        locate(ev)
    return OrderedEvents(tuple(events), frozenset(order))


def extract_events(doc: Document, config: ExtractionConfig) -> OrderedEvents:
    """Full pipeline: phrases, mentions, attachment, abstraction, merge."""
    phrases = parse_phrases(doc, config.grammar)
    mentions = extract_mentions(doc, config.patterns)
    causal = abstract_events(doc, attach_phrases(phrases, mentions),
                             config.lexicons)
    temporal = temporal_events(doc, config.lexicons, config.temporal_rules)
    return merge_orders(causal, temporal)
