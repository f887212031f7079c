"""Commonsense triple store and connotation lexicon.

KB files are CSV ``head,relation,tail,weight`` (UTF-8, ``#`` starts a
comment line). Lexicon files are TSV ``word<TAB>polarity``.
"""

from __future__ import annotations

import csv
import io
import math
import string
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Tuple

from .graph import clamp, normalize_label

RELATIONS = (
    "IsA",
    "UsedFor",
    "CapableOf",
    "AtLocation",
    "PartOf",
    "Causes",
    "HasProperty",
    "MadeOf",
    "Produces",
)
REMEDY_RELATIONS = frozenset({"CapableOf", "UsedFor"})
_RELATION_LOOKUP = {r.lower(): r for r in RELATIONS}

KB_HEADER = ("head", "relation", "tail", "weight")


class KnowledgeError(ValueError):
    """Malformed knowledge-base or lexicon input."""


def raw_tokens(text: str) -> list:
    out = []
    for tok in str(text).lower().split():
        tok = tok.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def fold(token: str, vocabulary) -> str:
    """Naive plural folding: drop a trailing ``s`` if the stem is known."""
    if len(token) > 1 and token.endswith("s") and token[:-1] in vocabulary:
        return token[:-1]
    return token


def tokenize(text: str, vocabulary=frozenset()) -> list:
    return [fold(t, vocabulary) for t in raw_tokens(text)]


@dataclass(frozen=True, order=True)
class Triple:
    head: str
    relation: str
    tail: str
    weight: float = 1.0

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise KnowledgeError(f"unknown relation {self.relation!r}")
        head, tail = normalize_label(self.head), normalize_label(self.tail)
        if not head or not tail:
            raise KnowledgeError("triple head and tail must be nonempty")
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)
        w = float(self.weight)
        if not 0.0 < w <= 1.0:
            raise KnowledgeError(f"weight {w} outside (0, 1]")
        object.__setattr__(self, "weight", w)

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.head, self.relation, self.tail)


@dataclass(frozen=True)
class KnowledgeBase:
    triples: Tuple[Triple, ...] = ()
    head_index: Mapping[str, Tuple[int, ...]] = field(default=None, compare=False, repr=False)
    token_index: Mapping[str, Tuple[int, ...]] = field(default=None, compare=False, repr=False)
    isa_index: frozenset = field(default=None, compare=False, repr=False)
    vocabulary: frozenset = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        triples = tuple(self.triples)
        object.__setattr__(self, "triples", triples)
        vocab = set()
        for t in triples:
            vocab.update(raw_tokens(t.head))
            vocab.update(raw_tokens(t.tail))
        vocab = frozenset(vocab)
        heads: dict = {}
        tokens: dict = {}
        isa = set()
        for i, t in enumerate(triples):
            heads.setdefault(t.head, []).append(i)
            for tok in dict.fromkeys(tokenize(t.tail, vocab)):
                tokens.setdefault(tok, []).append(i)
            if t.relation == "IsA":
                isa.add((t.head, t.tail))
        object.__setattr__(self, "vocabulary", vocab)
        object.__setattr__(self, "head_index", MappingProxyType({k: tuple(v) for k, v in heads.items()}))
        object.__setattr__(self, "token_index", MappingProxyType({k: tuple(v) for k, v in tokens.items()}))
        object.__setattr__(self, "isa_index", frozenset(isa))

    def __len__(self) -> int:
        return len(self.triples)

    def tokens(self, text: str) -> list:
        return tokenize(text, self.vocabulary)

    def is_a(self, hyponym: str, hypernym: str) -> bool:
        return (hyponym, hypernym) in self.isa_index


def kb_from_triples(triples: Iterable[Triple]) -> KnowledgeBase:
    """Deduplicate on (head, relation, tail), keeping the maximal weight."""
    best: dict = {}
    for t in triples:
        prev = best.get(t.key)
        if prev is None or t.weight > prev.weight:
            best[t.key] = t
    return KnowledgeBase(tuple(best.values()))


def parse_kb(text: str, source: str = "<string>") -> KnowledgeBase:
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            row = next(csv.reader([line]))
        except csv.Error as exc:
            raise KnowledgeError(f"{source}:{lineno}: {exc}") from None
        row = [c.strip() for c in row]
        if tuple(c.lower() for c in row) == KB_HEADER:
            continue
        if len(row) != 4:
            raise KnowledgeError(f"{source}:{lineno}: expected 4 columns, got {len(row)}")
        head, rel, tail, weight = row
        relation = _RELATION_LOOKUP.get(rel.lower())
        if relation is None:
            raise KnowledgeError(f"{source}:{lineno}: unknown relation {rel!r}")
        try:
            w = float(weight)
        except ValueError:
            raise KnowledgeError(f"{source}:{lineno}: bad weight {weight!r}") from None
        if not 0.0 < w <= 1.0 or math.isnan(w):
            raise KnowledgeError(f"{source}:{lineno}: weight {w} outside (0, 1]")
        try:
            triples.append(Triple(head, relation, tail, w))
        except KnowledgeError as exc:
            raise KnowledgeError(f"{source}:{lineno}: {exc}") from None
    return kb_from_triples(triples)


def load_kb(path) -> KnowledgeBase:
    path = Path(path)
    return parse_kb(path.read_text(encoding="utf-8"), str(path))


def dump_kb(kb: KnowledgeBase) -> str:
    buf = io.StringIO()
    buf.write("# " + ",".join(KB_HEADER) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for t in kb.triples:
        writer.writerow([t.head, t.relation, t.tail, repr(t.weight)])
    return buf.getvalue()


def _sorted_by_weight(triples) -> list:
    return sorted(triples, key=lambda t: (-t.weight, t.relation, t.tail, t.head))


def outgoing(kb: KnowledgeBase, concept: str) -> list:
    """Triples headed by ``concept``, strongest first, then by (relation, tail)."""
    idx = kb.head_index.get(normalize_label(concept), ())
    return _sorted_by_weight(kb.triples[i] for i in idx)


def remedies_for(kb: KnowledgeBase, harm_tokens, dedupe: bool = True) -> list:
    """CapableOf/UsedFor triples whose tail mentions any of ``harm_tokens``.

    Sorted by descending weight; with ``dedupe`` only the strongest triple
    per head is kept.
    """
    harm = {fold(t, kb.vocabulary) for t in harm_tokens}
    if not harm:
        raise ValueError("harm_tokens must be nonempty")
    hits = set()
    for tok in harm:
        hits.update(kb.token_index.get(tok, ()))
    found = _sorted_by_weight(
        kb.triples[i] for i in hits if kb.triples[i].relation in REMEDY_RELATIONS
    )
    if not dedupe:
        return found
    seen = set()
    out = []
    for t in found:
        if t.head not in seen:
            seen.add(t.head)
            out.append(t)
    return out


@dataclass(frozen=True)
class ConnotationLexicon:
    entries: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for word, value in self.entries.items():
            w = str(word).strip().lower()
            if not w or len(w.split()) != 1:
                raise KnowledgeError(f"lexicon word {word!r} must be a single token")
            v = float(value)
            if not -1.0 <= v <= 1.0:
                raise KnowledgeError(f"polarity of {w!r} is {v}, outside [-1, 1]")
            clean[w] = v
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word) -> bool:
        return word in self.entries

    def tokens(self, phrase: str) -> list:
        return tokenize(phrase, self.entries)


def parse_lexicon(text: str, source: str = "<string>") -> ConnotationLexicon:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 2:
            raise KnowledgeError(f"{source}:{lineno}: expected word<TAB>polarity")
        word, value = parts[0].strip().lower(), parts[1].strip()
        if not word or len(word.split()) != 1:
            raise KnowledgeError(f"{source}:{lineno}: {parts[0]!r} is not a single token")
        try:
            v = float(value)
        except ValueError:
            raise KnowledgeError(f"{source}:{lineno}: bad polarity {value!r}") from None
        if not -1.0 <= v <= 1.0:
            raise KnowledgeError(f"{source}:{lineno}: polarity {v} outside [-1, 1]")
        entries[word] = v
    return ConnotationLexicon(entries)


def load_lexicon(path) -> ConnotationLexicon:
    path = Path(path)
    return parse_lexicon(path.read_text(encoding="utf-8"), str(path))


def dump_lexicon(lexicon: ConnotationLexicon) -> str:
    return "".join(f"{w}\t{v!r}\n" for w, v in sorted(lexicon.entries.items()))


def polarity(lexicon: ConnotationLexicon, phrase: str) -> float:
    """Mean token polarity; unknown tokens count as 0."""
    toks = lexicon.tokens(phrase)
    if not toks:
        return 0.0
    return clamp(math.fsum(lexicon.entries.get(t, 0.0) for t in toks) / len(toks))
