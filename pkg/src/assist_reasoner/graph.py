"""Scene graph data model.

A scene graph is a directed multigraph ``G = (R, E, theta)`` of grounded
entities and predicated relations. Values are immutable; every operation
returns a new graph.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Tuple

CATEGORIES = ("person", "object", "place", "attribute", "commonsense")
PROVENANCES = ("perceived", "enriched")

BBox = Tuple[float, float, float, float]

_WS = re.compile(r"\s+")


class GraphError(ValueError):
    """Raised when a scene graph violates one of its structural invariants."""


def normalize_label(text: str) -> str:
    """Lowercase, trim and collapse internal whitespace."""
    return _WS.sub(" ", str(text)).strip().lower()


def clamp(value: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return max(lo, min(hi, value))


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    category: str = "object"
    bbox: Optional[BBox] = None
    sentiment: float = 0.0
    provenance: str = "perceived"
    grounded: bool = False

    def __post_init__(self):
        if not self.id:
            raise GraphError("entity id must be nonempty")
        label = normalize_label(self.label)
        if not label:
            raise GraphError(f"entity {self.id}: empty label")
        object.__setattr__(self, "label", label)
        if self.category not in CATEGORIES:
            raise GraphError(f"entity {self.id}: unknown category {self.category!r}")
        if self.provenance not in PROVENANCES:
            raise GraphError(f"entity {self.id}: unknown provenance {self.provenance!r}")
        if self.bbox is not None:
            bbox = tuple(float(v) for v in self.bbox)
            if len(bbox) != 4:
                raise GraphError(f"entity {self.id}: bbox needs 4 values")
            if bbox[2] < 0 or bbox[3] < 0:
                raise GraphError(f"entity {self.id}: negative bbox size")
            object.__setattr__(self, "bbox", bbox)
            if self.provenance == "enriched" and not self.grounded:
                raise GraphError(f"entity {self.id}: enriched entity cannot carry a bbox")
        s = float(self.sentiment)
        if math.isnan(s):
            raise GraphError(f"entity {self.id}: sentiment is NaN")
        object.__setattr__(self, "sentiment", clamp(s))

    @property
    def center(self) -> Optional[Tuple[float, float]]:
        if self.bbox is None:
            return None
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class Relation:
    head: str
    tail: str
    predicate: str
    confidence: float = 1.0
    provenance: str = "perceived"

    def __post_init__(self):
        if self.head == self.tail:
            raise GraphError(f"self-loop on {self.head} rejected")
        predicate = normalize_label(self.predicate)
        if not predicate:
            raise GraphError(f"relation {self.head}->{self.tail}: empty predicate")
        object.__setattr__(self, "predicate", predicate)
        c = float(self.confidence)
        if not 0.0 < c <= 1.0:
            raise GraphError(
                f"relation {self.head}->{self.tail}: confidence {c} outside (0, 1]"
            )
        object.__setattr__(self, "confidence", c)
        if self.provenance not in PROVENANCES:
            raise GraphError(f"relation {self.head}->{self.tail}: unknown provenance")

    @property
    def key(self) -> Tuple[str, str, str, str]:
        return (self.head, self.predicate, self.tail, self.provenance)


@dataclass(frozen=True)
class SceneGraph:
    frame_id: str
    entities: Mapping[str, Entity]
    relations: Tuple[Relation, ...]
    image_width: Optional[int] = None
    image_height: Optional[int] = None
    _out: Mapping[str, Tuple[int, ...]] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self):
        return iter(self.entities.values())

    def __contains__(self, entity_id) -> bool:
        return entity_id in self.entities

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise GraphError(f"unknown entity id {entity_id}") from None

    @property
    def dims(self) -> Optional[Tuple[int, int]]:
        if self.image_width is None or self.image_height is None:
            return None
        return (self.image_width, self.image_height)

    def by_label(self, label: str, provenance: Optional[str] = None) -> list:
        label = normalize_label(label)
        return [
            e for e in self.entities.values()
            if e.label == label and (provenance is None or e.provenance == provenance)
        ]

    def outgoing(self, entity_id: str) -> list:
        return [self.relations[i] for i in self._out.get(entity_id, ())]

    def neighbors(self, entity_id: str) -> list:
        """Undirected neighbour ids with summed edge confidence, sorted by id."""
        acc: dict = {}
        for r in self.relations:
            if r.head == entity_id:
                acc[r.tail] = acc.get(r.tail, 0.0) + r.confidence
            elif r.tail == entity_id:
                acc[r.head] = acc.get(r.head, 0.0) + r.confidence
        return sorted(acc.items())

    def degree(self, entity_id: str) -> int:
        return sum(1 for r in self.relations if entity_id in (r.head, r.tail))

    def perceived(self) -> list:
        return [e for e in self.entities.values() if e.provenance == "perceived"]

    def with_entities(self, updates: Iterable[Entity]) -> "SceneGraph":
        """Return a copy with the given entities replaced (matched by id)."""
        ents = dict(self.entities)
        for e in updates:
            if e.id not in ents:
                raise GraphError(f"unknown entity id {e.id}")
            ents[e.id] = e
        return build_graph(ents.values(), self.relations, self.frame_id, self.dims)

    def with_sentiments(self, values: Mapping[str, float]) -> "SceneGraph":
        return self.with_entities(
            replace(self.entities[k], sentiment=v) for k, v in values.items()
        )


def build_graph(
    entities: Iterable[Entity],
    relations: Iterable[Relation],
    frame_id: str = "",
    dims: Optional[Sequence[int]] = None,
) -> SceneGraph:
    """Validate entities and relations and assemble a :class:`SceneGraph`.

    Relation order is preserved. Repeated (head, predicate, tail, provenance)
    quadruples keep their first occurrence.
    """
    width = height = None
    if dims is not None:
        width, height = (int(d) for d in dims)
        if width <= 0 or height <= 0:
            raise GraphError(f"image dimensions must be positive, got {width}x{height}")

    ents: dict = {}
    for e in entities:
        if e.id in ents:
            raise GraphError(f"duplicate entity id {e.id}")
        if e.bbox is not None:
            if width is None:
                raise GraphError(f"entity {e.id} has a bbox but the image has no dimensions")
            x, y, w, h = e.bbox
            if x < 0 or y < 0 or x + w > width or y + h > height:
                raise GraphError(f"bbox of {e.id} lies outside the {width}x{height} image")
        ents[e.id] = e

    rels = []
    seen = set()
    out: dict = {}
    for r in relations:
        for end in (r.head, r.tail):
            if end not in ents:
                raise GraphError(f"dangling endpoint {end}")
        if r.key in seen:
            continue
        seen.add(r.key)
        out.setdefault(r.head, []).append(len(rels))
        rels.append(r)

    return SceneGraph(
        frame_id=str(frame_id),
        entities=MappingProxyType(ents),
        relations=tuple(rels),
        image_width=width,
        image_height=height,
        _out=MappingProxyType({k: tuple(v) for k, v in out.items()}),
    )


def relations_between(graph: SceneGraph, head: str, tail: str) -> list:
    """All relations from ``head`` to ``tail`` in insertion order.

    The incidence function is generalised to a multimap: a pair of entities
    may carry several predicates.
    """
    graph.entity(head)
    graph.entity(tail)
    return [r for r in graph.outgoing(head) if r.tail == tail]


def merge_nodes(graph: SceneGraph, survivor: str, absorbed: str) -> SceneGraph:
    """Fold ``absorbed`` into ``survivor``.

    Edges are rewired, self-loops created by the rewrite are dropped and the
    survivor keeps the more negative of the two sentiments.
    """
    keep = graph.entity(survivor)
    gone = graph.entity(absorbed)
    if survivor == absorbed:
        raise GraphError(f"cannot merge {survivor} into itself")

    keep = replace(keep, sentiment=min(keep.sentiment, gone.sentiment))
    ents = [keep if e.id == survivor else e for e in graph if e.id != absorbed]

    rels = []
    for r in graph.relations:
        head = survivor if r.head == absorbed else r.head
        tail = survivor if r.tail == absorbed else r.tail
        if head == tail:
            continue
        rels.append(r if (head, tail) == (r.head, r.tail) else replace(r, head=head, tail=tail))
    return build_graph(ents, rels, graph.frame_id, graph.dims)


def graph_sentiment(graph: SceneGraph) -> float:
    """S(G): plain sum of node sentiments."""
    return math.fsum(e.sentiment for e in graph)


def disjoint_union(a: SceneGraph, b: SceneGraph, frame_id: Optional[str] = None) -> SceneGraph:
    """Union of two graphs with disjoint entity ids and identical (or absent) dims."""
    dims = a.dims or b.dims
    if a.dims and b.dims and a.dims != b.dims:
        raise GraphError("cannot union graphs with different image dimensions")
    return build_graph(
        list(a) + list(b),
        a.relations + b.relations,
        a.frame_id if frame_id is None else frame_id,
        dims,
    )


def _dot_quote(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _color(s: float) -> str:
    if s < 0:
        return "red"
    if s > 0:
        return "green"
    return "gray"


def to_dot(graph: SceneGraph) -> str:
    """Graphviz rendering; node colour encodes the sign of the sentiment."""
    lines = ["digraph {"]
    for eid in sorted(graph.entities):
        e = graph.entities[eid]
        label = f"{e.label} (S={e.sentiment:.3f})"
        style = ', style=dashed' if e.provenance == "enriched" else ""
        lines.append(
            f"  {_dot_quote(eid)} [label={_dot_quote(label)}, color={_color(e.sentiment)}{style}];"
        )
    for r in sorted(graph.relations, key=lambda r: (r.head, r.tail, r.predicate, r.provenance)):
        lines.append(
            f"  {_dot_quote(r.head)} -> {_dot_quote(r.tail)} "
            f"[label={_dot_quote(r.predicate)}, weight={r.confidence:.3f}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
