"""Scene-graph JSON reading and writing.

Document layout::

    {
      "frame_id": "oven-0001",
      "image": {"width": 640, "height": 480},
      "entities": [{"id": "e1", "label": "person", "category": "person",
                    "bbox": [x, y, w, h]}],
      "relations": [{"head": "e1", "predicate": "taking", "tail": "e3",
                     "confidence": 1.0}]
    }

``image``, ``bbox`` and ``confidence`` are optional.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .graph import CATEGORIES, Entity, GraphError, Relation, SceneGraph, build_graph


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(path, f"expected a finite number, got {value!r}")
    return value


def _text(obj, key, path, required=True):
    if key not in obj:
        if required:
            raise SchemaError(f"{path}.{key}", "missing")
        return None
    value = obj[key]
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(f"{path}.{key}", f"expected a nonempty string, got {value!r}")
    return value


def scene_graph_from_dict(doc) -> SceneGraph:
    if not isinstance(doc, dict):
        raise SchemaError("$", "document must be an object")
    frame_id = doc.get("frame_id", "")
    if not isinstance(frame_id, str):
        raise SchemaError("frame_id", "expected a string")

    dims = None
    image = doc.get("image")
    if image is not None:
        if not isinstance(image, dict):
            raise SchemaError("image", "expected an object")
        dims = []
        for key in ("width", "height"):
            v = image.get(key)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise SchemaError(f"image.{key}", f"expected a positive integer, got {v!r}")
            dims.append(v)

    raw_entities = doc.get("entities", [])
    if not isinstance(raw_entities, list):
        raise SchemaError("entities", "expected a list")
    entities = []
    for i, item in enumerate(raw_entities):
        path = f"entities[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(path, "expected an object")
        eid = _text(item, "id", path)
        label = _text(item, "label", path)
        category = item.get("category", "object")
        if category not in CATEGORIES:
            raise SchemaError(f"{path}.category", f"expected one of {CATEGORIES}, got {category!r}")
        bbox = item.get("bbox")
        if bbox is not None:
            if not isinstance(bbox, list) or len(bbox) != 4:
                raise SchemaError(f"{path}.bbox", "expected [x, y, width, height]")
            bbox = [_number(v, f"{path}.bbox[{j}]") for j, v in enumerate(bbox)]
            x, y, w, h = bbox
            if x < 0 or y < 0 or w < 0 or h < 0:
                raise SchemaError(f"{path}.bbox", f"negative coordinate in {bbox}")
            if dims is None:
                raise SchemaError(f"{path}.bbox", "bbox given but image dimensions are missing")
            if x + w > dims[0] or y + h > dims[1]:
                raise SchemaError(f"{path}.bbox", f"{bbox} exceeds image {dims[0]}x{dims[1]}")
            bbox = tuple(bbox)
        try:
            entities.append(Entity(eid, label, category, bbox))
        except GraphError as exc:
            raise SchemaError(path, str(exc)) from None

    ids = {e.id for e in entities}
    raw_relations = doc.get("relations", [])
    if not isinstance(raw_relations, list):
        raise SchemaError("relations", "expected a list")
    relations = []
    for i, item in enumerate(raw_relations):
        path = f"relations[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(path, "expected an object")
        head = _text(item, "head", path)
        tail = _text(item, "tail", path)
        predicate = _text(item, "predicate", path)
        conf = _number(item.get("confidence", 1.0), f"{path}.confidence")
        if not 0 < conf <= 1:
            raise SchemaError(f"{path}.confidence", f"{conf} outside (0, 1]")
        for end in (head, tail):
            if end not in ids:
                raise SchemaError(path, f"dangling endpoint {end}")
        try:
            relations.append(Relation(head, tail, predicate, conf))
        except GraphError as exc:
            raise SchemaError(path, str(exc)) from None

    try:
        return build_graph(entities, relations, frame_id, dims)
    except GraphError as exc:
        raise SchemaError("entities", str(exc)) from None


def parse_scene_graph(path) -> SceneGraph:
    """Read and validate a scene-graph JSON file; every element is perceived."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from None
    return scene_graph_from_dict(doc)


def _num_out(v: float):
    return int(v) if float(v).is_integer() else v


def scene_graph_to_dict(graph: SceneGraph) -> dict:
    doc = {"frame_id": graph.frame_id}
    if graph.dims is not None:
        doc["image"] = {"width": graph.image_width, "height": graph.image_height}
    ents = []
    for e in graph:
        item = {"id": e.id, "label": e.label, "category": e.category}
        if e.bbox is not None:
            item["bbox"] = [_num_out(v) for v in e.bbox]
        ents.append(item)
    doc["entities"] = ents
    doc["relations"] = [
        {"head": r.head, "predicate": r.predicate, "tail": r.tail, "confidence": r.confidence}
        for r in graph.relations
    ]
    return doc


def dump_scene_graph(graph: SceneGraph) -> str:
    return json.dumps(scene_graph_to_dict(graph), indent=2, ensure_ascii=False) + "\n"


def write_scene_graph(graph: SceneGraph, path) -> None:
    Path(path).write_text(dump_scene_graph(graph), encoding="utf-8")
