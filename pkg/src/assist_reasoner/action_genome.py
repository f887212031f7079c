"""Convert ActionGenome-style frame annotations to scene-graph JSON files.

The input is one JSON document mirroring the two ActionGenome annotation
pickles, both keyed by frame (``"<video>.mp4/<frame>.png"``)::

    {
      "person_bbox": {
        "<frame>": {"bbox": [[x1, y1, x2, y2]], "bbox_size": [w, h], ...}
      },
      "object_bbox_and_relationship": {
        "<frame>": [{"class": "cup/glass/bottle", "bbox": [x, y, w, h],
                     "visible": true,
                     "attention_relationship": ["looking_at"],
                     "spatial_relationship": ["in_front_of"],
                     "contacting_relationship": ["holding"],
                     "metadata": {"tag": "...", "set": "train"}}]
      }
    }

Relationship labels become predicates verbatim (lowercased) on edges
``person -> object``; which of the three relationship families a predicate
came from is not representable in a scene graph and is written, together
with every other dropped field, to ``conversion_log.jsonl`` in the output
directory.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from pathlib import Path

from .graph import Entity, Relation, build_graph
from .scene_io import dump_scene_graph

RELATIONSHIP_FAMILIES = (
    "attention_relationship",
    "spatial_relationship",
    "contacting_relationship",
)
SIDECAR = "conversion_log.jsonl"


class ConversionError(ValueError):
    pass


def frame_filename(frame: str) -> str:
    stem = re.sub(r"\.(png|jpe?g)$", "", frame, flags=re.I)
    return re.sub(r"[^A-Za-z0-9._-]+", "__", stem) + ".json"


def class_label(cls: str) -> str:
    """``cup/glass/bottle`` -> ``cup``; ``door_knob`` -> ``door knob``."""
    return cls.split("/")[0].replace("_", " ").strip().lower()


def _clip_box(box, width, height):
    x, y, w, h = box
    x0, y0 = min(max(x, 0.0), width), min(max(y, 0.0), height)
    x1, y1 = min(max(x + w, 0.0), width), min(max(y + h, 0.0), height)
    return (x0, y0, max(0.0, x1 - x0), max(0.0, y1 - y0))


def _box(values, where):
    try:
        box = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConversionError(f"{where}: bbox must be numeric") from None
    if len(box) != 4 or not all(math.isfinite(v) for v in box):
        raise ConversionError(f"{where}: bbox must hold 4 finite numbers")
    return box


def convert_frame(frame: str, person: dict, objects: list, where: str):
    """Build one scene graph plus the sidecar record of what was dropped."""
    dropped = {"frame": frame, "relationship_families": {}, "objects": [], "notes": []}

    pbox = None
    size = None
    if person:
        if not isinstance(person, dict):
            raise ConversionError(f"{where}: person record must be an object")
        boxes = person.get("bbox")
        if boxes is not None and len(boxes) > 0:
            x1, y1, x2, y2 = _box(boxes[0], f"{where}.person_bbox")
            pbox = [x1, y1, x2 - x1, y2 - y1]
            if len(boxes) > 1:
                dropped["notes"].append(f"{len(boxes) - 1} extra person boxes ignored")
        if person.get("bbox_size") is not None:
            size = [int(v) for v in person["bbox_size"]]
        for key in sorted(set(person) - {"bbox", "bbox_size"}):
            dropped["notes"].append(f"person field {key!r} dropped")

    kept = []
    for j, obj in enumerate(objects or []):
        ow = f"{where}.objects[{j}]"
        if not isinstance(obj, dict) or "class" not in obj:
            raise ConversionError(f"{ow}: object record needs a 'class'")
        if not obj.get("visible", True) or obj.get("bbox") is None:
            dropped["objects"].append({"index": j, "class": obj["class"], "reason": "not visible"})
            continue
        kept.append((j, obj, _box(obj["bbox"], ow)))

    boxes = ([pbox] if pbox else []) + [b for _, _, b in kept]
    if size is None and boxes:
        size = [max(1, math.ceil(max(b[0] + b[2] for b in boxes))),
                max(1, math.ceil(max(b[1] + b[3] for b in boxes)))]
        dropped["notes"].append("image size missing, derived from box extents")

    def fit(box, name):
        clipped = _clip_box(box, *size)
        if any(abs(a - b) > 1e-9 for a, b in zip(clipped, box)):
            dropped["notes"].append(f"bbox of {name} clipped to image")
        return clipped

    entities = []
    relations = []
    if pbox is not None:
        entities.append(Entity("p1", "person", "person", fit(pbox, "p1")))
    for n, (j, obj, box) in enumerate(kept, start=1):
        oid = f"o{n}"
        label = class_label(obj["class"])
        if label != obj["class"]:
            dropped["notes"].append(f"class {obj['class']!r} of {oid} shortened to {label!r}")
        entities.append(Entity(oid, label, "object", fit(box, oid)))
        for fam in RELATIONSHIP_FAMILIES:
            for pred in obj.get(fam) or []:
                pred = str(pred).lower()
                if pbox is None:
                    dropped["notes"].append(f"{fam} {pred!r} of {oid} dropped: no person")
                    continue
                relations.append(Relation("p1", oid, pred))
                dropped["relationship_families"].setdefault(f"p1|{pred}|{oid}", fam)
        meta = obj.get("metadata")
        if meta:
            dropped["objects"].append({"index": j, "id": oid, "metadata": meta})

    graph = build_graph(entities, relations, frame, size)
    return graph, dropped


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def convert_action_genome(annotation_path, output_dir) -> int:
    """Write one scene-graph JSON per annotated frame; returns the frame count."""
    annotation_path = Path(annotation_path)
    try:
        doc = json.loads(annotation_path.read_text(encoding="utf-8") or "{}")
    except (OSError, json.JSONDecodeError) as exc:
        raise ConversionError(f"{annotation_path}: unreadable annotation: {exc}") from None
    if not isinstance(doc, dict):
        raise ConversionError(f"{annotation_path}: top level must be an object")
    persons = doc.get("person_bbox") or {}
    objects = doc.get("object_bbox_and_relationship") or {}
    if not isinstance(persons, dict) or not isinstance(objects, dict):
        raise ConversionError(f"{annotation_path}: annotation tables must be objects keyed by frame")

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = sorted(set(persons) | set(objects))
    log_lines = []
    for index, frame in enumerate(frames):
        where = f"{annotation_path}: record {index} ({frame})"
        try:
            graph, dropped = convert_frame(frame, persons.get(frame), objects.get(frame), where)
        except ConversionError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConversionError(f"{where}: {exc}") from None
        _atomic_write(out / frame_filename(frame), dump_scene_graph(graph))
        log_lines.append(json.dumps(dropped, sort_keys=True))
    if frames:
        _atomic_write(out / SIDECAR, "\n".join(log_lines) + "\n")
    return len(frames)
