"""Versioned structured-text serialization of And-Or graphs.

Documents are hierarchical key/value JSON with a format tag. Floats use the
shortest exact decimal representation, so a save/load round trip reproduces
every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .nodes import (
    AlternativesNode,
    Aog,
    CategoryNode,
    LatentChild,
    LinearClassifier,
    PairRelation,
    PartNode,
    PoseNode,
    SplitNode,
    TerminalNode,
)

FORMAT = "aogqa-graph/1"


def _vec(value) -> list[float] | None:
    if value is None:
        return None
    return [float(v) for v in np.asarray(value, dtype=float).ravel()]


def _maybe_array(value):
    if value is None:
        return None
    return np.asarray(value, dtype=float)


def _split_to_doc(node: SplitNode) -> dict:
    return {
        "layer": node.layer,
        "axis": node.axis,
        "mean_geometry": _vec(node.mean_geometry),
        "pair_weight": node.pair_weight,
        "miss_penalty": node.miss_penalty,
        "children": [
            {
                "layer": alts.layer,
                "invisible_penalty": alts.invisible_penalty,
                "children": [
                    _split_to_doc(alt) if isinstance(alt, SplitNode) else {"layer": 9, "template": _vec(alt.template)}
                    for alt in alts.children
                ],
            }
            for alts in node.children
        ],
    }


def _split_from_doc(doc: dict) -> SplitNode:
    children = []
    for alts_doc in doc["children"]:
        alts = AlternativesNode(layer=alts_doc["layer"], invisible_penalty=alts_doc["invisible_penalty"])
        for alt_doc in alts_doc["children"]:
            if alt_doc["layer"] == 9:
                alts.children.append(TerminalNode(template=np.asarray(alt_doc["template"], dtype=float)))
            else:
                alts.children.append(_split_from_doc(alt_doc))
        children.append(alts)
    return SplitNode(
        layer=doc["layer"],
        children=children,
        axis=doc["axis"],
        mean_geometry=_maybe_array(doc["mean_geometry"]),
        pair_weight=doc["pair_weight"],
        miss_penalty=doc["miss_penalty"],
    )


def _part_to_doc(part: PartNode) -> dict:
    doc = {
        "kind": part.kind,
        "name": part.name,
        "margin_scale": part.margin_scale,
        "margin_offset": part.margin_offset,
        "invisible_penalty": part.invisible_penalty,
        "nominal_scale": part.nominal_scale,
        "aspect": part.aspect,
        "classifier": None,
        "children": [],
    }
    if part.classifier is not None:
        doc["classifier"] = {"weights": _vec(part.classifier.weights), "bias": part.classifier.bias}
    for child in part.children:
        if isinstance(child, LatentChild):
            doc["children"].append(
                {
                    "layer": 5,
                    "latent": True,
                    "mean_appearance": _vec(child.mean_appearance),
                    "norm_scale": child.norm_scale,
                    "norm_offset": child.norm_offset,
                }
            )
        else:
            doc["children"].append(_split_to_doc(child))
    return doc


def _part_from_doc(doc: dict) -> PartNode:
    part = PartNode(
        kind=doc["kind"],
        name=doc["name"],
        margin_scale=doc["margin_scale"],
        margin_offset=doc["margin_offset"],
        invisible_penalty=doc["invisible_penalty"],
        nominal_scale=doc["nominal_scale"],
        aspect=doc["aspect"],
    )
    if doc["classifier"] is not None:
        part.classifier = LinearClassifier(
            weights=np.asarray(doc["classifier"]["weights"], dtype=float),
            bias=doc["classifier"]["bias"],
        )
    for child_doc in doc["children"]:
        if child_doc.get("latent"):
            part.children.append(
                LatentChild(
                    mean_appearance=np.asarray(child_doc["mean_appearance"], dtype=float),
                    norm_scale=child_doc["norm_scale"],
                    norm_offset=child_doc["norm_offset"],
                )
            )
        else:
            part.children.append(_split_from_doc(child_doc))
    return part


def to_document(aog: Aog) -> dict:
    """Plain-dict rendition of the graph, ready for JSON dumping."""
    return {
        "format": FORMAT,
        "version": aog.version,
        "categories": [
            {
                "name": cat.name,
                "poses": [
                    {
                        "category": pose.category,
                        "index": pose.index,
                        "norm_scale": pose.norm_scale,
                        "norm_offset": pose.norm_offset,
                        "anchor_scene": pose.anchor_scene,
                        "parts": [_part_to_doc(p) for p in pose.parts],
                        "pairs": [
                            {
                                "a": rel.a,
                                "b": rel.b,
                                "mean_geometry": _vec(rel.mean_geometry),
                                "weight": rel.weight,
                                "miss_penalty": rel.miss_penalty,
                            }
                            for rel in pose.pairs
                        ],
                    }
                    for pose in cat.poses
                ],
            }
            for cat in aog.categories
        ],
    }


def from_document(doc: dict) -> Aog:
    if doc.get("format") != FORMAT:
        raise ValueError(f"unsupported document format {doc.get('format')!r}")
    aog = Aog(version=doc["version"])
    for cat_doc in doc["categories"]:
        cat = CategoryNode(name=cat_doc["name"])
        for pose_doc in cat_doc["poses"]:
            pose = PoseNode(
                category=pose_doc["category"],
                index=pose_doc["index"],
                norm_scale=pose_doc["norm_scale"],
                norm_offset=pose_doc["norm_offset"],
                anchor_scene=pose_doc["anchor_scene"],
            )
            pose.parts = [_part_from_doc(d) for d in pose_doc["parts"]]
            pose.pairs = [
                PairRelation(
                    a=d["a"],
                    b=d["b"],
                    mean_geometry=_maybe_array(d["mean_geometry"]),
                    weight=d["weight"],
                    miss_penalty=d["miss_penalty"],
                )
                for d in pose_doc["pairs"]
            ]
            cat.poses.append(pose)
        aog.categories.append(cat)
    return aog


def dumps(aog: Aog) -> str:
    return json.dumps(to_document(aog), indent=2, sort_keys=True)


def loads(text: str) -> Aog:
    return from_document(json.loads(text))


def save(aog: Aog, path: str | Path) -> None:
    Path(path).write_text(dumps(aog))


def load(path: str | Path) -> Aog:
    return loads(Path(path).read_text())
