"""Beam search over attribute-to-graph mappings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvariantViolation
from .graph import AlignmentGraph, find_matches
from .validation import check_choice, check_positive_int, check_score_weights

DEFAULT_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)
ORDER_POLICIES = ("source", "confidence")


@dataclass(frozen=True)
class AttributeMatch:
    attribute: str
    type: object
    class_node: str
    data_node: str
    confidence: float


@dataclass(frozen=True)
class Mapping:
    matches: tuple[AttributeMatch, ...]
    confidence: float = 0.0
    coherence: float = 0.0
    size_reduction: float = 0.0
    score: float = 0.0
    nodes: frozenset = field(default=frozenset(), compare=False)

    @property
    def size(self):
        return len(self.nodes)

    def node_key(self):
        return tuple(x for m in self.matches for x in (m.class_node, m.data_node))

    def match_for(self, attribute):
        for m in self.matches:
            if m.attribute == attribute:
                return m
        return None

    def to_dict(self):
        return {
            "score": self.score,
            "confidence": self.confidence,
            "coherence": self.coherence,
            "size_reduction": self.size_reduction,
            "matches": [
                {
                    "attribute": m.attribute,
                    "type": str(m.type),
                    "class_node": m.class_node,
                    "data_node": m.data_node,
                    "confidence": m.confidence,
                }
                for m in self.matches
            ],
        }


def _nodes(matches):
    return frozenset(x for m in matches for x in (m.class_node, m.data_node))


def score_mapping(g: AlignmentGraph, matches, weights=DEFAULT_WEIGHTS) -> Mapping:
    """Score a set of matches by confidence, node coherence and size reduction."""
    w1, w2, w3 = check_score_weights(weights)
    matches = tuple(matches)
    kk = len(matches)
    if kk == 0:
        raise ValueError("a mapping needs at least one match")
    nodes = _nodes(matches)
    confidence = sum(m.confidence for m in matches) / kk
    counts: dict[str, int] = {}
    for n in nodes:
        for t in g.nodes[n].tags:
            counts[t] = counts.get(t, 0) + 1
    coherence = max(counts.values(), default=0) / len(nodes)
    lo, hi = kk + 1, 2 * kk
    size_reduction = (hi - len(nodes)) / (hi - lo + 1)
    score = w1 * confidence + w2 * coherence + w3 * size_reduction
    return Mapping(matches, confidence, coherence, size_reduction, score, nodes)


def _sort_key(m: Mapping):
    return (-round(m.score, 12), m.node_key())


def attribute_order(attributes, predictions, policy="source"):
    check_choice(policy, "attribute_order", ORDER_POLICIES)
    if policy == "source":
        return list(attributes)
    top = {a: max((p.confidence for p in predictions.get(a, ())), default=0.0) for a in attributes}
    return sorted(attributes, key=lambda a: -top[a])


def attribute_matches(g: AlignmentGraph, attribute, predictions):
    """All matches for an attribute, over its candidate types in rank order."""
    out, seen = [], set()
    for p in predictions:
        if p.type in seen:
            continue
        seen.add(p.type)
        for u, v in find_matches(g, p.type):
            out.append(AttributeMatch(attribute, p.type, u, v, p.confidence))
    return out


def generate_candidate_mappings(
    g: AlignmentGraph,
    attributes,
    predictions,
    branching_factor=50,
    num_of_candidates=50,
    weights=DEFAULT_WEIGHTS,
    order="source",
):
    """Ranked mappings covering every attribute that has predictions.

    ``branching_factor`` or ``num_of_candidates`` set to ``None`` means
    unbounded. A data node is never assigned to two attributes of one mapping.
    """
    check_positive_int(branching_factor, "branching_factor", allow_none=True)
    check_positive_int(num_of_candidates, "num_of_candidates", allow_none=True)
    check_score_weights(weights)
    beam: list[Mapping] = [Mapping(())]
    for attr in attribute_order(attributes, predictions, order):
        preds = predictions.get(attr) or []
        if not preds:
            continue
        options = attribute_matches(g, attr, preds)
        if not options:
            raise InvariantViolation(f"attribute {attr!r} has predictions but no match in the graph")
        grown = []
        for m in beam:
            used = {x.data_node for x in m.matches}
            for opt in options:
                if opt.data_node in used:
                    continue
                grown.append(score_mapping(g, m.matches + (opt,), weights))
        grown.sort(key=_sort_key)
        beam = grown[:branching_factor] if branching_factor is not None else grown
        if not beam:
            return []
    if not beam[0].matches:
        return []
    return beam[:num_of_candidates] if num_of_candidates is not None else beam


def mappings_to_json(mappings):
    return json.dumps([m.to_dict() for m in mappings], indent=2)

