"""The weighted, tagged alignment graph.

The graph is assembled in three passes over an initially empty graph:
known semantic models, the semantic types predicted for the target source,
and object-property paths from the ontology. Weights are assigned once at
the end, against the final link count.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import DuplicateModelError
from .model import SemanticType
from .ontology import INHERITED, SUBCLASS_OF, THING

log = logging.getLogger(__name__)

CLASS = "class"
DATA = "data"

MODEL = "model"
TYPE_ADDED = "type-added"
ONTOLOGY_DIRECT = "ontology-direct"
ONTOLOGY_INHERITED = "ontology-inherited"
SUBCLASS_ROOT = "subclass-root"


@dataclass
class GNode:
    id: str
    kind: str
    label: str
    tags: set = field(default_factory=set)
    order: int = 0


@dataclass
class GLink:
    id: str
    source: str
    target: str
    property: str
    tags: set = field(default_factory=set)
    provenance: str = MODEL
    weight: float = 0.0
    order: int = 0


class AlignmentGraph:
    """Directed multigraph with at most one link per (source, target, property)."""

    def __init__(self):
        self.nodes: dict[str, GNode] = {}
        self.links: dict[str, GLink] = {}
        self.model_ids: list[str] = []
        self._label_count: Counter = Counter()
        self._key: dict[tuple[str, str, str], str] = {}
        self._out: dict[str, list[str]] = defaultdict(list)
        self._in: dict[str, list[str]] = defaultdict(list)
        self.finalized = False

    @property
    def n_models(self):
        return len(self.model_ids)

    def _new_node(self, kind, label, tags):
        self._label_count[label] += 1
        node_id = f"{label}#{self._label_count[label]}"
        self.nodes[node_id] = GNode(node_id, kind, label, set(tags), len(self.nodes))
        return node_id

    def add_class_node(self, label, tags=()):
        return self._new_node(CLASS, label, tags)

    def add_data_node(self, label, tags=()):
        return self._new_node(DATA, label, tags)

    def add_link(self, source, target, prop, tags=(), provenance=MODEL):
        key = (source, target, prop)
        if key in self._key:
            raise ValueError(f"link {key} already present")
        link_id = f"e{len(self.links) + 1}"
        self.links[link_id] = GLink(link_id, source, target, prop, set(tags), provenance, 0.0, len(self.links))
        self._key[key] = link_id
        self._out[source].append(link_id)
        self._in[target].append(link_id)
        self.finalized = False
        return link_id

    def find_link(self, source, target, prop):
        link_id = self._key.get((source, target, prop))
        return None if link_id is None else self.links[link_id]

    def outgoing(self, node_id):
        return [self.links[i] for i in self._out.get(node_id, ())]

    def incoming(self, node_id):
        return [self.links[i] for i in self._in.get(node_id, ())]

    def class_nodes(self, label=None):
        return [n for n in self.nodes.values() if n.kind == CLASS and (label is None or n.label == label)]

    def data_nodes(self):
        return [n for n in self.nodes.values() if n.kind == DATA]

    def weakly_connected_components(self):
        seen, comps = set(), []
        for start in self.nodes:
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                n = stack.pop()
                comp.append(n)
                for l in self.outgoing(n):
                    if l.target not in seen:
                        seen.add(l.target)
                        stack.append(l.target)
                for l in self.incoming(n):
                    if l.source not in seen:
                        seen.add(l.source)
                        stack.append(l.source)
            comps.append(sorted(comp, key=lambda i: self.nodes[i].order))
        return comps

    def to_dict(self):
        return {
            "n_models": self.n_models,
            "model_ids": list(self.model_ids),
            "nodes": [
                {"id": n.id, "kind": n.kind, "label": n.label, "tags": sorted(n.tags)} for n in self.nodes.values()
            ],
            "links": [
                {
                    "id": l.id,
                    "source": l.source,
                    "target": l.target,
                    "property": l.property,
                    "tags": sorted(l.tags),
                    "provenance": l.provenance,
                    "weight": l.weight,
                }
                for l in self.links.values()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_dot(self):
        lines = ["digraph G {"]
        for n in self.nodes.values():
            shape = "ellipse" if n.kind == CLASS else "box"
            label = n.label + (f"\\n{{{','.join(sorted(n.tags))}}}" if n.tags else "")
            lines.append(f"  {json.dumps(n.id)} [shape={shape}, label=\"{_esc(label)}\"];")
        for l in self.links.values():
            label = f"{l.property}\\nw={l.weight:g}"
            if l.tags:
                label += f"\\n{{{','.join(sorted(l.tags))}}}"
            style = "solid" if l.tags else "dashed"
            lines.append(f"  {json.dumps(l.source)} -> {json.dumps(l.target)} [label=\"{_esc(label)}\", style={style}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _esc(s):
    return s.replace('"', '\\"')


def add_known_models(g: AlignmentGraph, models):
    """Merge known semantic models into ``g``, tagging nodes and links with model ids."""
    for sm in models:
        if sm.id in g.model_ids:
            raise DuplicateModelError(f"model {sm.id!r} already merged")
        g.model_ids.append(sm.id)
        h: dict[str, str] = {}

        need = Counter(c.class_uri for c in sm.class_nodes)
        for label, c1 in need.items():
            for _ in range(c1 - len(g.class_nodes(label))):
                g.add_class_node(label)
        for c in sm.class_nodes:
            used = set(h.values())
            free = [n for n in g.class_nodes(c.class_uri) if n.id not in used]
            best = max(free, key=lambda n: (len(n.tags), -n.order))
            h[c.id] = best.id

        data_ids = {d.id: d for d in sm.data_nodes}
        for link in sm.links:
            if link.target not in data_ids:
                continue
            u = h[link.source]
            used = set(h.values())
            reuse = [
                l.target
                for l in g.outgoing(u)
                if l.property == link.property and g.nodes[l.target].kind == DATA and l.target not in used
            ]
            h[link.target] = reuse[0] if reuse else g.add_data_node(data_ids[link.target].attribute)

        for node_id in h.values():
            g.nodes[node_id].tags.add(sm.id)
        for link in sm.links:
            u, v = h[link.source], h[link.target]
            existing = g.find_link(u, v, link.property)
            if existing is None:
                g.add_link(u, v, link.property, tags={sm.id}, provenance=MODEL)
            else:
                existing.tags.add(sm.id)
    g.finalized = False
    return g


def find_matches(g: AlignmentGraph, t: SemanticType):
    """``(class node, data node)`` pairs joined by a link labeled with ``t``'s property."""
    out = []
    for n in g.class_nodes(t.class_uri):
        for l in g.outgoing(n.id):
            if l.property == t.link_label and g.nodes[l.target].kind == DATA:
                out.append((n.id, l.target))
    return sorted(out, key=lambda p: (g.nodes[p[0]].order, g.nodes[p[1]].order))


def _as_type(p):
    return getattr(p, "type", p)


def add_semantic_types(g: AlignmentGraph, predictions):
    """Add nodes and links so every predicted type has a full match for its attribute.

    ``predictions`` maps attribute names (in source order) to ranked
    candidate types (``LabelPrediction`` or ``SemanticType``).
    """
    demand: Counter = Counter()
    for cands in predictions.values():
        for t in {_as_type(p) for p in cands}:
            demand[t] += 1

    for attr, cands in predictions.items():
        for p in cands:
            t = _as_type(p)
            if not g.class_nodes(t.class_uri):
                g.add_class_node(t.class_uri)
            for n in g.class_nodes(t.class_uri):
                if not any(l.property == t.link_label for l in g.outgoing(n.id)):
                    w = g.add_data_node(attr)
                    g.add_link(n.id, w, t.link_label, provenance=TYPE_ADDED)
            # two attributes sharing a type need two distinct data nodes
            while len(find_matches(g, t)) < demand[t]:
                n = g.add_class_node(t.class_uri)
                w = g.add_data_node(attr)
                g.add_link(n, w, t.link_label, provenance=TYPE_ADDED)
    g.finalized = False
    return g


def add_ontology_paths(g: AlignmentGraph, ontology):
    """Connect class nodes through direct and inherited ontology properties.

    If the graph is still disconnected afterwards, an ``owl:Thing`` node is
    added and linked to every class node without an incoming link.
    """
    classes = g.class_nodes()
    for u in classes:
        if not ontology.has_class(u.label):
            log.debug("class %s not in ontology; no paths added", u.label)
            continue
        for v in classes:
            if u.id == v.id or not ontology.has_class(v.label):
                continue
            for prop, directness in ontology.properties_between(u.label, v.label):
                if g.find_link(u.id, v.id, prop) is None:
                    prov = ONTOLOGY_INHERITED if directness == INHERITED else ONTOLOGY_DIRECT
                    g.add_link(u.id, v.id, prop, provenance=prov)

    comps = g.weakly_connected_components()
    if len(comps) > 1:
        roots = g.class_nodes(THING)
        root = roots[0].id if roots else g.add_class_node(THING)
        for n in g.class_nodes():
            if n.id != root and not g.incoming(n.id):
                g.add_link(root, n.id, SUBCLASS_OF, provenance=SUBCLASS_ROOT)
        # components whose class nodes all have parents (cycles) still need a hook
        for comp in g.weakly_connected_components():
            if root in comp:
                continue
            first = next(i for i in comp if g.nodes[i].kind == CLASS)
            g.add_link(root, first, SUBCLASS_OF, provenance=SUBCLASS_ROOT)
    g.finalized = False
    return g


def finalize_weights(g: AlignmentGraph, w_l=1.0, epsilon=0.01):
    """Assign link weights from tag counts against the final link count."""
    w_h = w_l * len(g.links)
    n = g.n_models
    for l in g.links.values():
        if l.tags:
            l.weight = w_l - len(l.tags) / (n + 1)
        elif l.provenance == ONTOLOGY_INHERITED:
            l.weight = w_h + epsilon
        else:
            l.weight = w_h
    g.w_l, g.w_h, g.epsilon = w_l, w_h, epsilon
    g.finalized = True
    return g


def build_graph(models, predictions, ontology, w_l=1.0, epsilon=0.01):
    g = AlignmentGraph()
    add_known_models(g, models)
    add_semantic_types(g, predictions)
    add_ontology_paths(g, ontology)
    return finalize_weights(g, w_l, epsilon)
