"""Semantic models, source tables and their file formats."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .errors import DanglingReferenceError, MalformedDocumentError, ModelValidationError, SourceFormatError

KARMA_URI = "karma:uri"

MODEL_SCHEMA = {
    "type": "object",
    "required": ["id", "class_nodes", "data_nodes", "links"],
    "properties": {
        "id": {"type": "string"},
        "class_nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "class"],
                "properties": {"id": {"type": "string"}, "class": {"type": "string"}},
            },
        },
        "data_nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "attribute"],
                "properties": {"id": {"type": "string"}, "attribute": {"type": "string"}},
            },
        },
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "property"],
                "properties": {
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "property": {"type": "string"},
                },
            },
        },
    },
}


@dataclass(frozen=True, order=True)
class SemanticType:
    """A bare class (values are instance URIs) or a (class, data property) pair."""

    class_uri: str
    property_uri: str | None = None

    @property
    def link_label(self):
        return self.property_uri or KARMA_URI

    def __str__(self):
        if self.property_uri is None:
            return f"<{self.class_uri}>"
        return f"<{self.class_uri},{self.property_uri}>"

    def sort_key(self):
        return (self.class_uri, self.property_uri or "")


@dataclass(frozen=True)
class ClassNode:
    id: str
    class_uri: str


@dataclass(frozen=True)
class DataNode:
    id: str
    attribute: str


@dataclass(frozen=True)
class ModelLink:
    source: str
    target: str
    property: str


@dataclass(frozen=True)
class SemanticModel:
    id: str
    class_nodes: tuple[ClassNode, ...]
    data_nodes: tuple[DataNode, ...]
    links: tuple[ModelLink, ...]

    def __post_init__(self):
        object.__setattr__(self, "class_nodes", tuple(self.class_nodes))
        object.__setattr__(self, "data_nodes", tuple(self.data_nodes))
        object.__setattr__(self, "links", tuple(self.links))

    @property
    def attributes(self):
        return [d.attribute for d in self.data_nodes]

    def class_of(self, node_id):
        for c in self.class_nodes:
            if c.id == node_id:
                return c.class_uri
        return None

    def is_data_node(self, node_id):
        return any(d.id == node_id for d in self.data_nodes)

    def validate(self, allow_forest=False):
        """Raise :class:`ModelValidationError` if a structural invariant is broken."""
        class_ids = [c.id for c in self.class_nodes]
        data_ids = [d.id for d in self.data_nodes]
        dup = [i for i, n in Counter(class_ids + data_ids).items() if n > 1]
        if dup:
            raise ModelValidationError(f"{self.id}: duplicate node ids {sorted(dup)}")
        dup_attr = [a for a, n in Counter(self.attributes).items() if n > 1]
        if dup_attr:
            raise ModelValidationError(f"{self.id}: attributes mapped more than once {sorted(dup_attr)}")
        classes, datas = set(class_ids), set(data_ids)
        incoming: Counter = Counter()
        seen = set()
        for link in self.links:
            for end in (link.source, link.target):
                if end not in classes and end not in datas:
                    raise DanglingReferenceError(f"{self.id}: link references undeclared node {end!r}")
            if link.source not in classes:
                raise ModelValidationError(f"{self.id}: link source {link.source!r} is not a class node")
            key = (link.source, link.target, link.property)
            if key in seen:
                raise ModelValidationError(f"{self.id}: duplicate link {key}")
            seen.add(key)
            incoming[link.target] += 1
        for d in data_ids:
            if incoming[d] != 1:
                raise ModelValidationError(f"{self.id}: data node {d!r} has {incoming[d]} incoming links")
        _check_acyclic(self)
        if not allow_forest and len(classes) + len(datas) > 1:
            if _components(self) > 1:
                raise ModelValidationError(f"{self.id}: model is not weakly connected")
            roots = [c for c in class_ids if incoming[c] == 0]
            if len(roots) != 1:
                raise ModelValidationError(f"{self.id}: expected a single root, found {roots}")
        return self

    def default_numbering(self):
        """Map class node ids to display names ``<class><ordinal>`` in declaration order."""
        counts: Counter = Counter()
        out = {}
        for c in self.class_nodes:
            counts[c.class_uri] += 1
            out[c.id] = f"{c.class_uri}{counts[c.class_uri]}"
        return out

    def semantic_types(self):
        """Semantic type of every attribute, read off its incoming link."""
        parent = {l.target: l for l in self.links}
        out = {}
        for d in self.data_nodes:
            link = parent.get(d.id)
            if link is None:
                continue
            cls = self.class_of(link.source)
            prop = None if link.property == KARMA_URI else link.property
            out[d.attribute] = SemanticType(cls, prop)
        return out

    def to_dict(self):
        return {
            "id": self.id,
            "class_nodes": [{"id": c.id, "class": c.class_uri} for c in self.class_nodes],
            "data_nodes": [{"id": d.id, "attribute": d.attribute} for d in self.data_nodes],
            "links": [{"from": l.source, "to": l.target, "property": l.property} for l in self.links],
        }

    @classmethod
    def from_dict(cls, doc, allow_forest=False):
        sm = cls(
            doc["id"],
            tuple(ClassNode(c["id"], c["class"]) for c in doc["class_nodes"]),
            tuple(DataNode(d["id"], d["attribute"]) for d in doc["data_nodes"]),
            tuple(ModelLink(l["from"], l["to"], l["property"]) for l in doc["links"]),
        )
        return sm.validate(allow_forest=allow_forest)


def _components(sm):
    adj = defaultdict(set)
    nodes = [c.id for c in sm.class_nodes] + [d.id for d in sm.data_nodes]
    for l in sm.links:
        adj[l.source].add(l.target)
        adj[l.target].add(l.source)
    seen, count = set(), 0
    for n in nodes:
        if n in seen:
            continue
        count += 1
        stack = [n]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(adj[x] - seen)
    return count


def _check_acyclic(sm):
    out = defaultdict(list)
    for l in sm.links:
        out[l.source].append(l.target)
    state = {}

    def visit(n):
        state[n] = 1
        for m in out[n]:
            s = state.get(m, 0)
            if s == 1:
                raise ModelValidationError(f"{sm.id}: directed cycle through {m!r}")
            if s == 0:
                visit(m)
        state[n] = 2

    for c in sm.class_nodes:
        if c.id not in state:
            visit(c.id)


def rel(sm: SemanticModel, numbering=None, internal_only=False):
    """The model's triples ``(source label, target label, property)``.

    ``numbering`` maps class node ids to display names; it defaults to
    :meth:`SemanticModel.default_numbering`. Data nodes are labeled with
    their attribute name.
    """
    if numbering is None:
        numbering = sm.default_numbering()
    attr = {d.id: d.attribute for d in sm.data_nodes}
    out = set()
    for l in sm.links:
        if internal_only and l.target in attr:
            continue
        target = attr[l.target] if l.target in attr else numbering[l.target]
        out.add((numbering[l.source], target, l.property))
    return frozenset(out)


def load_model(path, allow_forest=False) -> SemanticModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise MalformedDocumentError(path, f"line {err.lineno} column {err.colno}", err.msg) from None
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as err:
        loc = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise MalformedDocumentError(path, loc, err.message) from None
    return SemanticModel.from_dict(doc, allow_forest=allow_forest)


def save_model(sm: SemanticModel, path):
    Path(path).write_text(json.dumps(sm.to_dict(), indent=2) + "\n", encoding="utf-8")


def model_to_dot(sm: SemanticModel) -> str:
    names = sm.default_numbering()
    lines = [f"digraph {json.dumps(sm.id)} {{"]
    for c in sm.class_nodes:
        lines.append(f"  {json.dumps(c.id)} [shape=ellipse, label={json.dumps(names[c.id])}];")
    for d in sm.data_nodes:
        lines.append(f"  {json.dumps(d.id)} [shape=box, label={json.dumps(d.attribute)}];")
    for l in sm.links:
        lines.append(f"  {json.dumps(l.source)} -> {json.dumps(l.target)} [label={json.dumps(l.property)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SourceTable:
    name: str
    attributes: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for i, r in enumerate(self.rows):
            if len(r) != len(self.attributes):
                raise SourceFormatError(
                    f"{self.name}: row {i + 1} has {len(r)} values, expected {len(self.attributes)}"
                )

    def column(self, attribute):
        j = self.attributes.index(attribute)
        return [r[j] for r in self.rows]


def _flatten(obj, prefix=""):
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = "" if v is None else (v if isinstance(v, str) else json.dumps(v))
    return out


def load_source(path, format=None, name=None) -> SourceTable:
    """Read a CSV (header row) or JSON (array of objects) file into a :class:`SourceTable`."""
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    name = name or path.name.split(".")[0]
    text = path.read_text(encoding="utf-8")
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise SourceFormatError(f"{path}: empty CSV file") from None
        rows = [r for r in reader if r]
        for i, r in enumerate(rows):
            if len(r) != len(header):
                raise SourceFormatError(f"{path}: row {i + 2} has {len(r)} fields, header has {len(header)}")
        return SourceTable(name, header, rows)
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise MalformedDocumentError(path, f"line {err.lineno} column {err.colno}", err.msg) from None
        if not isinstance(doc, list) or not all(isinstance(r, dict) for r in doc):
            raise SourceFormatError(f"{path}: JSON root must be an array of objects")
        flat = [_flatten(r) for r in doc]
        attrs: dict[str, None] = {}
        for r in flat:
            attrs.update(dict.fromkeys(r))
        return SourceTable(name, list(attrs), [[r.get(a, "") for a in attrs] for r in flat])
    raise SourceFormatError(f"{path}: unsupported source format {fmt!r}")
