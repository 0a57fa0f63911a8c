"""Domain ontology store.

Ontologies are read from a small JSON format that carries only what graph
construction needs: classes, the subclass hierarchy and the domain/range
lists of object and data properties.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import jsonschema

from .errors import MalformedDocumentError, OntologyCycleError, UnknownEntityError

THING = "owl:Thing"
SUBCLASS_OF = "rdfs:subClassOf"
DIRECT = "direct"
INHERITED = "inherited"

BUILTIN_PREFIXES = {"owl", "rdf", "rdfs", "xsd", "karma"}

ONTOLOGY_SCHEMA = {
    "type": "object",
    "required": ["classes"],
    "additionalProperties": False,
    "properties": {
        "prefixes": {"type": "object", "additionalProperties": {"type": "string"}},
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["uri"],
                "additionalProperties": False,
                "properties": {
                    "uri": {"type": "string", "minLength": 1},
                    "subclass_of": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "properties": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["uri", "kind"],
                "additionalProperties": False,
                "properties": {
                    "uri": {"type": "string", "minLength": 1},
                    "kind": {"enum": ["object", "data"]},
                    "domains": {"type": "array", "items": {"type": "string"}},
                    "ranges": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class OntologyClass:
    uri: str


@dataclass(frozen=True)
class OntologyProperty:
    uri: str
    kind: str  # "object" | "data" | "subclass-link"
    domains: frozenset = field(default_factory=frozenset)
    ranges: frozenset = field(default_factory=frozenset)

    def effective_domains(self):
        return self.domains or frozenset({THING})

    def effective_ranges(self):
        return self.ranges or frozenset({THING})


class Ontology:
    """Union of one or more ontology documents.

    Immutable after construction; the superclass closure and the
    class-pair property lookups are memoized.
    """

    def __init__(self, classes=(), properties=(), subclass_edges=()):
        self._classes: dict[str, OntologyClass] = {THING: OntologyClass(THING)}
        for c in classes:
            self._classes.setdefault(c.uri, c)
        self._properties: dict[tuple[str, str], OntologyProperty] = {}
        for p in properties:
            key = (p.kind, p.uri)
            old = self._properties.get(key)
            if old is not None:
                # an unrestricted side stays unrestricted after the merge
                p = OntologyProperty(
                    p.uri,
                    p.kind,
                    old.effective_domains() | p.effective_domains(),
                    old.effective_ranges() | p.effective_ranges(),
                )
            self._properties[key] = p
        # parents keep insertion order; duplicates dropped
        self._parents: dict[str, list[str]] = {}
        self._edges: list[tuple[str, str]] = []
        for child, parent in subclass_edges:
            for uri in (child, parent):
                self._classes.setdefault(uri, OntologyClass(uri))
            plist = self._parents.setdefault(child, [])
            if parent not in plist and parent != THING:
                plist.append(parent)
                self._edges.append((child, parent))
        self._check_acyclic()
        self._closure_cache: dict[str, tuple[str, ...]] = {}
        self._between_cache: dict[tuple[str, str], list[tuple[str, str]]] = {}

    @property
    def classes(self):
        return tuple(self._classes.values())

    @property
    def properties(self):
        return tuple(self._properties.values())

    @property
    def subclass_edges(self):
        return tuple(self._edges)

    def has_class(self, uri):
        return uri in self._classes

    def property(self, uri, kind="object"):
        return self._properties.get((kind, uri))

    def parents(self, uri):
        self._require(uri)
        return tuple(self._parents.get(uri, ()))

    def _require(self, uri):
        if uri not in self._classes:
            raise UnknownEntityError(f"unknown class {uri!r}")

    def _check_acyclic(self):
        state: dict[str, int] = {}
        for start in self._parents:
            if state.get(start):
                continue
            stack = [(start, iter(self._parents.get(start, ())))]
            path = [start]
            state[start] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[node] = 2
                    stack.pop()
                    path.pop()
                    continue
                s = state.get(nxt, 0)
                if s == 1:
                    raise OntologyCycleError(path[path.index(nxt):] + [nxt])
                if s == 0:
                    state[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, iter(self._parents.get(nxt, ()))))

    def superclass_closure(self, uri):
        """Strict ancestors of ``uri`` in breadth-first order, ending with owl:Thing."""
        self._require(uri)
        cached = self._closure_cache.get(uri)
        if cached is not None:
            return cached
        seen = []
        queue = deque(self._parents.get(uri, ()))
        while queue:
            c = queue.popleft()
            if c in seen:
                continue
            seen.append(c)
            queue.extend(self._parents.get(c, ()))
        if uri != THING:
            seen.append(THING)
        out = tuple(seen)
        self._closure_cache[uri] = out
        return out

    def properties_between(self, c1, c2):
        """Object properties (and subclass links) that can connect ``c1`` to ``c2``.

        Returns ``(property uri, directness)`` pairs sorted direct-first, then by uri.
        """
        key = (c1, c2)
        cached = self._between_cache.get(key)
        if cached is not None:
            return list(cached)
        up1 = {c1, *self.superclass_closure(c1)}
        up2 = {c2, *self.superclass_closure(c2)}
        found: dict[str, str] = {}
        for (kind, uri), p in self._properties.items():
            if kind != "object":
                continue
            if p.effective_domains().isdisjoint(up1) or p.effective_ranges().isdisjoint(up2):
                continue
            direct = c1 in p.domains and c2 in p.ranges
            if direct or uri not in found:
                found[uri] = DIRECT if direct else INHERITED
        if c2 != c1 and c2 in up1 and c2 != THING:
            found[SUBCLASS_OF] = DIRECT if c2 in self._parents.get(c1, ()) else INHERITED
        out = sorted(found.items(), key=lambda kv: (kv[1] != DIRECT, kv[0]))
        self._between_cache[key] = out
        return list(out)

    def union(self, other: Ontology) -> Ontology:
        return Ontology(
            self.classes + other.classes,
            self.properties + other.properties,
            self.subclass_edges + other.subclass_edges,
        )


def _location(err: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def _check_prefix(uri, prefixes, path, where):
    prefix, sep, local = uri.partition(":")
    if not sep or not prefix or not local:
        raise MalformedDocumentError(path, where, f"{uri!r} is not a prefixed name")
    if prefix not in prefixes and prefix not in BUILTIN_PREFIXES:
        raise MalformedDocumentError(path, where, f"undeclared prefix {prefix!r} in {uri!r}")


def parse_ontology(doc: dict, path="<memory>") -> Ontology:
    try:
        jsonschema.validate(doc, ONTOLOGY_SCHEMA)
    except jsonschema.ValidationError as err:
        raise MalformedDocumentError(path, _location(err), err.message) from None
    prefixes = doc.get("prefixes", {})
    classes, edges, props = [], [], []
    for i, c in enumerate(doc["classes"]):
        where = f"$.classes[{i}]"
        _check_prefix(c["uri"], prefixes, path, where)
        classes.append(OntologyClass(c["uri"]))
        for parent in c.get("subclass_of", ()):
            _check_prefix(parent, prefixes, path, where + ".subclass_of")
            edges.append((c["uri"], parent))
    for i, p in enumerate(doc.get("properties", ())):
        where = f"$.properties[{i}]"
        for uri in [p["uri"], *p.get("domains", ()), *p.get("ranges", ())]:
            _check_prefix(uri, prefixes, path, where)
        props.append(
            OntologyProperty(p["uri"], p["kind"], frozenset(p.get("domains", ())), frozenset(p.get("ranges", ())))
        )
    # domain/range classes that were never declared still take part in inference
    declared = {c.uri for c in classes}
    for p in props:
        for uri in sorted(p.domains | p.ranges):
            if uri not in declared:
                classes.append(OntologyClass(uri))
                declared.add(uri)
    return Ontology(classes, props, edges)


def load_ontology(documents: Iterable[str | Path]) -> Ontology:
    """Load and merge ontology documents into a single :class:`Ontology`."""
    classes, props, edges = [], [], []
    for path in documents:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise MalformedDocumentError(path, f"line {err.lineno} column {err.colno}", err.msg) from None
        onto = parse_ontology(doc, path)
        classes += onto.classes
        props += onto.properties
        edges += onto.subclass_edges
    return Ontology(classes, props, edges)
