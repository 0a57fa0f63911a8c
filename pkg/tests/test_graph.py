import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semweave.errors import DuplicateModelError
from semweave.graph import (
    MODEL,
    ONTOLOGY_DIRECT,
    ONTOLOGY_INHERITED,
    SUBCLASS_ROOT,
    TYPE_ADDED,
    AlignmentGraph,
    add_known_models,
    add_ontology_paths,
    add_semantic_types,
    build_graph,
    finalize_weights,
    find_matches,
)
from semweave.model import ClassNode, DataNode, ModelLink, SemanticModel, SemanticType, rel
from semweave.ontology import Ontology, OntologyProperty, parse_ontology

CHO = "aac:CulturalHeritageObject"
PERSON = "aac:Person"


def structure(g):
    nodes = {(n.id, n.kind, n.label) for n in g.nodes.values()}
    links = {(l.source, l.target, l.property) for l in g.links.values()}
    return nodes, links


@pytest.fixture(scope="module")
def museum_graph(museum_ontology, known_models, dia_types):
    return build_graph(known_models, dia_types, museum_ontology)


def link(g, source, target, prop):
    found = g.find_link(source, target, prop)
    assert found is not None, (source, target, prop)
    return found


def test_identity_merge(known_models):
    dma = known_models[0]
    g = add_known_models(AlignmentGraph(), [dma])
    assert len(g.nodes) == len(dma.class_nodes) + len(dma.data_nodes)
    assert len(g.links) == len(dma.links)
    assert all(n.tags == {"dma"} for n in g.nodes.values())
    assert all(l.tags == {"dma"} and l.provenance == MODEL for l in g.links.values())
    # the graph read back as a model has the same triples
    as_model = SemanticModel(
        "g",
        [ClassNode(n.id, n.label) for n in g.class_nodes()],
        [DataNode(n.id, n.label) for n in g.data_nodes()],
        [ModelLink(l.source, l.target, l.property) for l in g.links.values()],
    )
    assert {(s, o, p) for s, o, p in rel(as_model)} == {(s, o, p) for s, o, p in rel(dma)}


def test_shared_creator_link(museum_graph):
    creators = [l for l in museum_graph.links.values() if l.property == "dcterms:creator"]
    assert len(creators) == 1
    assert creators[0].tags == {"dma", "npg"}
    assert museum_graph.nodes[creators[0].source].label == CHO
    assert museum_graph.nodes[creators[0].target].label == PERSON


def test_second_person_node(known_models):
    g = add_known_models(AlignmentGraph(), known_models[:1])
    assert len(g.class_nodes(PERSON)) == 1
    add_known_models(g, known_models[1:])
    persons = g.class_nodes(PERSON)
    assert len(persons) == 2
    # the older, more-tagged node took the creator role
    assert persons[0].tags == {"dma", "npg"} and persons[1].tags == {"npg"}


def test_duplicate_model_id(known_models):
    g = add_known_models(AlignmentGraph(), known_models[:1])
    with pytest.raises(DuplicateModelError):
        add_known_models(g, known_models[:1])


def test_remerging_renamed_copy_keeps_structure(known_models):
    g = add_known_models(AlignmentGraph(), known_models)
    before = structure(g)
    for sm in known_models:
        copy = SemanticModel(sm.id + "-copy", sm.class_nodes, sm.data_nodes, sm.links)
        add_known_models(g, [copy])
    assert structure(g) == before
    assert all(len(n.tags) % 2 == 0 for n in g.nodes.values())


def test_type_already_matched_adds_nothing(known_models):
    g = add_known_models(AlignmentGraph(), known_models)
    before = structure(g)
    add_semantic_types(g, {"title": [SemanticType(CHO, "dcterms:title")]})
    assert structure(g) == before


def test_partial_match_completed(known_models):
    g = add_known_models(AlignmentGraph(), known_models)
    n_nodes, n_links = len(g.nodes), len(g.links)
    t = SemanticType("skos:Concept", "rdfs:label")
    assert find_matches(g, t) == []
    add_semantic_types(g, {"classification": [t]})
    assert (len(g.nodes), len(g.links)) == (n_nodes + 1, n_links + 1)
    ((c, d),) = find_matches(g, t)
    assert c == "skos:Concept#1" and g.nodes[d].label == "classification"
    l = link(g, c, d, "rdfs:label")
    assert l.provenance == TYPE_ADDED and not l.tags


def test_bare_class_type_creates_node(known_models):
    g = add_known_models(AlignmentGraph(), known_models)
    n_nodes, n_links = len(g.nodes), len(g.links)
    t = SemanticType("foaf:Document")
    add_semantic_types(g, {"imageURL": [t]})
    assert (len(g.nodes), len(g.links)) == (n_nodes + 2, n_links + 1)
    ((c, d),) = find_matches(g, t)
    assert g.nodes[c].label == "foaf:Document"
    assert link(g, c, d, "karma:uri").provenance == TYPE_ADDED


def test_shared_type_gets_one_match_per_attribute():
    g = AlignmentGraph()
    t = SemanticType("e:A", "e:p")
    add_semantic_types(g, {"x": [t], "y": [t]})
    assert len(find_matches(g, t)) == 2


def test_foaf_page_to_document(museum_graph):
    doc = museum_graph.class_nodes("foaf:Document")[0].id
    sources = {l.source for l in museum_graph.incoming(doc) if l.property == "foaf:page"}
    expected = {n.id for n in museum_graph.class_nodes() if n.label not in ("foaf:Document", "edm:WebResource")}
    assert sources == expected
    assert all(museum_graph.find_link(s, doc, "foaf:page").provenance == ONTOLOGY_DIRECT for s in sources)


def test_inherited_aggregates(museum_graph):
    l = link(museum_graph, "edm:EuropeanaAggregation#1", "aac:CulturalHeritageObject#1", "ore:aggregates")
    assert l.provenance == ONTOLOGY_INHERITED
    assert l.weight == pytest.approx(26.01)


def test_museum_weights(museum_graph):
    g = museum_graph
    assert len(g.links) == 26 and g.n_models == 2
    assert link(g, "edm:EuropeanaAggregation#1", "edm:WebResource#1", "edm:hasView").weight == pytest.approx(2 / 3)
    assert link(g, "aac:CulturalHeritageObject#1", "aac:Person#1", "dcterms:creator").weight == pytest.approx(1 / 3)
    untagged = [l for l in g.links.values() if not l.tags]
    assert {round(l.weight, 9) for l in untagged if l.provenance != ONTOLOGY_INHERITED} == {26.0}


def test_weight_with_three_models():
    g = AlignmentGraph()
    g.model_ids = ["s1", "s2", "s3"]
    a, b = g.add_class_node("e:A"), g.add_class_node("e:B")
    g.add_link(a, b, "e:p", tags={"s1"})
    finalize_weights(g)
    assert g.find_link(a, b, "e:p").weight == pytest.approx(0.75)


def test_no_models_only_heavy_links(museum_ontology, dia_types):
    g = build_graph([], dia_types, museum_ontology)
    w_h = len(g.links)
    assert {round(l.weight, 9) for l in g.links.values()} <= {w_h, round(w_h + 0.01, 9)}


def test_thing_root_added_when_disconnected():
    o = parse_ontology({"prefixes": {"e": "http://e/"}, "classes": [{"uri": "e:A"}, {"uri": "e:B"}]})
    g = AlignmentGraph()
    add_semantic_types(g, {"x": [SemanticType("e:A", "e:p")], "y": [SemanticType("e:B", "e:q")]})
    add_ontology_paths(g, o)
    root = g.class_nodes("owl:Thing")
    assert len(root) == 1
    added = [l for l in g.links.values() if l.provenance == SUBCLASS_ROOT]
    assert sorted(l.target for l in added) == ["e:A#1", "e:B#1"]
    assert all(l.property == "rdfs:subClassOf" for l in added)
    assert len(g.weakly_connected_components()) == 1
    finalize_weights(g)
    assert all(l.weight == len(g.links) for l in added)


def test_no_root_when_connected(museum_graph):
    assert museum_graph.class_nodes("owl:Thing") == []
    assert len(museum_graph.weakly_connected_components()) == 1


def test_cycle_component_gets_hook():
    o = parse_ontology(
        {
            "prefixes": {"e": "http://e/"},
            "classes": [{"uri": "e:A"}, {"uri": "e:B"}, {"uri": "e:C"}],
            "properties": [
                {"uri": "e:ab", "kind": "object", "domains": ["e:A"], "ranges": ["e:B"]},
                {"uri": "e:ba", "kind": "object", "domains": ["e:B"], "ranges": ["e:A"]},
            ],
        }
    )
    g = AlignmentGraph()
    for c in ("e:A", "e:B", "e:C"):
        g.add_class_node(c)
    add_ontology_paths(g, o)
    assert len(g.weakly_connected_components()) == 1


def test_add_link_rejects_duplicate_key():
    g = AlignmentGraph()
    a, b = g.add_class_node("e:A"), g.add_class_node("e:B")
    g.add_link(a, b, "e:p")
    g.add_link(a, b, "e:q")
    with pytest.raises(ValueError):
        g.add_link(a, b, "e:p")


def test_dumps(museum_graph):
    doc = json.loads(museum_graph.to_json())
    assert len(doc["links"]) == 26
    dot = museum_graph.to_dot()
    assert dot.startswith("digraph")
    assert dot.count("->") == 26
    assert "26.01" in dot


# random small inputs for the structural invariants

CLASSES = ["e:A", "e:B", "e:C"]
PROPS = ["e:p", "e:q"]


@st.composite
def models(draw, n_max=3):
    out = []
    for i in range(draw(st.integers(0, n_max))):
        labels = draw(st.lists(st.sampled_from(CLASSES), min_size=1, max_size=4))
        classes = [ClassNode(f"c{j}", lab) for j, lab in enumerate(labels)]
        links, datas, seen = [], [], set()
        for _ in range(draw(st.integers(0, 5))):
            s = draw(st.integers(0, len(classes) - 1))
            if draw(st.booleans()):
                t = draw(st.integers(0, len(classes) - 1))
                p = draw(st.sampled_from(PROPS))
                if s != t and (s, t, p) not in seen:
                    seen.add((s, t, p))
                    links.append(ModelLink(f"c{s}", f"c{t}", p))
            else:
                d = f"d{len(datas)}"
                datas.append(DataNode(d, f"attr{len(datas)}"))
                links.append(ModelLink(f"c{s}", d, draw(st.sampled_from(["e:name", "e:label"]))))
        out.append(SemanticModel(f"m{i}", classes, datas, links))
    return out


ONTO = Ontology(
    properties=[
        OntologyProperty("e:p", "object", frozenset({"e:A"}), frozenset({"e:B"})),
        OntologyProperty("e:r", "object", frozenset(), frozenset({"e:C"})),
    ],
    subclass_edges=[("e:B", "e:A")],
)


@settings(max_examples=80, deadline=None)
@given(models(), st.lists(st.tuples(st.sampled_from(CLASSES), st.sampled_from(["e:name", "e:other"])), max_size=3))
def test_graph_invariants(ms, types):
    preds = {f"a{i}": [SemanticType(c, p)] for i, (c, p) in enumerate(types)}
    g = build_graph(ms, preds, ONTO)
    n = g.n_models
    keys = [(l.source, l.target, l.property) for l in g.links.values()]
    assert len(keys) == len(set(keys))
    assert len(g.weakly_connected_components()) <= 1
    w_h = len(g.links)
    for l in g.links.values():
        assert (l.provenance == MODEL) == bool(l.tags)
        if l.tags:
            assert l.weight == pytest.approx(1 - len(l.tags) / (n + 1))
            assert 0 < l.weight < 1 <= w_h
        else:
            assert l.weight in (w_h, w_h + 0.01)
    # any all-tagged path of at most |E| links is cheaper than one untagged link
    tagged = [l.weight for l in g.links.values() if l.tags]
    if tagged:
        assert max(tagged) * len(g.links) < w_h


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6))
def test_more_tags_weigh_less(n, k):
    k = min(k, n)
    g = AlignmentGraph()
    g.model_ids = [f"s{i}" for i in range(n)]
    a, b = g.add_class_node("e:A"), g.add_class_node("e:B")
    g.add_link(a, b, "e:p", tags=set(g.model_ids[:k]))
    if k > 1:
        g.add_link(a, b, "e:q", tags=set(g.model_ids[: k - 1]))
    finalize_weights(g)
    if k > 1:
        assert g.find_link(a, b, "e:p").weight < g.find_link(a, b, "e:q").weight


@settings(max_examples=60, deadline=None)
@given(models(n_max=2))
def test_renamed_remerge_is_structurally_idempotent(ms):
    g = add_known_models(AlignmentGraph(), ms)
    before = structure(g)
    add_known_models(g, [SemanticModel(sm.id + "x", sm.class_nodes, sm.data_nodes, sm.links) for sm in ms])
    assert structure(g) == before
