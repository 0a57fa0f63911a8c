import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_mappings
from semweave.errors import ConfigError
from semweave.graph import AlignmentGraph, build_graph, find_matches
from semweave.labeling import LabelPrediction
from semweave.mapping import (
    AttributeMatch,
    attribute_order,
    generate_candidate_mappings,
    mappings_to_json,
    score_mapping,
)
from semweave.model import SemanticType

CHO = "aac:CulturalHeritageObject"
TITLE = SemanticType(CHO, "dcterms:title")
LABEL = SemanticType(CHO, "rdfs:label")
PROV = SemanticType(CHO, "dcterms:provenance")
NOTE = SemanticType("aac:Person", "ElementsGr2:note")


@pytest.fixture(scope="module")
def graph(museum_ontology, known_models, dia_types):
    return build_graph(known_models, dia_types, museum_ontology)


def match(g, attr, t, conf, i=0):
    u, v = find_matches(g, t)[i]
    return AttributeMatch(attr, t, u, v, conf)


def test_find_matches_examples(graph):
    assert find_matches(graph, SemanticType("skos:Concept", "skos:prefLabel")) == [("skos:Concept#1", "type#1")]
    assert find_matches(graph, SemanticType("aac:Person", "foaf:name")) == [
        ("aac:Person#1", "name#1"),
        ("aac:Person#2", "name#2"),
    ]
    assert find_matches(graph, SemanticType("e:Absent", "e:p")) == []
    assert find_matches(graph, SemanticType("foaf:Document")) == [("foaf:Document#1", "imageURL#1")]


def test_m1_score(graph):
    m1 = score_mapping(graph, [match(graph, "title", TITLE, 0.49), match(graph, "credit", PROV, 0.83)])
    assert m1.confidence == pytest.approx(0.66)
    assert m1.coherence == pytest.approx(2 / 3)
    assert m1.size_reduction == pytest.approx(0.5)
    assert m1.score == pytest.approx((0.66 + 2 / 3 + 0.5) / 3)
    assert m1.score == pytest.approx(0.60, abs=0.01)


def test_m4_score(graph):
    m4 = score_mapping(graph, [match(graph, "title", LABEL, 0.28), match(graph, "credit", PROV, 0.83)])
    assert m4.score == pytest.approx(0.46, abs=0.01)


def test_beam_of_two_keeps_m1_and_m4(graph, dia_types):
    two = {a: dia_types[a] for a in ("title", "credit")}
    beam = generate_candidate_mappings(graph, ["title", "credit"], two, branching_factor=2)
    got = {tuple((m.type, m.class_node) for m in b.matches) for b in beam}
    assert got == {((TITLE, CHO + "#1"), (PROV, CHO + "#1")), ((LABEL, CHO + "#1"), (PROV, CHO + "#1"))}
    assert beam[0].score > beam[1].score


def test_single_untagged_match_boundary():
    g = AlignmentGraph()
    c = g.add_class_node("e:A")
    d = g.add_data_node("x")
    g.add_link(c, d, "e:p")
    m = score_mapping(g, [AttributeMatch("x", SemanticType("e:A", "e:p"), c, d, 1.0)])
    assert (m.confidence, m.coherence, m.size_reduction) == (1.0, 0.0, 0.0)
    assert m.score == pytest.approx(1 / 3)


def test_single_match_gives_one_mapping():
    g = AlignmentGraph()
    c, d = g.add_class_node("e:A"), g.add_data_node("x")
    t = SemanticType("e:A", "e:p")
    g.add_link(c, d, "e:p")
    out = generate_candidate_mappings(g, ["x"], {"x": [LabelPrediction(t, 0.5)]})
    assert len(out) == 1 and out[0].matches[0].data_node == d


@pytest.mark.parametrize("weights", [(0.5, 0.5, 0.5), (-0.2, 0.6, 0.6), (1, 0)])
def test_bad_weights(graph, weights):
    with pytest.raises(ConfigError):
        score_mapping(graph, [match(graph, "title", TITLE, 0.49)], weights)


def test_weights_change_ranking(graph, dia_types):
    two = {a: dia_types[a] for a in ("title", "credit")}
    top = generate_candidate_mappings(graph, ["title", "credit"], two, weights=(0, 1, 0))[0]
    # with coherence alone the top mapping has the highest coherence overall
    assert top.coherence == max(
        m.coherence for m in generate_candidate_mappings(graph, ["title", "credit"], two, None, None)
    )


def test_confidence_first_order(dia_types):
    order = attribute_order(list(dia_types), dia_types, "confidence")
    assert order[0] == "credit"
    assert attribute_order(list(dia_types), dia_types) == list(dia_types)


def test_beam_bounded_and_complete(graph, dia_types):
    for bf in (1, 2, 5):
        out = generate_candidate_mappings(graph, list(dia_types), dia_types, bf, None)
        assert 1 <= len(out) <= bf
        assert all(len(m.matches) == len(dia_types) for m in out)
    assert len(generate_candidate_mappings(graph, list(dia_types), dia_types, None, 3)) == 3


def test_json_dump(graph, dia_types):
    text = mappings_to_json(generate_candidate_mappings(graph, list(dia_types), dia_types, 2, 2))
    assert '"size_reduction"' in text and '"class_node"' in text


# exhaustive oracle on random small instances


@st.composite
def instances(draw):
    g = AlignmentGraph()
    tags = ["s1", "s2", "s3"]
    pool = []
    for i in range(draw(st.integers(1, 4))):
        t = SemanticType(f"e:C{i % 2}", f"e:p{i}")
        for _ in range(draw(st.integers(1, 3))):
            c_tags = draw(st.sets(st.sampled_from(tags), max_size=2))
            existing = g.class_nodes(t.class_uri)
            if existing and draw(st.booleans()):
                c = existing[draw(st.integers(0, len(existing) - 1))].id
                g.nodes[c].tags |= c_tags
            else:
                c = g.add_class_node(t.class_uri, c_tags)
            d = g.add_data_node(f"v{len(g.nodes)}", draw(st.sets(st.sampled_from(tags), max_size=2)))
            g.add_link(c, d, t.link_label)
        pool.append(t)
    attrs = [f"a{i}" for i in range(draw(st.integers(1, 4)))]
    preds = {}
    for a in attrs:
        types = draw(st.lists(st.sampled_from(pool), min_size=1, max_size=2, unique=True))
        confs = sorted((draw(st.floats(0, 1, allow_nan=False)) for _ in types), reverse=True)
        preds[a] = [LabelPrediction(t, c) for t, c in zip(types, confs)]
    return g, attrs, preds


@settings(max_examples=150, deadline=None)
@given(instances())
def test_unbounded_beam_equals_enumeration(inst):
    g, attrs, preds = inst
    options = [[(u, v, p.confidence) for p in preds[a] for u, v in find_matches(g, p.type)] for a in attrs]
    node_tags = {n.id: n.tags for n in g.nodes.values()}
    expected = enumerate_mappings(options, node_tags)
    got = generate_candidate_mappings(g, attrs, preds, None, None)
    got_map = {tuple((m.class_node, m.data_node) for m in b.matches): b.score for b in got}
    assert set(got_map) == set(expected)
    for key, score in expected.items():
        assert got_map[key] == pytest.approx(score, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(instances(), st.integers(1, 4))
def test_beam_properties(inst, bf):
    g, attrs, preds = inst
    out = generate_candidate_mappings(g, attrs, preds, bf, None)
    assert len(out) <= bf
    for m in out:
        kk = len(m.matches)
        assert kk + 1 <= m.size <= 2 * kk
        assert 0 <= m.confidence <= 1 and 0 <= m.coherence <= 1 and 0 <= m.score <= 1
        assert 0 <= m.size_reduction < 1 or kk == 1 and m.size_reduction == 0
    scores = [round(m.score, 12) for m in out]
    assert scores == sorted(scores, reverse=True)


@settings(max_examples=100, deadline=None)
@given(instances(), st.permutations(["s1", "s2", "s3"]))
def test_coherence_ignores_tag_names(inst, perm):
    g, attrs, preds = inst
    before = [m.coherence for m in generate_candidate_mappings(g, attrs, preds, None, None)]
    rename = dict(zip(["s1", "s2", "s3"], perm))
    for n in g.nodes.values():
        n.tags = {rename[t] for t in n.tags}
    after = [m.coherence for m in generate_candidate_mappings(g, attrs, preds, None, None)]
    assert sorted(before) == pytest.approx(sorted(after))
