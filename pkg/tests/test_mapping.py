import hashlib
from collections import Counter
import pytest

from helpers import RDF_TYPE, RELL, SERVICES, SUBCLASS, SUBPROP, layer_counts, superclasses, superprops, val
from rellharvest.crawler import CrawlRecord
from rellharvest.mapping import (
    MT_NS,
    NS,
    domain_ontology_quads,
    emit_domain_ontology,
    emit_individuals,
    emit_media_type_taxonomy,
    emit_provenance,
    emit_upper_ontology,
    ensure_media_type_class,
    make_graph_id,
    media_type_class,
)
from rellharvest.model import parse_description
from rellharvest.rdf.store import QuadStore
from rellharvest.rdf.terms import IRI

from conftest import run_harvest


def test_upper_ontology_fixed_and_idempotent():
    store = QuadStore()
    assert emit_upper_ontology(store) == 10
    assert emit_upper_ontology(store) == 0
    assert len(store) == 10
    triples = {(val(q.subject), val(q.predicate), val(q.object)) for q in store}
    schema = "http://www.w3.org/2000/01/rdf-schema#"
    assert (RELL + "represents", schema + "domain", RELL + "representation") in triples
    assert (RELL + "represents", schema + "range", RELL + "resource") in triples
    assert (RELL + "link", schema + "range", RELL + "resource") in triples
    assert all(q.graph is None for q in store)


def test_media_type_taxonomy():
    store = QuadStore()
    assert emit_media_type_taxonomy(store) == 24
    assert emit_media_type_taxonomy(store) == 0
    assert superclasses(store, MT_NS + "text.html") == {MT_NS + "text", RELL + "representation"}
    assert superclasses(store, MT_NS + "application.atom-xml") == {
        MT_NS + "application.xml", MT_NS + "application", RELL + "representation"}
    assert superclasses(store, MT_NS + "image.jpeg") == {MT_NS + "image", RELL + "representation"}


@pytest.mark.parametrize("media_type, local", [
    ("text/html", "text.html"), ("application/atom+xml", "application.atom-xml"),
    ("Image/JPEG", "image.jpeg"), ("application/vnd.example+json", "application.vnd.example-json"),
])
def test_media_type_class_names(media_type, local):
    assert media_type_class(media_type) == IRI(MT_NS + local)


def test_uncurated_media_types_reuse_the_taxonomy():
    store = QuadStore()
    emit_media_type_taxonomy(store)
    before = len(store)
    # re-deriving curated types adds nothing
    for mt in ("text/html", "application/atom+xml", "image/jpeg", "text/plain"):
        assert ensure_media_type_class(store, mt) == 0
    assert ensure_media_type_class(store, "application/rss+xml") == 3
    assert superclasses(store, MT_NS + "application.rss-xml") >= {MT_NS + "application.xml"}
    assert ensure_media_type_class(store, "audio/ogg") == 6
    assert superclasses(store, MT_NS + "audio.ogg") == {MT_NS + "audio", RELL + "representation"}
    assert len(store) == before + 9


def test_school_domain_ontology(school_desc):
    store = QuadStore()
    emit_upper_ontology(store)
    emit_media_type_taxonomy(store)
    added = emit_domain_ontology(store, school_desc)
    assert added == len(domain_ontology_quads(school_desc))
    assert emit_domain_ontology(store, school_desc) == 0
    school = SERVICES + "school#"
    assert superclasses(store, school + "person") == {RELL + "resource"}
    assert superclasses(store, school + "courselist") == {RELL + "resource", RELL + "collection"}
    assert superprops(store, school + "person-course") == {school + "teaching", RELL + "link"}
    assert MT_NS + "text.html" in superclasses(store, school + "person-html")
    # link with no type hangs directly below rell:link
    rng = {val(q.object) for q in store.match(IRI(school + "person-course"))
           if val(q.predicate).endswith("#range")}
    assert rng == {school + "course"}


def test_description_without_links_has_no_property_quads():
    desc = parse_description("""<service xmlns="urn:rell:v1" id="plain" name="Plain">
      <resource id="thing" name="Thing"><uri match="http://h/t/.*"/>
        <representation id="thing-txt" mediatype="text/plain"/></resource></service>""")
    quads = domain_ontology_quads(desc)
    owl_property = "http://www.w3.org/2002/07/owl#ObjectProperty"
    assert not [q for q in quads if val(q.object) == owl_property or val(q.predicate) == SUBPROP]
    assert {val(q.predicate) for q in quads} <= {RDF_TYPE, SUBCLASS, "http://www.w3.org/2000/01/rdf-schema#label"}


def record(uri="http://h/school/people/faculty/x", body=b"<p>x</p>", **kw):
    base = dict(request_uri=uri, final_uri=uri, resource_type=("school", "person"), status=200,
                media_type="text/html", body=body, body_digest=hashlib.sha256(body).digest(), link_occurrences=(), resource_uri=uri,
                representation_id="person-html", parsed_as="text/html")
    base.update(kw)
    return CrawlRecord(**base)


def test_graph_id_is_deterministic_and_content_sensitive():
    a, b = record(), record()
    assert make_graph_id(a) == make_graph_id(b)
    assert make_graph_id(a) != make_graph_id(record(body=b"<p>y</p>"))
    assert make_graph_id(a) != make_graph_id(record(uri="http://h/school/people/faculty/y"))
    gid = make_graph_id(a).value
    assert gid.startswith(NS.service("school") + "r") and len(gid) == len(NS.service("school")) + 13


def test_provenance_and_individuals_live_in_the_record_graph():
    store = QuadStore()
    rec = record()
    assert emit_provenance(store, rec) == 2
    assert emit_individuals(store, rec) == 1
    g = make_graph_id(rec)
    assert {q.graph for q in store} == {g}
    assert store.count(g, IRI(RDF_TYPE), IRI(SERVICES + "school#person-html"), g) == 1


def test_continuation_record_is_not_typed_again():
    store = QuadStore()
    emit_individuals(store, record(continuation=True))
    assert len(store) == 0


def test_aliases_rewrite_subject(school_desc):
    store = QuadStore()
    rec = record(request_uri="http://h/old", final_uri="http://h/new", resource_uri="http://h/old")
    emit_individuals(store, rec, {"http://h/old": "http://h/new"})
    assert {val(q.subject) for q in store} == {"http://h/new"}


# -- whole-harvest structure --------------------------------------------------------


@pytest.fixture(scope="module")
def school_harvest(shared_server, manifest, descriptions, rules):
    return run_harvest(shared_server, manifest, descriptions, rules, "school")


def test_school_harvest_counts(school_harvest, manifest):
    expected = manifest.crawl("school")
    counts = layer_counts(school_harvest.store)
    assert counts == {
        "type_quads": expected["type_quads"],
        "link_quads": expected["link_quads"],
        "represents": expected["graphs"],
        "graphs": expected["graphs"],
    }


def test_stratification(composite):
    for q in composite.store:
        ns_graph = q.graph is not None
        schema_predicate = val(q.predicate) in (SUBCLASS, SUBPROP) or val(q.predicate).startswith(
            "http://www.w3.org/2000/01/rdf-schema#")
        if schema_predicate:
            assert not ns_graph, q
        if q.graph is not None:
            assert q.graph.value.startswith(SERVICES)


def test_each_resource_typed_once(composite):
    typed = Counter()
    for q in composite.store:
        if q.graph is not None and val(q.predicate) == RDF_TYPE and q.subject != q.graph:
            typed[q.subject] += 1
    assert typed and max(typed.values()) == 1


def test_each_graph_represents_one_resource(composite):
    per_graph = Counter(q.graph for q in composite.store if val(q.predicate) == RELL + "represents")
    assert set(per_graph.values()) == {1}
    assert set(per_graph) == {q.graph for q in composite.store if q.graph is not None}


def test_link_properties_reach_rell_link(composite):
    store = composite.store
    link_preds = {val(q.predicate) for q in store if q.graph is not None
                  and val(q.predicate).startswith(SERVICES) and val(q.predicate) in
                  {val(d.subject) for d in store if val(d.predicate) == SUBPROP}}
    assert link_preds
    for p in link_preds:
        assert RELL + "link" in superprops(store, p)


def test_extracted_attributes(composite):
    fn = "http://www.w3.org/2006/vcard/ns#fn"
    names = sorted(q.object.lexical for q in composite.store if val(q.predicate) == fn)
    assert names == ["Jane Doe", "Nora Vance", "Tomas Reyes"]
    assert all(q.graph is not None for q in composite.store if val(q.predicate) == fn)
