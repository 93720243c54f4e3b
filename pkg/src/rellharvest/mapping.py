"""Turn descriptions and crawl records into the layered RDF model.

Layer 1 (upper ontology) and Layer 2 (domain ontology) go into the default
graph. Each retrieved representation gets a named graph holding the
individuals and links derived from it (Layer 3) and its own typing as a
representation of a resource (Layer 4).

Every ``emit_*`` function returns the number of quads it newly added, so
repeated emission of the same material returns 0.
"""
from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional
from urllib.parse import quote

from .crawler import CrawlRecord, LinkClass
from .model import LinkSpec, RellDescription
from .rdf import vocab
from .rdf.store import QuadStore
from .rdf.terms import IRI, Literal, Quad
from .rdf.turtle import parse_turtle
from .rules import ExtractionRuleSet, ObjectKind
from .selectors import DocTree, evaluate, resolve_reference

log = logging.getLogger(__name__)

RELL_NS = "http://rell.example.org/ns#"
MT_NS = "http://rell.example.org/mediatypes#"
SERVICE_BASE = "http://rell.example.org/services/"

RDF_TYPE = IRI(vocab.RDF_TYPE)
SUBCLASS = IRI(vocab.RDFS_SUBCLASSOF)
SUBPROPERTY = IRI(vocab.RDFS_SUBPROPERTYOF)
DOMAIN = IRI(vocab.RDFS_DOMAIN)
RANGE = IRI(vocab.RDFS_RANGE)
LABEL = IRI(vocab.RDFS_LABEL)
COMMENT = IRI(vocab.RDFS_COMMENT)
OWL_CLASS = IRI(vocab.OWL_CLASS)
OWL_OBJECT_PROPERTY = IRI(vocab.OWL_OBJECT_PROPERTY)

RELL_RESOURCE = IRI(RELL_NS + "resource")
RELL_REPRESENTATION = IRI(RELL_NS + "representation")
RELL_COLLECTION = IRI(RELL_NS + "collection")
RELL_LINK = IRI(RELL_NS + "link")
RELL_REPRESENTS = IRI(RELL_NS + "represents")


@dataclass(frozen=True)
class Namespaces:
    rell: str = RELL_NS
    mt: str = MT_NS
    service_base: str = SERVICE_BASE

    def service(self, service_id: str) -> str:
        return f"{self.service_base}{quote(service_id, safe='')}#"

    def prefixes(self, service_ids=()) -> dict[str, str]:
        out = dict(vocab.PREFIXES)
        out.update(rell=self.rell, mt=self.mt, vcard=vocab.VCARD, dcterms=vocab.DCTERMS)
        for sid in service_ids:
            if re.fullmatch(r"[A-Za-z][A-Za-z0-9_-]*", sid) and sid not in out:
                out[sid] = self.service(sid)
        return out


NS = Namespaces()


def _ns_iri(sid: str, local: str) -> IRI:
    return IRI(NS.service(sid) + quote(local, safe="-._~"))


def resource_class(service_id: str, type_id: str) -> IRI:
    return _ns_iri(service_id, type_id)


def representation_class(service_id: str, representation_id: str) -> IRI:
    return _ns_iri(service_id, representation_id)


def link_property(service_id: str, link: LinkSpec) -> IRI:
    """Property asserted for instances of *link*: its id, else its link type, else rell:link."""
    if link.id:
        return _ns_iri(service_id, link.id)
    if link.link_type:
        return _ns_iri(service_id, link.link_type)
    return RELL_LINK


def media_type_class(media_type: str) -> IRI:
    """mt:text.html for text/html; '+' becomes '-' (mt:application.atom-xml)."""
    local = media_type.strip().lower().replace("/", ".").replace("+", "-")
    return IRI(MT_NS + quote(local, safe="-._~"))


def _media_type_parent(media_type: str) -> Optional[str]:
    major, _, minor = media_type.lower().partition("/")
    if not minor:
        return None
    if minor.endswith("+xml") and media_type.lower() != "application/xml":
        return "application/xml"
    return major


# -- Layers 1 and 2 -----------------------------------------------------------


def _insert_all(store: QuadStore, quads) -> int:
    with store.lock:
        return sum(1 for q in quads if store.insert(q))


def _shipped(name: str) -> list[Quad]:
    text = resources.files("rellharvest").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    return parse_turtle(text)


def emit_upper_ontology(store: QuadStore) -> int:
    return _insert_all(store, _shipped("upper.ttl"))


def emit_media_type_taxonomy(store: QuadStore) -> int:
    return _insert_all(store, _shipped("mediatypes.ttl"))


def ensure_media_type_class(store: QuadStore, media_type: str) -> int:
    """Declare the class for *media_type* and its ancestors if missing.

    Uncurated ``+xml`` types hang below application/xml, everything else
    below its top-level type. For the curated types this reproduces the
    shipped taxonomy exactly.
    """
    quads = []
    current: Optional[str] = media_type.strip().lower()
    while current:
        cls = media_type_class(current)
        parent = _media_type_parent(current)
        quads.append(Quad(cls, RDF_TYPE, OWL_CLASS))
        quads.append(Quad(cls, LABEL, Literal(current)))
        quads.append(Quad(cls, SUBCLASS, media_type_class(parent) if parent else RELL_REPRESENTATION))
        current = parent
    return _insert_all(store, quads)


def domain_ontology_quads(desc: RellDescription) -> list[Quad]:
    sid = desc.service_id
    quads: list[Quad] = []

    def declare(subject, kind, label=None, comment=None):
        quads.append(Quad(subject, RDF_TYPE, kind))
        if label:
            quads.append(Quad(subject, LABEL, Literal(label)))
        if comment:
            quads.append(Quad(subject, COMMENT, Literal(comment)))

    for rt in desc.resources:
        cls = resource_class(sid, rt.id)
        declare(cls, OWL_CLASS, rt.name, rt.description)
        quads.append(Quad(cls, SUBCLASS, RELL_RESOURCE))
        if rt.is_collection:
            quads.append(Quad(cls, SUBCLASS, RELL_COLLECTION))
        for rep in rt.representations:
            rcls = representation_class(sid, rep.id)
            declare(rcls, OWL_CLASS, rep.media_type)
            quads.append(Quad(rcls, SUBCLASS, media_type_class(rep.media_type)))
    for lt in desc.link_types:
        prop = _ns_iri(sid, lt.id)
        declare(prop, OWL_OBJECT_PROPERTY, lt.name, lt.description)
        quads.append(Quad(prop, SUBPROPERTY, RELL_LINK))
    for rt, _, link in desc.iter_links():
        if not link.id:
            continue
        prop = _ns_iri(sid, link.id)
        declare(prop, OWL_OBJECT_PROPERTY)
        parent = _ns_iri(sid, link.link_type) if link.link_type else RELL_LINK
        quads.append(Quad(prop, SUBPROPERTY, parent))
        quads.append(Quad(prop, DOMAIN, resource_class(sid, rt.id)))
        if link.is_collection:
            quads.append(Quad(prop, RANGE, resource_class(sid, rt.id)))
        elif link.target:
            quads.append(Quad(prop, RANGE, resource_class(sid, link.target)))
    return quads


def emit_domain_ontology(store: QuadStore, desc: RellDescription) -> int:
    added = 0
    for rt in desc.resources:
        for rep in rt.representations:
            added += ensure_media_type_class(store, rep.media_type)
    return added + _insert_all(store, domain_ontology_quads(desc))


# -- Layers 3 and 4 -----------------------------------------------------------


def make_graph_id(record: CrawlRecord) -> IRI:
    digest = hashlib.sha256(record.final_uri.encode("utf-8") + b"\x00" + record.body).hexdigest()
    return IRI(NS.service(record.resource_type[0]) + "r" + digest[:12])


def _representation_class_of(record: CrawlRecord) -> IRI:
    if record.representation_id:
        return representation_class(record.resource_type[0], record.representation_id)
    return media_type_class(record.media_type)


def emit_provenance(store: QuadStore, record: CrawlRecord, aliases: Optional[Mapping[str, str]] = None) -> int:
    aliases = aliases or {}
    g = make_graph_id(record)
    added = 0
    if not record.representation_id and record.media_type:
        added += ensure_media_type_class(store, record.media_type)
    resource = aliases.get(record.resource_uri, record.resource_uri)
    return added + _insert_all(store, [
        Quad(g, RDF_TYPE, _representation_class_of(record), g),
        Quad(g, RELL_REPRESENTS, IRI(resource), g),
    ])


def emit_individuals(store: QuadStore, record: CrawlRecord, aliases: Optional[Mapping[str, str]] = None) -> int:
    """Type the resource and assert one quad per in-scope or collection link."""
    aliases = aliases or {}
    g = make_graph_id(record)
    sid, tid = record.resource_type
    subject = IRI(aliases.get(record.resource_uri, record.resource_uri))
    quads = []
    if not record.continuation:
        quads.append(Quad(subject, RDF_TYPE, resource_class(sid, tid), g))
    for link in record.link_occurrences:
        if link.kind is LinkClass.IN_SCOPE:
            target = IRI(aliases.get(link.uri, link.uri))
        elif link.kind is LinkClass.COLLECTION_SELF:
            target = subject
        else:
            continue
        quads.append(Quad(subject, link_property(sid, link.occurrence.link), target, g))
    return _insert_all(store, quads)


def _normalize_space(value: str) -> str:
    return " ".join(value.split())


def apply_extraction_rules(store: QuadStore, rules: Optional[ExtractionRuleSet], record: CrawlRecord,
                           doc: DocTree, aliases: Optional[Mapping[str, str]] = None,
                           warnings: Optional[list] = None) -> int:
    """Apply the rules registered for the record's type; a no-op without any."""
    if rules is None or not isinstance(doc, DocTree):
        return 0
    aliases = aliases or {}
    g = make_graph_id(record)
    subject = IRI(aliases.get(record.resource_uri, record.resource_uri))
    quads = []
    for rule in rules.rules_for(record.resource_type):
        predicate = IRI(rule.predicate)
        for value in evaluate(rule.selector, doc):
            if rule.object_kind is ObjectKind.IRI:
                uri = resolve_reference(record.final_uri, value)
                if uri is None:
                    message = f"{record.final_uri}: {value!r} is not a resolvable IRI for {rule.predicate}"
                    log.warning(message)
                    if warnings is not None:
                        warnings.append(message)
                    continue
                obj = IRI(aliases.get(uri, uri))
            else:
                text = _normalize_space(value)
                if not text:
                    continue
                obj = Literal(text, rule.datatype, rule.language)
            quads.append(Quad(subject, predicate, obj, g))
    return _insert_all(store, quads)
