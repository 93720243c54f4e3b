"""Crawl, map and optionally compose and infer, producing one quad store."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .composition import ingest_identity_map
from .crawler import CrawlConfig, CrawlRecord, CrawlSummary, crawl
from .errors import DocumentParseError
from .mapping import (
    apply_extraction_rules,
    emit_domain_ontology,
    emit_individuals,
    emit_media_type_taxonomy,
    emit_provenance,
    emit_upper_ontology,
    make_graph_id,
)
from .model import RellDescription
from .rdf.closure import subproperty_closure
from .rdf.store import QuadStore
from .rules import ExtractionRuleSet
from .selectors import DocTree, parse_document


@dataclass
class HarvestResult:
    store: QuadStore
    records: list
    summary: Optional[CrawlSummary] = None
    warnings: list = field(default_factory=list)
    inferred: int = 0


def record_document(record: CrawlRecord) -> Optional[DocTree]:
    if not record.ok or not record.parsed_as:
        return None
    try:
        doc = parse_document(record.body, record.parsed_as)
    except DocumentParseError:
        return None
    return doc if isinstance(doc, DocTree) else None


def build_store(descs: Sequence[RellDescription], records: Sequence[CrawlRecord],
                rules: Optional[ExtractionRuleSet] = None, *, aliases=None,
                infer: bool = False, compose: bool = False,
                store: Optional[QuadStore] = None) -> HarvestResult:
    """Map finished crawl records into a store.

    Mapping runs after the crawl so that every redirect alias is known and
    applied to subjects and objects alike.
    """
    store = QuadStore() if store is None else store
    aliases = dict(aliases or {})
    for r in records:
        if r.final_uri != r.request_uri:
            aliases.setdefault(r.request_uri, r.final_uri)
    result = HarvestResult(store, list(records))
    emit_upper_ontology(store)
    emit_media_type_taxonomy(store)
    for desc in descs:
        emit_domain_ontology(store, desc)
    for record in records:
        if not record.ok:
            continue
        emit_provenance(store, record, aliases)
        emit_individuals(store, record, aliases)
        doc = record_document(record)
        if doc is None:
            continue
        apply_extraction_rules(store, rules, record, doc, aliases, result.warnings)
        if compose and rules is not None:
            for spec in rules.identity_maps_for(record.resource_type):
                ingest_identity_map(store, doc, spec, make_graph_id(record), record.final_uri,
                                    aliases, result.warnings)
    if infer:
        result.inferred = subproperty_closure(store)
    return result


def harvest(descs: Sequence[RellDescription], cfg: CrawlConfig,
            rules: Optional[ExtractionRuleSet] = None, *, infer: bool = False,
            compose: bool = False) -> HarvestResult:
    records: list[CrawlRecord] = []
    summary = crawl(descs, cfg, records.append)
    result = build_store(descs, records, rules, aliases=summary.aliases, infer=infer, compose=compose)
    result.summary = summary
    return result
