"""Cross-service composition through owl:sameAs.

An identity document (a "user map") lists, per person, the IRIs that the
same person has in several services. Each group becomes a chain of
owl:sameAs statements; equivalence is recovered at query time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import SelectorSyntaxError, UnsupportedSelectorError
from .rdf.closure import SAMEAS
from .rdf.query import BGPQuery, bgp_query
from .rdf.store import QuadStore
from .rdf.terms import IRI, Quad
from .selectors import DocTree, evaluate, parse_selector, resolve_reference, select_nodes

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentityMapSpec:
    """Where the identity groups are in a glue-service representation.

    ``group`` selects one node per person; ``member`` is evaluated relative
    to each group node and yields that person's IRIs.
    """

    type: str
    group: str
    member: str
    service: Optional[str] = None

    def __post_init__(self):
        if not self.type or not self.group or not self.member:
            raise ValueError("identity-map needs type, group and member")
        for source in (self.group, self.member):
            try:
                parse_selector(source)
            except (SelectorSyntaxError, UnsupportedSelectorError) as exc:
                raise ValueError(f"identity-map selector {source!r}: {exc}") from None

    def applies_to(self, resource_type: tuple[str, str]) -> bool:
        service, type_id = resource_type
        return type_id == self.type and self.service in (None, service)


def identity_groups(doc: DocTree, spec: IdentityMapSpec, base_uri: str,
                    aliases: Optional[Mapping[str, str]] = None,
                    warnings: Optional[list] = None) -> list[list[str]]:
    """Resolved member IRIs per group, in document order, without duplicates."""
    aliases = aliases or {}
    groups = []
    for node in select_nodes(parse_selector(spec.group), doc):
        members: list[str] = []
        for value in evaluate(spec.member, doc, node):
            uri = resolve_reference(base_uri, value)
            if uri is None:
                if warnings is not None:
                    warnings.append(f"identity member {value!r} is not a resolvable URI")
                continue
            uri = aliases.get(uri, uri)
            if uri not in members:
                members.append(uri)
        groups.append(members)
    return groups


def ingest_identity_map(store: QuadStore, doc: DocTree, spec: IdentityMapSpec, graph: IRI,
                        base_uri: str = "", aliases: Optional[Mapping[str, str]] = None,
                        warnings: Optional[list] = None) -> int:
    """Assert u1 sameAs u2, u2 sameAs u3, ... for every group, in *graph*.

    Groups with fewer than two members are skipped with a warning. Returns
    the number of new quads.
    """
    added = 0
    for members in identity_groups(doc, spec, base_uri, aliases, warnings):
        if len(members) < 2:
            message = f"identity group {members!r} has fewer than two members; skipped"
            log.warning(message)
            if warnings is not None:
                warnings.append(message)
            continue
        for a, b in zip(members, members[1:]):
            if store.insert(Quad(IRI(a), SAMEAS, IRI(b), graph)):
                added += 1
    return added


def merge_stores(*stores: QuadStore) -> QuadStore:
    merged = QuadStore()
    for s in stores:
        merged.update(s)
    return merged


def compose_and_query(stores: Union[QuadStore, list], query: Union[str, BGPQuery], *,
                      sameas_expansion: bool = True, infer_subproperties: bool = False) -> list[dict]:
    """Run *query* over the union of *stores* with owl:sameAs expansion on."""
    store = stores if isinstance(stores, QuadStore) else merge_stores(*stores)
    return bgp_query(store, query, sameas_expansion=sameas_expansion,
                     infer_subproperties=infer_subproperties)
