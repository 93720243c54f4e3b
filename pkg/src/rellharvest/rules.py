"""Declarative extraction rules: selector values become RDF statements.

Rule files use the XML vocabulary ``urn:rell:transforms:v1``::

    <transforms xmlns="urn:rell:transforms:v1">
      <prefix name="vcard" iri="http://www.w3.org/2006/vcard/ns#"/>
      <for-type service="school" type="person">
        <rule selector="//h1[@class='fn']" predicate="vcard:fn" object="literal"/>
        <rule selector="//link[@rel='me']/@href" predicate="vcard:url" object="iri"/>
      </for-type>
      <identity-map service="usermap" type="usermap" group="//user" member="account/@href"/>
    </transforms>

``service`` on ``for-type`` is optional; without it the entry applies to
the type id in every service. Predicates are absolute IRIs or prefixed
names declared with ``prefix``.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .composition import IdentityMapSpec
from .errors import RuleSetError, SelectorSyntaxError, TermError, UnsupportedSelectorError
from .rdf.terms import IRI, Literal
from .selectors import parse_selector

NS = "urn:rell:transforms:v1"


class ObjectKind(str, Enum):
    LITERAL = "literal"
    IRI = "iri"


@dataclass(frozen=True)
class Rule:
    selector: str
    predicate: str
    object_kind: ObjectKind = ObjectKind.LITERAL
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        try:
            parse_selector(self.selector)
        except (SelectorSyntaxError, UnsupportedSelectorError) as exc:
            raise RuleSetError(f"rule selector {self.selector!r}: {exc}") from None
        try:
            IRI(self.predicate)
            if self.datatype is not None:
                IRI(self.datatype)
            if self.object_kind is ObjectKind.LITERAL:
                Literal("x", self.datatype, self.language)
        except TermError as exc:
            raise RuleSetError(str(exc)) from None
        if self.object_kind is ObjectKind.IRI and (self.datatype or self.language):
            raise RuleSetError("datatype and language only apply to literal objects")


@dataclass(frozen=True)
class ExtractionRuleSet:
    # (service id or None, resource type id) -> rules
    entries: dict = field(default_factory=dict)
    identity_maps: tuple[IdentityMapSpec, ...] = ()
    prefixes: dict = field(default_factory=dict)

    def rules_for(self, resource_type: tuple[str, str]) -> list[Rule]:
        service, type_id = resource_type
        return list(self.entries.get((None, type_id), ())) + list(self.entries.get((service, type_id), ()))

    def identity_maps_for(self, resource_type: tuple[str, str]) -> list[IdentityMapSpec]:
        return [m for m in self.identity_maps if m.applies_to(resource_type)]

    def merged(self, other: "ExtractionRuleSet") -> "ExtractionRuleSet":
        entries = {k: tuple(v) for k, v in self.entries.items()}
        for key, rules in other.entries.items():
            entries[key] = entries.get(key, ()) + tuple(rules)
        return ExtractionRuleSet(entries, self.identity_maps + other.identity_maps,
                                 {**self.prefixes, **other.prefixes})

    def __len__(self):
        return sum(len(v) for v in self.entries.values())


def _expand(name: str, prefixes: dict, what: str) -> str:
    if ":" not in name:
        raise RuleSetError(f"{what} {name!r} is neither an IRI nor a prefixed name")
    prefix, _, local = name.partition(":")
    if prefix in prefixes:
        return prefixes[prefix] + local
    if local.startswith("//") or prefix in ("http", "https", "urn"):
        return name
    raise RuleSetError(f"undeclared prefix {prefix!r} in {what} {name!r}")


def parse_rules(document: Union[str, bytes]) -> ExtractionRuleSet:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise RuleSetError(f"malformed rule file: {exc}") from None
    if root.tag != f"{{{NS}}}transforms":
        raise RuleSetError(f"root element must be transforms in namespace {NS}")
    prefixes: dict[str, str] = {}
    entries: dict = {}
    maps = []
    for child in root:
        if not isinstance(child.tag, str):
            continue
        tag = child.tag.replace(f"{{{NS}}}", "")
        if tag == "prefix":
            name, iri = child.get("name"), child.get("iri")
            if not name or not iri:
                raise RuleSetError("prefix needs name and iri")
            prefixes[name] = iri
        elif tag == "for-type":
            type_id = child.get("type")
            if not type_id:
                raise RuleSetError("for-type needs a type attribute")
            key = (child.get("service"), type_id)
            rules = entries.setdefault(key, [])
            for rule_el in child:
                if rule_el.tag != f"{{{NS}}}rule":
                    raise RuleSetError(f"unexpected element {rule_el.tag} in for-type")
                selector = rule_el.get("selector")
                predicate = rule_el.get("predicate")
                if not selector or not predicate:
                    raise RuleSetError("rule needs selector and predicate")
                try:
                    kind = ObjectKind(rule_el.get("object", "literal"))
                except ValueError:
                    raise RuleSetError(f"object must be literal or iri, not {rule_el.get('object')!r}") from None
                datatype = rule_el.get("datatype")
                rules.append(Rule(
                    selector,
                    _expand(predicate, prefixes, "predicate"),
                    kind,
                    _expand(datatype, prefixes, "datatype") if datatype else None,
                    rule_el.get("lang"),
                ))
        elif tag == "identity-map":
            try:
                maps.append(IdentityMapSpec(
                    service=child.get("service"),
                    type=child.get("type") or "",
                    group=child.get("group") or "",
                    member=child.get("member") or "",
                ))
            except ValueError as exc:
                raise RuleSetError(str(exc)) from None
        else:
            raise RuleSetError(f"unexpected element {tag!r}")
    return ExtractionRuleSet({k: tuple(v) for k, v in entries.items()}, tuple(maps), prefixes)


def load_rules(path) -> ExtractionRuleSet:
    return parse_rules(Path(path).read_bytes())
