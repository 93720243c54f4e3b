"""ReLL service descriptions: domain types, XML parser, validator and resolver.

A description lists the resource types a service exposes, the media types
their representations come in, and the selectors that pull typed links out
of those representations. URI patterns only *describe* URIs; they are never
used to construct one.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from .errors import (
    AmbiguityError,
    DanglingReferenceError,
    DescriptionParseError,
    SelectorSyntaxError,
    ValidationError,
    VocabularyError,
)

RELL_NS = "urn:rell:v1"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*\Z")
HTTP_TOKEN_RE = re.compile(r"[!#$%&'*+.^_`|~0-9A-Za-z-]+\Z")


class LinkKind(str, Enum):
    NORMAL = "normal"
    COLLECTION = "collection"


@dataclass(frozen=True)
class ProtocolHint:
    scheme: str = "http"
    method: str = "GET"
    payload_template: Optional[str] = None

    @property
    def dereferenceable(self) -> bool:
        return self.scheme.lower() in ("http", "https") and self.method.upper() == "GET"


@dataclass(frozen=True)
class LinkSpec:
    id: Optional[str]
    selector: str
    link_type: Optional[str] = None
    target: Optional[str] = None
    kind: LinkKind = LinkKind.NORMAL
    protocol: Optional[ProtocolHint] = None

    @property
    def is_collection(self) -> bool:
        return self.kind is LinkKind.COLLECTION


@dataclass(frozen=True)
class RepresentationSpec:
    id: str
    media_type: str
    links: tuple[LinkSpec, ...] = ()
    schema_ref: Optional[str] = None


@dataclass(frozen=True)
class ResourceType:
    id: str
    name: str
    uri_pattern: Optional[str] = None
    representations: tuple[RepresentationSpec, ...] = ()
    description: Optional[str] = None

    @property
    def is_collection(self) -> bool:
        """A resource type is a collection when it declares a collection link."""
        return any(l.is_collection for r in self.representations for l in r.links)

    def matches(self, uri: str) -> bool:
        if self.uri_pattern is None:
            return False
        try:
            return _compiled(self.uri_pattern).fullmatch(uri) is not None
        except re.error:
            return False

    def representation_for(self, media_type: str) -> Optional[RepresentationSpec]:
        for rep in self.representations:
            if rep.media_type.lower() == media_type.lower():
                return rep
        return None


@dataclass(frozen=True)
class LinkTypeDecl:
    id: str
    name: Optional[str] = None
    description: Optional[str] = None


@dataclass(frozen=True)
class RellDescription:
    service_id: str
    service_name: str
    resources: tuple[ResourceType, ...]
    link_types: tuple[LinkTypeDecl, ...] = ()
    description: Optional[str] = None

    def resource(self, type_id: str) -> Optional[ResourceType]:
        for rt in self.resources:
            if rt.id == type_id:
                return rt
        return None

    def link_type(self, link_type_id: str) -> Optional[LinkTypeDecl]:
        for lt in self.link_types:
            if lt.id == link_type_id:
                return lt
        return None

    def iter_links(self) -> Iterator[tuple[ResourceType, RepresentationSpec, LinkSpec]]:
        for rt in self.resources:
            for rep in rt.representations:
                for link in rep.links:
                    yield rt, rep, link

    def owner_of(self, link: LinkSpec) -> Optional[ResourceType]:
        for rt, _, candidate in self.iter_links():
            if candidate is link:
                return rt
        return None


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    path: str
    message: str
    code: str = "invalid"

    def __str__(self) -> str:
        return f"{self.severity}: {self.path}: {self.message}"


# Diagnostic codes that surface as DanglingReferenceError from the parser.
REFERENCE_CODES = frozenset({"dangling-target", "dangling-link-type", "collection-target"})


@lru_cache(maxsize=512)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def pattern_problem(pattern: str) -> Optional[str]:
    """Return why *pattern* is not an acceptable URI pattern, or None.

    Only the portable regex subset is accepted: no inline groups or
    lookaround, no backreferences.
    """
    in_class = False
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\":
            nxt = pattern[i + 1 : i + 2]
            if not in_class and (nxt.isdigit() and nxt != "0" or nxt == "k"):
                return f"backreference '\\{nxt}' is not portable"
            i += 2
            continue
        if in_class:
            if ch == "]":
                in_class = False
        elif ch == "[":
            in_class = True
            if pattern[i + 1 : i + 2] == "]":
                i += 1
        elif ch == "(" and pattern[i + 1 : i + 2] == "?":
            return "group extensions '(?...)' are not portable"
        i += 1
    try:
        re.compile(pattern)
    except re.error as exc:
        return f"pattern does not compile: {exc}"
    return None


def media_type_problem(media_type: str) -> Optional[str]:
    if media_type.count("/") != 1 or any(c.isspace() for c in media_type):
        return "media type must be type/subtype without whitespace"
    major, minor = media_type.split("/")
    if not major or not minor:
        return "media type must be type/subtype without whitespace"
    return None


def validate_description(desc: RellDescription) -> list[Diagnostic]:
    """Check every structural invariant; an empty list means valid."""
    # local import: the selector engine is independent of this module
    from .selectors import parse_selector

    out: list[Diagnostic] = []
    root = f"service[{desc.service_id}]"

    def err(path, message, code="invalid"):
        out.append(Diagnostic("error", path, message, code))

    if not IDENTIFIER_RE.match(desc.service_id or ""):
        err(root, f"service id {desc.service_id!r} is not an identifier", "bad-identifier")
    if not desc.resources:
        err(root, "a service must provide at least one resource", "no-resources")

    # resource, representation, link and link-type ids share one namespace
    seen: dict[str, str] = {}

    def claim(ident, path):
        if ident is None:
            return
        if not IDENTIFIER_RE.match(ident):
            err(path, f"{ident!r} is not an identifier", "bad-identifier")
        elif ident in seen:
            err(path, f"duplicate id {ident!r} (first declared at {seen[ident]})", "duplicate-id")
        else:
            seen[ident] = path

    for lt in desc.link_types:
        claim(lt.id, f"{root}/linktype[{lt.id}]")

    resource_ids = {rt.id for rt in desc.resources}
    link_type_ids = {lt.id for lt in desc.link_types}
    for rt in desc.resources:
        rpath = f"{root}/resource[{rt.id}]"
        claim(rt.id, rpath)
        if rt.uri_pattern is not None:
            problem = pattern_problem(rt.uri_pattern)
            if problem:
                err(f"{rpath}/uri", problem, "bad-pattern")
        for rep in rt.representations:
            ppath = f"{rpath}/representation[{rep.id}]"
            claim(rep.id, ppath)
            problem = media_type_problem(rep.media_type)
            if problem:
                err(ppath, f"{problem}: {rep.media_type!r}", "bad-media-type")
            for n, link in enumerate(rep.links):
                lpath = f"{ppath}/link[{link.id if link.id else n}]"
                claim(link.id, lpath)
                if link.is_collection and link.target is not None:
                    err(lpath, f"collection link must not specify a target (got {link.target!r})",
                        "collection-target")
                elif link.target is not None and link.target not in resource_ids:
                    err(lpath, f"target {link.target!r} is not a declared resource type",
                        "dangling-target")
                if link.link_type is not None and link.link_type not in link_type_ids:
                    err(lpath, f"link type {link.link_type!r} is not declared", "dangling-link-type")
                try:
                    parse_selector(link.selector)
                except SelectorSyntaxError as exc:
                    err(f"{lpath}/selector", str(exc), "bad-selector")
                if link.protocol is not None:
                    if not HTTP_TOKEN_RE.match(link.protocol.method or ""):
                        err(f"{lpath}/protocol", f"method {link.protocol.method!r} is not an HTTP token",
                            "bad-method")
                    if not link.protocol.scheme:
                        err(f"{lpath}/protocol", "protocol scheme is empty", "bad-scheme")
    return out


# -- XML vocabulary ---------------------------------------------------------

_ALLOWED = {
    "service": ({"id", "name"}, {"description", "linktype", "resource"}),
    "linktype": ({"id", "name"}, {"description"}),
    "resource": ({"id", "name"}, {"description", "uri", "representation"}),
    "uri": ({"match"}, set()),
    "representation": ({"id", "mediatype", "schema"}, {"link"}),
    "link": ({"id", "type", "target", "kind"}, {"selector", "protocol"}),
    "selector": ({"xpath"}, set()),
    "protocol": ({"scheme", "method"}, {"payload"}),
    "description": (set(), set()),
    "payload": (set(), set()),
}
_TEXT_ELEMENTS = {"description", "payload"}


def _local(tag: str) -> tuple[Optional[str], str]:
    if tag.startswith("{"):
        ns, _, local = tag[1:].partition("}")
        return ns, local
    return None, tag


def _check_element(el: ET.Element, path: str) -> str:
    ns, local = _local(el.tag)
    if ns != RELL_NS or local not in _ALLOWED:
        raise VocabularyError(f"{path}: unknown element {el.tag!r}")
    attrs, children = _ALLOWED[local]
    for name in el.attrib:
        ans, alocal = _local(name)
        if ans == XSI_NS:
            continue
        if ans is not None or alocal not in attrs:
            raise VocabularyError(f"{path}: unknown attribute {name!r} on <{local}>")
    for child in el:
        cns, clocal = _local(child.tag)
        if cns != RELL_NS or clocal not in children:
            raise VocabularyError(f"{path}: element {child.tag!r} not allowed inside <{local}>")
    if local not in _TEXT_ELEMENTS:
        stray = [t for t in [el.text] + [c.tail for c in el] if t and t.strip()]
        if stray:
            raise VocabularyError(f"{path}: unexpected text {stray[0].strip()!r} in <{local}>")
    return local


def _required(el: ET.Element, attr: str, path: str) -> str:
    value = el.get(attr)
    if value is None:
        raise VocabularyError(f"{path}: <{_local(el.tag)[1]}> requires attribute {attr!r}")
    return value


def _children(el: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in el if c.tag == f"{{{RELL_NS}}}{name}"]


def _single(el: ET.Element, name: str, path: str, required=False) -> Optional[ET.Element]:
    found = _children(el, name)
    if len(found) > 1:
        raise VocabularyError(f"{path}: at most one <{name}> allowed")
    if required and not found:
        raise VocabularyError(f"{path}: <{name}> is required")
    return found[0] if found else None


def _text(el: Optional[ET.Element]) -> Optional[str]:
    if el is None:
        return None
    return (el.text or "").strip()


def _parse_link(el: ET.Element, path: str) -> LinkSpec:
    _check_element(el, path)
    kind_src = el.get("kind", "normal")
    try:
        kind = LinkKind(kind_src)
    except ValueError:
        raise VocabularyError(f"{path}: link kind must be 'normal' or 'collection', got {kind_src!r}")
    sel_el = _single(el, "selector", path, required=True)
    _check_element(sel_el, f"{path}/selector")
    protocol = None
    proto_el = _single(el, "protocol", path)
    if proto_el is not None:
        _check_element(proto_el, f"{path}/protocol")
        payload_el = _single(proto_el, "payload", f"{path}/protocol")
        if payload_el is not None:
            _check_element(payload_el, f"{path}/protocol/payload")
        protocol = ProtocolHint(
            scheme=proto_el.get("scheme", "http"),
            method=proto_el.get("method", "GET"),
            payload_template=payload_el.text if payload_el is not None else None,
        )
    return LinkSpec(
        id=el.get("id"),
        selector=_required(sel_el, "xpath", f"{path}/selector"),
        link_type=el.get("type"),
        target=el.get("target"),
        kind=kind,
        protocol=protocol,
    )


def _build(root: ET.Element) -> RellDescription:
    _check_element(root, "/")
    if _local(root.tag)[1] != "service":
        raise VocabularyError(f"document element must be <service>, got {root.tag!r}")
    sid = _required(root, "id", "/service")
    spath = f"service[{sid}]"
    link_types = []
    for lt in _children(root, "linktype"):
        _check_element(lt, f"{spath}/linktype")
        d = _single(lt, "description", f"{spath}/linktype")
        if d is not None:
            _check_element(d, f"{spath}/linktype/description")
        link_types.append(LinkTypeDecl(_required(lt, "id", f"{spath}/linktype"), lt.get("name"), _text(d)))
    resources = []
    for rel in _children(root, "resource"):
        rid = _required(rel, "id", f"{spath}/resource")
        rpath = f"{spath}/resource[{rid}]"
        _check_element(rel, rpath)
        uri_el = _single(rel, "uri", rpath)
        if uri_el is not None:
            _check_element(uri_el, f"{rpath}/uri")
        desc_el = _single(rel, "description", rpath)
        if desc_el is not None:
            _check_element(desc_el, f"{rpath}/description")
        reps = []
        for pel in _children(rel, "representation"):
            pid = _required(pel, "id", f"{rpath}/representation")
            ppath = f"{rpath}/representation[{pid}]"
            _check_element(pel, ppath)
            links = tuple(_parse_link(l, f"{ppath}/link") for l in _children(pel, "link"))
            reps.append(RepresentationSpec(pid, _required(pel, "mediatype", ppath), links, pel.get("schema")))
        resources.append(ResourceType(
            id=rid,
            name=_required(rel, "name", rpath),
            uri_pattern=_required(uri_el, "match", f"{rpath}/uri") if uri_el is not None else None,
            representations=tuple(reps),
            description=_text(desc_el),
        ))
    desc_el = _single(root, "description", spath)
    if desc_el is not None:
        _check_element(desc_el, f"{spath}/description")
    return RellDescription(
        service_id=sid,
        service_name=_required(root, "name", spath),
        resources=tuple(resources),
        link_types=tuple(link_types),
        description=_text(desc_el),
    )


def parse_description(document) -> RellDescription:
    """Parse and validate a ReLL XML document (``str`` or ``bytes``)."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        raise DescriptionParseError(f"malformed ReLL document: {exc}", line, column) from None
    desc = _build(root)
    diagnostics = validate_description(desc)
    if diagnostics:
        summary = "; ".join(str(d) for d in diagnostics)
        if any(d.code in REFERENCE_CODES for d in diagnostics):
            raise DanglingReferenceError(summary, diagnostics)
        raise ValidationError(summary, diagnostics)
    return desc


def load_description(path) -> RellDescription:
    with open(path, "rb") as fh:
        return parse_description(fh.read())


def serialize_description(desc: RellDescription) -> str:
    """Render *desc* back into the ReLL XML vocabulary."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>']

    def attrs(**kw):
        return "".join(f" {k}={quoteattr(v)}" for k, v in kw.items() if v is not None)

    out.append(f'<service xmlns="{RELL_NS}"{attrs(id=desc.service_id, name=desc.service_name)}>')
    if desc.description is not None:
        out.append(f"  <description>{escape(desc.description)}</description>")
    for lt in desc.link_types:
        if lt.description is None:
            out.append(f"  <linktype{attrs(id=lt.id, name=lt.name)}/>")
        else:
            out.append(f"  <linktype{attrs(id=lt.id, name=lt.name)}>"
                       f"<description>{escape(lt.description)}</description></linktype>")
    for rt in desc.resources:
        out.append(f"  <resource{attrs(id=rt.id, name=rt.name)}>")
        if rt.description is not None:
            out.append(f"    <description>{escape(rt.description)}</description>")
        if rt.uri_pattern is not None:
            out.append(f"    <uri{attrs(match=rt.uri_pattern)}/>")
        for rep in rt.representations:
            out.append(f"    <representation{attrs(id=rep.id, mediatype=rep.media_type, schema=rep.schema_ref)}>")
            for link in rep.links:
                kind = "collection" if link.is_collection else None
                out.append(f"      <link{attrs(id=link.id, type=link.link_type, target=link.target, kind=kind)}>")
                out.append(f"        <selector{attrs(xpath=link.selector)}/>")
                if link.protocol is not None:
                    p = link.protocol
                    if p.payload_template is None:
                        out.append(f"        <protocol{attrs(scheme=p.scheme, method=p.method)}/>")
                    else:
                        out.append(f"        <protocol{attrs(scheme=p.scheme, method=p.method)}>"
                                   f"<payload>{escape(p.payload_template)}</payload></protocol>")
                out.append("      </link>")
            out.append("    </representation>")
        out.append("  </resource>")
    out.append("</service>")
    return "\n".join(out) + "\n"


def resolve_resource_type(descs: Sequence[RellDescription], uri: str) -> Optional[tuple[str, str]]:
    """Find the single resource type whose URI pattern fully matches *uri*.

    Raises AmbiguityError when more than one type matches.
    """
    matches = [(d.service_id, rt.id) for d in descs for rt in d.resources if rt.matches(uri)]
    if len(matches) > 1:
        raise AmbiguityError(uri, matches)
    return matches[0] if matches else None


class DescriptionIndex:
    """Lookup helper over a fixed list of descriptions."""

    def __init__(self, descs: Iterable[RellDescription]):
        self.descriptions = tuple(descs)
        self._services = {d.service_id: d for d in self.descriptions}
        self._owners = {}
        for d in self.descriptions:
            for rt, rep, link in d.iter_links():
                self._owners[id(link)] = (d, rt, rep)

    def service(self, service_id: str) -> RellDescription:
        return self._services[service_id]

    def resource(self, key: tuple[str, str]) -> ResourceType:
        rt = self._services[key[0]].resource(key[1])
        if rt is None:
            raise KeyError(key)
        return rt

    def owner(self, link: LinkSpec):
        """(description, resource type, representation) declaring *link*."""
        return self._owners[id(link)]

    def resolve(self, uri: str) -> Optional[tuple[str, str]]:
        return resolve_resource_type(self.descriptions, uri)
