"""Representation trees and the XPath-subset selectors evaluated over them.

XML media types parse strictly through expat. HTML parses tolerantly with
a fixed set of repair rules (see ``docs/html-repair.md``) so the same bytes
always yield the same tree. Names are matched by local name only.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from functools import lru_cache
from html.parser import HTMLParser
from typing import Iterator, Optional, Sequence, Union
from urllib.parse import urljoin, urldefrag, urlsplit

from .errors import (
    DocumentParseError,
    NormalizationError,
    SelectorSyntaxError,
    UnsupportedSelectorError,
)

# -- tree ---------------------------------------------------------------------


class Node:
    __slots__ = ("parent", "order")

    def __init__(self):
        self.parent: Optional[Node] = None
        self.order = -1


class Text(Node):
    __slots__ = ("value",)

    def __init__(self, value: str):
        super().__init__()
        self.value = value

    def __repr__(self):
        return f"Text({self.value!r})"


class Attr(Node):
    __slots__ = ("name", "value")

    def __init__(self, name: str, value: str):
        super().__init__()
        self.name = name
        self.value = value

    def __repr__(self):
        return f"Attr({self.name}={self.value!r})"


class Element(Node):
    __slots__ = ("name", "attributes", "children")

    def __init__(self, name: str, attributes: Sequence[tuple[str, str]] = ()):
        super().__init__()
        self.name = name
        self.attributes = [Attr(n, v) for n, v in attributes]
        self.children: list[Union[Element, Text]] = []

    def get(self, name: str, default=None):
        for a in self.attributes:
            if a.name == name:
                return a.value
        return default

    def append(self, node):
        self.children.append(node)
        return node

    def __repr__(self):
        return f"<{self.name} {len(self.children)} children>"


class DocTree(Node):
    """Parsed representation: a document node holding one root element."""

    __slots__ = ("children", "source_media_type", "nodes")

    def __init__(self, root: Element, source_media_type: str):
        super().__init__()
        self.children = [root]
        self.source_media_type = source_media_type
        self.nodes: list[Node] = []
        self._finish()

    @property
    def root(self) -> Element:
        return self.children[0]

    def _finish(self):
        # preorder numbering: element, its attributes, then its children
        nodes = [self]
        self.order = 0
        stack = [(self, iter(self.children))]
        while stack:
            parent, it = stack[-1]
            child = next(it, None)
            if child is None:
                stack.pop()
                continue
            child.parent = parent
            child.order = len(nodes)
            nodes.append(child)
            if isinstance(child, Element):
                for attr in child.attributes:
                    attr.parent = child
                    attr.order = len(nodes)
                    nodes.append(attr)
                stack.append((child, iter(child.children)))
        self.nodes = nodes


@dataclass(frozen=True)
class OpaqueRepresentation:
    """Marker for representations that cannot be parsed into a tree."""

    media_type: str
    size: int


def string_value(node: Node) -> str:
    if isinstance(node, (Attr, Text)):
        return node.value
    parts = []
    stack = list(reversed(node.children))
    while stack:
        n = stack.pop()
        if isinstance(n, Text):
            parts.append(n.value)
        else:
            stack.extend(reversed(n.children))
    return "".join(parts)


def iter_elements(node) -> Iterator[Element]:
    """Elements below *node* (inclusive if it is an element), preorder."""
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Element):
            yield n
        if isinstance(n, (Element, DocTree)):
            stack.extend(reversed([c for c in n.children if isinstance(c, Element)]))


# -- XML ----------------------------------------------------------------------


def _local(name: str) -> str:
    if name.startswith("{"):
        return name.rpartition("}")[2]
    return name


def _from_etree(el: ET.Element) -> Element:
    out = Element(_local(el.tag), [(_local(k), v) for k, v in el.attrib.items()])
    if el.text:
        out.append(Text(el.text))
    for child in el:
        if not isinstance(child.tag, str):  # comments / processing instructions
            if child.tail:
                _append_text(out, child.tail)
            continue
        out.append(_from_etree(child))
        if child.tail:
            out.append(Text(child.tail))
    return out


def _append_text(el: Element, value: str):
    if el.children and isinstance(el.children[-1], Text):
        el.children[-1].value += value
    else:
        el.append(Text(value))


def parse_xml(body: bytes, media_type: str = "application/xml") -> DocTree:
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        line, column = exc.position
        raise DocumentParseError(f"XML is not well-formed: {exc}", line, column) from None
    return DocTree(_from_etree(root), media_type)


# -- HTML ---------------------------------------------------------------------

VOID_ELEMENTS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)
HEAD_ELEMENTS = frozenset("base link meta noscript script style title".split())
# start tags that implicitly close an open <p>
P_CLOSERS = frozenset(
    "address article aside blockquote div dl fieldset footer form h1 h2 h3 h4 h5 h6 "
    "header hr main nav ol p pre section table ul".split()
)
SCOPE_BOUNDARY = frozenset("applet button caption html marquee object table td th template".split())
# tag -> (open tags it implicitly closes, tags that stop the search)
IMPLIED_END = {
    "p": ({"p"}, SCOPE_BOUNDARY),
    "li": ({"li"}, SCOPE_BOUNDARY | {"ul", "ol"}),
    "dt": ({"dt", "dd"}, SCOPE_BOUNDARY | {"dl"}),
    "dd": ({"dt", "dd"}, SCOPE_BOUNDARY | {"dl"}),
    "tr": ({"tr"}, {"table", "tbody", "thead", "tfoot"}),
    "td": ({"td", "th"}, {"tr", "table"}),
    "th": ({"td", "th"}, {"tr", "table"}),
    "tbody": ({"tbody", "thead", "tfoot"}, {"table"}),
    "thead": ({"tbody", "thead", "tfoot"}, {"table"}),
    "tfoot": ({"tbody", "thead", "tfoot"}, {"table"}),
    "option": ({"option"}, {"select", "datalist"}),
}


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.html = Element("html")
        self.head: Optional[Element] = None
        self.body: Optional[Element] = None
        self.stack: list[Element] = []  # open elements below head/body

    # structure helpers

    def _ensure_head(self):
        if self.head is None:
            self.head = self.html.append(Element("head"))

    def _ensure_body(self):
        if self.body is None:
            self._ensure_head()
            self.stack = []
            self.body = self.html.append(Element("body"))

    def _in_head(self) -> bool:
        return self.body is None

    def _current(self) -> Element:
        if self.stack:
            return self.stack[-1]
        if self._in_head():
            self._ensure_head()
            return self.head
        return self.body

    def _pop_through(self, closes, stops):
        for i in range(len(self.stack) - 1, -1, -1):
            name = self.stack[i].name
            if name in closes:
                del self.stack[i:]
                return
            if name in stops:
                return

    # parser callbacks

    def handle_starttag(self, tag, attrs):
        seen = set()
        clean = []
        for name, value in attrs:
            if name in seen:
                continue
            seen.add(name)
            clean.append((name, "" if value is None else value))
        if tag == "html":
            for name, value in clean:
                if self.html.get(name) is None:
                    self.html.attributes.append(Attr(name, value))
            return
        if tag == "head":
            if self.head is None and self.body is None:
                self._ensure_head()
            return
        if tag == "body":
            self._ensure_body()
            return
        if self._in_head():
            in_head_content = any(e.name in HEAD_ELEMENTS for e in self.stack)
            if tag not in HEAD_ELEMENTS and not in_head_content:
                self._ensure_body()
        else:
            if tag in P_CLOSERS:
                self._pop_through(*IMPLIED_END["p"])
            if tag in IMPLIED_END and tag != "p":
                self._pop_through(*IMPLIED_END[tag])
        el = self._current().append(Element(tag, clean))
        if tag not in VOID_ELEMENTS:
            self.stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag not in VOID_ELEMENTS and self.stack and self.stack[-1].name == tag:
            self.stack.pop()

    def handle_endtag(self, tag):
        if tag in VOID_ELEMENTS or tag in ("html", "body"):
            return
        if tag == "head":
            if self._in_head():
                self.stack = []
                self._ensure_body()
            return
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].name == tag:
                del self.stack[i:]
                return
        # stray end tag: ignored

    def handle_data(self, data):
        if self._in_head() and not any(e.name in HEAD_ELEMENTS for e in self.stack):
            if not data.strip():
                return
            self._ensure_body()
        _append_text(self._current(), data)

    def finish(self) -> Element:
        self.close()
        self._ensure_body()
        return self.html


def parse_html(body: Union[bytes, str], media_type: str = "text/html") -> DocTree:
    if isinstance(body, bytes):
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            text = body.decode("latin-1")
    else:
        text = body
    builder = _TreeBuilder()
    builder.feed(text)
    return DocTree(builder.finish(), media_type)


def is_xml_media_type(media_type: str) -> bool:
    mt = media_type.lower()
    return mt in ("application/xml", "text/xml") or mt.endswith("+xml")


def is_html_media_type(media_type: str) -> bool:
    return media_type.lower() == "text/html"


def parse_document(body: bytes, media_type: str) -> Union[DocTree, OpaqueRepresentation]:
    """Parse *body* according to *media_type*.

    Returns an :class:`OpaqueRepresentation` for media types without a
    tree parser (images and the like).
    """
    mt = media_type.split(";")[0].strip().lower()
    if is_html_media_type(mt):
        return parse_html(body, mt)
    if is_xml_media_type(mt):
        return parse_xml(body, mt)
    return OpaqueRepresentation(mt, len(body))


# -- selectors ----------------------------------------------------------------


@dataclass(frozen=True)
class Predicate:
    position: Optional[int] = None
    attribute: Optional[str] = None
    value: Optional[str] = None

    def render(self) -> str:
        if self.position is not None:
            return f"[{self.position}]"
        quote = "'" if "'" not in self.value else '"'
        return f"[@{self.attribute}={quote}{self.value}{quote}]"


@dataclass(frozen=True)
class Step:
    """One location step.

    ``descendant`` marks a step reached through ``//``; ``kind`` is
    ``element``, ``attribute`` or ``text``; ``name`` None means ``*``.
    """

    kind: str
    name: Optional[str] = None
    descendant: bool = False
    predicates: tuple[Predicate, ...] = ()

    def render(self) -> str:
        if self.kind == "attribute":
            body = f"@{self.name}"
        elif self.kind == "text":
            body = "text()"
        else:
            body = self.name or "*"
        return body + "".join(p.render() for p in self.predicates)


@dataclass(frozen=True)
class Selector:
    source: str
    absolute: bool
    steps: tuple[Step, ...]

    def render(self) -> str:
        out = []
        for i, step in enumerate(self.steps):
            if step.descendant:
                out.append("//")
            elif i > 0 or self.absolute:
                out.append("/")
            out.append(step.render())
        if not self.steps and self.absolute:
            out.append("/")
        return "".join(out)


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*(?::[A-Za-z_][A-Za-z0-9_.-]*)?")
_AXES = ("ancestor-or-self", "ancestor", "attribute", "child", "descendant-or-self", "descendant",
         "following-sibling", "following", "namespace", "parent", "preceding-sibling", "preceding", "self")
_NODE_TYPES = {"node", "comment", "processing-instruction"}


class _SelectorParser:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0

    def error(self, message, offset=None):
        raise SelectorSyntaxError(message, self.pos if offset is None else offset)

    def unsupported(self, construct, offset=None):
        raise UnsupportedSelectorError(construct, self.pos if offset is None else offset)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self, n=1) -> str:
        return self.src[self.pos : self.pos + n]

    def parse(self) -> Selector:
        self.skip_ws()
        if not self.src.strip():
            self.error("empty selector")
        absolute = False
        steps = []
        descendant = False
        if self.peek(2) == "//":
            absolute, descendant = True, True
            self.pos += 2
        elif self.peek() == "/":
            absolute = True
            self.pos += 1
            self.skip_ws()
            if self.pos >= len(self.src):
                return Selector(self.src, True, ())
        while True:
            self.skip_ws()
            step = self.parse_step(descendant)
            if steps and steps[-1].kind != "element":
                self.error("attribute and text() steps must come last")
            steps.append(step)
            self.skip_ws()
            if self.pos >= len(self.src):
                break
            if self.peek(2) == "//":
                descendant = True
                self.pos += 2
            elif self.peek() == "/":
                descendant = False
                self.pos += 1
            elif self.peek() == "|":
                self.unsupported("union operator '|'")
            else:
                self.error(f"unexpected {self.peek()!r}")
        return Selector(self.src, absolute, tuple(steps))

    def parse_step(self, descendant: bool) -> Step:
        start = self.pos
        ch = self.peek()
        if not ch:
            self.error("missing step")
        if self.peek(2) == "..":
            self.unsupported("parent step '..'")
        if ch == ".":
            self.unsupported("self step '.'")
        if ch == "$":
            self.unsupported("variable reference '$'")
        if ch == "@":
            self.pos += 1
            self.skip_ws()
            if self.peek() == "*":
                self.unsupported("attribute wildcard '@*'")
            name = self.parse_name()
            self.skip_ws()
            if self.peek() == "[":
                self.unsupported("predicate on attribute step")
            return Step("attribute", name, descendant)
        if ch == "*":
            self.pos += 1
            name = None
        else:
            m = _NAME_RE.match(self.src, self.pos)
            if not m:
                self.error(f"expected a step, found {ch!r}")
            self.pos = m.end()
            name = m.group(0)
            after = self.pos
            self.skip_ws()
            if self.peek(2) == "::":
                if name in _AXES:
                    self.unsupported(f"axis '{name}::'", start)
                self.error(f"unknown axis {name!r}", start)
            if self.peek() == "(":
                if name == "text":
                    self.pos += 1
                    self.skip_ws()
                    if self.peek() != ")":
                        self.error("text() takes no arguments")
                    self.pos += 1
                    preds = self.parse_predicates(positional_only=True)
                    return Step("text", None, descendant, preds)
                if name in _NODE_TYPES:
                    self.unsupported(f"node test '{name}()'", start)
                self.unsupported(f"function '{name}()'", start)
            self.pos = after
            name = name.rpartition(":")[2]
        preds = self.parse_predicates()
        return Step("element", name, descendant, preds)

    def parse_name(self) -> str:
        m = _NAME_RE.match(self.src, self.pos)
        if not m:
            self.error("expected a name")
        self.pos = m.end()
        return m.group(0).rpartition(":")[2]

    def parse_predicates(self, positional_only=False) -> tuple[Predicate, ...]:
        preds = []
        while True:
            self.skip_ws()
            if self.peek() != "[":
                return tuple(preds)
            open_at = self.pos
            self.pos += 1
            self.skip_ws()
            ch = self.peek()
            if ch.isdigit():
                m = re.compile(r"\d+").match(self.src, self.pos)
                self.pos = m.end()
                self.skip_ws()
                if self.peek() in ("+", "-", "*", "<", ">", "=", "!") or self.src.startswith(("div", "mod"), self.pos):
                    self.unsupported("arithmetic or comparison in predicate")
                if self.peek() == ".":
                    self.unsupported("non-integer position")
                pred = Predicate(position=int(m.group(0)))
            elif ch == "@" and not positional_only:
                self.pos += 1
                self.skip_ws()
                name = self.parse_name()
                self.skip_ws()
                if self.peek() == "]":
                    self.unsupported("attribute existence predicate", open_at)
                if self.peek(2) in ("!=", "<=", ">=") or self.peek() in ("<", ">"):
                    self.unsupported("comparison other than '='")
                if self.peek() != "=":
                    self.error("expected '='")
                self.pos += 1
                self.skip_ws()
                quote = self.peek()
                if quote not in ("'", '"'):
                    if quote.isdigit():
                        self.unsupported("numeric comparison")
                    self.error("expected a quoted string")
                end = self.src.find(quote, self.pos + 1)
                if end < 0:
                    self.error("unterminated string")
                value = self.src[self.pos + 1 : end]
                self.pos = end + 1
                pred = Predicate(attribute=name, value=value)
            else:
                m = _NAME_RE.match(self.src, self.pos)
                if m and self.src[m.end() : m.end() + 1] == "(":
                    self.unsupported(f"function '{m.group(0)}()'")
                if ch == "$":
                    self.unsupported("variable reference '$'")
                if ch == "." or m:
                    self.unsupported("general predicate expression")
                self.error("expected a position or @attribute='value'")
            self.skip_ws()
            op = re.match(r"(and|or)\b", self.src[self.pos:])
            if op:
                self.unsupported(f"boolean operator '{op.group(1)}' in predicate")
            if self.peek() != "]":
                self.error("expected ']'")
            self.pos += 1
            preds.append(pred)


@lru_cache(maxsize=1024)
def parse_selector(source: str) -> Selector:
    """Parse a selector in the supported XPath subset (see ``docs/selector-grammar.md``)."""
    return _SelectorParser(source).parse()


def _name_ok(step: Step, name: str) -> bool:
    return step.name is None or step.name == name


def _apply_predicates(nodes: list, predicates: Sequence[Predicate]) -> list:
    for pred in predicates:
        if pred.position is not None:
            nodes = nodes[pred.position - 1 : pred.position] if pred.position >= 1 else []
        else:
            nodes = [n for n in nodes if n.get(pred.attribute) == pred.value]
    return nodes


def _step_from(base, step: Step) -> list:
    if step.kind == "attribute":
        if isinstance(base, Element):
            return [a for a in base.attributes if a.name == step.name]
        return []
    children = getattr(base, "children", ())
    if step.kind == "text":
        found = [c for c in children if isinstance(c, Text)]
    else:
        found = [c for c in children if isinstance(c, Element) and _name_ok(step, c.name)]
    return _apply_predicates(found, step.predicates)


def select_nodes(sel: Selector, doc: DocTree, context: Optional[Node] = None) -> list[Node]:
    if sel.absolute or context is None:
        nodes: list[Node] = [doc]
    else:
        nodes = [context]
    for step in sel.steps:
        out = {}
        for ctx in nodes:
            bases = [ctx]
            if step.descendant:
                bases = [ctx] if isinstance(ctx, DocTree) else []
                bases.extend(iter_elements(ctx))
            for b in bases:
                for n in _step_from(b, step):
                    out[n.order] = n
        nodes = [out[k] for k in sorted(out)]
    return nodes


def evaluate(sel: Union[Selector, str], doc: DocTree, context: Optional[Node] = None) -> list[str]:
    """String values of the nodes *sel* selects, in document order."""
    if isinstance(sel, str):
        sel = parse_selector(sel)
    return [string_value(n) for n in select_nodes(sel, doc, context)]


# -- links --------------------------------------------------------------------


@dataclass(frozen=True)
class LinkOccurrence:
    link: object  # the declaring LinkSpec
    raw_value: str
    absolute_uri: Optional[str]

    @property
    def link_id(self) -> Optional[str]:
        return getattr(self.link, "id", None)

    @property
    def valid(self) -> bool:
        return self.absolute_uri is not None


def resolve_reference(base_uri: str, value: str) -> Optional[str]:
    """Resolve *value* against *base_uri*, drop the fragment and normalize.

    Returns None for references that cannot be resolved to an absolute URI.
    """
    from .crawler import normalize_uri

    ref = value.strip()
    if not ref or ref.startswith("#"):
        return None
    try:
        resolved, _ = urldefrag(urljoin(base_uri, ref))
        parts = urlsplit(resolved)
    except ValueError:
        return None
    if not parts.scheme:
        return None
    if parts.scheme.lower() in ("http", "https"):
        try:
            return normalize_uri(resolved)
        except NormalizationError:
            return None
    return resolved


def extract_links(doc: DocTree, base_uri: str, links: Sequence) -> list[LinkOccurrence]:
    """Evaluate each link's selector; one occurrence per selected value."""
    out = []
    for link in links:
        for value in evaluate(parse_selector(link.selector), doc):
            out.append(LinkOccurrence(link, value, resolve_reference(base_uri, value)))
    return out
