"""Canonical N-Quads export and N-Quads import."""
from __future__ import annotations

import re
from typing import Iterable

from ..errors import RDFSyntaxError, TermError
from .store import QuadStore
from .terms import IRI, BlankNode, Literal, Quad, quad_key


def _relabel(quads: list[Quad]) -> list[Quad]:
    labels = sorted({t.label for q in quads for t in (q.subject, q.object) if isinstance(t, BlankNode)})
    if not labels:
        return quads
    width = len(str(len(labels) - 1))
    # zero padding keeps string order equal to numeric order, so re-export is a fixed point
    mapping = {old: BlankNode(f"b{i:0{width}d}") for i, old in enumerate(labels)}

    def sub(t):
        return mapping[t.label] if isinstance(t, BlankNode) else t

    return [Quad(sub(q.subject), q.predicate, sub(q.object), q.graph) for q in quads]


def serialize_nquads(store: Iterable[Quad]) -> str:
    quads = sorted(_relabel(sorted(store, key=quad_key)), key=quad_key)
    return "".join(q.n3() + "\n" for q in quads)


_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def unescape(text: str, line=None) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = text[i + 1 : i + 2]
        if nxt in _ECHAR:
            out.append(_ECHAR[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            digits = text[i + 2 : i + 2 + width]
            if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
                raise RDFSyntaxError(f"bad \\{nxt} escape", line)
            out.append(chr(int(digits, 16)))
            i += 2 + width
        else:
            raise RDFSyntaxError(f"bad escape \\{nxt}", line)
    return "".join(out)


_TOKEN = re.compile(
    r"""\s*(?:
      (?P<iri><[^>]*>)
    | (?P<blank>_:[A-Za-z0-9_][A-Za-z0-9_.-]*)
    | (?P<lit>"(?:[^"\\\n\r]|\\.)*")(?:@(?P<lang>[A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^(?P<dt><[^>]*>))?
    | (?P<dot>\.)
    )""",
    re.VERBOSE,
)


def _parse_line(text: str, lineno: int):
    terms = []
    pos = 0
    end = len(text)
    while pos < end:
        rest = text[pos:].lstrip()
        if not rest or rest.startswith("#"):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise RDFSyntaxError(f"unexpected text {text[pos:].strip()[:20]!r}", lineno)
        pos = m.end()
        try:
            if m.group("iri"):
                terms.append(IRI(unescape(m.group("iri")[1:-1], lineno)))
            elif m.group("blank"):
                terms.append(BlankNode(m.group("blank")[2:]))
            elif m.group("lit"):
                dt = m.group("dt")
                terms.append(Literal(unescape(m.group("lit")[1:-1], lineno),
                                     unescape(dt[1:-1], lineno) if dt else None, m.group("lang")))
            else:
                terms.append(".")
                tail = text[pos:].strip()
                if tail and not tail.startswith("#"):
                    raise RDFSyntaxError("text after '.'", lineno)
                break
        except TermError as exc:
            raise RDFSyntaxError(str(exc), lineno) from None
    return terms


def parse_nquads(text: str) -> list[Quad]:
    quads = []
    # split on LF only: str.splitlines would also break on U+2028 inside literals
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.rstrip("\r")
        terms = _parse_line(line, lineno)
        if not terms:
            continue
        if terms[-1] != "." or len(terms) not in (4, 5):
            raise RDFSyntaxError("expected subject predicate object [graph] .", lineno)
        terms = terms[:-1]
        try:
            quads.append(Quad(*terms))
        except TermError as exc:
            raise RDFSyntaxError(str(exc), lineno) from None
    return quads


def load_nquads(text: str, store: QuadStore = None) -> QuadStore:
    store = QuadStore() if store is None else store
    store.update(parse_nquads(text))
    return store
