"""RDF terms and quads with a canonical total order."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from ..errors import TermError

_SCHEME_RE = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*:")
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LANG_RE = re.compile(r"[A-Za-z]+(-[A-Za-z0-9]+)*\Z")
_BLANK_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*\Z")


def _escape_literal(value: str) -> str:
    out = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not _SCHEME_RE.match(self.value):
            raise TermError(f"IRI must be absolute: {self.value!r}")
        if _IRI_FORBIDDEN.search(self.value):
            raise TermError(f"IRI contains a forbidden character: {self.value!r}")

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise TermError(f"literal lexical form must be a string: {self.lexical!r}")
        if self.datatype is not None and self.language is not None:
            raise TermError("a literal has either a datatype or a language tag, not both")
        if self.datatype is not None:
            IRI(self.datatype)
        if self.language is not None and not _LANG_RE.match(self.language):
            raise TermError(f"bad language tag {self.language!r}")

    def n3(self) -> str:
        body = f'"{_escape_literal(self.lexical)}"'
        if self.language is not None:
            return f"{body}@{self.language}"
        if self.datatype is not None:
            return f"{body}^^<{self.datatype}>"
        return body

    def __str__(self):
        return self.lexical


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self):
        if not isinstance(self.label, str) or not _BLANK_RE.match(self.label):
            raise TermError(f"bad blank node label {self.label!r}")

    def n3(self) -> str:
        return f"_:{self.label}"

    def __str__(self):
        return self.n3()


Term = Union[IRI, Literal, BlankNode]


def term_key(term: Term) -> tuple:
    """Canonical ordering: blank nodes, then IRIs, then literals."""
    if isinstance(term, BlankNode):
        return (0, term.label, "", "")
    if isinstance(term, IRI):
        return (1, term.value, "", "")
    return (2, term.lexical, term.datatype or "", term.language or "")


@dataclass(frozen=True, slots=True)
class Quad:
    subject: Union[IRI, BlankNode]
    predicate: IRI
    object: Term
    graph: Optional[IRI] = None

    def __post_init__(self):
        if not isinstance(self.subject, (IRI, BlankNode)):
            raise TermError(f"subject must be an IRI or blank node: {self.subject!r}")
        if not isinstance(self.predicate, IRI):
            raise TermError(f"predicate must be an IRI: {self.predicate!r}")
        if not isinstance(self.object, (IRI, BlankNode, Literal)):
            raise TermError(f"object must be an RDF term: {self.object!r}")
        if self.graph is not None and not isinstance(self.graph, IRI):
            raise TermError(f"graph name must be an IRI: {self.graph!r}")

    @property
    def triple(self) -> tuple:
        return (self.subject, self.predicate, self.object)

    def n3(self) -> str:
        parts = [self.subject.n3(), self.predicate.n3(), self.object.n3()]
        if self.graph is not None:
            parts.append(self.graph.n3())
        return " ".join(parts) + " ."


def quad_key(q: Quad) -> tuple:
    g = (0,) if q.graph is None else (1,) + term_key(q.graph)
    return (g, term_key(q.subject), term_key(q.predicate), term_key(q.object))
