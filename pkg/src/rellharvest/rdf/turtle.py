"""Turtle export for one graph, plus a reader for the Turtle subset we ship.

The reader understands prefix declarations, IRIs, prefixed names, ``a``,
quoted literals with language or datatype, numbers and booleans, blank node
labels and the ``;`` / ``,`` abbreviations. Collections and ``[]`` are not
supported.
"""
from __future__ import annotations

import re
from typing import Iterable, Mapping, Optional

from ..errors import RDFSyntaxError, TermError
from .nquads import unescape
from .store import DEFAULT_GRAPH, QuadStore
from .terms import IRI, BlankNode, Literal, Quad, term_key
from . import vocab

_PN_LOCAL = re.compile(r"[A-Za-z0-9_]([A-Za-z0-9_.-]*[A-Za-z0-9_-])?\Z")


def _compact(iri: str, prefixes: Mapping[str, str]) -> Optional[str]:
    best = None
    for prefix, ns in prefixes.items():
        if iri.startswith(ns):
            local = iri[len(ns):]
            if (local == "" or _PN_LOCAL.match(local)) and (best is None or len(ns) > len(prefixes[best[0]])):
                best = (prefix, local)
    if best is None:
        return None
    return f"{best[0]}:{best[1]}"


def _term(t, prefixes) -> str:
    if isinstance(t, IRI):
        return _compact(t.value, prefixes) or t.n3()
    if isinstance(t, Literal) and t.datatype is not None:
        dt = _compact(t.datatype, prefixes)
        if dt is not None:
            return Literal(t.lexical, None, None).n3() + "^^" + dt
    return t.n3()


def serialize_turtle(store: QuadStore, graph=DEFAULT_GRAPH, prefixes: Mapping[str, str] = None) -> str:
    """Serialize the selected graph (default graph unless an IRI is given)."""
    prefixes = dict(vocab.PREFIXES if prefixes is None else prefixes)
    quads = store.match(g=graph if graph is not None else DEFAULT_GRAPH)
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(prefixes.items())]
    if quads:
        lines.append("")
    by_subject: dict = {}
    for q in quads:
        by_subject.setdefault(q.subject, []).append(q)
    rdf_type = IRI(vocab.RDF_TYPE)
    for subject in sorted(by_subject, key=term_key):
        preds: dict = {}
        for q in by_subject[subject]:
            preds.setdefault(q.predicate, []).append(q.object)
        order = sorted(preds, key=lambda p: (p != rdf_type, term_key(p)))
        parts = []
        for p in order:
            objs = ", ".join(_term(o, prefixes) for o in sorted(preds[p], key=term_key))
            pname = "a" if p == rdf_type else _term(p, prefixes)
            parts.append(f"{pname} {objs}")
        lines.append(f"{_term(subject, prefixes)} " + " ;\n    ".join(parts) + " .")
    return "\n".join(lines) + "\n"


_TOKENS = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<iri><[^>\s]*>)
    | (?P<prefix_kw>@prefix\b|PREFIX\b)
    | (?P<base_kw>@base\b|BASE\b)
    | (?P<lit>"(?:[^"\\\n\r]|\\.)*")(?:@(?P<lang>[A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^)?
    | (?P<blank>_:[A-Za-z0-9_][A-Za-z0-9_.-]*)
    | (?P<number>[+-]?(?:\d+\.\d+|\d+))
    | (?P<bool>true\b|false\b)
    | (?P<a>a\b)
    | (?P<pname>(?:[A-Za-z][A-Za-z0-9_.-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?)
    | (?P<punct>[.;,])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if not m:
            line = text.count("\n", 0, pos) + 1
            raise RDFSyntaxError(f"unexpected {text[pos:pos + 10]!r}", line)
        line = text.count("\n", 0, pos) + 1
        kind = m.lastgroup
        if kind == "lang":
            kind = "lit"
        if kind != "ws":
            if m.group("lit") is not None:
                kind = "lit"
            out.append((kind, m, line))
        pos = m.end()
    return out


def parse_turtle(text: str) -> list[Quad]:
    """Parse Turtle into default-graph quads."""
    tokens = _tokenize(text)
    prefixes: dict[str, str] = {}
    quads: list[Quad] = []
    i = 0

    def fail(msg, idx):
        line = tokens[idx][2] if idx < len(tokens) else None
        raise RDFSyntaxError(msg, line)

    def expand(pname, idx):
        prefix, _, local = pname.partition(":")
        if prefix not in prefixes:
            fail(f"undeclared prefix {prefix!r}", idx)
        return prefixes[prefix] + local

    def term(idx, position):
        if idx >= len(tokens):
            raise RDFSyntaxError("unexpected end of input", tokens[-1][2] if tokens else None)
        kind, m, _ = tokens[idx]
        try:
            if kind == "iri":
                return IRI(unescape(m.group("iri")[1:-1])), idx + 1
            if kind == "pname":
                return IRI(expand(m.group("pname"), idx)), idx + 1
            if kind == "a" and position == "p":
                return IRI(vocab.RDF_TYPE), idx + 1
            if kind == "blank" and position != "p":
                return BlankNode(m.group("blank")[2:]), idx + 1
            if position == "o":
                if kind == "lit":
                    lex = unescape(m.group("lit")[1:-1])
                    if m.group(0).endswith("^^"):
                        dt, nxt = term(idx + 1, "dt")
                        return Literal(lex, dt.value), nxt
                    return Literal(lex, None, m.group("lang")), idx + 1
                if kind == "number":
                    src = m.group("number")
                    dt = vocab.XSD + ("decimal" if "." in src else "integer")
                    return Literal(src, dt), idx + 1
                if kind == "bool":
                    return Literal(m.group("bool"), vocab.XSD + "boolean"), idx + 1
        except TermError as exc:
            fail(str(exc), idx)
        fail(f"unexpected {m.group(0)!r}", idx)

    def expect(idx, punct):
        if idx >= len(tokens) or tokens[idx][0] != "punct" or tokens[idx][1].group(0) != punct:
            fail(f"expected {punct!r}", idx)
        return idx + 1

    while i < len(tokens):
        kind, m, _ = tokens[i]
        if kind in ("prefix_kw", "base_kw"):
            sparql_style = not m.group(0).startswith("@")
            if kind == "base_kw":
                fail("@base is not supported", i)
            if i + 2 >= len(tokens) or tokens[i + 1][0] != "pname" or tokens[i + 2][0] != "iri":
                fail("malformed prefix declaration", i)
            name = tokens[i + 1][1].group(0)
            if not name.endswith(":"):
                fail("prefix name must end with ':'", i + 1)
            prefixes[name[:-1]] = tokens[i + 2][1].group(0)[1:-1]
            i += 3
            if not sparql_style:
                i = expect(i, ".")
            continue
        subject, i = term(i, "s")
        while True:
            predicate, i = term(i, "p")
            while True:
                obj, i = term(i, "o")
                quads.append(Quad(subject, predicate, obj))
                if i < len(tokens) and tokens[i][0] == "punct" and tokens[i][1].group(0) == ",":
                    i += 1
                    continue
                break
            if i < len(tokens) and tokens[i][0] == "punct" and tokens[i][1].group(0) == ";":
                i += 1
                if i < len(tokens) and tokens[i][0] == "punct" and tokens[i][1].group(0) == ".":
                    break
                continue
            break
        i = expect(i, ".")
    return quads


def load_turtle(text: str, store: QuadStore = None) -> QuadStore:
    store = QuadStore() if store is None else store
    store.update(parse_turtle(text))
    return store


__all__ = ["serialize_turtle", "parse_turtle", "load_turtle"]
