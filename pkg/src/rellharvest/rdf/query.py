"""SELECT queries over basic graph patterns.

Grammar (no OPTIONAL, FILTER, UNION, GRAPH or property paths)::

    query    := prefix* "SELECT" "DISTINCT"? (var+ | "*") "WHERE"? "{" triples? "}"
    prefix   := "PREFIX" pname_ns iri
    triples  := subject verb objects (";" verb objects)* ("." triples?)?
    objects  := object ("," object)*

Patterns are matched against the union of all graphs, treated as a set of
triples.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import QueryError, QuerySyntaxError, TermError
from .closure import SAMEAS, EquivalenceClasses, superproperties
from .nquads import unescape
from .store import QuadStore
from .terms import IRI, BlankNode, Literal, Term, term_key
from . import vocab


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return f"?{self.name}"


Slot = Union[Var, IRI, Literal, BlankNode]


@dataclass(frozen=True)
class BGPQuery:
    variables: Optional[tuple[str, ...]]  # None for SELECT *
    patterns: tuple[tuple[Slot, Slot, Slot], ...]
    distinct: bool = False
    prefixes: dict = field(default_factory=dict, compare=False)

    @property
    def pattern_variables(self) -> tuple[str, ...]:
        seen = []
        for pat in self.patterns:
            for slot in pat:
                if isinstance(slot, Var) and slot.name not in seen:
                    seen.append(slot.name)
        return tuple(seen)

    @property
    def projection(self) -> tuple[str, ...]:
        return self.pattern_variables if self.variables is None else self.variables


_UNSUPPORTED = {"OPTIONAL", "FILTER", "UNION", "GRAPH", "MINUS", "BIND", "VALUES", "SERVICE",
                "ORDER", "LIMIT", "OFFSET", "GROUP", "HAVING", "CONSTRUCT", "ASK", "DESCRIBE",
                "FROM", "REDUCED"}

_TOKEN = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<iri><[^<>"{}|^`\\\s]*>)
    | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
    | (?P<lit>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
    | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
    | (?P<dtmark>\^\^)
    | (?P<number>[+-]?(?:\d+\.\d+|\d+))
    | (?P<pname>(?:[A-Za-z][A-Za-z0-9_.-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?)
    | (?P<word>[A-Za-z][A-Za-z0-9_]*)
    | (?P<punct>[{}.;,*()/|!^+=<>])
    """,
    re.VERBOSE,
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(0), pos))
            pos = m.end()
        self.i = 0
        self.prefixes: dict[str, str] = {}

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise QuerySyntaxError(message, tok[2])

    def keyword(self, word) -> bool:
        kind, value, _ = self.peek()
        if kind == "word" and value.upper() == word:
            self.i += 1
            return True
        return False

    def expect_punct(self, p):
        kind, value, _ = self.peek()
        if kind != "punct" or value != p:
            self.error(f"expected {p!r}")
        self.i += 1

    def parse(self) -> BGPQuery:
        while self.keyword("PREFIX"):
            kind, value, _ = self.next()
            if kind != "pname" or not value.endswith(":"):
                self.error("expected a prefix name like 'ex:'", self.tokens[self.i - 1])
            kind2, iri, _ = self.next()
            if kind2 != "iri":
                self.error("expected an IRI", self.tokens[self.i - 1])
            self.prefixes[value[:-1]] = iri[1:-1]
        self._reject_unsupported()
        if not self.keyword("SELECT"):
            self.error("expected SELECT")
        distinct = self.keyword("DISTINCT")
        self._reject_unsupported()
        variables: Optional[list[str]] = []
        kind, value, _ = self.peek()
        if kind == "punct" and value == "*":
            self.i += 1
            variables = None
        else:
            while self.peek()[0] == "var":
                variables.append(self.next()[1][1:])
            if not variables:
                self.error("expected variables or '*'")
        self.keyword("WHERE")
        self.expect_punct("{")
        patterns = self.parse_triples()
        self.expect_punct("}")
        if self.peek()[0] != "eof":
            self._reject_unsupported()
            self.error("unexpected text after '}'")
        query = BGPQuery(tuple(variables) if variables is not None else None, tuple(patterns),
                         distinct, dict(self.prefixes))
        if variables is not None:
            bound = set(query.pattern_variables)
            missing = [v for v in variables if v not in bound]
            if missing:
                raise QueryError(f"projected variable(s) not bound in WHERE: {', '.join('?' + v for v in missing)}")
        return query

    def _reject_unsupported(self):
        kind, value, _ = self.peek()
        if kind == "word" and value.upper() in _UNSUPPORTED:
            self.error(f"{value.upper()} is not supported")

    def at_punct(self, p) -> bool:
        kind, value, _ = self.peek()
        return kind == "punct" and value == p

    def parse_triples(self):
        patterns = []
        while not self.at_punct("}"):
            self._reject_unsupported()
            if self.peek()[0] == "eof":
                self.error("unterminated group pattern")
            subject = self.term("s")
            while True:
                verb = self.term("p")
                while True:
                    patterns.append((subject, verb, self.term("o")))
                    if self.at_punct(","):
                        self.i += 1
                        continue
                    break
                if self.at_punct(";"):
                    self.i += 1
                    if self.at_punct(".") or self.at_punct("}"):
                        break
                    continue
                break
            if self.at_punct("."):
                self.i += 1
            elif not self.at_punct("}"):
                self._reject_unsupported()
                if self.peek()[0] == "eof":
                    self.error("unterminated group pattern")
                if self.peek()[0] == "punct" and self.peek()[1] in "/|^*+!":
                    self.error("property paths are not supported")
                self.error("expected '.' or '}'")
        return patterns

    def expand(self, tok):
        prefix, _, local = tok[1].partition(":")
        if prefix not in self.prefixes:
            self.error(f"undeclared prefix {prefix!r}", tok)
        return self.prefixes[prefix] + local

    def term(self, position) -> Slot:
        tok = self.next()
        kind, value, _ = tok
        try:
            if kind == "var":
                return Var(value[1:])
            if kind == "iri":
                return IRI(unescape(value[1:-1]))
            if kind == "pname":
                return IRI(self.expand(tok))
            if kind == "word" and value == "a" and position == "p":
                return IRI(vocab.RDF_TYPE)
            if position == "o":
                if kind == "lit":
                    lexical = unescape(value[1:-1])
                    nk, nv, _ = self.peek()
                    if nk == "lang":
                        self.i += 1
                        return Literal(lexical, None, nv[1:])
                    if nk == "dtmark":
                        self.i += 1
                        dt_tok = self.next()
                        if dt_tok[0] == "iri":
                            return Literal(lexical, dt_tok[1][1:-1])
                        if dt_tok[0] == "pname":
                            return Literal(lexical, self.expand(dt_tok))
                        self.error("expected a datatype IRI", dt_tok)
                    return Literal(lexical)
                if kind == "number":
                    dt = vocab.XSD + ("decimal" if "." in value else "integer")
                    return Literal(value, dt)
                if kind == "word" and value in ("true", "false"):
                    return Literal(value, vocab.XSD + "boolean")
        except TermError as exc:
            raise QuerySyntaxError(str(exc), tok[2]) from None
        if kind == "punct" and value in "(!^/|":
            self.error("property paths and collections are not supported", tok)
        if kind == "eof":
            self.error("unexpected end of query", tok)
        self.error(f"unexpected {value!r}", tok)


def parse_query(text: str) -> BGPQuery:
    return _Parser(text).parse()


# -- evaluation ---------------------------------------------------------------


def _view(store: QuadStore, sameas_expansion: bool, infer_subproperties: bool):
    triples = store.triples()
    if infer_subproperties:
        supers = superproperties(triples)
        inferred = {(s, anc, o) for (s, p, o) in triples for anc in supers.get(p, ())}
        triples |= inferred
    classes = None
    if sameas_expansion:
        classes = EquivalenceClasses(edges=[(s, o) for (s, p, o) in triples if p == SAMEAS])
        rep = classes.representative
        triples = {(rep(s), rep(p), rep(o)) for (s, p, o) in triples}
    return triples, classes


def _plan(patterns) -> list[int]:
    order = []
    bound: set = set()
    remaining = list(range(len(patterns)))
    while remaining:
        def score(idx):
            pat = patterns[idx]
            n = sum(1 for slot in pat if not isinstance(slot, Var) or slot.name in bound)
            return (-n, idx)
        best = min(remaining, key=score)
        remaining.remove(best)
        order.append(best)
        bound.update(slot.name for slot in patterns[best] if isinstance(slot, Var))
    return order


def bgp_query(store: QuadStore, query: Union[str, BGPQuery], *, distinct: Optional[bool] = None,
              sameas_expansion: bool = False, infer_subproperties: bool = False) -> list[dict]:
    """Evaluate *query* and return one ``{variable: term}`` dict per row.

    With ``sameas_expansion`` every term is replaced by the canonical member
    of its owl:sameAs class before matching, in data and query alike; result
    rows carry those canonical members. ``infer_subproperties`` adds the
    rdfs:subPropertyOf entailments of the data for the duration of the query.
    Rows are sorted canonically.
    """
    if isinstance(query, str):
        query = parse_query(query)
    if distinct is None:
        distinct = query.distinct
    triples, classes = _view(store, sameas_expansion, infer_subproperties)

    def canon(slot):
        if classes is None or isinstance(slot, Var):
            return slot
        return classes.representative(slot)

    patterns = [tuple(canon(s) for s in pat) for pat in query.patterns]
    index = ({}, {}, {})
    for t in triples:
        for pos in range(3):
            index[pos].setdefault(t[pos], []).append(t)

    solutions = [{}]
    for idx in _plan(patterns):
        pat = patterns[idx]
        nxt = []
        for binding in solutions:
            resolved = [binding.get(s.name) if isinstance(s, Var) else s for s in pat]
            candidates = None
            for pos, value in enumerate(resolved):
                if value is not None:
                    bucket = index[pos].get(value, ())
                    if candidates is None or len(bucket) < len(candidates):
                        candidates = bucket
            if candidates is None:
                candidates = triples
            for t in candidates:
                new = dict(binding)
                ok = True
                for slot, value in zip(pat, t):
                    if isinstance(slot, Var):
                        have = new.get(slot.name)
                        if have is None:
                            new[slot.name] = value
                        elif have != value:
                            ok = False
                            break
                    elif slot != value:
                        ok = False
                        break
                if ok:
                    nxt.append(new)
        solutions = nxt
        if not solutions:
            break

    projection = query.projection
    rows = [{v: sol[v] for v in projection} for sol in solutions]
    if distinct:
        unique = {}
        for row in rows:
            unique.setdefault(tuple(row[v] for v in projection), row)
        rows = list(unique.values())
    rows.sort(key=lambda r: tuple(term_key(r[v]) for v in projection))
    return rows
