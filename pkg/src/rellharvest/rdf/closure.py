"""rdfs:subPropertyOf inference and owl:sameAs equivalence classes."""
from __future__ import annotations

from typing import Iterable

from .store import QuadStore
from .terms import IRI, Quad, Term, term_key
from .vocab import OWL_SAMEAS, RDFS_SUBPROPERTYOF

SUBPROPERTYOF = IRI(RDFS_SUBPROPERTYOF)
SAMEAS = IRI(OWL_SAMEAS)


def superproperties(triples: Iterable[tuple]) -> dict[IRI, frozenset]:
    """Map each property to everything reachable over one or more subPropertyOf edges."""
    parents: dict = {}
    for s, p, o in triples:
        if p == SUBPROPERTYOF and isinstance(s, IRI) and isinstance(o, IRI):
            parents.setdefault(s, set()).add(o)
    out = {}
    for prop in parents:
        seen = set()
        todo = list(parents[prop])
        while todo:
            nxt = todo.pop()
            if nxt in seen:
                continue
            seen.add(nxt)
            todo.extend(parents.get(nxt, ()))
        out[prop] = frozenset(seen)
    return out


def subproperty_closure(store: QuadStore) -> int:
    """Add (s, p', o) to the default graph for every super-property p' of p.

    Returns the number of triples added. Cycles terminate; a second call
    adds nothing.
    """
    with store.lock:
        supers = superproperties(q.triple for q in store.match(p=SUBPROPERTYOF))
        added = 0
        for prop, ancestors in sorted(supers.items(), key=lambda kv: kv[0].value):
            for q in store.match(p=prop):
                for anc in ancestors:
                    if store.insert(Quad(q.subject, anc, q.object)):
                        added += 1
        return added


class EquivalenceClasses:
    """Partition of terms induced by owl:sameAs edges (union-find)."""

    def __init__(self, terms: Iterable[Term] = (), edges: Iterable[tuple] = ()):
        self._parent: dict = {}
        for t in terms:
            self._parent.setdefault(t, t)
        for a, b in edges:
            self.union(a, b)

    def find(self, t: Term) -> Term:
        root = self._parent.setdefault(t, t)
        while self._parent[root] != root:
            root = self._parent[root]
        while t != root:
            self._parent[t], t = root, self._parent[t]
        return root

    def union(self, a: Term, b: Term):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # the canonically smallest member is the root, so representatives are stable
        if term_key(rb) < term_key(ra):
            ra, rb = rb, ra
        self._parent[rb] = ra

    def representative(self, t: Term) -> Term:
        return self.find(t) if t in self._parent else t

    def same(self, a: Term, b: Term) -> bool:
        return self.representative(a) == self.representative(b)

    @property
    def classes(self) -> list[frozenset]:
        groups: dict = {}
        for t in self._parent:
            groups.setdefault(self.find(t), set()).add(t)
        return sorted((frozenset(g) for g in groups.values()),
                      key=lambda g: term_key(min(g, key=term_key)))

    def class_of(self, t: Term) -> frozenset:
        root = self.representative(t)
        return frozenset(x for x in self._parent if self.find(x) == root) or frozenset({t})

    def __len__(self):
        return len(self.classes)


def sameas_closure(store: QuadStore) -> EquivalenceClasses:
    """Equivalence classes over every subject and object in *store*.

    Nothing is written to the store; expansion happens at query time.
    """
    terms = set()
    for q in store:
        terms.add(q.subject)
        terms.add(q.object)
    edges = [(q.subject, q.object) for q in store.match(p=SAMEAS)]
    return EquivalenceClasses(terms, edges)
