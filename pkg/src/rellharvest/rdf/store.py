"""Indexed in-memory quad store."""
from __future__ import annotations

import threading
from collections import defaultdict
from typing import Iterable, Iterator, Optional

from ..errors import TermError
from .terms import IRI, BlankNode, Literal, Quad, Term, quad_key


class _DefaultGraph:
    """Pattern value selecting only the default graph."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DEFAULT_GRAPH"


DEFAULT_GRAPH = _DefaultGraph()


class QuadStore:
    """A set of quads indexed by subject, predicate, object and graph.

    ``None`` in a :meth:`match` pattern is a wildcard; pass
    :data:`DEFAULT_GRAPH` as the graph to restrict to the default graph.
    Writers serialize on :attr:`lock`; readers do not take it.
    """

    def __init__(self, quads: Iterable[Quad] = ()):
        self._quads: set[Quad] = set()
        self._by_s = defaultdict(set)
        self._by_p = defaultdict(set)
        self._by_o = defaultdict(set)
        self._by_g = defaultdict(set)
        self.lock = threading.RLock()
        self.update(quads)

    def insert(self, q: Quad) -> bool:
        if not isinstance(q, Quad):
            raise TermError(f"not a quad: {q!r}")
        with self.lock:
            if q in self._quads:
                return False
            self._quads.add(q)
            self._by_s[q.subject].add(q)
            self._by_p[q.predicate].add(q)
            self._by_o[q.object].add(q)
            self._by_g[q.graph].add(q)
            return True

    def add(self, s, p, o, g=None) -> bool:
        return self.insert(Quad(s, p, o, g))

    def update(self, quads: Iterable[Quad]) -> int:
        return sum(1 for q in quads if self.insert(q))

    def discard(self, q: Quad) -> bool:
        with self.lock:
            if q not in self._quads:
                return False
            self._quads.remove(q)
            for index, key in ((self._by_s, q.subject), (self._by_p, q.predicate),
                               (self._by_o, q.object), (self._by_g, q.graph)):
                bucket = index[key]
                bucket.discard(q)
                if not bucket:
                    del index[key]
            return True

    def __len__(self):
        return len(self._quads)

    def __contains__(self, q):
        return q in self._quads

    def __iter__(self) -> Iterator[Quad]:
        return iter(sorted(self._quads, key=quad_key))

    def _candidates(self, s, p, o, g) -> Optional[set]:
        buckets = []
        if s is not None:
            buckets.append(self._by_s.get(s, set()))
        if p is not None:
            buckets.append(self._by_p.get(p, set()))
        if o is not None:
            buckets.append(self._by_o.get(o, set()))
        if g is DEFAULT_GRAPH:
            buckets.append(self._by_g.get(None, set()))
        elif g is not None:
            buckets.append(self._by_g.get(g, set()))
        if not buckets:
            return None
        return min(buckets, key=len)

    def match(self, s: Optional[Term] = None, p: Optional[IRI] = None,
              o: Optional[Term] = None, g=None) -> list[Quad]:
        """Quads matching every bound position, in canonical order."""
        candidates = self._candidates(s, p, o, g)
        if candidates is None:
            candidates = self._quads
        want_g = None if g is DEFAULT_GRAPH else g
        out = [
            q for q in candidates
            if (s is None or q.subject == s)
            and (p is None or q.predicate == p)
            and (o is None or q.object == o)
            and (g is None or q.graph == want_g)
        ]
        out.sort(key=quad_key)
        return out

    def count(self, s=None, p=None, o=None, g=None) -> int:
        return len(self.match(s, p, o, g))

    def graphs(self) -> list[IRI]:
        return sorted((g for g in self._by_g if g is not None), key=lambda t: t.value)

    def triples(self) -> set[tuple]:
        """Union of all graphs as a set of (s, p, o)."""
        return {q.triple for q in self._quads}

    def copy(self) -> "QuadStore":
        return QuadStore(self._quads)

    def __eq__(self, other):
        return isinstance(other, QuadStore) and self._quads == other._quads

    def __repr__(self):
        return f"<QuadStore {len(self)} quads>"


__all__ = ["QuadStore", "DEFAULT_GRAPH", "Quad", "IRI", "Literal", "BlankNode"]
