"""RDF terms, quad store, serializations, BGP queries and closures."""
from .closure import EquivalenceClasses, sameas_closure, subproperty_closure
from .nquads import load_nquads, parse_nquads, serialize_nquads
from .query import BGPQuery, Var, bgp_query, parse_query
from .store import DEFAULT_GRAPH, QuadStore
from .terms import IRI, BlankNode, Literal, Quad, Term, quad_key, term_key
from .turtle import load_turtle, parse_turtle, serialize_turtle

__all__ = [
    "IRI", "Literal", "BlankNode", "Quad", "Term", "term_key", "quad_key",
    "QuadStore", "DEFAULT_GRAPH",
    "serialize_nquads", "parse_nquads", "load_nquads",
    "serialize_turtle", "parse_turtle", "load_turtle",
    "BGPQuery", "Var", "parse_query", "bgp_query",
    "subproperty_closure", "sameas_closure", "EquivalenceClasses",
]
