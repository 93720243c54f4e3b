import pytest
from hypothesis import given, settings, strategies as st

from oracles import scan_match
from rellharvest.errors import RDFSyntaxError, TermError
from rellharvest.rdf import (
    DEFAULT_GRAPH,
    IRI,
    BlankNode,
    Literal,
    Quad,
    QuadStore,
    load_nquads,
    load_turtle,
    parse_nquads,
    parse_turtle,
    serialize_nquads,
    serialize_turtle,
    term_key,
)
from strategies import EX, dense_quads, graphs, predicates, quads, small_iris

A, B, P, G = IRI(EX + "a"), IRI(EX + "b"), IRI(EX + "p"), IRI(EX + "g")


# -- terms ----------------------------------------------------------------------


@pytest.mark.parametrize("bad", ["relative/path", "", "http://x/ space", "http://x/<", 'http://x/"'])
def test_bad_iris(bad):
    with pytest.raises(TermError):
        IRI(bad)


def test_literal_constraints():
    with pytest.raises(TermError):
        Literal("x", EX + "dt", "en")
    with pytest.raises(TermError):
        Literal("x", None, "not a tag")
    with pytest.raises(TermError):
        Literal("x", "relative")


def test_quad_positions():
    with pytest.raises(TermError):
        Quad(Literal("x"), P, A)
    with pytest.raises(TermError):
        Quad(A, BlankNode("b"), A)
    with pytest.raises(TermError):
        Quad(A, P, A, BlankNode("g"))


def test_canonical_term_order():
    terms = [Literal("a"), IRI(EX + "z"), BlankNode("q"), IRI(EX + "a"), Literal("a", None, "en")]
    ordered = sorted(terms, key=term_key)
    assert [type(t).__name__ for t in ordered] == ["BlankNode", "IRI", "IRI", "Literal", "Literal"]


# -- store ----------------------------------------------------------------------


def test_set_semantics_and_graph_selection():
    s = QuadStore()
    assert s.add(A, P, B)
    assert not s.add(A, P, B)
    assert s.add(A, P, B, G)
    assert len(s) == 2
    assert s.count(g=DEFAULT_GRAPH) == 1
    assert s.count(g=G) == 1
    assert s.count() == 2
    assert s.triples() == {(A, P, B)}
    assert s.graphs() == [G]
    assert s.discard(Quad(A, P, B, G))
    assert not s.discard(Quad(A, P, B, G))
    assert s.graphs() == []


@settings(max_examples=150, deadline=None)
@given(st.lists(dense_quads, max_size=60), st.one_of(st.none(), small_iris), st.one_of(st.none(), predicates),
       st.one_of(st.none(), small_iris), st.one_of(st.none(), st.just(DEFAULT_GRAPH), graphs))
def test_match_equals_linear_scan(qs, s, p, o, g):
    store = QuadStore(qs)
    expected = scan_match(set(qs), s, p, o, None if g is DEFAULT_GRAPH else g, default_only=g is DEFAULT_GRAPH)
    assert store.match(s, p, o, g) == sorted(expected, key=lambda q: (q.graph is not None, q.graph and q.graph.value,
                                                                        term_key(q.subject), term_key(q.predicate),
                                                                        term_key(q.object)))


@settings(max_examples=100, deadline=None)
@given(st.lists(dense_quads, max_size=40), st.lists(dense_quads, max_size=40))
def test_insert_discard_bookkeeping(adds, removes):
    store = QuadStore(adds)
    for q in removes:
        store.discard(q)
    remaining = set(adds) - set(removes)
    assert set(store) == remaining
    for q in remaining:
        assert store.match(q.subject, q.predicate, q.object, q.graph or DEFAULT_GRAPH) == [q]


# -- N-Quads ----------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.lists(quads, max_size=30))
def test_nquads_round_trip_is_a_fixed_point(qs):
    text = serialize_nquads(QuadStore(qs))
    again = serialize_nquads(load_nquads(text))
    assert again == text
    # without blank nodes the round trip is exact
    plain = [q for q in qs if not isinstance(q.subject, BlankNode) and not isinstance(q.object, BlankNode)]
    assert set(parse_nquads(serialize_nquads(QuadStore(plain)))) == set(plain)


def test_nquads_escapes_and_layout():
    store = QuadStore([Quad(A, P, Literal('say "hi"\n\\ \u2028')), Quad(A, P, B, G)])
    text = serialize_nquads(store)
    assert text.split("\n")[0] == f'<{EX}a> <{EX}p> "say \\"hi\\"\\n\\\\ \u2028" .'
    assert text.endswith(f"<{EX}g> .\n")
    assert set(parse_nquads(text)) == set(store)


def test_default_graph_sorts_first():
    store = QuadStore([Quad(B, P, A, G), Quad(B, P, A)])
    lines = serialize_nquads(store).splitlines()
    assert not lines[0].endswith(f"<{EX}g> .")


def test_blank_labels_are_canonical():
    store = QuadStore([Quad(BlankNode(f"n{i}"), P, A) for i in range(12)])
    text = serialize_nquads(store)
    assert "_:b00 " in text and "_:b11 " in text


@pytest.mark.parametrize("line", [
    "<http://x/a> <http://x/p> .",
    "<http://x/a> <http://x/p> <http://x/b> <http://x/g> <http://x/h> .",
    "<http://x/a> <http://x/p> <http://x/b>",
    '<http://x/a> <http://x/p> "bad \\q" .',
    '"lit" <http://x/p> <http://x/b> .',
    "<rel> <http://x/p> <http://x/b> .",
])
def test_nquads_syntax_errors(line):
    with pytest.raises(RDFSyntaxError) as info:
        parse_nquads("\n" + line + "\n")
    assert info.value.line == 2


def test_nquads_comments_and_blank_lines():
    text = "# header\n\n<http://x/a> <http://x/p> <http://x/b> . # trailing\n"
    assert len(parse_nquads(text)) == 1


# -- Turtle ----------------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.lists(quads, max_size=25))
def test_turtle_round_trip_default_graph(qs):
    store = QuadStore(qs)
    default = QuadStore(store.match(g=DEFAULT_GRAPH))
    text = serialize_turtle(store, prefixes={"ex": EX})
    assert load_turtle(text) == default


def test_turtle_named_graph_export():
    store = QuadStore([Quad(A, P, B, G), Quad(B, P, A)])
    assert set(parse_turtle(serialize_turtle(store, G))) == {Quad(A, P, B)}


def test_turtle_reader_subset():
    text = """@prefix ex: <http://example.org/> .
    PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>
    ex:a a ex:C ; ex:p ex:b , "x"@en , 5 , 2.5 , true , "7"^^xsd:integer ;
       ex:q _:n1 .
    """
    qs = parse_turtle(text)
    assert len(qs) == 8
    assert Quad(A, IRI("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"), IRI(EX + "C")) in qs
    assert Quad(A, P, Literal("5", "http://www.w3.org/2001/XMLSchema#integer")) in qs


@pytest.mark.parametrize("text", ["ex:a ex:p ex:b .", "@prefix ex: <http://e/> . ex:a ex:p", "@base <http://x/> ."])
def test_turtle_errors(text):
    with pytest.raises(RDFSyntaxError):
        parse_turtle(text)
