from hypothesis import given, settings, strategies as st

from rellharvest.rdf import IRI, Quad, QuadStore, sameas_closure, subproperty_closure
from rellharvest.rdf.closure import SAMEAS, SUBPROPERTYOF, EquivalenceClasses, superproperties
from strategies import EX, dense_quads, predicates, small_iris

P, Q, R = (IRI(EX + n) for n in "pqr")
A, B = IRI(EX + "a"), IRI(EX + "b")


def test_chain_closure_and_idempotence():
    store = QuadStore([Quad(P, SUBPROPERTYOF, Q), Quad(Q, SUBPROPERTYOF, R), Quad(A, P, B, IRI(EX + "g"))])
    assert subproperty_closure(store) == 2
    assert Quad(A, Q, B) in store and Quad(A, R, B) in store
    assert subproperty_closure(store) == 0


def test_cycle_terminates():
    store = QuadStore([Quad(P, SUBPROPERTYOF, Q), Quad(Q, SUBPROPERTYOF, P), Quad(A, P, B)])
    subproperty_closure(store)
    assert Quad(A, Q, B) in store
    assert subproperty_closure(store) == 0


def naive_closure(triples):
    triples = set(triples)
    while True:
        sub = {(s, o) for s, p, o in triples if p == SUBPROPERTYOF}
        new = {(s, sup, o) for s, p, o in triples for sp, sup in sub if sp == p} - triples
        if not new:
            return triples
        triples |= new


@settings(max_examples=150, deadline=None)
@given(st.lists(st.one_of(dense_quads, st.builds(Quad, predicates, st.just(SUBPROPERTYOF), predicates)), max_size=40))
def test_closure_matches_fixpoint_oracle(qs):
    store = QuadStore(qs)
    subproperty_closure(store)
    assert store.triples() == naive_closure(q.triple for q in qs)
    # inferred triples land in the default graph
    before = set(qs)
    assert all(q.graph is None for q in store if q not in before)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(small_iris, small_iris), max_size=12), small_iris, small_iris)
def test_equivalence_classes_are_connected_components(edges, x, y):
    classes = EquivalenceClasses(edges=edges)
    # reachability by flooding
    adj = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    seen, todo = {x}, [x]
    while todo:
        for n in adj.get(todo.pop(), ()):
            if n not in seen:
                seen.add(n)
                todo.append(n)
    assert classes.same(x, y) == (y in seen)
    # the representative is the canonically smallest member and is order-independent
    rev = EquivalenceClasses(edges=list(reversed(edges)))
    assert classes.representative(x) == rev.representative(x) == min(seen, key=lambda t: t.value)


def test_chain_of_four_gives_class_of_four():
    members = [IRI(EX + f"m{i}") for i in range(4)]
    store = QuadStore([Quad(a, SAMEAS, b) for a, b in zip(members, members[1:])])
    classes = sameas_closure(store)
    assert classes.class_of(members[0]) == frozenset(members)
    assert len(store) == 3  # nothing materialized


def test_superproperties_are_transitive():
    sup = superproperties([(P, SUBPROPERTYOF, Q), (Q, SUBPROPERTYOF, R)])
    assert sup[P] == {Q, R} and sup[Q] == {R}
