"""Store analysis used by several test modules.

Written against raw IRI strings so it does not lean on the mapping code.
"""
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
SUBPROP = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf"
SUBCLASS = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
SAMEAS = "http://www.w3.org/2002/07/owl#sameAs"
RELL = "http://rell.example.org/ns#"
SERVICES = "http://rell.example.org/services/"


def val(term):
    return getattr(term, "value", None)


def link_properties(store):
    """Properties declared below something in the default graph, plus rell:link."""
    props = {val(q.subject) for q in store if q.graph is None and val(q.predicate) == SUBPROP}
    return props | {RELL + "link"}


def layer_counts(store):
    props = link_properties(store)
    named = [q for q in store if q.graph is not None]
    return {
        "type_quads": sum(1 for q in named if val(q.predicate) == RDF_TYPE and q.subject != q.graph),
        "link_quads": sum(1 for q in named if val(q.predicate) in props),
        "represents": sum(1 for q in named if val(q.predicate) == RELL + "represents"),
        "graphs": len({q.graph for q in named}),
    }


def superclasses(store, cls):
    """Every class reachable from *cls* over subClassOf, excluding itself."""
    out, todo = set(), [cls]
    while todo:
        c = todo.pop()
        for q in store:
            if val(q.subject) == c and val(q.predicate) == SUBCLASS and val(q.object) not in out:
                out.add(val(q.object))
                todo.append(val(q.object))
    return out


def superprops(store, prop):
    out, todo = set(), [prop]
    while todo:
        p = todo.pop()
        for q in store:
            if val(q.subject) == p and val(q.predicate) == SUBPROP and val(q.object) not in out:
                out.add(val(q.object))
                todo.append(val(q.object))
    return out
