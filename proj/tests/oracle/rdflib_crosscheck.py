#!/usr/bin/env python3
"""Compares the analyzer corpus against rdflib.

For every case in analyzer_cases.json the hand-written triple list must equal
the basic graph pattern rdflib extracts from the same query, and the edges
printed by `kgqa graph` must equal both.

usage: rdflib_crosscheck.py <path to kgqa binary>
"""

import json
import pathlib
import subprocess
import sys
import tempfile

from rdflib import BNode, Literal, URIRef, Variable
from rdflib.plugins.sparql import prepareQuery

HERE = pathlib.Path(__file__).resolve().parent

PREFIXES = {
    "wd": "http://www.wikidata.org/entity/",
    "wdt": "http://www.wikidata.org/prop/direct/",
    "p": "http://www.wikidata.org/prop/",
    "ps": "http://www.wikidata.org/prop/statement/",
    "pq": "http://www.wikidata.org/prop/qualifier/",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "schema": "http://schema.org/",
    "wikibase": "http://wikiba.se/ontology#",
    "bd": "http://www.bigdata.com/rdf#",
}


def expand(compact):
    """Canonical key of a term written in the corpus' compact notation."""
    if compact.startswith("?") or compact.startswith("<"):
        return compact
    if compact.startswith('"'):
        if "^^" in compact:
            lex, dt = compact.rsplit("^^", 1)
            return lex + "^^" + expand(dt)
        return compact
    prefix, local = compact.split(":", 1)
    return "<" + PREFIXES[prefix] + local + ">"


def key(term):
    if isinstance(term, Variable):
        return "?" + str(term)
    if isinstance(term, URIRef):
        return "<" + str(term) + ">"
    if isinstance(term, Literal):
        text = '"' + str(term).replace("\\", "\\\\").replace('"', '\\"') + '"'
        if term.language:
            return text + "@" + term.language
        if term.datatype:
            return text + "^^<" + str(term.datatype) + ">"
        return text
    if isinstance(term, BNode):
        raise ValueError("blank node in corpus query")
    raise ValueError("unexpected term %r" % (term,))


def bgp_triples(node, out):
    """Triples of the graph pattern, skipping OPTIONAL right-hand sides."""
    name = getattr(node, "name", None)
    if name is None:
        return
    if name == "BGP":
        out.extend(node["triples"])
        return
    if name == "LeftJoin":
        bgp_triples(node["p1"], out)
        return
    for part in ("p", "p1", "p2"):
        child = node.get(part)
        if child is not None:
            bgp_triples(child, out)


def rdflib_triples(query):
    prologue = "".join("PREFIX %s: <%s>\n" % kv for kv in PREFIXES.items())
    prepared = prepareQuery(prologue + query)
    found = []
    bgp_triples(prepared.algebra, found)
    return sorted({(key(s), key(p), key(o)) for s, p, o in found})


def kgqa_edges(binary, query):
    with tempfile.NamedTemporaryFile("w", suffix=".rq", delete=False) as f:
        f.write(query)
        path = f.name
    try:
        out = subprocess.run([binary, "graph", path], check=True, capture_output=True, text=True)
    finally:
        pathlib.Path(path).unlink()
    graph = json.loads(out.stdout)
    return sorted({(e["source"], e["relation"], e["target"]) for e in graph["edges"]})


def main():
    if len(sys.argv) != 2:
        print(__doc__.strip().splitlines()[-1], file=sys.stderr)
        return 2
    binary = sys.argv[1]
    cases = json.loads((HERE / "analyzer_cases.json").read_text())
    failures = 0
    for case in cases:
        expected = sorted({tuple(expand(t) for t in triple) for triple in case["triples"]})
        theirs = rdflib_triples(case["query"])
        ours = kgqa_edges(binary, case["query"])
        if expected != theirs or expected != ours:
            failures += 1
            print("MISMATCH %s\n  corpus: %s\n  rdflib: %s\n  kgqa:   %s"
                  % (case["name"], expected, theirs, ours))
    print("%d cases, %d mismatches" % (len(cases), failures))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
