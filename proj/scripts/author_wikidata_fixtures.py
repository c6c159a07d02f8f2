#!/usr/bin/env python3
"""Writes fixtures/wikidata/: canned Wikidata API and SPARQL responses.

Each fixture is keyed exactly as the C++ FixtureStore keys requests: the
first 24 hex digits of sha256 over

    METHOD url\n
    key=value\n   (parameters sorted by key, then value; not URL-encoded)
    \n
    body

Bodies follow the shapes the live services return. They were written by
hand, not captured: the build environment cannot reach wikidata.org. Re-run
`kgqa record` against the live endpoints to replace them with captures.
"""

import hashlib
import json
import pathlib
import sys

API = "https://www.wikidata.org/w/api.php"
SPARQL = "https://query.wikidata.org/sparql"
ENTITY = "http://www.wikidata.org/entity/"

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                   pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "wikidata")

# Hand-authored label/description records. Q102427 and its text are as
# documented on its Wikidata page; the remaining records are illustrative.
RECORDS = {
    "Q102427": ("Academy Award for Best Picture",
                "annual award from the Academy of Motion Picture Arts and Sciences"),
    "Q19020": ("Academy Awards", "annual awards for artistic and technical merit in film"),
    "Q4220917": ("film award", "award for films and people in the film industry"),
    "Q30": ("United States of America", "country primarily located in North America"),
    "Q11424": ("film", "sequence of images that give the impression of movement"),
    "Q25191": ("Christopher Nolan", "British-American filmmaker"),
    "P31": ("instance of", "type to which this subject corresponds/belongs"),
    "P17": ("country", "sovereign state that this item is in"),
    "P57": ("director", "director(s) of film, TV-series, stageplay, video game or similar"),
    "P166": ("award received", "award or recognition received by a person, organization or "
                               "creative work"),
    "P1027": ("conferred by", "person or organization who grants an award, certification, "
                              "grant, or role"),
    "P580": ("start time", "time an entity begins to exist or a statement starts being valid"),
    "Q1079": ("Academy of Motion Picture Arts and Sciences",
              "professional honorary organization"),
}

# Illustrative ids for the "Poseidon" ambiguity (film versus deity).
SEARCHES = {
    "Poseidon": [
        ("Q900000101", "Poseidon", "2006 film directed by Wolfgang Petersen"),
        ("Q900000102", "Poseidon", "god of the sea in ancient Greek religion"),
        ("Q900000103", "The Poseidon Adventure", "1972 film directed by Ronald Neame"),
    ],
    "Academy Award for Best Picture": [
        ("Q102427", "Academy Award for Best Picture",
         "annual award from the Academy of Motion Picture Arts and Sciences"),
    ],
}

DIRECTORS_QUERY = ("SELECT ?film ?director WHERE {\n"
                   "  ?film wdt:P166 wd:Q102427 .\n"
                   "  ?film wdt:P57 ?director .\n"
                   "}\nLIMIT 5")

# (film id, director id) pairs for the directors query; illustrative ids.
DIRECTOR_ROWS = [
    ("Q900000201", "Q900000301"),
    ("Q900000202", "Q900000302"),
    ("Q900000203", "Q900000303"),
    ("Q900000204", "Q900000304"),
    ("Q900000204", "Q900000305"),
]


def canonical(method, url, params, body=""):
    text = f"{method} {url}\n"
    for k, v in sorted(params):
        text += f"{k}={v}\n"
    return text + "\n" + body


def write(method, url, params, body, status=200):
    text = canonical(method, url, params)
    key = hashlib.sha256(text.encode("utf-8")).hexdigest()[:24]
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{key}.request").write_text(text, encoding="utf-8")
    payload = body if isinstance(body, str) else json.dumps(body, ensure_ascii=False, indent=1)
    (OUT / f"{key}.json").write_text(payload, encoding="utf-8")
    status_file = OUT / f"{key}.status"
    if status != 200:
        status_file.write_text(str(status), encoding="utf-8")
    elif status_file.exists():
        status_file.unlink()
    return key


def entity_json(id_):
    label, description = RECORDS[id_]
    doc = {
        "type": "property" if id_.startswith("P") else "item",
        "id": id_,
        "labels": {"en": {"language": "en", "value": label}},
        "descriptions": {"en": {"language": "en", "value": description}},
    }
    if id_.startswith("P"):
        doc["datatype"] = "wikibase-item"
    return doc


def getentities(ids):
    params = [("action", "wbgetentities"), ("ids", "|".join(ids)),
              ("props", "labels|descriptions"), ("languages", "en"), ("format", "json")]
    missing = [i for i in ids if i not in RECORDS]
    if missing:
        body = {
            "error": {
                "code": "no-such-entity",
                "info": f'Could not find an entity with the ID "{missing[0]}".',
                "id": missing[0],
                "*": "See https://www.wikidata.org/w/api.php for API usage.",
            },
            "servedby": "mw-api-ext.eqiad.main-5d9c8b6b8b-abcde",
        }
    else:
        body = {"entities": {i: entity_json(i) for i in ids}, "success": 1}
    return write("GET", API, params, body)


def search(term, limit=10):
    params = [("action", "wbsearchentities"), ("search", term), ("language", "en"),
              ("uselang", "en"), ("type", "item"), ("limit", str(limit)), ("format", "json")]
    hits = []
    for id_, label, description in SEARCHES[term][:limit]:
        hits.append({
            "id": id_,
            "title": id_,
            "pageid": 0,
            "concepturi": ENTITY + id_,
            "repository": "wikidata",
            "url": "//www.wikidata.org/wiki/" + id_,
            "display": {"label": {"value": label, "language": "en"},
                        "description": {"value": description, "language": "en"}},
            "label": label,
            "description": description,
            "match": {"type": "label", "language": "en", "text": label},
        })
    body = {"searchinfo": {"search": term}, "search": hits, "success": 1}
    return write("GET", API, params, body)


def sparql(query, variables, rows, status=200, raw=None):
    params = [("query", query), ("format", "json")]
    if raw is not None:
        return write("GET", SPARQL, params, raw, status)
    bindings = []
    for row in rows:
        b = {}
        for var, value in zip(variables, row):
            if value is None:
                continue
            if isinstance(value, dict):
                b[var] = value
            else:
                b[var] = {"type": "uri", "value": ENTITY + value}
        bindings.append(b)
    return write("GET", SPARQL, params, {"head": {"vars": variables},
                                         "results": {"bindings": bindings}}, status)


def direct(pid):
    return {"type": "uri", "value": "http://www.wikidata.org/prop/direct/" + pid}


def main():
    # Entity-relation table lookups.
    for ids in (["Q102427"], ["P57"], ["P166"], ["Q999999999999"],
                ["P166", "Q102427", "P57"], ["P166", "Q999999999999", "P57"],
                ["Q102427", "P31"]):
        getentities(ids)

    for term in SEARCHES:
        search(term)

    # Relations of Q102427 (limit 50), then their labels.
    relations = ["P31", "P17", "P1027", "P580"]
    sparql("SELECT DISTINCT ?relation WHERE { wd:Q102427 ?direct ?value . "
           "?relation wikibase:directClaim ?direct . } LIMIT 50",
           ["relation"], [[r] for r in relations])
    getentities(relations)

    # Traversal Q102427 -P31-> (limit 20).
    sparql("SELECT DISTINCT ?tail WHERE { wd:Q102427 wdt:P31 ?tail . FILTER(isIRI(?tail)) } "
           "LIMIT 20", ["tail"], [["Q19020"], ["Q4220917"]])
    getentities(["Q19020", "Q4220917"])

    sparql("SELECT ?x WHERE { wd:Q102427 wdt:P31 ?x }", ["x"], [["Q19020"], ["Q4220917"]])
    sparql("SELECT ?x WHERE { wd:Q102427 wdt:P999999 ?x }", ["x"], [])
    sparql(DIRECTORS_QUERY, ["film", "director"], [list(r) for r in DIRECTOR_ROWS])

    sparql("SELECT ?x WHERE { wd:Q102427 wdt:P31 ?x ", [], [], status=400,
           raw="SPARQL-QUERY: queryStr=SELECT ?x WHERE { wd:Q102427 wdt:P31 ?x \n"
               "java.util.concurrent.ExecutionException: org.openrdf.query."
               "MalformedQueryException: Encountered \"<EOF>\" at line 1, column 38.\n")
    sparql("SELECT ?a ?b WHERE { ?a ?p ?b . ?b ?q ?c . }", [], [], status=500,
           raw="SPARQL-QUERY: queryStr=SELECT ?a ?b WHERE { ?a ?p ?b . ?b ?q ?c . }\n"
               "java.util.concurrent.TimeoutException\n"
               "\tat java.util.concurrent.FutureTask.get(FutureTask.java:205)\n")

    print(f"wrote {len(list(OUT.glob('*.json')))} fixtures to {OUT}")


if __name__ == "__main__":
    main()
