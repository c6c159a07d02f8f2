#!/usr/bin/env python3
"""Writes fixtures/scripts/: scripted LLM replies used to record cassettes.

Each file maps a question to the assistant replies of one conversation, in
order. `scripts/record_cassettes.py` plays them through `kgqa record` against
the stub knowledge graph, which turns them into request-digest cassettes.
The hallucination scripts are deliberately doctored: their BUILD_QUERY uses
ids the conversation never discovered.
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "scripts"


def act(verb, *args, prose=""):
    quoted = " ".join(json.dumps(a, ensure_ascii=False) for a in args)
    line = verb + (" " + quoted if quoted else "")
    return (prose + "\n\n" if prose else "") + "```action\n" + line + "\n```"


def query(explanation, sparql):
    return explanation + "\n\n```action\nBUILD_QUERY\n" + sparql.strip("\n") + "\n```"


DIRECTORS_Q = "I want to know about award-winning films and their directors."
DIRECTORS_QUERY = """
# films that received the Academy Award for Best Picture
SELECT ?film ?filmLabel ?director ?directorLabel WHERE {
  ?film wdt:P166 wd:Q102427 .
  # P57 is director
  ?film wdt:P57 ?director .
  ?film rdfs:label ?filmLabel .
  ?director rdfs:label ?directorLabel .
}
"""

SESSIONS = {
    "directors": {
        "question": DIRECTORS_Q,
        "replies": [
            act("CLARIFY", "Which award do you mean? For example, the Academy Award for Best "
                "Picture?", prose="Many awards exist for films."),
            act("WELLFORMED", prose="Thanks, the question is now specific."),
            act("SEARCH", "Academy Award for Best Picture"),
            act("SEARCH", "Parasite", prose="I will look at a known winner to find the "
                "relations that connect films to awards and directors."),
            act("PROPERTIES", "Q900000201"),
            act("STOP", "Q102427 is the award, P166 links films to awards and P57 links "
                "films to directors."),
            query("The query finds every film whose award received (P166) is the Academy "
                  "Award for Best Picture (Q102427) and returns the film's director (P57), "
                  "with labels for both.", DIRECTORS_QUERY),
            "The knowledge graph lists five films that won the Academy Award for Best "
            "Picture: Parasite (Bong Joon-ho), Nomadland (Chloé Zhao), CODA (Sian Heder), "
            "Everything Everywhere All at Once (Daniel Kwan and Daniel Scheinert) and "
            "Oppenheimer (Christopher Nolan).\nAnswer: Parasite, Nomadland, CODA, Everything "
            "Everywhere All at Once, Oppenheimer",
        ],
        "userReplies": ["The Academy Award for Best Picture. Which films won it and who "
                        "directed them?"],
    },
    "wimbledon": {
        "question": "Who won the men's singles at Wimbledon in 2019?",
        "replies": [
            act("WELLFORMED"),
            act("SEARCH", "2019 Wimbledon Championships"),
            act("PROPERTIES", "Q900000401", prose="Q900000401 is the men's singles event."),
            act("STOP", "Q900000401 is the event and P1346 is its winner."),
            query("The query follows winner (P1346) from the 2019 Wimbledon men's singles "
                  "event (Q900000401) and returns the winner's label.", """
# winner of the 2019 Wimbledon men's singles
SELECT ?winner ?winnerLabel WHERE {
  wd:Q900000401 wdt:P1346 ?winner .
  ?winner rdfs:label ?winnerLabel .
}
"""),
            "According to the knowledge graph, Novak Djokovic won the men's singles at "
            "Wimbledon in 2019.\nAnswer: Novak Djokovic",
        ],
    },
    "empty": {
        "question": "Which films did Fergie direct?",
        "replies": [
            act("WELLFORMED"),
            act("SEARCH", "Fergie"),
            act("STOP", "Q51103 is Fergie and P57 is director."),
            query("The query looks for films whose director (P57) is Fergie (Q51103).", """
SELECT ?film WHERE {
  ?film wdt:P57 wd:Q51103 .
}
"""),
            "The knowledge graph lists no films directed by Fergie.\nAnswer: none",
        ],
    },
    "poseidon": {
        "question": "Which member of the Black Eyed Peas was in the movie Poseidon?",
        "replies": [
            act("WELLFORMED"),
            act("SEARCH", "Black Eyed Peas"),
            act("SEARCH", "Poseidon", prose="There are several Poseidons; I need the film."),
            act("PROPERTIES", "Q900000501"),
            act("STOP", "Q900000507 is the band, Q900000501 the 2006 film, P463 member of and "
                "P161 cast member."),
            query("The query finds people who are members (P463) of the Black Eyed Peas "
                  "(Q900000507) and cast members (P161) of Poseidon (Q900000501).", """
# band members who acted in the 2006 film
SELECT ?person ?personLabel WHERE {
  ?person wdt:P463 wd:Q900000507 .
  wd:Q900000501 wdt:P161 ?person .
  ?person rdfs:label ?personLabel .
}
"""),
            "Fergie is both a member of the Black Eyed Peas and a cast member of Poseidon."
            "\nAnswer: Fergie",
        ],
    },
    # Doctored: the query uses Q900000301, an id present in the knowledge graph
    # that the conversation never discovered.
    "hallucination-undiscovered": {
        "question": "Who directed Parasite?",
        "replies": [
            act("WELLFORMED"),
            act("SEARCH", "Parasite"),
            act("STOP", "Q900000201 is the film and P57 is director."),
            query("The query returns Parasite's director.", """
SELECT ?film WHERE {
  ?film wdt:P57 wd:Q900000301 .
}
"""),
        ],
    },
    # Doctored: the query uses Q999999999, which the knowledge graph lacks.
    "hallucination-unknown": {
        "question": "Which films won the Palme d'Or?",
        "replies": [
            act("WELLFORMED"),
            act("SEARCH", "Palme d'Or"),
            act("STOP", "I know the Palme d'Or is Q999999999 and P166 is award received."),
            query("The query returns films that received the Palme d'Or.", """
SELECT ?film WHERE {
  ?film wdt:P166 wd:Q999999999 .
}
"""),
        ],
    },
}


EVAL_BANK = [
    {"id": "cmp-1", "category": "Comparative",
     "text": "Which is older, the Black Eyed Peas or the film Poseidon?",
     "gold": ["Black Eyed Peas", "Q900000507"]},
    {"id": "yn-1", "category": "Yes/No",
     "text": "Is Fergie a member of the Black Eyed Peas?", "gold": ["Yes"]},
    {"id": "gen-1", "category": "Generic",
     "text": "Who won the men's singles at Wimbledon in 2019?",
     "gold": ["Novak Djokovic", "Q5812"]},
    {"id": "mh-1", "category": "Multi-Hop",
     "text": "Where was the winner of the 2019 Wimbledon men's singles born?",
     "gold": ["Belgrade", "Q3711"]},
    {"id": "int-1", "category": "Intersection",
     "text": "Which member of the Black Eyed Peas was in the movie Poseidon?",
     "gold": ["Fergie", "Q51103"]},
]

EVAL_PROTOCOL = {
    "cmp-1": [
        act("WELLFORMED"),
        act("SEARCH", "Black Eyed Peas"),
        act("SEARCH", "Poseidon"),
        act("PROPERTIES", "Q900000507"),
        act("STOP", "P571 is inception for both items."),
        query("The query returns the inception of both items.", """
SELECT ?band ?film WHERE {
  wd:Q900000507 wdt:P571 ?band .
  wd:Q900000501 wdt:P571 ?film .
}
"""),
        "The Black Eyed Peas date from 1995 and Poseidon from 2006.\nAnswer: Black Eyed Peas",
    ],
    "yn-1": [
        act("WELLFORMED"),
        act("SEARCH", "Fergie"),
        act("PROPERTIES", "Q51103"),
        act("STOP", "P463 is member of."),
        query("The query lists the groups Fergie is a member of.", """
SELECT ?group ?groupLabel WHERE {
  wd:Q51103 wdt:P463 ?group .
  ?group rdfs:label ?groupLabel .
}
"""),
        "Fergie is a member of the Black Eyed Peas.\nAnswer: Yes",
    ],
    "gen-1": SESSIONS["wimbledon"]["replies"],
    "mh-1": [
        act("WELLFORMED"),
        act("SEARCH", "2019 Wimbledon Championships"),
        act("PROPERTIES", "Q900000401"),
        act("TRAVERSE", "Q900000401", "P1346"),
        act("PROPERTIES", "Q5812"),
        act("STOP", "P1346 gives the winner and P19 the place of birth."),
        query("The query follows winner (P1346) and place of birth (P19).", """
SELECT ?place ?placeLabel WHERE {
  wd:Q900000401 wdt:P1346 ?winner .
  ?winner wdt:P19 ?place .
  ?place rdfs:label ?placeLabel .
}
"""),
        "The winner, Novak Djokovic, was born in Belgrade.\nAnswer: Belgrade",
    ],
    "int-1": SESSIONS["poseidon"]["replies"],
}

EVAL_BASELINE = {
    "cmp-1": ["Poseidon came out in 2006, after the band formed.\nAnswer: Black Eyed Peas"],
    "yn-1": ["Yes, she joined in 2002.\nAnswer: Yes"],
    "gen-1": ["Roger Federer won in 2019.\nAnswer: Roger Federer"],
    "mh-1": ["He was born in Basel.\nAnswer: Basel"],
    "int-1": ["will.i.am appeared in Poseidon.\nAnswer: will.i.am"],
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, s in SESSIONS.items():
        (OUT / f"{name}.json").write_text(
            json.dumps({s["question"]: s["replies"]}, ensure_ascii=False, indent=1) + "\n",
            encoding="utf-8")
        manifest.append({"name": name, "question": s["question"],
                         "userReplies": s.get("userReplies", []),
                         "execute": not name.startswith("hallucination")})
    (OUT / "sessions.json").write_text(json.dumps(manifest, ensure_ascii=False, indent=1) + "\n",
                                       encoding="utf-8")

    texts = {q["id"]: q["text"] for q in EVAL_BANK}
    (OUT / "eval-protocol.json").write_text(json.dumps(
        {texts[k]: v for k, v in EVAL_PROTOCOL.items()}, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8")
    (OUT / "eval-baseline.json").write_text(json.dumps(
        {texts[k]: v for k, v in EVAL_BASELINE.items()}, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8")
    data = OUT.parent.parent / "data"
    data.mkdir(exist_ok=True)
    (data / "sample_bank.jsonl").write_text(
        "".join(json.dumps(q, ensure_ascii=False) + "\n" for q in EVAL_BANK), encoding="utf-8")
    print(f"wrote {len(SESSIONS)} session scripts, eval scripts and data/sample_bank.jsonl")


if __name__ == "__main__":
    main()
