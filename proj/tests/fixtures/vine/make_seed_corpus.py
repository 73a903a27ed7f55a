"""Writes the Re-TACRED-shaped seed fixtures used by the VINE tests.

Offsets are code-point indices, [start, end).
"""
import json
import random

RELATIONS = {
    "per:siblings": ["{h} 's brother , {t} , told reporters that he was relieved .",
                     "{h} and her sister {t} attended the ceremony ."],
    "per:parents": ["{h} was raised by {t} in a small town .",
                    "Relatives said {h} had visited {t} , who is now 80 ."],
    "per:spouse": ["{h} married {t} in 1998 , and {h} later moved abroad .",
                   "{h} , the wife of {t} , declined to comment ."],
    "per:employee_of": ["{h} , a spokesman for {t} , confirmed the report .",
                        "{h} joined {t} as an analyst ."],
    "org:founded_by": ["{h} was founded by {t} in 1987 .",
                       "{t} started {h} after leaving college ."],
    "org:city_of_branch": ["{h} opened a new office in {t} last year .",
                           "The {t} branch of {h} employs 300 people ."],
    "per:origin": ["{h} , who is {t} , won the race .",
                   "The {t} singer {h} released a new album ."],
    "per:title": ["{t} {h} spoke at the summit .",
                  "{h} served as {t} for a decade ."],
    "org:members": ["{t} joined {h} in 2004 .",
                    "{h} now counts {t} among its members ."],
    "per:cities_of_residence": ["{h} lives in {t} with his family .",
                                "{h} , a resident of {t} , filed the complaint ."],
}

FIRST = ["Anna", "Brian", "Chen", "Dmitri", "Elena", "Farid", "Grace", "Hiro", "Ines", "Jonas", "Kofi", "Lena",
         "Marco", "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq"]
LAST = ["Adler", "Brooks", "Castillo", "Dubois", "Eriksen", "Fischer", "Gupta", "Hansen", "Ivanova", "Jensen"]
ORGS = ["Northwind Traders", "Blue Harbor Bank", "Crescent Labs", "Delta Freight", "Evergreen Trust",
        "Falcon Media", "Granite Works", "Helix Pharma", "Ironwood Group", "Juniper Networks Ltd"]
PLACES = ["Tilburg", "Porto", "Kraków", "Osaka", "Nairobi", "Quito", "Reykjavík", "Tartu", "Gdańsk", "Cusco"]
TITLES = ["Senator", "Professor", "Chairman", "Mayor", "Ambassador"]
ORIGINS = ["Dutch", "Kenyan", "Peruvian", "Polish", "Icelandic"]


def person(rng):
    return f"{rng.choice(FIRST)} {rng.choice(LAST)}"


def tail_for(rel, rng):
    if rel in ("org:founded_by", "per:parents", "per:siblings", "per:spouse"):
        return person(rng)
    if rel == "org:members":
        return rng.choice(ORGS)
    if rel in ("org:city_of_branch", "per:cities_of_residence"):
        return rng.choice(PLACES)
    if rel == "per:title":
        return rng.choice(TITLES)
    if rel == "per:origin":
        return rng.choice(ORIGINS)
    return rng.choice(ORGS)


def head_for(rel, rng):
    return rng.choice(ORGS) if rel.startswith("org:") else person(rng)


def record(template, head, tail, rel):
    text = template.format(h=head, t=tail)
    hs = text.index(head)
    ts = text.index(tail) if head != tail else -1
    if ts < 0 or (hs < ts + len(tail) and ts < hs + len(head)):
        return None
    return {"text": text, "head": [hs, hs + len(head)], "tail": [ts, ts + len(tail)], "relation": rel}


def build(rng, per_relation):
    out = []
    for rel, templates in RELATIONS.items():
        made = 0
        while made < per_relation[rel]:
            r = record(rng.choice(templates), head_for(rel, rng), tail_for(rel, rng), rel)
            if r:
                out.append(r)
                made += 1
    return out


def dump(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


rng = random.Random(7)
dump("seed_200.jsonl", build(rng, {r: 20 for r in RELATIONS}))
deficient = {r: 10 for r in RELATIONS}
deficient["per:title"] = 9
dump("seed_deficient.jsonl", build(rng, deficient))
dump("train_pool.jsonl", build(rng, {r: (1 if r == "per:title" else 0) for r in RELATIONS}))
