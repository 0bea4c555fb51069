from __future__ import annotations

import random

import pytest

from lexforge import ontology as onto
from lexforge.bank import DATA
from lexforge.ontology import Concept, Ontology, OntologyError, UnknownConcept
from lexforge.tfs import TOP, TypeHierarchy


def random_dag(n: int, seed: int) -> Ontology:
    rng = random.Random(seed)
    concepts = {"EVENT": Concept("EVENT", "EVENT")}
    names = ["EVENT"]
    for i in range(1, n):
        name = f"C{i}"
        k = rng.randint(1, min(3, len(names)))
        concepts[name] = Concept(name, "EVENT", tuple(rng.sample(names, k)))
        names.append(name)
    return Ontology(concepts)


def warshall(o: Ontology) -> dict[tuple[str, str], bool]:
    names = list(o.concepts)
    reach = {(a, b): a == b or b in o.concepts[a].parents for a in names for b in names}
    for k in names:
        for i in names:
            if reach[(i, k)]:
                for j in names:
                    if reach[(k, j)]:
                        reach[(i, j)] = True
    return reach


@pytest.mark.parametrize("seed", range(5))
def test_is_a_matches_transitive_closure(seed):
    o = random_dag(30, seed)
    reach = warshall(o)
    for (a, b), expected in reach.items():
        assert o.is_a(a, b) == expected


def test_is_a_agrees_with_type_hierarchy():
    o = random_dag(30, 9)
    h = o.add_to_hierarchy(TypeHierarchy())
    for a in o.concepts:
        for b in o.concepts:
            assert h.is_subtype(a, b) == o.is_a(a, b)
        assert h.is_subtype(a, TOP)


def test_shipped_ontology_loads():
    o = onto.load(DATA / "ontology.jsonl")
    assert o.is_a("BUY", "EVENT")
    assert o.role_constraint("BUY", "agent") == "HUMAN"
    assert o.kind("HUMAN") == "OBJECT"


def test_role_constraint_is_inherited_from_nearest_ancestor():
    o = Ontology({
        "EVENT": Concept("EVENT", "EVENT", (), (("agent", "OBJECT"),)),
        "OBJECT": Concept("OBJECT", "OBJECT"),
        "HUMAN": Concept("HUMAN", "OBJECT", ("OBJECT",)),
        "TRADE": Concept("TRADE", "EVENT", ("EVENT",), (("agent", "HUMAN"),)),
        "BUY": Concept("BUY", "EVENT", ("TRADE",)),
    })
    assert o.role_constraint("BUY", "agent") == "HUMAN"
    assert o.role_constraint("EVENT", "agent") == "OBJECT"
    assert o.role_constraint("BUY", "theme") is None


@pytest.mark.parametrize("concepts, message", [
    ({"EVENT": Concept("EVENT", "THING")}, "kind"),
    ({"EVENT": Concept("EVENT", "EVENT"), "X": Concept("X", "EVENT")}, "lack parents"),
    ({"EVENT": Concept("EVENT", "EVENT"), "X": Concept("X", "EVENT", ("Y",))}, "unknown parent"),
    ({"EVENT": Concept("EVENT", "EVENT"), "OBJECT": Concept("OBJECT", "OBJECT"),
      "X": Concept("X", "EVENT", ("OBJECT",))}, "another kind"),
    ({"EVENT": Concept("EVENT", "EVENT", (), (("agent", "NOPE"),))}, "dangling"),
    ({"EVENT": Concept("EVENT", "EVENT"), "A": Concept("A", "EVENT", ("EVENT", "B")),
      "B": Concept("B", "EVENT", ("A",))}, "cycle"),
])
def test_validation_errors(concepts, message):
    with pytest.raises(OntologyError, match=message):
        Ontology(concepts)


def test_unknown_concept():
    o = random_dag(3, 0)
    with pytest.raises(UnknownConcept):
        o.is_a("NOPE", "EVENT")


def test_round_trip_is_a_fixpoint(tmp_path):
    o = onto.load(DATA / "ontology.jsonl")
    path = tmp_path / "o.jsonl"
    o.save(path)
    again = onto.load(path)
    assert again.concepts == o.concepts
    assert again.dumps() == o.dumps()


def test_header_count_is_checked():
    text = onto.load(DATA / "ontology.jsonl").dumps()
    lines = text.splitlines()
    with pytest.raises(OntologyError, match="announces"):
        onto.loads("\n".join(lines[:-1]))
    with pytest.raises(OntologyError, match="not an ontology"):
        onto.loads('{"format": "x"}\n')


# hand-computed from the shipped file: child concepts that omit a role inherit it
INHERITED = [
    ("ARTICULATE", "agent", "HUMAN"),
    ("ARTICULATE", "theme", "INFORMATION"),
    ("DECLARE", "beneficiary", "HUMAN"),
    ("HEAR", "experiencer", "ANIMATE"),
    ("HEAR", "theme", "OBJECT"),
    ("NOTICE", "theme", "OBJECT"),
    ("READ", "theme", "INFORMATION"),
    ("READ", "experiencer", "ANIMATE"),
    ("BUY", "experiencer", None),
    ("EVENT", "agent", None),
    ("QUALITY", "agent", None),
]


@pytest.mark.parametrize("concept, role, expected", INHERITED)
def test_role_constraint_table_for_shipped_ontology(concept, role, expected):
    o = onto.load(DATA / "ontology.jsonl")
    assert o.role_constraint(concept, role) == expected


def test_is_a_is_reflexive():
    o = onto.load(DATA / "ontology.jsonl")
    assert all(o.is_a(c, c) for c in o.concepts)
