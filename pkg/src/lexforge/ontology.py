"""Mini world model: concepts, is-a links and case-role constraints."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .tfs import TOP, TypeHierarchy

KINDS = ("EVENT", "OBJECT", "PROPERTY")
FORMAT = "lexforge-ontology"


class OntologyError(Exception):
    pass


class UnknownConcept(OntologyError, KeyError):
    pass


@dataclass(frozen=True)
class Concept:
    name: str
    kind: str
    parents: tuple[str, ...] = ()
    roles: tuple[tuple[str, str], ...] = ()
    note: str = ""

    def role(self, name: str) -> str | None:
        return dict(self.roles).get(name)


@dataclass
class Ontology:
    """Read-only after construction; reload from file to change it."""

    concepts: dict[str, Concept] = field(default_factory=dict)

    def __post_init__(self):
        self._ancestors: dict[str, frozenset[str]] = {}
        self._validate()

    def _validate(self) -> None:
        for c in self.concepts.values():
            if c.kind not in KINDS:
                raise OntologyError(f"{c.name}: kind must be one of {KINDS}")
            if not c.parents and c.name != c.kind:
                raise OntologyError(f"{c.name}: only the {c.kind} root may lack parents")
            for p in c.parents:
                if p not in self.concepts:
                    raise OntologyError(f"{c.name}: unknown parent {p}")
                if self.concepts[p].kind != c.kind:
                    raise OntologyError(f"{c.name}: parent {p} is of another kind")
            for role, filler in c.roles:
                if filler not in self.concepts:
                    raise OntologyError(f"{c.name}.{role}: dangling filler {filler}")
        for name in self.concepts:
            self._ancestors[name] = self._closure(name, ())

    def _closure(self, name: str, trail: tuple[str, ...]) -> frozenset[str]:
        if name in trail:
            raise OntologyError(f"is-a cycle through {name}")
        if name in self._ancestors:
            return self._ancestors[name]
        out = {name}
        for p in self.concepts[name].parents:
            out |= self._closure(p, trail + (name,))
        return frozenset(out)

    def __contains__(self, name: object) -> bool:
        return name in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)

    def get(self, name: str) -> Concept:
        try:
            return self.concepts[name]
        except KeyError:
            raise UnknownConcept(name) from None

    def is_a(self, concept: str, ancestor: str) -> bool:
        self.get(concept)
        self.get(ancestor)
        return ancestor in self._ancestors[concept]

    def kind(self, concept: str) -> str:
        return self.get(concept).kind

    def role_constraint(self, concept: str, role: str) -> str | None:
        """Nearest filler constraint for ``role``, walking up the parents breadth first."""
        frontier = [concept]
        seen: set[str] = set()
        while frontier:
            nxt = []
            for name in frontier:
                if name in seen:
                    continue
                seen.add(name)
                c = self.get(name)
                filler = c.role(role)
                if filler is not None:
                    return filler
                nxt.extend(c.parents)
            frontier = nxt
        return None

    def add_to_hierarchy(self, hierarchy: TypeHierarchy) -> TypeHierarchy:
        """Register every concept as a type; kind roots hang off ``*top*``."""
        done: set[str] = set(hierarchy)

        def add(name):
            if name in done:
                return
            c = self.concepts[name]
            for p in c.parents:
                add(p)
            hierarchy.add(name, c.parents or (TOP,))
            done.add(name)

        for name in self.concepts:
            add(name)
        return hierarchy

    def ordered(self) -> list[Concept]:
        """Canonical order: kind, then depth, then name."""
        def depth(name):
            c = self.concepts[name]
            return 0 if not c.parents else 1 + max(depth(p) for p in c.parents)

        return sorted(self.concepts.values(),
                      key=lambda c: (KINDS.index(c.kind), depth(c.name), c.name))

    def dumps(self) -> str:
        lines = [json.dumps({"format": FORMAT, "version": 1, "records": len(self.concepts)})]
        for c in self.ordered():
            rec = {"name": c.name, "kind": c.kind, "parents": list(c.parents),
                   "roles": dict(c.roles)}
            if c.note:
                rec["note"] = c.note
            lines.append(json.dumps(rec, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def loads(text: str, source: str = "<string>") -> Ontology:
    lines = text.splitlines()
    if not lines:
        raise OntologyError(f"{source}: empty ontology file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise OntologyError(f"{source}:1: bad header: {exc}") from None
    if header.get("format") != FORMAT:
        raise OntologyError(f"{source}:1: not an ontology file")
    concepts: dict[str, Concept] = {}
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != header.get("records"):
        raise OntologyError(
            f"{source}: header announces {header.get('records')} records, found {len(body)}")
    for lineno, line in body:
        try:
            rec = json.loads(line)
            c = Concept(
                name=rec["name"],
                kind=rec["kind"],
                parents=tuple(rec.get("parents", ())),
                roles=tuple(rec.get("roles", {}).items()),
                note=rec.get("note", ""),
            )
        except (json.JSONDecodeError, KeyError, AttributeError) as exc:
            raise OntologyError(f"{source}:{lineno}: {exc}") from None
        if c.name in concepts:
            raise OntologyError(f"{source}:{lineno}: duplicate concept {c.name}")
        concepts[c.name] = c
    return Ontology(concepts)


def load(path: str | Path) -> Ontology:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))
