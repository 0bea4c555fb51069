"""Superentries, entries and the lexicon store.

The on-disk format is JSON lines: a header record announcing the record
count, then one entry per line ordered by citation, language and stored
sense order.  The ``syn`` and ``sem`` zones are written in the feature
structure syntax and share one tag namespace per entry.
"""
from __future__ import annotations

import json
import re
import threading
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .ontology import Ontology
from .tfs import FeatureStructure, FSError, TypeHierarchy, format_zones, parse_zones

POS = ("V", "N", "ADJ", "ADV")
SYN_TYPES = POS + ("NP", "PP", "AP", "S")
FORMAT = "lexforge-lexicon"

_SENSE_ID = re.compile(r"^(?P<citation>.+)-(?P<cat>V|N|ADJ|ADV)(?P<ordinal>[1-9]\d*)$")


class LexiconError(Exception):
    pass


class InvariantViolation(LexiconError):
    pass


class LexiconParseError(LexiconError):
    def __init__(self, message: str, source: str = "", line: int | None = None):
        where = f"{source}:{line}: " if line is not None else (f"{source}: " if source else "")
        super().__init__(where + message)
        self.line = line


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def split_sense_id(sense_id: str) -> tuple[str, str, int]:
    m = _SENSE_ID.match(sense_id)
    if not m:
        raise InvariantViolation(f"malformed sense id {sense_id!r}")
    return m["citation"], m["cat"], int(m["ordinal"])


def make_sense_id(citation: str, cat: str, ordinal: int) -> str:
    return f"{nfc(citation)}-{cat}{ordinal}"


def build_hierarchy(ontology: Ontology, values: Iterable[str] = ()) -> TypeHierarchy:
    """Type hierarchy for entries: syntactic atoms, feature values and concepts."""
    h = TypeHierarchy()
    h.add("syn-cat")
    for t in SYN_TYPES:
        h.add(t, ["syn-cat"])
    h.add("value")
    for v in values:
        h.add(v, ["value"])
    ontology.add_to_hierarchy(h)
    return h


@dataclass(frozen=True)
class Admin:
    by: str
    at: str = ""


@dataclass(frozen=True)
class Entry:
    sense_id: str
    cat: str
    dfn: str
    ex: str
    admin: Admin
    syn: FeatureStructure
    sem: FeatureStructure
    lex_rul: tuple[tuple[str, str], ...] = ()
    lr_items: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    @property
    def citation(self) -> str:
        return split_sense_id(self.sense_id)[0]

    @property
    def ordinal(self) -> int:
        return split_sense_id(self.sense_id)[2]

    @property
    def head(self) -> str:
        return self.sem.type

    @property
    def derived(self) -> bool:
        return bool(self.lex_rul)

    @property
    def rule_chain(self) -> tuple[str, ...]:
        return tuple(rule for _, rule in self.lex_rul)

    def key(self) -> tuple[str, str, tuple[str, ...]]:
        """Identity for de-duplication: surface, category and rule chain."""
        return (self.citation, self.cat, self.rule_chain)

    def with_flag(self, flag: str) -> "Entry":
        if flag in self.flags:
            return self
        return replace(self, flags=self.flags + (flag,))


def validate_entry(entry: Entry, hierarchy: TypeHierarchy, ontology: Ontology | None = None) -> None:
    citation, cat, _ = split_sense_id(entry.sense_id)
    if cat != entry.cat:
        raise InvariantViolation(f"{entry.sense_id}: id category {cat} differs from cat {entry.cat}")
    if entry.cat not in POS:
        raise InvariantViolation(f"{entry.sense_id}: unknown category {entry.cat}")
    try:
        hierarchy.check(entry.syn)
        hierarchy.check(entry.sem)
    except FSError as exc:
        raise InvariantViolation(f"{entry.sense_id}: {exc}") from None
    if ontology is not None and entry.sem.type not in ontology:
        raise InvariantViolation(f"{entry.sense_id}: sem head {entry.sem.type} is not a concept")
    owner: dict[int, FeatureStructure] = {}
    for root in (entry.syn, entry.sem):
        for node in root.nodes():
            if node.tag is None:
                continue
            if owner.setdefault(node.tag, node) is not node:
                raise InvariantViolation(f"{entry.sense_id}: tag [{node.tag}] names two nodes")
    sem_nodes = {id(n) for n in entry.sem.nodes()}
    for path, node in entry.syn.paths().items():
        if path and path[-1] == "sem" and id(node) not in sem_nodes:
            raise InvariantViolation(
                f"{entry.sense_id}: syn {'.'.join(path)} does not resolve inside sem")
    if any(src == entry.sense_id for src, _ in entry.lex_rul):
        raise InvariantViolation(f"{entry.sense_id}: derived from itself")


@dataclass(frozen=True)
class Superentry:
    citation: str
    language: str
    entries: tuple[Entry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "citation", nfc(self.citation))
        object.__setattr__(self, "entries", tuple(self.entries))

    def senses(self, cat: str | None = None) -> list[Entry]:
        return [e for e in self.entries if cat is None or e.cat == cat]

    def entry(self, sense_id: str) -> Entry | None:
        return next((e for e in self.entries if e.sense_id == sense_id), None)


# ---------------------------------------------------------------------------
# record (de)serialisation


def entry_to_record(entry: Entry, language: str) -> dict:
    sem_text, syn_text = format_zones([entry.sem, entry.syn])
    rec = {
        "citation": entry.citation,
        "language": language,
        "sense_id": entry.sense_id,
        "cat": entry.cat,
        "dfn": entry.dfn,
        "ex": entry.ex,
        "admin": {"by": entry.admin.by, "at": entry.admin.at},
        "syn": syn_text,
        "sem": sem_text,
        "lex_rul": [list(p) for p in entry.lex_rul],
    }
    if entry.lr_items:
        rec["lr_items"] = list(entry.lr_items)
    if entry.flags:
        rec["flags"] = list(entry.flags)
    return rec


def entry_from_record(rec: dict, hierarchy: TypeHierarchy) -> Entry:
    sem, syn = parse_zones([rec["sem"], rec["syn"]], hierarchy)
    admin = rec.get("admin") or {}
    return Entry(
        sense_id=nfc(rec["sense_id"]),
        cat=rec["cat"],
        dfn=rec.get("dfn", ""),
        ex=rec.get("ex", ""),
        admin=Admin(admin.get("by", ""), admin.get("at", "")),
        syn=syn,
        sem=sem,
        lex_rul=tuple((nfc(s), r) for s, r in rec.get("lex_rul", ())),
        lr_items=tuple(rec.get("lr_items", ())),
        flags=tuple(rec.get("flags", ())),
    )


# ---------------------------------------------------------------------------
# store


class SenseAllocator:
    """Smallest unused ordinal per (citation, cat), never reissued."""

    def __init__(self, used: Callable[[str, str], set[int]]):
        self._used = used
        self._issued: dict[tuple[str, str], set[int]] = {}
        self._lock = threading.Lock()

    def next(self, citation: str, cat: str, reserve: bool = True) -> str:
        citation = nfc(citation)
        key = (citation, cat)
        with self._lock:
            taken = self._used(citation, cat) | self._issued.get(key, set())
            n = 1
            while n in taken:
                n += 1
            if reserve:
                self._issued.setdefault(key, set()).add(n)
            return make_sense_id(citation, cat, n)


class LexiconView:
    """Read-only access to one consistent state of the lexicon."""

    def __init__(self, data: dict[tuple[str, str], Superentry], hierarchy: TypeHierarchy,
                 ontology: Ontology | None = None):
        self._data = data
        self.hierarchy = hierarchy
        self.ontology = ontology
        self._index()

    def _index(self) -> None:
        self._by_sense: dict[str, Entry] = {}
        self._by_form: dict[str, list[Entry]] = {}
        for key in sorted(self._data):
            s = self._data[key]
            for e in s.entries:
                self._by_sense[e.sense_id] = e
                self._by_form.setdefault(s.citation, []).append(e)

    def __len__(self) -> int:
        return len(self._by_sense)

    def __contains__(self, sense_id: object) -> bool:
        return sense_id in self._by_sense

    def superentries(self) -> list[Superentry]:
        return [self._data[k] for k in sorted(self._data)]

    def entries(self) -> Iterator[Entry]:
        for s in self.superentries():
            yield from s.entries

    def get_superentry(self, citation: str, language: str | None = None) -> Superentry | None:
        citation = nfc(citation)
        if language is not None:
            return self._data.get((citation, language))
        for key in sorted(self._data):
            if key[0] == citation:
                return self._data[key]
        return None

    def language_of(self, sense_id: str) -> str | None:
        for (citation, language), s in self._data.items():
            if s.entry(sense_id) is not None:
                return language
        return None

    def entry(self, sense_id: str) -> Entry | None:
        return self._by_sense.get(nfc(sense_id))

    def lookup_form(self, surface: str) -> list[Entry]:
        return list(self._by_form.get(nfc(surface), ()))

    def used_ordinals(self, citation: str, cat: str) -> set[int]:
        return {e.ordinal for e in self._by_form.get(nfc(citation), ()) if e.cat == cat}

    def has_underived(self, surface: str, cat: str) -> bool:
        return any(e.cat == cat and not e.derived for e in self.lookup_form(surface))

    def keys(self) -> set[tuple[str, str, tuple[str, ...]]]:
        return {e.key() for e in self.entries()}

    def allocator(self) -> SenseAllocator:
        return SenseAllocator(self.used_ordinals)

    def ancestors(self, sense_id: str) -> set[str]:
        out: set[str] = set()
        stack = [sense_id]
        while stack:
            e = self._by_sense.get(stack.pop())
            if e is None:
                continue
            for src, _ in e.lex_rul:
                if src not in out:
                    out.add(src)
                    stack.append(src)
        return out

    def dumps(self) -> str:
        records = []
        for s in self.superentries():
            for e in s.entries:
                records.append(json.dumps(entry_to_record(e, s.language), ensure_ascii=False))
        header = json.dumps({"format": FORMAT, "version": 1, "records": len(records)})
        return "\n".join([header] + records) + "\n"

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        tmp.replace(path)


class LexiconStore(LexiconView):
    """Mutable lexicon with a single-writer commit point.

    Every write builds a new state and swaps it in under the lock, so a
    :meth:`snapshot` taken by a reader never sees a half-applied change.
    """

    def __init__(self, hierarchy: TypeHierarchy, ontology: Ontology | None = None,
                 superentries: Iterable[Superentry] = ()):
        super().__init__({}, hierarchy, ontology)
        self.lock = threading.RLock()
        self.revision = 0
        self._sessions = SenseAllocator(lambda c, k: self.used_ordinals(c, k))
        if superentries:
            self.put_many(superentries)

    def snapshot(self) -> LexiconView:
        with self.lock:
            return LexiconView(self._data, self.hierarchy, self.ontology)

    def copy(self) -> "LexiconStore":
        return LexiconStore(self.hierarchy, self.ontology, self.superentries())

    def next_sense_id(self, citation: str, cat: str) -> str:
        return self._sessions.next(citation, cat)

    def put_superentry(self, s: Superentry) -> None:
        self.put_many([s])

    def put_many(self, superentries: Iterable[Superentry]) -> None:
        with self.lock:
            data = dict(self._data)
            for s in superentries:
                self._check_superentry(s)
                data[(s.citation, s.language)] = s
            self._commit(data)

    def add_entry(self, entry: Entry, language: str) -> Entry:
        """Append one entry to its superentry, re-numbering it if the id is taken."""
        with self.lock:
            citation, cat, _ = split_sense_id(entry.sense_id)
            if entry.sense_id in self._by_sense:
                entry = replace(entry, sense_id=self.next_sense_id(citation, cat))
            current = self._data.get((citation, language)) or Superentry(citation, language)
            updated = replace(current, entries=current.entries + (entry,))
            self.put_superentry(updated)
            return entry

    def replace_entry(self, entry: Entry) -> None:
        with self.lock:
            for key, s in self._data.items():
                if s.entry(entry.sense_id) is not None:
                    entries = tuple(entry if e.sense_id == entry.sense_id else e for e in s.entries)
                    self.put_superentry(replace(s, entries=entries))
                    return
            raise LexiconError(f"no entry {entry.sense_id}")

    def _check_superentry(self, s: Superentry) -> None:
        if not s.citation:
            raise InvariantViolation("empty citation form")
        seen = set()
        for e in s.entries:
            if e.citation != s.citation:
                raise InvariantViolation(f"{e.sense_id} does not belong under {s.citation!r}")
            if e.sense_id in seen:
                raise InvariantViolation(f"duplicate sense id {e.sense_id}")
            seen.add(e.sense_id)
            validate_entry(e, self.hierarchy, self.ontology)

    def _commit(self, data: dict[tuple[str, str], Superentry]) -> None:
        old = (self._data, self._by_sense, self._by_form)
        self._data = data
        try:
            self._index()
            total = sum(len(s.entries) for s in data.values())
            if len(self._by_sense) != total:
                raise InvariantViolation("sense ids must be unique across the lexicon")
            for e in self._by_sense.values():
                if e.lex_rul and e.sense_id in self.ancestors(e.sense_id):
                    raise InvariantViolation(f"{e.sense_id} is its own derivational ancestor")
        except Exception:
            self._data, self._by_sense, self._by_form = old
            raise
        self.revision += 1

    @classmethod
    def loads(cls, text: str, hierarchy: TypeHierarchy, ontology: Ontology | None = None,
              source: str = "<string>") -> "LexiconStore":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise LexiconParseError("empty lexicon file", source)
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise LexiconParseError(f"bad header: {exc.msg}", source, 1) from None
        if not isinstance(header, dict) or header.get("format") != FORMAT:
            raise LexiconParseError("not a lexforge lexicon file", source, 1)
        expected = header.get("records")
        groups: dict[tuple[str, str], list[Entry]] = {}
        count = 0
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                entry = entry_from_record(rec, hierarchy)
                key = (nfc(rec["citation"]), rec["language"])
            except json.JSONDecodeError as exc:
                raise LexiconParseError(f"malformed record: {exc.msg}", source, lineno) from None
            except (KeyError, TypeError) as exc:
                raise LexiconParseError(f"missing field {exc}", source, lineno) from None
            except FSError as exc:
                raise LexiconParseError(str(exc), source, lineno) from None
            groups.setdefault(key, []).append(entry)
            count += 1
        if count != expected:
            raise LexiconParseError(
                f"header announces {expected} records but {count} were read (truncated file?)", source)
        store = cls(hierarchy, ontology)
        store.put_many(Superentry(c, lang, tuple(es)) for (c, lang), es in groups.items())
        return store

    @classmethod
    def load(cls, path: str | Path, hierarchy: TypeHierarchy,
             ontology: Ontology | None = None) -> "LexiconStore":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise LexiconParseError(f"not UTF-8: {exc}", str(path)) from None
        return cls.loads(text, hierarchy, ontology, str(path))
