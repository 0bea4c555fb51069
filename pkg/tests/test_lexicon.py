from __future__ import annotations

import random
import threading
from dataclasses import replace

import pytest

from lexforge.lexicon import (Admin, Entry, InvariantViolation, LexiconParseError, LexiconStore,
                              Superentry, split_sense_id)
from lexforge.tfs import parse_zones
from lexforge.workspace import DEFAULT_LEXICON


def test_put_then_get_round_trip(base_ws):
    s = base_ws.lexicon.get_superentry("comprar")
    store = LexiconStore(base_ws.hierarchy, base_ws.ontology)
    store.put_superentry(s)
    assert store.get_superentry("comprar") == s
    assert store.get_superentry("comprar", "es") == s
    assert store.get_superentry("comprar", "en") is None


def test_pronunciar_has_two_entries(base_ws):
    s = base_ws.lexicon.get_superentry("pronunciar")
    assert [e.sense_id for e in s.entries] == ["pronunciar-V1", "pronunciar-V2"]
    assert {e.dfn for e in s.entries} == {"articulate", "declare"}


def test_count_equals_file_records(base_ws):
    lines = [ln for ln in DEFAULT_LEXICON.read_text(encoding="utf-8").splitlines()[1:] if ln.strip()]
    assert len(base_ws.lexicon) == len(lines)
    assert len(list(base_ws.lexicon.entries())) == len(lines)


def test_next_sense_id(ws):
    store = LexiconStore(ws.hierarchy, ws.ontology)
    assert store.next_sense_id("compra", "N") == "compra-N1"
    store2 = LexiconStore(ws.hierarchy, ws.ontology)
    e = _entry(ws, "compra-N1", "N")
    store2.add_entry(e, "es")
    assert store2.next_sense_id("compra", "N") == "compra-N2"


def _entry(ws, sense_id: str, cat: str) -> Entry:
    sem, syn = parse_zones(["BUY[agent: [11] HUMAN]", f"[root: [0] {cat}, subj: [1] [sem: [11]]]"],
                           ws.hierarchy)
    return Entry(sense_id, cat, "d", "", Admin("t"), syn, sem)


@pytest.mark.parametrize("k", [1, 2, 7, 50, 100])
def test_interleaved_allocation_has_no_duplicates(ws, k):
    store = LexiconStore(ws.hierarchy, ws.ontology)
    rng = random.Random(k)
    issued: dict[tuple[str, str], list[str]] = {}
    keys = [("compra", "N"), ("compra", "ADJ"), ("venta", "N")]
    for _ in range(k * len(keys)):
        key = rng.choice(keys)
        issued.setdefault(key, []).append(store.next_sense_id(*key))
    for key, ids in issued.items():
        ordinals = [split_sense_id(i)[2] for i in ids]
        assert ordinals == list(range(1, len(ids) + 1))


def test_threaded_allocation_has_no_duplicates(ws):
    store = LexiconStore(ws.hierarchy, ws.ontology)
    out: list[str] = []
    lock = threading.Lock()

    def work():
        for _ in range(25):
            sid = store.next_sense_id("compra", "N")
            with lock:
                out.append(sid)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(split_sense_id(s)[2] for s in out) == list(range(1, 101))


def test_lookup_form(base_ws):
    assert [e.sense_id for e in base_ws.lexicon.lookup_form("comprar")] == ["comprar-V1"]
    assert base_ws.lexicon.lookup_form("zzzz") == []
    for s in base_ws.lexicon.superentries():
        for e in s.entries:
            assert e in base_ws.lexicon.lookup_form(e.citation)


def test_save_load_fixpoint(base_ws, tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    base_ws.lexicon.save(first)
    LexiconStore.load(first, base_ws.hierarchy, base_ws.ontology).save(second)
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text(encoding="utf-8") == DEFAULT_LEXICON.read_text(encoding="utf-8")


def test_figure2_reentrancy_survives_round_trip(base_ws, tmp_path):
    path = tmp_path / "lex.jsonl"
    base_ws.lexicon.save(path)
    again = LexiconStore.load(path, base_ws.hierarchy, base_ws.ontology)
    e = again.entry("comprar-V1")
    assert e.syn.get("subj.sem") is e.sem["agent"]
    assert e.syn.get("obj.sem") is e.sem["theme"]
    assert e.sem["agent"].tag == 11 and e.sem["agent"].type == "HUMAN"
    assert e.dfn == "acquire the possession or right by paying or promising to pay"


def test_truncation_never_loads_silently(base_ws, tmp_path):
    data = DEFAULT_LEXICON.read_bytes()
    full = len(base_ws.lexicon)
    rng = random.Random(0)
    cuts = {i + 1 for i, b in enumerate(data) if b == ord("\n")}
    cuts |= set(rng.sample(range(len(data)), 200))
    cuts.discard(len(data))
    path = tmp_path / "cut.jsonl"
    for cut in sorted(cuts):
        path.write_bytes(data[:cut])
        try:
            store = LexiconStore.load(path, base_ws.hierarchy, base_ws.ontology)
        except LexiconParseError:
            continue
        # dropping only the trailing newline leaves every record intact
        assert len(store) == full, cut


def test_invariants_are_enforced(ws):
    e = ws.lexicon.entry("comprar-V1")
    with pytest.raises(InvariantViolation):
        ws.lexicon.put_superentry(Superentry("comprar", "es", (e, e)))
    with pytest.raises(InvariantViolation):
        ws.lexicon.put_superentry(Superentry("compra", "es", (e,)))
    with pytest.raises(InvariantViolation):
        ws.lexicon.put_superentry(Superentry("comprar", "es", (replace(e, cat="N"),)))
    with pytest.raises(InvariantViolation):
        ws.lexicon.put_superentry(Superentry("comprar", "es", (replace(e, lex_rul=(("comprar-V1", "x"),)),)))
    sem, syn = parse_zones(["OBJECT", "[root: [0] V, subj: [sem: [11] HUMAN]]"], ws.hierarchy)
    with pytest.raises(InvariantViolation, match="inside sem"):
        ws.lexicon.put_superentry(Superentry("comprar", "es", (replace(e, sem=sem, syn=syn),)))
    # a failed write leaves the store as it was
    assert ws.lexicon.entry("comprar-V1") == e


def test_derivation_cycles_are_rejected(ws):
    a = replace(_entry(ws, "compra-N1", "N"), lex_rul=(("compra-N2", "r"),))
    b = replace(_entry(ws, "compra-N2", "N"), lex_rul=(("compra-N1", "r"),))
    with pytest.raises(InvariantViolation, match="ancestor"):
        ws.lexicon.put_superentry(Superentry("compra", "es", (a, b)))


def test_snapshot_isolation(ws):
    snap = ws.lexicon.snapshot()
    before = len(snap)
    ws.lexicon.add_entry(_entry(ws, "compra-N1", "N"), "es")
    assert len(snap) == before
    assert "compra-N1" not in snap
    assert "compra-N1" in ws.lexicon.snapshot()


def test_add_entry_renumbers_taken_ids(ws):
    ws.lexicon.add_entry(_entry(ws, "compra-N1", "N"), "es")
    second = ws.lexicon.add_entry(_entry(ws, "compra-N1", "N"), "es")
    assert second.sense_id == "compra-N2"


@pytest.mark.parametrize("text, message", [
    ("", "empty"),
    ("nope\n", "bad header"),
    ('{"format": "other"}\n', "not a lexforge"),
    ('{"format": "lexforge-lexicon", "records": 1}\n{"citation": "x"}\n', "missing field"),
])
def test_parse_errors(base_ws, text, message):
    with pytest.raises(LexiconParseError, match=message):
        LexiconStore.loads(text, base_ws.hierarchy, base_ws.ontology)
