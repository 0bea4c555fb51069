"""One test per primary acceptance criterion; results are summarised at the end of the run."""
from __future__ import annotations

import time
from collections import Counter
from contextlib import contextmanager

import test_lexicon
import test_rules
import test_tfs
import test_validator
from conftest import ACCEPTANCE, GOLDEN, read_rows
from lexforge.bank import DATA
from lexforge.morphgen import derive_forms, tsv
from lexforge.pipeline import Pipeline
from lexforge.tfs import format_zones
from lexforge.validator import read_wordlist, validate
from test_validator import LABEL_DISCREPANCIES


@contextmanager
def criterion(name: str):
    ACCEPTANCE[name] = "FAIL"
    yield
    ACCEPTANCE[name] = "PASS"


def signature(e):
    """Entry identity for comparison, ignoring the sense ordinal and flags."""
    return (e.citation, e.cat, e.lex_rul, tuple(format_zones([e.sem, e.syn])))


def forms(ws, citation):
    s = ws.lexicon.get_superentry(citation)
    return derive_forms(s, ws.bank_for(s).morph)


def test_figure4_golden_reproduction(base_ws):
    with criterion("Figure 4 golden reproduction"):
        start = time.perf_counter()
        rows = forms(base_ws, "comprar")
        elapsed = time.perf_counter() - start
        assert len(rows) == 39
        assert tsv(rows) == (GOLDEN / "figure4.tsv").read_text(encoding="utf-8")
        assert elapsed < 1.0


def test_figure5_filtering(base_ws, fig5_res):
    with criterion("Figure 5 filtering"):
        start = time.perf_counter()
        s = base_ws.lexicon.get_superentry("comprar")
        bank = base_ws.bank_for(s)
        cands = bank.engine.expand(s, derive_forms(s, bank.morph), "lhs", base_ws.lexicon.snapshot())
        part = validate(cands, fig5_res)
        elapsed = time.perf_counter() - start
        golden = read_rows(GOLDEN / "figure5.tsv")
        assert Counter((c.surface, c.pos) for c in part.accepted) == Counter((f, p) for f, p, _ in golden)
        resolve = lambda labels: tuple(bank.rules.get(l).rule_id for l in labels)
        accepted = Counter((c.surface, c.pos, resolve(c.labels)) for c in part.accepted)
        agreeing = Counter((f, p, resolve(l)) for f, p, l in golden if (f, p, l) not in LABEL_DISCREPANCIES)
        assert sum(agreeing.values()) == len(golden) - 2
        assert agreeing <= accepted
        assert elapsed < 1.0


def test_figure2_to_figure3_transformation(base_ws):
    with criterion("Figure 2 to 3 transformation"):
        es = base_ws.banks["es"]
        src = base_ws.lexicon.entry("comprar-V1")
        e = es.engine.apply_rule("LR2event", src, "compra", lexicon=base_ws.lexicon).entry
        assert e.sense_id == "compra-N1"
        assert e.cat == "N"
        assert e.sem.type == "BUY" == src.sem.type
        assert e.dfn == src.dfn
        assert e.ex == ""
        assert e.lex_rul == (("comprar-V1", es.rules.get("LR2event").rule_id),)


def test_per_sense_polysemy(base_ws):
    with criterion("Per-sense polysemy"):
        s = base_ws.lexicon.get_superentry("pronunciar")
        assert len(s.entries) == 2
        bank = base_ws.bank_for(s)
        cands = bank.engine.expand(s, derive_forms(s, bank.morph), "lhs")
        pron = [c for c in cands if c.surface == "pronunciación"]
        assert len(pron) == 2
        assert {c.source_sense for c in pron} == {"pronunciar-V1", "pronunciar-V2"}


def test_allomorphy_and_alternation_desk_cases(base_ws):
    with criterion("Allomorphy/alternation desk cases"):
        expected = {
            "controlar": {"incontrolable"},
            "tratar": {"intratable"},
            "beber": {"bebedero", "bebedor", "bebido", "bebida"},
            "volver": {"vuelto"},
            "comunicar": {"telecomunicación"},
        }
        for verb, want in expected.items():
            assert want <= {f.surface for f in forms(base_ws, verb)}, verb


def test_blocking(base_ws):
    with criterion("Blocking"):
        en = base_ws.banks["en"]
        assert {"kill", "relate", "necessitate"} <= en.rules.get("able_rule").block_list
        surfaces = set()
        for verb in ("kill", "relate", "necessitate"):
            s = base_ws.lexicon.get_superentry(verb)
            surfaces |= {c.surface for c in en.engine.expand(s, derive_forms(s, en.morph), "lhs")}
        assert not surfaces & {"killable", "relatable", "necessitatable"}
        assert "audible" in {f.surface for f in forms(base_ws, "hear")}
        assert "legible" in {f.surface for f in forms(base_ws, "read")}


def test_runtime_fallback(ws, fig5_res):
    with criterion("Run-time fallback"):
        app = Pipeline(ws.subset(["abuse"]))
        assert not any(e.cat == "ADJ" for e in app.lexicon.entries())
        found = app.runtime_lookup("abusive")
        assert len(found) == 1
        assert found[0].cat == "ADJ" and found[0].lex_rul[0][0] == "abuse-V1"
        comprar = Pipeline(ws.subset(["comprar"]), fig5_res)
        comprar.acquire(["comprar"])
        assert "supercompra" in {c.surface for c in comprar.audit}
        assert any(e.citation == "supercompra" for e in comprar.runtime_lookup("supercompra"))


def test_throughput_statistic(ws):
    with criterion("Throughput statistic (property)"):
        start = time.perf_counter()
        verbs = read_wordlist(DATA / "sample_verbs.txt")
        assert len(verbs) >= 5
        app = Pipeline(ws)
        for verb in verbs:
            report = app.acquire([verb])
            report.check()
            assert 20 <= report.per_sense_mean <= 40, verb
        total = Pipeline(ws).acquire(verbs)
        total.check()
        assert total.verbs_processed == len(verbs)
        assert sum(total.partition_counts) == total.candidates_generated
        assert time.perf_counter() - start < 5.0


def test_property_suites(base_ws, tmp_path):
    with criterion("Property suites"):
        start = time.perf_counter()
        # unification laws and subsumption coherence, 1225 pairs
        test_tfs.test_lattice_laws_on_pool()
        test_tfs.test_unify_matches_path_oracle_on_pool()
        test_tfs.test_absorption_with_generalisation()
        # validator partition
        test_validator.test_partition_is_total_and_disjoint(base_ws, None)
        test_validator.test_partition_is_monotone_in_resources(base_ws)
        # provenance replay and blocking monotonicity
        test_rules.test_provenance_replay(base_ws)
        test_rules.test_blocking_monotonicity(base_ws)
        # store round-trip fixpoint
        test_lexicon.test_save_load_fixpoint(base_ws, tmp_path)
        assert time.perf_counter() - start < 30.0


def test_mode_equivalence(comprar_app):
    with criterion("Mode equivalence"):
        snap = comprar_app.lexicon.snapshot()
        cands = comprar_app.candidates_for(snap.get_superentry("comprar"), snap)
        accepted_surfaces = {c.surface for c in validate(cands, comprar_app.resources).accepted}
        _, admitted = comprar_app.load_time_expand()
        union = {}
        for surface in sorted(accepted_surfaces):
            for e in comprar_app.runtime_lookup(surface):
                if e.derived:
                    union[signature(e)] = e
        assert Counter(signature(e) for e in admitted) == Counter(union.keys())

