"""Loading the per-language bank file.

One JSON document holds both halves of a language's derivational
knowledge: the morphology section (alternation classes, affixes, itemized
forms, orthographic repairs) and the lexical rule section (rules and syntax
templates).  Every label the morphology can emit must name a rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .lexicon import POS, build_hierarchy
from .morphgen import (Allomorph, AffixRule, Condition, ItemizedForm, MorphBank,
                       MorphError, StemAlternation, POS_TO_CAT)
from .ontology import Ontology
from .rules import LexicalRule, RuleBank, RuleEngine, RuleError, UnknownRule
from .tfs import FSError, TypeHierarchy, parse_fs

FORMAT = "lexforge-bank"
DATA = Path(__file__).parent / "data"


class BankError(Exception):
    pass


@dataclass
class LanguageBank:
    language: str
    morph: MorphBank
    rules: RuleBank
    engine: RuleEngine
    source: str = ""

    def with_rules(self, rules: RuleBank) -> "LanguageBank":
        return LanguageBank(self.language, self.morph, rules, self.engine.with_bank(rules), self.source)


def read(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BankError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise BankError(f"{path}: not a bank file")
    doc.setdefault("_source", str(path))
    return doc


def values(docs: Iterable[Mapping]) -> list[str]:
    """Feature values declared by the banks, in first-seen order."""
    return list(dict.fromkeys(v for d in docs for v in d.get("values", ())))


def _condition(raw: Mapping | None) -> Condition:
    if not raw:
        return Condition()
    unknown = set(raw) - {"stem_matches", "classes", "citations", "citation_prefix", "base_pos"}
    if unknown:
        raise BankError(f"unknown condition keys {sorted(unknown)}")

    def tup(key):
        v = raw.get(key)
        return None if v is None else tuple(v)

    return Condition(raw.get("stem_matches"), tup("classes"), tup("citations"),
                     tup("citation_prefix"), tup("base_pos"))


def _affix(raw: Mapping) -> AffixRule:
    if "allomorphs" in raw:
        allos = tuple(Allomorph(a["form"], _condition(a["if"]) if a.get("if") else None)
                      for a in raw["allomorphs"])
    else:
        allos = (Allomorph(raw.get("affix", "")),)
    feeds = raw.get("feeds")
    return AffixRule(
        rule_id=raw["id"],
        kind=raw.get("kind", "suffix"),
        allomorphs=allos,
        pos=raw["pos"],
        labels=tuple(raw.get("labels", ())),
        slot=raw.get("slot", "form"),
        attachment=raw.get("attachment", "concatenation"),
        when=_condition(raw.get("when")),
        chainable=bool(raw.get("chainable", False)),
        feeds=None if feeds is None else tuple(feeds),
        identity=bool(raw.get("identity", False)),
    )


def _morph(doc: Mapping) -> MorphBank:
    return MorphBank(
        language=doc["language"],
        alternations=tuple(StemAlternation(a["class"], a.get("pattern", ""), dict(a.get("slots", {})))
                           for a in doc.get("alternations", ())),
        affixes=tuple(_affix(a) for a in doc.get("affixes", ())),
        itemized=tuple(ItemizedForm(i["id"], i["citation"], i["surface"], i["pos"], tuple(i["labels"]))
                       for i in doc.get("itemized", ())),
        repairs=tuple((r["match"], r["replace"]) for r in doc.get("repairs", ())),
        depth_limit=int(doc.get("depth_limit", 2)),
    )


def _rule(raw: Mapping, hierarchy: TypeHierarchy) -> LexicalRule:
    surface = raw.get("surface", {})
    if raw.get("out_cat") not in POS:
        raise BankError(f"{raw.get('id')}: out_cat must be one of {POS}")
    return LexicalRule(
        rule_id=raw["id"],
        out_cat=raw["out_cat"],
        trigger=parse_fs(raw.get("trigger") or "*top*", hierarchy),
        sem_transform=tuple(tuple(op) for op in raw.get("sem", [["preserve-head"]])),
        syn_template=raw.get("syn", "preserve"),
        block_list=frozenset(raw.get("block", ())),
        preempt=bool(raw.get("preempt", False)),
        aliases=tuple(raw.get("aliases", ())),
        scope=raw.get("scope", "form"),
        surface_overrides=dict(surface.get("overrides", {})),
        surface_affix=surface.get("affix"),
        note=raw.get("note", ""),
    )


def compile_bank(doc: Mapping, ontology: Ontology, hierarchy: TypeHierarchy) -> LanguageBank:
    source = doc.get("_source", "<bank>")
    try:
        morph = _morph(doc)
        rules = RuleBank(tuple(_rule(r, hierarchy) for r in doc.get("rules", ())),
                         dict(doc.get("syn_templates", {})))
        engine = RuleEngine(rules, ontology, hierarchy, morph, doc["language"])
    except (KeyError, TypeError) as exc:
        raise BankError(f"{source}: malformed bank: missing or bad field {exc}") from None
    except (MorphError, RuleError, FSError) as exc:
        raise BankError(f"{source}: {exc}") from None
    affix_ids = {a.rule_id for a in morph.affixes}
    for affix in morph.affixes:
        if affix.pos not in POS_TO_CAT:
            raise BankError(f"{source}: {affix.rule_id}: unknown pos {affix.pos!r}")
        for other in set(affix.feeds or ()) - affix_ids:
            raise BankError(f"{source}: {affix.rule_id} feeds unknown affix {other!r}")
    for label in morph.labels():
        try:
            rules.get(label)
        except UnknownRule:
            raise BankError(f"{source}: label {label!r} names no lexical rule") from None
    for rule in rules:
        if rule.surface_affix is not None:
            try:
                morph.affix(rule.surface_affix)
            except MorphError as exc:
                raise BankError(f"{source}: {rule.rule_id}: {exc}") from None
    return LanguageBank(doc["language"], morph, rules, engine, source)


def load_banks(paths: Iterable[str | Path], ontology: Ontology,
               extra_values: Iterable[str] = ()) -> tuple[TypeHierarchy, dict[str, LanguageBank]]:
    """Read bank files, build the shared type hierarchy, and compile each bank."""
    docs = [read(p) for p in paths]
    hierarchy = build_hierarchy(ontology, values(docs) + list(extra_values))
    banks: dict[str, LanguageBank] = {}
    for doc in docs:
        bank = compile_bank(doc, ontology, hierarchy)
        if bank.language in banks:
            raise BankError(f"two banks for language {bank.language!r}")
        banks[bank.language] = bank
    return hierarchy, banks


def default_bank_paths() -> list[Path]:
    return sorted(DATA.glob("bank_*.json"))
