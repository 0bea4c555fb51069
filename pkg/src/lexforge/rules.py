"""The lexical rule processor.

A lexical rule turns an existing entry into a new one: it may change the
category, transform the semantics (usually keeping the head concept), and
rebuild the syntax from a template.  Rules are triggered either by an
explicit list on the entry (itemization) or by a left-hand-side pattern that
must subsume the entry.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .lexicon import (Admin, Entry, InvariantViolation, LexiconView, Superentry,
                      make_sense_id, nfc, validate_entry)
from .morphgen import POS_TO_CAT, DerivedForm, MorphBank, attach, alternants, MorphError
from .ontology import Ontology
from .tfs import (TOP, FeatureStructure, FSError, TypeHierarchy, UnificationFailure,
                  parse_fs, subsumes, unify)

log = logging.getLogger(__name__)


class RuleError(Exception):
    pass


class UnknownRule(RuleError, KeyError):
    pass


class Blocked(RuleError):
    def __init__(self, rule_id: str, verdict: "BlockVerdict", detail: str = ""):
        super().__init__(f"{rule_id} is blocked ({verdict.value}){': ' + detail if detail else ''}")
        self.verdict = verdict


class SemTransformFailure(RuleError):
    pass


class TriggerMode(str, Enum):
    ITEMIZED = "itemized"
    LHS = "lhs"
    HYBRID = "hybrid"


class BlockVerdict(str, Enum):
    NO = "no"
    LISTED = "listed"
    PREEMPTED = "preempted"


SEM_OPS = ("preserve-head", "add-role-filler", "add-feature", "reify-role")


@dataclass(frozen=True)
class LexicalRule:
    rule_id: str
    out_cat: str
    trigger: FeatureStructure
    sem_transform: tuple[tuple[str, ...], ...] = (("preserve-head",),)
    syn_template: str = "preserve"
    block_list: frozenset[str] = frozenset()
    preempt: bool = False
    aliases: tuple[str, ...] = ()
    scope: str = "form"  # form: interprets a morphological label; sense: derives senses directly
    surface_overrides: Mapping[str, str] = field(default_factory=dict)
    surface_affix: str | None = None
    note: str = ""

    def __post_init__(self):
        for op in self.sem_transform:
            if not op or op[0] not in SEM_OPS:
                raise RuleError(f"{self.rule_id}: unknown semantic transform {op!r}")

    @property
    def preserves_head(self) -> bool:
        return bool(self.sem_transform) and self.sem_transform[0][0] == "preserve-head"


@dataclass(frozen=True)
class RuleBank:
    rules: tuple[LexicalRule, ...] = ()
    syn_templates: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        names: dict[str, LexicalRule] = {}
        for rule in self.rules:
            for name in (rule.rule_id,) + rule.aliases:
                key = name.lower()
                if key in names and names[key] is not rule:
                    raise RuleError(f"rule name {name!r} is used twice")
                names[key] = rule
            if rule.syn_template != "preserve" and rule.syn_template not in self.syn_templates:
                raise RuleError(f"{rule.rule_id}: unknown syn template {rule.syn_template!r}")
        object.__setattr__(self, "_names", names)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def get(self, name: str) -> LexicalRule:
        """Case-insensitive lookup by id or alias."""
        try:
            return self._names[name.lower()]
        except KeyError:
            raise UnknownRule(name) from None

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and name.lower() in self._names

    def with_block(self, rule_id: str, key: str) -> "RuleBank":
        rule = self.get(rule_id)
        updated = replace(rule, block_list=rule.block_list | {key})
        return replace(self, rules=tuple(updated if r is rule else r for r in self.rules))


@dataclass
class CandidateEntry:
    """A generated entry awaiting validation and review."""

    entry: Entry
    source_sense: str
    surface: str
    rule_chain: tuple[str, ...]
    labels: tuple[str, ...] = ()
    derivation: tuple[str, ...] = ()
    language: str = ""
    validation: object | None = None
    review_status: str = "pending"

    @property
    def cat(self) -> str:
        return self.entry.cat

    @property
    def pos(self) -> str:
        return self.entry.cat.lower()

    def key(self) -> tuple[str, str, str, tuple[str, ...]]:
        return (self.surface, self.entry.cat, self.source_sense, self.rule_chain)


def entry_view(entry: Entry) -> FeatureStructure:
    """The structure rule triggers are matched against."""
    return FeatureStructure(TOP, {
        "cat": FeatureStructure(entry.cat),
        "syn": entry.syn,
        "sem": entry.sem,
    })


def _timestamp(now: datetime | None) -> str:
    return (now or datetime.now()).strftime("%Y-%m-%dT%H:%M:%S")


def _substitute(root: FeatureStructure, old: FeatureStructure, new: FeatureStructure) -> FeatureStructure:
    """Rebuild ``root`` with every reference to ``old`` pointing at ``new``; sharing is kept."""
    memo: dict[int, FeatureStructure] = {}

    def visit(node: FeatureStructure) -> FeatureStructure:
        if node is old:
            return new
        if id(node) in memo:
            return memo[id(node)]
        changed = {k: visit(v) for k, v in node.features.items()}
        if all(changed[k] is v for k, v in node.features.items()):
            out = node
        else:
            out = FeatureStructure(node.type, changed, node.tag)
        memo[id(node)] = out
        return out

    return visit(root)


def _retag(template: FeatureStructure, avoid: set[int]) -> FeatureStructure:
    clash = {n.tag for n in template.nodes() if n.tag is not None} & avoid
    if not clash:
        return template
    nxt = max(avoid | {n.tag for n in template.nodes() if n.tag is not None}) + 1
    mapping: dict[int, int] = {}
    for t in sorted(clash):
        mapping[t] = nxt
        nxt += 1
    memo: dict[int, FeatureStructure] = {}

    def visit(node):
        if id(node) not in memo:
            memo[id(node)] = FeatureStructure(
                node.type, {k: visit(v) for k, v in node.features.items()},
                mapping.get(node.tag, node.tag))
        return memo[id(node)]

    return visit(template)


class RuleEngine:
    """Applies a rule bank against one ontology and type hierarchy."""

    def __init__(self, bank: RuleBank, ontology: Ontology, hierarchy: TypeHierarchy,
                 morph: MorphBank | None = None, language: str = ""):
        self.bank = bank
        self.ontology = ontology
        self.hierarchy = hierarchy
        self.morph = morph
        self.language = language or (morph.language if morph else "")
        self._templates = {name: parse_fs(text, hierarchy) for name, text in bank.syn_templates.items()}

    def with_bank(self, bank: RuleBank) -> "RuleEngine":
        return RuleEngine(bank, self.ontology, self.hierarchy, self.morph, self.language)

    def resolve(self, label: str) -> LexicalRule:
        return self.bank.get(label)

    # -- triggering ---------------------------------------------------------

    def matches_lhs(self, rule: LexicalRule, entry: Entry) -> bool:
        return subsumes(rule.trigger, entry_view(entry), self.hierarchy)

    def triggers(self, rule: LexicalRule, entry: Entry, mode: TriggerMode,
                 itemization: Sequence[str] | None = None) -> bool:
        mode = TriggerMode(mode)
        listed = {self.resolve(r).rule_id for r in (entry.lr_items if itemization is None else itemization)}
        if mode is TriggerMode.ITEMIZED:
            return rule.rule_id in listed
        if mode is TriggerMode.LHS:
            return self.matches_lhs(rule, entry)
        return rule.rule_id in listed or self.matches_lhs(rule, entry)

    def trigger_rules(self, entry: Entry, mode: TriggerMode | str = TriggerMode.LHS) -> list[LexicalRule]:
        mode = TriggerMode(mode)
        itemized = [self.resolve(r) for r in entry.lr_items] if mode is not TriggerMode.LHS else []
        if mode is TriggerMode.ITEMIZED:
            return itemized
        matched = [r for r in self.bank.rules if self.matches_lhs(r, entry)]
        if mode is TriggerMode.LHS:
            return matched
        seen = {r.rule_id for r in itemized}
        return itemized + [r for r in matched if r.rule_id not in seen]

    # -- blocking -----------------------------------------------------------

    def is_blocked(self, rule: LexicalRule, source: Entry, surface: str,
                   lexicon: LexiconView | None = None) -> BlockVerdict:
        surface = nfc(surface)
        keys = {source.citation, source.sense_id, f"{source.sense_id}@{surface}"}
        if keys & rule.block_list:
            return BlockVerdict.LISTED
        if rule.preempt and lexicon is not None and lexicon.has_underived(surface, rule.out_cat):
            return BlockVerdict.PREEMPTED
        return BlockVerdict.NO

    # -- application --------------------------------------------------------

    def _transform_sem(self, rule: LexicalRule, sem: FeatureStructure) -> FeatureStructure:
        cur = sem
        for op in rule.sem_transform:
            name, args = op[0], op[1:]
            if name == "preserve-head":
                continue
            if name == "add-feature":
                feature, value = args
                if value not in self.hierarchy:
                    raise SemTransformFailure(f"{rule.rule_id}: unknown value {value!r}")
                cur = cur.evolve(features={feature: FeatureStructure(value)})
            elif name == "add-role-filler":
                role, spec = args
                filler = self._filler(rule, cur, role, spec)
                if role in cur:
                    try:
                        filler = unify(cur[role], filler, self.hierarchy)
                    except UnificationFailure as exc:
                        raise SemTransformFailure(f"{rule.rule_id}: {exc}") from None
                cur = cur.evolve(features={role: filler})
            elif name == "reify-role":
                (role,) = args
                filler = cur.get(role)
                if filler is None:
                    concept = self._constraint(cur.type, role)
                    if concept is None:
                        raise SemTransformFailure(
                            f"{rule.rule_id}: {cur.type} has no {role} to reify")
                    filler = FeatureStructure(concept)
                cur = FeatureStructure(filler.type, {
                    **filler.features, f"{role}-of": cur.evolve(drop=[role])})
        return cur

    def _constraint(self, concept: str, role: str) -> str | None:
        if concept not in self.ontology:
            return None
        return self.ontology.role_constraint(concept, role)

    def _filler(self, rule: LexicalRule, sem: FeatureStructure, role: str, spec: str) -> FeatureStructure:
        if spec.startswith("@"):
            other = sem.get(spec[1:])
            if other is not None:
                return other
            spec = "?"
        if spec == "?":
            concept = self._constraint(sem.type, role)
            if concept is None:
                raise SemTransformFailure(f"{rule.rule_id}: no {role} constraint for {sem.type}")
            return FeatureStructure(concept)
        if spec not in self.hierarchy:
            raise SemTransformFailure(f"{rule.rule_id}: unknown filler {spec!r}")
        return FeatureStructure(spec)

    def _build_syn(self, rule: LexicalRule, source: Entry, old_sem: FeatureStructure,
                   new_sem: FeatureStructure) -> FeatureStructure:
        if rule.syn_template == "preserve":
            syn = source.syn
            if new_sem is not old_sem:
                syn = _substitute(syn, old_sem, new_sem)
            return syn
        sem_tags = {n.tag for n in new_sem.nodes() if n.tag is not None}
        template = _retag(self._templates[rule.syn_template], sem_tags)
        return template.evolve(features={"sem": new_sem})

    def _step(self, rule: LexicalRule, entry: Entry, surface: str) -> Entry:
        sem = self._transform_sem(rule, entry.sem)
        syn = self._build_syn(rule, entry, entry.sem, sem)
        return replace(entry, sense_id=make_sense_id(surface, rule.out_cat, 1),
                       cat=rule.out_cat, syn=syn, sem=sem)

    def surface_for(self, rule: LexicalRule, citation: str) -> str:
        """Surface of a sense-derivation rule: override, affix, or unchanged."""
        citation = nfc(citation)
        if citation in rule.surface_overrides:
            return nfc(rule.surface_overrides[citation])
        if rule.surface_affix and self.morph is not None:
            affix = self.morph.affix(rule.surface_affix)
            base = citation
            if affix.slot != "form":
                base = alternants(citation, self.morph)[affix.slot]
            return attach(affix, base, None, self.morph.repairs)
        return citation

    def apply_chain(self, rules: Sequence[LexicalRule], source: Entry, surface: str, *,
                    lexicon: LexiconView | None = None, allocator=None,
                    now: datetime | None = None, check_blocking: bool = True) -> Entry:
        """Apply ``rules`` in order; every step is credited to ``source`` in lex_rul."""
        if not rules:
            raise RuleError("empty rule chain")
        surface = nfc(surface)
        if check_blocking:
            for rule in rules:
                verdict = self.is_blocked(rule, source, surface, lexicon)
                if verdict is not BlockVerdict.NO:
                    raise Blocked(rule.rule_id, verdict, f"{source.sense_id} -> {surface}")
        cur = source
        try:
            for rule in rules:
                cur = self._step(rule, cur, surface)
        except FSError as exc:
            raise SemTransformFailure(str(exc)) from None
        last = rules[-1]
        if allocator is not None:
            sense_id = allocator.next(surface, last.out_cat)
        elif lexicon is not None:
            sense_id = lexicon.allocator().next(surface, last.out_cat)
        else:
            taken = {source.sense_id} | {src for src, _ in source.lex_rul}
            n = 1
            while make_sense_id(surface, last.out_cat, n) in taken:
                n += 1
            sense_id = make_sense_id(surface, last.out_cat, n)
        entry = Entry(
            sense_id=sense_id,
            cat=last.out_cat,
            dfn=source.dfn,
            ex="",
            admin=Admin(last.rule_id, _timestamp(now)),
            syn=cur.syn,
            sem=cur.sem,
            lex_rul=source.lex_rul + tuple((source.sense_id, r.rule_id) for r in rules),
        )
        try:
            validate_entry(entry, self.hierarchy, self.ontology)
        except InvariantViolation as exc:
            raise SemTransformFailure(str(exc)) from None
        return entry

    def apply_rule(self, rule: LexicalRule | str, source: Entry, surface: str | None = None, *,
                   lexicon: LexiconView | None = None, allocator=None,
                   now: datetime | None = None) -> CandidateEntry:
        if isinstance(rule, str):
            rule = self.resolve(rule)
        if surface is None:
            surface = self.surface_for(rule, source.citation)
        entry = self.apply_chain([rule], source, surface, lexicon=lexicon,
                                 allocator=allocator, now=now)
        return CandidateEntry(entry, source.sense_id, nfc(surface), (rule.rule_id,),
                              (rule.rule_id,), (), self.language)

    def replay(self, entry: Entry, root: Entry, now: datetime | None = None) -> Entry:
        """Regenerate ``entry`` from its root by re-running its lex_rul chain."""
        own = entry.lex_rul[len(root.lex_rul):]
        rules = [self.resolve(r) for _, r in own]
        out = self.apply_chain(rules, root, entry.citation, now=now, check_blocking=False)
        return replace(out, sense_id=entry.sense_id, admin=replace(out.admin, at=entry.admin.at))

    # -- expansion ----------------------------------------------------------

    def expand(self, superentry: Superentry, derived: Iterable[DerivedForm],
               mode: TriggerMode | str = TriggerMode.LHS, lexicon: LexiconView | None = None,
               now: datetime | None = None, allocator=None) -> list[CandidateEntry]:
        """One candidate per surviving (derived form, source sense, rule chain)."""
        mode = TriggerMode(mode)
        if self.morph is None:
            raise RuleError("expand needs the morphology bank the labels came from")
        allocator = allocator or (lexicon.allocator() if lexicon is not None else None)
        out: list[CandidateEntry] = []
        seen: set = set()
        for form in derived:
            source = superentry.entry(form.source_sense)
            if source is None:
                raise RuleError(f"{form.source_sense} is not a sense of {superentry.citation}")
            rules = [self.resolve(label) for label in self.morph.label_chain(form.derivation)]
            chain = tuple(r.rule_id for r in rules)
            key = (form.surface, rules[-1].out_cat, source.sense_id, chain)
            if key in seen:
                continue
            if not self._chain_triggers(rules, source, form.surface, mode):
                continue
            if any(self.is_blocked(r, source, form.surface, lexicon) is not BlockVerdict.NO
                   for r in rules):
                continue
            if POS_TO_CAT.get(form.pos) != rules[-1].out_cat:
                raise RuleError(f"{form.surface}: label chain {chain} yields {rules[-1].out_cat}, "
                                f"generator said {form.pos}")
            try:
                entry = self.apply_chain(rules, source, form.surface, lexicon=lexicon,
                                         allocator=allocator, now=now, check_blocking=False)
            except SemTransformFailure as exc:
                log.info("skipping %s from %s: %s", form.surface, source.sense_id, exc)
                continue
            seen.add(key)
            out.append(CandidateEntry(entry, source.sense_id, form.surface, chain,
                                      form.lr_labels, form.derivation, self.language))
        return out

    def _chain_triggers(self, rules: Sequence[LexicalRule], source: Entry, surface: str,
                        mode: TriggerMode) -> bool:
        cur = source
        for rule in rules:
            if not self.triggers(rule, cur, mode, itemization=source.lr_items):
                return False
            try:
                cur = self._step(rule, cur, surface)
            except (SemTransformFailure, FSError):
                return False
        return True

    def expand_senses(self, superentry: Superentry, mode: TriggerMode | str = TriggerMode.LHS,
                      lexicon: LexiconView | None = None, now: datetime | None = None,
                      allocator=None) -> list[CandidateEntry]:
        """Candidates from sense-derivation rules (no morphological label involved)."""
        mode = TriggerMode(mode)
        allocator = allocator or (lexicon.allocator() if lexicon is not None else None)
        out = []
        for source in superentry.entries:
            for rule in self.trigger_rules(source, mode):
                if rule.scope != "sense":
                    continue
                try:
                    surface = self.surface_for(rule, source.citation)
                except MorphError:
                    continue
                if self.is_blocked(rule, source, surface, lexicon) is not BlockVerdict.NO:
                    continue
                try:
                    entry = self.apply_chain([rule], source, surface, lexicon=lexicon,
                                             allocator=allocator, now=now, check_blocking=False)
                except SemTransformFailure:
                    continue
                out.append(CandidateEntry(entry, source.sense_id, surface, (rule.rule_id,),
                                          (rule.rule_id,), (), self.language))
        return out
