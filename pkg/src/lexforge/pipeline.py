"""Acquisition runs, run-time fallback lookup and load-time expansion.

The three moments at which lexical rules can fire share one code path:
``derive_forms`` proposes forms, ``RuleEngine.expand`` turns them into
entries, and the validator sorts them.  What differs is where the result
goes: the review queue, an ephemeral answer, or straight into a copy of
the lexicon.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from typing import Iterable, Mapping

from .bank import LanguageBank
from .lexicon import (Entry, InvariantViolation, LexiconStore, LexiconView, Superentry, nfc,
                      validate_entry)
from .morphgen import MorphError, candidate_bases, derive_forms
from .review import REJECTED, InvalidEdit, ReviewItem, ReviewQueue
from .rules import CandidateEntry, TriggerMode
from .tfs import FSError, format_zones, parse_zones
from .validator import ACCEPTED, ValidationResources, validate
from .workspace import Workspace

log = logging.getLogger(__name__)

REPORTED_PER_SENSE_MEAN = 25.0


class PipelineError(Exception):
    pass


class UnknownEntry(PipelineError, KeyError):
    pass


@dataclass
class AcquisitionReport:
    verbs_processed: int = 0
    senses_processed: int = 0
    candidates_generated: int = 0
    partition_counts: tuple[int, int, int] = (0, 0, 0)
    pending_review: int = 0
    auto_admitted: int = 0
    unresolved: list[str] = field(default_factory=list)

    @property
    def per_sense_mean(self) -> float:
        return self.candidates_generated / self.senses_processed if self.senses_processed else 0.0

    def check(self) -> None:
        """Raise if the totals are inconsistent."""
        if sum(self.partition_counts) != self.candidates_generated:
            raise PipelineError(f"partition {self.partition_counts} does not sum to "
                                f"{self.candidates_generated}")
        if self.senses_processed == 0 and self.candidates_generated:
            raise PipelineError("candidates without senses")
        accepted, deferred, _ = self.partition_counts
        if self.pending_review + self.auto_admitted > accepted + deferred:
            raise PipelineError("more items queued or admitted than were accepted or deferred")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["partition_counts"] = dict(zip(("accepted", "deferred", "rejected"), self.partition_counts))
        d["per_sense_mean"] = round(self.per_sense_mean, 4)
        return d

    def to_text(self) -> str:
        a, d, r = self.partition_counts
        lines = [
            f"verbs_processed\t{self.verbs_processed}",
            f"senses_processed\t{self.senses_processed}",
            f"candidates_generated\t{self.candidates_generated}",
            f"per_sense_mean\t{self.per_sense_mean:.2f}",
            f"accepted\t{a}",
            f"deferred\t{d}",
            f"rejected\t{r}",
            f"pending_review\t{self.pending_review}",
            f"auto_admitted\t{self.auto_admitted}",
        ]
        if self.unresolved:
            lines.append(f"unresolved\t{' '.join(self.unresolved)}")
        return "\n".join(lines) + "\n"


def underived(s: Superentry) -> Superentry:
    """The superentry restricted to entries no rule produced."""
    return replace(s, entries=tuple(e for e in s.entries if not e.derived))


def derivation_key(c: CandidateEntry) -> tuple[str, str, tuple[str, ...]]:
    return (c.surface, c.cat, c.rule_chain)


def entry_key(e: Entry) -> tuple[str, str, tuple[str, ...]]:
    return (e.citation, e.cat, e.rule_chain)


class Pipeline:
    """A workspace plus the mutable state built on top of it."""

    def __init__(self, workspace: Workspace, resources: ValidationResources | None = None,
                 mode: TriggerMode | str = TriggerMode.LHS):
        self.ws = workspace
        self.resources = resources or ValidationResources()
        self.mode = TriggerMode(mode)
        self.queue = ReviewQueue()
        self.audit: list[CandidateEntry] = []
        self.derivations = 0
        self._cache: dict[tuple, list[Entry]] = {}
        self._lock = threading.RLock()
        self._block_revision = 0

    @property
    def lexicon(self) -> LexiconStore:
        return self.ws.lexicon

    # -- shared step --------------------------------------------------------

    def candidates_for(self, s: Superentry, lexicon: LexiconView, allocator=None,
                       surface: str | None = None, now: datetime | None = None) -> list[CandidateEntry]:
        bank = self.ws.bank_for(s)
        base = underived(s)
        if not base.senses("V"):
            return []
        forms = derive_forms(base, bank.morph)
        if surface is not None:
            forms = [f for f in forms if f.surface == surface]
        with self._lock:
            self.derivations += 1
        return bank.engine.expand(base, forms, self.mode, lexicon, now=now, allocator=allocator)

    def _superentries(self, citation: str, lexicon: LexiconView) -> list[Superentry]:
        citation = nfc(citation)
        return [s for s in lexicon.superentries() if s.citation == citation]

    # -- acquisition --------------------------------------------------------

    def acquire(self, verbs: Iterable[str], resources: ValidationResources | None = None,
                auto_admit_accepted: bool = False, now: datetime | None = None) -> AcquisitionReport:
        res = resources or self.resources
        report = AcquisitionReport()
        snap = self.lexicon.snapshot()
        allocator = snap.allocator()
        known = self.queue.keys() | {self._lexicon_key(e) for e in snap.entries() if e.derived}
        generated: list[CandidateEntry] = []
        for verb in verbs:
            found = [s for s in self._superentries(verb, snap)
                     if s.language in self.ws.banks and underived(s).senses("V")]
            if not found:
                report.unresolved.append(verb)
                continue
            report.verbs_processed += 1
            for s in found:
                report.senses_processed += len(underived(s).senses("V"))
                generated.extend(self.candidates_for(s, snap, allocator, now=now))
        part = validate(generated, res)
        report.candidates_generated = len(generated)
        report.partition_counts = part.counts()
        sources = {e.sense_id: e for e in snap.entries()}
        for cand in part.accepted + part.deferred:
            if cand.key() in known:
                continue
            known.add(cand.key())
            if auto_admit_accepted and cand.validation.status == ACCEPTED:
                self._admit(cand.entry.with_flag("auto-admitted"), cand.language)
                cand.review_status = "auto-admitted"
                report.auto_admitted += 1
            else:
                self.queue.enqueue(cand, sources[cand.source_sense],
                                   fast_track=cand.validation.status == ACCEPTED)
                report.pending_review += 1
        self.audit.extend(part.rejected)
        report.check()
        return report

    @staticmethod
    def _lexicon_key(e: Entry) -> tuple:
        return (e.citation, e.cat, e.lex_rul[0][0] if e.lex_rul else "", e.rule_chain)

    def _admit(self, entry: Entry, language: str) -> Entry:
        out = self.lexicon.add_entry(entry, language)
        self._invalidate()
        return out

    def _invalidate(self) -> None:
        with self._lock:
            self._cache.clear()

    # -- run time -----------------------------------------------------------

    def runtime_lookup(self, surface: str, persist: bool = False) -> list[Entry]:
        """Stored entries for ``surface``, or entries generated on the fly.

        Generated entries carry the ``ephemeral`` flag.  With ``persist`` they
        are also put on the review queue; nothing reaches the lexicon without
        a decision.
        """
        surface = nfc(surface)
        snap = self.lexicon.snapshot()
        direct = snap.lookup_form(surface)
        if direct:
            return direct
        key = (surface, self.lexicon.revision, self._block_revision, self.mode)
        with self._lock:
            if key in self._cache and not persist:
                return list(self._cache[key])
        found: list[CandidateEntry] = []
        seen = set()
        for bank in self.ws.banks.values():
            for base in candidate_bases(surface, bank.morph):
                for s in self._superentries(base, snap):
                    if s.language != bank.language:
                        continue
                    for cand in self.candidates_for(s, snap, surface=surface):
                        if cand.key() not in seen:
                            seen.add(cand.key())
                            found.append(cand)
        entries = [c.entry.with_flag("ephemeral") for c in found]
        with self._lock:
            self._cache[key] = entries
        if persist:
            sources = {e.sense_id: e for e in snap.entries()}
            queued = self.queue.keys()
            for cand in found:
                if cand.key() not in queued:
                    self.queue.enqueue(cand, sources[cand.source_sense])
        return list(entries)

    # -- load time ----------------------------------------------------------

    def load_time_expand(self, resources: ValidationResources | None = None,
                         now: datetime | None = None) -> tuple[LexiconStore, list[Entry]]:
        """A copy of the lexicon plus every accepted candidate, auto-admitted.

        Candidates that collide with an underived entry of the same surface
        and category, or whose derivation is already present, are skipped,
        so a second run on the result adds nothing.
        """
        res = resources or self.resources
        out = self.lexicon.copy()
        snap = self.lexicon.snapshot()
        allocator = out.allocator()
        present = {self._lexicon_key(e) for e in snap.entries() if e.derived}
        admitted: list[Entry] = []
        for s in snap.superentries():
            if s.language not in self.ws.banks or not underived(s).senses("V"):
                continue
            cands = self.candidates_for(s, snap, allocator, now=now)
            for cand in validate(cands, res).accepted:
                if snap.has_underived(cand.surface, cand.cat):
                    continue
                key = (cand.surface, cand.cat, cand.source_sense, cand.rule_chain)
                if key in present:
                    continue
                present.add(key)
                admitted.append(out.add_entry(cand.entry.with_flag("auto-admitted"), cand.language))
        return out, admitted

    # -- review -------------------------------------------------------------

    def decide(self, candidate_id: str, decision: str, expected_version: int,
               edits: Mapping[str, str] | None = None) -> ReviewItem:
        edits = dict(edits or {})
        if decision != "modify" and edits:
            raise InvalidEdit("edits are only accepted with the modify decision")
        unknown = set(edits) - {"dfn", "ex", "sem"}
        if unknown:
            raise InvalidEdit(f"only dfn, ex and sem may be edited, not {sorted(unknown)}")

        def commit(item: ReviewItem, verdict: str) -> str | None:
            cand = item.candidate
            if verdict == "reject":
                self._block(cand)
                return None
            entry = cand.entry
            if verdict == "modify":
                entry = self._edited(entry, edits)
            try:
                return self._admit(entry, cand.language).sense_id
            except InvariantViolation as exc:
                raise InvalidEdit(str(exc)) from None

        item = self.queue.decide(candidate_id, decision, expected_version, commit)
        if item.review_status == REJECTED:
            self.audit.append(item.candidate)
        return item

    def _edited(self, entry: Entry, edits: Mapping[str, str]) -> Entry:
        out = replace(entry, dfn=edits.get("dfn", entry.dfn), ex=edits.get("ex", entry.ex))
        if "sem" in edits:
            _, syn_text = format_zones([entry.sem, entry.syn])
            try:
                sem, syn = parse_zones([edits["sem"], syn_text], self.ws.hierarchy)
            except FSError as exc:
                raise InvalidEdit(f"sem: {exc}") from None
            out = replace(out, sem=sem, syn=syn)
        try:
            validate_entry(out, self.ws.hierarchy, self.ws.ontology)
        except InvariantViolation as exc:
            raise InvalidEdit(str(exc)) from None
        return out

    def _block(self, cand: CandidateEntry) -> None:
        """Suppress this surface for this source sense under the chain's last rule."""
        bank = self.ws.banks[cand.language]
        rules = bank.rules.with_block(cand.rule_chain[-1], f"{cand.source_sense}@{cand.surface}")
        self.ws.banks[cand.language] = bank.with_rules(rules)
        with self._lock:
            self._block_revision += 1
            self._cache.clear()

    # -- previews -----------------------------------------------------------

    def preview(self, sense_id: str, rule_id: str, surface: str | None = None,
                now: datetime | None = None) -> CandidateEntry:
        snap = self.lexicon.snapshot()
        source = snap.entry(nfc(sense_id))
        if source is None:
            raise UnknownEntry(sense_id)
        language = snap.language_of(source.sense_id)
        bank = self.ws.banks.get(language)
        if bank is None:
            raise PipelineError(f"no bank for language {language!r}")
        rule = bank.engine.resolve(rule_id)
        if surface is None:
            surface = surface_hint(bank, source, rule.rule_id)
        return bank.engine.apply_rule(rule, source, surface, lexicon=snap,
                                      allocator=snap.allocator(), now=now)


def surface_hint(bank: LanguageBank, source: Entry, rule_id: str) -> str:
    """The surface the morphology gives ``rule_id`` for this source, else the citation."""
    rule = bank.rules.get(rule_id)
    if rule.scope == "sense":
        return bank.engine.surface_for(rule, source.citation)
    if source.cat == "V":
        try:
            forms = derive_forms(Superentry(source.citation, bank.language, (source,)), bank.morph)
        except MorphError:
            forms = []
        for f in forms:
            chain = [bank.rules.get(l).rule_id for l in bank.morph.label_chain(f.derivation)]
            if chain == [rule.rule_id]:
                return f.surface
    return source.citation


def candidates_tsv(candidates: Iterable[CandidateEntry]) -> str:
    """``form<TAB>pos<TAB>status<TAB>evidence`` lines."""
    lines = []
    for c in candidates:
        v = c.validation
        lines.append(f"{c.surface}\t{c.pos}\t{v.status if v else '-'}\t{v.evidence_text() if v else '-'}")
    return "".join(line + "\n" for line in lines)


def candidates_jsonl(candidates: Iterable[CandidateEntry]) -> str:
    out = []
    for c in candidates:
        out.append(json.dumps({
            "surface": c.surface, "cat": c.cat, "source_sense": c.source_sense,
            "rule_chain": list(c.rule_chain), "labels": list(c.labels),
            "status": c.validation.status if c.validation else None,
        }, ensure_ascii=False))
    return "".join(line + "\n" for line in out)
