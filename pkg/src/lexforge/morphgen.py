"""Constructive derivational morphology.

From a verb citation form the generator produces every predictable derived
form together with the semantic rule labels that later interpret it.  Three
kinds of knowledge drive it: stem alternation classes, affix rules (with
allomorphs and an attachment mode), and lexically itemized forms such as
compounds and suppletives.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .lexicon import Superentry, nfc

POS_TO_CAT = {"v": "V", "n": "N", "adj": "ADJ", "adv": "ADV"}
CAT_TO_POS = {v: k for k, v in POS_TO_CAT.items()}
SEAM = "+"


class MorphError(Exception):
    pass


class NoMatchingClass(MorphError):
    pass


class ConditionUnevaluable(MorphError):
    pass


class NoVerbSense(MorphError):
    pass


@dataclass(frozen=True)
class StemAlternation:
    class_id: str
    pattern: str
    slots: Mapping[str, str] = field(default_factory=dict)

    def matches(self, citation: str) -> bool:
        return citation.endswith(self.pattern) and len(citation) > len(self.pattern)

    def rewrite(self, citation: str, slot: str) -> str:
        base = citation[: len(citation) - len(self.pattern)]
        return base + self.slots[slot]


@dataclass(frozen=True)
class Condition:
    """Applicability test; every field that is set must hold."""

    stem_matches: str | None = None
    classes: tuple[str, ...] | None = None
    citations: tuple[str, ...] | None = None
    citation_prefix: tuple[str, ...] | None = None
    base_pos: tuple[str, ...] | None = None

    def holds(self, base: str, classes: Iterable[str] | None = None,
              verb: str | None = None, base_pos: str | None = None) -> bool:
        if self.stem_matches is not None and not re.search(self.stem_matches, base):
            return False
        if self.classes is not None:
            if classes is None:
                raise ConditionUnevaluable("condition on alternation class needs the base's classes")
            if not set(self.classes) & set(classes):
                return False
        if self.citations is not None or self.citation_prefix is not None:
            if verb is None:
                raise ConditionUnevaluable("condition on the verb needs its citation form")
            if self.citations is not None and verb not in self.citations:
                return False
            if self.citation_prefix is not None and not verb.startswith(self.citation_prefix):
                return False
        if self.base_pos is not None:
            if base_pos is None:
                raise ConditionUnevaluable("condition on base category needs the category")
            if base_pos not in self.base_pos:
                return False
        return True


ALWAYS = Condition()


@dataclass(frozen=True)
class Allomorph:
    form: str
    condition: Condition | None = None


@dataclass(frozen=True)
class AffixRule:
    rule_id: str
    kind: str  # prefix | suffix | parasynthetic
    allomorphs: tuple[Allomorph, ...]
    pos: str
    labels: tuple[str, ...]
    slot: str = "form"
    attachment: str = "concatenation"  # concatenation | unification | output-rewrite
    when: Condition = ALWAYS
    chainable: bool = False
    feeds: tuple[str, ...] | None = None
    identity: bool = False

    def feeds_into(self, other: "AffixRule") -> bool:
        return self.chainable and (self.feeds is None or other.rule_id in self.feeds)


@dataclass(frozen=True)
class ItemizedForm:
    """A form listed for one citation: a compound or a suppletive derivative."""

    rule_id: str
    citation: str
    surface: str
    pos: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class DerivedForm:
    surface: str
    pos: str
    lr_labels: tuple[str, ...]
    derivation: tuple[str, ...]
    source_sense: str

    def row(self) -> str:
        return f"{self.surface}\t{self.pos}\t{' '.join(self.lr_labels)}"


@dataclass(frozen=True)
class MorphBank:
    language: str
    alternations: tuple[StemAlternation, ...] = ()
    affixes: tuple[AffixRule, ...] = ()
    itemized: tuple[ItemizedForm, ...] = ()
    repairs: tuple[tuple[str, str], ...] = ()
    depth_limit: int = 2

    def __post_init__(self):
        ids = [a.rule_id for a in self.affixes] + [i.rule_id for i in self.itemized]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise MorphError(f"duplicate affix rule ids: {sorted(dupes)}")
        slots = {s for alt in self.alternations for s in alt.slots} | {"form"}
        for a in self.affixes:
            if a.slot not in slots:
                raise MorphError(f"{a.rule_id}: slot {a.slot!r} is defined by no alternation class")
            if not a.labels:
                raise MorphError(f"{a.rule_id}: affix rules must carry at least one label")
            if not a.allomorphs or a.allomorphs[-1].condition is not None:
                raise MorphError(f"{a.rule_id}: the last allomorph must be an unconditional default")
        object.__setattr__(self, "_order", {rid: i for i, rid in enumerate(ids)})
        object.__setattr__(self, "_by_id", {a.rule_id: a for a in self.affixes})
        object.__setattr__(self, "_items", {i.rule_id: i for i in self.itemized})

    def affix(self, rule_id: str) -> AffixRule:
        try:
            return self._by_id[rule_id]
        except KeyError:
            raise MorphError(f"unknown affix rule {rule_id!r}") from None

    def order(self, rule_id: str) -> int:
        return self._order[rule_id]

    def labels(self) -> list[str]:
        out = [l for a in self.affixes for l in a.labels] + [l for i in self.itemized for l in i.labels]
        return list(dict.fromkeys(out))

    def label_chain(self, derivation: Sequence[str]) -> tuple[str, ...]:
        """Semantic labels of every step of a derivation, in application order."""
        out: list[str] = []
        for rid in derivation:
            step = self._items.get(rid) or self.affix(rid)
            out.extend(step.labels)
        return tuple(out)


# ---------------------------------------------------------------------------
# stems


def matching_classes(citation: str, bank: MorphBank) -> list[StemAlternation]:
    """Matching alternation classes, least specific (shortest pattern) first."""
    found = [alt for alt in bank.alternations if alt.matches(citation)]
    return sorted(found, key=lambda alt: len(alt.pattern))


def alternants(citation: str, bank: MorphBank) -> dict[str, str]:
    """Bound stems by slot; more specific classes override less specific ones."""
    citation = nfc(citation)
    classes = matching_classes(citation, bank)
    if not classes:
        raise NoMatchingClass(f"no alternation class matches {citation!r}")
    stems = {"form": citation}
    for alt in classes:
        for slot in alt.slots:
            stem = alt.rewrite(citation, slot)
            if not stem:
                raise MorphError(f"class {alt.class_id} leaves an empty {slot} stem for {citation!r}")
            stems[slot] = stem
    return stems


# ---------------------------------------------------------------------------
# attachment


def _strip_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFD", text)
    return nfc("".join(ch for ch in decomposed if ch != "\u0301"))


def _has_accent(text: str) -> bool:
    return "\u0301" in unicodedata.normalize("NFD", text)


def repair(joined: str, rules: Sequence[tuple[str, str]]) -> str:
    """Apply orthographic output rules to a ``stem+affix`` string.

    The special replacement ``@deaccent-left`` strips written accents from
    the material left of the seam when the suffix carries its own accent.
    """
    for pattern, replacement in rules:
        if replacement == "@deaccent-left":
            if re.search(pattern, joined):
                left, _, right = joined.rpartition(SEAM)
                if _has_accent(right):
                    joined = _strip_accents(left) + SEAM + right
            continue
        joined = re.sub(pattern, replacement, joined)
    return joined.replace(SEAM, "")


def _overlap(left: str, right: str) -> int:
    for k in range(min(len(left), len(right)), 0, -1):
        if left.endswith(right[:k]):
            return k
    return 0


def select_allomorph(rule: AffixRule, base: str, classes: Iterable[str] | None = None) -> str:
    for allo in rule.allomorphs:
        if allo.condition is None or allo.condition.holds(base, classes):
            return allo.form
    raise MorphError(f"{rule.rule_id}: no allomorph for {base!r}")


def attach(rule: AffixRule, base: str, classes: Iterable[str] | None = None,
           repairs: Sequence[tuple[str, str]] = ()) -> str:
    """Join ``rule``'s affix to ``base`` and return the surface form."""
    base = nfc(base)
    affix = select_allomorph(rule, base, classes)
    if rule.kind == "prefix":
        pieces = [affix, base]
    elif rule.kind == "suffix":
        pieces = [base, affix]
    elif rule.kind == "parasynthetic":
        pre, _, suf = affix.partition(SEAM)
        pieces = [pre, base, suf]
    else:
        raise MorphError(f"{rule.rule_id}: unknown affix kind {rule.kind!r}")
    pieces = [p for p in pieces if p]
    if rule.attachment == "concatenation":
        out = "".join(pieces)
    elif rule.attachment == "unification":
        out = pieces[0]
        for piece in pieces[1:]:
            out += piece[_overlap(out, piece):]
    elif rule.attachment == "output-rewrite":
        out = repair(SEAM.join(pieces), repairs)
    else:
        raise MorphError(f"{rule.rule_id}: unknown attachment {rule.attachment!r}")
    return nfc(out)


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class _State:
    surface: str
    pos: str
    verb: str
    derivation: tuple[str, ...]
    last: AffixRule | None


def _class_ids(verb: str, bank: MorphBank) -> list[str]:
    return [alt.class_id for alt in matching_classes(verb, bank)]


def _step(rule: AffixRule, state: _State, bank: MorphBank) -> _State | None:
    verb = state.surface if state.pos == "v" else state.verb
    classes = _class_ids(verb, bank)
    if not rule.when.holds(state.surface, classes, verb, state.pos):
        return None
    if rule.slot == "form":
        base = state.surface
    else:
        if state.pos != "v":
            return None
        try:
            base = alternants(state.surface, bank)[rule.slot]
        except (NoMatchingClass, KeyError):
            return None
    surface = attach(rule, base, classes, bank.repairs)
    new_verb = surface if rule.pos == "v" else verb
    return _State(surface, rule.pos, new_verb, state.derivation + (rule.rule_id,), rule)


def generate(citation: str, bank: MorphBank, depth_limit: int | None = None) -> list[tuple[str, str, tuple[str, ...], tuple[str, ...]]]:
    """All (surface, pos, labels, derivation) for one verb citation, in output order."""
    citation = nfc(citation)
    depth = bank.depth_limit if depth_limit is None else depth_limit
    if depth < 1:
        raise MorphError("depth limit must be at least 1")
    out: list[tuple[str, str, tuple[str, ...], tuple[str, ...]]] = []
    frontier = [_State(citation, "v", citation, (), None)]
    for level in range(depth):
        nxt = []
        for state in frontier:
            for rule in bank.affixes:
                if state.last is not None and not state.last.feeds_into(rule):
                    continue
                new = _step(rule, state, bank)
                if new is None:
                    continue
                if new.surface == citation and not rule.identity:
                    continue
                out.append((new.surface, new.pos, rule.labels, new.derivation))
                nxt.append(new)
        frontier = nxt
    for item in bank.itemized:
        if item.citation == citation:
            out.append((nfc(item.surface), item.pos, item.labels, (item.rule_id,)))
    out.sort(key=lambda row: tuple(bank.order(r) for r in row[3]))
    return out


def derive_forms(superentry: Superentry, bank: MorphBank, depth_limit: int | None = None) -> list[DerivedForm]:
    """Derived forms for every verb sense of ``superentry``.

    Rows are grouped by sense in superentry order; within a sense they are
    ordered by derivation (bank order of each step).
    """
    senses = superentry.senses("V")
    if not senses:
        raise NoVerbSense(f"{superentry.citation!r} has no verb sense")
    rows = generate(superentry.citation, bank, depth_limit)
    out: list[DerivedForm] = []
    for sense in senses:
        seen = set()
        for surface, pos, labels, derivation in rows:
            key = (surface, pos, labels)
            if key in seen:
                continue
            seen.add(key)
            out.append(DerivedForm(surface, pos, labels, derivation, sense.sense_id))
    return out


def replay(derivation: Sequence[str], citation: str, bank: MorphBank) -> str:
    """Re-apply a derivation to its citation form and return the surface."""
    if len(derivation) == 1 and derivation[0] in bank._items:
        return nfc(bank._items[derivation[0]].surface)
    state = _State(nfc(citation), "v", nfc(citation), (), None)
    for rid in derivation:
        new = _step(bank.affix(rid), state, bank)
        if new is None:
            raise MorphError(f"{rid} does not apply to {state.surface!r}")
        state = new
    return state.surface


def tsv(forms: Iterable[DerivedForm]) -> str:
    """Figure-style ``form<TAB>pos<TAB>labels`` lines, one per distinct row."""
    seen = set()
    lines = []
    for f in forms:
        row = f.row()
        if row not in seen:
            seen.add(row)
            lines.append(row)
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# analysis direction, used only to propose bases for run-time lookup


def candidate_bases(surface: str, bank: MorphBank, depth_limit: int | None = None) -> list[str]:
    """Citation forms that might derive ``surface``; longest affixes are stripped first."""
    surface = nfc(surface)
    depth = bank.depth_limit if depth_limit is None else depth_limit
    strips: list[tuple[str, str]] = []
    for rule in bank.affixes:
        for allo in rule.allomorphs:
            if rule.kind == "parasynthetic":
                continue
            if allo.form:
                strips.append((rule.kind, allo.form))
    strips = sorted(set(strips), key=lambda s: (-len(s[1]), s))

    def unaffix(form: str) -> list[str]:
        out = []
        for kind, affix in strips:
            if kind == "prefix" and form.startswith(affix) and len(form) > len(affix):
                out.append(form[len(affix):])
            elif kind == "suffix" and form.endswith(affix) and len(form) > len(affix):
                stem = form[: -len(affix)]
                out.append(stem)
                out.extend(stem + affix[:k] for k in range(1, len(affix)))
        return out

    stems = [surface]
    layer = [surface]
    for _ in range(depth):
        layer = [s for f in layer for s in unaffix(f)]
        stems.extend(layer)
    variants = stems + [_strip_accents(s) for s in stems]

    citations: list[str] = []
    for stem in variants:
        citations.append(stem)
        for alt in bank.alternations:
            for value in alt.slots.values():
                if stem.endswith(value):
                    cand = stem[: len(stem) - len(value)] + alt.pattern
                    if alt.matches(cand):
                        citations.append(cand)
    citations.extend(i.citation for i in bank.itemized if nfc(i.surface) == surface)
    return list(dict.fromkeys(citations))
