"""Checking generated surface forms against word lists and running text.

A form found in any dictionary is accepted.  A form missing from every
dictionary but seen in the corpus is deferred, not thrown away: word lists
are never complete.  Everything else is rejected.
"""
from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

ACCEPTED, DEFERRED, REJECTED = "accepted", "deferred", "rejected"
STATUSES = (ACCEPTED, DEFERRED, REJECTED)


class ResourceError(Exception):
    pass


def normalize(form: str) -> str:
    return unicodedata.normalize("NFC", form).casefold()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Whitespace split, outer punctuation stripped, inner hyphens kept."""
    out = []
    for raw in normalize(text).split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if start < end:
            out.append(raw[start:end])
    return out


@dataclass(frozen=True)
class ValidationResources:
    dictionaries: Mapping[str, frozenset[str]] = field(default_factory=dict)
    corpus: Counter = field(default_factory=Counter)

    def __post_init__(self):
        object.__setattr__(self, "dictionaries",
                           {name: frozenset(normalize(w) for w in words)
                            for name, words in self.dictionaries.items()})
        counts: Counter = Counter()
        for token, n in self.corpus.items():
            counts[normalize(token)] += n
        object.__setattr__(self, "corpus", counts)

    @classmethod
    def load(cls, dict_paths: Sequence[str | Path] = (),
             corpus_paths: Sequence[str | Path] = ()) -> "ValidationResources":
        dictionaries: dict[str, frozenset[str]] = {}
        for p in dict_paths:
            name = Path(p).stem
            if name in dictionaries:
                raise ResourceError(f"two dictionaries named {name!r}")
            dictionaries[name] = frozenset(read_wordlist(p))
        corpus: Counter = Counter()
        for p in corpus_paths:
            corpus.update(tokenize(_read(p)))
        return cls(dictionaries, corpus)

    def with_dictionary(self, name: str, words: Iterable[str]) -> "ValidationResources":
        merged = dict(self.dictionaries)
        merged[name] = frozenset(merged.get(name, frozenset()) | {normalize(w) for w in words})
        return ValidationResources(merged, self.corpus)

    def with_corpus_text(self, text: str) -> "ValidationResources":
        return ValidationResources(self.dictionaries, self.corpus + Counter(tokenize(text)))


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ResourceError(f"{path}: {exc}") from None


def read_wordlist(path: str | Path) -> list[str]:
    words = []
    for line in _read(path).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.append(line)
    return words


@dataclass(frozen=True)
class ValidationVerdict:
    status: str
    evidence: tuple[tuple[str, bool], ...]
    corpus_count: int

    def evidence_text(self) -> str:
        hits = [name for name, hit in self.evidence if hit]
        parts = [f"dict:{name}" for name in hits]
        if self.corpus_count:
            parts.append(f"corpus:{self.corpus_count}")
        return ",".join(parts) or "-"


def corpus_attestation(surface: str, corpus: Mapping[str, int]) -> int:
    return corpus.get(normalize(surface), 0)


def verdict(surface: str, res: ValidationResources) -> ValidationVerdict:
    key = normalize(surface)
    evidence = tuple((name, key in words) for name, words in res.dictionaries.items())
    count = res.corpus.get(key, 0)
    if any(hit for _, hit in evidence):
        status = ACCEPTED
    elif count > 0:
        status = DEFERRED
    else:
        status = REJECTED
    return ValidationVerdict(status, evidence, count)


@dataclass
class Partition:
    accepted: list = field(default_factory=list)
    deferred: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.accepted) + len(self.deferred) + len(self.rejected)

    def counts(self) -> tuple[int, int, int]:
        return (len(self.accepted), len(self.deferred), len(self.rejected))

    def by_status(self, status: str) -> list:
        return getattr(self, status)


def validate(candidates: Iterable, res: ValidationResources) -> Partition:
    """Sort candidates into the three classes, keeping input order within each.

    Each candidate gets its verdict attached as ``candidate.validation``.
    """
    part = Partition()
    memo: dict[str, ValidationVerdict] = {}
    for cand in candidates:
        v = memo.get(cand.surface)
        if v is None:
            v = memo[cand.surface] = verdict(cand.surface, res)
        cand.validation = v
        part.by_status(v.status).append(cand)
    return part
