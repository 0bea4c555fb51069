"""Everything a command needs, loaded once: ontology, banks, hierarchy, lexicon."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import ontology as ontology_mod
from .bank import DATA, LanguageBank, default_bank_paths, load_banks
from .lexicon import LexiconStore, Superentry
from .ontology import Ontology
from .tfs import TypeHierarchy

DEFAULT_ONTOLOGY = DATA / "ontology.jsonl"
DEFAULT_LEXICON = DATA / "seed.jsonl"


@dataclass
class Workspace:
    ontology: Ontology
    hierarchy: TypeHierarchy
    banks: dict[str, LanguageBank]
    lexicon: LexiconStore

    @classmethod
    def load(cls, lexicon: str | Path | None = None, banks: Iterable[str | Path] | None = None,
             ontology: str | Path | None = None) -> "Workspace":
        onto = ontology_mod.load(ontology or DEFAULT_ONTOLOGY)
        hierarchy, loaded = load_banks(list(banks) if banks else default_bank_paths(), onto)
        store = LexiconStore.load(lexicon or DEFAULT_LEXICON, hierarchy, onto)
        return cls(onto, hierarchy, loaded, store)

    def bank_for(self, superentry: Superentry) -> LanguageBank:
        try:
            return self.banks[superentry.language]
        except KeyError:
            raise KeyError(f"no bank loaded for language {superentry.language!r}") from None

    def subset(self, citations: Iterable[str]) -> "Workspace":
        """A copy whose lexicon holds only the named superentries."""
        wanted = set(citations)
        store = LexiconStore(self.hierarchy, self.ontology)
        store.put_many(s for s in self.lexicon.superentries() if s.citation in wanted)
        return Workspace(self.ontology, self.hierarchy, self.banks, store)
