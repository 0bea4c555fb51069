"""The queue of generated entries waiting for a lexicographer.

Items are kept in generation order.  Each state change bumps the item's
version; a decision must quote the version it was based on, so two reviewers
working on one item cannot silently overwrite each other.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterator

from .lexicon import Entry
from .rules import CandidateEntry

PENDING, APPROVED, REJECTED, MODIFIED = "pending", "approved", "rejected", "modified"
DECISIONS = {"approve": APPROVED, "reject": REJECTED, "modify": MODIFIED}
MAX_PAGE = 500


class ReviewError(Exception):
    code = "review-error"


class UnknownCandidate(ReviewError, KeyError):
    code = "not-found"


class VersionConflict(ReviewError):
    code = "version-conflict"

    def __init__(self, candidate_id: str, expected: int, actual: int):
        super().__init__(f"{candidate_id}: expected version {expected}, current is {actual}")
        self.actual = actual


class NotPending(ReviewError):
    code = "not-pending"


class InvalidEdit(ReviewError):
    code = "invalid-edit"


class BadCursor(ReviewError):
    code = "bad-cursor"


@dataclass
class ReviewItem:
    candidate_id: str
    seq: int
    candidate: CandidateEntry
    source: Entry
    version: int = 1
    review_status: str = PENDING
    fast_track: bool = False
    admitted_as: str | None = None

    @property
    def validation(self):
        return self.candidate.validation

    @property
    def validation_status(self) -> str | None:
        v = self.candidate.validation
        return v.status if v is not None else None


@dataclass(frozen=True)
class QueueFilter:
    status: str | None = None   # validation status: accepted | deferred | rejected
    review: str | None = None   # pending | approved | rejected | modified
    pos: str | None = None
    rule: str | None = None

    def __call__(self, item: ReviewItem) -> bool:
        if self.status and item.validation_status != self.status:
            return False
        if self.review and item.review_status != self.review:
            return False
        if self.pos and item.candidate.cat.lower() != self.pos.lower():
            return False
        if self.rule and self.rule.lower() not in {r.lower() for r in item.candidate.rule_chain}:
            return False
        return True


@dataclass
class Page:
    items: list[ReviewItem]
    cursor: str | None
    total: int


def _encode(seq: int) -> str:
    return f"s{seq}"


def _decode(cursor: str) -> int:
    if not cursor.startswith("s") or not cursor[1:].isdigit():
        raise BadCursor(f"malformed cursor {cursor!r}")
    return int(cursor[1:])


class ReviewQueue:
    def __init__(self):
        self._items: list[ReviewItem] = []
        self._by_id: dict[str, ReviewItem] = {}
        self.lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[ReviewItem]:
        with self.lock:
            return iter(list(self._items))

    def keys(self) -> set:
        with self.lock:
            return {i.candidate.key() for i in self._items}

    def enqueue(self, candidate: CandidateEntry, source: Entry, fast_track: bool = False) -> ReviewItem:
        with self.lock:
            seq = len(self._items)
            item = ReviewItem(f"c{seq + 1}", seq, candidate, source, fast_track=fast_track)
            candidate.review_status = PENDING
            self._items.append(item)
            self._by_id[item.candidate_id] = item
            return item

    def get(self, candidate_id: str) -> ReviewItem:
        try:
            return self._by_id[candidate_id]
        except KeyError:
            raise UnknownCandidate(candidate_id) from None

    def list(self, flt: QueueFilter = QueueFilter(), cursor: str | None = None,
             limit: int = 50) -> Page:
        """One page of matching items; ``cursor`` is None on the last page."""
        if limit < 1 or limit > MAX_PAGE:
            raise BadCursor(f"limit must be within 1..{MAX_PAGE}")
        start = _decode(cursor) if cursor else 0
        with self.lock:
            if start > len(self._items):
                raise BadCursor(f"cursor {cursor!r} is past the end of the queue")
            matching = [i for i in self._items if flt(i)]
            items = [i for i in matching if i.seq >= start]
            page = items[:limit]
            nxt = _encode(items[limit].seq) if len(items) > limit else None
            return Page(page, nxt, len(matching))

    def pending(self) -> int:
        with self.lock:
            return sum(1 for i in self._items if i.review_status == PENDING)

    def decide(self, candidate_id: str, decision: str, expected_version: int,
               commit: Callable[[ReviewItem, str], str | None]) -> ReviewItem:
        """Run ``commit`` for the decision and record the outcome atomically.

        ``commit`` performs the side effect (admitting or blocking) and
        returns the admitted sense id, if any.  If it raises, the item is
        left untouched.
        """
        if decision not in DECISIONS:
            raise InvalidEdit(f"decision must be one of {sorted(DECISIONS)}")
        with self.lock:
            item = self.get(candidate_id)
            if expected_version != item.version:
                raise VersionConflict(candidate_id, expected_version, item.version)
            if item.review_status != PENDING:
                raise NotPending(f"{candidate_id} is already {item.review_status}")
            admitted = commit(item, decision)
            item.review_status = DECISIONS[decision]
            item.candidate.review_status = item.review_status
            item.admitted_as = admitted
            item.version += 1
            return item
