"""JSON-over-HTTP facade for the review workbench.

``dispatch`` is a plain function from (method, path, query, body) to
(status, payload) so the contract can be tested without sockets; the
server class only adapts it to ``http.server``.
"""
from __future__ import annotations

import json
import logging
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Mapping
from urllib.parse import parse_qs, unquote, urlsplit

from .lexicon import Entry, entry_to_record
from .morphgen import MorphError
from .pipeline import Pipeline, PipelineError, UnknownEntry
from .review import MAX_PAGE, QueueFilter, ReviewError, ReviewItem
from .rules import Blocked, CandidateEntry, RuleError, SemTransformFailure, UnknownRule

log = logging.getLogger(__name__)

_STATUS = {
    "not-found": 404,
    "version-conflict": 409,
    "not-pending": 409,
    "invalid-edit": 422,
    "bad-cursor": 400,
    "review-error": 400,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status, self.code = status, code


def entry_json(entry: Entry, language: str) -> dict:
    rec = entry_to_record(entry, language)
    rec["lex_rul"] = [{"source": s, "rule": r} for s, r in entry.lex_rul]
    rec["flags"] = list(entry.flags)
    return rec


def candidate_json(c: CandidateEntry) -> dict:
    v = c.validation
    return {
        "surface": c.surface,
        "pos": c.pos,
        "cat": c.cat,
        "source_sense": c.source_sense,
        "rule_chain": list(c.rule_chain),
        "labels": list(c.labels),
        "derivation": list(c.derivation),
        "validation": None if v is None else {
            "status": v.status,
            "evidence": [{"resource": n, "hit": h} for n, h in v.evidence],
            "corpus_count": v.corpus_count,
        },
        "entry": entry_json(c.entry, c.language),
    }


def item_json(item: ReviewItem) -> dict:
    return {
        "candidate_id": item.candidate_id,
        "version": item.version,
        "review_status": item.review_status,
        "fast_track": item.fast_track,
        "admitted_as": item.admitted_as,
        "candidate": candidate_json(item.candidate),
        "source": entry_json(item.source, item.candidate.language),
    }


def _one(query: Mapping[str, list[str]], name: str) -> str | None:
    values = query.get(name)
    return values[-1] if values else None


def _require(body: Any, *fields: str) -> dict:
    if not isinstance(body, dict):
        raise ApiError(400, "bad-request", "request body must be a JSON object")
    missing = [f for f in fields if f not in body]
    if missing:
        raise ApiError(400, "bad-request", f"missing field(s): {', '.join(missing)}")
    return body


def _queue(app: Pipeline, query, body):
    limit_text = _one(query, "limit") or "50"
    try:
        limit = int(limit_text)
    except ValueError:
        raise ApiError(400, "bad-request", f"limit must be an integer, got {limit_text!r}") from None
    if not 1 <= limit <= MAX_PAGE:
        raise ApiError(400, "bad-request", f"limit must be within 1..{MAX_PAGE}")
    flt = QueueFilter(_one(query, "status"), _one(query, "review"), _one(query, "pos"), _one(query, "rule"))
    page = app.queue.list(flt, _one(query, "cursor"), limit)
    return 200, {"items": [item_json(i) for i in page.items], "cursor": page.cursor,
                 "total": page.total, "pending": app.queue.pending()}


def _decision(app: Pipeline, query, body, candidate_id: str):
    body = _require(body, "decision", "expected_version")
    version = body["expected_version"]
    if not isinstance(version, int) or isinstance(version, bool):
        raise ApiError(400, "bad-request", "expected_version must be an integer")
    edits = body.get("edits") or {}
    if not isinstance(edits, dict) or not all(isinstance(v, str) for v in edits.values()):
        raise ApiError(400, "bad-request", "edits must map field names to strings")
    item = app.decide(candidate_id, body["decision"], version, edits)
    return 200, item_json(item)


def _entry(app: Pipeline, query, body, sense_id: str):
    snap = app.lexicon.snapshot()
    entry = snap.entry(sense_id)
    if entry is None:
        raise ApiError(404, "not-found", f"no entry {sense_id}")
    return 200, entry_json(entry, snap.language_of(sense_id))


def _preview(app: Pipeline, query, body):
    body = _require(body, "sense_id", "rule_id")
    try:
        cand = app.preview(body["sense_id"], body["rule_id"], body.get("surface"))
    except (UnknownEntry, UnknownRule) as exc:
        raise ApiError(404, "not-found", f"unknown id {exc.args[0]!r}") from None
    except Blocked as exc:
        raise ApiError(409, "blocked", str(exc)) from None
    except (SemTransformFailure, MorphError) as exc:
        raise ApiError(422, "sem-transform-failure", str(exc)) from None
    return 200, candidate_json(cand)


def _acquire(app: Pipeline, query, body):
    body = _require(body, "verbs")
    verbs = body["verbs"]
    if not isinstance(verbs, list) or not all(isinstance(v, str) for v in verbs):
        raise ApiError(400, "bad-request", "verbs must be a list of strings")
    report = app.acquire(verbs, auto_admit_accepted=bool(body.get("auto_admit_accepted", False)))
    return 200, report.to_dict()


_ROUTES = [
    ("GET", re.compile(r"^/queue$"), _queue),
    ("POST", re.compile(r"^/candidates/(?P<candidate_id>[^/]+)/decision$"), _decision),
    ("GET", re.compile(r"^/entries/(?P<sense_id>[^/]+)$"), _entry),
    ("POST", re.compile(r"^/preview$"), _preview),
    ("POST", re.compile(r"^/acquire$"), _acquire),
]


def dispatch(app: Pipeline, method: str, target: str, body: Any = None) -> tuple[int, dict]:
    """Route one request; errors come back as ``{"error": code, "message": ...}``."""
    parts = urlsplit(target)
    query = parse_qs(parts.query)
    path = parts.path
    allowed = []
    for verb, pattern, handler in _ROUTES:
        m = pattern.match(path)
        if not m:
            continue
        allowed.append(verb)
        if verb != method:
            continue
        try:
            return handler(app, query, body, **{k: unquote(v) for k, v in m.groupdict().items()})
        except ApiError as exc:
            return exc.status, {"error": exc.code, "message": str(exc)}
        except ReviewError as exc:
            return _STATUS.get(exc.code, 400), {"error": exc.code, "message": str(exc)}
        except (PipelineError, RuleError) as exc:
            return 400, {"error": "bad-request", "message": str(exc)}
    if allowed:
        return 405, {"error": "method-not-allowed", "message": f"{method} not allowed on {path}"}
    return 404, {"error": "not-found", "message": f"no route for {path}"}


class _Handler(BaseHTTPRequestHandler):
    app: Pipeline
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, payload: dict) -> None:
        data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return None
        raw = self.rfile.read(length)
        return json.loads(raw.decode("utf-8"))

    def _handle(self, method: str) -> None:
        try:
            body = self._body() if method == "POST" else None
        except (ValueError, UnicodeDecodeError) as exc:
            self._send(400, {"error": "bad-request", "message": f"invalid JSON: {exc}"})
            return
        status, payload = dispatch(self.app, method, self.path, body)
        self._send(status, payload)

    def do_GET(self):
        self._handle("GET")

    def do_POST(self):
        self._handle("POST")

    def log_message(self, fmt, *args):
        log.info("%s %s", self.address_string(), fmt % args)


def make_server(app: Pipeline, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    handler = type("Handler", (_Handler,), {"app": app})
    return ThreadingHTTPServer((host, port), handler)
