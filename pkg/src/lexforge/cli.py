"""lexforge command line."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from .bank import DATA, BankError
from .lexicon import LexiconError, entry_to_record
from .morphgen import MorphError, derive_forms, tsv
from .ontology import OntologyError
from .pipeline import REPORTED_PER_SENSE_MEAN, Pipeline, PipelineError, candidates_jsonl, candidates_tsv
from .review import ReviewError
from .rules import RuleError, TriggerMode
from .tfs import FSError, format_zones
from .validator import ResourceError, ValidationResources, read_wordlist, validate
from .workspace import Workspace

DEFAULT_VERBS = DATA / "sample_verbs.txt"
DATA_ERRORS = (BankError, LexiconError, MorphError, OntologyError, PipelineError, ReviewError,
               RuleError, FSError, ResourceError, OSError, KeyError)


def _workspace(args) -> Workspace:
    for p in [args.lexicon, args.ontology, *(args.bank or [])]:
        if p is not None and not Path(p).is_file():
            raise PipelineError(f"no such file: {p}")
    return Workspace.load(args.lexicon, args.bank, args.ontology)


def _resources(args) -> ValidationResources:
    return ValidationResources.load(getattr(args, "dict", None) or [], getattr(args, "corpus", None) or [])


def _now(args) -> datetime | None:
    return datetime.fromisoformat(args.now) if args.now else None


def _pretty(entry, language: str) -> str:
    rec = entry_to_record(entry, language)
    sem, syn = format_zones([entry.sem, entry.syn])
    lines = [
        f"{rec['sense_id']}",
        f"  cat:     {rec['cat']}",
        f"  dfn:     {rec['dfn']}",
        f"  ex:      {rec['ex']}",
        f"  admin:   {rec['admin']['by']} {rec['admin']['at']}",
        f"  syn:     {syn}",
        f"  sem:     {sem}",
        f"  lex-rul: {' '.join(f'{s} {r}' for s, r in entry.lex_rul) or '-'}",
    ]
    if entry.flags:
        lines.append(f"  flags:   {' '.join(entry.flags)}")
    return "\n".join(lines) + "\n"


def _verbs(path) -> list[str]:
    return read_wordlist(path)


def cmd_derive(args) -> int:
    ws = _workspace(args)
    found = [s for s in ws.lexicon.superentries() if s.citation == args.citation]
    if not found:
        raise PipelineError(f"{args.citation!r} is not in the lexicon")
    forms = []
    for s in found:
        forms.extend(derive_forms(s, ws.bank_for(s).morph, args.depth))
    if args.format == "structured":
        for f in forms:
            sys.stdout.write(json.dumps({"surface": f.surface, "pos": f.pos, "labels": list(f.lr_labels),
                                         "derivation": list(f.derivation), "source_sense": f.source_sense},
                                        ensure_ascii=False) + "\n")
    else:
        sys.stdout.write(tsv(forms))
    return 0


def cmd_apply(args) -> int:
    app = Pipeline(_workspace(args))
    cand = app.preview(args.sense_id, args.rule_id, args.surface, now=_now(args))
    source = app.lexicon.entry(args.sense_id)
    if args.format == "structured":
        out = {"before": entry_to_record(source, cand.language),
               "after": entry_to_record(cand.entry, cand.language)}
        sys.stdout.write(json.dumps(out, ensure_ascii=False, indent=2) + "\n")
    else:
        sys.stdout.write("before\n" + _pretty(source, cand.language))
        sys.stdout.write("after\n" + _pretty(cand.entry, cand.language))
    return 0


def _acquire(args, ws: Workspace):
    app = Pipeline(ws, _resources(args), args.mode)
    verbs = _verbs(args.verbs)
    report = app.acquire(verbs, auto_admit_accepted=getattr(args, "auto_admit_accepted", False),
                         now=_now(args))
    return app, report


def cmd_acquire(args) -> int:
    ws = _workspace(args)
    app, report = _acquire(args, ws)
    sys.stdout.write(report.to_text())
    if args.log:
        queued = [i.candidate for i in app.queue]
        Path(args.log).write_text(
            json.dumps({"report": report.to_dict()}, ensure_ascii=False) + "\n"
            + candidates_jsonl(queued + app.audit), encoding="utf-8")
    if args.out_lexicon:
        ws.lexicon.save(args.out_lexicon)
    return 0


def cmd_stats(args) -> int:
    _, report = _acquire(args, _workspace(args))
    if args.format == "structured":
        out = report.to_dict()
        out["comparison"] = {"observed_per_sense_mean": round(report.per_sense_mean, 4),
                             "reported_per_sense_mean": REPORTED_PER_SENSE_MEAN}
        sys.stdout.write(json.dumps(out, ensure_ascii=False, sort_keys=True) + "\n")
    else:
        sys.stdout.write(report.to_text())
        sys.stdout.write(f"comparison (not a test)\tobserved per-sense mean {report.per_sense_mean:.2f}"
                         f" vs {REPORTED_PER_SENSE_MEAN:.0f} reported for the full rule bank\n")
    return 0


def cmd_validate(args) -> int:
    ws = _workspace(args)
    res = _resources(args)
    app = Pipeline(ws, res, args.mode)
    verbs = list(args.citations) + (_verbs(args.verbs) if args.verbs else [])
    if not verbs:
        raise PipelineError("give verb citations or --verbs")
    snap = ws.lexicon.snapshot()
    cands = []
    for verb in verbs:
        found = [s for s in snap.superentries() if s.citation == verb]
        if not found:
            raise PipelineError(f"{verb!r} is not in the lexicon")
        for s in found:
            cands.extend(app.candidates_for(s, snap, snap.allocator(), now=_now(args)))
    validate(cands, res)
    sys.stdout.write(candidates_tsv(cands))
    return 0


def cmd_lookup(args) -> int:
    app = Pipeline(_workspace(args), mode=args.mode)
    entries = app.runtime_lookup(args.form)
    snap = app.lexicon.snapshot()
    for e in entries:
        language = snap.language_of(e.sense_id) or ""
        if args.format == "structured":
            sys.stdout.write(json.dumps(entry_to_record(e, language), ensure_ascii=False) + "\n")
        else:
            chain = " ".join(e.rule_chain) or "-"
            source = e.lex_rul[0][0] if e.lex_rul else "-"
            sys.stdout.write(f"{e.sense_id}\t{e.cat}\t{source}\t{chain}\t{','.join(e.flags) or '-'}\n")
    return 0


def cmd_export(args) -> int:
    ws = _workspace(args)
    lexicon = ws.lexicon
    if args.expand:
        lexicon, _ = Pipeline(ws, _resources(args), args.mode).load_time_expand(now=_now(args))
    text = lexicon.dumps()
    if args.out:
        lexicon.save(args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    from .service import make_server

    host, _, port = args.addr.rpartition(":")
    if not port.isdigit():
        raise PipelineError(f"--addr must look like host:port, got {args.addr!r}")
    app = Pipeline(_workspace(args), _resources(args), args.mode)
    server = make_server(app, host or "127.0.0.1", int(port))
    print(f"serving on http://{host or '127.0.0.1'}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lexicon", help="lexicon file (default: the shipped seed)")
    common.add_argument("--bank", action="append", help="bank file; repeat for several languages")
    common.add_argument("--ontology", help="ontology file (default: the shipped one)")
    common.add_argument("--mode", choices=[m.value for m in TriggerMode], default="lhs",
                        help="how rules are triggered (default: lhs)")
    common.add_argument("--now", help="timestamp for generated admin fields (ISO format)")
    common.add_argument("--format", choices=["tsv", "structured"], default="tsv")

    resources = argparse.ArgumentParser(add_help=False)
    resources.add_argument("--dict", action="append", metavar="PATH", help="word list, one form per line")
    resources.add_argument("--corpus", action="append", metavar="PATH", help="plain text corpus")

    parser = argparse.ArgumentParser(prog="lexforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", parents=[common], help="print derived forms of a verb")
    p.add_argument("citation")
    p.add_argument("--depth", type=int, default=None, help="chain depth limit (default: the bank's)")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("apply", parents=[common], help="apply one rule to one sense")
    p.add_argument("sense_id")
    p.add_argument("rule_id")
    p.add_argument("--surface", help="surface of the new entry (default: what the morphology gives)")
    p.set_defaults(func=cmd_apply)

    for name, func, text in (("acquire", cmd_acquire, "run acquisition over a verb list"),
                             ("stats", cmd_stats, "print acquisition statistics")):
        p = sub.add_parser(name, parents=[common, resources], help=text)
        p.add_argument("--verbs", default=str(DEFAULT_VERBS), help="verb list (default: shipped sample)")
        if name == "acquire":
            p.add_argument("--auto-admit-accepted", action="store_true")
            p.add_argument("--log", default="lexforge-run.log", help="run log file ('' to disable)")
            p.add_argument("--out-lexicon", help="write the resulting lexicon here")
        p.set_defaults(func=func)

    p = sub.add_parser("validate", parents=[common, resources], help="check generated forms")
    p.add_argument("citations", nargs="*")
    p.add_argument("--verbs")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lookup", parents=[common], help="look up a form, generating on a miss")
    p.add_argument("form")
    p.set_defaults(func=cmd_lookup)

    p = sub.add_parser("serve", parents=[common, resources], help="start the review API")
    p.add_argument("--addr", default="127.0.0.1:8080")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", parents=[common, resources], help="write the lexicon canonically")
    p.add_argument("--out")
    p.add_argument("--expand", action="store_true", help="add dictionary-accepted derivations first")
    p.set_defaults(func=cmd_export)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "depth", None) is not None and args.depth < 1:
        parser.error("--depth must be at least 1")
    try:
        return args.func(args)
    except (*DATA_ERRORS, ValueError) as exc:
        print(f"lexforge: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
