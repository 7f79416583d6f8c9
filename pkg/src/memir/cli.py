"""memir command line.

Commands:
    memir ingest CORPUS --out STORE     compile a corpus into a store file
    memir query STORE QUESTION          print the fact interface and answer
    memir trace STORE QUESTION          print the query trace records
    memir eval STORE QUERIES            recall table, with ablations
    memir serve                         run the HTTP service

By default commands run in-process; ``--server URL`` sends them to a
running ``memir serve`` instead.

Exit codes: 0 success, 1 input error, 2 provider failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from memir import api
from memir.config import PROFILES
from memir.errors import MemIRError, ProviderFailure

EXIT_OK, EXIT_INPUT, EXIT_PROVIDER = 0, 1, 2


class RemoteError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def _add_profile_args(p: argparse.ArgumentParser, ablate: bool = True) -> None:
    p.add_argument("--profile", default="locomo_default", choices=sorted(PROFILES), help="base pipeline profile")
    p.add_argument("--config", type=Path, help="flat key = value config file overriding the profile")
    if ablate:
        p.add_argument("--ablate", default="", help="comma-separated: no_claims,no_cues,no_projection,no_bundles")
    p.add_argument("--server", help="send the command to a running service at this URL")


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress to stderr")
    parser = _Parser(prog="memir", description="Typed conversational memory: ingest, query, trace, eval.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="compile a corpus into a store file", parents=[common])
    p.add_argument("corpus", type=Path, help="turn records (.jsonl) or a LoCoMo-shaped sample (.json)")
    p.add_argument("--out", type=Path, required=True, help="store file to write")
    p.add_argument("--report", type=Path, help="rejection report path (default: STORE.report.jsonl)")
    p.add_argument("--workers", type=int, default=1, help="concurrent page workers for provider calls")
    _add_profile_args(p, ablate=False)

    for name, helptext in (("query", "answer a question"), ("trace", "emit the query trace")):
        p = sub.add_parser(name, help=helptext, parents=[common])
        p.add_argument("store", type=Path)
        p.add_argument("question")
        if name == "query":
            p.add_argument("--trace", action="store_true", help="also emit trace records")
        p.add_argument("--out", type=Path, help="write trace records here instead of the terminal")
        _add_profile_args(p)

    p = sub.add_parser("eval", help="recall metrics on labeled queries", parents=[common])
    p.add_argument("store", type=Path)
    p.add_argument("queries", type=Path, help="query records (.jsonl)")
    p.add_argument("--out", type=Path, help="write machine-readable metric records here")
    p.add_argument("--workers", type=int, default=1)
    _add_profile_args(p)

    p = sub.add_parser("serve", help="run the HTTP service", parents=[common])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    return parser


def _config_text(path: Optional[Path]) -> Optional[str]:
    return path.read_text(encoding="utf-8") if path else None


def _remote(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + endpoint, json=payload, timeout=None)
    except httpx.HTTPError as exc:
        raise RemoteError(0, f"cannot reach {server}: {exc}") from None
    if resp.status_code != 200:
        try:
            body = resp.json()
            message = body.get("message") or json.dumps(body.get("detail", body))
        except ValueError:
            message = resp.text
        raise RemoteError(resp.status_code, message)
    return resp.json()


def _abs(path: Path) -> str:
    return str(path.resolve())


def cmd_ingest(args) -> int:
    if args.server:
        summary = _remote(
            args.server,
            "/ingest",
            {
                "corpus_path": _abs(args.corpus),
                "out_path": _abs(args.out),
                "report_path": _abs(args.report) if args.report else None,
                "profile": args.profile,
                "config_text": _config_text(args.config),
            },
        )
    else:
        profile = api.resolve_profile(args.profile, _config_text(args.config))
        summary = api.ingest(args.corpus, args.out, profile, report_path=args.report, workers=args.workers)
    atoms = ", ".join(f"{k}={v}" for k, v in summary["atoms"].items())
    print(f"store: {summary['store_path']}")
    print(f"turns: {summary['turns']}  atoms: {atoms}  views: {summary['views']}")
    print(f"rejections: {summary['rejections']}  report: {summary['report_path']}")
    if summary["partial"]:
        print(f"provider failures on pages: {', '.join(summary['failed_pages'])}", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def _run_query(args, trace: bool) -> dict:
    if args.server:
        return _remote(
            args.server,
            "/query",
            {
                "store_path": _abs(args.store),
                "question": args.question,
                "trace": trace,
                "profile": args.profile,
                "config_text": _config_text(args.config),
                "ablate": args.ablate or None,
            },
        )
    profile = api.resolve_profile(args.profile, _config_text(args.config), args.ablate)
    return api.query(args.store, args.question, profile, trace=trace)


def _emit_trace(records, out: Optional[Path], stream) -> None:
    text = api.trace_text(records)
    if out:
        out.write_text(text, encoding="utf-8")
    else:
        stream.write(text)


def cmd_query(args) -> int:
    result = _run_query(args, args.trace)
    sys.stdout.write(result["rendered"])
    sys.stdout.write(api.render_outcome(result["outcome"]))
    if args.trace:
        _emit_trace(result["trace"], args.out, sys.stderr)
    return EXIT_OK


def cmd_trace(args) -> int:
    result = _run_query(args, True)
    _emit_trace(result["trace"], args.out, sys.stdout)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.server:
        result = _remote(
            args.server,
            "/eval",
            {
                "store_path": _abs(args.store),
                "queries_path": _abs(args.queries),
                "profile": args.profile,
                "config_text": _config_text(args.config),
                "ablate": args.ablate or None,
            },
        )
    else:
        profile = api.resolve_profile(args.profile, _config_text(args.config))
        result = api.run_eval(args.store, args.queries, profile, variants=api.eval_variants(args.ablate), workers=args.workers)
    sys.stdout.write(result["table"])
    if args.out:
        args.out.write_text(api.encode_jsonl(result["records"]), encoding="utf-8")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("memir.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "query": cmd_query, "trace": cmd_trace, "eval": cmd_eval, "serve": cmd_serve}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ProviderFailure as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (MemIRError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER if exc.status in (502, 504) else EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
