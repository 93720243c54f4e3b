"""Command-line interface: ``rellharvest validate|crawl|query|export|fixture``.

Exit codes: 0 success, 1 domain error (invalid input, failed check),
2 environment error (missing or unreadable files, busy port).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .crawler import CrawlConfig
from .errors import (
    ConfigurationError,
    DescriptionError,
    FixtureError,
    QueryError,
    QuerySyntaxError,
    RDFSyntaxError,
    RuleSetError,
    TermError,
    ValidationError,
)
from .mapping import NS
from .model import load_description
from .pipeline import harvest
from .rdf.nquads import load_nquads, serialize_nquads
from .rdf.query import bgp_query, parse_query
from .rdf.store import DEFAULT_GRAPH
from .rdf.terms import IRI
from .rdf.turtle import serialize_turtle
from .rules import load_rules

EXIT_OK, EXIT_DOMAIN, EXIT_ENV = 0, 1, 2


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _err(message: str):
    print(f"rellharvest: {message}", file=sys.stderr)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_ENV, f"cannot read {path}: {exc.strerror or exc}") from None


def cmd_validate(args) -> int:
    code = EXIT_OK
    for path in args.paths:
        try:
            desc = load_description(path)
        except OSError as exc:
            _err(f"{path}: {exc.strerror or exc}")
            code = EXIT_ENV
            continue
        except ValidationError as exc:
            for d in exc.diagnostics:
                _err(f"{path}: {d}")
            code = max(code, EXIT_DOMAIN)
            continue
        except DescriptionError as exc:
            _err(f"{path}: {exc}")
            code = max(code, EXIT_DOMAIN)
            continue
        print(f"{path}: ok ({desc.service_id}, {len(desc.resources)} resource types)", file=sys.stderr)
    return code


def _load_descriptions(paths):
    descs = []
    for path in paths:
        try:
            descs.append(load_description(path))
        except OSError as exc:
            raise _Fail(EXIT_ENV, f"{path}: {exc.strerror or exc}") from None
        except DescriptionError as exc:
            raise _Fail(EXIT_DOMAIN, f"{path}: {exc}") from None
    return descs


def _load_rule_sets(paths):
    merged = None
    for path in paths or ():
        try:
            rules = load_rules(path)
        except OSError as exc:
            raise _Fail(EXIT_ENV, f"{path}: {exc.strerror or exc}") from None
        except RuleSetError as exc:
            raise _Fail(EXIT_DOMAIN, f"{path}: {exc}") from None
        merged = rules if merged is None else merged.merged(rules)
    return merged


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_ENV, f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_crawl(args) -> int:
    descs = _load_descriptions(args.desc)
    rules = _load_rule_sets(args.rules)
    if not args.seed:
        raise _Fail(EXIT_DOMAIN, "at least one --seed is required")
    try:
        cfg = CrawlConfig(seeds=tuple(args.seed), max_resources=args.max, per_host_delay=args.delay_ms,
                          concurrency=args.concurrency, timeout=args.timeout)
        result = harvest(descs, cfg, rules, infer=args.infer, compose=args.sameas)
    except ConfigurationError as exc:
        raise _Fail(EXIT_DOMAIN, str(exc)) from None
    _write(args.out, serialize_nquads(result.store))
    lines = result.summary.report_lines() + [f"quads={len(result.store)}", f"inferred={result.inferred}"]
    lines += [f"warning={w}" for w in result.warnings]
    report = "\n".join(lines) + "\n"
    if args.report:
        _write(args.report, report)
    elif args.out not in (None, "-"):
        sys.stdout.write(report)
    else:
        sys.stderr.write(report)
    return EXIT_OK


def _load_store(path: str):
    try:
        return load_nquads(_read_text(path))
    except (RDFSyntaxError, TermError) as exc:
        raise _Fail(EXIT_DOMAIN, f"{path}: {exc}") from None


def cmd_query(args) -> int:
    store = _load_store(args.store)
    try:
        query = parse_query(_read_text(args.query))
        rows = bgp_query(store, query, sameas_expansion=args.sameas, infer_subproperties=args.infer)
    except (QuerySyntaxError, QueryError) as exc:
        raise _Fail(EXIT_DOMAIN, f"{args.query}: {exc}") from None
    for row in rows:
        print("\t".join(row[v].n3() for v in query.projection))
    return EXIT_OK


def cmd_export(args) -> int:
    store = _load_store(args.store)
    if args.format == "nquads":
        _write(args.out, serialize_nquads(store))
        return EXIT_OK
    try:
        graph = IRI(args.graph) if args.graph else DEFAULT_GRAPH
    except TermError as exc:
        raise _Fail(EXIT_DOMAIN, str(exc)) from None
    services = sorted({q.graph.value[len(NS.service_base):].split("#")[0]
                       for q in store if isinstance(q.graph, IRI) and q.graph.value.startswith(NS.service_base)})
    _write(args.out, serialize_turtle(store, graph, NS.prefixes(services)))
    return EXIT_OK


def cmd_fixture_serve(args) -> int:
    from .fixture import FixtureServer

    try:
        server = FixtureServer(args.corpus, args.port, args.log)
        server.start()
    except FixtureError as exc:
        raise _Fail(EXIT_ENV, str(exc)) from None
    print(f"serving {server.manifest.root} at {server.base_url}", file=sys.stderr, flush=True)
    try:
        server._thread.join()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def cmd_fixture_selfcheck(args) -> int:
    from .fixture import selfcheck

    problems = selfcheck(args.corpus)
    for p in problems:
        _err(p)
    if not problems:
        print("selfcheck ok", file=sys.stderr)
    return EXIT_DOMAIN if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rellharvest", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check ReLL description files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("crawl", help="crawl from seeds and write N-Quads")
    p.add_argument("--desc", action="append", required=True, help="ReLL description (repeatable)")
    p.add_argument("--seed", action="append", help="seed URI (repeatable)")
    p.add_argument("--rules", action="append", help="extraction rule file (repeatable)")
    p.add_argument("--out", help="N-Quads output file (default: stdout)")
    p.add_argument("--max", type=int, default=1000, help="maximum number of fetches")
    p.add_argument("--delay-ms", type=int, default=0, help="minimum delay between requests to one host")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--timeout", type=float, default=10.0, help="per-request timeout in seconds")
    p.add_argument("--infer", action="store_true", help="materialize subPropertyOf entailments")
    p.add_argument("--sameas", action="store_true", help="ingest identity maps from the rule files")
    p.add_argument("--report", help="write the key=value crawl report here")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("query", help="run a SELECT query over an N-Quads file")
    p.add_argument("store")
    p.add_argument("query")
    p.add_argument("--sameas", action="store_true", help="treat owl:sameAs-equivalent terms as one")
    p.add_argument("--infer", action="store_true", help="apply subPropertyOf inference")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("export", help="convert an N-Quads file to Turtle (one graph)")
    p.add_argument("store")
    p.add_argument("--graph", help="named graph IRI (default graph if omitted)")
    p.add_argument("--format", choices=("turtle", "nquads"), default="turtle")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("fixture", help="fixture corpus server and self-check")
    fsub = p.add_subparsers(dest="fixture_command", required=True)
    fp = fsub.add_parser("serve")
    fp.add_argument("--corpus", help="corpus directory (default: bundled corpus)")
    fp.add_argument("--port", type=int, default=8080)
    fp.add_argument("--log", help="append request log lines here")
    fp.set_defaults(func=cmd_fixture_serve)
    fp = fsub.add_parser("selfcheck")
    fp.add_argument("corpus", nargs="?", help="corpus directory (default: bundled corpus)")
    fp.set_defaults(func=cmd_fixture_selfcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        _err(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
