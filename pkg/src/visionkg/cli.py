"""``visionkg`` command line.

Every command works on one store persisted as a canonical N-Triples dump.
Exit codes: 0 success, 1 usage error, 2 data or parse error. Results go to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ProjectConfig, load_config, parse_bind
from .export import ExportUsageError, compute_stats, export_manifest
from .ingest import DatasetDescriptor, Flavor, IngestError, ingest
from .ntriples import NTriplesSyntaxError, load_into, serialize_ntriples
from .sparql import QuerySyntaxError, QueryTooLarge, evaluate, parse_query, serialize_results
from .store import TripleStore
from .taxonomy import AlignmentError, TaxonomyError, load_alignment, load_taxonomy, materialize
from .terms import IRI, TermError

log = logging.getLogger("visionkg")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DATA_ERRORS = (
    IngestError,
    NTriplesSyntaxError,
    QuerySyntaxError,
    QueryTooLarge,
    AlignmentError,
    TaxonomyError,
    TermError,
    ExportUsageError,
    OSError,
    UnicodeDecodeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--store", type=Path, default=S, help="N-Triples store file")
    common.add_argument("--alignment", type=Path, default=S, help="alignment TSV")
    common.add_argument("--taxonomy", type=Path, default=S, help="taxonomy N-Triples file")
    common.add_argument("--config", type=Path, default=S, help="JSON config (default: $VISIONKG_CONFIG)")
    common.add_argument("--lenient", action="store_true", default=S, help="skip bad records instead of failing")
    common.add_argument("--row-cap", type=int, default=S, help="maximum intermediate query rows")
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    parser = _Parser(
        prog="visionkg",
        description="Build and query a visual knowledge graph from annotated datasets.",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("ingest", parents=[common], help="convert annotation files into triples")
    p.add_argument("--flavor", required=True, choices=[f.value for f in Flavor])
    p.add_argument("--dataset-key", required=True)
    p.add_argument("--display-name", default="")
    p.add_argument("path", type=Path)

    sub.add_parser("materialize", parents=[common], help="load the taxonomy and materialize inferred types")

    p = sub.add_parser("query", parents=[common], help="evaluate a query file (or - for stdin)")
    p.add_argument("--format", choices=["json", "tsv"], default="json")
    p.add_argument("file")

    p = sub.add_parser("export", parents=[common], help="write a dataset manifest for a query's images")
    p.add_argument("--query", required=True)
    p.add_argument("--classes", default="", help="comma-separated class IRIs")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("stats", parents=[common], help="dataset and model statistics")
    p.add_argument("--format", choices=["text", "tsv"], default="text")

    p = sub.add_parser("dump", parents=[common], help="write the store as canonical N-Triples")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("load", parents=[common], help="add an N-Triples file to the store")
    p.add_argument("path", type=Path)

    p = sub.add_parser("serve", parents=[common], help="serve GET/POST /sparql")
    p.add_argument("--bind", default=None, help="host:port")
    return parser


def _read_store(config: ProjectConfig) -> TripleStore:
    store = TripleStore()
    if config.store_path.exists():
        load_into(store, config.store_path.read_text(encoding="utf-8"), strict=True)
    return store


def _write_store(store: TripleStore, config: ProjectConfig):
    path = config.store_path
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(serialize_ntriples(store.triples()), encoding="utf-8")
    os.replace(tmp, path)


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).read_text(encoding="utf-8")


def cmd_ingest(args, config, out):
    descriptor = DatasetDescriptor(args.dataset_key, args.display_name, Flavor(args.flavor))
    store = _read_store(config)
    alignment = load_alignment(config.alignment_path)
    report = ingest(store, descriptor, args.path, alignment, strict=config.strict)
    for message in report.diagnostics:
        print(message, file=sys.stderr)
    _write_store(store, config)
    print(
        f"{report.triples_inserted} triples inserted "
        f"({report.images_seen} images, {report.boxes_seen} boxes, {report.relations_seen} relations)",
        file=out,
    )
    if report.unaligned_labels:
        print(f"{report.labels_unaligned} unaligned labels: {', '.join(report.unaligned_labels)}", file=out)


def cmd_materialize(args, config, out):
    store = _read_store(config)
    taxonomy = load_taxonomy(store, config.taxonomy_path)
    report = materialize(store, taxonomy)
    _write_store(store, config)
    print(
        f"{report.total} inferred ({report.inferred_type_triples} type, "
        f"{report.inferred_subclass_triples} subclass) in {report.iterations} iterations",
        file=out,
    )


def cmd_query(args, config, out):
    query = parse_query(_read_text(args.file))
    for warning in query.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    store = _read_store(config)
    seq = evaluate(store.snapshot(), query, config.row_cap)
    out.write(serialize_results(seq, args.format))
    if seq.type_errors:
        print(f"{seq.type_errors} rows dropped by FILTER type errors", file=sys.stderr)


def cmd_export(args, config, out):
    text = _read_text(args.query)
    query = parse_query(text)
    classes = [IRI(c.strip()) for c in args.classes.split(",") if c.strip()]
    store = _read_store(config)
    manifest = export_manifest(store.snapshot(), query, classes, config.row_cap, query_text=text)
    for message in manifest.diagnostics:
        print(message, file=sys.stderr)
    args.out.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {len(manifest.images)} images, {len(manifest.boxes)} boxes to {args.out}", file=out)


def cmd_stats(args, config, out):
    report = compute_stats(_read_store(config).snapshot())
    out.write(report.to_tsv() if args.format == "tsv" else report.summary())


def cmd_dump(args, config, out):
    store = _read_store(config)
    args.out.write_text(serialize_ntriples(store.triples()), encoding="utf-8")
    print(f"{len(store)} triples written to {args.out}", file=out)


def cmd_load(args, config, out):
    store = _read_store(config)
    counts = load_into(store, args.path.read_text(encoding="utf-8"), strict=config.strict)
    for diag in counts.diagnostics:
        print(f"{args.path}: {diag}", file=sys.stderr)
    _write_store(store, config)
    print(f"parsed {counts.parsed}, inserted {counts.inserted}, skipped {counts.skipped}", file=out)


def cmd_serve(args, config, out):
    from .server import make_server

    host, port = parse_bind(args.bind or config.bind)
    store = _read_store(config)
    snapshot = store.snapshot()
    try:
        server = make_server(lambda: snapshot, host, port, config.row_cap)
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"serving {len(store)} triples on http://{host}:{server.server_address[1]}/sparql", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


COMMANDS = {
    "ingest": cmd_ingest,
    "materialize": cmd_materialize,
    "query": cmd_query,
    "export": cmd_export,
    "stats": cmd_stats,
    "dump": cmd_dump,
    "load": cmd_load,
    "serve": cmd_serve,
}


def resolve_config(args) -> ProjectConfig:
    config = load_config(getattr(args, "config", None))
    return config.with_overrides(
        store_path=getattr(args, "store", None),
        alignment_path=getattr(args, "alignment", None),
        taxonomy_path=getattr(args, "taxonomy", None),
        strict=False if getattr(args, "lenient", False) else None,
        row_cap=getattr(args, "row_cap", None),
    )


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        config = resolve_config(args)
        status = COMMANDS[args.command](args, config, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # never show a traceback to pipeline callers
        log.debug("unexpected failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return status or EXIT_OK


def run():
    sys.exit(main())
