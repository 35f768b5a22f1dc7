"""CLI: otnn-export --in texts.jsonl --model <name> --out emb.bin"""

from __future__ import annotations

import argparse
import logging
import sys

from .encoders import DEFAULT_MODEL, ExportError
from .export import AdapterConfig, export_embeddings, read_text_records


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otnn-export",
        description="Embed a raw text corpus into the otnn binary format.",
    )
    parser.add_argument("--in", dest="infile", required=True, help="JSONL with id/text/label")
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=f"sentence-transformers model name, or 'hash[:dim]' (default {DEFAULT_MODEL})",
    )
    parser.add_argument("--out", required=True, help="output .bin path")
    parser.add_argument("--adapter", help="JSON adapter config for corpus schemas")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        adapter = AdapterConfig.from_file(args.adapter) if args.adapter else None
        records = read_text_records(args.infile, adapter)
        count = export_embeddings(records, args.model, args.out)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {count} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
