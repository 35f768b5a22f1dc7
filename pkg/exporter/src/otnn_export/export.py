"""Read raw text corpora, preprocess, encode, and write the binary
embedding interchange format (magic OTNN, version 1)."""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .encoders import ExportError, resolve_encoder
from .preprocess import preprocess

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIQI")
_REC_HEAD = struct.Struct("<QB")
MAGIC = b"OTNN"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TextRecord:
    id: int
    text: str
    label: int


@dataclass
class AdapterConfig:
    """Field names and label mapping for heterogeneous corpus schemas.

    ``label_map`` translates raw label values (as strings) to 0/1, e.g.
    {"racism": 1, "sexism": 1, "none": 0}; with no map, labels must
    already be 0/1 integers.
    """

    id_field: str = "id"
    text_field: str = "text"
    label_field: str = "label"
    label_map: dict | None = None

    @classmethod
    def from_file(cls, path) -> "AdapterConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            id_field=raw.get("id_field", "id"),
            text_field=raw.get("text_field", "text"),
            label_field=raw.get("label_field", "label"),
            label_map=raw.get("label_map"),
        )

    def map_label(self, value) -> int:
        if self.label_map is not None:
            key = str(value)
            if key not in self.label_map:
                raise ExportError(f"label {value!r} not covered by the adapter map")
            value = self.label_map[key]
        label = int(value)
        if label not in (0, 1):
            raise ExportError(f"label must be 0 or 1 after mapping, got {label}")
        return label


def read_text_records(path, adapter: AdapterConfig | None = None) -> list[TextRecord]:
    """Parse {id, text, label} JSONL (field names per the adapter)."""
    adapter = adapter or AdapterConfig()
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    TextRecord(
                        id=int(obj[adapter.id_field]),
                        text=str(obj[adapter.text_field]),
                        label=adapter.map_label(obj[adapter.label_field]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ExportError(f"{path}:{lineno}: bad record ({exc})") from exc
    return records


def export_embeddings(
    records: Iterable[TextRecord], model_name: str, out_path
) -> int:
    """Preprocess, encode and write ``records``; returns the count written.

    Records whose text is empty after preprocessing are dropped (the
    drop count is logged). Embeddings are unit-normalized.
    """
    records = list(records)
    if not records:
        raise ExportError("no records to export")

    kept, texts = [], []
    dropped = 0
    for rec in records:
        cleaned = preprocess(rec.text)
        if not cleaned:
            dropped += 1
            continue
        kept.append(rec)
        texts.append(cleaned)
    if dropped:
        logger.warning("dropped %d record(s) empty after preprocessing", dropped)
    if not kept:
        raise ExportError("every record was empty after preprocessing")

    encoder = resolve_encoder(model_name)
    emb = np.asarray(encoder.encode(texts), dtype=np.float64)
    if emb.shape != (len(kept), encoder.dim):
        raise ExportError(
            f"encoder returned shape {emb.shape}, expected {(len(kept), encoder.dim)}"
        )
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ExportError("encoder produced a zero embedding")
    emb = emb / norms

    with open(out_path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(kept), encoder.dim))
        f32 = emb.astype("<f4")
        for rec, row in zip(kept, f32):
            fh.write(_REC_HEAD.pack(rec.id, rec.label))
            fh.write(row.tobytes())
    return len(kept)
