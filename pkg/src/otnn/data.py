"""Datasets of labeled sentence embeddings and their on-disk formats.

Two interchange formats are supported:

* binary: header ``OTNN`` magic, u32 format version, u64 record count,
  u32 dim (all little-endian), then per record u64 id, u8 label and
  ``dim`` float32 components;
* jsonl: one object per line with keys ``id``, ``label``, ``embedding``.

Embeddings are kept as float64 in memory. The binary format stores
float32, so pipelines that ingest binary files renormalize before
building indexes or training.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    DegenerateEmbeddingError,
    EmptyDatasetError,
    FormatError,
    IntegrityError,
    ValidationError,
)

MAGIC = b"OTNN"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim
_REC_HEAD = struct.Struct("<QB")  # id, label

#: Cluster geometry of the synthetic generator: unit-norm class means
#: separated by CLUSTER_ANGLE in the (0, 1) coordinate plane, isotropic
#: noise CLUSTER_SIGMA. Chosen so the no-shift task is cleanly separable
#: while boundary overlap leaves room for transfer gains under shift.
CLUSTER_SIGMA = 0.45
CLUSTER_ANGLE = 2.0 * np.pi / 3.0


class LabeledInstance(NamedTuple):
    id: int
    label: int
    embedding: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable collection of labeled embedding vectors.

    ``ids`` are unique non-negative integers, ``labels`` are class
    indices in {0, 1} (1 = hate), ``embeddings`` is an (n, dim) float64
    array with finite entries.
    """

    ids: np.ndarray
    labels: np.ndarray
    embeddings: np.ndarray
    role: str | None = None

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        emb = np.ascontiguousarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise ValidationError("embeddings must be a 2-d array")
        if not (len(ids) == len(labels) == emb.shape[0]):
            raise ValidationError("ids, labels and embeddings disagree in length")
        if len(ids) == 0:
            raise EmptyDatasetError("dataset must contain at least one instance")
        if np.any(ids < 0):
            raise IntegrityError("negative id encountered")
        uniq, counts = np.unique(ids, return_counts=True)
        if np.any(counts > 1):
            dup = int(uniq[counts > 1][0])
            raise IntegrityError(f"duplicate id {dup}")
        bad = ~np.isin(labels, (0, 1))
        if np.any(bad):
            raise IntegrityError(f"label outside {{0,1}} for id {int(ids[bad][0])}")
        nonfinite = ~np.isfinite(emb).all(axis=1)
        if np.any(nonfinite):
            raise IntegrityError(
                f"non-finite embedding for id {int(ids[nonfinite][0])}"
            )
        for name, arr in (("ids", ids), ("labels", labels), ("embeddings", emb)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def instance(self, i: int) -> LabeledInstance:
        return LabeledInstance(
            int(self.ids[i]), int(self.labels[i]), self.embeddings[i]
        )

    def __iter__(self) -> Iterator[LabeledInstance]:
        return (self.instance(i) for i in range(self.n))

    def with_role(self, role: str) -> "Dataset":
        return Dataset(self.ids, self.labels, self.embeddings, role=role)


def load_dataset(path, format: str) -> Dataset:
    """Read a dataset from ``path`` in the given format ("binary"|"jsonl")."""
    if format == "binary":
        return _load_binary(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise ValidationError(f"unknown format {format!r}")


def save_dataset(dataset: Dataset, path, format: str) -> None:
    """Write ``dataset`` to ``path`` in the given format ("binary"|"jsonl")."""
    if format == "binary":
        _save_binary(dataset, path)
    elif format == "jsonl":
        _save_jsonl(dataset, path)
    else:
        raise ValidationError(f"unknown format {format!r}")


def _load_binary(path) -> Dataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) == 0:
        raise EmptyDatasetError(f"{path}: empty file")
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, count, dim = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if count == 0:
        raise EmptyDatasetError(f"{path}: zero records")
    if dim == 0:
        raise FormatError(f"{path}: zero dim")
    rec_size = _REC_HEAD.size + 4 * dim
    body = raw[_HEADER.size :]
    if len(body) != count * rec_size:
        raise IntegrityError(
            f"{path}: expected {count * rec_size} record bytes, found {len(body)}"
        )
    ids = np.empty(count, dtype=np.int64)
    labels = np.empty(count, dtype=np.int64)
    emb = np.empty((count, dim), dtype=np.float64)
    off = 0
    for i in range(count):
        rid, lab = _REC_HEAD.unpack_from(body, off)
        vec = np.frombuffer(
            body, dtype="<f4", count=dim, offset=off + _REC_HEAD.size
        )
        ids[i], labels[i] = rid, lab
        emb[i] = vec
        off += rec_size
    return Dataset(ids, labels, emb)


def _save_binary(dataset: Dataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dataset.n, dataset.dim))
        f32 = dataset.embeddings.astype("<f4")
        for i in range(dataset.n):
            fh.write(_REC_HEAD.pack(int(dataset.ids[i]), int(dataset.labels[i])))
            fh.write(f32[i].tobytes())


def _load_jsonl(path) -> Dataset:
    ids, labels, rows = [], [], []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            try:
                rid, lab, vec = obj["id"], obj["label"], obj["embedding"]
            except (KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: missing field {exc}") from exc
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise IntegrityError(
                    f"{path}:{lineno}: id {rid} has dim {len(vec)}, expected {dim}"
                )
            ids.append(rid)
            labels.append(lab)
            rows.append(vec)
    if not ids:
        raise EmptyDatasetError(f"{path}: no records")
    return Dataset(
        np.asarray(ids, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
        np.asarray(rows, dtype=np.float64),
    )


def _save_jsonl(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset:
            fh.write(
                json.dumps(
                    {
                        "id": inst.id,
                        "label": inst.label,
                        "embedding": inst.embedding.tolist(),
                    }
                )
            )
            fh.write("\n")


def normalize_embeddings(dataset: Dataset) -> Dataset:
    """Return a copy of ``dataset`` with every embedding scaled to unit l2 norm.

    Labels and ids are unchanged. Idempotent within 1e-12.
    """
    norms = np.linalg.norm(dataset.embeddings, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        raise DegenerateEmbeddingError(
            f"zero-norm embedding for id {int(dataset.ids[zero][0])}"
        )
    return Dataset(
        dataset.ids,
        dataset.labels,
        dataset.embeddings / norms[:, None],
        role=dataset.role,
    )


def make_uniform_measure(n: int) -> np.ndarray:
    """Uniform probability weights over ``n`` atoms (each exactly 1/n)."""
    if n < 1:
        raise ValidationError(f"measure size must be >= 1, got {n}")
    return np.full(n, 1.0 / n)


def _draw_cluster_points(rng, n, dim, sigma):
    labels = rng.integers(0, 2, size=n)
    means = np.zeros((n, dim))
    means[labels == 0, 0] = 1.0
    means[labels == 1, 0] = np.cos(CLUSTER_ANGLE)
    means[labels == 1, 1] = np.sin(CLUSTER_ANGLE)
    points = means + sigma * rng.standard_normal((n, dim))
    return points, labels


def _apply_shift(points, shift):
    """Rotate in the (0, 1) coordinate plane by ``shift`` radians, then
    translate along the last axis (in-plane for dim 2)."""
    out = points.copy()
    c, s = np.cos(shift), np.sin(shift)
    x0, x1 = points[:, 0].copy(), points[:, 1].copy()
    out[:, 0] = c * x0 - s * x1
    out[:, 1] = s * x0 + c * x1
    out[:, -1] += 0.3 * shift
    return out


def synth_generate(
    n_source: int,
    n_target_train: int,
    n_target_val: int,
    n_target_test: int,
    dim: int,
    shift: float,
    seed: int,
):
    """Generate a synthetic source corpus plus target train/val/test splits.

    Both domains are two labeled Gaussian clusters; the target domain is
    the source distribution rotated and translated by ``shift``. All
    embeddings are unit-normalized. Deterministic in ``seed``.
    """
    for name, n in (
        ("n_source", n_source),
        ("n_target_train", n_target_train),
        ("n_target_val", n_target_val),
        ("n_target_test", n_target_test),
    ):
        if n < 1:
            raise ValidationError(f"{name} must be >= 1, got {n}")
    if dim < 2:
        raise ValidationError(f"dim must be >= 2, got {dim}")

    rng = np.random.default_rng(seed)
    src_pts, src_labels = _draw_cluster_points(rng, n_source, dim, CLUSTER_SIGMA)

    n_tgt = n_target_train + n_target_val + n_target_test
    tgt_pts, tgt_labels = _draw_cluster_points(rng, n_tgt, dim, CLUSTER_SIGMA)
    tgt_pts = _apply_shift(tgt_pts, shift)

    def build(points, labels, role):
        d = Dataset(
            np.arange(len(labels), dtype=np.int64), labels, points, role=role
        )
        return normalize_embeddings(d)

    source = build(src_pts, src_labels, "source")
    a = n_target_train
    b = a + n_target_val
    train = build(tgt_pts[:a], tgt_labels[:a], "target-train")
    val = build(tgt_pts[a:b], tgt_labels[a:b], "target-val")
    test = build(tgt_pts[b:], tgt_labels[b:], "target-test")
    return source, train, val, test
