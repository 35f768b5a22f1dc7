"""Exact cosine k-NN retrieval from source to target, cost masking and voting.

Retrieval is exhaustive (full similarity sort per query): source corpora
in the tens of thousands make exact search cheap, and exactness keeps
every downstream tie-break reproducible. Ties in similarity are broken
by ascending source id everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import MappingError, ValidationError

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class NeighborIndex:
    """Immutable store of unit-normalized source vectors for exact queries."""

    embeddings: np.ndarray
    labels: np.ndarray
    ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass(frozen=True)
class NeighborSet:
    """Per-target ordered neighbor lists (source id, cosine similarity).

    ``neighbor_ids`` and ``similarities`` are (n_targets, k') arrays with
    similarities non-increasing along each row; k' = min(k, n_source).
    """

    target_ids: np.ndarray
    neighbor_ids: np.ndarray
    similarities: np.ndarray
    k: int

    def row(self, target_id: int) -> int:
        idx = np.flatnonzero(self.target_ids == target_id)
        if len(idx) == 0:
            raise MappingError(f"target id {target_id} not in neighbor set")
        return int(idx[0])

    def neighbors_of(self, target_id: int) -> np.ndarray:
        return self.neighbor_ids[self.row(target_id)]

    def _id_sets(self) -> dict:
        cached = getattr(self, "_sets_cache", None)
        if cached is None:
            cached = {
                int(tid): set(row.tolist())
                for tid, row in zip(self.target_ids, self.neighbor_ids)
            }
            object.__setattr__(self, "_sets_cache", cached)
        return cached

    def membership(self, source_ids, target_ids) -> np.ndarray:
        """Boolean (len(source_ids), len(target_ids)) neighbor-pair matrix."""
        sets = self._id_sets()
        src = np.asarray(source_ids).tolist()
        out = np.zeros((len(src), len(target_ids)), dtype=bool)
        for j, tid in enumerate(np.asarray(target_ids).tolist()):
            try:
                members = sets[int(tid)]
            except KeyError:
                raise MappingError(f"target id {tid} not in neighbor set") from None
            for i, sid in enumerate(src):
                out[i, j] = sid in members
        return out


def build_index(source: Dataset) -> NeighborIndex:
    """Build an exact cosine index; requires unit-normalized embeddings."""
    norms = np.linalg.norm(source.embeddings, axis=1)
    off = np.abs(norms - 1.0) > _NORM_TOL
    if np.any(off):
        raise ValidationError(
            f"index requires unit-norm embeddings; id {int(source.ids[off][0])} "
            f"has norm {norms[off][0]!r}"
        )
    return NeighborIndex(source.embeddings, source.labels, source.ids)


def _topk_order(index: NeighborIndex, sims: np.ndarray, k: int) -> np.ndarray:
    """Indices of the top-k rows by (similarity desc, id asc)."""
    order = np.lexsort((index.ids, -sims))
    return order[: min(k, index.n)]


def _query_rows(index: NeighborIndex, query: np.ndarray, k: int):
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.dim,):
        raise ValidationError(
            f"query shape {query.shape} does not match index dim {index.dim}"
        )
    sims = index.embeddings @ query
    top = _topk_order(index, sims, k)
    return top, sims[top]


def query_topk(index: NeighborIndex, query: np.ndarray, k: int):
    """Top-k source entries by cosine similarity for one unit-norm query.

    Returns (ids, similarities) arrays in rank order.
    """
    top, sims = _query_rows(index, query, k)
    return index.ids[top], sims


def compute_neighbor_sets(index: NeighborIndex, targets: Dataset, k: int) -> NeighborSet:
    """Exact top-k neighbor lists for every target instance."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    kk = min(k, index.n)
    nbr_ids = np.empty((targets.n, kk), dtype=np.int64)
    sims = np.empty((targets.n, kk))
    all_sims = targets.embeddings @ index.embeddings.T
    for j in range(targets.n):
        top = _topk_order(index, all_sims[j], k)
        nbr_ids[j] = index.ids[top]
        sims[j] = all_sims[j][top]
    return NeighborSet(targets.ids.copy(), nbr_ids, sims, k)


def neighborhood_mask(
    C,
    neighbors: NeighborSet,
    batch_src_ids,
    batch_tgt_ids,
    max_value=None,
    membership=None,
) -> np.ndarray:
    """Replace non-neighbor entries of the batch cost matrix with max(C).

    ``max_value`` overrides the per-batch maximum; passing the value
    recorded from a first application makes the operation idempotent by
    construction (it already is when the maximum is recomputed, since
    masking never lowers the maximum). A precomputed boolean
    ``membership`` matrix skips the id lookups in hot loops.
    """
    C = np.asarray(C, dtype=np.float64)
    member = (
        neighbors.membership(batch_src_ids, batch_tgt_ids)
        if membership is None
        else np.asarray(membership, dtype=bool)
    )
    if member.shape != C.shape:
        raise ValidationError(
            f"batch ids imply shape {member.shape}, cost has {C.shape}"
        )
    m = float(C.max()) if max_value is None else float(max_value)
    return np.where(member, C, m)


def _vote_weighted(labels: np.ndarray, sims: np.ndarray) -> int:
    scores = np.zeros(2)
    np.add.at(scores, labels, sims)
    return int(np.argmax(scores))  # exact tie -> lower class index


def knn_ranking_predict(index: NeighborIndex, query: np.ndarray, k: int) -> int:
    """Majority label of the top-k neighbors; ties fall back to the
    similarity-weighted vote over the same neighbors."""
    top, sims = _query_rows(index, query, k)
    labels = index.labels[top]
    counts = np.bincount(labels, minlength=2)
    if counts[0] == counts[1]:
        return _vote_weighted(labels, sims)
    return int(np.argmax(counts))


def weighted_knn_predict(index: NeighborIndex, query: np.ndarray, k: int) -> int:
    """Class with the largest summed cosine similarity among top-k neighbors."""
    top, sims = _query_rows(index, query, k)
    return _vote_weighted(index.labels[top], sims)


def preselect_sources(neighbors: NeighborSet) -> np.ndarray:
    """Union of all per-target neighbor ids, sorted ascending."""
    return np.unique(neighbors.neighbor_ids.ravel())
