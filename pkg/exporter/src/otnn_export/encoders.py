"""Sentence encoders behind one interface: encode(texts) -> (n, dim) array.

``resolve_encoder`` maps a model name to a backend. Any
sentence-transformers model name works when that package and the model
weights are available; the built-in deterministic ``hash`` encoder
("hash" or "hash:<dim>") needs no downloads and is stable across
processes, which keeps exports reproducible in air-gapped environments.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_MODEL = "all-mpnet-base-v2"


class ExportError(Exception):
    pass


class HashingEncoder:
    """Order-insensitive bag of deterministic per-token direction vectors.

    Each token seeds a PRNG through blake2b, giving it a fixed unit
    vector; a text maps to the normalized sum over its tokens. Equal
    texts therefore get bit-identical embeddings.
    """

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ExportError(f"hash encoder dim must be >= 2, got {dim}")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            seed = int.from_bytes(
                hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(),
                "little",
            )
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def encode(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = text.split()
            if not tokens:
                raise ExportError("cannot encode empty text")
            for tok in tokens:
                out[i] += self._token_vector(tok)
            # near-cancelling token sums still define a direction
            norm = np.linalg.norm(out[i])
            if norm == 0.0:
                out[i] = self._token_vector("\x00".join(tokens))
            else:
                out[i] /= norm
        return out


class SbertEncoder:
    """sentence-transformers backend; loaded lazily."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ExportError(
                f"sentence-transformers is not installed (needed for {model_name!r})"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise ExportError(f"could not load model {model_name!r}: {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts) -> np.ndarray:
        emb = self._model.encode(
            list(texts), convert_to_numpy=True, normalize_embeddings=False
        )
        return np.asarray(emb, dtype=np.float64)


def resolve_encoder(model_name: str):
    if model_name == "hash" or model_name.startswith("hash:"):
        dim = int(model_name.split(":", 1)[1]) if ":" in model_name else 256
        return HashingEncoder(dim)
    return SbertEncoder(model_name)
