"""Embedding providers.

Two kinds exist behind one duck-typed interface (``name``, ``dim``,
``kind``, ``embed(texts) -> (n, dim) float32 array``):

* ``DeterministicProvider`` — hashed bag-of-subtokens, L2-normalized.
  No model, no network; the whole test suite runs on it.
* ``RemoteHttpProvider`` — POST /embed against an embedding service.
"""
from __future__ import annotations

import hashlib
import logging
import time

import numpy as np
import requests

from .errors import ProviderError
from .tokenize import tokenize

logger = logging.getLogger(__name__)

DEFAULT_DIM = 256


class DeterministicProvider:
    """Deterministic bag-of-tokens embedding for tests and offline runs.

    Each token (lowercased, subtokens included) hashes to a signed
    bucket; the count vector is L2-normalized. Identical token bags give
    identical vectors regardless of token order.
    """

    kind = "deterministic_test"

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.name = f"deterministic-bag-{dim}"

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                digest = hashlib.blake2b(token.lower().encode("utf-8"), digest_size=9).digest()
                bucket = int.from_bytes(digest[:8], "little") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                out[row, bucket] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm > 0.0:
                out[row] /= norm
        return out


class RemoteHttpProvider:
    """HTTP embedding client with capped exponential backoff.

    Wire protocol: POST {url}/embed with ``{"texts": [...]}``; expects
    ``{"embeddings": [[...], ...], "dim": n}``. Any non-200 response or
    transport error is retried up to ``max_attempts`` times.
    """

    kind = "remote_http"

    def __init__(
        self,
        url: str,
        dim: int,
        name: str = "remote",
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        session: requests.Session | None = None,
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.url = url.rstrip("/")
        self.dim = dim
        self.name = name
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._session = session or requests.Session()

    def _post_once(self, texts: list[str]) -> np.ndarray:
        response = self._session.post(
            f"{self.url}/embed", json={"texts": texts}, timeout=self.timeout
        )
        if response.status_code != 200:
            raise ProviderError(f"provider returned HTTP {response.status_code}")
        payload = response.json()
        embeddings = payload.get("embeddings")
        dim = payload.get("dim")
        if dim != self.dim:
            raise ProviderError(f"provider dim {dim} != configured dim {self.dim}")
        vectors = np.asarray(embeddings, dtype=np.float32)
        if vectors.shape != (len(texts), self.dim):
            raise ProviderError(f"provider returned shape {vectors.shape}")
        return vectors

    def embed(self, texts: list[str]) -> np.ndarray:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                return self._post_once(texts)
            except (requests.RequestException, ProviderError, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.max_attempts:
                    delay = min(self.backoff_base * 2**attempt, self.backoff_cap)
                    logger.warning(
                        "embed attempt %d/%d failed (%s); retrying in %.1fs",
                        attempt + 1,
                        self.max_attempts,
                        exc,
                        delay,
                    )
                    time.sleep(delay)
        raise ProviderError(
            f"embedding batch of {len(texts)} texts failed after "
            f"{self.max_attempts} attempts: {last_error}"
        )


def embed(texts: list[str], provider) -> np.ndarray:
    """Embed ``texts`` with shape and finiteness validation.

    Empty/whitespace-only entries are rejected here; callers filter them
    out before reaching the provider.
    """
    for i, text in enumerate(texts):
        if not text or not text.strip():
            raise ValueError(f"text at position {i} is empty; reject empties upstream")
    vectors = provider.embed(list(texts))
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.shape != (len(texts), provider.dim):
        raise ProviderError(
            f"provider {provider.name} returned shape {vectors.shape}, "
            f"expected {(len(texts), provider.dim)}"
        )
    if not np.isfinite(vectors).all():
        raise ProviderError(f"provider {provider.name} returned NaN/Inf components")
    return vectors
