"""Deterministic text featurizer.

Commands are embedded as a fixed-size bag of hashed tokens: each word token
lands in one of the first ``k - 1`` buckets (by stable hash) and contributes
a pseudo-random unit vector derived from the same hash. The last bucket is a
numeric summary: tokens that parse as numbers write their actual values into
fixed slots, so magnitudes (distances, angles, scale factors) are linearly
readable instead of being 15-way codebook lookups. Identical strings always
produce identical features, offline, with no learned weights.
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache

import numpy as np

TEXT_VECTORS = 8
TEXT_DIM = 32

_TOKEN_RE = re.compile(r"[a-z0-9.\-]+")
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@lru_cache(maxsize=16384)
def _token_bucket_and_vector(token: str, k: int, d_t: int) -> tuple[int, bytes]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16).digest()
    bucket = int.from_bytes(digest[:8], "little") % k
    seed = int.from_bytes(digest[8:], "little")
    vec = np.random.default_rng(seed).standard_normal(d_t)
    vec /= np.linalg.norm(vec)
    return bucket, vec.tobytes()


def text_features(text: str, k: int = TEXT_VECTORS, d_t: int = TEXT_DIM) -> np.ndarray:
    """(k, d_t) feature matrix: k-1 normalized hash buckets + numeric summary."""
    out = np.zeros((k, d_t), dtype=np.float64)
    word_buckets = max(1, k - 1)
    numeric_row = k - 1
    values = []
    for token in tokenize(text):
        bucket, blob = _token_bucket_and_vector(token, word_buckets, d_t)
        out[bucket] += np.frombuffer(blob, dtype=np.float64)
        if _NUMBER_RE.fullmatch(token):
            values.append(float(token))
    norms = np.linalg.norm(out[:word_buckets], axis=1, keepdims=True)
    out[:word_buckets] = np.divide(
        out[:word_buckets], norms, out=np.zeros_like(out[:word_buckets]), where=norms > 0
    )
    if k > 1 and values:
        total = float(sum(values))
        out[numeric_row, 0] = total
        out[numeric_row, 1] = total / 10.0
        out[numeric_row, 2] = float(len(values))
        out[numeric_row, 3] = 1.0
    return out
