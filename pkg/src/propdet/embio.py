"""Embedding sidecar files and the deterministic hash-embedding fallback.

Sidecars are plain text: a `#dim=<d>` header, then one tab-separated row
per key with the vector as space-separated decimals (6 fractional digits
on write, so a round trip is identity within 1e-6).
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FormatError


@dataclass
class TokenEmbeddingTable:
    dim: int
    rows: dict[tuple[str, int, int], np.ndarray]


@dataclass
class SeqEmbeddingTable:
    dim: int
    rows: dict[int, np.ndarray]


def _read_header(fh, path) -> int:
    header = fh.readline().rstrip("\n")
    if not header.startswith("#dim="):
        raise FormatError(f"{path}:1: missing #dim= header")
    try:
        dim = int(header[5:])
    except ValueError:
        raise FormatError(f"{path}:1: malformed #dim= header") from None
    if dim < 1:
        raise FormatError(f"{path}:1: dim must be positive")
    return dim


def _parse_vector(field: str, dim: int, path, lineno: int) -> np.ndarray:
    parts = field.split()
    if len(parts) != dim:
        raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(parts)}")
    try:
        vec = np.array([float(v) for v in parts])
    except ValueError:
        raise FormatError(f"{path}:{lineno}: malformed vector value") from None
    if not np.all(np.isfinite(vec)):
        raise FormatError(f"{path}:{lineno}: non-finite vector value")
    return vec


def read_token_embeddings(path) -> TokenEmbeddingTable:
    """Read rows `article_id\\tfragment_index\\ttoken_index\\tv1 ... vd`."""
    rows: dict[tuple[str, int, int], np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        dim = _read_header(fh, path)
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            try:
                key = (parts[0], int(parts[1]), int(parts[2]))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer index") from None
            if key in rows:
                warnings.warn(f"{path}:{lineno}: duplicate key {key}, last row wins")
            rows[key] = _parse_vector(parts[3], dim, path, lineno)
    return TokenEmbeddingTable(dim, rows)


def read_seq_embeddings(path) -> SeqEmbeddingTable:
    """Read rows `instance_id\\tv1 ... vd`."""
    rows: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        dim = _read_header(fh, path)
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                key = int(parts[0])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer instance id") from None
            if key in rows:
                warnings.warn(f"{path}:{lineno}: duplicate key {key}, last row wins")
            rows[key] = _parse_vector(parts[1], dim, path, lineno)
    return SeqEmbeddingTable(dim, rows)


def _format_vector(vec: np.ndarray) -> str:
    return " ".join(f"{v:.6f}" for v in vec)


def write_token_embeddings(path, table: TokenEmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={table.dim}\n")
        for key in sorted(table.rows):
            art, frag, tok = key
            fh.write(f"{art}\t{frag}\t{tok}\t{_format_vector(table.rows[key])}\n")


def write_seq_embeddings(path, table: SeqEmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={table.dim}\n")
        for key in sorted(table.rows):
            fh.write(f"{key}\t{_format_vector(table.rows[key])}\n")


_hash_cache: dict[tuple[str, int, int], np.ndarray] = {}


def hash_embedding(token_text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-embedding in [-1, 1]^dim keyed by lowercased text."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    key = (token_text.lower(), dim, seed)
    cached = _hash_cache.get(key)
    if cached is None:
        vec = np.empty(dim)
        for i in range(dim):
            payload = f"{key[0]}\x1f{i}\x1f{seed}".encode("utf-8")
            digest = hashlib.blake2b(payload, digest_size=8).digest()
            u = int.from_bytes(digest, "big") / float(2**64 - 1)
            vec[i] = 2.0 * u - 1.0
        if len(_hash_cache) < 1_000_000:
            _hash_cache[key] = vec
        cached = vec
    return cached.copy()


def seq_hash_embedding(token_texts: list[str], dim: int, seed: int = 0) -> np.ndarray:
    """Length-sensitive pooled hash embedding for a token sequence."""
    if not token_texts:
        return np.zeros(dim)
    total = np.zeros(dim)
    for text in token_texts:
        total += hash_embedding(text, dim, seed)
    return total / math.sqrt(len(token_texts))
