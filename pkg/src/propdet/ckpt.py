"""Flat text checkpoint files: a magic line, `key=value` metadata, then
named tensors serialized as decimal rows (17 significant digits, so
float64 round-trips exactly)."""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def save_tensor_file(path, magic: str, meta: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(magic + "\n")
        for key in sorted(meta):
            fh.write(f"{key}={meta[key]}\n")
        for name, tensor in tensors.items():
            shape = " ".join(str(d) for d in tensor.shape)
            fh.write(f"tensor {name} {shape}\n")
            for row in np.atleast_2d(tensor):
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_tensor_file(path, magic: str) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != magic:
        raise FormatError(f"{path}: expected header {magic!r}")
    meta: dict[str, str] = {}
    tensors: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("tensor "):
        key, sep, val = lines[i].partition("=")
        if not sep:
            raise FormatError(f"{path}:{i + 1}: expected key=value")
        meta[key] = val
        i += 1
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "tensor" or len(head) < 3:
            raise FormatError(f"{path}:{i + 1}: expected tensor header")
        name = head[1]
        shape = tuple(int(d) for d in head[2:])
        n_rows = shape[0] if len(shape) == 2 else 1
        try:
            rows = [
                np.array([float(v) for v in lines[i + 1 + r].split()])
                for r in range(n_rows)
            ]
        except (IndexError, ValueError):
            raise FormatError(f"{path}: truncated or malformed tensor {name}") from None
        tensors[name] = np.vstack(rows).reshape(shape)
        i += 1 + n_rows
    return meta, tensors
