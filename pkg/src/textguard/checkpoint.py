"""``TGCKPT1`` tensor container shared by the encoder and the biLSTM.

Layout: the magic line, ``key=value`` header lines, one
``tensor <name> <dim0> <dim1> ...`` line per tensor, a blank line, then the
raw little-endian float32 payloads in header order.
"""

from __future__ import annotations

import os
from typing import Mapping

import numpy as np

MAGIC = b"TGCKPT1\n"
_FLOAT = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


def write_container(path: str | os.PathLike, header: Mapping[str, object], tensors: Mapping[str, np.ndarray]) -> None:
    lines = []
    for key, value in header.items():
        text = str(value)
        if "=" in key or "\n" in key or "\n" in text or key.startswith("tensor "):
            raise CheckpointError(f"header entry {key!r} is not representable")
        lines.append(f"{key}={text}")
    for name, arr in tensors.items():
        if any(ch.isspace() for ch in name):
            raise CheckpointError(f"tensor name {name!r} contains whitespace")
        lines.append(" ".join(["tensor", name, *map(str, arr.shape)]))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(lines) + "\n\n").encode("utf-8"))
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype=_FLOAT).tobytes())


def read_container(path: str | os.PathLike) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{os.fspath(path)}: bad magic, not a TGCKPT1 checkpoint")
    end = blob.find(b"\n\n", len(MAGIC) - 1)
    if end < 0:
        raise CheckpointError(f"{os.fspath(path)}: truncated header")
    header: dict[str, str] = {}
    specs: list[tuple[str, tuple[int, ...]]] = []
    for line in blob[len(MAGIC) : end].decode("utf-8").split("\n"):
        if not line:
            continue
        if line.startswith("tensor "):
            parts = line.split(" ")
            try:
                specs.append((parts[1], tuple(int(d) for d in parts[2:])))
            except (IndexError, ValueError):
                raise CheckpointError(f"{os.fspath(path)}: malformed tensor line {line!r}") from None
        else:
            key, sep, value = line.partition("=")
            if not sep:
                raise CheckpointError(f"{os.fspath(path)}: malformed header line {line!r}")
            header[key] = value
    offset = end + 2
    tensors: dict[str, np.ndarray] = {}
    for name, shape in specs:
        nbytes = int(np.prod(shape, dtype=np.int64)) * _FLOAT.itemsize
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{os.fspath(path)}: truncated payload for tensor {name}")
        tensors[name] = np.frombuffer(blob, dtype=_FLOAT, count=nbytes // 4, offset=offset).reshape(shape).astype(np.float32)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{os.fspath(path)}: {len(blob) - offset} trailing bytes after payload")
    return header, tensors


def check_shapes(path, tensors: Mapping[str, np.ndarray], expected: Mapping[str, tuple[int, ...]]) -> None:
    if list(tensors) != list(expected):
        raise CheckpointError(f"{os.fspath(path)}: tensor names/order disagree with the header config")
    for name, shape in expected.items():
        if tensors[name].shape != tuple(shape):
            raise CheckpointError(
                f"{os.fspath(path)}: tensor {name} has shape {tensors[name].shape}, config implies {tuple(shape)}"
            )
