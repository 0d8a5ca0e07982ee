"""Binary container for inference weights and manifest validation.

Layout (little-endian)::

    b"UWT1"  uint32 count
    count x [ uint32 name_len, name (UTF-8), uint32 ndim, ndim x uint32 dims,
              prod(dims) x float32 ]
"""

from __future__ import annotations

import json
import struct
from collections.abc import Mapping
from importlib import resources
from pathlib import Path

import numpy as np

WEIGHTS_MAGIC = b"UWT1"
WEIGHTS_FORMAT_VERSION = 1


class WeightFormatError(ValueError):
    """The weight file is malformed or does not match the manifest."""


class WeightStore(Mapping):
    """Immutable name -> float32 array mapping."""

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        store = {}
        for name, arr in tensors.items():
            a = np.array(arr, dtype=np.float32)
            a.setflags(write=False)
            store[str(name)] = a
        self._tensors = store

    def __getitem__(self, name):
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def parameter_count(self) -> int:
        return sum(int(a.size) for a in self._tensors.values())

    def validate(self, manifest: Mapping[str, tuple]) -> None:
        for name, shape in manifest.items():
            if name not in self._tensors:
                raise WeightFormatError(f"missing tensor {name!r}")
            if tuple(self._tensors[name].shape) != tuple(shape):
                raise WeightFormatError(
                    f"tensor {name!r} has shape {tuple(self._tensors[name].shape)}, "
                    f"expected {tuple(shape)}"
                )


def save_weights(path, store: Mapping[str, np.ndarray]) -> None:
    chunks = [WEIGHTS_MAGIC, struct.pack("<I", len(store))]
    for name, arr in store.items():
        a = np.asarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", a.ndim))
        chunks.append(struct.pack(f"<{a.ndim}I", *a.shape))
        chunks.append(a.tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise WeightFormatError(f"{self.path}: truncated at byte {self.pos}")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def parse_weights(raw: bytes, path="<bytes>") -> WeightStore:
    rd = _Reader(raw, path)
    if rd.take(4) != WEIGHTS_MAGIC:
        raise WeightFormatError(f"{path}: bad magic, not a UWT1 weight file")
    tensors = {}
    for _ in range(rd.u32()):
        name = rd.take(rd.u32()).decode("utf-8")
        ndim = rd.u32()
        dims = struct.unpack(f"<{ndim}I", rd.take(4 * ndim))
        count = int(np.prod(dims, dtype=np.int64))
        tensors[name] = np.frombuffer(rd.take(4 * count), dtype="<f4").reshape(dims)
    if rd.pos != len(raw):
        raise WeightFormatError(f"{path}: {len(raw) - rd.pos} trailing bytes")
    return WeightStore(tensors)


def load_weights(path, manifest: Mapping[str, tuple] | str | None = "resunet") -> WeightStore:
    """Read a weight file and validate it; nothing is returned on failure.

    ``manifest`` is a name -> shape mapping, the name of a bundled manifest
    (``"resunet"`` or ``"hyper"``), or ``None`` to skip validation.
    """
    store = parse_weights(Path(path).read_bytes(), path)
    if isinstance(manifest, str):
        manifest = bundled_manifest(manifest)
    if manifest is not None:
        store.validate(manifest)
    return store


def bundled_manifest(name: str) -> dict[str, tuple]:
    text = resources.files("unfoldsr.data").joinpath(f"{name}_manifest.json").read_text()
    doc = json.loads(text)
    return {t["name"]: tuple(t["shape"]) for t in doc["tensors"]}


def manifest_document(manifest: Mapping[str, tuple], **meta) -> dict:
    return {**meta, "tensors": [{"name": n, "shape": list(s)} for n, s in manifest.items()]}
