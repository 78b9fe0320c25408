import hashlib
import json
import os
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from cohesion_algos.errors import ArchitectureMismatchError, CheckpointFormatError

MAGIC = b"AGCCKPT\x00"
FORMAT_VERSION = 1
OPTIMIZER_PREFIX = "optimizer/"
_PREAMBLE = struct.Struct("<IQ")


def fingerprint(architecture: Dict[str, Any]) -> str:
    """``<kind>-<first 16 hex digits of sha256 over the canonical architecture JSON>``"""
    canonical = json.dumps(architecture, sort_keys=True, separators=(",", ":"))
    return f"{architecture['kind']}-{hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]}"


def _little_endian(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    return array.astype(array.dtype.newbyteorder("<"), copy=False)


@dataclass
class ModelCheckpoint:
    """Named parameter blobs plus everything needed to rebuild the model they belong to.

    Layout on disk::

        magic (8 bytes) | version (uint32 LE) | header length (uint64 LE)
        | header (UTF-8 JSON, sorted keys) | tensor blobs (little-endian, C order)

    The header lists every tensor with its dtype, shape, byte offset (relative to the end
    of the header) and byte count. Optimizer state, when present, is stored as tensors named
    ``optimizer/<slot>/<parameter>`` with scalar state in ``optimizer_meta``.
    """

    architecture: Dict[str, Any]
    tensors: Dict[str, np.ndarray]
    seed: Optional[int] = None
    metrics: Dict[str, float] = field(default_factory=dict)
    optimizer_meta: Optional[Dict[str, Any]] = None
    optimizer_tensors: Dict[str, np.ndarray] = field(default_factory=OrderedDict)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.architecture)

    @property
    def kind(self) -> str:
        return self.architecture["kind"]

    @classmethod
    def from_model(
        cls,
        model,
        seed: Optional[int] = None,
        metrics: Optional[Dict[str, float]] = None,
        optimizer=None,
    ) -> "ModelCheckpoint":
        meta, opt_tensors = (None, OrderedDict())
        if optimizer is not None:
            meta, opt_tensors = optimizer.state_dict()
        return cls(
            architecture=model.architecture,
            tensors=model.checkpoint_state(),
            seed=seed,
            metrics=dict(metrics or {}),
            optimizer_meta=meta,
            optimizer_tensors=opt_tensors,
        )

    def restore_into(self, model) -> None:
        if model.fingerprint != self.fingerprint:
            raise ArchitectureMismatchError(
                f"checkpoint was written by {self.fingerprint}, model is {model.fingerprint}"
            )
        model.load_checkpoint_state(self.tensors)

    # *** serialization ***
    def to_bytes(self) -> bytes:
        entries = []
        blobs = []
        offset = 0
        named = list(self.tensors.items()) + [
            (OPTIMIZER_PREFIX + k, v) for k, v in self.optimizer_tensors.items()
        ]
        for name, array in named:
            array = _little_endian(np.asarray(array))
            blob = array.tobytes(order="C")
            entries.append(
                {
                    "name": name,
                    "dtype": array.dtype.str,
                    "shape": list(array.shape),
                    "offset": offset,
                    "nbytes": len(blob),
                }
            )
            blobs.append(blob)
            offset += len(blob)

        header = {
            "architecture": self.architecture,
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "metrics": self.metrics,
            "optimizer_meta": self.optimizer_meta,
            "tensors": entries,
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return b"".join(
            [MAGIC, _PREAMBLE.pack(FORMAT_VERSION, len(header_bytes)), header_bytes] + blobs
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelCheckpoint":
        if data[: len(MAGIC)] != MAGIC:
            raise CheckpointFormatError("not a checkpoint file (bad magic)")
        start = len(MAGIC) + _PREAMBLE.size
        if len(data) < start:
            raise CheckpointFormatError("truncated checkpoint preamble")
        version, header_len = _PREAMBLE.unpack(data[len(MAGIC) : start])
        if version != FORMAT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        try:
            header = json.loads(data[start : start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointFormatError(f"unreadable checkpoint header: {e}") from None

        body = memoryview(data)[start + header_len :]
        tensors: Dict[str, np.ndarray] = OrderedDict()
        opt_tensors: Dict[str, np.ndarray] = OrderedDict()
        for entry in header["tensors"]:
            end = entry["offset"] + entry["nbytes"]
            if end > len(body):
                raise CheckpointFormatError(f"tensor {entry['name']!r} runs past the end of file")
            dtype = np.dtype(entry["dtype"])
            array = np.frombuffer(body[entry["offset"] : end], dtype=dtype)
            array = array.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
            if entry["name"].startswith(OPTIMIZER_PREFIX):
                opt_tensors[entry["name"][len(OPTIMIZER_PREFIX) :]] = array
            else:
                tensors[entry["name"]] = array

        checkpoint = cls(
            architecture=header["architecture"],
            tensors=tensors,
            seed=header["seed"],
            metrics=header["metrics"],
            optimizer_meta=header["optimizer_meta"],
            optimizer_tensors=opt_tensors,
        )
        if checkpoint.fingerprint != header["fingerprint"]:
            raise CheckpointFormatError("architecture does not match the stored fingerprint")
        return checkpoint

    def save(self, path: str) -> None:
        dirname = os.path.dirname(path)
        if dirname:
            os.makedirs(dirname, exist_ok=True)
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "ModelCheckpoint":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())
