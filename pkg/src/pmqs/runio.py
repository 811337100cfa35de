"""Run-directory artifacts: CSV, JSON, binary blocks, and the manifest.

Numeric artifacts must be byte-identical across reruns with the same
manifest, so floats are always written through repr (shortest round-trip
form) and JSON objects with sorted keys. Timestamps appear only in the
manifest's ``created`` field, which determinism comparisons exclude.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import SchemaError


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class RunWriter:
    """Accumulates artifacts under one run directory and tracks checksums."""

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.checksums: dict[str, str] = {}

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def _register(self, name: str, data: bytes):
        self.checksums[name] = hashlib.sha256(data).hexdigest()

    def write_csv(self, name: str, header: Sequence[str],
                  rows: Iterable[Sequence]) -> Path:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(v) for v in row))
        data = ("\n".join(lines) + "\n").encode()
        p = self.path(name)
        p.write_bytes(data)
        self._register(name, data)
        return p

    def write_json(self, name: str, obj) -> Path:
        data = (json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n").encode()
        p = self.path(name)
        p.write_bytes(data)
        self._register(name, data)
        return p

    def write_block(self, name: str, array: np.ndarray, header: dict) -> Path:
        """Dense binary block: one JSON header line, then raw float64 bytes."""
        arr = np.ascontiguousarray(array, dtype=np.float64)
        payload = arr.tobytes()
        head = dict(header)
        head.update({
            "dtype": "float64",
            "shape": list(arr.shape),
            "byte_order": "little",
            "checksum": hashlib.sha256(payload).hexdigest(),
        })
        data = (json.dumps(jsonable(head), sort_keys=True) + "\n").encode() + payload
        p = self.path(name)
        p.write_bytes(data)
        self._register(name, data)
        return p

    def write_manifest(self, config, extra: Optional[dict] = None) -> Path:
        import numpy
        import scipy

        from . import __version__

        manifest = {
            # canonical form: the output location is not part of the run's
            # identity, so reruns into different directories byte-match
            "config": {k: v for k, v in config.data.items() if k != "out_dir"},
            "config_hash": config.config_hash(),
            "seed": config["seed"],
            "versions": {
                "pmqs": __version__,
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
            },
            "artifacts": dict(sorted(self.checksums.items())),
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        if extra:
            manifest.update(extra)
        return self.write_json("manifest.json", manifest)


def read_block(path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    arr = np.frombuffer(raw[nl + 1:], dtype=np.float64).reshape(header["shape"])
    if hashlib.sha256(raw[nl + 1:]).hexdigest() != header["checksum"]:
        raise SchemaError(f"{path}: binary payload checksum mismatch")
    return arr, header


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text().rstrip("\n")
    lines = text.split("\n")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]
