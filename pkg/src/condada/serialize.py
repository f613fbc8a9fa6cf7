"""Flat text serialization for named float64 arrays.

One line per tensor: name, rank, extents, then values encoded with
``float.hex`` so round-trips are bit-exact. Lines starting with ``#`` carry
string metadata (``# key value``) and are preserved as a dict.
"""

from __future__ import annotations

import numpy as np


def write_arrays(path, arrays: dict[str, np.ndarray], meta: dict[str, str] | None = None) -> None:
    with open(path, "w") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key} {value}\n")
        for name, arr in arrays.items():
            arr = np.asarray(arr, dtype=np.float64)
            dims = " ".join(str(d) for d in arr.shape)
            values = " ".join(v.hex() for v in arr.reshape(-1).tolist())
            fh.write(f"{name} {arr.ndim} {dims} {values}\n".rstrip() + "\n")


def read_arrays(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    arrays: dict[str, np.ndarray] = {}
    meta: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2:
                    meta[parts[0]] = parts[1]
                continue
            tokens = line.split()
            try:
                name = tokens[0]
                rank = int(tokens[1])
                shape = tuple(int(t) for t in tokens[2 : 2 + rank])
                values = [float.fromhex(t) for t in tokens[2 + rank :]]
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}: malformed tensor line {lineno}") from exc
            expected = int(np.prod(shape)) if shape else 1
            if len(values) != expected:
                raise ValueError(f"{path}: line {lineno} declares shape {shape} but has {len(values)} values")
            arrays[name] = np.array(values, dtype=np.float64).reshape(shape)
    return arrays, meta
