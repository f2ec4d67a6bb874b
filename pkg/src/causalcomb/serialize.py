"""JSON round-tripping for comb specs, reports, and run summaries.

Complex matrices are stored as row-major nested lists with ``[re, im]``
innermost pairs; every file carries a ``format_version`` field.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .combs import CombSpec

FORMAT_VERSION = 1

__all__ = [
    "FORMAT_VERSION",
    "encode_matrix",
    "decode_matrix",
    "encode_vector",
    "decode_vector",
    "comb_to_dict",
    "comb_from_dict",
    "save_comb",
    "load_comb",
    "save_json",
    "load_json",
    "jsonable",
]


def encode_vector(v: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex)]


def decode_vector(data) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data])


def encode_matrix(m: np.ndarray) -> list:
    return [encode_vector(row) for row in np.asarray(m, dtype=complex)]


def decode_matrix(data) -> np.ndarray:
    return np.array([decode_vector(row) for row in data])


def comb_to_dict(spec: CombSpec) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "comb_spec",
        "n": spec.n,
        "d_A": spec.wire_dim,
        "d_M": spec.memory_dim,
        "psi0": encode_vector(spec.psi0),
        "unitaries": [encode_matrix(u) for u in spec.unitaries],
        "sigma_true": list(spec.input_perm),
        "pi_true": list(spec.output_perm),
        "metadata": spec.metadata,
    }


def comb_from_dict(data: dict) -> CombSpec:
    if data.get("kind") != "comb_spec":
        raise ValueError(f"not a comb spec file (kind={data.get('kind')!r})")
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {data.get('format_version')!r}")
    return CombSpec(
        n=int(data["n"]),
        wire_dim=int(data["d_A"]),
        memory_dim=int(data["d_M"]),
        psi0=decode_vector(data["psi0"]),
        unitaries=tuple(decode_matrix(u) for u in data["unitaries"]),
        input_perm=tuple(int(v) for v in data["sigma_true"]),
        output_perm=tuple(int(v) for v in data["pi_true"]),
        metadata=dict(data.get("metadata", {})),
    )


def save_comb(spec: CombSpec, path) -> None:
    Path(path).write_text(json.dumps(comb_to_dict(spec)))


def load_comb(path) -> CombSpec:
    return comb_from_dict(json.loads(Path(path).read_text()))


def jsonable(obj: Any) -> Any:
    """Recursively coerce numpy scalars/arrays and tuples for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else encode_vector(obj)
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def save_json(data: dict, path) -> None:
    payload = {"format_version": FORMAT_VERSION}
    payload.update(jsonable(data))
    Path(path).write_text(json.dumps(payload, indent=2))


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
