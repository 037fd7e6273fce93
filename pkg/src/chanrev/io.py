"""JSON problem files and report serialization (schema ``chanrev/1``).

Matrices are records ``{"rows": r, "cols": c, "data": [[re, im], ...]}``
with entries in row-major order.  A problem file looks like::

    {
      "version": "chanrev/1",
      "states": {"rho": <matrix>, "sigma": <matrix>},
      "reference": "rho",
      "family": ["sigma"],
      "channel": {"kind": "kraus", "in_dim": 2, "out_dim": 2, "operators": [<matrix>, ...]},
      "options": {"seed": 0}
    }

Channel kinds are ``kraus`` (``operators``), ``choi`` and ``super``
(``matrix``).  Infinite and undefined numbers are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .channels import Channel, DensityOperator

VERSION = "chanrev/1"


class FormatError(ValueError):
    """Malformed problem file."""


def matrix_to_record(m) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[_num(float(z.real)), _num(float(z.imag))] for z in flat],
    }


def record_to_matrix(rec) -> np.ndarray:
    try:
        rows, cols, data = int(rec["rows"]), int(rec["cols"]), rec["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"matrix record needs rows, cols and data: {exc}") from exc
    if len(data) != rows * cols:
        raise FormatError(f"matrix record has {len(data)} entries, expected {rows * cols}")
    try:
        vals = [complex(float(p[0]), float(p[1])) for p in data]
    except (TypeError, ValueError, IndexError) as exc:
        raise FormatError("matrix entries must be [re, im] pairs") from exc
    return np.array(vals, dtype=complex).reshape(rows, cols)


def channel_to_record(T: Channel, kind: str = "choi") -> dict:
    rec = {"kind": kind, "in_dim": T.in_dim, "out_dim": T.out_dim}
    if kind == "kraus":
        rec["operators"] = [matrix_to_record(k) for k in T.kraus]
    elif kind == "choi":
        rec["matrix"] = matrix_to_record(T.choi)
    elif kind == "super":
        rec["matrix"] = matrix_to_record(T.superop)
    else:
        raise ValueError(f"unknown channel kind {kind!r}")
    if T.label:
        rec["label"] = T.label
    return rec


def record_to_channel(rec) -> Channel:
    try:
        kind = rec["kind"]
    except (KeyError, TypeError) as exc:
        raise FormatError("channel record needs a kind") from exc
    if kind == "kraus":
        ops = [record_to_matrix(r) for r in rec.get("operators", [])]
        if not ops:
            raise FormatError("kraus channel needs at least one operator")
        if any(o.shape != ops[0].shape for o in ops):
            raise FormatError("kraus operators must share a shape")
        return Channel.from_kraus(ops, label=rec.get("label", ""))
    try:
        in_dim, out_dim = int(rec["in_dim"]), int(rec["out_dim"])
        m = record_to_matrix(rec["matrix"])
    except KeyError as exc:
        raise FormatError(f"{kind} channel needs in_dim, out_dim and matrix") from exc
    if kind == "choi":
        if m.shape != (in_dim * out_dim, in_dim * out_dim):
            raise FormatError("choi matrix has the wrong shape")
        return Channel.from_choi(m, in_dim, out_dim, label=rec.get("label", ""))
    if kind == "super":
        if m.shape != (out_dim * out_dim, in_dim * in_dim):
            raise FormatError("superoperator has the wrong shape")
        return Channel.from_superoperator(m, in_dim, out_dim, label=rec.get("label", ""))
    raise FormatError(f"unknown channel kind {kind!r}")


@dataclass
class Problem:
    channel: Channel
    states: dict[str, np.ndarray]
    reference: str
    family: list[str]
    options: dict = field(default_factory=dict)
    version: str = VERSION

    @property
    def rho(self) -> np.ndarray:
        return self.states[self.reference]

    @property
    def sigmas(self) -> list[np.ndarray]:
        return [self.states[k] for k in self.family]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "states": {k: matrix_to_record(v) for k, v in self.states.items()},
            "reference": self.reference,
            "family": list(self.family),
            "channel": channel_to_record(self.channel, "super"),
            "options": self.options,
        }


def parse_problem(data: dict) -> Problem:
    if not isinstance(data, dict):
        raise FormatError("problem file must be a JSON object")
    version = data.get("version", VERSION)
    if version != VERSION:
        raise FormatError(f"unsupported version {version!r}")
    raw = data.get("states")
    if not isinstance(raw, dict) or not raw:
        raise FormatError("problem needs a non-empty 'states' map")
    states = {}
    for name, rec in raw.items():
        m = record_to_matrix(rec)
        try:
            states[name] = DensityOperator(m).matrix
        except ValueError as exc:
            raise FormatError(f"state {name!r}: {exc}") from exc
    if "channel" not in data:
        raise FormatError("problem needs a 'channel'")
    channel = record_to_channel(data["channel"])
    reference = data.get("reference", "rho")
    if reference not in states:
        raise FormatError(f"reference state {reference!r} is missing")
    family = data.get("family") or [k for k in states if k != reference] or [reference]
    missing = [k for k in family if k not in states]
    if missing:
        raise FormatError(f"family names {missing} are not among the states")
    for name, m in states.items():
        if m.shape[0] != channel.in_dim:
            raise FormatError(f"state {name!r} has dimension {m.shape[0]}, channel expects {channel.in_dim}")
    options = data.get("options", {})
    if not isinstance(options, dict):
        raise FormatError("options must be an object")
    return Problem(channel, states, reference, list(family), options, version)


def load_problem(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return parse_problem(data)


def _num(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def to_jsonable(obj: Any) -> Any:
    """Convert reports (dataclasses, arrays, channels) into plain JSON values."""
    if isinstance(obj, Channel):
        return channel_to_record(obj, "choi")
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return matrix_to_record(obj)
        return [to_jsonable(x) for x in obj.tolist()]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(float(obj.real)), _num(float(obj.imag))]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_number(x) -> float:
    """Inverse of the infinity/nan string markers."""
    return float(x)
