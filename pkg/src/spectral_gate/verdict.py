"""Structured verdicts shared by every criterion checker."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class Status(str, enum.Enum):
    SATISFIED = "satisfied"
    SATISFIED_SAMPLED = "satisfied (sampled)"
    SATISFIED_HEURISTIC = "satisfied (heuristic)"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    DISCRETE = "discrete-consistent"
    ESSENTIAL = "essential-spectrum-consistent"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Witness:
    """A cube (or other locus) together with the number that made it interesting."""

    value: float
    center: tuple | None = None
    side: float | None = None
    vector: tuple | None = None
    label: str = ""

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"value": _jsonable(self.value)}
        if self.center is not None:
            out["center"] = [float(c) for c in self.center]
        if self.side is not None:
            out["side"] = float(self.side)
        if self.vector is not None:
            out["vector"] = _jsonable(np.asarray(self.vector))
        if self.label:
            out["label"] = self.label
        return out


@dataclass
class CriterionVerdict:
    status: Status
    witnesses: list[Witness] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    table: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.status = Status(self.status)
        if self.status is Status.VIOLATED and not self.witnesses:
            raise ValueError("a violated verdict must carry at least one witness")

    @property
    def satisfied(self) -> bool:
        return self.status in (Status.SATISFIED, Status.SATISFIED_SAMPLED, Status.SATISFIED_HEURISTIC)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "params": _jsonable(self.params),
            "table": _jsonable(self.table),
            "notes": list(self.notes),
        }


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays (incl. complex) to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.allclose(obj.imag, 0.0):
                return _jsonable(obj.real.tolist())
            return {"re": _jsonable(obj.real.tolist()), "im": _jsonable(obj.imag.tolist())}
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def trend_status(values, threshold, window=3):
    """True when the tail of ``values`` is strictly increasing and ends above ``threshold``."""
    vals = [float(v) for v in values]
    if not vals:
        return False
    tail = vals[-window:]
    increasing = all(b > a for a, b in zip(tail, tail[1:]))
    if len(tail) == 1:
        increasing = True
    return increasing and tail[-1] >= threshold
