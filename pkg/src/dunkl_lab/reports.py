"""Structured results emitted by norms and audits.

AuditReport is deliberately loose: a name, a verdict, and a dict of
measured numbers / fitted constants / counterexamples, so every audit in
the laboratory can serialize the same way.
"""

import dataclasses
import json
from typing import Any, Dict, List, Optional


def _jsonable(obj):
    import numpy as np
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


@dataclasses.dataclass
class AuditReport:
    name: str
    passed: bool
    details: Dict[str, Any] = dataclasses.field(default_factory=dict)
    counterexample: Optional[Dict[str, Any]] = None

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "details": _jsonable(self.details),
            "counterexample": _jsonable(self.counterexample),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, **kw)


@dataclasses.dataclass
class NormReport:
    params: Dict[str, Any]
    scale_indices: List[int]
    scale_values: List[float]
    piece_values: List[float]
    final: float
    truncation: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_dict(self):
        return {
            "params": _jsonable(self.params),
            "scale_indices": [int(i) for i in self.scale_indices],
            "scale_values": [float(v) for v in self.scale_values],
            "piece_values": [float(v) for v in self.piece_values],
            "final": float(self.final),
            "truncation": _jsonable(self.truncation),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, **kw)

    def csv_rows(self):
        """Rows for the per-scale CSV: scale_index, scale_value, piece_value
        at 12 significant digits."""
        rows = ["scale_index,scale_value,piece_value"]
        for i, s, v in zip(self.scale_indices, self.scale_values,
                           self.piece_values):
            rows.append("%d,%.11e,%.11e" % (i, s, v))
        return rows
