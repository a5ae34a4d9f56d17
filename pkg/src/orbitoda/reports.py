"""Check reports: the one JSON schema every verification emits."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


@dataclass
class CheckReport:
    name: str
    params: dict
    status: str = "pass"                      # pass | fail | skipped
    max_order_verified: dict = field(default_factory=dict)
    first_discrepancy: dict | None = None
    elapsed_ms: float = 0.0
    detail: str = ""

    def fail(self, where: dict, lhs: str, rhs: str, detail: str = ""):
        self.status = "fail"
        if self.first_discrepancy is None:
            self.first_discrepancy = {"at": where, "lhs": lhs, "rhs": rhs}
        if detail:
            self.detail = detail
        return self

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "check": self.name,
            "params": self.params,
            "status": self.status,
            "max_order_verified": self.max_order_verified,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }
        if self.first_discrepancy is not None:
            payload["first_discrepancy"] = self.first_discrepancy
        if self.detail:
            payload["detail"] = self.detail
        return json.dumps(payload, sort_keys=True)


class Stopwatch:
    def __enter__(self):
        self.t0 = time.monotonic()
        self._final = None
        return self

    def __exit__(self, *exc):
        self._final = (time.monotonic() - self.t0) * 1000.0
        return False

    @property
    def ms(self) -> float:
        if self._final is not None:
            return self._final
        return (time.monotonic() - self.t0) * 1000.0
