"""Check records shared by every verification routine."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """Outcome of one numerical identity check.

    ``expect`` is ``"le"`` when the identity should hold (deviation at most
    ``tolerance``), ``"gt"`` when it should *fail* (deviation strictly above
    ``tolerance``), and ``"info"`` for diagnostics that are recorded but never
    affect a verdict.
    """

    name: str
    anchor: str
    deviation: float
    tolerance: float
    expect: str = "le"
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.expect == "info":
            return True
        if not math.isfinite(self.deviation):
            return False
        if self.expect == "le":
            return self.deviation <= self.tolerance
        return self.deviation > self.tolerance

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "anchor": self.anchor,
            "deviation": _clean(self.deviation),
            "tolerance": self.tolerance,
            "expect": self.expect,
            "pass": self.passed,
        }
        if self.expect == "info":
            out["identity_holds"] = bool(math.isfinite(self.deviation) and self.deviation <= self.tolerance)
        if self.note:
            out["note"] = self.note
        if self.extra:
            out["extra"] = {k: _clean(v) for k, v in sorted(self.extra.items())}
        return out


def _clean(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf"
        # 0.0 and -0.0 must serialize identically
        return x + 0.0
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in sorted(x.items())}
    if hasattr(x, "item"):
        return _clean(x.item())
    return x


def holds(name, anchor, deviation, tol, **kw) -> Check:
    return Check(name, anchor, float(deviation), float(tol), "le", **kw)


def fails(name, anchor, deviation, tol, **kw) -> Check:
    return Check(name, anchor, float(deviation), float(tol), "gt", **kw)


def info(name, anchor, deviation, tol, **kw) -> Check:
    return Check(name, anchor, float(deviation), float(tol), "info", **kw)
