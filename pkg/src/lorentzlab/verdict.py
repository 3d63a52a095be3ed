"""Verdict records and the scale-growth rule shared by certifiers and probes.

Every scanned constant is a supremum over a finite candidate set, hence a
lower bound. A quantity is declared unbounded only when its per-scale
estimates keep growing at an end of the scanned range: a run of at least
three consecutive scales, each exceeding the previous one by more than a
relative ``step_tol``, ending at the first or last scale, whose total
increase is at least ``growth_factor``. A shorter increase of the same
shape is a growth witness without a refutation (INCONCLUSIVE).

A run whose increments shrink geometrically (ratio below ``CONVERGING_Q``
per scale over its last steps) is a bounded quantity approaching its
supremum, not growth; it is recorded but does not count as a witness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

PASS = "PASS"
FAIL = "FAIL"  # exact divergence, e.g. an infinite tail integral
FAIL_GROWTH = "FAIL-GROWTH"
INCONCLUSIVE = "INCONCLUSIVE"
FAILING = (FAIL, FAIL_GROWTH)

DEFAULT_GROWTH_FACTOR = 2.0
STEP_TOL = 1e-3
MIN_RUN = 3
CONVERGING_Q = 0.85


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def jsonable(obj):
    """Recursively convert to JSON-safe builtins (infinities become strings)."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if hasattr(obj, "item") and callable(obj.item):
        obj = obj.item()
    if isinstance(obj, float):
        return _json_float(obj)
    return obj


@dataclass
class GrowthRun:
    direction: str  # "up" (growth toward the last scale) or "down" (toward the first)
    start: int
    stop: int
    ratio: float
    q: float = math.nan  # geometric ratio of the last increments
    limit: float = math.nan  # extrapolated supremum when converging

    @property
    def converging(self) -> bool:
        return self.q < CONVERGING_Q

    @property
    def length(self) -> int:
        return abs(self.stop - self.start) + 1


def _edge_run(values: Sequence[float], step_tol: float) -> tuple[int, float, float, float]:
    """Length, total ratio, increment ratio and extrapolated limit of the
    strictly increasing run ending at the last entry."""
    n = len(values)
    j = n - 1
    while j > 0 and values[j] > values[j - 1] * (1.0 + step_tol) and values[j - 1] > 0:
        j -= 1
    length = n - j
    ratio = values[-1] / values[j] if values[j] > 0 else math.inf
    q, limit = math.nan, math.nan
    if length >= MIN_RUN:
        d = [values[i] - values[i - 1] for i in range(max(j + 1, n - 3), n)]
        q = (d[-1] / d[0]) ** (1.0 / (len(d) - 1)) if d[0] > 0 else math.inf
        if q < 1.0:
            limit = values[-1] + d[-1] * q / (1.0 - q)
    return length, ratio, q, limit


def growth_runs(estimates: Sequence[float], two_sided: bool = True,
                step_tol: float = STEP_TOL) -> list[GrowthRun]:
    vals = [float(v) for v in estimates]
    runs = []
    if len(vals) >= MIN_RUN:
        length, ratio, q, lim = _edge_run(vals, step_tol)
        if length >= MIN_RUN:
            runs.append(GrowthRun("up", len(vals) - length, len(vals) - 1, ratio, q, lim))
        if two_sided:
            length, ratio, q, lim = _edge_run(vals[::-1], step_tol)
            if length >= MIN_RUN:
                runs.append(GrowthRun("down", length - 1, 0, ratio, q, lim))
    return runs


def classify_growth(estimates: Sequence[float], growth_factor: float = DEFAULT_GROWTH_FACTOR,
                    two_sided: bool = True, step_tol: float = STEP_TOL) -> tuple[str, GrowthRun | None]:
    """Apply the growth rule. Non-finite estimates are an exact divergence (FAIL)."""
    vals = [float(v) for v in estimates]
    if any(not math.isfinite(v) for v in vals):
        return FAIL, None
    runs = [r for r in growth_runs(vals, two_sided, step_tol) if not r.converging]
    best = max(runs, key=lambda r: r.ratio, default=None)
    if best is None:
        return PASS, None
    if best.ratio >= growth_factor:
        return FAIL_GROWTH, best
    return INCONCLUSIVE, best


@dataclass
class ClassVerdict:
    """Per-scale lower-bound estimates of a class constant and the resulting verdict."""

    class_name: str
    scales: list[tuple[float, float]]
    witness: Any
    verdict: str
    constant: float = math.nan
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def failed(self) -> bool:
        return self.verdict in FAILING

    @property
    def estimates(self) -> list[float]:
        return [e for _, e in self.scales]

    def to_dict(self) -> dict:
        return jsonable({
            "class": self.class_name,
            "scales": [{"scale": s, "estimate": e} for s, e in self.scales],
            "witness": self.witness,
            "verdict": self.verdict,
            "constant": self.constant,
            "details": self.details,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ClassVerdict":
        def num(v):
            return float(v) if isinstance(v, str) else v

        return cls(d["class"], [(num(s["scale"]), num(s["estimate"])) for s in d["scales"]],
                   d.get("witness"), d["verdict"], num(d.get("constant", math.nan)), d.get("details", {}))


def verdict_from_scales(class_name: str, scales, estimates, witnesses=None,
                        growth_factor: float = DEFAULT_GROWTH_FACTOR, two_sided: bool = True,
                        details: dict | None = None) -> ClassVerdict:
    """Build a ClassVerdict from aligned per-scale estimates and witnesses."""
    est = [float(e) for e in estimates]
    verdict, run = classify_growth(est, growth_factor, two_sided)
    finite = [e for e in est if not math.isnan(e)]
    constant = max(finite) if finite else math.nan
    witness = None
    if witnesses is not None and est:
        idx = max(range(len(est)), key=lambda i: (est[i] if not math.isnan(est[i]) else -math.inf))
        witness = witnesses[idx]
    info = dict(details or {})
    info["growth_factor"] = growth_factor
    if run is not None:
        info["growth_run"] = {"direction": run.direction, "from_scale": scales[run.start],
                              "to_scale": scales[run.stop], "ratio": run.ratio, "q": run.q}
    conv = [r for r in growth_runs(est, two_sided) if r.converging] if verdict != FAIL else []
    if conv:
        info["converging_runs"] = [{"direction": r.direction, "ratio": r.ratio, "q": r.q,
                                    "limit": r.limit} for r in conv]
    return ClassVerdict(class_name, [(float(s), e) for s, e in zip(scales, est)], witness, verdict,
                        constant, info)
