"""Distribution functions, decreasing rearrangements and Lorentz functionals.

Rearrangements are computed by sorting the distinct absolute values of a
step function, never by sampling, so every functional below reduces to a
finite block sum against the cumulative weight ``W``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _quad

from .fncore import AnalyticWeight, CumulativeWeight, MeasurableSet, PiecewiseFn, measure_u


@dataclass(frozen=True)
class DecreasingStep:
    """Right-continuous decreasing step function on ``[0, sum(widths))``."""

    levels: tuple[float, ...]
    widths: tuple[float, ...]
    truncated: bool = False

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        wd = np.asarray(self.widths, dtype=float)
        if lv.shape != wd.shape:
            raise ValueError("levels and widths differ in length")
        if lv.size and (np.any(np.diff(lv) >= 0) or np.any(lv <= 0)):
            raise ValueError("levels must be positive and strictly decreasing")
        if np.any(wd <= 0):
            raise ValueError("widths must be positive")

    @classmethod
    def from_arrays(cls, levels, widths, truncated=False) -> "DecreasingStep":
        return cls(tuple(float(v) for v in levels), tuple(float(v) for v in widths), truncated)

    @property
    def ends(self) -> np.ndarray:
        """Right block endpoints ``T_k``."""
        return np.cumsum(np.asarray(self.widths, dtype=float))

    @property
    def support(self) -> float:
        return float(np.sum(self.widths)) if self.widths else 0.0

    def __len__(self):
        return len(self.levels)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if not self.levels:
            return np.zeros_like(t)
        lv = np.concatenate([np.asarray(self.levels), [0.0]])
        idx = np.searchsorted(self.ends, t, side="right")
        return lv[idx]

    def integral(self, a, b):
        """``int_a^b g`` for ``0 <= a <= b``."""
        ends = np.concatenate([[0.0], self.ends])
        if len(ends) == 1:
            return np.zeros_like(np.asarray(b, dtype=float))
        prim = np.concatenate([[0.0], np.cumsum(np.asarray(self.levels) * np.asarray(self.widths))])
        return np.interp(b, ends, prim) - np.interp(a, ends, prim)

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "widths": list(self.widths)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DecreasingStep":
        d = json.loads(text)
        return cls.from_arrays(d["levels"], d["widths"])


@dataclass(frozen=True)
class LorentzParams:
    p: float
    q: float | None = None

    def __post_init__(self):
        for v in (self.p, self.q):
            if v is not None and not (0 < v < math.inf):
                raise ValueError("Lorentz exponents must be finite and positive")


def _cell_masses(f: PiecewiseFn, u) -> np.ndarray:
    if f.tail != "zero":
        raise ValueError("rearrangement needs compact support (zero tail)")
    left, right, _ = f.cells()
    return np.asarray(u.integral(left, right), dtype=float)


def distribution_u(f: PiecewiseFn, y: float, u) -> float:
    """``u({|f| > y})``."""
    masses = _cell_masses(f, u)
    return float(np.sum(masses[np.abs(f.values) > y]))


def rearrange_u(f: PiecewiseFn, u) -> DecreasingStep:
    masses = _cell_masses(f, u)
    vals = np.abs(f.values)
    keep = (vals > 0) & (masses > 0)
    if not np.any(keep):
        return DecreasingStep((), ())
    vals, masses = vals[keep], masses[keep]
    levels, inv = np.unique(vals, return_inverse=True)
    widths = np.bincount(inv, weights=masses, minlength=levels.size)
    truncated = bool(np.any(~np.isfinite(widths)))
    return DecreasingStep.from_arrays(levels[::-1], widths[::-1], truncated)


def _W(w) -> CumulativeWeight:
    return w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)


def _as_rearranged(f, u) -> DecreasingStep:
    return f if isinstance(f, DecreasingStep) else rearrange_u(f, u)


def lambda_norm(f, u, w, p: float) -> float:
    """``(int_0^inf (f*_u)^p w)^(1/p)``; ``inf`` when a block has infinite mass."""
    g = _as_rearranged(f, u)
    if not g.levels:
        return 0.0
    W = _W(w)
    ends = np.concatenate([[0.0], g.ends])
    if not np.all(np.isfinite(ends)):
        return math.inf
    dW = np.diff(W(ends))
    with np.errstate(over="ignore"):  # huge levels overflow to inf, which is the honest norm
        return float(np.sum(np.asarray(g.levels) ** p * dW) ** (1.0 / p))


def lambda_weak_norm(f, u, w, p: float) -> float:
    """``sup_t f*_u(t) W(t)^(1/p)``, attained at a right block endpoint."""
    g = _as_rearranged(f, u)
    if not g.levels:
        return 0.0
    W = _W(w)
    return float(np.max(np.asarray(g.levels) * W(g.ends) ** (1.0 / p)))


def lambda_qp_norm(f, u, w, q: float, p: float) -> float:
    """Norm against ``W^(p/q - 1) w dt`` whose antiderivative is ``(q/p) W^(p/q)``."""
    g = _as_rearranged(f, u)
    if not g.levels:
        return 0.0
    W = _W(w)
    ends = np.concatenate([[0.0], g.ends])
    V = (q / p) * W(ends) ** (p / q)
    return float(np.sum(np.asarray(g.levels) ** p * np.diff(V)) ** (1.0 / p))


def inverse_power_integral(w, s: float, p: float) -> float:
    """``int_0^s W(t)^(-1/p) dt``; ``inf`` when divergent at 0."""
    if s <= 0:
        return 0.0
    w = w.w if isinstance(w, CumulativeWeight) else w
    W = CumulativeWeight(w)
    r = 1.0 / p
    if isinstance(w, AnalyticWeight):
        if w.kind == "power":
            beta = (w.exponent + 1.0) * r
            if beta >= 1.0:
                return math.inf
            return (w.exponent + 1.0) ** r * s ** (1.0 - beta) / (1.0 - beta)
        # W(t) ~ t at 0; the singular part is handled by quad's algebraic weight
        if r >= 1.0:
            return math.inf
        def ratio(t):
            return 1.0 if t <= 0.0 else (float(W(t)) / t) ** (-r)

        val, _ = _quad.quad(ratio, 0.0, s, weight="alg", wvar=(-r, 0.0), limit=200)
        return float(val)
    bp = w.breakpoints
    edges = np.concatenate([bp[bp < s], [s]])
    total = 0.0
    for k in range(edges.size - 1):
        a, b = float(edges[k]), float(edges[k + 1])
        Wa = float(W(a))
        v = float(w((a + b) / 2))
        if a >= bp[-1] and w.tail == "power":
            val, _ = _quad.quad(lambda t: float(W(t)) ** (-r), a, b, limit=200)
            total += val
            continue
        if v == 0.0:
            if Wa == 0.0:
                return math.inf
            total += Wa ** (-r) * (b - a)
            continue
        A, B = Wa, Wa + v * (b - a)
        if A == 0.0 and r >= 1.0:
            return math.inf
        if r == 1.0:
            total += (math.log(B) - math.log(A)) / v
        else:
            total += (B ** (1.0 - r) - A ** (1.0 - r)) / (v * (1.0 - r))
    return total


def associate_norm_indicator(E, u, w, p: float) -> float:
    """Associate-space norm of ``chi_E``: ``int_0^{u(E)} W^(-1/p)``."""
    if isinstance(E, (int, float)):
        s = float(E)
    else:
        s = measure_u(u, E if isinstance(E, MeasurableSet) else MeasurableSet(E))
    return inverse_power_integral(w, s, p)
