"""Exact calculus for piecewise-constant functions and analytic weight families.

Everything here is closed form: integrals are sums of value times overlap
length (plus a closed-form tail), analytic weights carry their
antiderivative, and extremal subsets of prescribed Lebesgue measure are
found by sorting cells (step weights) or by solving a piecewise-linear
measure equation (power weights).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TAIL_POLICIES = ("zero", "constant", "power")


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (self.b > self.a):
            raise ValueError(f"empty interval ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    def dilate(self, factor: float) -> "Interval":
        """Same center, ``factor`` times the length."""
        half = 0.5 * factor * self.length
        return Interval(self.center - half, self.center + half)

    def shift(self, offset: float) -> "Interval":
        return Interval(self.a + offset, self.b + offset)

    def contains(self, x) -> bool:
        return self.a <= x <= self.b

    def overlaps(self, other: "Interval") -> bool:
        return self.a < other.b and other.a < self.b


def _as_interval(J) -> Interval:
    if isinstance(J, Interval):
        return J
    a, b = J
    return Interval(float(a), float(b))


class MeasurableSet:
    """Finite disjoint union of open intervals, sorted and merged when touching."""

    __slots__ = ("components",)

    def __init__(self, intervals: Iterable = ()):
        pieces = sorted((float(a), float(b)) for a, b in
                        ((iv.a, iv.b) if isinstance(iv, Interval) else iv for iv in intervals)
                        if b > a)
        merged: list[list[float]] = []
        for a, b in pieces:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "components", tuple((a, b) for a, b in merged))

    def __setattr__(self, name, value):
        raise AttributeError("MeasurableSet is immutable")

    def __iter__(self):
        return (Interval(a, b) for a, b in self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        return isinstance(other, MeasurableSet) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return f"MeasurableSet({list(self.components)})"

    @property
    def length(self) -> float:
        return float(sum(b - a for a, b in self.components))

    @property
    def empty(self) -> bool:
        return not self.components

    def union(self, other: "MeasurableSet") -> "MeasurableSet":
        return MeasurableSet(list(self.components) + list(other.components))

    def contains(self, x) -> bool:
        return any(a <= x <= b for a, b in self.components)


# ---------------------------------------------------------------------------
# step functions


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _power_primitive(x, exponent, coefficient=1.0, center=0.0):
    """Odd antiderivative of ``coefficient * |x - center|**exponent``, zero at center."""
    d = np.asarray(x, dtype=float) - center
    if exponent == -1.0:
        with np.errstate(divide="ignore"):
            return coefficient * np.sign(d) * np.log(np.abs(d))
    return coefficient * np.sign(d) * np.abs(d) ** (exponent + 1.0) / (exponent + 1.0)


class PiecewiseFn:
    """Real function constant on the cells of a finite breakpoint list.

    Outside ``[breakpoints[0], breakpoints[-1]]`` the value follows
    ``tail``: ``"zero"``, ``"constant"`` (extends the end values) or
    ``"power"`` (``tail_coefficient * |x - tail_center|**tail_exponent``).
    A function whose first breakpoint is 0 is a half-line object and its
    tail only applies on the right.
    """

    __slots__ = ("breakpoints", "values", "tail", "tail_exponent",
                 "tail_coefficient", "tail_center", "_cum", "center")

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float], tail: str = "zero",
                 tail_exponent: float | None = None, tail_coefficient: float | None = None,
                 tail_center: float = 0.0, center: float | None = None):
        bp = _frozen(breakpoints)
        vals = _frozen(values)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape != (bp.size - 1,):
            raise ValueError(f"expected {bp.size - 1} values, got {vals.size}")
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(bp)):
            raise ValueError("breakpoints and values must be finite")
        if tail not in TAIL_POLICIES:
            raise ValueError(f"unknown tail policy {tail!r}")
        if tail == "power" and (tail_exponent is None or tail_coefficient is None):
            raise ValueError("power tail needs exponent and coefficient")
        setattr_ = object.__setattr__
        setattr_(self, "breakpoints", bp)
        setattr_(self, "values", vals)
        setattr_(self, "tail", tail)
        setattr_(self, "tail_exponent", None if tail_exponent is None else float(tail_exponent))
        setattr_(self, "tail_coefficient", None if tail_coefficient is None else float(tail_coefficient))
        setattr_(self, "tail_center", float(tail_center))
        # location of the interesting point (singularity of a sampled weight)
        setattr_(self, "center", float(center) if center is not None else float(bp[0] if bp[0] >= 0 else 0.0))
        cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(bp))])
        cum.setflags(write=False)
        setattr_(self, "_cum", cum)

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseFn is immutable")

    def __repr__(self):
        return f"PiecewiseFn(cells={self.values.size}, window={self.window}, tail={self.tail!r})"

    # -- structure
    @property
    def window(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def halfline(self) -> bool:
        return self.breakpoints[0] == 0.0

    @property
    def centers(self) -> list[float]:
        return [self.center]

    def cells(self):
        bp = self.breakpoints
        return bp[:-1], bp[1:], self.values

    def is_weight(self) -> bool:
        if np.any(self.values <= 0):
            return False
        if self.tail == "power" and self.tail_coefficient <= 0:
            return False
        return True

    def _left_tail_applies(self) -> bool:
        return not self.halfline

    # -- evaluation
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        bp = self.breakpoints
        idx = np.searchsorted(bp, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.zeros_like(x)
        out[inside] = self.values[idx[inside]]
        if self.tail == "constant":
            out = np.where(x >= bp[-1], self.values[-1], out)
            if self._left_tail_applies():
                out = np.where(x < bp[0], self.values[0], out)
        elif self.tail == "power":
            tail_val = self.tail_coefficient * np.abs(x - self.tail_center) ** self.tail_exponent
            out = np.where(x >= bp[-1], tail_val, out)
            if self._left_tail_applies():
                out = np.where(x < bp[0], tail_val, out)
        return out

    def primitive(self, x):
        """Antiderivative, zero at the first breakpoint."""
        x = np.asarray(x, dtype=float)
        bp, lo, hi = self.breakpoints, self.breakpoints[0], self.breakpoints[-1]
        xc = np.clip(x, lo, hi)
        out = np.interp(xc, bp, self._cum)
        if self.tail == "constant":
            out = out + np.where(x > hi, self.values[-1] * (x - hi), 0.0)
            if self._left_tail_applies():
                out = out + np.where(x < lo, self.values[0] * (x - lo), 0.0)
        elif self.tail == "power":
            e, c, x0 = self.tail_exponent, self.tail_coefficient, self.tail_center
            with np.errstate(invalid="ignore", divide="ignore"):
                right = _power_primitive(np.maximum(x, hi), e, c, x0) - _power_primitive(hi, e, c, x0)
                left = _power_primitive(np.minimum(x, lo), e, c, x0) - _power_primitive(lo, e, c, x0)
            out = out + np.where(x > hi, right, 0.0)
            if self._left_tail_applies():
                out = out + np.where(x < lo, left, 0.0)
        return out

    def integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        Pa, Pb = self.primitive(a), self.primitive(b)
        out = np.asarray(Pb - Pa, dtype=float)
        # differences of a far-anchored primitive lose small cells; redo those by local sums
        with np.errstate(invalid="ignore"):
            bad = np.abs(out) < 1e-6 * np.maximum(np.abs(Pa), np.abs(Pb))
        if np.any(bad):
            out = out.copy()
            aa, bb = np.broadcast_arrays(a, b)
            lo, hi = self.window
            for idx in zip(*np.nonzero(bad)) if out.ndim else [()]:
                x, y = float(aa[idx]), float(bb[idx])
                s = 1.0
                if y < x:
                    x, y, s = y, x, -1.0
                xc, yc = min(max(x, lo), hi), min(max(y, lo), hi)
                val = self._local_sum(xc, yc)
                if y > hi:
                    val += float(self.primitive(y) - self.primitive(hi))
                if x < lo:
                    val += float(self.primitive(lo) - self.primitive(x))
                out[idx] = s * val
        return out

    def _local_sum(self, x: float, y: float) -> float:
        bp, v = self.breakpoints, self.values
        if y <= x:
            return 0.0
        i = int(np.searchsorted(bp, x, side="right") - 1)
        j = int(np.searchsorted(bp, y, side="right") - 1)
        j = min(j, v.size - 1)
        if i == j:
            return float(v[i] * (y - x))
        mid = float(np.sum(v[i + 1:j] * np.diff(bp[i + 1:j + 1])))
        return float(v[i] * (bp[i + 1] - x) + mid + v[j] * (y - bp[j]))

    def covers(self, a: float, b: float) -> bool:
        lo, hi = self.window
        if self.tail != "zero":
            return True
        return a >= lo and b <= hi

    # -- algebra
    def _on(self, bp: np.ndarray) -> np.ndarray:
        mids = 0.5 * (bp[:-1] + bp[1:])
        return self(mids)

    def _merge(self, other: "PiecewiseFn"):
        lo = min(self.breakpoints[0], other.breakpoints[0])
        hi = max(self.breakpoints[-1], other.breakpoints[-1])
        bp = np.union1d(self.breakpoints, other.breakpoints)
        bp = bp[(bp >= lo) & (bp <= hi)]
        return bp

    def _combine(self, other, op):
        if isinstance(other, (int, float)):
            return PiecewiseFn(self.breakpoints, op(self.values, float(other)), tail=self.tail
                               if self.tail != "power" else "zero", center=self.center)
        if self.tail == "power" or other.tail == "power":
            raise ValueError("algebra on power tails is not closed; sample first")
        bp = self._merge(other)
        vals = op(self._on(bp), other._on(bp))
        tail = "constant" if (self.tail == "constant" or other.tail == "constant") else "zero"
        return PiecewiseFn(bp, vals, tail=tail, center=self.center)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c: float) -> "PiecewiseFn":
        kw = {}
        if self.tail == "power":
            kw = dict(tail_exponent=self.tail_exponent, tail_coefficient=self.tail_coefficient * c,
                      tail_center=self.tail_center)
        return PiecewiseFn(self.breakpoints, self.values * c, tail=self.tail, center=self.center, **kw)

    def abs(self) -> "PiecewiseFn":
        return PiecewiseFn(self.breakpoints, np.abs(self.values), tail=self.tail,
                           tail_exponent=self.tail_exponent,
                           tail_coefficient=None if self.tail_coefficient is None else abs(self.tail_coefficient),
                           tail_center=self.tail_center, center=self.center)

    def power(self, s: float) -> "PiecewiseFn":
        """Cellwise ``|f|**s`` (used for dual weights ``u**(-1/(p-1))``)."""
        kw = {}
        if self.tail == "power":
            kw = dict(tail_exponent=self.tail_exponent * s, tail_coefficient=abs(self.tail_coefficient) ** s,
                      tail_center=self.tail_center)
        return PiecewiseFn(self.breakpoints, np.abs(self.values) ** s, tail=self.tail, center=self.center, **kw)

    def restrict(self, J) -> "PiecewiseFn":
        """``f * chi_J`` with zero tail."""
        J = _as_interval(J)
        bp = np.union1d(self.breakpoints, [J.a, J.b])
        bp = bp[(bp >= J.a) & (bp <= J.b)]
        return PiecewiseFn(bp, self._on(bp), tail="zero", center=self.center)

    def dilate(self, s: float, about: float = 0.0) -> "PiecewiseFn":
        """``x -> f(about + (x - about)/s)``."""
        bp = about + (self.breakpoints - about) * s
        return PiecewiseFn(bp, self.values, tail="zero" if self.tail == "power" else self.tail,
                           center=about + (self.center - about) * s)

    # -- serialization
    def to_dict(self) -> dict:
        d = {"kind": "step", "breakpoints": [float(v) for v in self.breakpoints],
             "values": [float(v) for v in self.values], "tail": self.tail}
        if self.tail == "power":
            d.update(tail_exponent=self.tail_exponent, tail_coefficient=self.tail_coefficient,
                     tail_center=self.tail_center)
        return d


@dataclass(frozen=True)
class AnalyticWeight:
    """Closed-form weight families.

    ``power``: ``|x - center|**exponent`` (on the half line, ``t**exponent``).
    ``rational``: ``(1 + t)**(-exponent)`` on the half line (default exponent 1).
    """

    kind: str
    exponent: float | None = None
    center: float = 0.0

    def __post_init__(self):
        if self.exponent is None:
            object.__setattr__(self, "exponent", 1.0 if self.kind == "rational" else 0.0)
        object.__setattr__(self, "exponent", float(self.exponent))
        if self.kind == "power":
            if not self.exponent > -1.0:
                raise ValueError("power weight needs exponent > -1 for local integrability")
        elif self.kind == "rational":
            pass
        else:
            raise ValueError(f"unknown analytic weight kind {self.kind!r}")

    @property
    def tail(self) -> str:
        return "analytic"

    @property
    def centers(self) -> list[float]:
        return [self.center]

    @property
    def halfline(self) -> bool:
        return self.kind == "rational"

    def is_weight(self) -> bool:
        return True

    def covers(self, a, b) -> bool:
        return True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                return np.abs(x - self.center) ** self.exponent
        return (1.0 + x) ** (-self.exponent)

    def primitive(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return _power_primitive(x, self.exponent, 1.0, self.center)
        c = self.exponent
        if c == 1.0:
            return np.log1p(x)
        # expm1/log1p keep relative accuracy for tiny x
        return np.expm1((1.0 - c) * np.log1p(x)) / (1.0 - c)

    def integral(self, a, b):
        if self.kind == "rational":
            # direct difference keeps relative accuracy when the primitive saturates
            a = np.asarray(a, dtype=float)
            b = np.asarray(b, dtype=float)
            c = self.exponent
            if c == 1.0:
                return np.log1p((b - a) / (1.0 + a))
            return (1.0 + a) ** (1.0 - c) * np.expm1((1.0 - c) * np.log1p((b - a) / (1.0 + a))) / (1.0 - c)
        return self.primitive(b) - self.primitive(a)

    def power(self, s: float) -> "AnalyticWeight":
        if self.kind != "power":
            raise NotImplementedError("only power weights are closed under powers")
        return _UncheckedPower(self.exponent * s, self.center)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "exponent": self.exponent, "center": self.center}


class _UncheckedPower(AnalyticWeight):
    """Power of a power weight; may fail local integrability (integrals become inf)."""

    def __init__(self, exponent, center):
        object.__setattr__(self, "kind", "power")
        object.__setattr__(self, "exponent", float(exponent))
        object.__setattr__(self, "center", float(center))

    def primitive(self, x):
        if self.exponent > -1.0:
            return super().primitive(x)
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.center, np.inf, -np.inf)

    def integral(self, a, b):
        if self.exponent > -1.0:
            return super().integral(a, b)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        straddles = (lo <= self.center) & (hi >= self.center)
        near = np.minimum(np.abs(lo - self.center), np.abs(hi - self.center))
        far = np.maximum(np.abs(lo - self.center), np.abs(hi - self.center))
        e = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            if e == -1.0:
                val = np.log(far / near)
            else:
                val = (far ** (e + 1) - near ** (e + 1)) / (e + 1)
        return np.where(straddles, np.inf, np.sign(b - a) * val)


Weight = PiecewiseFn | AnalyticWeight


# ---------------------------------------------------------------------------
# module-level operations


def integrate(f, J, with_flag: bool = False):
    """Exact integral of ``f`` over ``J``.

    With ``with_flag`` returns ``(value, truncated)`` where ``truncated`` says
    the interval left the window of a zero-tail function.
    """
    J = _as_interval(J)
    value = float(f.integral(J.a, J.b))
    if with_flag:
        return value, not f.covers(J.a, J.b)
    return value


def measure_u(u, E) -> float:
    if isinstance(E, Interval):
        E = MeasurableSet([E])
    if E.empty:
        return 0.0
    a = np.array([c[0] for c in E.components])
    b = np.array([c[1] for c in E.components])
    return float(np.sum(u.integral(a, b)))


def _cells_on(u: PiecewiseFn, I: Interval):
    """Cells of ``u`` clipped to ``I``, tails included as single cells."""
    if u.tail == "power" and not u.covers(I.a, I.b):
        pass
    lo, hi = u.window
    edges = np.union1d(u.breakpoints, [I.a, I.b])
    edges = edges[(edges >= I.a) & (edges <= I.b)]
    left, right = edges[:-1], edges[1:]
    vals = u(0.5 * (left + right))
    if u.tail == "power":
        outside = (right <= lo) | (left >= hi)
        if np.any(outside):
            raise ValueError("extremal subsets are not defined on power tails; sample the tail first")
    return left, right, vals


def _step_extremal_profile(u: PiecewiseFn, I: Interval, largest: bool):
    left, right, vals = _cells_on(u, I)
    order = np.argsort(-vals if largest else vals, kind="stable")
    lens = (right - left)[order]
    cum_len = np.concatenate([[0.0], np.cumsum(lens)])
    cum_mass = np.concatenate([[0.0], np.cumsum(lens * vals[order])])
    return left[order], vals[order], cum_len, cum_mass


def _power_near_radius(u: AnalyticWeight, I: Interval, m):
    """Radius rho with |{x in I: |x - center| < rho}| = m (vectorized in m)."""
    m = np.asarray(m, dtype=float)
    x0 = u.center
    left_room = x0 - I.a
    right_room = I.b - x0
    if left_room <= 0:
        return m + (I.a - x0)
    if right_room <= 0:
        return m + (x0 - I.b)
    small, big = min(left_room, right_room), max(left_room, right_room)
    return np.where(m <= 2 * small, 0.5 * m, m - small)


def _power_near_mass(u: AnalyticWeight, I: Interval, m):
    rho = _power_near_radius(u, I, m)
    a = np.maximum(I.a, u.center - rho)
    b = np.minimum(I.b, u.center + rho)
    return np.where(np.asarray(m) > 0, u.integral(a, np.maximum(a, b)), 0.0)


def extremal_mass(u, I, m, largest: bool):
    """``u(S)`` for the extremal ``S`` in ``I`` with ``|S| = m`` (vectorized in ``m``).

    ``largest`` selects the set maximizing ``u(S)`` (superlevel); otherwise
    the minimizing one (sublevel).
    """
    I = _as_interval(I)
    m = np.clip(np.asarray(m, dtype=float), 0.0, I.length)
    if isinstance(u, AnalyticWeight):
        if u.kind != "power":
            raise NotImplementedError("extremal sets for rational weights on the line")
        total = float(u.integral(I.a, I.b))
        a = u.exponent
        if a == 0.0:
            return m.copy()
        near_is_large = a < 0
        if largest == near_is_large:
            return _power_near_mass(u, I, m)
        return total - _power_near_mass(u, I, I.length - m)
    _, _, cum_len, cum_mass = _step_extremal_profile(u, I, largest)
    return np.interp(m, cum_len, cum_mass)


def _extremal_subset(u, I, fraction, largest):
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    I = _as_interval(I)
    m = fraction * I.length
    if isinstance(u, AnalyticWeight):
        if u.kind != "power":
            raise NotImplementedError("extremal sets for rational weights on the line")
        if u.exponent == 0.0:
            return MeasurableSet([(I.a, I.a + m)])
        near_is_large = u.exponent < 0
        if largest == near_is_large:
            rho = float(_power_near_radius(u, I, m))
            return MeasurableSet([(max(I.a, u.center - rho), min(I.b, u.center + rho))])
        rho = float(_power_near_radius(u, I, I.length - m))
        a, b = max(I.a, u.center - rho), min(I.b, u.center + rho)
        return MeasurableSet([(I.a, a), (b, I.b)])
    lefts, _, cum_len, _ = _step_extremal_profile(u, I, largest)
    pieces = []
    cells_len = np.diff(cum_len)
    for k, start in enumerate(lefts):
        if cum_len[k] >= m:
            break
        take = min(cells_len[k], m - cum_len[k])
        pieces.append((start, start + take))
    return MeasurableSet(pieces)


def sublevel_subset(u, I, fraction: float) -> MeasurableSet:
    """Subset of ``I`` with measure ``fraction*|I|`` minimizing ``u(S)``; ties go left."""
    return _extremal_subset(u, I, fraction, largest=False)


def superlevel_subset(u, I, fraction: float) -> MeasurableSet:
    """Subset of ``I`` with measure ``fraction*|I|`` maximizing ``u(S)``; ties go left."""
    return _extremal_subset(u, I, fraction, largest=True)


# ---------------------------------------------------------------------------
# sampling and meshes


def geometric_mesh(center: float, lo: float, hi: float, finest: float, ratio: float = 2.0) -> np.ndarray:
    """Breakpoints graded geometrically away from ``center`` on ``[lo, hi]``."""
    pts = [lo, hi]
    if lo < center < hi:
        pts.append(center)
    d = finest
    while d < max(hi - center, center - lo):
        for x in (center - d, center + d):
            if lo < x < hi:
                pts.append(x)
        d *= ratio
    return np.unique(np.array(pts, dtype=float))


def sample_weight(u, breakpoints, tail: str | None = None) -> PiecewiseFn:
    """Cell-average sampling: mass on every cell is preserved exactly."""
    bp = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(u.integral(bp[:-1], bp[1:])) / np.diff(bp)
    if isinstance(u, PiecewiseFn):
        return PiecewiseFn(bp, vals, tail=tail or u.tail, tail_exponent=u.tail_exponent,
                           tail_coefficient=u.tail_coefficient, tail_center=u.tail_center, center=u.center)
    if tail is None:
        tail = "power" if u.kind == "power" else "zero"
    kw = {}
    if tail == "power":
        if u.kind != "power":
            raise ValueError("power tail only for power weights")
        kw = dict(tail_exponent=u.exponent, tail_coefficient=1.0, tail_center=u.center)
    return PiecewiseFn(bp, vals, tail=tail, center=u.center, **kw)


def indicator(a: float, b: float, value: float = 1.0) -> PiecewiseFn:
    return PiecewiseFn([a, b], [value])


def step(cells: dict) -> PiecewiseFn:
    """Build from ``{(a, b): value}``; gaps are filled with zeros."""
    items = sorted(cells.items())
    bp: list[float] = []
    vals: list[float] = []
    for (a, b), v in items:
        if bp and a > bp[-1]:
            vals.append(0.0)
            bp.append(a)
        elif bp and a < bp[-1]:
            raise ValueError("overlapping cells")
        if not bp:
            bp.append(a)
        vals.append(v)
        bp.append(b)
    return PiecewiseFn(bp, vals)


# ---------------------------------------------------------------------------
# cumulative weight on the half line


class CumulativeWeight:
    """``W(t) = int_0^t w`` with evaluation and inverse."""

    __slots__ = ("w",)

    def __init__(self, w):
        if isinstance(w, PiecewiseFn) and w.breakpoints[0] != 0.0:
            raise ValueError("half-line weight must start at 0")
        object.__setattr__(self, "w", w)

    def __setattr__(self, name, value):
        raise AttributeError("CumulativeWeight is immutable")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore"):
            out = self.w.primitive(t) - self.w.primitive(0.0)
        return np.where(np.isposinf(t), self.total, out)

    @property
    def total(self) -> float:
        """``W(infinity)``."""
        w = self.w
        if isinstance(w, AnalyticWeight):
            if w.kind == "rational" and w.exponent > 1.0:
                return 1.0 / (w.exponent - 1.0)
            return math.inf
        if w.tail == "zero":
            return float(w._cum[-1])
        if w.tail == "constant":
            return math.inf if w.values[-1] > 0 else float(w._cum[-1])
        if w.tail_exponent >= -1.0:
            return math.inf
        hi = w.breakpoints[-1]
        return float(w._cum[-1] - _power_primitive(hi, w.tail_exponent, w.tail_coefficient, w.tail_center))

    @property
    def tail_descriptor(self) -> str:
        w = self.w
        if isinstance(w, AnalyticWeight):
            return f"analytic:{w.kind}({w.exponent})"
        if w.tail == "power":
            return f"power({w.tail_exponent})"
        return w.tail

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        w = self.w
        if isinstance(w, AnalyticWeight):
            if w.kind == "power":
                b = w.exponent
                return ((b + 1.0) * y) ** (1.0 / (b + 1.0))
            c = w.exponent
            if c == 1.0:
                return np.expm1(y)
            with np.errstate(invalid="ignore", divide="ignore"):
                z = (1.0 - c) * y
                return np.where(z > -1.0, np.expm1(np.log1p(z) / (1.0 - c)), np.inf)
        bp, cum = w.breakpoints, w._cum
        out = np.interp(y, cum, bp)
        beyond = y > cum[-1]
        if np.any(beyond):
            hi = bp[-1]
            extra = y - cum[-1]
            if w.tail == "zero":
                rest = np.full_like(y, np.inf)
            elif w.tail == "constant":
                rest = hi + extra / w.values[-1]
            else:
                e, c, x0 = w.tail_exponent, w.tail_coefficient, w.tail_center
                g = _power_primitive(hi, e, c, x0) + extra
                with np.errstate(invalid="ignore"):
                    if e == -1.0:
                        rest = x0 + np.exp(g / c)
                    else:
                        base = g * (e + 1.0) / c
                        rest = np.where(base > 0, x0 + np.abs(base) ** (1.0 / (e + 1.0)), np.inf)
            out = np.where(beyond, rest, out)
        return out


# ---------------------------------------------------------------------------
# JSON


def weight_to_json(f) -> str:
    return json.dumps(f.to_dict())


def weight_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "step":
        return PiecewiseFn(d["breakpoints"], d["values"], tail=d.get("tail", "zero"),
                           tail_exponent=d.get("tail_exponent"), tail_coefficient=d.get("tail_coefficient"),
                           tail_center=d.get("tail_center", 0.0))
    if kind == "power":
        return AnalyticWeight("power", float(d.get("exponent", 0.0)), float(d.get("center", 0.0)))
    if kind == "rational":
        return AnalyticWeight("rational", float(d.get("exponent", 1.0)))
    raise ValueError(f"unknown function kind {kind!r}")


def weight_from_json(text: str):
    return weight_from_dict(json.loads(text))


def parse_weight(text: str):
    """Parse JSON or the shorthands ``power:a``, ``rational[:c]``, ``const``."""
    text = text.strip()
    if text.startswith("{"):
        return weight_from_json(text)
    name, _, arg = text.partition(":")
    if name == "power":
        return AnalyticWeight("power", float(arg or 0.0))
    if name == "rational":
        return AnalyticWeight("rational", float(arg or 1.0))
    if name in ("const", "one", "1"):
        return AnalyticWeight("power", 0.0)
    raise ValueError(f"cannot parse weight {text!r}")
