"""Weak-type probes for H, H*, M and direct tests of the inequalities behind them.

Every operator ratio here is a lower bound: ``Tf`` is sampled at the nodes
of an evaluation grid, turned into a step function and rearranged, which
can only lose mass. Boundedness is read off as scale stability of these
lower bounds, unboundedness as the growth rule of :mod:`verdict`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .fncore import (AnalyticWeight, CumulativeWeight, Interval, MeasurableSet, PiecewiseFn,
                     geometric_mesh, indicator, measure_u, sample_weight, step, sublevel_subset)
from .rearrange import DecreasingStep, lambda_norm, lambda_weak_norm, rearrange_u
from .verdict import (DEFAULT_GROWTH_FACTOR, FAIL, FAIL_GROWTH, FAILING, INCONCLUSIVE, PASS,
                      ClassVerdict, jsonable, verdict_from_scales)
from . import weights as wts

DEFAULT_K = 12
DEFAULT_L = 2.0 ** 12
OPERATORS = ("H", "H*", "M", "I")
FAMILIES = ("a", "b", "c", "d", "e", "f")
PROFILE_EXPONENTS = (-4.0, -2.0, -1.0, -0.5)
ONE_SIDED = ("f",)  # scale counts pieces; only growth toward more pieces means anything


class ConstructionFailure(RuntimeError):
    """No admissible shift index was found for some interval of the family."""

    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"no admissible j for interval {index}")
        self.index = index


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LORENTZLAB_THREADS", "1")))
    except ValueError:
        return 1


def _severity(v: str) -> int:
    return {PASS: 0, INCONCLUSIVE: 1, FAIL_GROWTH: 2, FAIL: 3}.get(v, 0)


def _center(u) -> float:
    cs = getattr(u, "centers", None) or []
    return float(cs[0]) if cs else 0.0


# ---------------------------------------------------------------------------
# interval families


@dataclass(frozen=True)
class IntervalFamily:
    intervals: tuple[Interval, ...]

    def __post_init__(self):
        ivs = tuple(sorted((iv if isinstance(iv, Interval) else Interval(*iv) for iv in self.intervals),
                           key=lambda iv: iv.a))
        object.__setattr__(self, "intervals", ivs)
        for I, J in zip(ivs[:-1], ivs[1:]):
            if J.a < I.b:
                raise ValueError("intervals of a family must be disjoint")

    def __len__(self):
        return len(self.intervals)

    def star(self, i: int) -> Interval:
        return self.intervals[i].dilate(101.0)

    @property
    def well_separated(self) -> bool:
        stars = [self.star(i) for i in range(len(self))]
        return all(J.a >= I.b for I, J in zip(stars[:-1], stars[1:]))

    def shifted(self, i: int, j: int) -> Interval:
        """``I_{i,j}``: same length, at distance ``(|j| - 1)|I_i|``, left for ``j < 0``."""
        I = self.intervals[i]
        if j == 0:
            return I
        if abs(j) > 50:
            raise ValueError("shift index must lie in [-50, 50]")
        return I.shift(math.copysign(abs(j) * I.length, j))

    def union(self) -> MeasurableSet:
        return MeasurableSet(self.intervals)

    def to_dict(self) -> dict:
        return {"intervals": [[iv.a, iv.b] for iv in self.intervals], "well_separated": self.well_separated}


def separated_family(rng: np.random.Generator, m: int, length: float = 1.0, origin: float = 0.0,
                     spread: float = 1.0) -> IntervalFamily:
    """``m`` intervals of random lengths with random gaps beyond the 101-dilation requirement."""
    ivs = []
    x = origin
    prev = 0.0
    for _ in range(m):
        h = length * float(rng.uniform(0.5, 2.0)) * spread ** float(rng.uniform(-1, 1))
        if ivs:
            x += 50.5 * (prev + h) * (1.0 + float(rng.uniform(0.01, 1.0)))
        ivs.append(Interval(x, x + h))
        x += h
        prev = h
    return IntervalFamily(tuple(ivs))


# ---------------------------------------------------------------------------
# sampling and the weak-type ratio


def apply_operator(T, f: PiecewiseFn, x: np.ndarray) -> np.ndarray:
    if callable(T):
        return np.abs(np.asarray(T(f, x), dtype=float))
    if T == "H":
        return np.abs(ops.hilbert(f, x, guard=None))
    if T == "H*":
        return ops.hilbert_max(f, x)
    if T == "M":
        return ops.maximal(f, x)
    if T == "I":
        return np.abs(f(x))
    raise ValueError(f"unknown operator {T!r}")


def sampled_image(T, f: PiecewiseFn, grid: ops.EvalGrid | None = None, window: float | None = None,
                  grade: int = 6) -> PiecewiseFn:
    """``|Tf|`` on the grid cells, each cell valued by the least of its two ends and its midpoint.

    Taking the least sample keeps the level sets inside the true ones up to
    variation of ``Tf`` within a cell, so the weak norm stays a lower bound.
    """
    if grid is None:
        grid = ops.EvalGrid.for_function(f, window=window, grade=grade)
    e = grid.edges
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = apply_operator(T, f, grid.nodes)
        if T in ("H", "H*", "M"):
            # continuous inside cells; M is lower semicontinuous, H and H* blow up at jumps
            ends = apply_operator(T, f, e)
            left, right = ends[:-1], ends[1:]
        else:
            # step-valued images need the one-sided limits from inside each cell
            d = 1e-9 * np.diff(e)
            left = apply_operator(T, f, e[:-1] + d)
            right = apply_operator(T, f, e[1:] - d)
    left = np.where(np.isnan(left), np.inf, left)
    right = np.where(np.isnan(right), np.inf, right)
    vals = np.minimum(mid, np.minimum(left, right))
    return PiecewiseFn(grid.edges, vals)


def _window(f: PiecewiseFn, L: float) -> float:
    lo, hi = f.window
    return max(L, abs(lo), abs(hi)) + 16.0 * (hi - lo)


def weak_type_ratio(T, f: PiecewiseFn, u, w, p: float, grid: ops.EvalGrid | None = None,
                    L: float = DEFAULT_L, grade: int = 6) -> float:
    """``||Tf||_{weak} / ||f||`` with ``Tf`` sampled on an evaluation grid (a lower bound)."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    denom = lambda_norm(f, u, W, p)
    if not (0.0 < denom < math.inf):
        raise ValueError(f"test function has norm {denom!r}; need finite and positive")
    img = sampled_image(T, f, grid, window=None if grid is not None else _window(f, L), grade=grade)
    return lambda_weak_norm(img, u, W, p) / denom


# ---------------------------------------------------------------------------
# test-function families


def _u_times_indicator(u, a: float, b: float, cells: int = 8) -> PiecewiseFn:
    """``u chi_(a,b)`` as cell averages of ``u`` on a mesh graded toward the center of ``u``."""
    c = _center(u)
    h = b - a
    if isinstance(u, AnalyticWeight) and u.kind == "power" and u.exponent == 0.0:
        return indicator(a, b)
    if a <= c <= b:
        bp = geometric_mesh(c, a, b, finest=h * 2.0 ** -cells, ratio=2.0)
    else:
        bp = np.linspace(a, b, cells + 1)
    return sample_weight(u, bp, tail="zero")


def _random_step(rng: np.random.Generator, cells: int = 8) -> tuple[np.ndarray, np.ndarray]:
    widths = rng.uniform(0.2, 1.0, cells)
    bp = np.concatenate([[0.0], np.cumsum(widths)])
    bp = bp / bp[-1]
    vals = rng.uniform(0.1, 1.0, cells) * rng.choice([-1.0, 1.0], cells, p=[0.25, 0.75])
    return bp, vals


def family_members(family: str, u, K: int = DEFAULT_K, seed: int = 0) -> list[tuple[int, str, PiecewiseFn, int]]:
    """``(scale, test id, f, grade)`` for one family, dilated by ``2**scale`` about the center of ``u``."""
    c = _center(u)
    out = []
    if family == "a":
        for k in range(-K, K + 1):
            h = 2.0 ** k
            out += [(k, "a:right", indicator(c, c + h), 12), (k, "a:sym", indicator(c - h, c + h), 12),
                    (k, "a:off", indicator(c + h, c + 2 * h), 12),
                    (k, "a:unit", indicator(c + 1.0, c + 1.0 + h), 12)]
    elif family == "b":
        for k in range(-K, K + 1):
            h = 2.0 ** k
            out += [(k, "b:right", _u_times_indicator(u, c, c + h), 12),
                    (k, "b:off", _u_times_indicator(u, c + h, c + 2 * h), 12),
                    (k, "b:unit", _u_times_indicator(u, c + 1.0, c + 1.0 + h), 12)]
    elif family == "c":
        rng = np.random.default_rng(seed)
        shapes = []
        for i in range(4):
            bp, vals = _random_step(rng)
            shapes.append((i, float(rng.uniform(-1.0, 1.0)), bp, vals))
        for k in range(-K, K + 1):
            h = 2.0 ** k
            for i, off, bp, vals in shapes:
                out.append((k, f"c:{i}", PiecewiseFn(c + h * (off + bp), vals), 12))
    elif family == "d":
        rng = np.random.default_rng(seed + 1)
        base = []
        for i in range(2):
            fam = separated_family(rng, m=3 + i)
            levels = rng.uniform(1.0, 2.0, len(fam))
            base.append((i, fam, levels))
        for k in range(-K, K + 1):
            h = 2.0 ** k
            for i, fam, levels in base:
                cells = {(c + h * I.a, c + h * I.b): float(v) for I, v in zip(fam.intervals, levels)}
                out.append((k, f"d:{i}", step(cells), 12))
    elif family == "e":
        for k in range(-K, 3 * K + 1):
            b = 2.0 ** k
            out += [(k, "e:half", indicator(c, c + b), 24)]
            for nu in (2.0 ** -2, 2.0 ** -6):
                out.append((k, f"e:pair{int(round(-math.log2(nu)))}", indicator(c - b * nu, c + b * nu), 24))
    elif family == "f":
        for n in range(1, 2 * K + 1):
            for tag, f in _profiles(u, c, n):
                out.append((n, tag, f, 12))
    else:
        raise ValueError(f"unknown family {family!r}")
    return out


def _annulus_step(edges: np.ndarray, values: np.ndarray) -> PiecewiseFn:
    """Step function with ``values[k]`` on ``edges[k]``; gaps between pieces are zero."""
    values = np.broadcast_to(np.asarray(values, dtype=float), (edges.shape[0],))
    return step({(float(a), float(b)): float(v) for (a, b), v in zip(edges, values)})


def _profiles(u, c: float, n: int):
    """Multi-level witnesses on ``n`` dyadic annuli: powers of the local average of ``u``
    toward the center (the ``u^{-1/(r-1)}`` shape at exponent ``-1/(r-1)``) and ``1/u(A_k)``
    levels, whose rearrangement is ``~1/t``."""
    k = np.arange(n)
    inner = np.stack([c + 2.0 ** (-k - 1), c + 2.0 ** -k], axis=1)
    outer = np.stack([c + 2.0 ** k, c + 2.0 ** (k + 1)], axis=1)
    m_in = np.asarray(u.integral(inner[:, 0], inner[:, 1]), dtype=float)
    m_out = np.asarray(u.integral(outer[:, 0], outer[:, 1]), dtype=float)
    if np.all(m_in > 0):
        avg = m_in / (inner[:, 1] - inner[:, 0])
        for e in PROFILE_EXPONENTS:
            vals = (avg / avg[0]) ** e
            if np.all(np.isfinite(vals)):
                yield f"f:in{e:g}", _annulus_step(inner, vals)
        yield "f:in-mass", _annulus_step(inner, m_in[0] / m_in)
    if np.all(m_out > 0):
        yield "f:out-mass", _annulus_step(outer, m_out[0] / m_out)
    # separated pieces of equal Lebesgue mass at levels 2^k: their level sets add up
    x = c + 1.0 + 16.0 * k
    spread = np.stack([x, x + 2.0 ** -k], axis=1)
    yield "f:spread", _annulus_step(spread, 2.0 ** k)


@dataclass
class WeakTypeEstimate:
    operator: str
    scales: list  # (scale, test id, ratio) maximizing per scale
    max_ratio: float
    witness: dict
    verdict: str
    families: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def ratios(self) -> list[float]:
        return [r for _, _, r in self.scales]

    @property
    def growth_witness(self) -> dict | None:
        for fid in sorted(self.families):
            run = self.families[fid].details.get("growth_run")
            if run is not None and self.families[fid].verdict != PASS:
                return {"family": fid, **run}
        return None

    def to_dict(self) -> dict:
        return jsonable({
            "operator": self.operator,
            "scales": [{"scale": s, "test": t, "ratio": r} for s, t, r in self.scales],
            "max_ratio": self.max_ratio,
            "witness": self.witness,
            "verdict": self.verdict,
            "families": {k: v.to_dict() for k, v in sorted(self.families.items())},
            "seed": self.seed,
        })


def _ratio_job(args):
    T, f, u, W, p, L, grade = args
    try:
        return weak_type_ratio(T, f, u, W, p, L=L, grade=grade)
    except ValueError:
        return math.nan


def probe_operator(T, u, w, p: float, families=FAMILIES, seed: int = 0, K: int = DEFAULT_K,
                   L: float = DEFAULT_L, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> WeakTypeEstimate:
    """Maximize the weak-type ratio over the chosen families, scale by scale."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    name = T if isinstance(T, str) else getattr(T, "__name__", "T")
    members = {fid: family_members(fid, u, K, seed) for fid in sorted(set(families))}
    jobs = [(fid, k, tid, (T, f, u, W, p, L, g)) for fid in sorted(members) for k, tid, f, g in members[fid]]
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ratios = list(pool.map(_ratio_job, [j[3] for j in jobs]))
    else:
        ratios = [_ratio_job(j[3]) for j in jobs]
    per_family: dict[str, ClassVerdict] = {}
    overall: dict[int, tuple[float, str]] = {}
    for fid in sorted(members):
        best: dict[int, tuple[float, str]] = {}
        for (jf, k, tid, _), r in zip(jobs, ratios):
            if jf != fid or math.isnan(r):
                continue
            if k not in best or r > best[k][0]:
                best[k] = (r, tid)
            if k not in overall or r > overall[k][0]:
                overall[k] = (r, tid)
        ks = sorted(best)
        per_family[fid] = verdict_from_scales(f"{name}:{fid}", ks, [best[k][0] for k in ks],
                                              witnesses=[{"scale": k, "test": best[k][1]} for k in ks],
                                              growth_factor=growth_factor, two_sided=fid not in ONE_SIDED)
    verdict = max((v.verdict for v in per_family.values()), key=_severity, default=PASS)
    ks = sorted(overall)
    scales = [(k, overall[k][1], overall[k][0]) for k in ks]
    top = max(scales, key=lambda s: s[2], default=(0, "", math.nan))
    return WeakTypeEstimate(name, scales, top[2], {"scale": top[0], "test": top[1]}, verdict,
                            per_family, seed)


# ---------------------------------------------------------------------------
# interval tests built from the Hilbert transform of u chi_I


def _u_on_set(u, E) -> PiecewiseFn:
    ivs = list(E) if isinstance(E, (MeasurableSet, list, tuple)) and not isinstance(E, Interval) else [E]
    ivs = [iv if isinstance(iv, Interval) else Interval(*iv) for iv in ivs]
    ivs.sort(key=lambda iv: iv.a)
    g = _u_times_indicator(u, ivs[0].a, ivs[0].b)
    for iv in ivs[1:]:
        g = g + _u_times_indicator(u, iv.a, iv.b)
    return g


def _abs_integral_over(g: PiecewiseFn, F) -> float:
    ivs = list(F) if isinstance(F, MeasurableSet) else [F if isinstance(F, Interval) else Interval(*F)]
    total = 0.0
    for iv in ivs:
        cuts = np.unique(np.concatenate([[iv.a, iv.b], g.breakpoints[(g.breakpoints > iv.a) & (g.breakpoints < iv.b)]]))
        total += sum(ops.hilbert_abs_integral(g, a, b) for a, b in zip(cuts[:-1], cuts[1:]))
    return total


def _scan_intervals(u, K: int):
    c = _center(u)
    for k in range(-K, K + 1):
        h = 2.0 ** k
        for tag, a, b in (("right", c, c + h), ("sym", c - h, c + h), ("off", c + h, c + 2 * h),
                          ("unit", c + 1.0, c + 1.0 + h), ("skew", c - h, c + 3 * h)):
            yield k, tag, Interval(a, b)


def cp_interval_test(u, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup_I u(I)^-1 int_I |H(u chi_I)|`` scale by scale, integrals exact between sign changes."""
    by_scale: dict[int, list] = {}
    for k, tag, I in _scan_intervals(u, K):
        g = _u_on_set(u, I)
        mass = float(u.integral(I.a, I.b))
        if not mass > 0:
            continue
        by_scale.setdefault(k, []).append((_abs_integral_over(g, I) / mass, tag, I))
    ks = sorted(by_scale)
    best = [max(by_scale[k], key=lambda r: r[0]) for k in ks]
    allv = [r[0] for k in ks for r in by_scale[k]]
    return verdict_from_scales("cp", ks, [b[0] for b in best],
                               witnesses=[{"interval": [b[2].a, b[2].b], "kind": b[1]} for b in best],
                               growth_factor=growth_factor,
                               details={"min": min(allv), "max": max(allv), "count": len(allv)})


def dual_test_lemma35(u, w, p: float, E, F) -> tuple[float, float]:
    """``(int_F |H(u chi_E)| / W^{1/p}(u(F)), u(E) / W^{1/p}(u(E)))``."""
    if p <= 1:
        raise ValueError("the dual test needs p > 1")
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    E = E if isinstance(E, MeasurableSet) else MeasurableSet([E])
    F = F if isinstance(F, MeasurableSet) else MeasurableSet([F])
    uE, uF = measure_u(u, E), measure_u(u, F)
    left = _abs_integral_over(_u_on_set(u, E), F) / float(W(uF)) ** (1.0 / p)
    right = uE / float(W(uE)) ** (1.0 / p)
    return left, right


def dual_scan(u, w, p: float, K: int = DEFAULT_K, shifts=(-17, -2, 1, 16),
              growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """Quotient left/right of the dual test for ``E = I`` and ``F`` in ``{I, I_j}`` per scale."""
    ks, est, wit = [], [], []
    for k, tag, I in _scan_intervals(u, K):
        if tag != "right":
            continue
        fam = IntervalFamily((I,))
        best = (-math.inf, None)
        for j in (0,) + tuple(shifts):
            J = fam.shifted(0, j)
            left, right = dual_test_lemma35(u, w, p, I, J)
            if right > 0 and left / right > best[0]:
                best = (left / right, j)
        ks.append(k)
        est.append(best[0])
        wit.append({"interval": [I.a, I.b], "shift": best[1]})
    return verdict_from_scales("dual", ks, est, witnesses=wit, growth_factor=growth_factor)


def log_family_test(u, w, p: float, scales=None, nus=None,
                    growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """Least ``C_b`` with ``W(u(-b nu, b nu)) / W(u(-b, b)) <= C_b (1 + log 1/nu)^-p`` over ``nu``."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    scales = list(range(0, 3 * DEFAULT_K + 1)) if scales is None else list(scales)
    nus = 2.0 ** -np.arange(0, 2 * max(max(scales), 1) + 1) if nus is None else np.asarray(nus, dtype=float)
    c = _center(u)
    est, wit = [], []
    for k in scales:
        b = 2.0 ** k
        whole = float(W(u.integral(c - b, c + b)))
        ratio = np.asarray(W(u.integral(c - b * nus, c + b * nus)), dtype=float) / whole
        C = ratio * (1.0 + np.log(1.0 / nus)) ** p
        i = int(np.argmax(C))
        est.append(float(C[i]))
        wit.append({"b": b, "nu": float(nus[i]), "ratio": float(ratio[i])})
    return verdict_from_scales("log-family", scales, est, witnesses=wit, growth_factor=growth_factor)


# ---------------------------------------------------------------------------
# the shift construction for well-separated families

SHIFT_ORDER = [-1, -17] + [j for j in sorted(range(-50, 51), key=lambda j: (abs(j), j)) if j not in (0, -1, -17)]


def _interior_nodes(I: Interval, n: int = 64, grade: int = 12) -> np.ndarray:
    t = np.concatenate([(np.arange(n) + 0.5) / n, 2.0 ** -np.arange(7, grade + 7), 1.0 - 2.0 ** -np.arange(7, grade + 7)])
    return I.a + I.length * np.unique(t)


def lemma37_construction(f: PiecewiseFn, family: IntervalFamily, lam: float, n_nodes: int = 64,
                         threshold: float | None = None) -> list[int]:
    """Shift indices ``j_i`` with ``|H(f chi_U)| >= lam/(8 pi)`` on all nodes of ``I_{i, j_i}``.

    H carries the factor ``1/pi``; the unnormalized kernel ``1/(x - y)`` gives ``lam/8``.
    """
    if not family.well_separated:
        raise ValueError("family is not well separated")
    for i, I in enumerate(family.intervals):
        avg = float(f.integral(I.a, I.b)) / I.length
        if not (lam * (1 - 1e-12) <= avg <= 2 * lam * (1 + 1e-12)):
            raise ValueError(f"average {avg:g} of f on interval {i} outside [lam, 2 lam]")
    g = None
    for I in family.intervals:
        piece = f.restrict(I)
        g = piece if g is None else g + piece
    thr = lam / (8.0 * math.pi) if threshold is None else threshold
    found = []
    for i in range(len(family)):
        for j in SHIFT_ORDER:
            x = _interior_nodes(family.shifted(i, j), n_nodes)
            if np.all(np.abs(ops.hilbert(g, x, guard=None)) >= thr):
                found.append(j)
                break
        else:
            raise ConstructionFailure(i)
    return found


def random_compliant(rng: np.random.Generator, family: IntervalFamily, lam: float, cells: int = 4) -> PiecewiseFn:
    """Positive step function whose average on each interval is uniform in ``[lam, 2 lam]``."""
    parts = {}
    for I in family.intervals:
        bp, vals = _random_step(rng, cells)
        vals = np.abs(vals)
        target = lam * float(rng.uniform(1.0, 2.0))
        vals = vals * target / float(np.sum(vals * np.diff(bp)))
        for a, b, v in zip(bp[:-1], bp[1:], vals):
            parts[(I.a + I.length * a, I.a + I.length * b)] = float(v)
    return step(parts)


def lemma37_falsifier(n_families: int = 1000, seed: int = 0, max_m: int = 6) -> dict:
    """Run the construction on seeded random compliant families; count failures and shift usage."""
    rng = np.random.default_rng(seed)
    failures, usage = [], {}
    for t in range(n_families):
        fam = separated_family(rng, int(rng.integers(1, max_m + 1)), length=2.0 ** float(rng.uniform(-6, 6)),
                               origin=float(rng.uniform(-100, 100)), spread=4.0)
        lam = 2.0 ** float(rng.uniform(-4, 4))
        f = random_compliant(rng, fam, lam)
        try:
            for j in lemma37_construction(f, fam, lam):
                usage[j] = usage.get(j, 0) + 1
        except ConstructionFailure as exc:
            failures.append({"trial": t, "interval": exc.index})
    return {"trials": n_families, "failures": failures, "shift_usage": dict(sorted(usage.items())), "seed": seed}


# ---------------------------------------------------------------------------
# H bounded implies M bounded, step by step


def _components(mask: np.ndarray, edges: np.ndarray) -> list[Interval]:
    out = []
    n = mask.size
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append(Interval(float(edges[i]), float(edges[j + 1])))
            i = j + 1
        else:
            i += 1
    return out


def _best_interval(f: PiecewiseFn, x: float) -> tuple[float, float, float]:
    """Interval with endpoints in the breakpoints (or ``x``) maximizing the average of ``|f|`` around ``x``."""
    g = f.abs()
    pts = g.breakpoints
    left = np.concatenate([pts[pts < x], [x]])
    right = np.concatenate([[x], pts[pts > x]])
    Fl, Fr = g.primitive(left), g.primitive(right)
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (Fr[None, :] - Fl[:, None]) / (right[None, :] - left[:, None])
    A = np.where(right[None, :] > left[:, None], A, -np.inf)
    i, j = np.unravel_index(int(np.argmax(A)), A.shape)
    return float(left[i]), float(right[j]), float(A[i, j])


def _stopping_interval(f: PiecewiseFn, x: float, lam: float) -> Interval | None:
    """``I`` containing ``x`` with ``lam < avg_I |f| <= 2 lam``, by dilating a maximizing interval about ``x``."""
    a, b, avg = _best_interval(f, x)
    if avg <= lam:
        return None
    g = f.abs()

    def mean(s):
        lo, hi = x - s * (x - a), x + s * (b - x)
        return float(g.integral(lo, hi)) / (hi - lo)

    if avg <= 2 * lam:
        return Interval(a, b)
    s_lo, s_hi = 1.0, 2.0
    while mean(s_hi) > 2 * lam:
        s_lo, s_hi = s_hi, 2 * s_hi
    target = 1.5 * lam
    for _ in range(200):
        s = 0.5 * (s_lo + s_hi)
        if mean(s) > target:
            s_lo = s
        else:
            s_hi = s
        if lam < mean(s_hi) <= 2 * lam:
            break
    s = s_hi if lam < mean(s_hi) <= 2 * lam else s_lo
    return Interval(x - s * (x - a), x + s * (b - x))


def vitali_select(intervals: list[Interval]) -> list[Interval]:
    """Greedy largest-first choice with pairwise disjoint 101-dilations."""
    chosen: list[Interval] = []
    for I in sorted(intervals, key=lambda I: (-I.length, I.a)):
        S = I.dilate(101.0)
        if all(not S.overlaps(J.dilate(101.0)) for J in chosen):
            chosen.append(I)
    return sorted(chosen, key=lambda I: I.a)


def _mass(u, ivs) -> float:
    return float(sum(float(u.integral(I.a, I.b)) for I in MeasurableSet(ivs))) if ivs else 0.0


def doubling_constant(u, K: int = DEFAULT_K) -> float:
    """``max u(2I)/u(I)`` over the scanned intervals."""
    best = 1.0
    for _, _, I in _scan_intervals(u, K):
        m = float(u.integral(I.a, I.b))
        if m > 0:
            D = I.dilate(2.0)
            best = max(best, float(u.integral(D.a, D.b)) / m)
    return best


def lemma36_ratio(u, w, p: float, family: IntervalFamily, shifts) -> float:
    """``W^{1/p}(u(U I_{i,j_i})) / W^{1/p}(u(U I_i))``."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    moved = [family.shifted(i, j) for i, j in enumerate(shifts)]
    return (float(W(_mass(u, moved))) / float(W(_mass(u, family.intervals)))) ** (1.0 / p)


def lemma36_bound(u, w, p: float, K: int = DEFAULT_K) -> float:
    """Two-sided constant from doubling: ``I_{i,j}`` and ``I_i`` sit inside each other's 101-dilation."""
    D = doubling_constant(u, K)
    Du = D ** 7  # 2^7 >= 101
    dW = wts.delta2_constant(w, K).constant
    return dW ** (math.ceil(math.log2(max(Du, 1.0)) + 1e-12) / p)


def h_implies_m_reduction(f: PiecewiseFn, u, w, p: float, lam: float, K: int = DEFAULT_K,
                          L: float = DEFAULT_L) -> dict:
    """Run the covering argument: level set, stopping intervals, selection, shifts and the chain of constants."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    D = doubling_constant(u, K)
    grid = ops.EvalGrid.for_function(f, window=_window(f, L))
    x = grid.nodes
    Mf = ops.maximal(f, x)
    mask = Mf > lam
    report = {"lambda": lam, "doubling": D, "verdict": PASS, "links": {}}
    if not np.any(mask):
        report.update({"K": [], "selected": [], "note": "level set empty"})
        return jsonable(report)
    Kset = _components(mask, grid.edges)
    stops = [_stopping_interval(f, float(xi), lam) for xi in x[mask]]
    stops = [I for I in stops if I is not None]
    chosen = vitali_select(stops)
    fam = IntervalFamily(tuple(chosen))
    js = lemma37_construction(f, fam, lam)
    cover = [I.dilate(303.0) for I in chosen]
    uncovered = [[I.a, I.b] for I in Kset
                 if not any(C.a <= I.a and I.b <= C.b for C in cover)
                 and not MeasurableSet(cover).contains(0.5 * (I.a + I.b))]
    nodes_covered = all(any(C.a <= xi <= C.b for C in cover) for xi in x[mask])
    uK, uU = _mass(u, Kset), _mass(u, chosen)
    u3 = _mass(u, cover)
    moved = [fam.shifted(i, j) for i, j in enumerate(js)]
    uE = _mass(u, moved)
    g = None
    for I in chosen:
        g = f.restrict(I) if g is None else g + f.restrict(I)
    norm_f = lambda_norm(f, u, W, p)
    norm_g = lambda_norm(g, u, W, p)
    Wp = lambda m: float(W(m)) ** (1.0 / p)
    hg = sampled_image("H", g, window=_window(g, L), grade=12)
    weak_hg = lambda_weak_norm(hg, u, W, p)
    thr = lam / (8.0 * math.pi)
    dW = wts.delta2_constant(W, K).constant
    doubling_bound = lambda factor: dW ** (math.ceil(math.log2(max(D ** math.ceil(math.log2(factor)), 1.0)) - 1e-12) / p)
    values = {
        "K_vs_cover": Wp(uK) / Wp(u3),
        "cover_vs_union": Wp(u3) / Wp(uU),
        "union_vs_shifted": Wp(uU) / Wp(uE),
        "level_vs_weak_Hg": thr * Wp(uE) / weak_hg if weak_hg > 0 else math.inf,
        "weak_Hg_over_g": weak_hg / norm_g,
        "g_vs_f": norm_g / norm_f,
    }
    bounds = {
        "K_vs_cover": 1.0,  # inclusion
        "cover_vs_union": doubling_bound(303.0),
        "union_vs_shifted": lemma36_bound(u, W, p, K),
        "level_vs_weak_Hg": 1.0,  # |Hg| >= thr on the shifted union
        "weak_Hg_over_g": values["weak_Hg_over_g"],  # the operator bound being assumed
        "g_vs_f": 1.0,  # g <= |f|
    }
    links = {k: {"value": values[k], "bound": bounds[k], "ok": bool(values[k] <= bounds[k] * (1 + 1e-9))}
             for k in values}
    measured = lam * Wp(uK) / norm_f
    predicted = 8.0 * math.pi * float(np.prod(list(bounds.values())))
    ok = (all(v["ok"] for v in links.values()) and nodes_covered and measured <= predicted * (1.0 + 1e-9))
    report.update({
        "K": [[I.a, I.b] for I in Kset], "selected": [[I.a, I.b] for I in chosen], "shifts": js,
        "well_separated": fam.well_separated, "nodes_covered": nodes_covered, "uncovered_cells": uncovered,
        "links": links, "measured_constant": measured, "chain_constant": predicted,
        "norm_f": norm_f, "verdict": PASS if ok else FAIL,
    })
    return jsonable(report)


# ---------------------------------------------------------------------------
# H* against Q(Mf)


def hima_constant(f: PiecewiseFn, u, n_sub: int = 8, grade: int = 6, outer_ratio: float = 2.0 ** 0.5,
                  window: float | None = None) -> dict:
    """Least ``C`` with ``(H*f)*_u(t) <= C Q((Mf)*_u)(t/4)`` over the block endpoints of ``(H*f)*_u``."""
    grid = ops.EvalGrid.around(f.breakpoints, n_sub=n_sub, grade=grade, window=window, outer_ratio=outer_ratio)
    x = grid.nodes
    hs = rearrange_u(PiecewiseFn(grid.edges, ops.hilbert_max(f, x)), u)
    ms = rearrange_u(PiecewiseFn(grid.edges, ops.maximal(f, x)), u)
    if not hs.levels:
        return {"C": 0.0, "t": None, "skipped": 0}
    t = hs.ends
    left = np.asarray(hs.levels)  # value on the block ending at t (left limit)
    right = np.asarray(ops.hardy_q(ms, t / 4.0), dtype=float)
    bad = ~np.isfinite(right) | (right <= 0)
    ratio = np.where(bad, 0.0, left / np.where(bad, 1.0, right))
    k = int(np.argmax(ratio))
    return {"C": float(ratio[k]), "t": float(t[k]), "skipped": int(np.sum(bad))}


def hima_majorization(f: PiecewiseFn, u, w=None, p: float | None = None, tolerance: float = 0.2,
                      check_ainfty: bool = False, K: int = DEFAULT_K) -> dict:
    """Fitted constant on a base grid and on one refinement doubling; PASS when they agree within ``tolerance``."""
    notes = []
    if check_ainfty:
        av = wts.ainfty_estimate(u, K)
        if av.verdict != PASS:
            notes.append(f"A_inf estimate is {av.verdict}; majorization not expected")
    if f.tail == "zero" and not np.any(f.values):
        return {"C": 0.0, "C_refined": 0.0, "variation": 0.0, "verdict": PASS, "notes": notes}
    lo, hi = f.window
    R = max(abs(lo), abs(hi)) + 16.0 * (hi - lo)
    base = hima_constant(f, u, 8, 6, 2.0 ** 0.5, R)
    fine = hima_constant(f, u, 16, 7, 2.0 ** 0.25, R)
    C0, C1 = base["C"], fine["C"]
    var = abs(C1 - C0) / max(C0, C1) if max(C0, C1) > 0 else 0.0
    if base["skipped"] or fine["skipped"]:
        notes.append("right side infinite or zero at some t; those t skipped")
    ok = math.isfinite(C0) and math.isfinite(C1) and var < tolerance
    return jsonable({"C": C0, "C_refined": C1, "variation": var, "t": base["t"], "t_refined": fine["t"],
                     "verdict": PASS if ok else FAIL, "notes": notes})


def product_inequality(f: PiecewiseFn, u, tol: float = 1e-9) -> dict:
    """``(f Hf)*_u(t) <= f*_u(t/2) (Hf)*_u(t/2)`` at all block endpoints of ``(f Hf)*_u``."""
    grid = ops.EvalGrid.for_function(f)
    x = grid.nodes
    fv = np.asarray(f(x), dtype=float)
    hv = ops.hilbert(f, x, guard=None)
    prod = rearrange_u(PiecewiseFn(grid.edges, fv * hv), u)
    fs = rearrange_u(PiecewiseFn(grid.edges, fv), u)
    hs = rearrange_u(PiecewiseFn(grid.edges, hv), u)
    if not prod.levels:
        return {"max_excess": 0.0, "ok": True, "points": 0}
    t = np.concatenate([[0.0], prod.ends[:-1]])  # left ends: value of each block
    lhs = prod(t)
    rhs = fs(t / 2) * hs(t / 2)
    scale = np.maximum(np.abs(rhs), 1.0)
    excess = float(np.max((lhs - rhs) / scale))
    return {"max_excess": excess, "ok": bool(excess <= tol), "points": int(t.size)}


# ---------------------------------------------------------------------------
# consistency harnesses


def _name(v) -> str:
    return v if isinstance(v, str) else v.verdict


def consistency_flags(verdicts: dict) -> tuple[list[dict], list[dict]]:
    """Red flags and notices for ``{"i", "ii", "iii", "H", "H*"}`` verdict strings or records.

    A red flag is a PASS of H or H* next to a condition that did not pass,
    or a proven failure of H or H* next to three passing conditions. An
    undecided H beside passing conditions is only a notice.
    """
    v = {k: _name(x) for k, x in verdicts.items()}
    conds = [k for k in ("i", "ii", "iii") if k in v]
    all_pass = all(v[k] == PASS for k in conds)
    flags, notices = [], []
    for op in ("H", "H*"):
        if op not in v:
            continue
        if v[op] == PASS and not all_pass:
            flags.append({"operator": op, "rule": "operator PASS requires (i), (ii), (iii) PASS",
                          "conditions": {k: v[k] for k in conds}})
        if all_pass and v[op] in FAILING:
            flags.append({"operator": op, "rule": "(i), (ii), (iii) PASS require operator PASS",
                          "conditions": {k: v[k] for k in conds}})
        if all_pass and v[op] == INCONCLUSIVE:
            notices.append({"operator": op, "note": "growth witness below the growth factor"})
    return flags, notices


def theorem11_harness(u, w, p: float, K: int = DEFAULT_K, seed: int = 0, L: float = DEFAULT_L,
                      growth_factor: float = DEFAULT_GROWTH_FACTOR, hstar: bool = True) -> dict:
    """Four verdicts and their logical consistency."""
    rec = {
        "i": wts.ainfty_estimate(u, K, growth_factor=growth_factor),
        "ii": wts.bstar_infty_constant(w, K, growth_factor),
        "iii": probe_operator("M", u, w, p, seed=seed, K=K, L=L, growth_factor=growth_factor),
        "H": probe_operator("H", u, w, p, seed=seed, K=K, L=L, growth_factor=growth_factor),
    }
    if hstar:
        rec["H*"] = probe_operator("H*", u, w, p, seed=seed, K=K, L=L, growth_factor=growth_factor)
    flags, notices = consistency_flags(rec)
    extra = {}
    if rec["ii"].verdict != PASS:
        lf = log_family_test(u, w, p, growth_factor=growth_factor)
        extra["log_family"] = lf.to_dict()
    h_witness = rec["H"].growth_witness
    out = {"verdicts": {k: _name(x) for k, x in rec.items()},
           "records": {k: x.to_dict() for k, x in rec.items()},
           "red_flags": flags, "notices": notices, "consistent": not flags,
           "H_growth_witness": h_witness, "seed": seed, **extra}
    return jsonable(out)


def _set_pair_scan(u, F, p: float, K: int = DEFAULT_K, depth: int = DEFAULT_K,
                   growth_factor: float = DEFAULT_GROWTH_FACTOR, name: str = "set-pair") -> ClassVerdict:
    """``sup F(u(I))/F(u(S)) (|S|/|I|)^p`` with ``S`` the sublevel set of relative size ``2^-j``; scale ``j``."""
    from .fncore import extremal_mass

    ivs = [I for _, _, I in _scan_intervals(u, K)]
    eta = 2.0 ** -np.arange(0, depth + 1)
    best = np.full(eta.size, -np.inf)
    arg = [None] * eta.size
    for I in ivs:
        uI = float(u.integral(I.a, I.b))
        if not uI > 0:
            continue
        m = np.asarray(extremal_mass(u, I, eta * I.length, False), dtype=float)
        with np.errstate(divide="ignore"):
            q = np.where(m > 0, float(F(uI)) / np.asarray(F(np.maximum(m, 1e-300)), dtype=float), np.inf) * eta ** p
        for j in np.nonzero(q > best)[0]:
            best[j] = q[j]
            arg[j] = {"interval": [I.a, I.b], "eta": float(eta[j])}
    return verdict_from_scales(name, list(range(eta.size)), best.tolist(), arg, growth_factor, two_sided=False)


def necessary_battery(u, w, p: float, K: int = DEFAULT_K, seed: int = 0,
                      growth_factor: float = DEFAULT_GROWTH_FACTOR, h_verdict: str | None = None,
                      L: float = DEFAULT_L) -> dict:
    """Necessary conditions: integrability tails (informational), set-pair ratio, quasi-concavity, ``B_{p,inf}``."""
    W = w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)
    info = {"u_total": u.integral(-math.inf, math.inf) if isinstance(u, AnalyticWeight) else
            float(u.integral(*u.window)) if u.tail == "zero" else math.inf,
            "w_total": W.total}
    info["u_not_integrable"] = not math.isfinite(info["u_total"])
    info["w_not_integrable"] = not math.isfinite(info["w_total"])
    items = {
        "b": _set_pair_scan(u, W, p, K, growth_factor=growth_factor, name="set-pair W"),
        "c": wts.p_quasiconcave(w, p, K, growth_factor),
        "d": wts.bp_infty_verdict(w, p, K, probe=False, growth_factor=growth_factor),
    }
    if h_verdict is None:
        h_verdict = probe_operator("H", u, w, p, seed=seed, K=K, L=L, growth_factor=growth_factor).verdict
    flags = []
    if h_verdict == PASS:
        flags = [k for k, v in items.items() if v.verdict != PASS]
    return jsonable({"a": info, "items": {k: v.to_dict() for k, v in items.items()},
                     "verdicts": {k: v.verdict for k, v in items.items()}, "H": h_verdict,
                     "red_flags": [{"item": k, "rule": "H PASS requires the necessary condition"} for k in flags],
                     "consistent": not flags})


def lpq_specialization(u, p: float, q: float, K: int = DEFAULT_K, seed: int = 0, L: float = DEFAULT_L,
                       growth_factor: float = DEFAULT_GROWTH_FACTOR) -> dict:
    """``L^{p,q}(u) -> L^{p,inf}(u)`` as ``Lambda^q_u(t^{q/p-1})`` and the case-by-case criterion."""
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    w = AnalyticWeight("power", q / p - 1.0)
    h = probe_operator("H", u, w, q, seed=seed, K=K, L=L, growth_factor=growth_factor)
    if p < 1:
        case, cond = "p<1", None
        predicted = FAIL
    elif p == 1:
        if q > 1:
            case, cond, predicted = "c", None, FAIL
        else:
            case = "c"
            cond = wts.a1_constant(u, K, growth_factor)
            predicted = cond.verdict
    elif q > 1:
        case = "a"
        cond = wts.ap_constant(u, p, K, growth_factor=growth_factor)
        predicted = cond.verdict
        if predicted == FAIL and cond.details.get("sampled_verdict"):
            predicted = cond.details["sampled_verdict"]
    else:
        case = "b"
        cond = _set_pair_scan(u, lambda m: np.asarray(m, dtype=float), p, K, growth_factor=growth_factor)
        predicted = cond.verdict
    agree = (predicted == PASS) == (h.verdict == PASS)
    flags = []
    if not agree:
        flags.append({"rule": f"case {case} condition and H probe disagree", "condition": predicted, "H": h.verdict})
    if p < 1 and h.verdict not in FAILING:
        flags.append({"rule": "p < 1 requires H to fail", "H": h.verdict})
    return jsonable({"p": p, "q": q, "w_exponent": q / p - 1.0, "case": case,
                     "condition": cond.to_dict() if cond is not None else None, "condition_verdict": predicted,
                     "H": h.to_dict(), "H_verdict": h.verdict, "agree": agree, "red_flags": flags,
                     "consistent": not flags, "seed": seed})
