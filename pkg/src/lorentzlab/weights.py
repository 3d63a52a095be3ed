"""Weight-class certifiers on the line (u) and on the half line (w).

Each certifier scans a finite, dilation-structured candidate set, records the
best quotient per dyadic scale and hands the per-scale list to the growth
rule in :mod:`lorentzlab.verdict`. Candidate sets nest when ``density``
doubles, so estimates only grow under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _quad
from scipy import special

from .fncore import (AnalyticWeight, CumulativeWeight, Interval, PiecewiseFn, extremal_mass,
                     geometric_mesh, sample_weight)
from .verdict import (FAIL, FAILING, INCONCLUSIVE, PASS, ClassVerdict, DEFAULT_GROWTH_FACTOR,
                      jsonable, verdict_from_scales)

DEFAULT_K = 12
EPSILONS = (0.5, 0.25, 0.125)


# ---------------------------------------------------------------------------
# scan grids


def _W(w) -> CumulativeWeight:
    return w if isinstance(w, CumulativeWeight) else CumulativeWeight(w)


def _raw(w):
    return w.w if isinstance(w, CumulativeWeight) else w


def _unbounded_tail(w) -> bool:
    """True when ``W`` is defined by a genuine tail beyond the sampled window."""
    w = _raw(w)
    return isinstance(w, AnalyticWeight) or w.tail != "zero"


def dyadic_exponents(w, K: int, lo: int | None = None, hi: int | None = None, room: float = 1.0):
    """Integers k with ``2**k * room`` inside the region where ``W`` is trustworthy.

    The default range is ``[-2K, 3K]``, cut at the window for zero tails;
    the wide range lets convergent transients settle below the step tolerance.
    """
    lo = -2 * K if lo is None else lo
    hi = 3 * K if hi is None else hi
    ks = np.arange(lo, hi + 1)
    w = _raw(w)
    if not _unbounded_tail(w):
        top = w.breakpoints[-1]
        ks = ks[2.0 ** ks * room <= top]
    return ks


def candidate_points(u, K: int = DEFAULT_K, density: int = 1, max_breakpoints: int = 64) -> np.ndarray:
    """Endpoints: geometric grid around each center, centers, breakpoints, window ends."""
    j = np.arange(-K * density, K * density + 1)
    radii = 2.0 ** (j / density)
    pts = []
    for c in u.centers:
        pts.extend([c - radii, c + radii, [c]])
    if isinstance(u, PiecewiseFn):
        bp = u.breakpoints
        if bp.size > max_breakpoints:
            bp = bp[np.linspace(0, bp.size - 1, max_breakpoints).round().astype(int)]
        pts.append(bp)
        pts.append(np.array(u.window))
    P = np.unique(np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in pts]))
    if isinstance(u, PiecewiseFn) and u.tail != "constant":
        lo, hi = u.window
        P = P[(P >= lo) & (P <= hi)]
    return P


def candidate_intervals(u, K: int = DEFAULT_K, density: int = 1):
    """All pairs ``a < b`` from :func:`candidate_points`, with scale ``floor(log2(b-a))``."""
    P = candidate_points(u, K, density)
    ia, ib = np.triu_indices(P.size, k=1)
    a, b = P[ia], P[ib]
    scale = np.floor(np.log2(b - a) + 1e-12).astype(int)
    keep = (scale >= -K) & (scale <= K)
    return a[keep], b[keep], scale[keep]


def _per_scale_max(scale, values, witnesses):
    """Group ``values`` by integer ``scale``; return scales, maxima and argmax witnesses."""
    out_s, out_v, out_w = [], [], []
    for s in np.unique(scale):
        idx = np.nonzero(scale == s)[0]
        vals = values[idx]
        if np.all(np.isnan(vals)):
            continue
        k = idx[np.nanargmax(np.where(np.isnan(vals), -np.inf, vals))]
        out_s.append(int(s))
        out_v.append(float(values[k]))
        out_w.append(witnesses(k))
    return out_s, out_v, out_w


# ---------------------------------------------------------------------------
# half-line conditions on w


def delta2_constant(w, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR,
                    density: int = 1) -> ClassVerdict:
    """Doubling of ``W``: ``sup_r W(2r)/W(r)`` over dyadic ``r``."""
    W = _W(w)
    ks = dyadic_exponents(w, K, room=2.0)
    j = np.arange(ks[0] * density, ks[-1] * density + 1) if ks.size else np.array([], dtype=int)
    r = 2.0 ** (j / density)
    ratio = W(2 * r) / W(r)
    scale = np.floor(j / density + 1e-12).astype(int)
    s, v, wit = _per_scale_max(scale, ratio, lambda i: {"r": float(r[i])})
    return verdict_from_scales("Delta2", s, v, wit, growth_factor)


def p_quasiconcave(w, p: float, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup_{r<t} (W(t)/t^p) / (W(r)/r^p)``; scale ``k`` collects pairs with ``t = 2^k r``."""
    W = _W(w)
    i = np.arange(-K, K + 1)
    r = 2.0 ** i
    est, scales, wit = [], [], []
    for k in range(0, 2 * K + 1):
        t = r * 2.0 ** k
        ok = np.ones_like(r, dtype=bool) if _unbounded_tail(w) else t <= _raw(w).breakpoints[-1]
        if not np.any(ok):
            break
        q = (W(t[ok]) / t[ok] ** p) / (W(r[ok]) / r[ok] ** p)
        m = int(np.argmax(q))
        scales.append(k)
        est.append(float(q[m]))
        wit.append({"r": float(r[ok][m]), "t": float(t[ok][m])})
    return verdict_from_scales(f"{p:g}-quasi-concave", scales, est, wit, growth_factor, two_sided=False)


def tail_integral(w, r, p: float):
    """``int_r^inf w(t) t^(-p) dt`` (vectorized in ``r``); zero tails extend by the last value."""
    w = _raw(w)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if isinstance(w, AnalyticWeight):
        if w.kind == "power":
            e = w.exponent - p
            if e >= -1.0:
                return np.full_like(r, np.inf)
            return r ** (e + 1.0) / -(e + 1.0)
        c = w.exponent
        if c + p <= 1.0:
            return np.full_like(r, np.inf)
        # x = 1/t: int_0^{1/r} x^(alpha-1) (1+x)^(-c) dx with alpha = p + c - 1
        alpha = p + c - 1.0
        z = 1.0 / r
        return z ** alpha / alpha * special.hyp2f1(c, alpha, alpha + 1.0, -z)
    bp = w.breakpoints
    hi = bp[-1]
    vals = w.values

    def piece(a, b, v):
        if p == 1.0:
            return v * np.log(b / a)
        return v * (a ** (1 - p) - b ** (1 - p)) / (p - 1)

    out = np.zeros_like(r)
    for n, x in enumerate(r):
        total = 0.0
        if x < hi:
            lefts = np.maximum(bp[:-1], x)
            rights = bp[1:]
            ok = rights > lefts
            total = float(np.sum(piece(lefts[ok], rights[ok], vals[ok])))
        x0 = max(x, hi)
        if w.tail == "power":
            e = w.tail_exponent - p
            if w.tail_center != 0.0:
                g = lambda t: w.tail_coefficient * abs(t - w.tail_center) ** w.tail_exponent * t ** (-p)
                total += _quad.quad(g, x0, np.inf, limit=200)[0]
            elif e >= -1.0:
                total = math.inf
            else:
                total += w.tail_coefficient * x0 ** (e + 1.0) / -(e + 1.0)
        else:
            if p <= 1.0:
                total = math.inf
            else:
                total += vals[-1] * x0 ** (1 - p) / (p - 1)
        out[n] = total
    return out


def bp_constant(w, p: float, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup_r r^p int_r^inf w/t^p / W(r)`` over dyadic ``r``."""
    W = _W(w)
    ks = dyadic_exponents(w, K)
    r = 2.0 ** ks
    tail = tail_integral(w, r, p)
    ratio = r ** p * tail / W(r)
    details = {}
    raw = _raw(w)
    if isinstance(raw, PiecewiseFn) and raw.tail == "zero":
        details["tail"] = "constant extension of the last cell"
    wit = [{"r": float(x)} for x in r]
    if np.any(np.isinf(tail)):
        details["divergent_tail"] = True
        wit = [{"r": float(x), "tail": "divergent"} for x in r]
    return verdict_from_scales(f"B_{p:g}", ks.tolist(), ratio.tolist(), wit, growth_factor, details=details)


def _decreasing_shapes(seed: int, n_shapes: int = 8):
    """Seeded decreasing step shapes supported in ``(0, 1]``; the first is ``chi_(0,1)``."""
    from .rearrange import DecreasingStep

    rng = np.random.default_rng(seed)
    shapes = [DecreasingStep.from_arrays([1.0], [1.0])]
    for _ in range(n_shapes - 1):
        n = int(rng.integers(2, 7))
        levels = np.sort(rng.uniform(0.1, 1.0, n))[::-1]
        levels = np.unique(levels)[::-1]
        cuts = np.sort(rng.uniform(0.0, 1.0, levels.size - 1))
        ends = np.concatenate([cuts, [1.0]])
        widths = np.diff(np.concatenate([[0.0], ends]))
        good = widths > 1e-6
        shapes.append(DecreasingStep.from_arrays(levels[good], widths[good]))
    return shapes


def hardy_probe(w, p: float, K: int = DEFAULT_K, seed: int = 0, n_shapes: int = 8,
                growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """Direct test of ``P: L^p_dec(w) -> L^{p,inf}(w)`` on dilated decreasing steps."""
    from .operators import hardy_p
    from .rearrange import DecreasingStep, lambda_norm

    W = _W(w)
    shapes = _decreasing_shapes(seed, n_shapes)
    ks = dyadic_exponents(w, K, room=2.0 ** K)
    if ks.size == 0:
        ks = dyadic_exponents(w, K)
    est, wit = [], []
    t_rel = 2.0 ** (np.arange(-48, 4 * K + 1) / 4.0)
    for k in ks:
        s = 2.0 ** k
        best, arg = -math.inf, None
        for n, g in enumerate(shapes):
            gs = DecreasingStep.from_arrays(g.levels, np.asarray(g.widths) * s)
            t = np.union1d(t_rel * s, gs.ends)
            if not _unbounded_tail(w):
                t = t[t <= _raw(w).breakpoints[-1]]
            weak = float(np.max(hardy_p(gs, t) * W(t) ** (1.0 / p)))
            ratio = weak / lambda_norm(gs, None, W, p)
            if ratio > best:
                best, arg = ratio, {"shape": n, "dilation": s}
        est.append(best)
        wit.append(arg)
    return verdict_from_scales(f"P-probe L^{p:g}_dec", ks.tolist(), est, wit, growth_factor)


def bp_infty_verdict(w, p: float, K: int = DEFAULT_K, probe: bool = True, seed: int = 0,
                     growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``B_{p,inf}``: quasi-concavity when ``p <= 1``, ``B_p`` otherwise, plus the Hardy probe."""
    base = p_quasiconcave(w, p, K, growth_factor) if p <= 1 else bp_constant(w, p, K, growth_factor)
    base.class_name = f"B_{p:g},inf"
    if probe:
        pr = hardy_probe(w, p, K, seed, growth_factor=growth_factor)
        base.details["probe"] = pr.to_dict()
    return base


def _bstar_numerator(w, r):
    """``int_0^r W(t)/t dt`` exactly where possible (vectorized)."""
    w = _raw(w)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if isinstance(w, AnalyticWeight):
        if w.kind == "power":
            b = w.exponent
            return r ** (b + 1.0) / (b + 1.0) ** 2
        if w.exponent == 1.0:
            return -special.spence(1.0 + r)
        W = CumulativeWeight(w)
        f = lambda t: float(W(t)) / t if t > 0 else 1.0
        out, acc, prev = [], 0.0, 0.0
        for x in np.sort(r):
            acc += _quad.quad(f, prev, x, limit=200)[0]
            prev = x
            out.append(acc)
        order = np.argsort(r)
        res = np.empty_like(r)
        res[order] = out
        return res
    W = CumulativeWeight(w)
    bp = w.breakpoints
    hi = bp[-1]
    out = np.zeros_like(r)
    for n, x in enumerate(r):
        top = min(x, hi)
        edges = np.concatenate([bp[bp < top], [top]])
        a, b = edges[:-1], edges[1:]
        v = w(0.5 * (a + b))
        A = W(a)
        safe = np.where(a > 0, a, 1.0)
        logs = np.where(a > 0, np.log(b / safe), 0.0)
        total = float(np.sum((A - v * a) * logs + v * (b - a)))
        if x > hi:
            total += _tail_bstar(w, hi, x)
        out[n] = total
    return out


def _tail_bstar(w: PiecewiseFn, hi: float, x: float) -> float:
    """``int_hi^x W(t)/t dt`` beyond the window."""
    W = CumulativeWeight(w)
    A = float(W(hi))
    L = math.log(x / hi)
    if w.tail == "zero":
        return A * L
    if w.tail == "constant":
        v = float(w.values[-1])
        return (A - v * hi) * L + v * (x - hi)
    e, c = w.tail_exponent, w.tail_coefficient
    if w.tail_center != 0.0:
        return _quad.quad(lambda t: float(W(t)) / t, hi, x, limit=200)[0]
    if e == -1.0:
        return A * L + c * L * L / 2.0
    return (A - c * hi ** (e + 1) / (e + 1)) * L + c * (x ** (e + 1) - hi ** (e + 1)) / (e + 1) ** 2


def bstar_infty_constant(w, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR,
                         extend: int | None = None) -> ClassVerdict:
    """``sup_r int_0^r (W(t)/t) dt / W(r)``."""
    W = _W(w)
    ks = dyadic_exponents(w, K, hi=extend)
    r = 2.0 ** ks
    num = _bstar_numerator(w, r)
    ratio = num / W(r)
    wit = [{"r": float(x)} for x in r]
    return verdict_from_scales("B*_inf", ks.tolist(), ratio.tolist(), wit, growth_factor)


# ---------------------------------------------------------------------------
# the dilation function and its battery


@dataclass
class Wbar:
    """``lambda -> sup_s W(lambda s)/W(s)`` over pairs of a geometric lattice."""

    lambdas: np.ndarray
    values: np.ndarray
    grid: dict

    def __call__(self, lam):
        return np.interp(np.log(lam), np.log(self.lambdas[::-1]), self.values[::-1])

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values[::-1]) >= -1e-12))

    def submultiplicative_defect(self) -> float:
        """Largest ``Wbar(l m) / (Wbar(l) Wbar(m)) - 1`` over lattice pairs."""
        v = self.values
        n = v.size
        worst = -math.inf
        for i in range(n):
            for j in range(n - i):
                worst = max(worst, v[i + j] / (v[i] * v[j]) - 1.0)
        return worst

    def to_dict(self) -> dict:
        return {"lambdas": self.lambdas.tolist(), "values": self.values.tolist(), "grid": self.grid}


def wbar_function(w, K: int = DEFAULT_K, per_octave: int = 4, span: tuple[int, int] | None = None,
                  depth: int | None = None) -> Wbar:
    """Sample ``Wbar`` on ``lambda = 2^(-j/per_octave)``, ``s`` on the same lattice.

    Both ``t = lambda s`` and ``s`` are lattice points, so the sample is exactly
    increasing and submultiplicative.
    """
    W = _W(w)
    lo, hi = span or (-2 * K, 3 * K)
    ks = dyadic_exponents(w, K, lo, hi)
    g = 2.0 ** (np.arange(ks[0] * per_octave, ks[-1] * per_octave + 1) / per_octave)
    Wg = W(g)
    jmax = min((depth or K) * per_octave, g.size - 1)
    vals = np.array([np.max(Wg[: g.size - j] / Wg[j:]) for j in range(jmax + 1)])
    lambdas = 2.0 ** (-np.arange(jmax + 1) / per_octave)
    return Wbar(lambdas, vals, {"s_min": float(g[0]), "s_max": float(g[-1]), "per_octave": per_octave})


@dataclass
class WbarReport:
    wbar: Wbar
    items: dict
    verdict: str
    consistent: bool
    lemma_constant: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable({"wbar": self.wbar, "items": {k: v.to_dict() for k, v in self.items.items()},
                         "verdict": self.verdict, "consistent": self.consistent,
                         "lemma_constant": self.lemma_constant, "diagnostics": self.diagnostics})


def _combine(verdicts) -> tuple[str, bool]:
    vs = [v.verdict for v in verdicts]
    if all(v == PASS for v in vs):
        return PASS, True
    if all(v in FAILING for v in vs):
        return (FAIL if any(v == FAIL for v in vs) else "FAIL-GROWTH"), True
    return INCONCLUSIVE, False


def wbar_battery(w, p: float = 1.0, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR,
                 lam_star: float = 0.5, lam_min: float = 2.0 ** -8) -> WbarReport:
    """Six equivalent descriptions of ``B*_inf`` evaluated per dyadic ``s``."""
    W = _W(w)
    # long s-span: the sampled Wbar of a slowly varying W approaches 1 only like 1 - log(1/lambda)/log(s_max)
    span = (-2 * K, 6 * K) if _unbounded_tail(w) else (-2 * K, K)
    ks = dyadic_exponents(w, K, *span)
    s = 2.0 ** ks
    sc = ks.tolist()
    wit = [{"s": float(x)} for x in s]

    items = {}
    items["i"] = bstar_infty_constant(w, K, growth_factor, extend=span[1])
    raw = _raw(w)
    with np.errstate(divide="ignore"):
        g = W(s) / raw.integral(lam_star * s, s)
    items["ii"] = verdict_from_scales("Wbar(lambda)<1", sc, g.tolist(), wit, growth_factor,
                                      details={"lambda": lam_star})
    # (iii)/(iv) are statements about Wbar(lambda) as lambda -> 0: index by octave of lambda
    wb = wbar_function(w, K, span=span, depth=K)
    octave = np.arange(0, wb.lambdas.size, wb.grid["per_octave"])
    jl = (octave // wb.grid["per_octave"]).tolist()
    lam_wit = [{"lambda": float(wb.lambdas[i])} for i in octave]
    phi = wb.values[octave]
    lt = 1.0 + np.log(1.0 / wb.lambdas[octave])
    items["iii"] = verdict_from_scales("log^-1 decay", jl, (phi * lt).tolist(), lam_wit, growth_factor,
                                       two_sided=False)
    items["iv"] = verdict_from_scales(f"log^-{p:g} decay", jl, (phi * lt ** p).tolist(), lam_wit,
                                      growth_factor, two_sided=False)
    with np.errstate(divide="ignore"):
        v = W(s) / raw.integral(lam_min * s, s)
    items["v"] = verdict_from_scales("Wbar(0+)=0", sc, v.tolist(), wit, growth_factor,
                                     details={"lambda_min": lam_min})
    table = {}
    worst = None
    for eps in EPSILONS:
        delta = W.inverse(eps * W(s)) / s
        cv = verdict_from_scales(f"delta({eps:g})", sc, (1.0 / delta).tolist(), wit, growth_factor)
        table[str(eps)] = {"delta": cv.scales and [float(d) for d in delta], "verdict": cv.verdict}
        if worst is None or _severity(cv.verdict) > _severity(worst.verdict):
            worst = cv
    worst.class_name = "epsilon-delta"
    worst.details["table"] = table
    items["vi"] = worst

    verdict, consistent = _combine(items.values())
    diag = {"wbar_monotone": wb.monotone(), "wbar_submultiplicative_defect": wb.submultiplicative_defect()}
    if np.all(wb.values > 1.0 - 1e-3):
        diag["near_one"] = True
        if verdict == PASS:
            verdict, consistent = INCONCLUSIVE, False
    if not consistent:
        diag["item_verdicts"] = {k: v.verdict for k, v in items.items()}
    lemma_c = math.nan
    if items["ii"].verdict == PASS:
        lemma_c = float(np.max(wb.values * (1.0 + np.log(1.0 / wb.lambdas))))
    return WbarReport(wb, items, verdict, consistent, lemma_c, diag)


def _severity(v: str) -> int:
    return {PASS: 0, INCONCLUSIVE: 1, "FAIL-GROWTH": 2, FAIL: 3}[v]


# ---------------------------------------------------------------------------
# line conditions on u


def _interval_masses(u, a, b, s: float = 1.0):
    if s == 1.0:
        return np.asarray(u.integral(a, b), dtype=float)
    return np.asarray(u.power(s).integral(a, b), dtype=float)


def ap_constant(u, p: float, K: int = DEFAULT_K, density: int = 1,
                growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup_I (avg_I u)(avg_I u^(-1/(p-1)))^(p-1)`` over candidate intervals."""
    if p <= 1:
        raise ValueError("A_p needs p > 1; use a1_constant for p = 1")
    a, b, scale = candidate_intervals(u, K, density)
    L = b - a
    with np.errstate(over="ignore", invalid="ignore"):
        q = (_interval_masses(u, a, b) / L) * (_interval_masses(u, a, b, -1.0 / (p - 1.0)) / L) ** (p - 1.0)
    s, v, wit = _per_scale_max(scale, q, lambda i: [float(a[i]), float(b[i])])
    details = {"candidates": int(a.size), "density": density}
    if any(math.isinf(x) for x in v):
        details["divergent"] = "u^(-1/(p-1)) is not locally integrable"
        if isinstance(u, AnalyticWeight):
            sampled = ap_constant(_line_sample(u, K), p, K, density, growth_factor)
            details["sampled_verdict"] = sampled.verdict
            details["sampled_growth_run"] = sampled.details.get("growth_run")
    return verdict_from_scales(f"A_{p:g}", s, v, wit, growth_factor, details=details)


def _line_sample(u, K: int, ratio: float = 2.0 ** 0.5):
    """Step version of ``u`` on ``[-2^K, 2^K]`` graded toward its center."""
    if isinstance(u, PiecewiseFn):
        return u.restrict(Interval(*u.window)) if u.tail != "zero" else u
    c = u.center
    L = 2.0 ** K
    bp = geometric_mesh(c, c - L, c + L, 2.0 ** -K, ratio)
    return sample_weight(u, bp, tail="zero")


def a1_constant(u, K: int = DEFAULT_K, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup_x Mu(x)/u(x)`` over cell midpoints, scale ``floor(log2|x - center|)``."""
    if not isinstance(u, PiecewiseFn):
        return _a1_analytic(u, K, growth_factor)
    from .operators import EvalGrid, maximal

    us = _line_sample(u, K)
    lo, hi = us.window
    c = us.center
    x = EvalGrid.around(us.breakpoints, n_sub=2, grade=8, window=hi - lo).nodes
    span = 0.25 * (hi - lo)
    keep = (np.abs(x - c) <= span) & (np.abs(x - c) >= 2.0 ** -K) & (x > lo) & (x < hi)
    x = x[keep]
    x = x[us(x) > 0]
    q = maximal(us, x) / us(x)
    scale = np.floor(np.log2(np.abs(x - c))).astype(int)
    s, v, wit = _per_scale_max(scale, q, lambda i: {"x": float(x[i])})
    return verdict_from_scales("A_1", s, v, wit, growth_factor,
                               details={"window": [float(lo), float(hi)], "nodes": int(x.size)})


def _a1_analytic(u, K: int, growth_factor: float, ratio: float = 2.0 ** 0.25) -> ClassVerdict:
    """Exact averages over mesh intervals ``J`` divided by ``u(y)`` at mesh points ``y`` in ``J``.

    Each quotient is at most ``Mu(y)/u(y)``, so the scan is a lower bound of
    the analytic constant. Step sampling of ``u`` would not be: dividing by
    a cell average instead of the point value inflates the quotient.
    """
    if u.halfline:
        raise ValueError("A_1 is a condition on weights of the line")
    c = u.center
    L = 2.0 ** K
    bp = geometric_mesh(c, c - L, c + L, 2.0 ** -K, ratio)
    lo, hi = np.meshgrid(bp, bp, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.asarray(u.integral(lo, np.maximum(hi, lo)), dtype=float) / (hi - lo)
    A[np.tril_indices(bp.size)] = -np.inf
    S = np.maximum.accumulate(A, axis=0)
    T = np.maximum.accumulate(S[:, ::-1], axis=1)[:, ::-1]
    mids = 0.5 * (bp[:-1] + bp[1:])
    y = np.concatenate([bp, mids])
    row = np.concatenate([np.arange(bp.size), np.arange(bp.size - 1)])
    col = np.concatenate([np.arange(bp.size), np.arange(1, bp.size)])
    d = np.abs(y - c)
    keep = (d >= 2.0 ** -K) & (d <= 0.25 * L)
    y, row, col, d = y[keep], row[keep], col[keep], d[keep]
    with np.errstate(divide="ignore"):
        q = T[row, col] / np.asarray(u(y), dtype=float)
    scale = np.floor(np.log2(d)).astype(int)
    s, v, wit = _per_scale_max(scale, q, lambda i: {"x": float(y[i])})
    return verdict_from_scales("A_1", s, v, wit, growth_factor,
                               details={"window": [c - L, c + L], "nodes": int(y.size), "exact": True})


ETA_GRID = 2.0 ** -np.arange(1, 13)


def _mass_profiles(u, a, b, fractions, largest: bool):
    """``extremal_mass(u, I, eta |I|) / u(I)`` for every candidate interval (rows)."""
    out = np.empty((a.size, len(fractions)))
    for n in range(a.size):
        I = Interval(a[n], b[n])
        m = extremal_mass(u, I, np.asarray(fractions) * I.length, largest)
        out[n] = m
    return out


def ainfty_estimate(u, K: int = DEFAULT_K, density: int = 1,
                    growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """Fit ``u(E)/u(I) <= C (|E|/|I|)^delta`` with worst-case (superlevel) sets ``E``."""
    a, b, scale = candidate_intervals(u, K, density)
    total = np.asarray(u.integral(a, b), dtype=float)
    good = total > 0
    a, b, scale, total = a[good], b[good], scale[good], total[good]
    eta = ETA_GRID
    phi_all = _mass_profiles(u, a, b, eta, largest=True) / total[:, None]
    scales = np.unique(scale)
    phis, deltas, args = [], [], []
    small = eta <= 2.0 ** -6
    for k in scales:
        idx = np.nonzero(scale == k)[0]
        prof = np.max(phi_all[idx], axis=0)
        slope = np.polyfit(np.log(eta[small]), np.log(np.maximum(prof[small], 1e-300)), 1)[0]
        phis.append(prof)
        deltas.append(float(slope))
        args.append(idx[np.argmax(phi_all[idx][:, -1])])
    delta = float(min(1.0, max(deltas))) if deltas else math.nan
    C = [float(np.max(ph / eta ** delta)) for ph in phis]
    wit = [{"interval": [float(a[i]), float(b[i])]} for i in args]
    q = math.inf if delta >= 1.0 else 1.0 / (1.0 - delta)
    details = {"delta": delta, "per_scale_delta": deltas, "reverse_holder_q": q,
               "eta": eta.tolist()}
    return verdict_from_scales("A_inf", scales.tolist(), C, wit, growth_factor, details=details)


# ---------------------------------------------------------------------------
# joint and multi-interval conditions


@dataclass
class JointReport:
    table: dict
    verdict: str
    per_epsilon: dict
    cross_check: dict

    def to_dict(self) -> dict:
        return jsonable({"table": self.table, "verdict": self.verdict,
                         "per_epsilon": {k: v.to_dict() for k, v in self.per_epsilon.items()},
                         "cross_check": self.cross_check})


def joint_ab_condition(u, w, K: int = DEFAULT_K, density: int = 1, growth_factor: float = DEFAULT_GROWTH_FACTOR,
                       cross_check: bool = True) -> JointReport:
    """Largest ``eta(eps)`` per scale with ``W(u(S)) <= eps W(u(I))`` whenever ``|S| <= eta |I|``.

    The worst ``S`` of a given measure is the superlevel (mass-maximizing) set.
    """
    W = _W(w)
    a, b, scale = candidate_intervals(u, 2 * K, density)
    total = np.asarray(u.integral(a, b), dtype=float)
    good = total > 0
    a, b, scale, total = a[good], b[good], scale[good], total[good]
    eta = 2.0 ** (-np.arange(1, 8 * 2 * K + 1) / 8.0)
    masses = _mass_profiles(u, a, b, eta, largest=True)
    rat = W(masses) / W(total)[:, None]
    scales = np.unique(scale)
    envelopes = {int(k): np.max(rat[scale == k], axis=0) for k in scales}
    per_eps, table = {}, {}
    for eps in EPSILONS:
        etas = [_crossing(eta, envelopes[int(k)], eps) for k in scales]
        inv = [1.0 / e if e > 0 else math.inf for e in etas]
        cv = verdict_from_scales(f"joint eps={eps:g}", scales.tolist(), inv, None, growth_factor)
        cv.details["eta"] = etas
        per_eps[str(eps)] = cv
        table[str(eps)] = min(etas) if etas else 0.0
    verdict, _ = _combine(per_eps.values())
    if verdict == INCONCLUSIVE and any(v.failed for v in per_eps.values()):
        verdict = "FAIL-GROWTH" if not any(v.verdict == FAIL for v in per_eps.values()) else FAIL
    cc = {}
    if cross_check:
        ai = ainfty_estimate(u, K, density, growth_factor).verdict
        bs = bstar_infty_constant(w, K, growth_factor).verdict
        cc = {"A_inf": ai, "B*_inf": bs,
              "agrees": (verdict == PASS) == (ai == PASS and bs == PASS)}
    return JointReport(table, verdict, per_eps, cc)


def _crossing(eta, worst, eps) -> float:
    """Largest ``eta`` with ``worst(eta) <= eps``; log-linear interpolation between grid points."""
    ok = np.nonzero(worst <= eps * (1.0 + 1e-12))[0]
    if ok.size == 0:
        return 0.0
    j = int(ok[0])
    if j == 0 or worst[j] == worst[j - 1] or worst[j] <= 0:
        return float(eta[j])
    if abs(worst[j] - eps) <= 1e-12 * eps:
        return float(eta[j])
    t = (math.log(eps) - math.log(worst[j])) / (math.log(worst[j - 1]) - math.log(worst[j]))
    return float(math.exp(math.log(eta[j]) + t * (math.log(eta[j - 1]) - math.log(eta[j]))))


def _multi_ratio(u, W, p, intervals, frac):
    """Quotient for one family: disjoint ``intervals`` and sublevel ``S_j`` of relative size ``frac``."""
    from .fncore import sublevel_subset

    uI = uS = 0.0
    worst = 1.0
    for (a, b), f in zip(intervals, frac):
        I = Interval(a, b)
        uI += float(u.integral(a, b))
        if f >= 1.0:
            uS += float(u.integral(a, b))
        else:
            S = sublevel_subset(u, I, f)
            uS += float(sum(u.integral(x.a, x.b) for x in S))
            worst = max(worst, 1.0 / f)
    return float(W(uI) / W(uS)) / worst ** p


def multi_interval_condition(u, w, p: float, families=None, K: int = DEFAULT_K, seed: int = 0,
                             n_random: int = 8, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ClassVerdict:
    """``sup W(u(U I_j))/W(u(U S_j)) / max_j (|I_j|/|S_j|)^p``; scale ``k`` means ratio ``4^k``."""
    W = _W(w)
    rng = np.random.default_rng(seed)
    c = u.centers[0]
    scales, est, wit = [], [], []
    for k in range(0, K + 1):
        frac_min = 4.0 ** -k
        fams = []
        for m in (-4, 0, 4):
            L = 2.0 ** m
            fams.append(([(c, c + L)], [frac_min]))
            fams.append(([(c - L, c)], [frac_min]))
            many = [(c + 2 * j * L, c + (2 * j + 1) * L) for j in range(8)]
            fams.append((many, [frac_min] + [1.0] * 7))
            fams.append((many, [frac_min] * 8))
        for _ in range(n_random):
            J = int(rng.integers(1, 6))
            gaps = rng.uniform(0.1, 2.0, 2 * J)
            ends = c + np.cumsum(gaps) - gaps[0]
            ivs = [(ends[2 * j], ends[2 * j + 1]) for j in range(J)]
            fr = 4.0 ** -rng.uniform(0, k, J)
            fr[rng.integers(J)] = frac_min
            fams.append((ivs, fr.tolist()))
        if families is not None:
            fams.extend((list(iv), list(fr)) for iv, fr in families
                        if abs(max(1.0 / min(fr), 1.0) - 4.0 ** k) <= 1e-9 * 4.0 ** k)
        vals = [_multi_ratio(u, W, p, iv, fr) for iv, fr in fams]
        n = int(np.argmax(vals))
        scales.append(k)
        est.append(vals[n])
        wit.append({"intervals": [list(map(float, x)) for x in fams[n][0]], "fractions": list(map(float, fams[n][1]))})
    return verdict_from_scales("multi-interval", scales, est, wit, growth_factor, two_sided=False)


# ---------------------------------------------------------------------------
# catalog


def _stepped(weight, tail_exponent=None, K: int = DEFAULT_K):
    mesh = geometric_mesh(0.0, 0.0, 2.0 ** K, 2.0 ** -K, 2.0 ** 0.25)
    if tail_exponent is None:
        return sample_weight(weight, mesh)
    vals = np.asarray(weight.integral(mesh[:-1], mesh[1:])) / np.diff(mesh)
    hi = mesh[-1]
    coef = float(weight(hi)) / hi ** tail_exponent
    return PiecewiseFn(mesh, vals, tail="power", tail_exponent=tail_exponent, tail_coefficient=coef)


def weight_catalog(K: int = DEFAULT_K) -> dict:
    """Twelve half-line weights with their expected ``B*_inf`` membership."""
    P = lambda a: AnalyticWeight("power", a)
    R = lambda c: AnalyticWeight("rational", c)
    one = PiecewiseFn([0.0, 2.0 ** K], [1.0], tail="constant")
    return {
        "t^-0.5": (P(-0.5), True),
        "1": (P(0.0), True),
        "t^0.5": (P(0.5), True),
        "t": (P(1.0), True),
        "t^2": (P(2.0), True),
        "(1+t)^-0.5": (R(0.5), True),
        "(1+t)^0.5": (R(-0.5), True),
        "step t^0.5": (_stepped(P(0.5), K=K), True),
        "step 1": (one, True),
        "(1+t)^-1": (R(1.0), False),
        "(1+t)^-2": (R(2.0), False),
        "step (1+t)^-1": (_stepped(R(1.0), -1.0, K=K), False),
    }
