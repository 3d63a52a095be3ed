"""Hilbert, maximal Hilbert, Hardy-Littlewood maximal and Hardy operators on step functions.

All singular integrals are closed forms: a cell ``(c, d)`` with value ``v``
contributes ``(v/pi) (ln|x - c| - ln|x - d|)`` to ``Hf(x)``. Smooth inputs
must be sampled first; the only error left is representation error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from .fncore import PiecewiseFn
from .rearrange import DecreasingStep

INV_PI = 1.0 / math.pi


class BreakpointError(ValueError):
    """Evaluation node too close to a breakpoint of the operand."""


def _finite_cells(f: PiecewiseFn):
    if f.tail != "zero":
        raise ValueError("singular integrals need a compactly supported step function (zero tail)")
    return f.breakpoints, f.values


def _check_nodes(f: PiecewiseFn, x: np.ndarray, guard: float):
    bp = f.breakpoints
    idx = np.clip(np.searchsorted(bp, x), 1, bp.size - 1)
    width = bp[idx] - bp[idx - 1]
    dist = np.min(np.abs(x[..., None] - bp[None, :]), axis=-1) if bp.size < 512 else \
        np.minimum(np.abs(x - bp[idx]), np.abs(x - bp[idx - 1]))
    bad = dist < guard * width
    if np.any(bad):
        raise BreakpointError(f"node {x[bad][0]!r} lies within {guard:g} cell of a breakpoint")


def _cell_logs(x, c):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x - c))


def hilbert(f: PiecewiseFn, x, guard: float | None = 0.25, chunk: int = 2048):
    """``Hf(x)`` in closed form. ``guard`` rejects nodes within ``guard`` cell of a breakpoint."""
    bp, v = _finite_cells(f)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if guard:
        _check_nodes(f, x, guard)
    # sum_k v_k (L_k - L_{k+1}) = v_0 L_0 + sum_k (v_k - v_{k-1}) L_k - v_last L_last
    jumps = np.diff(np.concatenate([[0.0], v, [0.0]]))
    out = np.empty_like(x)
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk]
        out[s:s + chunk] = _cell_logs(xs[:, None], bp[None, :]) @ jumps
    out *= INV_PI
    return float(out[0]) if scalar else out


def hilbert_trunc(f: PiecewiseFn, x, eps):
    """``(1/pi) int_{|x-y|>eps} f(y)/(x-y) dy`` exactly, by clipping cells."""
    bp, v = _finite_cells(f)
    x = np.asarray(x, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    xb, eb = np.broadcast_arrays(x, eps)
    X = xb[..., None]
    E = eb[..., None]
    a, b = bp[:-1], bp[1:]
    # left piece (a, min(b, x - eps)) and right piece (max(a, x + eps), b)
    lb = np.minimum(b, X - E)
    ra = np.maximum(a, X + E)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(lb > a, np.log(np.abs(X - a)) - np.log(np.abs(X - lb)), 0.0)
        right = np.where(b > ra, np.log(np.abs(X - ra)) - np.log(np.abs(X - b)), 0.0)
    out = INV_PI * np.sum((left + right) * v, axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncationSet:
    """Kink distances ``|x - c_k|`` at which ``eps -> H_eps f(x)`` can change monotonicity."""

    eps: tuple[float, ...]

    @classmethod
    def for_point(cls, f: PiecewiseFn, x: float) -> "TruncationSet":
        d = np.unique(np.abs(float(x) - f.breakpoints))
        return cls(tuple(float(e) for e in d[d > 0]))


def _one_sided(bp, v, x, s, Lg, C, left: bool):
    """``int_{-inf}^s`` (left) or ``int_s^inf`` (right) of ``f(y)/(x-y)``, rows of ``x`` against ``s``."""
    j = np.searchsorted(bp, s, side="right") - 1  # cell index holding s (-1 before, B-1 after)
    nb = bp.size
    inside = (j >= 0) & (j < nb - 1)
    jc = np.clip(j, 0, nb - 2)
    vj = v[jc]
    with np.errstate(divide="ignore", invalid="ignore"):
        ls = np.log(np.abs(x - s))
    rows = np.arange(x.shape[0])[:, None]
    if left:
        # C[:, k] = sum of cell terms below cell k
        full = np.where(j < 0, 0.0, C[rows, np.clip(j, 0, nb - 1)])
        part = np.where(inside, vj * (Lg[rows, jc] - ls), 0.0)
    else:
        total = C[:, -1:]
        full = np.where(j >= nb - 1, 0.0, total - C[rows, np.clip(j + 1, 0, nb - 1)])
        part = np.where(inside, vj * (ls - Lg[rows, jc + 1]), 0.0)
    return full + part


def hilbert_max(f: PiecewiseFn, x, return_eps: bool = False, chunk: int = 512):
    """``H*f(x) = sup_eps |H_eps f(x)|``, exact for step ``f``.

    ``d/deps H_eps f(x) = (f(x+eps) - f(x-eps)) / (pi eps)`` has constant sign
    between kinks, so the sup is attained at ``eps -> 0+`` or at a kink
    ``|x - c_k|``. Each side of ``H_eps`` is a prefix sum of cell log terms.
    """
    bp, v = _finite_cells(f)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    best = np.abs(hilbert(f, x, guard=None))
    arg = np.zeros_like(x)
    for s0 in range(0, x.size, chunk):
        xs = x[s0:s0 + chunk, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            Lg = np.log(np.abs(xs - bp[None, :]))
            terms = v[None, :] * (Lg[:, :-1] - Lg[:, 1:])
        terms = np.where(np.isfinite(terms), terms, 0.0)
        C = np.concatenate([np.zeros((xs.shape[0], 1)), np.cumsum(terms, axis=1)], axis=1)
        eps = np.abs(xs - bp[None, :])
        ok = eps > 0
        safe = np.where(ok, eps, 1.0)
        with np.errstate(invalid="ignore"):
            val = _one_sided(bp, v, xs, xs - safe, Lg, C, True) + _one_sided(bp, v, xs, xs + safe, Lg, C, False)
        val = np.where(ok & np.isfinite(val), np.abs(INV_PI * val), -np.inf)
        k = np.argmax(val, axis=1)
        top = val[np.arange(xs.shape[0]), k]
        cur = best[s0:s0 + chunk]
        better = top > cur
        best[s0:s0 + chunk] = np.where(better, top, cur)
        arg[s0:s0 + chunk] = np.where(better, safe[np.arange(xs.shape[0]), k], 0.0)
    if return_eps:
        return (float(best[0]), float(arg[0])) if scalar else (best, arg)
    return float(best[0]) if scalar else best


def hilbert_max_bruteforce(f: PiecewiseFn, x: float, extra_eps=()) -> float:
    """Oracle: ``max |H_eps f(x)|`` over all kinks, extra ``eps`` and ``eps -> 0+``."""
    eps = np.concatenate([np.asarray(TruncationSet.for_point(f, x).eps), np.asarray(extra_eps, dtype=float)])
    vals = [abs(float(hilbert(f, x, guard=None)))]
    vals.extend(abs(float(hilbert_trunc(f, x, e))) for e in eps if e > 0)
    return max(vals)


def maximal(f: PiecewiseFn, x, chunk: int = 1024):
    """Uncentered Hardy-Littlewood maximal function of a step function, exact.

    For fixed left end the average is monotone in the right end on every
    cell (and vice versa), so the sup over intervals containing ``x`` is
    attained with endpoints in the breakpoints or at ``x`` itself; constant
    tails add their value as the limit of ever longer intervals.
    """
    if f.tail == "power":
        raise ValueError("sample power tails before computing M")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    g = f.abs()
    bp = g.breakpoints
    F = g.primitive(bp)
    n = bp.size
    # A[i, j] = average over (bp_i, bp_j), i < j; R[i, j] = max over i' <= i, j' >= j
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (F[None, :] - F[:, None]) / (bp[None, :] - bp[:, None])
    A = np.where(np.triu(np.ones((n, n), dtype=bool), 1), A, -np.inf)
    R = np.maximum.accumulate(A, axis=0)
    R = np.maximum.accumulate(R[:, ::-1], axis=1)[:, ::-1]
    out = np.asarray(g(x), dtype=float).copy()
    if g.tail == "constant":
        out = np.maximum(out, max(g.values[0], g.values[-1]))
    il = np.searchsorted(bp, x, side="right") - 1  # last breakpoint <= x
    jr = np.searchsorted(bp, x, side="left")  # first breakpoint >= x
    inside = (il >= 0) & (jr < n)
    out[inside] = np.maximum(out[inside], R[il[inside], jr[inside]])
    Fx = g.primitive(x)
    for s in range(0, x.size, chunk):
        xs, Fs = x[s:s + chunk, None], Fx[s:s + chunk, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.where(bp[None, :] > xs, (F[None, :] - Fs) / (bp[None, :] - xs), -np.inf)
            left = np.where(bp[None, :] < xs, (Fs - F[None, :]) / (xs - bp[None, :]), -np.inf)
        out[s:s + chunk] = np.maximum(out[s:s + chunk], np.maximum(right.max(axis=1), left.max(axis=1)))
    return float(out[0]) if scalar else out


def maximal_bruteforce(f: PiecewiseFn, x: float, extra=()) -> float:
    """Oracle: all intervals with endpoints in breakpoints, ``x`` and ``extra``."""
    g = f.abs()
    pts = np.unique(np.concatenate([g.breakpoints, [x], np.asarray(extra, dtype=float)]))
    best = float(g(np.array([x]))[0])
    for a in pts[pts <= x]:
        for b in pts[pts >= x]:
            if b > a:
                best = max(best, float(g.integral(a, b)) / (b - a))
    return best


def hardy_p(g: DecreasingStep, t):
    """``Pg(t) = (1/t) int_0^t g``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = g.integral(0.0, t) / t
    lead = g.levels[0] if g.levels else 0.0
    return np.where(t > 0, out, lead)


def hardy_q(g: DecreasingStep, t):
    """``Qg(t) = int_t^inf g(s) ds/s`` as a block sum of logarithms."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not g.levels:
        return np.zeros_like(t)
    ends = g.ends
    starts = np.concatenate([[0.0], ends[:-1]])
    lv = np.asarray(g.levels)
    lo = np.maximum(starts[None, :], t[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ends[None, :] > lo, lv[None, :] * np.log(ends[None, :] / lo), 0.0)
    return terms.sum(axis=1)


# ---------------------------------------------------------------------------
# evaluation grids


@dataclass(frozen=True)
class EvalGrid:
    """Midpoints of a refinement of the operand cells plus graded outer cells."""

    edges: np.ndarray
    n: int

    @property
    def nodes(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "EvalGrid":
        return cls(np.linspace(lo, hi, n + 1), n)

    @classmethod
    def around(cls, breakpoints, n_sub: int = 8, grade: int = 6, window: float | None = None,
               outer_ratio: float = 2.0 ** 0.5) -> "EvalGrid":
        """Refine every cell ``n_sub`` times, grade ``grade`` levels toward each breakpoint,
        and extend with geometric cells out to ``[-window, window]``."""
        bp = np.unique(np.asarray(breakpoints, dtype=float))
        pieces = [bp]
        for a, b in zip(bp[:-1], bp[1:]):
            h = (b - a) / n_sub
            pieces.append(a + h * np.arange(1, n_sub))
            fr = h * 2.0 ** -np.arange(1, grade + 1)
            pieces.extend([a + fr, b - fr])
        lo, hi = bp[0], bp[-1]
        ext = hi - lo
        first = (bp[1] - bp[0]) / n_sub if bp.size > 1 else 1.0
        last = (bp[-1] - bp[-2]) / n_sub if bp.size > 1 else 1.0
        pieces.extend([lo - first * 2.0 ** -np.arange(1, grade + 1), hi + last * 2.0 ** -np.arange(1, grade + 1)])
        R = window if window is not None else max(lo, hi, -lo, -hi) + 16 * ext
        d = first
        while lo - d > -R:
            pieces.append([lo - d])
            d *= outer_ratio
        d = last
        while hi + d < R:
            pieces.append([hi + d])
            d *= outer_ratio
        pieces.append([min(-R, lo - first), max(R, hi + last)])
        edges = np.unique(np.concatenate([np.atleast_1d(p) for p in pieces]))
        return cls(edges, n_sub)

    @classmethod
    def for_function(cls, f: PiecewiseFn, **kw) -> "EvalGrid":
        return cls.around(f.breakpoints, **kw)


# ---------------------------------------------------------------------------
# exact integrals of Hg


def _G(y):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y == 0, 0.0, y * np.log(np.abs(y)) - y)


def hilbert_integral(g: PiecewiseFn, a, b):
    """``int_a^b Hg`` exactly via the antiderivative ``(x - c) ln|x - c| - x``."""
    bp, v = _finite_cells(g)
    jumps = np.diff(np.concatenate([[0.0], v, [0.0]]))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    val = (_G(b[..., None] - bp) - _G(a[..., None] - bp)) @ jumps
    return INV_PI * val


def hilbert_abs_integral(g: PiecewiseFn, a: float, b: float, samples: int = 64) -> float:
    """``int_a^b |Hg|``: exact pieces between sign changes located by bracketing and ``brentq``."""
    bp = g.breakpoints
    inner = bp[(bp > a) & (bp < b)]
    grid = np.unique(np.concatenate([np.linspace(a, b, samples + 1), inner]))
    mids = 0.5 * (grid[:-1] + grid[1:])
    # sample at midpoints and just inside every piece to bracket roots away from log poles
    pts = np.sort(np.concatenate([grid[1:-1], mids]))
    pts = pts[~np.isin(pts, bp)]
    h = hilbert(g, pts, guard=None)
    roots = []
    for k in range(pts.size - 1):
        if h[k] == 0.0:
            roots.append(pts[k])
        elif h[k] * h[k + 1] < 0 and not np.any((bp > pts[k]) & (bp < pts[k + 1])):
            roots.append(brentq(lambda y: hilbert(g, y, guard=None), pts[k], pts[k + 1], xtol=1e-14))
    cuts = np.unique(np.concatenate([[a, b], roots]))
    pieces = hilbert_integral(g, cuts[:-1], cuts[1:])
    return float(np.sum(np.abs(pieces)))


# ---------------------------------------------------------------------------
# Cotlar identity


def _toeplitz_kernel(n: int) -> np.ndarray:
    m = np.arange(-(n - 1), n, dtype=float)
    return INV_PI * np.log(np.abs((m + 0.5) / (m - 0.5)))


def _uniform_hilbert(values: np.ndarray) -> np.ndarray:
    """``H`` of a step function on equal cells, evaluated at the cell midpoints.

    Exact: the midpoint of cell ``i`` sees cell ``k`` through the kernel
    ``K(i - k)`` above, so this is a linear (not periodic) convolution.
    """
    n = values.size
    full = fftconvolve(values, _toeplitz_kernel(n), mode="full")
    return full[n - 1: 2 * n - 1]


def sample_midpoints(fun, lo: float, hi: float, n: int) -> PiecewiseFn:
    bp = np.linspace(lo, hi, n + 1)
    return PiecewiseFn(bp, fun(0.5 * (bp[:-1] + bp[1:])))


def bump(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1, (1 - x * x) ** 2, 0.0)


def cotlar_residual(f: PiecewiseFn, grid: EvalGrid | None = None, fast: bool = True) -> float:
    """Normalized L2 residual of ``(Hf)^2 - f^2 - 2H(f Hf)`` on the grid.

    ``fHf`` is resampled as a step function on the grid cells. On a uniform
    grid matching the cells of ``f`` the convolution path is used.
    """
    if not np.any(f.values):
        return 0.0
    if grid is None:
        lo, hi = f.window
        grid = EvalGrid.uniform(lo, hi, f.values.size)
    x = grid.nodes
    uniform = np.allclose(np.diff(grid.edges), grid.widths[0], rtol=1e-9, atol=0)
    same = grid.edges.size == f.breakpoints.size and np.allclose(grid.edges, f.breakpoints)
    fx = f(x)
    if fast and uniform and same:
        Hf = _uniform_hilbert(f.values)
        HfHf = _uniform_hilbert(f.values * Hf)
    else:
        Hf = hilbert(f, x, guard=None)
        g = PiecewiseFn(grid.edges, fx * Hf)
        HfHf = hilbert(g, x, guard=None)
    r = Hf ** 2 - fx ** 2 - 2.0 * HfHf
    wts = grid.widths
    denom = math.sqrt(float(np.sum((Hf ** 2) * wts)))
    return math.sqrt(float(np.sum(r * r * wts))) / denom


# ---------------------------------------------------------------------------
# export


def export_csv(path, x, columns: dict):
    """Write ``x`` and named columns; column order is sorted for reproducibility."""
    names = sorted(columns)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x"] + names)
        for i, xi in enumerate(np.asarray(x, dtype=float)):
            wr.writerow([repr(float(xi))] + [repr(float(columns[n][i])) for n in names])
