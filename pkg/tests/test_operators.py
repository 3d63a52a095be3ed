import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as quad

from conftest import random_step, step_functions
from lorentzlab.fncore import PiecewiseFn, indicator
from lorentzlab.operators import (BreakpointError, EvalGrid, TruncationSet, bump, cotlar_residual,
                                  hilbert, hilbert_abs_integral, hilbert_integral, hilbert_max,
                                  hilbert_max_bruteforce, hilbert_trunc, maximal, maximal_bruteforce,
                                  sample_midpoints)


def off_nodes(f, rng, n=50):
    x = rng.uniform(-6, 6, n)
    bp = f.breakpoints
    keep = np.min(np.abs(x[:, None] - bp[None, :]), axis=1) > 1e-3
    return x[keep]


def test_indicator_closed_form():
    x = np.linspace(-3, 4, 1001) + 1e-4
    x = x[(np.abs(x) > 1e-3) & (np.abs(x - 1) > 1e-3)]
    ref = np.log(np.abs(x / (x - 1))) / math.pi
    np.testing.assert_allclose(hilbert(indicator(0.0, 1.0), x, guard=None), ref, rtol=0, atol=1e-12)


def test_guard_rejects_breakpoint_nodes():
    with pytest.raises(BreakpointError):
        hilbert(indicator(0.0, 1.0), 1.0 + 1e-9)


def test_truncated_against_quadrature(rng):
    f = random_step(rng, 4)
    for x in off_nodes(f, rng, 10):
        eps = 0.37
        def integrand(y):
            return f(y) / (x - y) / math.pi
        lo, hi = f.window
        pts = [p for p in f.breakpoints]
        a = quad.quad(integrand, lo, x - eps, points=[p for p in pts if lo < p < x - eps], limit=200)[0] \
            if x - eps > lo else 0.0
        b = quad.quad(integrand, x + eps, hi, points=[p for p in pts if x + eps < p < hi], limit=200)[0] \
            if x + eps < hi else 0.0
        assert hilbert_trunc(f, x, eps) == pytest.approx(a + b, abs=1e-9)


def test_truncation_limit_is_principal_value(rng):
    f = random_step(rng, 5)
    x = off_nodes(f, rng, 20)
    np.testing.assert_allclose(hilbert_trunc(f, x, 1e-12), hilbert(f, x, guard=None), atol=1e-9)


@given(step_functions())
def test_hilbert_linear_and_odd(f):
    x = np.linspace(-5.3, 5.1, 41) + 0.0123
    x = x[np.min(np.abs(x[:, None] - f.breakpoints[None, :]), axis=1) > 1e-6]
    g = f.scale(-2.0)
    np.testing.assert_allclose(hilbert(g, x, guard=None), -2.0 * hilbert(f, x, guard=None), atol=1e-10)
    # reflection f(-y) gives -Hf(-x)
    r = PiecewiseFn(-f.breakpoints[::-1], f.values[::-1])
    np.testing.assert_allclose(hilbert(r, -x, guard=None), -hilbert(f, x, guard=None), atol=1e-10)


@given(step_functions(max_cells=5))
def test_hilbert_max_matches_bruteforce(f):
    rng = np.random.default_rng(0)
    x = off_nodes(f, rng, 12)
    fast = hilbert_max(f, x)
    for xi, v in zip(x, fast):
        extra = np.geomspace(1e-6, 20, 60)
        assert v == pytest.approx(hilbert_max_bruteforce(f, xi, extra), rel=1e-12, abs=1e-12)


def test_truncation_set_kinks():
    ts = TruncationSet.for_point(indicator(0.0, 2.0), 0.5)
    assert ts.eps == (0.5, 1.5)


@given(step_functions(max_cells=5))
def test_maximal_matches_bruteforce(f):
    rng = np.random.default_rng(1)
    x = off_nodes(f, rng, 12)
    m = maximal(f, x)
    for xi, v in zip(x, m):
        assert v == pytest.approx(maximal_bruteforce(f, xi), rel=1e-12, abs=1e-14)
        assert v >= abs(float(f(xi))) - 1e-15


def test_maximal_indicator_closed_form():
    # M chi_(0,1)(x) = 1/(1+x) for x > 1, 1 inside
    x = np.array([0.5, 2.0, 3.0, -1.0])
    np.testing.assert_allclose(maximal(indicator(0.0, 1.0), x), [1.0, 1 / 2, 1 / 3, 1 / 2])


def test_hilbert_integral_exact():
    f = indicator(0.0, 1.0)
    a, b = 2.0, 5.0
    ref = quad.quad(lambda y: float(hilbert(f, y, guard=None)), a, b)[0]
    assert float(hilbert_integral(f, a, b)) == pytest.approx(ref, rel=1e-10)
    # |H chi| changes sign at x = 1/2
    ref_abs = quad.quad(lambda y: abs(float(hilbert(f, y, guard=None))), -1, 0, limit=200)[0] + \
        quad.quad(lambda y: abs(float(hilbert(f, y, guard=None))), 0, 1, points=[0.5], limit=200)[0]
    assert hilbert_abs_integral(f, -1.0, 1.0) == pytest.approx(ref_abs, rel=1e-7)


def test_eval_grid_contains_breakpoints():
    f = indicator(0.0, 1.0)
    g = EvalGrid.for_function(f, n_sub=4, grade=3, window=10.0)
    assert set(f.breakpoints) <= set(g.edges)
    assert g.edges[0] <= -10 and g.edges[-1] >= 10
    assert np.all(g.widths > 0)


def test_cotlar_residual_shrinks():
    res = []
    for k in (8, 9, 10):
        f = sample_midpoints(bump, -1.0, 1.0, 2 ** k)
        res.append(cotlar_residual(f, EvalGrid.uniform(-4.0, 4.0, 2 ** (k + 2))))
    assert res[2] < res[1] < res[0]


def test_fft_path_matches_direct():
    f = sample_midpoints(bump, -1.0, 1.0, 256)
    assert cotlar_residual(f, fast=True) == pytest.approx(cotlar_residual(f, fast=False), rel=1e-8)


def test_zero_tail_required():
    with pytest.raises(ValueError):
        hilbert(PiecewiseFn([0, 1], [1.0], tail="constant"), 3.0)
