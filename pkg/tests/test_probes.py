import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_step
from lorentzlab import probes
from lorentzlab.fncore import AnalyticWeight, Interval, indicator
from lorentzlab.verdict import FAIL_GROWTH, FAILING, INCONCLUSIVE, PASS

ONE = AnalyticWeight("power", 0.0)
P = lambda a: AnalyticWeight("power", a)


def test_weak_ratio_maximal_below_sharp_constant():
    # weak (1,1) constant of the uncentered maximal operator is 2; indicators attain it in the limit
    r = probes.weak_type_ratio("M", indicator(0.0, 1.0), ONE, ONE, 1.0)
    assert 1.9 < r <= 2.0 + 1e-12


def test_weak_ratio_hilbert_indicator():
    # lambda |{|H chi| > lambda}| is maximized as lambda -> 0 at 2/pi
    r = probes.weak_type_ratio("H", indicator(0.0, 1.0), ONE, ONE, 1.0)
    assert r <= 2 / math.pi + 1e-9 and r > 0.6


def test_weak_ratio_identity():
    # weak and strong norms agree on indicators; otherwise the weak one is smaller
    assert probes.weak_type_ratio("I", indicator(0.0, 3.0), ONE, ONE, 1.0) == pytest.approx(1.0, rel=1e-12)
    f = random_step(np.random.default_rng(2))
    assert probes.weak_type_ratio("I", f, ONE, ONE, 1.0) <= 1.0 + 1e-12


@pytest.mark.parametrize("s", [2.0, 10.0])
def test_weak_ratio_dilation_and_homogeneity(s):
    f = indicator(0.0, 1.0) + indicator(2.0, 3.0).scale(0.5)
    r = probes.weak_type_ratio("M", f, ONE, ONE, 1.0)
    # the sampling window is absolute, so it dilates with f
    L = probes.DEFAULT_L
    assert probes.weak_type_ratio("M", f.dilate(s), ONE, ONE, 1.0, L=s * L) == pytest.approx(r, rel=1e-9)
    assert probes.weak_type_ratio("M", f.scale(s), ONE, ONE, 1.0) == pytest.approx(r, rel=1e-12)


def test_weak_ratio_rejects_zero_norm():
    with pytest.raises(ValueError):
        probes.weak_type_ratio("H", indicator(0.0, 1.0).scale(0.0), ONE, ONE, 1.0)


def test_probe_monotone_under_family_enlargement():
    u, w = P(0.5), P(0.0)
    small = probes.probe_operator("M", u, w, 2.0, families=("a",), K=4)
    big = probes.probe_operator("M", u, w, 2.0, families=("a", "b", "c"), K=4)
    assert big.max_ratio >= small.max_ratio


def test_probe_hilbert_unweighted_passes():
    est = probes.probe_operator("H", ONE, ONE, 2.0, K=4)
    assert est.verdict == PASS
    assert est.to_dict()["verdict"] == PASS


def test_probe_detects_failure():
    # |x|^5 is not A_2: H is unbounded on L^2(u)
    est = probes.probe_operator("H", P(5.0), ONE, 2.0, K=8)
    assert est.verdict in FAILING + (INCONCLUSIVE,)
    assert est.growth_witness is not None


def test_interval_family_checks():
    with pytest.raises(ValueError):
        probes.IntervalFamily(((0, 2), (1, 3)))
    fam = probes.IntervalFamily(((0, 1), (200, 201)))
    assert fam.well_separated
    assert not probes.IntervalFamily(((0, 1), (20, 21))).well_separated
    assert fam.shifted(0, -1) == Interval(-1.0, 0.0)
    assert fam.shifted(1, 3) == Interval(203.0, 204.0)
    with pytest.raises(ValueError):
        fam.shifted(0, 51)


@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_separated_family_is_well_separated(seed, m):
    fam = probes.separated_family(np.random.default_rng(seed), m, spread=4.0)
    assert fam.well_separated and len(fam) == m


def test_lemma37_small_run():
    res = probes.lemma37_falsifier(100, seed=3)
    assert res["failures"] == []


def test_lemma37_rejects_noncompliant():
    fam = probes.IntervalFamily(((0, 1),))
    with pytest.raises(ValueError):
        probes.lemma37_construction(indicator(0.0, 1.0, 5.0), fam, 1.0)


def test_lemma37_threshold_can_fail():
    # an impossible threshold must raise, so the falsifier is not vacuous
    fam = probes.IntervalFamily(((0, 1),))
    with pytest.raises(probes.ConstructionFailure):
        probes.lemma37_construction(indicator(0.0, 1.0, 1.0), fam, 1.0, threshold=10.0)


def test_cp_constant_unweighted():
    r = probes.cp_interval_test(ONE, 4)
    assert r.verdict == PASS
    assert r.estimates == pytest.approx([2 * math.log(2) / math.pi] * len(r.estimates), abs=1e-9)


def test_h_implies_m_chain():
    rng = np.random.default_rng(4)
    for _ in range(3):
        f = random_step(rng, 4, signed=False)
        lam = 0.5 * float(np.max(f.values))
        rep = probes.h_implies_m_reduction(f, ONE, ONE, 2.0, lam, K=6)
        assert rep["verdict"] == PASS
        assert rep["well_separated"]
        for link in rep["links"].values():
            assert link["ok"]


def test_product_inequality_holds():
    rng = np.random.default_rng(5)
    for u in (ONE, P(1.0)):
        rep = probes.product_inequality(random_step(rng), u)
        assert rep["ok"]


def test_hima_finite_and_stable():
    f = random_step(np.random.default_rng(6), signed=True)
    rep = probes.hima_majorization(f, ONE)
    assert math.isfinite(rep["C"]) and rep["C"] > 0
    assert rep["variation"] < 0.2


def test_consistency_rules():
    flags, _ = probes.consistency_flags({"i": PASS, "ii": FAIL_GROWTH, "iii": PASS, "H": PASS})
    assert len(flags) == 1
    flags, _ = probes.consistency_flags({"i": PASS, "ii": PASS, "iii": PASS, "H": FAIL_GROWTH})
    assert len(flags) == 1
    flags, notes = probes.consistency_flags({"i": PASS, "ii": PASS, "iii": PASS, "H": INCONCLUSIVE})
    assert flags == [] and len(notes) == 1
    flags, _ = probes.consistency_flags({"i": FAIL_GROWTH, "ii": PASS, "iii": PASS, "H": FAIL_GROWTH})
    assert flags == []


def test_harness_unweighted():
    out = probes.theorem11_harness(ONE, ONE, 2.0, K=4, hstar=False)
    assert out["consistent"]
    assert out["verdicts"]["H"] == PASS


def test_lpq_dispatch_cases():
    assert probes.lpq_specialization(ONE, 2.0, 2.0, K=4)["case"] == "a"
    assert probes.lpq_specialization(ONE, 2.0, 0.5, K=4)["case"] == "b"
    assert probes.lpq_specialization(ONE, 1.0, 1.0, K=4)["case"] == "c"
