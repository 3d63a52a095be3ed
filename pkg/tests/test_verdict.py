import math

from lorentzlab.verdict import (FAIL, FAIL_GROWTH, INCONCLUSIVE, PASS, ClassVerdict, classify_growth,
                                verdict_from_scales)


def test_flat_passes():
    assert classify_growth([1.0] * 8)[0] == PASS


def test_three_scale_growth_fails():
    assert classify_growth([1, 1, 1, 2, 4, 8])[0] == FAIL_GROWTH
    assert classify_growth([8, 4, 2, 1, 1, 1])[0] == FAIL_GROWTH
    assert classify_growth([8, 4, 2, 1, 1, 1], two_sided=False)[0] == PASS


def test_two_scale_growth_is_not_enough():
    v, run = classify_growth([1, 1, 1, 1, 1, 9])
    assert v == PASS and run is None


def test_small_rise_is_inconclusive():
    assert classify_growth([1, 1, 1.1, 1.2, 1.4])[0] == INCONCLUSIVE


def test_converging_run_is_bounded():
    vals = [2 - 2.0 ** -k for k in range(10)]
    assert classify_growth(vals)[0] == PASS


def test_infinite_estimate_fails():
    assert classify_growth([1, math.inf, 1])[0] == FAIL


def test_roundtrip():
    cv = verdict_from_scales("x", [0, 1, 2], [1.0, 2.0, math.inf], [{"k": 0}, {"k": 1}, {"k": 2}])
    back = ClassVerdict.from_dict(cv.to_dict())
    assert back.verdict == FAIL and back.estimates[-1] == math.inf and back.witness == {"k": 2}
