import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spoofsim import metrics as m
from spoofsim.errors import ValidationError
from spoofsim.trajectory import Waypoint


def _series(n, off=(0.0, 0.0)):
    truth = np.zeros((n, 3))
    est = truth.copy()
    est[:, :2] += off
    return est, truth


def test_ade_examples():
    est, truth = _series(7)
    assert m.ade(est, truth) == 0.0
    est, truth = _series(7, (3.0, 4.0))
    assert m.ade(est, truth) == pytest.approx(5.0)


def test_ade_direct_summation(rng):
    est, truth = rng.normal(size=(10, 3)), rng.normal(size=(10, 3))
    ref = math.sqrt(sum((est[i, 0] - truth[i, 0]) ** 2 + (est[i, 1] - truth[i, 1]) ** 2 for i in range(10)) / 10)
    assert abs(m.ade(est, truth) - ref) <= 1e-12


def test_fde_examples():
    est, truth = _series(4)
    assert m.fde(est, truth) == 0.0
    est[-1, 1] = 2.0
    assert m.fde(est, truth) == 2.0


def test_apde_examples():
    est, truth = _series(5)
    assert m.apde(est, truth, [0, 4]) == 0.0
    est[4, :2] = (3.0, 4.0)
    assert m.apde(est, truth, [0, 4]) == pytest.approx(2.5)
    for n_w in (1, 3, 5):
        e, t = _series(5, (1.0, 0.0))
        assert m.apde(e, t, list(range(n_w))) == pytest.approx(1.0)


def test_apde_accepts_waypoint_objects():
    est, truth = _series(3, (0.0, 2.0))
    wps = [Waypoint(0, truth[0]), Waypoint(2, truth[2])]
    assert m.apde(est, truth, wps) == pytest.approx(2.0)


def test_loc_err_examples():
    est, truth = _series(6)
    np.testing.assert_array_equal(m.loc_err(est, truth), 0.0)
    est[3, 0] = 1.0
    np.testing.assert_array_equal(m.loc_err(est, truth), [0, 0, 0, 1, 0, 0])


def test_loc_err_ignores_down_axis():
    est, truth = _series(2)
    est[:, 2] = 100.0
    assert m.ade(est, truth) == 0.0


@pytest.mark.parametrize("call", [
    lambda: m.ade(np.zeros((3, 3)), np.zeros((4, 3))),
    lambda: m.loc_err(np.zeros((3, 3)), np.zeros((2, 3))),
    lambda: m.fde(np.zeros((0, 3)), np.zeros((0, 3))),
    lambda: m.apde(np.zeros((3, 3)), np.zeros((3, 3)), [3]),
    lambda: m.apde(np.zeros((3, 3)), np.zeros((3, 3)), [-1]),
    lambda: m.apde(np.zeros((3, 3)), np.zeros((3, 3)), []),
    lambda: m.ade(np.zeros(3), np.zeros(3)),
])
def test_validation_errors(call):
    with pytest.raises(ValidationError):
        call()


pos = arrays(np.float64, st.tuples(st.integers(1, 30), st.just(3)), elements=st.floats(-1e3, 1e3))


@settings(max_examples=80, deadline=None)
@given(pos, st.data())
def test_invariants(est, data):
    truth = data.draw(arrays(np.float64, est.shape, elements=st.floats(-1e3, 1e3)))
    off = data.draw(arrays(np.float64, 3, elements=st.floats(-1e4, 1e4)))
    le = m.loc_err(est, truth)
    assert np.all(le >= 0)
    assert m.ade(est, truth) <= le.max() * (1 + 1e-12) + 1e-12
    assert m.fde(est, truth) == le[-1]
    # every frame a waypoint: mean, not RMSE
    allw = list(range(len(le)))
    assert m.apde(est, truth, allw) == pytest.approx(le.mean(), rel=1e-12, abs=1e-9)
    # translation invariance
    for f in (m.ade, m.fde):
        assert f(est + off, truth + off) == pytest.approx(f(est, truth), rel=1e-9, abs=1e-6)
    assert m.apde(est + off, truth + off, allw) == pytest.approx(m.apde(est, truth, allw), rel=1e-9, abs=1e-6)


def test_apde_differs_from_ade():
    est, truth = _series(2)
    est[1, 0] = 2.0
    assert m.apde(est, truth, [0, 1]) == 1.0
    assert m.ade(est, truth) == pytest.approx(math.sqrt(2.0))


def test_report_and_json():
    est, truth = _series(4, (3.0, 4.0))
    rep = m.report(est, truth, [0, 3], chi_max=7.5)
    assert (rep.ade, rep.fde, rep.apde, rep.chi_max) == (pytest.approx(5.0), 5.0, 5.0, 7.5)
    assert (rep.ade_n, rep.ade_e) == (pytest.approx(3.0), pytest.approx(4.0))
    doc = json.loads(rep.to_json())
    assert set(doc) == {"ade", "fde", "apde", "ade_n", "ade_e", "chi_max"}
    assert len(json.loads(rep.to_json(with_series=True))["loc_err"]) == 4
    assert rep.to_json() == rep.to_json()


def test_two_epoch_bias_peak_error_circle_vs_straight():
    from spoofsim import harness as h

    s = h.run_scenario(h.preset("finding1_bias_straight"), 0)
    c = h.run_scenario(h.preset("finding1_bias_circle"), 0)
    assert c.metrics.loc_err.max() > s.metrics.loc_err.max()
