import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spoofsim import trajectory as tr
from spoofsim.errors import ValidationError
from spoofsim.trajectory import DT, MotionClass, SegmentKind


def test_straight_position_at_10s():
    traj = tr.build_segment(tr.straight(2.0, 20.0, heading=0.0))
    k = int(round(10.0 / DT))
    np.testing.assert_allclose(traj.pos[k], [20.0, 0.0, 0.0], atol=1e-12)


def test_quarter_arc_heading_and_accel():
    dur = math.pi * 10 / (2 * 2)
    seg = tr.arc(2.0, 10.0, duration=dur, heading=0.0)
    traj = tr.build_segment(seg)
    _, vel, _, yaw, _ = seg.evaluate(np.array([dur]), np.zeros(3), 0.0)
    assert yaw[0] == pytest.approx(math.pi / 2, abs=1e-12)
    np.testing.assert_allclose(vel[0], [0.0, 2.0, 0.0], atol=1e-12)
    assert seg.turned_angle == pytest.approx(math.pi / 2)
    np.testing.assert_allclose(np.linalg.norm(traj.accel, axis=1), 0.4, atol=1e-12)


def test_mission_straight_duration_and_speed():
    traj = tr.build_segment(tr.straight(5.0, 20.0, heading=0.0))
    assert traj.duration == pytest.approx(20.0)
    assert len(traj) == 20 * 160 + 1
    np.testing.assert_allclose(np.linalg.norm(traj.vel, axis=1), 5.0)


def test_ablation_composition_waypoint_at_20s():
    traj = tr.compose([tr.straight(2.0, 20.0, heading=0.0), tr.arc(2.0, 10.0, duration=15.0)])
    assert traj.duration == pytest.approx(35.0)
    assert [w.index for w in traj.waypoints] == [0, 20 * 160, 35 * 160]
    assert traj.t[traj.waypoints[1].index] == pytest.approx(20.0)


def test_single_segment_compose_matches_build_segment():
    seg = tr.arc(3.0, 12.0, duration=7.0, heading=0.3)
    a = tr.build_segment(seg)
    b = tr.compose([seg])
    for name in ("t", "pos", "vel", "accel", "attitude", "motion_class"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert len(b.waypoints) == 2


def test_u_shape_mixed():
    leg = (71 - 2 * math.pi) / 2
    traj = tr.compose([tr.straight(5.0, leg, heading=0.0), tr.arc(5.0, 10.0, angle=math.pi),
                       tr.straight(5.0, leg)])
    assert traj.duration == pytest.approx(71.0, abs=DT)
    assert len(traj.waypoints) == 4
    assert set(np.unique(traj.motion_class)) == {MotionClass.LINEAR, MotionClass.NONLINEAR}
    # anti-parallel legs
    np.testing.assert_allclose(traj.vel[-1], -traj.vel[0], atol=1e-9)


def test_acceleration_at_examples():
    s = tr.build_segment(tr.straight(4.0, 5.0, heading=1.0))
    np.testing.assert_array_equal(acc := tr.acceleration_at(s, 2.5), np.zeros(3))
    c = tr.build_segment(tr.arc(2.0, 10.0, duration=5.0, heading=0.0))
    assert np.linalg.norm(tr.acceleration_at(c, 2.0)) == pytest.approx(0.4)
    assert acc.shape == (3,)


def test_acceleration_at_boundary_is_closed_left():
    traj = tr.compose([tr.straight(2.0, 5.0, heading=0.0), tr.arc(2.0, 10.0, duration=5.0)])
    a = tr.acceleration_at(traj, 5.0)
    assert np.linalg.norm(a) == pytest.approx(0.4)
    # finite differences of vel on each side agree with the segment owning that side
    _, v_lo, _, _, _ = traj.evaluate(5.0 - 1e-4)
    _, v_mid, _, _, _ = traj.evaluate(5.0)
    _, v_hi, _, _, _ = traj.evaluate(5.0 + 1e-4)
    np.testing.assert_allclose((v_mid - v_lo) / 1e-4, 0.0, atol=1e-9)
    np.testing.assert_allclose((v_hi - v_mid) / 1e-4, a, atol=1e-4)


def test_acceleration_at_out_of_range():
    traj = tr.build_segment(tr.straight(1.0, 2.0, heading=0.0))
    with pytest.raises(ValidationError):
        tr.acceleration_at(traj, 2.5)
    with pytest.raises(ValidationError):
        tr.acceleration_at(traj, -0.1)


@pytest.mark.parametrize("kw", [
    dict(kind=SegmentKind.STRAIGHT_LINE, duration=0.0, speed=1.0),
    dict(kind=SegmentKind.STRAIGHT_LINE, duration=-1.0, speed=1.0),
    dict(kind=SegmentKind.STRAIGHT_LINE, duration=1.0, speed=-1.0),
    dict(kind=SegmentKind.CIRCULAR_ARC, duration=1.0, speed=1.0, radius=0.0),
    dict(kind=SegmentKind.SPIRAL, duration=1.0, speed=1.0, radius=-3.0),
    dict(kind=SegmentKind.CIRCULAR_ARC, duration=1.0, speed=1.0, radius=1.0, turn=0),
])
def test_invalid_segments_rejected(kw):
    with pytest.raises(ValidationError):
        tr.MotionSegment(**kw)


def test_compose_rejects_empty_and_discontinuous():
    with pytest.raises(ValidationError):
        tr.compose([])
    with pytest.raises(ValidationError, match="discontinuous"):
        tr.compose([tr.straight(1.0, 2.0, heading=0.0), tr.straight(1.0, 2.0, heading=1.0)])


def test_speed_step_allowed():
    traj = tr.compose([tr.straight(1.0, 2.0, heading=0.0), tr.straight(3.0, 2.0)])
    assert traj.vel[-1, 0] == pytest.approx(3.0)


def _segments():
    straight = st.builds(tr.straight, st.floats(0.0, 8.0), st.floats(0.5, 6.0))
    arc = st.builds(lambda v, r, d, turn: tr.arc(v, r, duration=d, turn=turn),
                    st.floats(0.5, 8.0), st.floats(3.0, 40.0), st.floats(0.5, 6.0), st.sampled_from([1, -1]))
    spir = st.builds(lambda v, r, c, d: tr.spiral(v, r, c, d),
                     st.floats(0.5, 8.0), st.floats(3.0, 40.0), st.floats(-1.0, 1.0), st.floats(0.5, 6.0))
    hov = st.builds(tr.hover, st.floats(0.5, 3.0))
    return st.lists(st.one_of(straight, arc, spir, hov), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(_segments(), st.floats(-math.pi, math.pi))
def test_composed_trajectory_invariants(segs, heading):
    segs[0] = tr.MotionSegment(segs[0].kind, segs[0].duration, segs[0].speed, heading,
                               segs[0].radius, segs[0].climb_rate, segs[0].turn)
    traj = tr.compose(segs)
    # constant step
    np.testing.assert_allclose(np.diff(traj.t), DT, atol=1e-12)
    # unit attitude
    np.testing.assert_allclose(np.linalg.norm(traj.attitude, axis=1), 1.0, atol=1e-9)
    # central differences of pos vs stored vel at interior samples of the same segment
    same = (traj.segment_index[:-2] == traj.segment_index[2:])
    fd = (traj.pos[2:] - traj.pos[:-2]) / (2 * DT)
    err = np.abs(fd - traj.vel[1:-1])[same]
    assert err.size == 0 or err.max() <= 1e-3
    # waypoints
    assert len(traj.waypoints) == len(segs) + 1
    np.testing.assert_array_equal(traj.waypoints[0].pos, traj.pos[0])
    np.testing.assert_array_equal(traj.waypoints[-1].pos, traj.pos[-1])
    for w in traj.waypoints:
        assert 0 <= w.index < len(traj)
        np.testing.assert_array_equal(w.pos, traj.pos[w.index])
    # motion class per segment kind
    for k, seg in enumerate(segs):
        cls = traj.motion_class[traj.segment_index == k]
        if seg.kind in (SegmentKind.STRAIGHT_LINE, SegmentKind.HOVER):
            assert np.all(cls == MotionClass.LINEAR)
        elif seg.speed > 0:
            assert np.all(cls == MotionClass.NONLINEAR)


def test_velocity_continuous_across_boundaries():
    traj = tr.compose([tr.straight(5.0, 10.0, heading=0.0), tr.arc(5.0, 15.0, duration=8.0),
                       tr.arc(5.0, 15.0, duration=8.0, turn=-1)])
    for w in traj.waypoints[1:-1]:
        t = traj.t[w.index]
        _, lo, _, _, _ = traj.evaluate(t - 1e-9)
        _, hi, _, _, _ = traj.evaluate(t)
        np.testing.assert_allclose(lo, hi, atol=1e-6)


def test_determinism():
    segs = [tr.straight(5.0, 3.0, heading=0.2), tr.arc(5.0, 10.0, duration=3.0, turn=-1)]
    a, b = tr.compose(segs), tr.compose(segs)
    for name in ("t", "pos", "vel", "accel", "attitude", "body_rate", "motion_class"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_spiral_climbs_up():
    traj = tr.build_segment(tr.spiral(5.0, 15.0, 0.5, 10.0, heading=0.0))
    # NED: climbing means down decreases
    assert traj.pos[-1, 2] == pytest.approx(-5.0)
    np.testing.assert_allclose(traj.vel[:, 2], -0.5)
    np.testing.assert_allclose(np.linalg.norm(traj.accel[:, :2], axis=1), 25 / 15)


def test_arrays_are_read_only(straight20):
    with pytest.raises(ValueError):
        straight20.pos[0, 0] = 1.0
