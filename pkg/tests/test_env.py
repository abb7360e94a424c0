import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaosrl.env import (
    PlacementError,
    WorldConfig,
    WorldState,
    apply_wheels,
    object_cells,
    reset_episode,
    rotated,
    sense,
    step_outcome,
)
from chaosrl.learning import TdConfig

W = WorldConfig()
CELL = math.radians(5.0)
coord = st.floats(-9.5, 9.5, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)
wheel = st.floats(-0.5, 0.5, allow_nan=False)


def test_reset_constraints_and_determinism():
    gen = np.random.default_rng(0)
    for _ in range(10000):
        s = reset_episode(gen, W)
        assert math.dist(s.robot_pos, s.obstacle_pos) >= W.contact_distance
        assert math.dist(s.robot_pos, W.goal_center) >= W.goal_radius
        assert math.dist(s.obstacle_pos, W.goal_center) >= W.goal_radius + W.obstacle_radius
        assert max(map(abs, s.robot_pos)) <= W.field_half - W.robot_radius
        assert 0 <= s.robot_heading < 2 * math.pi and s.step == 0
    assert W.goal_center == (0.0, 8.0)
    a = reset_episode(np.random.default_rng(5), W)
    b = reset_episode(np.random.default_rng(5), W)
    assert a == b


def test_reset_gives_up():
    # an obstacle this large cannot avoid the goal
    cfg = replace(W, obstacle_radius=9.0, placement_retries=20)
    with pytest.raises(PlacementError):
        reset_episode(np.random.default_rng(0), cfg)


def test_goal_dead_ahead():
    img = sense(WorldState((0.0, 0.0), math.pi / 2, (-5.0, -5.0)), W)
    expected = 0.5 * (1 - 8 / (20 * math.sqrt(2)))
    assert expected == pytest.approx(0.3586, abs=1e-4)
    assert set(np.flatnonzero(img.goal_cells)) == {71, 0, 1}
    assert np.allclose(img.goal_cells[[71, 0, 1]], expected, rtol=0, atol=1e-15)


def test_object_at_max_distance_is_silent():
    d = W.d_max
    assert not object_cells((0.0, 0.0), 0.0, (d, 0.0), 1.0, W).any()


def test_coincident_object_fills_arc():
    cells = object_cells((1.0, 2.0), 0.3, (1.0, 2.0), 1.5, W)
    assert np.all(cells == 0.5)


@given(coord, coord, angle, coord, coord)
def test_sensor_ranges_and_contiguity(rx, ry, th, ox, oy):
    img = sense(WorldState((rx, ry), th, (ox, oy)), W)
    x = img.as_input()
    assert x.shape == (144,) and np.all((x >= 0) & (x <= 0.5))
    for cells in (img.goal_cells, img.obstacle_cells):
        on = cells > 0
        # a single arc has at most one off-to-on transition around the ring
        assert np.sum(on & ~np.roll(on, 1)) <= 1


def test_heading_turn_exhaustive():
    gen = np.random.default_rng(1)
    for _ in range(300):
        s = WorldState(tuple(gen.uniform(-9, 9, 2)), gen.uniform(0, 2 * math.pi),
                       tuple(gen.uniform(-8, 8, 2)))
        base = sense(s, W)
        for k in range(72):
            img = sense(replace(s, robot_heading=s.robot_heading + k * CELL), W)
            np.testing.assert_allclose(img.goal_cells, np.roll(base.goal_cells, -k), atol=1e-12)
            np.testing.assert_allclose(img.obstacle_cells, np.roll(base.obstacle_cells, -k),
                                       atol=1e-12)


def test_world_rotation_equivariance():
    gen = np.random.default_rng(2)
    for _ in range(300):
        s = WorldState(tuple(gen.uniform(-9, 9, 2)), gen.uniform(0, 2 * math.pi),
                       tuple(gen.uniform(-8, 8, 2)))
        base = sense(s, W)
        k = int(gen.integers(1, 72))
        rs, rw = rotated(s, k * CELL, W)
        # everything rotated together: identical image
        np.testing.assert_allclose(sense(rs, rw).as_input(), base.as_input(), atol=1e-12)
        # world rotated under a fixed heading: cells permute by k
        img = sense(replace(rs, robot_heading=s.robot_heading), rw)
        np.testing.assert_allclose(img.goal_cells, np.roll(base.goal_cells, k), atol=1e-12)
        np.testing.assert_allclose(img.obstacle_cells, np.roll(base.obstacle_cells, k), atol=1e-12)


@given(coord, coord, angle, coord, coord, coord, coord)
def test_sensor_separation(rx, ry, th, ox, oy, gx, gy):
    s = WorldState((rx, ry), th, (ox, oy))
    a = sense(s, W)
    b = sense(s, replace(W, goal_center=(gx, gy)))
    c = sense(replace(s, obstacle_pos=(gx, gy)), W)
    assert np.array_equal(a.obstacle_cells, b.obstacle_cells)
    assert np.array_equal(a.goal_cells, c.goal_cells)


def test_symmetric_drive_goes_straight():
    s = WorldState((0.0, -5.0), 0.7, (8.0, 8.0))
    n, hit = apply_wheels(s, 0.3, 0.3, W)
    assert not hit and n.robot_heading == pytest.approx(0.7)
    assert math.dist(n.robot_pos, s.robot_pos) == pytest.approx(0.3, abs=1e-15)
    assert n.step == 1


def test_antisymmetric_drive_turns_in_place():
    s = WorldState((1.0, 2.0), 0.5, (8.0, -8.0))
    n, _ = apply_wheels(s, -0.2, 0.2, W)
    assert n.robot_pos == pytest.approx(s.robot_pos, abs=1e-15)
    assert n.robot_heading == pytest.approx(0.5 + 2 * 0.2 / W.axle_width)


def test_out_of_range_command_rejected():
    with pytest.raises(ValueError):
        apply_wheels(WorldState((0.0, 0.0), 0.0, (5.0, 5.0)), 0.6, 0.0, W)


def test_driving_into_obstacle_stops_at_contact():
    s = WorldState((-6.0, 0.0), 0.0, (0.0, 0.0))
    hits = 0
    for _ in range(40):
        s, hit = apply_wheels(s, 0.5, 0.5, W)
        hits += hit
        assert math.dist(s.robot_pos, s.obstacle_pos) >= 2.0 - 1e-9
    assert hits > 0


def test_walls_clamp():
    s = WorldState((9.4, 0.0), 0.0, (-5.0, -5.0))
    for _ in range(5):
        s, hit = apply_wheels(s, 0.5, 0.5, W)
    assert s.robot_pos[0] == 9.5 and not hit


@given(coord, coord, angle, st.floats(-8.5, 8.5), st.floats(-8.5, 8.5),
       st.lists(st.tuples(wheel, wheel), min_size=1, max_size=60))
def test_never_penetrates(rx, ry, th, ox, oy, cmds):
    s = WorldState((rx, ry), th, (ox, oy))
    if math.dist(s.robot_pos, s.obstacle_pos) < W.contact_distance:
        return
    for left, right in cmds:
        s, _ = apply_wheels(s, left, right, W)
        assert math.dist(s.robot_pos, s.obstacle_pos) >= W.contact_distance - 1e-9
        assert max(map(abs, s.robot_pos)) <= W.field_half - W.robot_radius


def test_step_outcomes():
    td = TdConfig()
    at_goal = step_outcome(WorldState((0.0, 7.6), 0.0, (5.0, 0.0), 3), False, W, td)
    assert at_goal.reached_goal and at_goal.terminal and at_goal.reward == td.reward_goal
    idle = step_outcome(WorldState((0.0, 0.0), 0.0, (5.0, 0.0), 3), False, W, td)
    assert (idle.reward, idle.terminal, idle.reached_goal) == (0.0, False, False)
    bump = step_outcome(WorldState((0.0, 0.0), 0.0, (5.0, 0.0), 3), True, W, td)
    assert bump.reward == td.penalty_collision and not bump.terminal
    timeout = step_outcome(WorldState((0.0, 0.0), 0.0, (5.0, 0.0), 1000), False, W, td)
    assert timeout.terminal and timeout.reward == 0.0


@pytest.mark.parametrize("bad", [dict(goal_radius=0.0), dict(robot_radius=-1.0),
                                 dict(goal_center=(0.0, 12.0)), dict(max_steps=0),
                                 dict(sensor_cells=0), dict(axle_width=0.0)])
def test_world_validation(bad):
    with pytest.raises(ValueError):
        replace(W, **bad).validate()
