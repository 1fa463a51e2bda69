import math

import numpy as np
import pytest

from navsecure.config import SimConfig
from navsecure.exceptions.data import InvalidActionError
from navsecure.sim.curriculum import corridor, traffic
from navsecure.sim.env import DrivingEnv
from navsecure.sim.scenario import HazardZone, Obstacle, ScenarioSpec
from navsecure.sim.track import TrackSegment


def open_road(**overrides) -> ScenarioSpec:
    values = dict(name="open", segments=(TrackSegment("straight", length=60.0),), half_width=2.0, horizon=100,
                  goal=58.0, drag=0.0)
    values.update(overrides)
    return ScenarioSpec(**values)


def drive(env: DrivingEnv, actions):
    return [env.step(action) for action in actions]


def test_reset_observation():
    env = DrivingEnv(SimConfig(ray_count=8))
    state, observation = env.reset(open_road(), seed=0)
    assert (state.x, state.y, state.speed) == (0.0, 0.0, 0.0)
    assert observation.shape == (env.observation_size,) == (12,)
    np.testing.assert_array_equal(observation[8:], [0.0, 0.0, 0.0, 0.0])
    assert np.all(env.normalize(observation)[:8] <= 1.0)


def test_standing_still_earns_nothing():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(), seed=0)
    result = env.step((0.0, 0.0))
    assert result.reward == 0.0
    assert result.cost == 0.0
    assert not (result.terminated or result.truncated or result.info["intervened"])
    assert result.state.speed == 0.0


def test_full_throttle_on_straight_road():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(), seed=0)
    results = drive(env, [(0.0, 1.0)] * 30)
    expected = 0.1 ** 2 * 2.0 * 30 * 29 / 2
    assert abs(results[-1].state.x - expected) <= 1e-9
    assert sum(r.info["distance"] for r in results) == pytest.approx(expected)
    assert env.time == pytest.approx(3.0)
    # Progress reward telescopes to the distance driven, less the action penalty.
    assert sum(r.reward for r in results) == pytest.approx(expected - 30 * 0.01)


def test_entering_an_obstacle_costs_and_terminates():
    env = DrivingEnv(SimConfig(ttc_min=0.0))
    env.reset(open_road(obstacles=(Obstacle(10.0, 0.0, 0.6),)), seed=0)
    for _ in range(100):
        result = env.step((0.0, 1.0))
        if result.terminated:
            break
        assert result.cost == 0.0
    assert result.terminated
    assert result.cost == 1.0
    assert result.info["collision"]
    assert math.hypot(result.state.x - 10.0, result.state.y) < 1.6


def test_hazard_zone_costs_without_terminating():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(hazards=(HazardZone(0.0, 0.0, 1.0),)), seed=0)
    result = env.step((0.0, 0.0))
    assert result.cost == 1.0
    assert not result.terminated


def test_leaving_the_lane_triggers_a_reset():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(), seed=0)
    results = []
    for _ in range(200):
        results.append(env.step((1.0, 1.0)))
        if results[-1].info["intervened"]:
            break
    last = results[-1]
    assert last.info["intervened"]
    assert not last.terminated
    assert env.interventions == 1
    assert last.state.speed == 0.0
    assert abs(env.track.project(last.state.x, last.state.y).offset) < 1e-9
    assert any(r.cost == 1.0 for r in results)


def test_horizon_truncates():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(horizon=3), seed=0)
    results = drive(env, [(0.0, 0.0)] * 3)
    assert [r.truncated for r in results] == [False, False, True]
    assert not any(r.terminated for r in results)


def test_reaching_the_goal_terminates():
    env = DrivingEnv(SimConfig())
    env.reset(open_road(goal=1.0), seed=0)
    results = drive(env, [(0.0, 1.0)] * 20)
    finished = [r for r in results if r.terminated]
    assert finished and finished[0].info["goal"]


@pytest.mark.parametrize("spec", [corridor, traffic])
def test_episodes_are_deterministic(spec):
    rng = np.random.default_rng(0)
    actions = rng.uniform(-1.0, 1.0, size=(80, 2))

    def rollout(seed):
        env = DrivingEnv(SimConfig())
        _, first = env.reset(spec(), seed)
        observations, rewards, costs = [first], [], []
        for action in actions:
            result = env.step(action)
            observations.append(result.observation)
            rewards.append(result.reward)
            costs.append(result.cost)
            if result.terminated:
                break
        return np.array(observations), rewards, costs

    first, second = rollout(4), rollout(4)
    np.testing.assert_array_equal(first[0], second[0])
    assert first[1] == second[1]
    assert first[2] == second[2]


def test_randomised_resets_differ_by_seed():
    env = DrivingEnv(SimConfig())
    env.reset(corridor(), seed=1)
    first = env.spec.obstacles
    env.reset(corridor(), seed=2)
    assert env.spec.obstacles != first


@pytest.mark.parametrize("action", [(1.5, 0.0), (0.0, -1.01), (0.0, 0.0, 0.0), (math.nan, 0.0)])
def test_invalid_actions(action):
    env = DrivingEnv(SimConfig())
    env.reset(open_road(), seed=0)
    with pytest.raises(InvalidActionError):
        env.step(action)
