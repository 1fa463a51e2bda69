import csv

import pytest

from navsecure.eval.curve import plot_reward_curve, reward_curve, write_curve_csv
from navsecure.eval.logs import EpisodeLog, EpisodeStep, read_episode_logs, write_episode_logs
from navsecure.exceptions.data import InvalidTransitionError


def test_constant_returns_give_a_flat_curve():
    curve = reward_curve([(10 * k, 4.0) for k in range(1, 30)], window=5)
    assert all(value == 4.0 for _, value in curve)
    assert len(curve) == 25


def test_first_point_averages_the_first_window():
    curve = reward_curve([(k * 100, float(k)) for k in range(1, 21)], window=10)
    assert curve[0] == (1000, 5.5)
    assert curve[-1] == (2000, 15.5)


def test_curve_needs_a_full_window():
    assert reward_curve([(1, 1.0)], window=3) == []
    with pytest.raises(ValueError):
        reward_curve([(1, 1.0)], window=0)


def test_curve_files(tmp_path):
    curve = reward_curve([(k, 0.1 * k) for k in range(1, 8)], window=2)
    csv_path = tmp_path / "curve" / "reward_curve.csv"
    write_curve_csv(str(csv_path), curve)
    with open(csv_path, newline="") as file:
        rows = list(csv.reader(file))
    assert rows[0] == ["env_steps", "average_return"]
    assert [(int(steps), float(value)) for steps, value in rows[1:]] == curve

    figure = tmp_path / "curve" / "reward_curve.png"
    plot_reward_curve(curve, str(figure))
    assert figure.stat().st_size > 0


def test_episode_log_summaries():
    log = EpisodeLog(dt=0.5, completed=True)
    for k, cost in enumerate([0.0, 1.0, 1.0]):
        log.steps.append(EpisodeStep(time=(k + 1) * 0.5, x=k, y=0.0, speed=2.0, reward=1.0, cost=cost,
                                     intervened=k == 2, distance=1.0))
    log.validate()
    assert log.total_distance == 3.0
    assert log.interventions == 1
    assert log.duration == 1.5
    assert log.total_return == 3.0
    assert log.discounted_cost(0.5) == pytest.approx(0.5 + 0.25)


def test_episode_log_times_must_advance_by_dt():
    log = EpisodeLog(dt=0.1, steps=[EpisodeStep(time=0.2, x=0.0, y=0.0, speed=0.0, reward=0.0, cost=0.0)])
    with pytest.raises(InvalidTransitionError):
        log.validate()


def test_episode_logs_round_trip(tmp_path, make_logs):
    logs = make_logs(count=4, seed=1)
    path = str(tmp_path / "episodes.jsonl")
    write_episode_logs(path, logs, fingerprint="abc")
    assert read_episode_logs(path) == logs


def test_malformed_episode_log(tmp_path):
    path = tmp_path / "episodes.jsonl"
    path.write_text('{"kind": "step", "episode": 0}\n')
    with pytest.raises(InvalidTransitionError):
        read_episode_logs(str(path))
