import math

import pytest

from navsecure.eval.logs import EpisodeLog, EpisodeStep
from navsecure.eval.metrics import compute_mpi, compute_sr, compute_sr_distance, compute_std_v, compute_tt
from navsecure.exceptions.data import EmptyLogsError


def episode(distances=(), speeds=None, intervened=(), completed=True, dt=0.1) -> EpisodeLog:
    speeds = speeds if speeds is not None else [1.0] * len(distances)
    log = EpisodeLog(dt=dt, completed=completed)
    for k, (distance, speed) in enumerate(zip(distances, speeds)):
        log.steps.append(EpisodeStep(time=(k + 1) * dt, x=0.0, y=0.0, speed=speed, reward=0.0, cost=0.0,
                                     intervened=k in intervened, distance=distance))
    return log


def timed(steps: int, completed: bool = True, dt: float = 0.1) -> EpisodeLog:
    return episode([0.0] * steps, completed=completed, dt=dt)


# Single-pass oracles written independently of the metric module.
def oracle_mpi(logs):
    distance, interventions = 0.0, 0
    for log in logs:
        for step in log.steps:
            distance += step.distance
            interventions += int(step.intervened)
    return distance if interventions == 0 else distance / interventions


def oracle_tt(logs):
    done = [log.steps[-1].time for log in logs if log.completed]
    return sum(done) / len(done) if done else None


def oracle_sr(logs):
    return 100.0 * len([log for log in logs if log.completed and not any(s.intervened for s in log.steps)]) / len(logs)


def oracle_std_v(logs):
    speeds = [step.speed for log in logs for step in log.steps]
    mean = sum(speeds) / len(speeds)
    return math.sqrt(sum((s - mean) ** 2 for s in speeds) / len(speeds))


def test_mpi_example():
    logs = [episode([25.0, 25.0], intervened={0, 1}), episode([50.0], intervened={0}), episode([0.0], intervened={0})]
    result = compute_mpi(logs)
    assert result.meters == 25.0
    assert not result.lower_bound


def test_mpi_without_interventions_is_a_lower_bound():
    result = compute_mpi([episode([100.0, 100.0]), episode([100.0])])
    assert result.meters == 300.0
    assert result.lower_bound


def test_tt_single_episode():
    assert compute_tt([timed(210)]).seconds == pytest.approx(21.0)


def test_tt_ignores_unfinished_episodes():
    result = compute_tt([timed(200), timed(220), timed(50, completed=False)])
    assert result.seconds == pytest.approx(21.0)
    assert (result.completed, result.dnf) == (2, 1)


def test_tt_without_completions_is_absent():
    result = compute_tt([timed(10, completed=False)])
    assert result.seconds is None
    assert result.reason


def test_sr_examples():
    clean = [timed(5) for _ in range(7)]
    failed = [timed(5, completed=False) for _ in range(3)]
    assert compute_sr(clean + failed) == pytest.approx(70.0)
    intervened = [episode([1.0, 1.0], intervened={1}) for _ in range(4)]
    assert compute_sr(intervened) == 0.0


def test_sr_distance_counts_up_to_first_intervention():
    logs = [episode([1.0, 2.0, 3.0, 4.0], intervened={1}), episode([5.0, 5.0])]
    assert compute_sr_distance(logs) == pytest.approx(100.0 * 13.0 / 20.0)


def test_std_v_examples():
    assert compute_std_v([episode([0.0] * 5, speeds=[3.0] * 5)]) == 0.0
    assert compute_std_v([episode([0.0], speeds=[1.0]), episode([0.0], speeds=[3.0])]) == pytest.approx(1.0)


def test_std_v_needs_two_samples():
    with pytest.raises(EmptyLogsError):
        compute_std_v([episode([0.0], speeds=[2.0])])


@pytest.mark.parametrize("metric", [compute_mpi, compute_tt, compute_sr, compute_sr_distance, compute_std_v])
def test_empty_logs(metric):
    with pytest.raises(EmptyLogsError):
        metric([])


@pytest.mark.parametrize("seed", range(20))
def test_metrics_match_oracles(seed, make_logs):
    logs = make_logs(count=20, seed=seed)
    assert abs(compute_mpi(logs).meters - oracle_mpi(logs)) <= 1e-12 * max(1.0, oracle_mpi(logs))
    expected_tt = oracle_tt(logs)
    if expected_tt is None:
        assert compute_tt(logs).seconds is None
    else:
        assert abs(compute_tt(logs).seconds - expected_tt) <= 1e-12
    assert abs(compute_sr(logs) - oracle_sr(logs)) <= 1e-12
    assert abs(compute_std_v(logs) - oracle_std_v(logs)) <= 1e-12


def test_zero_intervention_oracle_case(make_logs):
    logs = make_logs(count=20, seed=99, intervention_rate=0.0)
    result = compute_mpi(logs)
    assert result.lower_bound
    assert abs(result.meters - oracle_mpi(logs)) <= 1e-12 * oracle_mpi(logs)


def test_metrics_ignore_episode_order(make_logs):
    logs = make_logs(count=20, seed=5)
    shuffled = logs[::-1]
    assert compute_sr(shuffled) == compute_sr(logs)
    assert compute_std_v(shuffled) == pytest.approx(compute_std_v(logs), abs=1e-12)
    assert compute_mpi(shuffled).meters == pytest.approx(compute_mpi(logs).meters, abs=1e-12)
