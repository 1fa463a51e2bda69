"""
Full-length learning runs. Each takes tens of minutes; run them with --runslow.
"""
import pytest

from navsecure.config import AgentConfig, RunConfig, TrainingConfig
from navsecure.eval.report import build_report
from navsecure.runtime.evaluation import load_trained_policy, rollout_greedy
from navsecure.runtime.trainer import Trainer
from navsecure.sim.curriculum import corridor, shortcut


def train_and_evaluate(tmp_path, seed: int, scenario, steps: int = 200_000, episodes: int = 100, **agent):
    config = RunConfig(seed=seed, out=str(tmp_path / f"run-{seed}-{steps}"), agent=AgentConfig(**agent),
                       training=TrainingConfig(steps=steps))
    result = Trainer(config, [scenario()], config.out).run()
    policy = load_trained_policy(result.checkpoint)
    logs = rollout_greedy(policy, [scenario()], episodes, seed=1000 + seed)
    return build_report(logs, policy.fingerprint, config.agent.discount)


@pytest.mark.slow
def test_corridor_policy_drives_without_interventions(tmp_path):
    reports = [train_and_evaluate(tmp_path, seed, corridor) for seed in (0, 1, 2)]
    assert sum(report.sr >= 90.0 for report in reports) >= 2
    untrained = train_and_evaluate(tmp_path, 0, corridor, steps=0)
    assert max(report.sr for report in reports) > untrained.sr


@pytest.mark.slow
def test_budget_trades_return_for_safety(tmp_path):
    budget = 0.1
    constrained = train_and_evaluate(tmp_path / "constrained", 0, shortcut, budget=budget)
    unconstrained = train_and_evaluate(tmp_path / "frozen", 0, shortcut, budget=budget, freeze_multiplier=True)
    assert constrained.mean_discounted_cost <= 1.1 * budget
    assert unconstrained.mean_discounted_cost > budget
    assert unconstrained.mean_return > constrained.mean_return
