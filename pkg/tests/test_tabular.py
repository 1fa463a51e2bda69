import numpy as np
import pytest

from navsecure.agent.tabular import TabularCMDP, evaluate_policy, greedy_policy, policy_gradient, \
    random_feasible_cmdp, score_function_gradient, solve_by_enumeration, solve_by_lagrangian_sweep, \
    solve_tabular_cmdp
from navsecure.exceptions.numerics import DistributionError, InfeasibleProblemError, ShapeError


def chain_cmdp(budget: float) -> TabularCMDP:
    """
    Two states, two actions: action 1 pays more but costs 1, action 0 is free.
    """
    transitions = np.full((2, 2, 2), 0.5)
    rewards = np.array([[0.2, 1.0], [0.1, 0.8]])
    costs = np.array([[0.0, 1.0], [0.0, 1.0]])
    return TabularCMDP(transitions, rewards, costs, discount=0.9, budget=budget)


def test_sweep_matches_enumeration_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(20):
        problem = random_feasible_cmdp(rng)
        exact = solve_by_enumeration(problem)
        swept = solve_by_lagrangian_sweep(problem)
        assert swept.cost_return <= problem.budget + 1e-9
        assert swept.reward_return >= 0.95 * exact.reward_return


def test_non_binding_budget_gives_unconstrained_optimum():
    problem = chain_cmdp(budget=100.0)
    solution = solve_tabular_cmdp(problem)
    np.testing.assert_array_equal(solution.policy, [1, 1])
    unconstrained = evaluate_policy(problem, greedy_policy(problem, problem.rewards))
    assert solution.reward_return == pytest.approx(unconstrained.reward_return)


@pytest.mark.parametrize("solver", [solve_by_enumeration, solve_by_lagrangian_sweep])
def test_zero_budget_keeps_to_free_actions(solver):
    solution = solver(chain_cmdp(budget=0.0))
    np.testing.assert_array_equal(solution.policy, [0, 0])
    assert solution.cost_return == 0.0


def test_infeasible_problem():
    problem = TabularCMDP(np.full((2, 1, 2), 0.5), np.ones((2, 1)), np.ones((2, 1)), discount=0.5, budget=0.1)
    with pytest.raises(InfeasibleProblemError):
        solve_by_enumeration(problem)
    with pytest.raises(InfeasibleProblemError):
        solve_by_lagrangian_sweep(problem)


def test_policy_evaluation_matches_closed_form():
    # Action 1 costs 1 in both states.
    problem = chain_cmdp(budget=1.0)
    value = evaluate_policy(problem, np.array([1, 1]))
    assert value.cost_return == pytest.approx(1.0 / (1.0 - 0.9))


def test_solution_is_invariant_to_reward_scale():
    problem = random_feasible_cmdp(np.random.default_rng(5))
    scaled = TabularCMDP(problem.transitions, 7.0 * problem.rewards, problem.costs, problem.discount, problem.budget)
    np.testing.assert_array_equal(solve_by_enumeration(problem).policy, solve_by_enumeration(scaled).policy)


def test_score_function_estimate_agrees_with_exact_gradient():
    rng = np.random.default_rng(1)
    problem = random_feasible_cmdp(rng, states=3, actions=2, discount=0.5)
    logits = rng.normal(size=(3, 2))
    exact = policy_gradient(problem, logits)
    estimate = score_function_gradient(problem, logits, episodes=10_000, horizon=20, rng=rng)
    cosine = np.sum(exact * estimate) / (np.linalg.norm(exact) * np.linalg.norm(estimate))
    assert cosine > 0.8


@pytest.mark.parametrize("build, error", [
    (lambda: TabularCMDP(np.full((2, 2, 3), 1 / 3), np.zeros((2, 2)), np.zeros((2, 2)), 0.9, 1.0), ShapeError),
    (lambda: TabularCMDP(np.full((2, 2, 2), 0.4), np.zeros((2, 2)), np.zeros((2, 2)), 0.9, 1.0), DistributionError),
    (lambda: TabularCMDP(np.full((2, 2, 2), 0.5), np.zeros((2, 2)), np.zeros((2, 2)), 1.0, 1.0), DistributionError),
])
def test_invalid_problems(build, error):
    with pytest.raises(error):
        build()
