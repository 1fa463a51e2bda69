"""
Average episode reward over training, as a CSV series and a figure.
"""
from __future__ import annotations

import csv
import os
from typing import List, Sequence, Tuple

import numpy as np

Point = Tuple[int, float]


def reward_curve(episodes: Sequence[Tuple[int, float]], window: int = 10) -> List[Point]:
    """
    Running mean of the last `window` episode returns, one point per episode from the window-th on.

    :param episodes: (environment steps when the episode ended, episode return), in training order.
    :return: (environment steps, average return) points.
    """
    if window <= 0:
        raise ValueError(f"Window must be positive, got {window}.")
    returns = np.array([ret for _, ret in episodes], dtype=np.float64)
    curve = []
    for end in range(window, len(episodes) + 1):
        curve.append((int(episodes[end - 1][0]), float(np.mean(returns[end - window:end]))))
    return curve


def write_curve_csv(path: str, curve: Sequence[Point]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["env_steps", "average_return"])
        for steps, value in curve:
            writer.writerow([steps, repr(value)])


def plot_reward_curve(curve: Sequence[Point], path: str, title: str = "Average episode reward") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figure, axes = plt.subplots(figsize=(6.0, 6.0 * (np.sqrt(5.0) - 1.0) / 2.0))
    if curve:
        steps, values = zip(*curve)
        axes.plot(steps, values, linewidth=1.2)
    axes.set_xlabel("Environment steps")
    axes.set_ylabel("Average return")
    axes.set_title(title)
    axes.grid(True, alpha=0.3)
    figure.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    figure.savefig(path)
    plt.close(figure)
