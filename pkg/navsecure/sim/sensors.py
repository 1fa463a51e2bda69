from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

Circle = Tuple[float, float, float]


def ray_angles(heading: float, count: int, fov: float) -> np.ndarray:
    if count == 1:
        return np.array([heading])
    return heading + np.linspace(-fov / 2.0, fov / 2.0, count)


def _circle_hits(origin: np.ndarray, directions: np.ndarray, circles: Sequence[Circle]) -> np.ndarray:
    hits = np.full(len(directions), np.inf)
    for cx, cy, radius in circles:
        to_center = np.array([cx, cy]) - origin
        along = directions @ to_center
        closest_sq = to_center @ to_center - along ** 2
        half_chord_sq = radius ** 2 - closest_sq
        inside = to_center @ to_center <= radius ** 2
        with np.errstate(invalid="ignore"):
            entry = along - np.sqrt(half_chord_sq)
        entry = np.where(inside, 0.0, entry)
        valid = (half_chord_sq >= 0.0) & (entry >= 0.0)
        hits = np.where(valid, np.minimum(hits, entry), hits)
    return hits


def _polyline_hits(origin: np.ndarray, directions: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    starts = polyline[:-1]
    edges = polyline[1:] - starts
    offsets = starts - origin
    # Solve origin + t * d = start + u * edge for every (ray, edge) pair.
    denominator = directions[:, 0:1] * edges[None, :, 1] - directions[:, 1:2] * edges[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (offsets[None, :, 0] * edges[None, :, 1] - offsets[None, :, 1] * edges[None, :, 0]) / denominator
        u = (offsets[None, :, 0] * directions[:, 1:2] - offsets[None, :, 1] * directions[:, 0:1]) / denominator
    valid = (denominator != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    return np.where(valid, t, np.inf).min(axis=1)


def cast_rays(x: float, y: float, angles: np.ndarray, circles: Sequence[Circle],
              boundaries: Sequence[np.ndarray], max_range: float) -> np.ndarray:
    """
    Distance along each ray to the nearest circle or boundary polyline, clamped to the sensor range.
    """
    origin = np.array([x, y])
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    distances = _circle_hits(origin, directions, circles)
    for boundary in boundaries:
        distances = np.minimum(distances, _polyline_hits(origin, directions, boundary))
    return np.minimum(distances, max_range)
