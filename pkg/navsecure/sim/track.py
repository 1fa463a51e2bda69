"""
Track centerlines built from straight and arc segments, sampled into a dense polyline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from navsecure.exceptions.data import InvalidScenarioError

SAMPLE_SPACING = 0.5


@dataclass(frozen=True)
class TrackSegment:
    kind: str
    """'straight' or 'arc'."""
    length: float = 0.0
    """Length of a straight segment, in meters."""
    radius: float = 0.0
    """Radius of an arc, in meters."""
    angle: float = 0.0
    """Signed turning angle of an arc in radians; positive turns left."""

    def __post_init__(self):
        if self.kind == "straight":
            if self.length <= 0:
                raise InvalidScenarioError(f"Straight segments need a positive length, got {self.length}.")
        elif self.kind == "arc":
            if self.radius <= 0 or self.angle == 0:
                raise InvalidScenarioError(f"Arcs need a positive radius and a non-zero angle, got {self}.")
        else:
            raise InvalidScenarioError(f"Unknown track segment kind '{self.kind}'.")

    @property
    def arc_length(self) -> float:
        return self.length if self.kind == "straight" else self.radius * abs(self.angle)


@dataclass(frozen=True)
class TrackProjection:
    s: float
    """Arc length of the closest centerline point."""
    offset: float
    """Signed lateral distance from the centerline; positive to the left."""
    tangent: float
    """Centerline heading at the closest point."""


class Track:
    def __init__(self, segments: Sequence[TrackSegment]):
        if not segments:
            raise InvalidScenarioError("A track needs at least one segment.")
        self.segments = list(segments)
        points: List[Tuple[float, float]] = [(0.0, 0.0)]
        x, y, heading = 0.0, 0.0, 0.0
        for segment in self.segments:
            count = max(1, int(math.ceil(segment.arc_length / SAMPLE_SPACING)))
            step = segment.arc_length / count
            for _ in range(count):
                if segment.kind == "straight":
                    x += step * math.cos(heading)
                    y += step * math.sin(heading)
                else:
                    turn = math.copysign(step / segment.radius, segment.angle)
                    chord = 2.0 * segment.radius * math.sin(abs(turn) / 2.0)
                    x += chord * math.cos(heading + turn / 2.0)
                    y += chord * math.sin(heading + turn / 2.0)
                    heading += turn
                points.append((x, y))
        self.points = np.array(points)
        deltas = np.diff(self.points, axis=0)
        self._lengths = np.hypot(deltas[:, 0], deltas[:, 1])
        self._directions = deltas / self._lengths[:, None]
        self._headings = np.arctan2(deltas[:, 1], deltas[:, 0])
        self.cumulative = np.concatenate([[0.0], np.cumsum(self._lengths)])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    @property
    def is_straight(self) -> bool:
        return all(segment.kind == "straight" for segment in self.segments)

    def project(self, x: float, y: float) -> TrackProjection:
        """
        Closest point on the polyline; ties go to the earlier piece.
        """
        relative = np.array([x, y]) - self.points[:-1]
        along = np.clip(np.einsum("ij,ij->i", relative, self._directions), 0.0, self._lengths)
        closest = self.points[:-1] + along[:, None] * self._directions
        distances = np.hypot(x - closest[:, 0], y - closest[:, 1])
        i = int(np.argmin(distances))
        cross = self._directions[i, 0] * relative[i, 1] - self._directions[i, 1] * relative[i, 0]
        return TrackProjection(s=float(self.cumulative[i] + along[i]),
                               offset=float(math.copysign(distances[i], cross)) if distances[i] > 0 else 0.0,
                               tangent=float(self._headings[i]))

    def point_at(self, s: float, lateral: float = 0.0) -> Tuple[float, float, float]:
        """
        :return: (x, y, heading) of the point `lateral` meters left of the centerline at arc length s.
        """
        s = float(np.clip(s, 0.0, self.length))
        i = int(min(np.searchsorted(self.cumulative, s, side="right") - 1, len(self._lengths) - 1))
        base = self.points[i] + (s - self.cumulative[i]) * self._directions[i]
        normal = np.array([-self._directions[i, 1], self._directions[i, 0]])
        position = base + lateral * normal
        return float(position[0]), float(position[1]), float(self._headings[i])

    def boundary(self, lateral: float) -> np.ndarray:
        """
        Polyline parallel to the centerline at the given signed offset.
        """
        normals = np.stack([-self._directions[:, 1], self._directions[:, 0]], axis=1)
        vertex_normals = np.vstack([normals[:1], (normals[:-1] + normals[1:]) / 2.0, normals[-1:]])
        vertex_normals /= np.linalg.norm(vertex_normals, axis=1, keepdims=True)
        return self.points + lateral * vertex_normals
