"""Greedy selection-and-removal over the Hough grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoCandidates
from .hough import HoughGrid, neighborhood_array
from .scoring import ScoredCandidates

DEFAULT_K = 8
DEFAULT_RADIUS = 2


@dataclass(frozen=True)
class SelectionResult:
    selected: list[int]
    suppressed: dict[int, int] = field(default_factory=dict)
    removed_per_step: list[int] = field(default_factory=list)


def select_and_remove(scores: ScoredCandidates, grid: HoughGrid, k: int = DEFAULT_K,
                      radius: int = DEFAULT_RADIUS, stop_prob: float | None = None) -> SelectionResult:
    """Pick the most probable candidate, drop its neighborhood, repeat ``k`` times.

    Ties go to the lowest index. Stops early once no remaining candidate has a
    positive probability, or, with ``stop_prob``, once the best remaining one
    falls below it. ``removed_per_step[t]`` counts the cells masked at step ``t``
    including the pick itself.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if len(scores) != grid.size:
        raise ValueError(f"{len(scores)} scores for a grid of {grid.size} candidates")
    prob = np.where(grid.valid, scores.prob, 0.0)
    if not np.any(prob > 0):
        raise NoCandidates("every candidate has probability 0")
    alive = np.ones(grid.size, dtype=bool)
    selected, suppressed, removed = [], {}, []
    for _ in range(k):
        masked = np.where(alive, prob, -1.0)
        best = int(np.argmax(masked))
        if masked[best] <= 0 or (stop_prob is not None and masked[best] < stop_prob):
            break
        selected.append(best)
        hood = neighborhood_array(grid, best, radius)
        fresh = hood[alive[hood]]
        for j in fresh:
            if j != best:
                suppressed[int(j)] = best
        alive[fresh] = False
        removed.append(len(fresh))
    return SelectionResult(selected, suppressed, removed)
