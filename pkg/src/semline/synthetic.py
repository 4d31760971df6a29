"""Synthetic scenes with planted region-boundary lines and oracle score providers.

An oracle stands in for trained networks: candidate probabilities fall off
with Hough-space distance to the nearest planted line, offsets regress onto
that line when the candidate is close to it, and pair harmony follows the
soft-label rule for pairs that sit on two different planted lines. Gaussian
noise is added to probabilities, offsets and harmony.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ImageFrame, Line, partition, to_endpoints
from .hough import HoughGrid, generate
from .scoring import ScoredCandidates, TableHarmonyScorer, harmony_label

PROB_SPREAD = 3.0      # bins; width of the probability bump around a planted line
OFFSET_REACH = 2.5     # bins; offsets are only regressed this close to a line
HARMONY_UNIT = 5.0     # bins per unit of disturbance in the harmony label
PAIR_MIN_PROB = 0.2    # only candidates this likely get stored pair scores


@dataclass
class Scene:
    image: np.ndarray
    lines: list[Line]
    frame: ImageFrame


def _line_offset(cand: Line, target: Line) -> tuple[float, float]:
    """(d_rho, d_phi) taking ``cand`` onto ``target`` through the nearer polar form."""
    best = None
    for rho, phi in ((target.rho, target.phi), (-target.rho, target.phi - math.pi),
                     (-target.rho, target.phi + math.pi)):
        d = (rho - cand.rho, phi - cand.phi)
        if best is None or abs(d[1]) < abs(best[1]):
            best = d
    return best


def _bin_distance(grid: HoughGrid, cand: Line, target: Line) -> float:
    d_rho, d_phi = _line_offset(cand, target)
    return math.hypot(d_rho / grid.rho_step, d_phi / grid.phi_step)


def random_scene(rng: np.random.Generator, frame: ImageFrame = ImageFrame(160, 120),
                 n_lines: int | None = None, min_separation: float = 6.0,
                 min_region_fraction: float = 0.02, grid: HoughGrid | None = None) -> Scene:
    """Plant 2-4 well separated lines and paint each region a distinct flat color."""
    grid = grid or generate(frame)
    n = int(rng.integers(2, 5)) if n_lines is None else n_lines
    for _ in range(10000):
        lines = []
        while len(lines) < n:
            phi = rng.uniform(0, math.pi)
            limit = 0.7 * (abs(math.sin(phi)) * (frame.width - 1) / 2
                           + abs(math.cos(phi)) * (frame.height - 1) / 2)
            cand = Line(rng.uniform(-limit, limit), phi)
            if all(_bin_distance(grid, cand, other) >= min_separation for other in lines):
                lines.append(cand)
        part = partition(lines, frame)
        if part.areas.min() >= min_region_fraction * frame.width * frame.height:
            break
    else:
        raise RuntimeError("could not place well separated lines")
    palette = rng.permutation(216)[:part.region_count]
    colors = np.stack([palette // 36, (palette // 6) % 6, palette % 6], axis=1) * 51
    image = colors[part.labels].astype(np.uint8)
    return Scene(image, lines, frame)


def oracle_scores(scene: Scene, grid: HoughGrid, rng: np.random.Generator,
                  sigma: float = 0.05) -> tuple[ScoredCandidates, dict[tuple[int, int], float]]:
    """Noisy oracle probabilities/offsets and a sparse pair-harmony table for ``scene``."""
    n = grid.size
    nearest = np.full(n, -1)
    dist = np.full(n, np.inf)
    offset = np.zeros((n, 2))
    for k in np.flatnonzero(grid.valid):
        cand = grid.line(k)
        for g, line in enumerate(scene.lines):
            d = _bin_distance(grid, cand, line)
            if d < dist[k]:
                dist[k], nearest[k] = d, g
                offset[k] = _line_offset(cand, line)
    prob = np.exp(-dist ** 2 / (2 * PROB_SPREAD ** 2))
    prob = np.clip(prob + rng.normal(0, sigma, n), 0.0, 1.0)
    far = dist > OFFSET_REACH
    offset[far] = 0.0
    offset[~far] += rng.normal(0, sigma, (int((~far).sum()), 2)) * (grid.rho_step, grid.phi_step)
    scores = ScoredCandidates.for_grid(grid, prob, offset)

    keep = [int(k) for k in np.flatnonzero(scores.prob >= PAIR_MIN_PROB)]
    d_unit = dist / HARMONY_UNIT
    pairs = {}
    for a, i in enumerate(keep):
        for j in keep[a:]:
            if i == j:
                h = harmony_label(d_unit[i], d_unit[i])
            elif nearest[i] == nearest[j]:
                h = 0.0
            else:
                h = harmony_label(d_unit[i], d_unit[j])
            pairs[(i, j)] = float(np.clip(h + rng.normal(0, sigma), 0.0, 1.0))
    return scores, pairs


def oracle_harmony(grid: HoughGrid, pairs) -> TableHarmonyScorer:
    return TableHarmonyScorer(grid, pairs)


def scene_endpoints(scene: Scene) -> list[tuple[float, float, float, float]]:
    out = []
    for line in scene.lines:
        (x1, y1), (x2, y2) = to_endpoints(line, scene.frame)
        out.append((x1, y1, x2, y2))
    return out

