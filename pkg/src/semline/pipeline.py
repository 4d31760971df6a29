"""End-to-end detection: candidates, scores, selection, harmony graph, clique, refinement."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ImageFrame, Line
from .hough import DEFAULT_PHI_BINS, DEFAULT_RHO_BINS, HoughGrid, generate
from .mwcs import DEFAULT_KAPPA, MAX_NODES, build_graph, max_weight_clique, refine
from .scoring import (HarmonyScorer, ScoredCandidates, gradient_magnitude,
                      heuristic_harmony_scorer, heuristic_line_scorer)
from .selection import DEFAULT_K, DEFAULT_RADIUS, select_and_remove

ABLATION_STOP_PROB = 0.5


@dataclass(frozen=True)
class DetectionConfig:
    rho_bins: int = DEFAULT_RHO_BINS
    phi_bins: int = DEFAULT_PHI_BINS
    k: int = DEFAULT_K
    removal_radius: int = DEFAULT_RADIUS
    kappa: float = DEFAULT_KAPPA
    scorer: str = "heuristic"
    metric_scale: float = 1.0
    stop_prob: float | None = None
    use_harmony: bool = True
    use_offset: bool = True

    def __post_init__(self):
        if not 1 <= self.k <= MAX_NODES:
            raise ValueError(f"k must lie in [1, {MAX_NODES}]")
        if self.scorer not in ("file", "heuristic"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if not 0.0 <= self.kappa < 1.0:
            raise ValueError("kappa must lie in [0, 1)")

    @property
    def effective_stop_prob(self) -> float | None:
        if self.stop_prob is None and not self.use_harmony:
            return ABLATION_STOP_PROB
        return self.stop_prob


@dataclass
class Detection:
    image_id: str
    frame: ImageFrame
    lines: list[Line]
    energy: float
    candidate_indices: list[int]
    probabilities: list[float]
    fallback: bool = False
    selected: list[int] = field(default_factory=list)
    weights: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        """JSON-ready diagnostics; floats round-trip exactly."""
        out = {
            "energy": self.energy,
            "fallback": self.fallback,
            "candidates": self.candidate_indices,
            "probabilities": self.probabilities,
            "selected": self.selected,
        }
        if self.weights is not None:
            out["harmony"] = self.weights.tolist()
        if self.warnings:
            out["warnings"] = self.warnings
        return out


def detect(grid: HoughGrid, scores: ScoredCandidates, harmony: HarmonyScorer | None,
           config: DetectionConfig = DetectionConfig(), image_id: str = "") -> Detection:
    """Run selection, graph construction, clique search and refinement on precomputed scores."""
    sel = select_and_remove(scores, grid, config.k, config.removal_radius,
                            stop_prob=config.effective_stop_prob)
    nodes = [grid.line(i) for i in sel.selected]
    if config.use_harmony and nodes:
        graph = build_graph(nodes, harmony, sel.selected)
        clique = max_weight_clique(graph, config.kappa)
        members = list(clique.members)
        energy, fallback, weights = clique.energy, clique.fallback, graph.weights
    else:
        members = list(range(len(nodes)))
        energy, fallback, weights = 0.0, False, None
    chosen = [sel.selected[m] for m in members]
    lines = [nodes[m] for m in members]
    warnings = []
    if config.use_offset:
        lines, warnings = refine(lines, scores.offset[chosen], grid.frame)
    return Detection(
        image_id=image_id,
        frame=grid.frame,
        lines=lines,
        energy=float(energy),
        candidate_indices=[int(c) for c in chosen],
        probabilities=[float(scores.prob[c]) for c in chosen],
        fallback=fallback,
        selected=[int(s) for s in sel.selected],
        weights=weights,
        warnings=warnings,
    )


def detect_image(image, config: DetectionConfig = DetectionConfig(), image_id: str = "") -> Detection:
    """Detect with the heuristic providers computed from the image itself."""
    img = np.asarray(image)
    frame = ImageFrame(img.shape[1], img.shape[0])
    grid = generate(frame, config.rho_bins, config.phi_bins)
    scores = heuristic_line_scorer(gradient_magnitude(img), grid)
    harmony = heuristic_harmony_scorer(img, grid, config.removal_radius)
    return detect(grid, scores, harmony, config, image_id)
