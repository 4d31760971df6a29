"""Score providers for candidate lines and line pairs.

Two kinds of provider feed the detector:

* per-candidate scores (:class:`ScoredCandidates`): a probability that the
  candidate is semantic plus a ``(d_rho, d_phi)`` refinement offset;
* pairwise harmony (:class:`HarmonyScorer`): ``pair_score(a, b)`` in ``[0, 1]``
  and ``self_score(a) == pair_score(a, a)``.

The heuristic providers here are stand-ins built from line pooling and
inter-region statistics; they are not trained models. :func:`file_scorer`
reads precomputed scores (see :mod:`semline.io` for the format).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import DimensionMismatch
from .geometry import ImageFrame, Line, RegionPartition, intersects, pixels_along, side_mask
from .hough import HoughGrid


@dataclass(frozen=True)
class ScoredCandidates:
    prob: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        offset = np.asarray(self.offset, dtype=float)
        if offset.shape != (len(prob), 2):
            raise ValueError(f"offset must have shape ({len(prob)}, 2), got {offset.shape}")
        if np.any(~np.isfinite(prob)) or np.any((prob < 0) | (prob > 1)):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.any(~np.isfinite(offset)):
            raise ValueError("offsets must be finite")
        object.__setattr__(self, "prob", prob)
        object.__setattr__(self, "offset", offset)

    @classmethod
    def for_grid(cls, grid: HoughGrid, prob, offset=None) -> "ScoredCandidates":
        """Bind scores to ``grid``, zeroing candidates that miss the frame."""
        prob = np.array(prob, dtype=float)
        if prob.shape != (grid.size,):
            raise DimensionMismatch(f"{prob.size} scores for a grid of {grid.size} candidates")
        prob[~grid.valid] = 0.0
        if offset is None:
            offset = np.zeros((grid.size, 2))
        return cls(prob, offset)

    def __len__(self):
        return len(self.prob)


@runtime_checkable
class HarmonyScorer(Protocol):
    def pair_score(self, a: Line, b: Line) -> float: ...

    def self_score(self, a: Line) -> float: ...


def _ordered(a: Line, b: Line) -> tuple[Line, Line]:
    return (a, b) if (a.rho, a.phi) <= (b.rho, b.phi) else (b, a)


def as_feature_map(values) -> np.ndarray:
    """Coerce an (H, W) or (C, H, W) array into a float (C, H, W) feature map."""
    fmap = np.asarray(values, dtype=float)
    if fmap.ndim == 2:
        fmap = fmap[None]
    if fmap.ndim != 3:
        raise ValueError(f"feature map must be 2-D or 3-D, got shape {fmap.shape}")
    if not np.all(np.isfinite(fmap)):
        raise ValueError("feature map contains non-finite values")
    return fmap


def map_frame(fmap: np.ndarray) -> ImageFrame:
    return ImageFrame(fmap.shape[-1], fmap.shape[-2])


def line_pool(fmap, line: Line) -> np.ndarray:
    """Mean of each channel over the rasterized pixels of ``line``."""
    fmap = as_feature_map(fmap)
    px = pixels_along(line, map_frame(fmap))
    return fmap[:, px[:, 1], px[:, 0]].mean(axis=1)


def softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    e = np.exp(x - x.max())
    return e / e.sum()


@dataclass(frozen=True)
class RegionFeatures:
    means: np.ndarray    # (M, C) per-region mean feature
    weights: np.ndarray  # (M,) softmax of area fractions
    stacked: np.ndarray  # (C, max(4, M)) weighted means, zero-padded on the right


def region_features(fmap, part: RegionPartition) -> RegionFeatures:
    fmap = as_feature_map(fmap)
    if fmap.shape[1:] != part.labels.shape:
        raise DimensionMismatch(f"feature map {fmap.shape[1:]} vs partition {part.labels.shape}")
    c = fmap.shape[0]
    flat = part.labels.ravel()
    sums = np.stack([np.bincount(flat, weights=fmap[ch].ravel(), minlength=part.region_count)
                     for ch in range(c)], axis=1)
    means = sums / part.areas[:, None]
    weights = softmax(part.areas / part.areas.sum())
    stacked = np.zeros((c, max(4, part.region_count)))
    stacked[:, :part.region_count] = (means * weights[:, None]).T
    return RegionFeatures(means, weights, stacked)


def to_grayscale(image) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.299, 0.587, 0.114])[: img.shape[-1]]
    return img


def gradient_magnitude(image) -> np.ndarray:
    """Central-difference gradient magnitude of the grayscale image."""
    gy, gx = np.gradient(to_grayscale(image))
    return np.hypot(gx, gy)


def heuristic_line_scorer(gradient, grid: HoughGrid) -> ScoredCandidates:
    """Probabilities from pooled gradient magnitude, rescaled by the best candidate."""
    fmap = as_feature_map(gradient)
    if map_frame(fmap) != grid.frame:
        raise DimensionMismatch("gradient map and grid frames differ")
    pooled = np.zeros(grid.size)
    for k in np.flatnonzero(grid.valid):
        pooled[k] = line_pool(fmap, grid.line(k)).mean()
    top = pooled.max()
    prob = pooled / top if top > 0 else pooled
    return ScoredCandidates.for_grid(grid, np.clip(prob, 0.0, 1.0))


def hough_distance(a: Line, b: Line, rho_step: float, phi_step: float) -> float:
    """Euclidean distance in bin units, taking the nearer of b's two polar forms."""
    best = math.inf
    for rho, phi in ((b.rho, b.phi), (-b.rho, b.phi - math.pi), (-b.rho, b.phi + math.pi)):
        d = math.hypot((a.rho - rho) / rho_step, (a.phi - phi) / phi_step)
        best = min(best, d)
    return best


def disturbance(line: Line, reference: Line, grid: HoughGrid) -> float:
    """How far ``line`` is moved from ``reference``, in Hough bin units."""
    return hough_distance(line, reference, grid.rho_step, grid.phi_step)


def harmony_label(d_i: float, d_j: float) -> float:
    """Soft harmony target for a positive pair disturbed by ``d_i`` and ``d_j``."""
    return math.exp(-(d_i * d_i + d_j * d_j))


def harmony_loss(h: float, h_bar: float) -> float:
    return (h - h_bar) ** 2


class HeuristicHarmonyScorer:
    """Harmony from color contrast across the regions a line pair creates.

    ``h(a, b) = irc(a, b) * redundancy(a, b) * (unary(a) + unary(b)) / 2`` where
    ``unary`` is the squashed contrast between the two sides of one line,
    ``irc`` the squashed mean contrast between adjacent regions of the pair, and
    ``redundancy`` falls to zero as the lines approach each other in Hough space.
    For a duplicated input the score is ``unary(a)``.
    """

    def __init__(self, features, grid: HoughGrid, radius: int = 2, contrast_scale: float = 0.1):
        self.features = as_feature_map(features)
        if map_frame(self.features) != grid.frame:
            raise DimensionMismatch("feature map and grid frames differ")
        self.grid = grid
        self.frame = grid.frame
        self.radius = radius
        self.contrast_scale = contrast_scale
        self._unary = {}

    def _squash(self, distance: float) -> float:
        return 1.0 - math.exp(-distance / self.contrast_scale)

    def _side_means(self, masks) -> dict[int, np.ndarray]:
        code = np.zeros(self.frame.height * self.frame.width, dtype=np.int64)
        for bit, m in enumerate(masks):
            code |= m.ravel().astype(np.int64) << bit
        present = np.unique(code)
        flat = self.features.reshape(self.features.shape[0], -1)
        return {int(c): flat[:, code == c].mean(axis=1) for c in present}

    def unary(self, a: Line) -> float:
        if a not in self._unary:
            if not intersects(a, self.frame):
                self._unary[a] = 0.0
            else:
                means = self._side_means([side_mask(a, self.frame)])
                if len(means) < 2:
                    self._unary[a] = 0.0
                else:
                    self._unary[a] = self._squash(float(np.linalg.norm(means[0] - means[1])))
        return self._unary[a]

    def irc(self, a: Line, b: Line) -> float:
        means = self._side_means([side_mask(a, self.frame), side_mask(b, self.frame)])
        dists = [np.linalg.norm(means[p] - means[q])
                 for p, q in ((0, 1), (2, 3), (0, 2), (1, 3)) if p in means and q in means]
        if not dists:
            return 0.0
        return self._squash(float(np.mean(dists)))

    def redundancy(self, a: Line, b: Line) -> float:
        d = disturbance(a, b, self.grid)
        return 1.0 - math.exp(-(d / (self.radius + 1)) ** 2)

    def self_score(self, a: Line) -> float:
        return self.unary(a)

    def pair_score(self, a: Line, b: Line) -> float:
        if a == b:
            return self.self_score(a)
        a, b = _ordered(a, b)
        if not (intersects(a, self.frame) and intersects(b, self.frame)):
            return 0.0
        h = self.irc(a, b) * self.redundancy(a, b) * 0.5 * (self.unary(a) + self.unary(b))
        return min(max(h, 0.0), 1.0)


def heuristic_harmony_scorer(image, grid: HoughGrid, radius: int = 2) -> HeuristicHarmonyScorer:
    """Build the heuristic scorer from an RGB or gray image scaled to [0, 255]."""
    img = np.asarray(image, dtype=float) / 255.0
    fmap = np.moveaxis(img, -1, 0) if img.ndim == 3 else img
    return HeuristicHarmonyScorer(fmap, grid, radius)


class TableHarmonyScorer:
    """Harmony looked up from stored candidate-index pairs; missing pairs score 0."""

    def __init__(self, grid: HoughGrid, pairs=None):
        self.grid = grid
        self._table = {}
        for (i, j), h in (pairs or {}).items():
            self._table[(min(i, j), max(i, j))] = float(h)

    @property
    def pairs(self) -> dict[tuple[int, int], float]:
        return dict(self._table)

    def score_indices(self, i: int, j: int) -> float:
        return self._table.get((min(i, j), max(i, j)), 0.0)

    def self_score(self, a: Line) -> float:
        k = self.grid.lookup(a)
        return self.score_indices(k, k)

    def pair_score(self, a: Line, b: Line) -> float:
        if a == b:
            return self.self_score(a)
        return self.score_indices(self.grid.lookup(a), self.grid.lookup(b))


class ConstantHarmonyScorer:
    def __init__(self, value: float, self_value: float | None = None):
        self.value = float(value)
        self.self_value = float(value if self_value is None else self_value)

    def self_score(self, a: Line) -> float:
        return self.self_value

    def pair_score(self, a: Line, b: Line) -> float:
        return self.self_value if a == b else self.value


def file_scorer(path, grid: HoughGrid | None = None):
    """Load ``(ScoredCandidates | None, TableHarmonyScorer, HoughGrid)`` from a score file.

    When ``grid`` is given the file header must match it.
    """
    from .io import read_score_file

    sf = read_score_file(path)
    file_grid = sf.grid()
    if grid is not None and (grid.rho_bins, grid.phi_bins, grid.frame) != (
            file_grid.rho_bins, file_grid.phi_bins, file_grid.frame):
        raise DimensionMismatch(
            f"{path}: score grid {sf.rho_bins}x{sf.phi_bins} on {sf.width}x{sf.height} does not "
            f"match active grid {grid.rho_bins}x{grid.phi_bins} on "
            f"{grid.frame.width}x{grid.frame.height}")
    grid = grid or file_grid
    scores = None
    if sf.prob is not None:
        scores = ScoredCandidates.for_grid(grid, sf.prob, sf.offset)
    return scores, TableHarmonyScorer(grid, sf.pairs), grid
