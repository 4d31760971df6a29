"""Complete harmony graph over selected lines and exhaustive maximal-weight clique search."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NoIntersection
from .geometry import ImageFrame, Line, intersects
from .scoring import HarmonyScorer

log = logging.getLogger(__name__)

MAX_NODES = 16
DEFAULT_KAPPA = 0.5


@dataclass(frozen=True)
class HarmonyGraph:
    lines: tuple[Line, ...]
    weights: np.ndarray
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        k = len(w)
        if w.shape != (k, k) or not 1 <= k <= MAX_NODES:
            raise ValueError(f"weights must be square with 1..{MAX_NODES} nodes, got {w.shape}")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any((w < 0) | (w > 1)):
            raise ValueError("weights must lie in [0, 1]")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def from_matrix(cls, weights) -> "HarmonyGraph":
        k = len(weights)
        return cls(tuple(Line(0.0, 0.0) for _ in range(k)), weights)


@dataclass(frozen=True)
class Clique:
    members: tuple[int, ...]
    energy: float
    fallback: bool = False


def build_graph(lines, scorer: HarmonyScorer, indices=()) -> HarmonyGraph:
    """Fill the K x K harmony matrix: one ``pair_score`` per unordered pair, ``self_score`` on the diagonal."""
    lines = tuple(lines)
    k = len(lines)
    if not 1 <= k <= MAX_NODES:
        raise ValueError(f"graph needs 1..{MAX_NODES} nodes, got {k}")
    w = np.zeros((k, k))
    for i in range(k):
        w[i, i] = scorer.self_score(lines[i])
        for j in range(i + 1, k):
            w[i, j] = w[j, i] = scorer.pair_score(lines[i], lines[j])
    return HarmonyGraph(lines, w, tuple(indices))


def harmony_energy(graph: HarmonyGraph, members) -> float:
    """Sum of edge weights inside ``members``; 0 for fewer than two nodes."""
    m = sorted(set(members))
    w = graph.weights
    total = 0.0
    for a, i in enumerate(m):
        for j in m[a + 1:]:
            total += w[i, j]
    return float(total)


def _subset_table(k: int):
    masks = np.arange(1 << k, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
    return masks, bits


def max_weight_clique(graph: HarmonyGraph, kappa: float = DEFAULT_KAPPA) -> Clique:
    """Best node subset of size >= 2 whose weakest internal edge exceeds ``kappa``.

    Subsets are ranked by energy, then by size (larger first), then by their
    sorted member tuple. With no feasible subset, the single node with the
    largest self-harmony is returned (lowest index on ties).
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError("kappa must lie in [0, 1)")
    k = graph.size
    w = graph.weights
    masks, bits = _subset_table(k)
    energy = np.zeros(len(masks))
    weakest = np.full(len(masks), np.inf)
    for i in range(k):
        for j in range(i + 1, k):
            both = bits[:, i] & bits[:, j]
            energy[both] += w[i, j]
            np.minimum(weakest, np.where(both, w[i, j], np.inf), out=weakest)
    size = bits.sum(axis=1)
    feasible = (size >= 2) & (weakest > kappa)
    if not feasible.any():
        best = int(np.argmax(np.diag(w)))
        return Clique((best,), 0.0, fallback=True)
    top = energy[feasible].max()
    tied = masks[feasible & (energy == top)]
    members = min((tuple(np.flatnonzero(bits[m])) for m in tied), key=lambda t: (-len(t), t))
    return Clique(tuple(int(i) for i in members), float(top))


def refine(lines, offsets, frame: ImageFrame) -> tuple[list[Line], list[str]]:
    """Add each line's ``(d_rho, d_phi)`` offset; lines pushed out of frame stay unrefined."""
    out, warnings = [], []
    for line, (d_rho, d_phi) in zip(lines, offsets):
        moved = line.shifted(float(d_rho), float(d_phi))
        if intersects(moved, frame):
            out.append(moved)
        else:
            msg = str(NoIntersection(f"refined line (rho={moved.rho:.4g}, phi={moved.phi:.4g}) "
                                     f"leaves the frame; keeping the unrefined line"))
            log.warning(msg)
            warnings.append(msg)
            out.append(line)
    return out, warnings
