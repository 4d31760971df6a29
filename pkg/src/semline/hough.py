"""Uniform (rho, phi) candidate lattice and its removal neighborhoods.

Candidate ``k`` sits at ``(k // phi_bins, k % phi_bins)`` in (rho_index,
phi_index). Rho bins are centered inside ``[-rho_max, rho_max]``; phi bins start
at zero and step by ``pi / phi_bins``, so horizontal lines are always on the
grid and vertical ones are whenever ``phi_bins`` is even.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange
from .geometry import ImageFrame, Line, max_rho

DEFAULT_RHO_BINS = 30
DEFAULT_PHI_BINS = 30


@dataclass(frozen=True)
class HoughGrid:
    frame: ImageFrame
    rho_bins: int
    phi_bins: int
    rho_max: float
    rho_values: np.ndarray = field(repr=False)
    phi_values: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.rho_bins * self.phi_bins

    @property
    def rho_step(self) -> float:
        return 2.0 * self.rho_max / self.rho_bins

    @property
    def phi_step(self) -> float:
        return math.pi / self.phi_bins

    def index(self, rho_index: int, phi_index: int) -> int:
        return rho_index * self.phi_bins + phi_index

    def unravel(self, k: int) -> tuple[int, int]:
        self._check(k)
        return divmod(int(k), self.phi_bins)

    def params(self, k: int) -> tuple[float, float]:
        i, j = self.unravel(k)
        return float(self.rho_values[i]), float(self.phi_values[j])

    def line(self, k: int) -> Line:
        return Line(*self.params(k))

    def lines(self) -> list[Line]:
        return [self.line(k) for k in range(self.size)]

    def lookup(self, line: Line) -> int:
        """Index of the bin center nearest to ``line`` (phi wrap aware)."""
        best, best_d = 0, math.inf
        for rho, phi in ((line.rho, line.phi), (-line.rho, line.phi - math.pi),
                         (-line.rho, line.phi + math.pi)):
            j = int(round(phi / self.phi_step))
            if not 0 <= j < self.phi_bins:
                continue
            i = int(round((rho + self.rho_max) / self.rho_step - 0.5))
            i = min(max(i, 0), self.rho_bins - 1)
            d = (((rho - self.rho_values[i]) / self.rho_step) ** 2
                 + ((phi - self.phi_values[j]) / self.phi_step) ** 2)
            if d < best_d:
                best, best_d = self.index(i, j), d
        return best

    def _check(self, k):
        if not 0 <= int(k) < self.size:
            raise IndexOutOfRange(f"candidate index {k} outside [0, {self.size})")


def generate(frame: ImageFrame, rho_bins: int = DEFAULT_RHO_BINS,
             phi_bins: int = DEFAULT_PHI_BINS) -> HoughGrid:
    """Quantize (rho, phi) into ``rho_bins * phi_bins`` candidates over ``frame``."""
    if rho_bins < 1 or phi_bins < 1:
        raise ValueError("rho_bins and phi_bins must be >= 1")
    rho_max = frame.half_diagonal
    step = 2.0 * rho_max / rho_bins
    rho_values = -rho_max + (np.arange(rho_bins) + 0.5) * step
    phi_values = np.arange(phi_bins) * (math.pi / phi_bins)
    limits = np.array([max_rho(p, frame) for p in phi_values])
    valid = np.abs(rho_values)[:, None] <= limits[None, :] + 1e-9
    for a in (rho_values, phi_values, valid):
        a.flags.writeable = False
    return HoughGrid(frame, rho_bins, phi_bins, rho_max, rho_values, phi_values,
                     valid.ravel())


def grid_distance(grid: HoughGrid, a: int, b: int) -> int:
    """Chebyshev distance in index space, with phi wrapping."""
    ia, ja = grid.unravel(a)
    ib, jb = grid.unravel(b)
    dj = abs(ja - jb)
    return max(abs(ia - ib), min(dj, grid.phi_bins - dj))


def neighborhood(grid: HoughGrid, index: int, radius: int) -> set[int]:
    """All candidates within ``radius`` of ``index``; rho clamps, phi wraps."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    i0, j0 = grid.unravel(index)
    rows = range(max(0, i0 - radius), min(grid.rho_bins - 1, i0 + radius) + 1)
    cols = {(j0 + dj) % grid.phi_bins for dj in range(-radius, radius + 1)}
    return {grid.index(i, j) for i in rows for j in cols}


def neighborhood_array(grid: HoughGrid, index: int, radius: int) -> np.ndarray:
    return np.fromiter(sorted(neighborhood(grid, index, radius)), dtype=np.int64)
