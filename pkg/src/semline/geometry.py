"""Polar lines inside an image frame: clipping, rasterization and region partitions.

Coordinates are continuous pixel coordinates with x to the right and y
downward. Pixel ``(x, y)`` has its center at integer ``(x, y)``, so the frame
rectangle spans ``[0, width-1] x [0, height-1]`` and its center is
``((width-1)/2, (height-1)/2)``.

A line ``(rho, phi)`` has direction ``(cos phi, sin phi)`` and unit normal
``(sin phi, -cos phi)``; every point ``p`` on it satisfies
``(p - center) . normal == rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyUnion, NoIntersection, TooManyLines

MAX_PARTITION_LINES = 16
ON_LINE_EPS = 1e-9
_CLIP_EPS = 1e-9


@dataclass(frozen=True)
class ImageFrame:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError("frame dimensions must be integers")
        if self.width < 2 or self.height < 2:
            raise ValueError(f"frame must be at least 2x2, got {self.width}x{self.height}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width - 1, self.height - 1)

    @property
    def half_diagonal(self) -> float:
        return self.diagonal / 2.0

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Center-relative x and y coordinates of every pixel, shape (height, width)."""
        cx, cy = self.center
        ys, xs = np.mgrid[0:self.height, 0:self.width]
        return xs - cx, ys - cy


def canonical(rho: float, phi: float) -> tuple[float, float]:
    """Map ``(rho, phi)`` to the equivalent form with ``phi`` in ``[0, pi)``."""
    k = math.floor(phi / math.pi)
    phi = phi - k * math.pi
    if k % 2:
        rho = -rho
    if phi >= math.pi:
        phi -= math.pi
        rho = -rho
    if phi < 0.0:
        phi = 0.0
    return float(rho), float(phi)


@dataclass(frozen=True)
class Line:
    """A line in canonical polar form, ``phi`` in ``[0, pi)``."""

    rho: float
    phi: float

    def __post_init__(self):
        rho, phi = canonical(self.rho, self.phi)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)

    @property
    def normal(self) -> tuple[float, float]:
        return (math.sin(self.phi), -math.cos(self.phi))

    @property
    def direction(self) -> tuple[float, float]:
        return (math.cos(self.phi), math.sin(self.phi))

    @classmethod
    def from_endpoints(cls, p1, p2, frame: ImageFrame) -> "Line":
        """Fit the canonical polar line through two distinct points."""
        (x1, y1), (x2, y2) = p1, p2
        dx, dy = x2 - x1, y2 - y1
        if dx == 0 and dy == 0:
            raise ValueError("endpoints coincide")
        phi = math.atan2(dy, dx)
        cx, cy = frame.center
        rho = (x1 - cx) * math.sin(phi) - (y1 - cy) * math.cos(phi)
        return cls(rho, phi)

    def signed_distance(self, x, y, frame: ImageFrame):
        """``(p - center) . normal - rho`` for points given in absolute coordinates."""
        cx, cy = frame.center
        nx, ny = self.normal
        return (np.asarray(x) - cx) * nx + (np.asarray(y) - cy) * ny - self.rho

    def shifted(self, d_rho: float, d_phi: float) -> "Line":
        return Line(self.rho + d_rho, self.phi + d_phi)


def max_rho(phi: float, frame: ImageFrame) -> float:
    """Largest |rho| at angle ``phi`` for which the line still touches the frame."""
    hw = (frame.width - 1) / 2.0
    hh = (frame.height - 1) / 2.0
    return abs(math.sin(phi)) * hw + abs(math.cos(phi)) * hh


def intersects(line: Line, frame: ImageFrame) -> bool:
    return abs(line.rho) <= max_rho(line.phi, frame) + _CLIP_EPS


def to_endpoints(line: Line, frame: ImageFrame) -> tuple[tuple[float, float], tuple[float, float]]:
    """Clip the infinite line to the frame rectangle.

    Returns the two boundary points ordered by x, then y.

    Raises:
        NoIntersection: if the line misses the frame.
    """
    if not intersects(line, frame):
        raise NoIntersection(f"line (rho={line.rho:.6g}, phi={line.phi:.6g}) misses the "
                             f"{frame.width}x{frame.height} frame")
    cx, cy = frame.center
    nx, ny = line.normal
    dx, dy = line.direction
    # foot of the perpendicular from the center, then clip the parameter t
    ox, oy = cx + line.rho * nx, cy + line.rho * ny
    t_lo, t_hi = -math.inf, math.inf
    for o, d, hi in ((ox, dx, frame.width - 1), (oy, dy, frame.height - 1)):
        if abs(d) < 1e-15:
            continue
        a, b = (0.0 - o) / d, (hi - o) / d
        if a > b:
            a, b = b, a
        t_lo, t_hi = max(t_lo, a), min(t_hi, b)
    if t_lo > t_hi:
        # tangent within tolerance at a corner
        t_lo = t_hi = (t_lo + t_hi) / 2.0
    p = (_clamp(ox + t_lo * dx, frame.width - 1), _clamp(oy + t_lo * dy, frame.height - 1))
    q = (_clamp(ox + t_hi * dx, frame.width - 1), _clamp(oy + t_hi * dy, frame.height - 1))
    return (p, q) if p <= q else (q, p)


def _clamp(v: float, hi: float) -> float:
    if abs(v) < 1e-9:
        return 0.0
    if abs(v - hi) < 1e-9:
        return float(hi)
    return min(max(v, 0.0), float(hi))


def _round_half_up(v):
    return np.floor(np.asarray(v, dtype=float) + 0.5).astype(np.int64)


def pixels_along(line: Line, frame: ImageFrame) -> np.ndarray:
    """Rasterize the clipped line with one pixel per step along its dominant axis.

    Returns an ``(n, 2)`` integer array of ``(x, y)`` pixel coordinates.
    """
    (x1, y1), (x2, y2) = to_endpoints(line, frame)
    cx, cy = frame.center
    nx, ny = line.normal
    if abs(x2 - x1) >= abs(y2 - y1):
        lo, hi = sorted((int(_round_half_up(x1)), int(_round_half_up(x2))))
        xs = np.arange(lo, hi + 1)
        # solve (x-cx)*nx + (y-cy)*ny = rho for y; |ny| >= 1/sqrt2 here
        ys = cy + (line.rho - (xs - cx) * nx) / ny
        ys = np.clip(_round_half_up(ys), 0, frame.height - 1)
    else:
        lo, hi = sorted((int(_round_half_up(y1)), int(_round_half_up(y2))))
        ys = np.arange(lo, hi + 1)
        xs = cx + (line.rho - (ys - cy) * ny) / nx
        xs = np.clip(_round_half_up(xs), 0, frame.width - 1)
    return np.stack([xs, ys], axis=1).astype(np.int64)


def side_mask(line: Line, frame: ImageFrame) -> np.ndarray:
    """Boolean raster, True on the non-negative side of ``line``."""
    gx, gy = frame.pixel_grid()
    nx, ny = line.normal
    return gx * nx + gy * ny - line.rho > -ON_LINE_EPS


@dataclass(frozen=True)
class RegionPartition:
    labels: np.ndarray
    region_count: int
    areas: np.ndarray

    def mask(self, region: int) -> np.ndarray:
        return self.labels == region

    @property
    def frame(self) -> ImageFrame:
        h, w = self.labels.shape
        return ImageFrame(w, h)


def partition(lines, frame: ImageFrame) -> RegionPartition:
    """Label every pixel by its sign vector against all ``lines``.

    Sign classes are compacted to consecutive ids in increasing order of the
    sign-vector code, so equal line sets always produce equal label rasters.
    """
    lines = list(lines)
    if len(lines) > MAX_PARTITION_LINES:
        raise TooManyLines(f"{len(lines)} lines exceed the cap of {MAX_PARTITION_LINES}")
    code = np.zeros((frame.height, frame.width), dtype=np.int64)
    for bit, line in enumerate(lines):
        code |= side_mask(line, frame).astype(np.int64) << bit
    _, labels = np.unique(code, return_inverse=True)
    labels = labels.reshape(code.shape)
    areas = np.bincount(labels.ravel())
    return RegionPartition(labels=labels, region_count=len(areas), areas=areas)


def region_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        raise EmptyUnion("both masks are empty")
    return np.count_nonzero(a & b) / union


def iou_matrix(s: RegionPartition, t: RegionPartition) -> np.ndarray:
    """IoU between every region of ``s`` (rows) and every region of ``t`` (columns)."""
    if s.labels.shape != t.labels.shape:
        raise ValueError("partitions are over different frames")
    joint = s.labels.ravel() * t.region_count + t.labels.ravel()
    inter = np.bincount(joint, minlength=s.region_count * t.region_count)
    inter = inter.reshape(s.region_count, t.region_count).astype(float)
    union = s.areas[:, None] + t.areas[None, :] - inter
    return inter / union
