"""File formats: annotation/prediction records, score files, and binary PGM/PPM.

Annotations and predictions are JSON Lines. The first line is a header object
``{"format": "semline-annotations" | "semline-predictions", "version": 1}``;
each following line is one image::

    {"image_id": "a", "width": 401, "height": 401, "lines": [[x1, y1, x2, y2], ...]}

Score files are CSV with ``#`` header lines and two optional sections::

    #semline-scores v1
    #grid rho_bins=30 phi_bins=30 width=401 height=401
    [candidates]
    candidate_index,prob,delta_rho,delta_phi
    17,0.93,1.5,-0.01
    [pairs]
    i,j,h
    17,244,0.81

Candidates and pairs that are not listed score 0.
"""
from __future__ import annotations

import csv
import io as _io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError
from .geometry import ImageFrame, Line, to_endpoints
from .hough import HoughGrid, generate

log = logging.getLogger(__name__)

ANNOTATION_FORMATS = ("semline-annotations", "semline-predictions")
FORMAT_VERSION = 1
SCORE_MAGIC = "#semline-scores v1"
SNAP_SILENT_PX = 1.0
_EXACT_PX = 1e-6


@dataclass
class AnnotationRecord:
    image_id: str
    width: int
    height: int
    endpoints: list[tuple[float, float, float, float]] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def frame(self) -> ImageFrame:
        return ImageFrame(self.width, self.height)

    @property
    def lines(self) -> list[Line]:
        f = self.frame
        return [Line.from_endpoints((x1, y1), (x2, y2), f) for x1, y1, x2, y2 in self.endpoints]

    @classmethod
    def from_lines(cls, image_id: str, frame: ImageFrame, lines, **extra) -> "AnnotationRecord":
        eps = []
        for line in lines:
            (x1, y1), (x2, y2) = to_endpoints(line, frame)
            eps.append((x1, y1, x2, y2))
        return cls(image_id, frame.width, frame.height, eps, dict(extra))

    def to_json(self) -> dict:
        out = {"image_id": self.image_id, "width": self.width, "height": self.height,
               "lines": [list(e) for e in self.endpoints]}
        out.update(self.extra)
        return out


def snap_to_boundary(x: float, y: float, frame: ImageFrame) -> tuple[float, float, float]:
    """Nearest point on the frame rectangle's boundary, and the distance moved."""
    w, h = frame.width - 1, frame.height - 1
    if 0 <= x <= w and 0 <= y <= h:
        sx, sy = min(((0.0, y, x), (float(w), y, w - x), (x, 0.0, y), (x, float(h), h - y)),
                     key=lambda c: c[2])[:2]
    else:
        sx, sy = min(max(x, 0.0), float(w)), min(max(y, 0.0), float(h))
    return sx, sy, math.hypot(sx - x, sy - y)


def _parse_record(obj, where: str) -> AnnotationRecord:
    try:
        image_id = str(obj["image_id"])
        width, height = obj["width"], obj["height"]
        raw = obj.get("lines", [])
    except (KeyError, TypeError) as e:
        raise ParseError(f"{where}: missing field {e}") from None
    if not (isinstance(width, int) and isinstance(height, int)):
        raise ParseError(f"{where}: width and height must be integers")
    try:
        frame = ImageFrame(width, height)
    except ValueError as e:
        raise ParseError(f"{where}: {e}") from None
    endpoints = []
    for n, quad in enumerate(raw):
        if not (isinstance(quad, (list, tuple)) and len(quad) == 4):
            raise ParseError(f"{where}: line {n} must be [x1, y1, x2, y2]")
        try:
            x1, y1, x2, y2 = (float(v) for v in quad)
        except (TypeError, ValueError):
            raise ParseError(f"{where}: line {n} has non-numeric coordinates") from None
        pts = []
        for x, y in ((x1, y1), (x2, y2)):
            sx, sy, moved = snap_to_boundary(x, y, frame)
            if moved > SNAP_SILENT_PX:
                log.warning("%s: line %d endpoint (%g, %g) is %.2f px off the boundary; snapped",
                            where, n, x, y, moved)
            pts.append((x, y) if moved <= _EXACT_PX else (sx, sy))
        if pts[0] == pts[1]:
            raise ParseError(f"{where}: line {n} has coincident endpoints")
        endpoints.append((pts[0][0], pts[0][1], pts[1][0], pts[1][1]))
    extra = {k: v for k, v in obj.items() if k not in ("image_id", "width", "height", "lines")}
    return AnnotationRecord(image_id, width, height, endpoints, extra)


def load_annotations(path) -> list[AnnotationRecord]:
    """Read a JSON Lines annotation or prediction file.

    Raises:
        ParseError: on a bad header or malformed record (with its line number).
    """
    path = Path(path)
    records, seen = [], set()
    with path.open() as fh:
        header = fh.readline()
        try:
            meta = json.loads(header)
        except json.JSONDecodeError:
            raise ParseError(f"{path}:1: missing format header") from None
        if not isinstance(meta, dict) or meta.get("format") not in ANNOTATION_FORMATS:
            raise ParseError(f"{path}:1: unknown format {meta!r}")
        if meta.get("version") != FORMAT_VERSION:
            raise ParseError(f"{path}:1: unsupported version {meta.get('version')!r}")
        for lineno, text in enumerate(fh, start=2):
            if not text.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as e:
                raise ParseError(f"{where}: {e.msg}") from None
            rec = _parse_record(obj, where)
            if rec.image_id in seen:
                raise ParseError(f"{where}: duplicate image_id {rec.image_id!r}")
            seen.add(rec.image_id)
            records.append(rec)
    return records


def dump_annotations(records, kind: str = "semline-annotations") -> str:
    out = [json.dumps({"format": kind, "version": FORMAT_VERSION})]
    out += [json.dumps(r.to_json()) for r in records]
    return "\n".join(out) + "\n"


def save_annotations(path, records, kind: str = "semline-annotations") -> None:
    Path(path).write_text(dump_annotations(records, kind))


@dataclass
class ScoreFile:
    rho_bins: int
    phi_bins: int
    width: int
    height: int
    prob: np.ndarray | None = None
    offset: np.ndarray | None = None
    pairs: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def frame(self) -> ImageFrame:
        return ImageFrame(self.width, self.height)

    def grid(self) -> HoughGrid:
        return generate(self.frame, self.rho_bins, self.phi_bins)


_GRID_RE = re.compile(r"^#grid\s+(.*)$")


def read_score_file(path) -> ScoreFile:
    path = Path(path)
    text = path.read_text().splitlines()
    if not text or text[0].strip() != SCORE_MAGIC:
        raise ParseError(f"{path}:1: expected {SCORE_MAGIC!r}")
    dims = {}
    section, rows = None, {"candidates": [], "pairs": []}
    for lineno, raw in enumerate(text[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        m = _GRID_RE.match(line)
        if m:
            for tok in m.group(1).split():
                key, _, val = tok.partition("=")
                try:
                    dims[key] = int(val)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad grid field {tok!r}") from None
            continue
        if line.startswith("#"):
            continue
        if line in ("[candidates]", "[pairs]"):
            section = line[1:-1]
            continue
        if section is None:
            raise ParseError(f"{path}:{lineno}: row outside a section")
        if line.split(",")[0] in ("candidate_index", "i"):
            continue
        rows[section].append((lineno, line))
    missing = {"rho_bins", "phi_bins", "width", "height"} - dims.keys()
    if missing:
        raise ParseError(f"{path}: grid header lacks {sorted(missing)}")
    sf = ScoreFile(dims["rho_bins"], dims["phi_bins"], dims["width"], dims["height"])
    try:
        n = sf.grid().size
    except ValueError as e:
        raise ParseError(f"{path}: {e}") from None

    def fields(lineno, line, count, kinds):
        parts = next(csv.reader([line]))
        if len(parts) != count:
            raise ParseError(f"{path}:{lineno}: expected {count} columns, got {len(parts)}")
        try:
            return [k(p) for k, p in zip(kinds, parts)]
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric value") from None

    def check_index(lineno, k):
        if not 0 <= k < n:
            raise ParseError(f"{path}:{lineno}: candidate index {k} outside [0, {n})")

    if rows["candidates"]:
        prob, offset, seen = np.zeros(n), np.zeros((n, 2)), set()
        for lineno, line in rows["candidates"]:
            k, p, dr, dp = fields(lineno, line, 4, (int, float, float, float))
            check_index(lineno, k)
            if not 0.0 <= p <= 1.0:
                raise ParseError(f"{path}:{lineno}: probability {p} outside [0, 1]")
            if not (math.isfinite(dr) and math.isfinite(dp)):
                raise ParseError(f"{path}:{lineno}: non-finite offset")
            if k in seen:
                raise ParseError(f"{path}:{lineno}: duplicate candidate {k}")
            seen.add(k)
            prob[k], offset[k] = p, (dr, dp)
        sf.prob, sf.offset = prob, offset
    for lineno, line in rows["pairs"]:
        i, j, h = fields(lineno, line, 3, (int, int, float))
        check_index(lineno, i)
        check_index(lineno, j)
        if not 0.0 <= h <= 1.0:
            raise ParseError(f"{path}:{lineno}: harmony {h} outside [0, 1]")
        key = (min(i, j), max(i, j))
        if key in sf.pairs:
            raise ParseError(f"{path}:{lineno}: duplicate pair {key}")
        sf.pairs[key] = h
    return sf


def write_score_file(path, grid: HoughGrid, prob=None, offset=None, pairs=None,
                     sparse: bool = True) -> None:
    buf = _io.StringIO()
    buf.write(SCORE_MAGIC + "\n")
    buf.write(f"#grid rho_bins={grid.rho_bins} phi_bins={grid.phi_bins} "
              f"width={grid.frame.width} height={grid.frame.height}\n")
    if prob is not None:
        offset = np.zeros((grid.size, 2)) if offset is None else np.asarray(offset)
        buf.write("[candidates]\ncandidate_index,prob,delta_rho,delta_phi\n")
        for k in range(grid.size):
            if sparse and prob[k] == 0 and not offset[k].any():
                continue
            buf.write(f"{k},{float(prob[k])!r},{float(offset[k, 0])!r},{float(offset[k, 1])!r}\n")
    if pairs:
        buf.write("[pairs]\ni,j,h\n")
        for (i, j) in sorted(pairs):
            buf.write(f"{i},{j},{float(pairs[(i, j)])!r}\n")
    Path(path).write_text(buf.getvalue())


def _pnm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6) into an (H, W) or (H, W, 3) array."""
    data = Path(path).read_bytes()
    tokens, offset = _pnm_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"{path}: unsupported PNM type {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError(f"{path}: bad PNM header") from None
    if not 0 < maxval < 65536:
        raise ParseError(f"{path}: bad maxval {maxval}")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset) if \
        len(data) - offset >= count * dtype.itemsize else None
    if raw is None:
        raise ParseError(f"{path}: truncated pixel data")
    img = raw.astype(np.uint16 if maxval > 255 else np.uint8)
    return img.reshape(height, width, channels) if channels == 3 else img.reshape(height, width)


def write_pnm(path, image) -> None:
    """Write an 8-bit (H, W) array as P5 or (H, W, 3) array as P6."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise ValueError("write_pnm expects uint8 pixels")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"unsupported image shape {img.shape}")
    header = b"%s\n%d %d\n255\n" % (magic, img.shape[1], img.shape[0])
    Path(path).write_bytes(header + np.ascontiguousarray(img).tobytes())
