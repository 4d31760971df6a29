"""Semantic line detection by maximal weight clique selection over Hough candidates."""

__version__ = "0.1.0"

from .errors import (DimensionMismatch, EmptyUnion, FrameMismatch, GridTooSmall, IndexOutOfRange,
                     NoCandidates, NoIntersection, ParseError, SemlineError, TooManyLines)
from .geometry import (ImageFrame, Line, RegionPartition, partition, pixels_along, region_iou,
                       to_endpoints)
from .hough import HoughGrid, generate, neighborhood
from .metrics import auc, ea_score, evaluate, hiou, line_miou, match_lines
from .mwcs import Clique, HarmonyGraph, build_graph, harmony_energy, max_weight_clique, refine
from .pipeline import Detection, DetectionConfig, detect, detect_image
from .scoring import (HarmonyScorer, ScoredCandidates, file_scorer, harmony_label, harmony_loss,
                      heuristic_harmony_scorer, heuristic_line_scorer, line_pool, region_features)
from .selection import SelectionResult, select_and_remove
