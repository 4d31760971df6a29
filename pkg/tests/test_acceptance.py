"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from semline.cli import main
from semline.geometry import ImageFrame, Line
from semline.hough import generate
from semline.io import AnnotationRecord, load_annotations, save_annotations, write_score_file
from semline.metrics import DEFAULT_TAU_GRID, evaluate, hiou, line_miou, precision_recall_f
from semline.mwcs import HarmonyGraph, harmony_energy, max_weight_clique
from semline.scoring import ScoredCandidates, harmony_label
from semline.selection import select_and_remove
from semline.synthetic import oracle_scores, random_scene

N_SCENES = 50


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_weights(rng, k):
    w = np.triu(rng.random((k, k)), 1)
    return w + w.T + np.diag(rng.random(k))


def brute_force_clique(w, kappa):
    """Every subset of size >= 2, energy summed from scratch; ties by size then lexicographic."""
    k = len(w)
    best = None
    for size in range(2, k + 1):
        for sub in itertools.combinations(range(k), size):
            edges = [w[i][j] for i, j in itertools.combinations(sub, 2)]
            if min(edges) <= kappa:
                continue
            key = (math.fsum(edges), size, tuple(-i for i in sub))
            if best is None or key > best[0]:
                best = (key, sub)
    if best is None:
        diag = [w[i][i] for i in range(k)]
        return (diag.index(max(diag)),), 0.0
    return best[1], best[0][0]


def test_clique_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    mismatches, worst, solver_time = 0, 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 11))
        w = random_weights(rng, k)
        graph = HarmonyGraph.from_matrix(w)
        for kappa in (0.0, 0.25, 0.5, 0.75):
            t0 = time.perf_counter()
            got = max_weight_clique(graph, kappa)
            solver_time += time.perf_counter() - t0
            members, energy = brute_force_clique(w, kappa)
            worst = max(worst, abs(got.energy - energy))
            if got.members != members:
                mismatches += 1
    ok = mismatches == 0 and worst <= 1e-12 and solver_time < 10
    report("clique oracle equivalence", ok,
           f"4000 solves, {mismatches} member mismatches, max energy error {worst:.1e}, "
           f"solver time {solver_time:.2f}s")


def test_energy_identity():
    rng = np.random.default_rng(7)
    worst, count = 0.0, 0
    for _ in range(100):
        k = int(rng.integers(2, 9))
        w = random_weights(rng, k)
        graph = HarmonyGraph.from_matrix(w)
        for size in range(2, k + 1):
            for sub in itertools.combinations(range(k), size):
                oracle = sum(w[i][j] for i in sub for j in sub if i < j)
                worst = max(worst, abs(harmony_energy(graph, sub) - oracle))
                count += 1
    report("energy identity", worst <= 1e-12, f"{count} subsets, max error {worst:.1e}")


def greedy_oracle(prob, phi_bins, k, radius):
    prob = list(prob)
    removed, out = set(), []
    for _ in range(k):
        cands = [(p, -i) for i, p in enumerate(prob) if i not in removed and p > 0]
        if not cands:
            break
        best = -max(cands)[1]
        out.append(best)
        bi, bj = divmod(best, phi_bins)
        for idx in range(len(prob)):
            i, j = divmod(idx, phi_bins)
            dj = abs(j - bj)
            if abs(i - bi) <= radius and min(dj, phi_bins - dj) <= radius:
                removed.add(idx)
    return out


def test_selection_invariants():
    grid = generate(ImageFrame(400, 400), 30, 30)
    rng = np.random.default_rng(99)
    too_close = not_invariant = oracle_diff = 0
    for _ in range(500):
        raw = rng.random(grid.size)
        sc = ScoredCandidates.for_grid(grid, raw)
        res = select_and_remove(sc, grid, k=8, radius=2)
        for a, b in itertools.combinations(res.selected, 2):
            (ia, ja), (ib, jb) = divmod(a, 30), divmod(b, 30)
            dj = abs(ja - jb)
            if max(abs(ia - ib), min(dj, 30 - dj)) <= 2:
                too_close += 1
        for f in (lambda p: p ** 3, lambda p: np.expm1(p) / np.expm1(1.0), np.sqrt):
            moved = select_and_remove(ScoredCandidates.for_grid(grid, f(raw)), grid, k=8, radius=2)
            not_invariant += moved.selected != res.selected
        oracle_diff += greedy_oracle(sc.prob, 30, 8, 2) != res.selected
    ok = too_close == 0 and not_invariant == 0 and oracle_diff == 0
    report("selection invariants", ok,
           f"500 grids, {too_close} close pairs, {not_invariant} transform changes, "
           f"{oracle_diff} oracle mismatches")


def test_metric_exactness():
    f400 = ImageFrame(400, 400)
    half = Line.from_endpoints((0, 200), (399, 200), f400)
    quarter = Line.from_endpoints((0, 100), (399, 100), f400)
    m = line_miou(half, quarter, f400)
    h = hiou([Line(0, 0)], [Line(0, math.pi / 2)], f400)

    rng = np.random.default_rng(3)
    frame = ImageFrame(96, 72)
    self_ok = 0
    for _ in range(50):
        n = int(rng.integers(0, 6))
        lines = [Line(rng.uniform(-0.8, 0.8) * 40, rng.uniform(0, math.pi)) for _ in range(n)]
        self_ok += hiou(lines, lines, frame) == 1.0

    items = []
    for n in range(6):
        det = [Line(rng.uniform(-20, 20), rng.uniform(0, math.pi)) for _ in range(int(rng.integers(0, 4)))]
        gt = [Line(rng.uniform(-20, 20), rng.uniform(0, math.pi)) for _ in range(int(rng.integers(1, 4)))]
        items.append((str(n), frame, det, gt))
    rep = evaluate(items)
    harmonic_ok = all(
        f == (2 * p * r / (p + r) if p + r else 0.0)
        for p, r, f in zip(rep.precision, rep.recall, rep.f_measure))
    harmonic_ok &= precision_recall_f(3, 1, 2)[2] == 2 * 0.75 * 0.6 / (0.75 + 0.6)

    ok = abs(m - 7 / 12) <= 0.01 and abs(h - 1 / 3) <= 0.01 and self_ok == 50 and harmonic_ok
    report("metric exactness", ok,
           f"mIoU {m:.4f} (7/12={7 / 12:.4f}), HIoU {h:.4f}, HIoU(X,X)=1 on {self_ok}/50, "
           f"F harmonic at all {len(DEFAULT_TAU_GRID)} taus: {harmonic_ok}")


def test_removal_window_structure():
    rng = np.random.default_rng(5)
    worst, steps = 0, 0
    for rb, pb in ((30, 30), (40, 60), (64, 64)):
        grid = generate(ImageFrame(400, 400), rb, pb)
        for _ in range(40):
            sc = ScoredCandidates.for_grid(grid, rng.random(grid.size))
            res = select_and_remove(sc, grid, k=8, radius=2)
            worst = max(worst, max(res.removed_per_step))
            steps += len(res.removed_per_step)
    report("removal window", worst <= 25, f"{steps} steps, most cells removed in one step {worst}")


def test_soft_label_curve():
    ds = np.linspace(0.0, 3.0, 10)
    worst = max(abs(harmony_label(a, b) - math.exp(-(a * a + b * b))) for a in ds for b in ds)
    report("soft label curve", worst <= 1e-12, f"100 points, max error {worst:.1e}")


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    """50 synthetic scenes written as score files plus a ground-truth annotation file."""
    root = tmp_path_factory.mktemp("synthetic")
    rng = np.random.default_rng(2024)
    frame = ImageFrame(160, 120)
    grid = generate(frame, 30, 30)
    paths, gts = [], []
    for n in range(N_SCENES):
        scene = random_scene(rng, frame, grid=grid)
        scores, pairs = oracle_scores(scene, grid, rng, sigma=0.05)
        path = root / f"scene{n:02d}.csv"
        write_score_file(path, grid, scores.prob, scores.offset, pairs)
        paths.append(str(path))
        gts.append(AnnotationRecord.from_lines(f"scene{n:02d}", frame, scene.lines))
    gt = root / "gt.jsonl"
    save_annotations(gt, gts)
    return root, paths, str(gt)


def run_detect_evaluate(root, paths, gt, tag, extra=()):
    pred, rep = root / f"{tag}.pred.jsonl", root / f"{tag}.report.jsonl"
    assert main(["detect", "--scorer", "file", *paths, *extra, "--out", str(pred)]) == 0
    assert main(["evaluate", "--pred", str(pred), "--gt", gt, "--out", str(rep)]) == 0
    summary = json.loads(rep.read_text().splitlines()[-1])["summary"]
    return pred, rep, summary


def per_line_miou(pred, gt):
    preds = {r.image_id: r for r in load_annotations(pred)}
    out = []
    for rec in load_annotations(gt):
        det = preds[rec.image_id].lines
        for line in rec.lines:
            out.append(max((line_miou(d, line, rec.frame) for d in det), default=0.0))
    return np.array(out)


def test_end_to_end_synthetic(suite, monkeypatch):
    root, paths, gt = suite
    monkeypatch.setenv("SEMLINE_THREADS", "1")
    t0 = time.perf_counter()
    pred, _, summary = run_detect_evaluate(root, paths, gt, "full")
    elapsed = time.perf_counter() - t0
    miou = per_line_miou(pred, gt)
    ok = summary["hiou_mean"] >= 0.90 and miou.mean() >= 0.95 and elapsed < 60
    report("end-to-end synthetic recovery", ok,
           f"{N_SCENES} scenes, mean HIoU {summary['hiou_mean']:.4f}, per-line mIoU mean "
           f"{miou.mean():.4f} (min {miou.min():.4f}), {elapsed:.1f}s")


def test_ablation_direction(suite, monkeypatch):
    root, paths, gt = suite
    monkeypatch.setenv("SEMLINE_THREADS", "1")
    _, _, full = run_detect_evaluate(root, paths, gt, "abl-full")
    _, _, bare = run_detect_evaluate(root, paths, gt, "abl-bare", ["--no-harmony"])
    ok = full["hiou_mean"] > bare["hiou_mean"]
    report("ablation direction", ok,
           f"full HIoU {full['hiou_mean']:.4f} vs no-harmony {bare['hiou_mean']:.4f}")


def test_determinism(suite, monkeypatch):
    root, paths, gt = suite
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("SEMLINE_THREADS", threads)
        pred, rep, _ = run_detect_evaluate(root, paths, gt, f"det-{threads}")
        outputs.append((pred.read_bytes(), rep.read_bytes()))
    ok = outputs[0] == outputs[1]
    report("determinism", ok, f"detect+evaluate byte-identical with 1 and 4 workers: {ok}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
