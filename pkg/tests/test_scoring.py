import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semline.errors import DimensionMismatch, ParseError
from semline.geometry import ImageFrame, Line, partition
from semline.hough import generate
from semline.io import write_score_file
from semline.scoring import (ConstantHarmonyScorer, HarmonyScorer, ScoredCandidates,
                             TableHarmonyScorer, file_scorer, harmony_label, harmony_loss,
                             heuristic_harmony_scorer, heuristic_line_scorer, line_pool,
                             region_features, softmax)


class TestLinePool:
    def test_constant_map(self):
        fmap = np.full((2, 50, 60), 3.5)
        for phi in np.linspace(0, math.pi, 13, endpoint=False):
            assert np.allclose(line_pool(fmap, Line(4.0, phi)), 3.5, atol=1e-12)

    def test_x_plane_vertical(self):
        xs = np.tile(np.arange(401, dtype=float), (401, 1))
        assert line_pool(xs, Line(0, math.pi / 2))[0] == 200.0

    def test_y_plane_diagonal(self):
        ys = np.tile(np.arange(101, dtype=float)[:, None], (1, 101))
        oracle = np.mean([y for y in range(101) for x in range(101) if x == y])
        assert line_pool(ys, Line(0, math.pi / 4))[0] == pytest.approx(oracle) == pytest.approx(50.0)


class TestRegionFeatures:
    def test_constant_equal_areas(self):
        frame = ImageFrame(40, 40)
        part = partition([Line(0, 0), Line(0, math.pi / 2)], frame)
        feats = region_features(np.full((3, 40, 40), 2.0), part)
        assert np.allclose(feats.means, 2.0)
        assert np.allclose(feats.weights, 0.25)

    def test_three_regions_zero_fill(self):
        frame = ImageFrame(60, 40)
        part = partition([Line(-10, 0), Line(10, 0)], frame)
        assert part.region_count == 3
        feats = region_features(np.ones((2, 40, 60)), part)
        assert feats.stacked.shape == (2, 4)
        assert np.all(feats.stacked[:, 3] == 0)

    def test_two_region_softmax(self):
        labels = np.zeros((4, 4), dtype=np.int64)
        labels[3] = 1
        from semline.geometry import RegionPartition
        part = RegionPartition(labels, 2, np.bincount(labels.ravel()))
        feats = region_features(np.zeros((1, 4, 4)), part)
        e1, e2 = math.exp(0.75), math.exp(0.25)
        assert feats.weights == pytest.approx([e1 / (e1 + e2), e2 / (e1 + e2)])
        assert feats.weights == pytest.approx([0.6225, 0.3775], abs=1e-4)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(-15, 15), st.floats(0, 3.1)), max_size=3),
           st.integers(0, 2**31 - 1))
    def test_weights_sum_and_relabel(self, rps, seed):
        frame = ImageFrame(32, 24)
        part = partition([Line(r, p) for r, p in rps], frame)
        fmap = np.random.default_rng(seed).random((2, 24, 32))
        feats = region_features(fmap, part)
        assert feats.weights.sum() == pytest.approx(1.0, abs=1e-9)
        perm = np.random.default_rng(seed).permutation(part.region_count)
        from semline.geometry import RegionPartition
        moved = RegionPartition(perm[part.labels], part.region_count,
                                np.bincount(perm[part.labels].ravel(), minlength=part.region_count))
        f2 = region_features(fmap, moved)
        assert np.allclose(f2.means[perm], feats.means)
        assert np.allclose(f2.weights[perm], feats.weights)


class TestHeuristicLineScorer:
    def test_bright_center_edge(self):
        frame = ImageFrame(61, 61)
        grid = generate(frame, 31, 30)
        grad = np.zeros((61, 61))
        grad[30] = 1.0
        scores = heuristic_line_scorer(grad, grid)
        # brute-force pooling over every candidate
        pooled = np.zeros(grid.size)
        for k in np.flatnonzero(grid.valid):
            from semline.geometry import pixels_along
            px = pixels_along(grid.line(k), frame)
            pooled[k] = sum(grad[y, x] for x, y in px) / len(px)
        best = int(np.argmax(pooled))
        assert grid.params(best) == (0.0, 0.0)
        assert scores.prob[best] == 1.0
        assert int(np.argmax(scores.prob)) == best

    def test_zero_gradient(self):
        grid = generate(ImageFrame(20, 20), 5, 5)
        assert np.all(heuristic_line_scorer(np.zeros((20, 20)), grid).prob == 0)

    def test_uniform_gradient(self):
        grid = generate(ImageFrame(20, 30), 6, 6)
        prob = heuristic_line_scorer(np.full((30, 20), 0.3), grid).prob
        assert np.allclose(prob[grid.valid], 1.0)
        assert np.all(prob[~grid.valid] == 0)


def quadrant_image(n=80):
    img = np.zeros((n, n, 3), dtype=np.uint8)
    h = n // 2
    img[:h, :h] = (255, 0, 0)
    img[:h, h:] = (0, 255, 0)
    img[h:, :h] = (0, 0, 255)
    img[h:, h:] = (255, 255, 0)
    return img


class TestHeuristicHarmony:
    def setup_method(self):
        self.frame = ImageFrame(80, 80)
        self.grid = generate(self.frame, 30, 30)
        self.scorer = heuristic_harmony_scorer(quadrant_image(), self.grid)

    def test_protocol(self):
        assert isinstance(self.scorer, HarmonyScorer)

    def test_duplicated_input_is_unary(self):
        line = Line(0.0, 0.0)
        assert self.scorer.self_score(line) == self.scorer.unary(line)
        assert self.scorer.pair_score(line, Line(0.0, 0.0)) == self.scorer.self_score(line)

    def test_perpendicular_beats_near_parallel(self):
        h = Line(0.0, 0.0)
        v = Line(0.0, math.pi / 2)
        near = Line(2.0, 0.0)
        perp = self.scorer.pair_score(h, v)
        par = self.scorer.pair_score(h, near)
        # direct evaluation of the composed terms
        want = self.scorer.irc(h, v) * self.scorer.redundancy(h, v) * 0.5 * (
            self.scorer.unary(h) + self.scorer.unary(v))
        assert perp == pytest.approx(want)
        assert perp > par
        assert perp > 0.5 and par < 0.1

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-30, 30), st.floats(0, 3.14), st.floats(-30, 30), st.floats(0, 3.14))
    def test_symmetry_and_range(self, r1, p1, r2, p2):
        a, b = Line(r1, p1), Line(r2, p2)
        s = self.scorer
        assert s.pair_score(a, b) == s.pair_score(b, a)
        assert 0 <= s.pair_score(a, b) <= 1
        assert s.self_score(a) == s.pair_score(a, a)


class TestFileScorer:
    def setup_method(self):
        self.grid = generate(ImageFrame(40, 30), 6, 5)

    def test_pair_symmetry(self, tmp_path):
        path = tmp_path / "h.csv"
        write_score_file(path, self.grid, pairs={(2, 5): 0.7})
        scores, harmony, _ = file_scorer(path, self.grid)
        assert scores is None
        assert harmony.pair_score(self.grid.line(5), self.grid.line(2)) == 0.7
        assert harmony.pair_score(self.grid.line(2), self.grid.line(5)) == 0.7

    def test_empty_harmony(self, tmp_path):
        path = tmp_path / "h.csv"
        write_score_file(path, self.grid)
        _, harmony, _ = file_scorer(path, self.grid)
        for i in range(self.grid.size):
            for j in range(self.grid.size):
                assert harmony.pair_score(self.grid.line(i), self.grid.line(j)) == 0.0

    def test_prob_out_of_range(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("#semline-scores v1\n#grid rho_bins=6 phi_bins=5 width=40 height=30\n"
                        "[candidates]\ncandidate_index,prob,delta_rho,delta_phi\n3,1.5,0,0\n")
        with pytest.raises(ParseError):
            file_scorer(path, self.grid)

    def test_grid_mismatch(self, tmp_path):
        path = tmp_path / "s.csv"
        write_score_file(path, generate(ImageFrame(40, 30), 7, 5), prob=np.full(35, 0.5))
        with pytest.raises(DimensionMismatch):
            file_scorer(path, self.grid)

    def test_scores_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        prob = np.where(self.grid.valid, rng.random(self.grid.size), 0.0)
        offset = rng.normal(size=(self.grid.size, 2))
        path = tmp_path / "s.csv"
        write_score_file(path, self.grid, prob, offset)
        scores, _, _ = file_scorer(path, self.grid)
        assert np.array_equal(scores.prob, prob)
        assert np.array_equal(scores.offset, offset)


class TestHarmonyLabel:
    def test_values(self):
        assert harmony_label(0, 0) == 1.0
        assert harmony_label(1, 0) == pytest.approx(math.exp(-1)) == pytest.approx(0.36788, abs=1e-5)
        assert harmony_label(1, 1) == pytest.approx(math.exp(-2)) == pytest.approx(0.13534, abs=1e-5)

    @settings(max_examples=200)
    @given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 1))
    def test_monotone(self, a, b, extra):
        assert harmony_label(a + extra, b) <= harmony_label(a, b)
        assert harmony_label(a, b + extra) <= harmony_label(a, b)

    def test_loss(self):
        assert harmony_loss(0.5, 0.5) == 0.0
        assert harmony_loss(1.0, 0.0) == 1.0
        assert harmony_loss(0.3, 0.7) == pytest.approx(0.16)


def test_scored_candidates_validation():
    with pytest.raises(ValueError):
        ScoredCandidates(np.array([0.2, 1.2]), np.zeros((2, 2)))
    grid = generate(ImageFrame(200, 20), 10, 10)
    sc = ScoredCandidates.for_grid(grid, np.ones(grid.size))
    assert np.all(sc.prob[~grid.valid] == 0)


def test_table_and_constant_scorers_obey_contract():
    grid = generate(ImageFrame(40, 30), 6, 5)
    for s in (TableHarmonyScorer(grid, {(1, 1): 0.4, (1, 3): 0.9}), ConstantHarmonyScorer(0.5, 0.2)):
        a, b = grid.line(1), grid.line(3)
        assert s.pair_score(a, b) == s.pair_score(b, a)
        assert s.self_score(a) == s.pair_score(a, a)


def test_softmax_equal_inputs():
    assert np.allclose(softmax([0.2, 0.2, 0.2]), 1 / 3)
