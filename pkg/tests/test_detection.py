"""Threshold calibration, detector semantics, metrics, heatmaps, exports."""

import numpy as np
import numpy.testing as npt
import pytest

from oodlab.detection import (
    Decision,
    GridSpec,
    Threshold,
    classification_accuracy,
    detect,
    mad,
    read_heatmap_csv,
    rejection_region_area,
    score_heatmap,
    select_threshold,
    tpr_at_tnr,
    write_heatmap_csv,
    write_heatmap_pgm,
)
from oodlab.nets import Activation, Head, MlpParams, init_mlp
from oodlab.rng import Rng
from oodlab.wasserstein import binary_cost_matrix


def sort_and_count_eta(scores, target):
    """Oracle: walk the sorted scores and take the first that admits enough."""
    ordered = sorted(scores)
    n = len(ordered)
    for candidate in ordered:
        if sum(1 for s in ordered if s <= candidate) / n >= target:
            return candidate
    return ordered[-1]


class TestSelectThreshold:
    def test_decile_scores(self):
        scores = [round(0.1 * i, 10) for i in range(1, 11)]
        th = select_threshold(scores, 0.9)
        assert th.eta == pytest.approx(0.9)
        assert th.eta == pytest.approx(sort_and_count_eta(scores, 0.9))

    def test_target_one_takes_max(self):
        assert select_threshold([0.4, 0.9, 0.1], 1.0).eta == 0.9

    def test_all_equal_scores(self):
        th = select_threshold([0.3, 0.3, 0.3], 0.5)
        assert th.eta == 0.3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_threshold([], 0.95)

    def test_bad_target_rejected(self):
        with pytest.raises(ValueError):
            select_threshold([0.1], 0.0)

    @pytest.mark.parametrize("target", [0.9, 0.95, 0.99, 1.0])
    def test_soundness_and_minimality(self, target):
        rng = np.random.default_rng(round(target * 100))
        for _ in range(100):
            scores = rng.uniform(0, 0.7, size=rng.integers(1, 200))
            th = select_threshold(scores, target)
            n = scores.size
            assert np.sum(scores <= th.eta) / n >= target
            smaller = scores[scores < th.eta]
            for candidate in np.unique(smaller):
                assert np.sum(scores <= candidate) / n < target


class TestDetect:
    def test_boundary_is_ind(self):
        th = Threshold(0.4, 0.95)
        assert detect(0.4, th) is Decision.IND

    def test_just_above_is_ood(self):
        th = Threshold(0.4, 0.95)
        assert detect(0.4 + 1e-9, th) is Decision.OOD

    def test_zero_score_is_ind(self):
        assert detect(0.0, Threshold(0.0, 0.95)) is Decision.IND


class TestTprAtTnr:
    def test_simple_counts(self):
        tpr, th = tpr_at_tnr([0.1, 0.2], [0.5, 0.6], 1.0)
        assert th.eta == pytest.approx(0.2)
        assert tpr == 1.0

    def test_ties_count_as_ind(self):
        tpr, th = tpr_at_tnr([0.5, 0.5], [0.5, 0.5], 1.0)
        assert th.eta == 0.5 and tpr == 0.0

    def test_separated_scores_always_perfect(self):
        ind = np.linspace(0.0, 0.2, 50)
        ood = np.linspace(0.3, 0.6, 50)
        for target in (0.8, 0.9, 0.95, 1.0):
            tpr, _ = tpr_at_tnr(ind, ood, target)
            assert tpr == 1.0

    def test_monotone_in_target(self):
        rng = np.random.default_rng(5)
        ind = rng.uniform(0, 0.5, 300)
        ood = rng.uniform(0.2, 0.7, 300)
        tprs = [tpr_at_tnr(ind, ood, t)[0] for t in (0.8, 0.9, 0.95, 0.99, 1.0)]
        assert all(a >= b for a, b in zip(tprs, tprs[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            tpr_at_tnr([], [0.2], 0.95)
        with pytest.raises(ValueError):
            tpr_at_tnr([0.2], [], 0.95)


class TestAccuracy:
    def test_confident_correct_point(self):
        net = MlpParams((2, 3), (np.array([[5.0, 0.0], [0.0, 0.0], [-5.0, 0.0]]),),
                        (np.zeros(3),), Activation.RELU, Head.SOFTMAX)
        assert classification_accuracy(net, [[1.0, 0.0]], [1]) == 1.0

    def test_uniform_net_breaks_ties_to_first_class(self):
        net = MlpParams((2, 3), (np.zeros((3, 2)),), (np.zeros(3),),
                        Activation.RELU, Head.SOFTMAX)
        labels = np.array([1, 2, 3, 1])
        acc = classification_accuracy(net, np.zeros((4, 2)), labels)
        assert acc == np.mean(labels == 1)

    def test_bounds(self):
        net = init_mlp((2, 6, 3), Activation.RELU, Head.SOFTMAX, Rng(1))
        pts = Rng(2).standard_normal(20).reshape(10, 2)
        labels = Rng(3).indices_below(3, 10) + 1
        acc = classification_accuracy(net, pts, labels)
        assert 0.0 <= acc <= 1.0

    def test_empty_rejected(self):
        net = init_mlp((2, 6, 3), Activation.RELU, Head.SOFTMAX, Rng(1))
        with pytest.raises(ValueError):
            classification_accuracy(net, np.empty((0, 2)), np.empty(0))


class TestMad:
    def test_hand_value(self):
        assert mad([1.0, 2.0, 3.0]) == pytest.approx(2 / 3)

    def test_single_value(self):
        assert mad([7.7]) == 0.0

    def test_constant_list(self):
        assert mad([0.4] * 9) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mad([])


def uniform_score_net(K=3):
    return MlpParams((2, K), (np.zeros((K, 2)),), (np.zeros(K),),
                     Activation.RELU, Head.SOFTMAX)


class TestHeatmap:
    def test_uniform_net_fills_max_score(self):
        grid = GridSpec(-1, 8, -1, 8, 10)
        hm = score_heatmap(uniform_score_net(), grid, binary_cost_matrix(3))
        npt.assert_allclose(hm, 2 / 3, atol=1e-15)
        assert hm.shape == (10, 10)

    def test_bounds(self):
        net = init_mlp((2, 8, 3), Activation.RELU, Head.SOFTMAX, Rng(4))
        hm = score_heatmap(net, GridSpec(-1, 8, -1, 8, 25), binary_cost_matrix(3))
        assert (hm >= 0).all() and (hm <= 2 / 3 + 1e-15).all()

    def test_resolution_one_samples_center(self):
        # Logit gap grows with x, so the score at the center is predictable.
        net = MlpParams((2, 2), (np.array([[1.0, 0.0], [-1.0, 0.0]]),),
                        (np.zeros(2),), Activation.RELU, Head.SOFTMAX)
        grid = GridSpec(0.0, 2.0, -3.0, 5.0, 1)
        hm = score_heatmap(net, grid, binary_cost_matrix(2))
        from oodlab.nets import mlp_forward
        from oodlab.wasserstein import wasserstein_score
        out, _ = mlp_forward(net, np.array([1.0, 1.0]))
        expected, _ = wasserstein_score(out, binary_cost_matrix(2))
        assert hm.shape == (1, 1)
        assert hm[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_orientation_rows_are_y_columns_are_x(self):
        # Score decreases as x grows (confidence rises with x), flat in y.
        net = MlpParams((2, 2), (np.array([[1.0, 0.0], [-1.0, 0.0]]),),
                        (np.zeros(2),), Activation.RELU, Head.SOFTMAX)
        hm = score_heatmap(net, GridSpec(0, 4, 0, 4, 8), binary_cost_matrix(2))
        assert (np.diff(hm[0]) < 0).all()
        npt.assert_allclose(hm[:, 3], hm[0, 3], atol=1e-12)

    def test_requires_2d_input(self):
        net = init_mlp((3, 4, 2), Activation.RELU, Head.SOFTMAX, Rng(0))
        with pytest.raises(ValueError):
            score_heatmap(net, GridSpec(0, 1, 0, 1, 4), binary_cost_matrix(2))


class TestRejectionArea:
    def test_all_below(self):
        assert rejection_region_area(np.full((4, 4), 0.1), Threshold(0.5, 0.95)) == 0.0

    def test_all_above(self):
        assert rejection_region_area(np.full((4, 4), 0.6), Threshold(0.5, 0.95)) == 1.0

    def test_partial(self):
        hm = np.array([[0.1, 0.9], [0.9, 0.9]])
        assert rejection_region_area(hm, Threshold(0.5, 0.95)) == 0.75

    def test_boundary_cells_count_as_kept(self):
        hm = np.array([[0.5, 0.5], [0.5, 0.6]])
        assert rejection_region_area(hm, Threshold(0.5, 0.95)) == 0.25


class TestExports:
    def test_csv_round_trip(self, tmp_path):
        hm = Rng(6).uniform(12).reshape(3, 4) * (2 / 3)
        path = tmp_path / "hm.csv"
        write_heatmap_csv(hm, path)
        npt.assert_array_equal(read_heatmap_csv(path), hm)

    def test_pgm_layout_and_mapping(self, tmp_path):
        top = 1.0 - 1.0 / 3.0
        # Gray levels 38.25, 141.525, 244.8 sit far from rounding boundaries.
        hm = np.array([[0.0, 0.1], [0.37, top]])
        path = tmp_path / "hm.pgm"
        write_heatmap_pgm(hm, 3, path)
        lines = path.read_text().splitlines()
        assert lines[:3] == ["P2", "2 2", "255"]
        assert " ".join(lines[3:]).split() == ["0", "38", "142", "255"]

    def test_pgm_rounds_half_up(self, tmp_path):
        # top/2 maps to exactly 127.5, which half-up rounding takes to 128.
        top = 1.0 - 1.0 / 3.0
        path = tmp_path / "hm.pgm"
        write_heatmap_pgm(np.array([[top / 2.0]]), 3, path)
        assert path.read_text().splitlines()[3] == "128"

    def test_pgm_bit_exact_reproducible(self, tmp_path):
        hm = Rng(7).uniform(400).reshape(20, 20) * (2 / 3)
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        write_heatmap_pgm(hm, 3, a)
        write_heatmap_pgm(hm, 3, b)
        assert a.read_bytes() == b.read_bytes()

    def test_pgm_lines_within_limit(self, tmp_path):
        hm = Rng(8).uniform(40000).reshape(200, 200) * (2 / 3)
        path = tmp_path / "big.pgm"
        write_heatmap_pgm(hm, 3, path)
        assert max(len(line) for line in path.read_text().splitlines()) <= 70


class TestGridSpec:
    def test_extent_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0, 0, 0, 1, 10)

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0, 1, 0, 1, 0)
