import numpy as np
import pytest

from scalednmf.rank import ElbowEstimate, second_elbow, singular_values, sweep_range, zg_elbow
from scalednmf.scaling import DocTermMatrix, ScalingKind, apply_scaling

from oracles import zg_split


class TestSingularValues:
    def test_diagonal_matrix(self):
        spectrum = singular_values(np.array([[3.0, 0.0], [0.0, 4.0]]), 2)
        np.testing.assert_allclose(spectrum.values, [4.0, 3.0])

    def test_rank_one_outer_product(self):
        rng = np.random.default_rng(1)
        u, v = rng.random(12), rng.random(9)
        spectrum = singular_values(np.outer(u, v), 3)
        np.testing.assert_allclose(
            spectrum.values[0], np.linalg.norm(u) * np.linalg.norm(v), rtol=1e-12
        )
        assert spectrum.values[1] < 1e-10 * spectrum.values[0]

    def test_iterative_path_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        M = rng.random((30, 50))
        dense = np.linalg.svd(M, compute_uv=False)[:10]
        # dense_cutoff=0 forces the Lanczos path even on this small matrix
        iterative = singular_values(M, 10, dense_cutoff=0).values
        np.testing.assert_allclose(iterative, dense, rtol=1e-8)

    def test_iterative_path_on_sparse_input(self):
        rng = np.random.default_rng(3)
        import scipy.sparse as sp

        M = sp.random(80, 120, density=0.1, random_state=np.random.RandomState(3), format="csr")
        dense = np.linalg.svd(M.toarray(), compute_uv=False)[:6]
        iterative = singular_values(M, 6, dense_cutoff=0).values
        np.testing.assert_allclose(iterative, dense, rtol=1e-8)

    def test_descending_order_and_dims(self):
        rng = np.random.default_rng(4)
        M = rng.random((20, 15))
        spectrum = singular_values(M, 8)
        assert np.all(np.diff(spectrum.values) <= 0)
        assert spectrum.source_dims == (20, 15)

    def test_count_validation(self):
        with pytest.raises(ValueError, match="count"):
            singular_values(np.ones((3, 3)), 4)
        with pytest.raises(ValueError, match="count"):
            singular_values(np.ones((3, 3)), 0)


class TestZgElbow:
    def test_clear_break(self):
        assert zg_elbow([10, 9.8, 9.6, 1.2, 1.0, 0.8, 0.6]) == 3

    def test_two_values(self):
        assert zg_elbow([5, 1]) == 1

    def test_linear_decay_matches_oracle(self):
        values = list(range(10, 0, -1))
        assert zg_elbow(values) == zg_split(values)

    def test_random_spectra_match_exhaustive_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            p = int(rng.integers(2, 201))
            values = np.sort(rng.random(p) * rng.integers(1, 100))[::-1]
            assert zg_elbow(values) == zg_split(values)

    def test_requires_two_values(self):
        with pytest.raises(ValueError, match="at least 2"):
            zg_elbow([1.0])


class TestSecondElbow:
    def test_two_plateau_spectrum(self):
        estimate = second_elbow([10, 10, 4, 4, 4, 1, 1, 1, 1])
        assert estimate.first == 2
        assert estimate.second == 5
        assert not estimate.degenerate

    def test_degenerate_tail(self):
        # first elbow swallows all but the last value, leaving a 1-value tail
        estimate = second_elbow([10.0, 9.0, 8.0, 0.1])
        if estimate.degenerate:
            assert estimate.second == estimate.first + 1
        else:
            assert estimate.first < estimate.second <= 4

    def test_degenerate_flag_forced(self):
        values = [5.0, 4.9, 4.8, 0.0]
        estimate = second_elbow(values)
        assert estimate.first == 3
        assert estimate.second == 4
        assert estimate.degenerate

    def test_requires_four_values(self):
        with pytest.raises(ValueError, match="at least 4"):
            second_elbow([3.0, 2.0, 1.0])

    def test_planted_rank_five_matrix(self):
        rng = np.random.default_rng(6)
        W = rng.random((60, 5)) + 0.1
        H = rng.random((5, 80)) + 0.1
        M = W @ H + 0.01 * rng.random((60, 80))
        spectrum = singular_values(M, 30)
        estimate = second_elbow(spectrum)
        assert abs(estimate.second - 5) <= 2

    def test_invariant_first_below_second(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = int(rng.integers(4, 80))
            values = np.sort(rng.random(p) * 50)[::-1]
            estimate = second_elbow(values)
            assert 1 <= estimate.first < estimate.second <= p


class TestSweepRange:
    def test_centered(self):
        elbow = ElbowEstimate(first=3, second=15)
        assert sweep_range(elbow, 10, (2, 100)) == list(range(5, 26))

    def test_left_clip(self):
        elbow = ElbowEstimate(first=2, second=5)
        assert sweep_range(elbow, 10, (2, 40)) == list(range(2, 16))

    def test_right_clip(self):
        elbow = ElbowEstimate(first=10, second=38)
        assert sweep_range(elbow, 10, (2, 39)) == list(range(28, 40))

    def test_contains_second_elbow_when_in_bounds(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            second = int(rng.integers(2, 60))
            elbow = ElbowEstimate(first=1, second=second)
            ranks = sweep_range(elbow, int(rng.integers(0, 15)), (2, 60))
            assert second in ranks

    def test_empty_bounds(self):
        with pytest.raises(ValueError, match="bounds"):
            sweep_range(ElbowEstimate(first=1, second=5), 10, (10, 2))


def test_nl_spectrum_stays_within_unit():
    rng = np.random.default_rng(9)
    for _ in range(5):
        dense = rng.integers(0, 6, size=(25, 40)).astype(float)
        dense[np.arange(25), rng.integers(0, 40, 25)] += 1
        dense[rng.integers(0, 25, 40), np.arange(40)] += 1
        mat = DocTermMatrix.from_array(dense)
        scaled = apply_scaling(mat, ScalingKind.NORMALIZED_LAPLACIAN)
        spectrum = singular_values(scaled.matrix, min(25, 40))
        assert spectrum.values[0] <= 1.0 + 1e-8
