import numpy as np
import pytest
from scipy import stats

from nevalab.baselines import (
    DensityMap,
    SaliencyExhaustedWarning,
    center_scanpath,
    density_scanpath,
    random_scanpath,
    wta_scanpath,
)
from nevalab.errors import ParameterError, ParseError


class TestDensityMap:
    def test_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            DensityMap(np.full((2, 2), 0.5))

    def test_rejects_negative(self):
        with pytest.raises(ParameterError):
            DensityMap.from_weights(np.array([[1.0, -0.5], [0.25, 0.25]]))

    def test_from_weights_normalizes(self):
        d = DensityMap.from_weights(np.ones((4, 4)))
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert d.width == 4 and d.height == 4

    def test_json_round_trip(self, tmp_path, rng):
        d = DensityMap.from_weights(rng.random((3, 5)))
        path = tmp_path / "density.json"
        d.save(path)
        loaded = DensityMap.load(path)
        np.testing.assert_allclose(loaded.weights, d.weights, atol=1e-12)
        assert loaded.width == 5 and loaded.height == 3

    def test_grayscale_image_load(self, tmp_path, rng):
        from PIL import Image

        arr = (rng.random((6, 8)) * 255).astype(np.uint8)
        arr[0, 0] = 9  # keep at least one nonzero
        path = tmp_path / "saliency.png"
        Image.fromarray(arr, mode="L").save(path)
        d = DensityMap.load(path)
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert d.weights.shape == (6, 8)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"width": 2}')
        with pytest.raises(ParseError):
            DensityMap.load(path)


class TestRandomScanpath:
    def test_mean_near_center(self):
        sp = random_scanpath(100, 100, 10000, seed=1)
        xy = sp.xy()
        assert abs(xy[:, 0].mean() - 50) < 2 and abs(xy[:, 1].mean() - 50) < 2

    def test_deterministic(self):
        a = random_scanpath(64, 48, 10, seed=42)
        b = random_scanpath(64, 48, 10, seed=42)
        assert a == b
        assert a != random_scanpath(64, 48, 10, seed=43)

    def test_within_bounds(self):
        sp = random_scanpath(17, 13, 500, seed=3)
        xy = sp.xy()
        assert (xy[:, 0] >= 0).all() and (xy[:, 0] < 17).all()
        assert (xy[:, 1] >= 0).all() and (xy[:, 1] < 13).all()

    def test_uniformity_kolmogorov_smirnov(self):
        sp = random_scanpath(1, 1, 100_000, seed=11)
        xy = sp.xy()
        for axis in range(2):
            assert stats.kstest(xy[:, axis], "uniform").pvalue > 0.01

    def test_requires_fixations(self):
        with pytest.raises(ParameterError):
            random_scanpath(10, 10, 0, seed=0)


class TestCenterScanpath:
    def test_mean_is_center(self):
        sp = center_scanpath(200, 100, 10000, seed=5)
        xy = sp.xy()
        assert abs(xy[:, 0].mean() - 100) < 0.02 * 200
        assert abs(xy[:, 1].mean() - 50) < 0.02 * 100

    def test_degenerate_sigma_collapses_to_center(self):
        sp = center_scanpath(64, 64, 20, seed=2, sigma_frac=1e-12)
        xy = sp.xy()
        np.testing.assert_allclose(xy, 32.0, atol=1e-6)

    def test_deterministic(self):
        assert center_scanpath(50, 50, 5, seed=9) == center_scanpath(50, 50, 5, seed=9)

    def test_all_in_bounds(self):
        sp = center_scanpath(30, 20, 2000, seed=8, sigma_frac=0.8)
        xy = sp.xy()
        assert (xy >= 0).all()
        assert (xy[:, 0] < 30).all() and (xy[:, 1] < 20).all()


class TestDensityScanpath:
    def test_point_mass_stays_in_cell(self):
        weights = np.zeros((4, 4))
        weights[1, 2] = 1.0
        d = DensityMap(weights)
        sp = density_scanpath(d, 80, 40, 200, seed=0)
        xy = sp.xy()
        assert (xy[:, 0] >= 40).all() and (xy[:, 0] < 60).all()  # col 2 of 4
        assert (xy[:, 1] >= 10).all() and (xy[:, 1] < 20).all()  # row 1 of 4

    def test_uniform_density_chi_square(self):
        d = DensityMap.from_weights(np.ones((8, 8)))
        sp = density_scanpath(d, 64, 64, 100_000, seed=4)
        xy = sp.xy()
        cols = (xy[:, 0] // 8).astype(int)
        rows = (xy[:, 1] // 8).astype(int)
        counts = np.bincount(rows * 8 + cols, minlength=64)
        expected = len(xy) / 64
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < stats.chi2.ppf(0.99, df=63)

    def test_deterministic(self):
        d = DensityMap.from_weights(np.ones((2, 2)))
        assert density_scanpath(d, 10, 10, 8, seed=1) == density_scanpath(d, 10, 10, 8, seed=1)


class TestWtaScanpath:
    def test_two_peaks_visited_in_order(self):
        weights = np.zeros((5, 5))
        weights[1, 1] = 0.6
        weights[3, 4] = 0.4
        sp = wta_scanpath(DensityMap.from_weights(weights), 50, 50, 2, ior_radius=8.0)
        xy = sp.xy()
        np.testing.assert_allclose(xy[0], [15.0, 15.0])  # center of cell (1, 1)
        np.testing.assert_allclose(xy[1], [45.0, 35.0])  # center of cell (3, 4)

    def test_exhaustion_warns_and_shortens(self):
        weights = np.zeros((3, 3))
        weights[1, 1] = 1.0
        d = DensityMap(weights)
        with pytest.warns(SaliencyExhaustedWarning):
            sp = wta_scanpath(d, 30, 30, 3, ior_radius=100.0)
        assert len(sp) == 1

    def test_hand_simulated_argmax_with_ior(self):
        # 3x3 cells valued 1..9 row-major on a 3x3-pixel map; radius 0.6 of a
        # cell only suppresses the winner itself, so order is 9, 8, 7
        weights = np.arange(1.0, 10.0).reshape(3, 3)
        sp = wta_scanpath(DensityMap.from_weights(weights), 3, 3, 3, ior_radius=0.6)
        xy = sp.xy()
        np.testing.assert_allclose(xy[0], [2.5, 2.5])
        np.testing.assert_allclose(xy[1], [1.5, 2.5])
        np.testing.assert_allclose(xy[2], [0.5, 2.5])

    def test_row_major_tie_break(self):
        weights = np.zeros((3, 3))
        weights[0, 2] = 0.5
        weights[2, 0] = 0.5
        sp = wta_scanpath(DensityMap.from_weights(weights), 3, 3, 2, ior_radius=0.6)
        xy = sp.xy()
        np.testing.assert_allclose(xy[0], [2.5, 0.5])  # (0, 2) comes first row-major

    def test_no_two_fixations_within_radius(self, rng):
        d = DensityMap.from_weights(rng.random((16, 16)) + 0.01)
        sp = wta_scanpath(d, 64, 64, 10, ior_radius=9.0)
        xy = sp.xy()
        for i in range(len(xy)):
            for j in range(i + 1, len(xy)):
                assert np.hypot(*(xy[i] - xy[j])) > 9.0

    def test_degenerate_map_rejected(self):
        with pytest.raises(ParameterError):
            DensityMap.from_weights(np.zeros((2, 2)))
