import numpy as np
import pytest

from nstsim import GrayImage, QuantizedImage
from nstsim.mi import (
    HistogramSpec,
    Pyramid,
    binomial_blur,
    build_pyramid,
    entropy,
    joint_quantize,
    mi_patches,
    mi_scales,
    mi_scales_pyramid,
    mutual_information,
    patch_mi_matrix,
    tile_patches,
    upsample_nearest,
)


class TestEntropy:
    def test_constant(self):
        assert entropy(np.zeros(50, dtype=int)) == 0.0

    def test_uniform_256(self):
        assert entropy(np.arange(256)) == 8.0

    def test_fair_coin(self):
        assert entropy([0, 0, 1, 1]) == 1.0

    def test_quantized_image(self):
        assert entropy(QuantizedImage(np.array([[0, 1], [2, 3]]), 4)) == 2.0

    def test_empty(self):
        with pytest.raises(ValueError):
            entropy([])


class TestMutualInformation:
    def test_self(self, rng):
        x = rng.integers(0, 37, 1000)
        res = mutual_information(x, x)
        assert res.mi == res.hx == res.hy == res.hxy

    def test_product_joint_is_zero(self):
        res = mutual_information([0, 0, 1, 1], [0, 1, 0, 1])
        assert res.mi == 0.0
        assert (res.hx, res.hy, res.hxy) == (1.0, 1.0, 2.0)

    def test_copy_relation(self):
        res = mutual_information([0, 0, 1, 1], [1, 1, 0, 0])
        assert res.mi == 1.0

    def test_independent_bias(self):
        rng = np.random.default_rng(1)
        x, y = rng.integers(0, 256, 10**6), rng.integers(0, 256, 10**6)
        mi = mutual_information(x, y).mi
        assert 0 <= mi < 0.05
        # leading plug-in bias term
        assert mi == pytest.approx(255**2 / (2 * 10**6 * np.log(2)), rel=0.1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            mutual_information([0, 1], [0])

    def test_joint_quantize_shares_range(self):
        qa, qb = joint_quantize(np.array([0.0, 1.0]), np.array([2.0, 3.0]), 4)
        assert qa.tolist() == [0, 1] and qb.tolist() == [2, 3]


class TestPyramid:
    def test_constant(self):
        pyr = build_pyramid(GrayImage(np.full((32, 32), 0.4)), 4)
        for lvl in pyr.levels:
            np.testing.assert_allclose(lvl.data, 0.4, rtol=1e-15)

    def test_sizes(self):
        pyr = build_pyramid(GrayImage(np.zeros((64, 64))), 3)
        assert [lvl.shape for lvl in pyr.levels] == [(64, 64), (32, 32), (16, 16)]
        pyr = build_pyramid(GrayImage(np.zeros((33, 20))), 3)
        assert [lvl.shape for lvl in pyr.levels] == [(33, 20), (16, 10), (8, 5)]

    def test_too_many_levels(self):
        with pytest.raises(ValueError, match="too many levels"):
            build_pyramid(GrayImage(np.zeros((16, 16))), 5)

    def test_impulse_response(self):
        u = np.zeros((9, 9))
        u[4, 4] = 1.0
        k = np.array([1, 4, 6, 4, 1]) / 16
        expected = np.zeros((9, 9))
        expected[2:7, 2:7] = np.outer(k, k)
        np.testing.assert_array_equal(binomial_blur(GrayImage(u)).data, expected)

    def test_replicated_border(self):
        u = np.zeros((5, 5))
        u[:, 0] = 1.0
        # column 0 sees weights 1+4+6 of the replicated value
        assert binomial_blur(GrayImage(u)).data[2, 0] == 11 / 16

    def test_upsample(self):
        c = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(upsample_nearest(c, (4, 4)), np.kron(c, np.ones((2, 2))))
        assert upsample_nearest(c, (5, 3)).tolist() == [[1, 1, 2], [1, 1, 2], [3, 3, 4], [3, 3, 4], [3, 3, 4]]


class TestScaleMi:
    def test_constant(self):
        rep = mi_scales(GrayImage(np.full((64, 64), 0.3)))
        assert [p.mi for p in rep.pairs] == [0.0] * 4

    def test_labels(self, rng):
        rep = mi_scales(GrayImage(rng.random((64, 64))), levels=4)
        assert [p.n for p in rep.pairs] == [4, 3, 2, 1]
        assert [p.fine_shape for p in rep.pairs] == [(64, 64), (32, 32), (16, 16), (8, 8)]
        assert rep.pairs[-1].coarse_shape == (4, 4)

    def test_identities(self, rng):
        rep = mi_scales(GrayImage(rng.random((64, 64))), levels=3, spec=HistogramSpec(64))
        for p in rep.pairs:
            assert p.mi == p.h_fine - p.h_cond
            assert 0.0 <= p.mi <= min(p.h_fine, p.h_coarse) + 1e-12

    def test_block_image_determined_by_coarse(self, rng):
        coarse = rng.random((16, 16))
        fine = np.kron(coarse, np.ones((2, 2)))
        rep = mi_scales_pyramid(Pyramid((GrayImage(fine), GrayImage(coarse))), HistogramSpec(256))
        pair = rep.pairs[0]
        assert pair.h_cond == 0.0
        assert pair.mi == pair.h_fine

    def test_shift_invariant(self, rng):
        u = rng.random((32, 32))
        a = mi_scales(GrayImage(u), 2).values()
        b = mi_scales(GrayImage(u + 3.0), 2).values()
        assert a == pytest.approx(b, abs=1e-12)


class TestPatchMi:
    def test_tiles(self):
        u = np.arange(16.0).reshape(4, 4)
        t = tile_patches(u, 2)
        assert t.tolist() == [[0, 1, 4, 5], [2, 3, 6, 7], [8, 9, 12, 13], [10, 11, 14, 15]]

    def test_diagonal_one_and_identical_patches(self, rng):
        block = rng.random((8, 8))
        u = np.hstack([block, block, rng.random((8, 8))])
        norm, mi, h = patch_mi_matrix(u, 8, 64)
        np.testing.assert_array_equal(np.diag(norm), 1.0)
        assert norm[0, 1] == 1.0 and norm[1, 0] == 1.0

    def test_asymmetric_normalization_may_exceed_one(self):
        # P_i has more distinct values than P_j, and P_j is a function of P_i
        a = np.arange(64.0).reshape(8, 8)
        b = np.floor(a / 32.0)
        norm, mi, h = patch_mi_matrix(np.hstack([a, b]), 8, 64)
        assert mi[0, 1] == mi[1, 0]
        assert norm[1, 0] == pytest.approx(1.0)
        assert norm[0, 1] < 1.0

    def test_constant_patch_nan(self):
        u = np.hstack([np.zeros((8, 8)), np.arange(64.0).reshape(8, 8)])
        norm, _, _ = patch_mi_matrix(u, 8, 16)
        assert np.isnan(norm[0, 0]) and np.isnan(norm[0, 1])
        assert norm[1, 1] == 1.0

    def test_report(self, rng):
        rep = mi_patches(GrayImage(rng.random((64, 64))), patch=16, levels=3, spec=HistogramSpec(32))
        assert [lvl.n for lvl in rep.levels] == [1, 2, 3]
        assert [lvl.normalized.shape for lvl in rep.levels] == [(16, 16), (4, 4), (1, 1)]
        for lvl in rep.levels:
            assert lvl.hist_counts.sum() == lvl.off_diagonal().size
        assert rep.as_dict()["levels"][2]["median"] is None

    def test_errors(self, rng):
        img = GrayImage(rng.random((64, 64)))
        with pytest.raises(ValueError):
            mi_patches(img, patch=4)
        with pytest.raises(ValueError, match="larger than level"):
            mi_patches(img, patch=32, levels=3)

    def test_shift_invariant(self, rng):
        u = rng.random((32, 32))
        a = patch_mi_matrix(u, 8, 32)[0]
        b = patch_mi_matrix(u + 10.0, 8, 32)[0]
        np.testing.assert_allclose(a, b, atol=1e-12)
