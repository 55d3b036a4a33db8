import math

import numpy as np
import pytest
from scipy.fft import dct as scipy_dct

from qdct.transform import build_dct_matrix, dct1d, dct2d, energy, idct1d, idct2d

from conftest import WALKTHROUGH_COEFF_SQ, WALKTHROUGH_VECTOR


def dct2d_direct(m: np.ndarray) -> np.ndarray:
    """Independent double-sum evaluation of the 2-D transform."""
    n = m.shape[0]
    alpha = np.array([math.sqrt(1.0 / n)] + [math.sqrt(2.0 / n)] * (n - 1))
    out = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            s = 0.0
            for i in range(n):
                for j in range(n):
                    s += (
                        m[i, j]
                        * math.cos((2 * i + 1) * p * math.pi / (2 * n))
                        * math.cos((2 * j + 1) * q * math.pi / (2 * n))
                    )
            out[p, q] = alpha[p] * alpha[q] * s
    return out


class TestMatrix:
    def test_entries_match_formula(self):
        n = 8
        d = build_dct_matrix(n)
        for u in range(n):
            a = math.sqrt(1.0 / n) if u == 0 else math.sqrt(2.0 / n)
            for k in range(n):
                expected = a * math.cos((2 * k + 1) * u * math.pi / (2 * n))
                assert d[u, k] == pytest.approx(expected, abs=1e-15)

    def test_first_row_constant(self):
        d = build_dct_matrix(8)
        assert np.allclose(d[0], 1.0 / math.sqrt(8), atol=1e-15)

    def test_two_point_closed_form(self):
        d = build_dct_matrix(2)
        r = 1.0 / math.sqrt(2.0)
        assert np.allclose(d, [[r, r], [r, -r]], atol=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 8, 16, 64])
    def test_orthogonality(self, n):
        d = build_dct_matrix(n)
        assert np.abs(d @ d.T - np.eye(n)).max() <= 1e-12

    def test_rejects_zero_size(self):
        with pytest.raises(ValueError):
            build_dct_matrix(0)


class TestDct1d:
    def test_walkthrough_squared_coefficients(self):
        d = build_dct_matrix(8)
        c = dct1d(WALKTHROUGH_VECTOR, d)
        assert np.allclose(c**2, WALKTHROUGH_COEFF_SQ, rtol=1e-3)

    def test_constant_signal_is_dc_only(self):
        for n in (3, 8, 17):
            d = build_dct_matrix(n)
            c = dct1d(np.ones(n), d)
            assert c[0] == pytest.approx(math.sqrt(n), rel=1e-14)
            assert np.abs(c[1:]).max() < 1e-13

    def test_components_are_row_inner_products(self):
        rng = np.random.default_rng(0)
        d = build_dct_matrix(8)
        f = rng.normal(size=8)
        c = dct1d(f, d)
        for u in range(8):
            assert abs(c[u] - float(d[u] @ f)) <= 1e-12

    def test_energy_conservation(self):
        rng = np.random.default_rng(1)
        d = build_dct_matrix(8)
        for _ in range(200):
            f = rng.uniform(-100, 100, size=8)
            c = dct1d(f, d)
            assert abs(energy(c) - energy(f)) / energy(f) <= 1e-9

    def test_matches_scipy(self):
        rng = np.random.default_rng(2)
        for n in (4, 8, 16):
            d = build_dct_matrix(n)
            f = rng.normal(size=n)
            assert np.allclose(dct1d(f, d), scipy_dct(f, type=2, norm="ortho"), atol=1e-12)

    def test_dimension_mismatch(self):
        d = build_dct_matrix(8)
        with pytest.raises(ValueError):
            dct1d(np.ones(4), d)


class TestIdct1d:
    def test_dc_only_gives_constant(self):
        d = build_dct_matrix(8)
        c = np.zeros(8)
        c[0] = math.sqrt(8)
        assert np.allclose(idct1d(c, d), 1.0, atol=1e-14)

    def test_round_trip_on_walkthrough_vector(self):
        d = build_dct_matrix(8)
        back = idct1d(dct1d(WALKTHROUGH_VECTOR, d), d)
        assert np.abs(back - WALKTHROUGH_VECTOR).max() <= 1e-9

    def test_zero_maps_to_zero(self):
        d = build_dct_matrix(8)
        assert np.all(idct1d(np.zeros(8), d) == 0.0)

    def test_round_trip_random(self):
        rng = np.random.default_rng(3)
        d = build_dct_matrix(16)
        for _ in range(50):
            f = rng.uniform(0, 255, size=16)
            assert np.abs(idct1d(dct1d(f, d), d) - f).max() <= 1e-9


class TestDct2d:
    def test_constant_image_dc_only(self):
        d = build_dct_matrix(4)
        c = dct2d(np.ones((4, 4)), d)
        assert c[0, 0] == pytest.approx(4.0, abs=1e-12)
        c[0, 0] = 0.0
        assert np.abs(c).max() <= 1e-12

    def test_matches_double_sum(self):
        rng = np.random.default_rng(4)
        d = build_dct_matrix(8)
        m = rng.uniform(0, 255, size=(8, 8))
        assert np.abs(dct2d(m, d) - dct2d_direct(m)).max() <= 1e-9

    def test_energy_conservation(self):
        rng = np.random.default_rng(5)
        d = build_dct_matrix(8)
        for _ in range(100):
            m = rng.uniform(0, 255, size=(8, 8))
            c = dct2d(m, d)
            assert abs(energy(c) - energy(m)) / energy(m) <= 1e-9

    def test_matches_scipy_separable(self):
        rng = np.random.default_rng(6)
        d = build_dct_matrix(8)
        m = rng.normal(size=(8, 8))
        ref = scipy_dct(scipy_dct(m, type=2, norm="ortho", axis=0), type=2, norm="ortho", axis=1)
        assert np.allclose(dct2d(m, d), ref, atol=1e-12)

    def test_rejects_non_square(self):
        d = build_dct_matrix(8)
        with pytest.raises(ValueError):
            dct2d(np.ones((8, 4)), d)


class TestIdct2d:
    def test_round_trip(self):
        rng = np.random.default_rng(7)
        d = build_dct_matrix(8)
        m = rng.uniform(0, 255, size=(8, 8))
        assert np.abs(idct2d(dct2d(m, d), d) - m).max() <= 1e-9

    def test_dc_only(self):
        d = build_dct_matrix(8)
        c = np.zeros((8, 8))
        c[0, 0] = 8.0
        assert np.allclose(idct2d(c, d), 1.0, atol=1e-14)

    def test_zero(self):
        d = build_dct_matrix(8)
        assert np.all(idct2d(np.zeros((8, 8)), d) == 0.0)


class TestEnergy:
    def test_walkthrough_total(self):
        assert energy(WALKTHROUGH_VECTOR) == 198151.0

    def test_zero_vector(self):
        assert energy(np.zeros(5)) == 0.0

    def test_three_four_five(self):
        assert energy(np.array([3.0, 4.0])) == 25.0
