"""Image/activation kernels and the numpy fallback path."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softdetect import _kernels
from softdetect._kernels import (
    affine_bilinear,
    backend_name,
    blur2d,
    gaussian_kernel_1d,
    gelu,
    gelu_grad,
    gelu_grad_np,
    gelu_np,
    rotate_bilinear,
)


class TestBackendSelection:
    def test_name_is_known(self):
        assert backend_name() in ("numpy", "numba")

    def test_env_flag_forces_numpy(self):
        code = (
            "from softdetect._kernels import backend_name;"
            "print(backend_name())"
        )
        env = dict(os.environ, SOFTDETECT_NUMBA="0")
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "numpy"

    def test_public_gelu_matches_numpy_twin(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=1000) * 5
        np.testing.assert_allclose(gelu(x), gelu_np(x), atol=1e-14, rtol=0)
        np.testing.assert_allclose(
            gelu_grad(x), gelu_grad_np(x), atol=1e-14, rtol=0
        )

    def test_public_blur_matches_numpy_twin(self):
        rng = np.random.default_rng(22)
        img = rng.uniform(size=(28, 28))
        kernel = gaussian_kernel_1d(1.3)
        assert np.array_equal(blur2d(img, 1.3), _kernels._blur2d_np(img, kernel))

    def test_public_affine_matches_numpy_twin(self):
        rng = np.random.default_rng(23)
        img = rng.uniform(size=(28, 28))
        theta = math.radians(17.0)
        got = affine_bilinear(img, 17.0, scale=1.05, shift_r=0.7, shift_c=-1.2)
        ref = _kernels._affine_bilinear_np(
            img, math.cos(theta), math.sin(theta), 1.0 / 1.05, 0.7, -1.2
        )
        assert np.array_equal(got, ref)


class TestGelu:
    def test_frozen_values(self):
        assert gelu(0.0) == 0.0
        assert abs(gelu(1.0) - 0.8413447460685429) < 1e-15
        assert abs(gelu(-1.0) - (-0.15865525393145707)) < 1e-15
        assert abs(gelu(10.0) - 10.0) < 1e-10

    def test_erf_oracle(self):
        # gelu(x) = x * Phi(x) with Phi the standard-normal CDF
        for x in (-3.0, -0.5, 0.25, 1.7, 4.0):
            phi = 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
            assert abs(gelu(x) - x * phi) < 1e-15

    @given(st.floats(-30, 30, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_bounded_by_linear(self, x):
        y = gelu(x)
        assert min(x, 0.0) - 1e-12 <= y <= max(x, 0.0) + 1e-12

    def test_grad_finite_difference(self):
        h = 1e-5
        for x in (-2.5, -0.3, 0.0, 0.9, 3.1):
            numeric = (gelu(x + h) - gelu(x - h)) / (2 * h)
            assert abs(gelu_grad(x) - numeric) < 1e-8

    def test_shape_preserved(self):
        x = np.zeros((3, 4, 5))
        assert gelu(x).shape == (3, 4, 5)
        assert isinstance(gelu(1.5), float)


class TestGaussianKernel:
    def test_normalized(self):
        for sigma in (0.3, 0.8, 1.0, 2.5):
            k = gaussian_kernel_1d(sigma)
            assert abs(k.sum() - 1.0) < 1e-12

    def test_symmetric(self):
        k = gaussian_kernel_1d(1.7)
        np.testing.assert_array_equal(k, k[::-1])

    def test_length_is_three_sigma_radius(self):
        for sigma in (0.5, 1.0, 2.0):
            k = gaussian_kernel_1d(sigma)
            assert len(k) == 2 * math.ceil(3 * sigma) + 1

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            gaussian_kernel_1d(0.0)
        with pytest.raises(ValueError):
            gaussian_kernel_1d(-1.0)


class TestBlur2d:
    def test_constant_image_unchanged(self):
        img = np.full((16, 16), 0.37)
        out = blur2d(img, 1.0)
        np.testing.assert_allclose(out, img, atol=1e-9)

    def test_impulse_gives_separable_kernel(self):
        sigma = 1.0
        k = gaussian_kernel_1d(sigma)
        r = len(k) // 2
        img = np.zeros((21, 21))
        img[10, 10] = 1.0
        out = blur2d(img, sigma)
        patch = out[10 - r:10 + r + 1, 10 - r:10 + r + 1]
        np.testing.assert_allclose(patch, np.outer(k, k), atol=1e-15)

    def test_mass_preserved_in_interior(self):
        img = np.zeros((31, 31))
        img[15, 15] = 1.0
        assert abs(blur2d(img, 2.0).sum() - 1.0) < 1e-12

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            blur2d(np.zeros(5), 1.0)

    def test_rejects_kernel_larger_than_image(self):
        with pytest.raises(ValueError):
            blur2d(np.zeros((4, 4)), 3.0)


class TestAffine:
    def test_identity_is_exact_copy(self):
        rng = np.random.default_rng(30)
        img = rng.uniform(size=(28, 28))
        out = affine_bilinear(img, 0.0, scale=1.0, shift_r=0.0, shift_c=0.0)
        np.testing.assert_array_equal(out, img)

    def test_full_turn_close_to_identity(self):
        rng = np.random.default_rng(31)
        img = rng.uniform(size=(28, 28))
        out = rotate_bilinear(img, 360.0)
        np.testing.assert_allclose(out, img, atol=1e-6)

    def test_integer_shift_matches_roll_interior(self):
        rng = np.random.default_rng(32)
        img = rng.uniform(size=(20, 20))
        out = affine_bilinear(img, 0.0, shift_r=2.0)
        np.testing.assert_array_equal(out[2:, :], img[:-2, :])
        np.testing.assert_array_equal(out[:2, :], np.zeros((2, 20)))

    def test_rotate_is_affine_special_case(self):
        rng = np.random.default_rng(33)
        img = rng.uniform(size=(16, 16))
        assert np.array_equal(rotate_bilinear(img, 23.0), affine_bilinear(img, 23.0))

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            affine_bilinear(np.zeros((8, 8)), 10.0, scale=0.0)

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            affine_bilinear(np.zeros((2, 2, 2)), 5.0)

    def test_small_rotation_keeps_center_pixel(self):
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        out = rotate_bilinear(img, 30.0)
        assert abs(out[7, 7] - 1.0) < 1e-12
