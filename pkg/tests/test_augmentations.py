'''
Unit Tests for the observation augmentations.

The tests ensure that:
    1. Overlay is the identity at α=1, a replacement at α=0, the exact
       midpoint at α=0.5 and affine in the observation.
    2. Shift with radius 0 and crop with source = target are identities, and
       fixed offsets/origins move content as documented; random offsets are
       uniform over the window.
    3. Random convolution and splice keep values in [0, 1], reduce to the
       identity for identity kernels and empty boxes, and splice keeps the
       foreground untouched.
    4. Augmentation images are drawn from their own namespace and average
       to mid-gray.
'''

import unittest
import numpy as np
import torch
from scipy import stats
from src.augment.augmentations import (center_crop, crop_origin_count, overlay, random_conv, random_crop,
                                       random_shift, rgb_to_hsv, splice)
from src.augment.image_source import image_batch, image_source_next
from src.models.model import AUGMENT_NAMESPACE, DistractionSettings


def _batch(seed: int = 0, b: int = 4, size: int = 16) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand((b, 9, size, size), generator=generator)


class TestOverlay(unittest.TestCase):

    '''
    Tester for overlay identities
    '''

    def setUp(self):
        self.obs = _batch()
        self.image = torch.rand((4, 3, 16, 16), generator=torch.Generator().manual_seed(1))

    def test_alpha_one_is_identity(self):
        torch.testing.assert_close(overlay(self.obs, self.image, 1.0), self.obs, rtol=0, atol=0)

    def test_alpha_zero_is_replacement(self):
        out = overlay(self.obs, self.image, 0.0)
        for f in range(3):
            torch.testing.assert_close(out[:, 3 * f:3 * f + 3], self.image, rtol=0, atol=0)

    def test_alpha_half_is_midpoint(self):
        out = overlay(self.obs, self.image, 0.5)
        expected = 0.5 * self.obs + 0.5 * self.image.repeat(1, 3, 1, 1)
        torch.testing.assert_close(out, expected, rtol=0, atol=1e-7)

    def test_affine_in_the_observation(self):
        '''overlay(λf, x, α) − overlay(0, x, α) = αλf.'''
        scale, alpha = 0.7, 0.3
        zero = overlay(torch.zeros_like(self.obs), self.image, alpha)
        scaled = overlay(scale * self.obs, self.image, alpha)
        torch.testing.assert_close(scaled - zero, alpha * scale * self.obs, rtol=0, atol=1e-6)

    def test_single_observation(self):
        out = overlay(self.obs[0], self.image[0], 0.5)
        self.assertEqual(tuple(out.shape), (9, 16, 16))


class TestGeometric(unittest.TestCase):

    '''
    Tester for shift and crop
    '''

    def test_shift_radius_zero_is_identity(self):
        obs = _batch()
        torch.testing.assert_close(random_shift(obs, 0, np.random.default_rng(0)), obs, rtol=0, atol=0)

    def test_shift_moves_right(self):
        obs = torch.zeros((1, 3, 16, 16))
        obs[0, :, 5, 5] = 1.0
        out = random_shift(obs, 4, offsets=np.array([[2, 1]]))
        self.assertEqual(float(out[0, 0, 6, 7]), 1.0)
        self.assertEqual(float(out.sum()), 3.0)

    def test_shift_replicates_edges(self):
        obs = torch.zeros((1, 3, 16, 16))
        obs[0, :, :, 0] = 1.0
        out = random_shift(obs, 4, offsets=np.array([[3, 0]]))
        self.assertTrue(bool((out[0, :, :, :4] == 1.0).all()))

    def test_shift_offsets_are_uniform(self):
        '''Offsets of radius 4 should be uniform over the 81 integer pairs (chi-square over 10^5 draws).'''
        rng = np.random.default_rng(0)
        counts = np.zeros(81, dtype=np.int64)
        for _ in range(10):
            obs = torch.zeros((10_000, 1, 9, 9))
            obs[:, 0, 4, 4] = 1.0
            out = random_shift(obs, 4, rng).reshape(10_000, 81)
            self.assertTrue(bool((out.sum(dim=1) == 1.0).all()))
            counts += np.bincount(out.argmax(dim=1).numpy(), minlength=81)
        self.assertGreater(int(counts.min()), 0)
        self.assertGreater(stats.chisquare(counts).pvalue, 1e-3)

    def test_crop_same_size_is_identity(self):
        obs = _batch()
        torch.testing.assert_close(random_crop(obs, (16, 16), np.random.default_rng(0)), obs, rtol=0, atol=0)

    def test_crop_origin(self):
        obs = _batch(size=20)
        out = random_crop(obs, (16, 16), origins=np.array([[1, 2]] * 4))
        torch.testing.assert_close(out, obs[:, :, 1:17, 2:18], rtol=0, atol=0)

    def test_crop_target_too_large(self):
        with self.assertRaises(ValueError):
            random_crop(_batch(), (20, 20), np.random.default_rng(0))

    def test_center_crop(self):
        obs = _batch(size=20)
        torch.testing.assert_close(center_crop(obs, (16, 16)), obs[:, :, 2:18, 2:18], rtol=0, atol=0)

    def test_origin_count(self):
        '''A 100-pixel source cropped to 84 has 17² windows.'''
        self.assertEqual(crop_origin_count(100, 84), 289)


class TestAppearance(unittest.TestCase):

    '''
    Tester for random convolution and splice
    '''

    def test_conv_in_unit_interval(self):
        out = random_conv(_batch(), np.random.default_rng(3))
        self.assertGreaterEqual(float(out.min()), 0.0)
        self.assertLessEqual(float(out.max()), 1.0)
        self.assertEqual(tuple(out.shape), (4, 9, 16, 16))

    def test_conv_same_kernel_for_all_frames(self):
        '''Identical frames of one observation should stay identical.'''
        frame = torch.rand((1, 3, 16, 16), generator=torch.Generator().manual_seed(2))
        out = random_conv(frame.repeat(1, 3, 1, 1), np.random.default_rng(4))
        torch.testing.assert_close(out[:, :3], out[:, 3:6], rtol=0, atol=0)

    def test_conv_identity_kernel(self):
        '''A centre-tap identity kernel should return a frame that already spans [0, 1].'''
        obs = torch.rand((1, 3, 16, 16), generator=torch.Generator().manual_seed(5))
        obs[0, 0, 0, 0] = 0.0
        obs[0, 1, 3, 3] = 1.0
        kernel = torch.zeros((3, 3, 3, 3))
        for c in range(3):
            kernel[c, c, 1, 1] = 1.0
        torch.testing.assert_close(random_conv(obs, kernel=kernel), obs, rtol=0, atol=1e-7)

    def test_conv_of_constant_frame_is_constant(self):
        out = random_conv(torch.full((2, 6, 16, 16), 0.4), np.random.default_rng(6))
        flat = out.reshape(2, 6, -1)
        torch.testing.assert_close(flat.amax(dim=-1), flat.amin(dim=-1), rtol=0, atol=1e-6)

    def test_conv_fixed_seed_is_deterministic(self):
        obs = _batch()
        a = random_conv(obs, np.random.default_rng(8))
        b = random_conv(obs, np.random.default_rng(8))
        torch.testing.assert_close(a, b, rtol=0, atol=0)

    def test_splice_identities(self):
        '''Splicing a frame with itself, or with a box that selects nothing, changes nothing.'''
        obs = 0.1 + 0.8 * torch.rand((2, 3, 16, 16), generator=torch.Generator().manual_seed(7))
        torch.testing.assert_close(splice(obs, obs), obs, rtol=0, atol=0)
        image = torch.zeros((2, 3, 16, 16))
        torch.testing.assert_close(splice(obs, image, hsv_lo=(0.0, 0.0, 0.0), hsv_hi=(1.0, 1.0, 0.0)), obs,
                                   rtol=0, atol=0)

    def test_hsv_of_gray(self):
        hsv = rgb_to_hsv(torch.full((3, 2, 2), 0.5))
        torch.testing.assert_close(hsv[:, 0, 0], torch.tensor([0.0, 0.0, 0.5]))

    def test_splice_replaces_gray_keeps_red(self):
        obs = torch.full((1, 3, 16, 16), 128 / 255)
        obs[0, :, 8, 8] = torch.tensor([220 / 255, 20 / 255, 20 / 255])
        image = torch.full((1, 3, 16, 16), 0.9)
        out = splice(obs, image)
        self.assertAlmostEqual(float(out[0, 0, 0, 0]), 0.9, places=6)
        torch.testing.assert_close(out[0, :, 8, 8], obs[0, :, 8, 8], rtol=0, atol=0)


class TestImageSource(unittest.TestCase):

    '''
    Tester for augmentation images
    '''

    def test_batch_shape_and_range(self):
        images = image_batch(np.random.default_rng(0), 3, 16, 16)
        self.assertEqual(tuple(images.shape), (3, 3, 16, 16))
        self.assertGreaterEqual(float(images.min()), 0.0)
        self.assertLessEqual(float(images.max()), 1.0)

    def test_mean_pixel_near_half(self):
        '''1,000 draws should average to a mean pixel value within [0.45, 0.55].'''
        images = image_batch(np.random.default_rng(9), 1000, 16, 16)
        mean = float(images.mean())
        self.assertGreaterEqual(mean, 0.45)
        self.assertLessEqual(mean, 0.55)

    def test_reproducible(self):
        a = image_source_next(np.random.default_rng(5), 16, 16)
        b = image_source_next(np.random.default_rng(5), 16, 16)
        np.testing.assert_array_equal(a.pixels, b.pixels)

    def test_namespaces_disjoint(self):
        '''Evaluation videos may not use the augmentation namespace.'''
        self.assertNotEqual(DistractionSettings().video_namespace, AUGMENT_NAMESPACE)
        with self.assertRaises(ValueError):
            DistractionSettings(video_namespace=AUGMENT_NAMESPACE)


if __name__ == '__main__':
    unittest.main()
