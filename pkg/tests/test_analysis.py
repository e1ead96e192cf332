'''
Unit Tests for the distraction analysis.

The tests ensure that:
    1. A Q-function that ignores its input has zero pixel sensitivity.
    2. A linear Q-function has sensitivity equal to its largest per-channel
       weight at every pixel.
    3. Pixels hidden by a zero mask have zero sensitivity, and only the
       newest stacked frame is perturbed.
    4. Frame averages skip frames where a region is absent.
    5. Mask statistics split task and background pixels of the newest frame.
'''

import math
import unittest
import warnings
import numpy as np
import torch
from src.core.errors import ShapeError
from src.nets.modules import apply_mask, masker_init
from src.pipeline.analysis import mask_stats, mean_over_frames, pixel_sensitivity, sensitivity_by_region

SIZE = 8


def _obs(seed: int = 0) -> torch.Tensor:
    # away from 0 and 1 so the ±step perturbations are never clamped
    generator = torch.Generator().manual_seed(seed)
    return 0.25 + 0.5 * torch.rand((9, SIZE, SIZE), generator=generator, dtype=torch.float64)


def _linear_q(weights: torch.Tensor):

    '''Q(x, a) = Σ weights · newest frame + Σ a.'''

    def q_fn(x: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return (x[:, -3:] * weights).sum(dim=(1, 2, 3)) + action.sum(dim=-1)

    return q_fn


class TestPixelSensitivity(unittest.TestCase):

    '''
    Tester for central-difference pixel sensitivity
    '''

    def setUp(self):
        self.obs = _obs()
        self.action = torch.tensor([0.1, -0.2], dtype=torch.float64)

    def test_constant_q(self):
        def q_fn(x, action):
            return torch.full((x.shape[0],), 3.0, dtype=x.dtype)

        np.testing.assert_array_equal(pixel_sensitivity(q_fn, self.obs, self.action), np.zeros(SIZE * SIZE))

    def test_linear_q(self):
        weights = torch.randn((3, SIZE, SIZE), generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        sensitivities = pixel_sensitivity(_linear_q(weights), self.obs, self.action)
        expected = weights.abs().amax(dim=0).flatten().numpy()
        np.testing.assert_allclose(sensitivities, expected, rtol=1e-9, atol=1e-9)

    def test_selected_pixels_in_order(self):
        weights = torch.zeros((3, SIZE, SIZE), dtype=torch.float64)
        weights[1, 2, 3] = -4.0
        sensitivities = pixel_sensitivity(_linear_q(weights), self.obs, self.action, pixels=[(2, 3), (0, 0)])
        np.testing.assert_allclose(sensitivities, [4.0, 0.0], atol=1e-9)

    def test_zero_mask_hides_every_pixel(self):
        masker = masker_init(2, seed=0).double()
        masker.forced_value = 0.0
        weights = torch.ones((9, SIZE, SIZE), dtype=torch.float64)

        def q_fn(x, action):
            return (apply_mask(masker, x) * weights).sum(dim=(1, 2, 3))

        self.assertEqual(float(pixel_sensitivity(q_fn, self.obs, self.action).max()), 0.0)

    def test_only_newest_frame_is_perturbed(self):
        '''Weights on older stacked frames should not leak into the map.'''
        weights = torch.randn((9, SIZE, SIZE), generator=torch.Generator().manual_seed(2), dtype=torch.float64)

        def q_fn(x, action):
            return (x * weights).sum(dim=(1, 2, 3))

        sensitivities = pixel_sensitivity(q_fn, self.obs, self.action)
        expected = weights[-3:].abs().amax(dim=0).flatten().numpy()
        np.testing.assert_allclose(sensitivities, expected, rtol=1e-9, atol=1e-9)

    def test_older_frames_only(self):
        def q_fn(x, action):
            return x[:, :6].sum(dim=(1, 2, 3))

        np.testing.assert_array_equal(pixel_sensitivity(q_fn, self.obs, self.action), np.zeros(SIZE * SIZE))

    def test_region_means(self):
        task_mask = np.zeros((SIZE, SIZE), dtype=bool)
        task_mask[:2] = True
        values = np.where(task_mask, 2.0, 0.5).flatten()
        self.assertEqual(sensitivity_by_region(values, task_mask), (2.0, 0.5))

    def test_mean_over_frames_skips_absent_regions(self):
        self.assertEqual(mean_over_frames([0.5, float('nan'), 1.5]), 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            self.assertTrue(math.isnan(mean_over_frames([float('nan'), float('nan')])))
            self.assertTrue(math.isnan(mean_over_frames([])))

    def test_needs_single_observation(self):
        with self.assertRaises(ShapeError):
            pixel_sensitivity(_linear_q(torch.zeros(3, SIZE, SIZE)), self.obs.unsqueeze(0), self.action)


class TestMaskStats(unittest.TestCase):

    '''
    Tester for mask statistics
    '''

    def setUp(self):
        self.obs = _obs(2).float()
        self.task_mask = np.zeros((SIZE, SIZE), dtype=bool)
        self.task_mask[3:5, 3:5] = True

    def test_fresh_masker_near_half(self):
        mean_task, mean_background = mask_stats(masker_init(4, seed=0), self.obs, self.task_mask)
        for value in (mean_task, mean_background):
            self.assertGreaterEqual(value, 0.45)
            self.assertLessEqual(value, 0.55)

    def test_forced_ones(self):
        masker = masker_init(4, seed=0)
        masker.forced_value = 1.0
        self.assertEqual(mask_stats(masker, self.obs, self.task_mask), (1.0, 1.0))

    def test_empty_task_set(self):
        mean_task, mean_background = mask_stats(masker_init(4, seed=0), self.obs,
                                                np.zeros((SIZE, SIZE), dtype=bool))
        self.assertTrue(math.isnan(mean_task))
        self.assertFalse(math.isnan(mean_background))

    def test_mask_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            mask_stats(masker_init(4, seed=0), self.obs, np.zeros((SIZE + 1, SIZE), dtype=bool))


if __name__ == '__main__':
    unittest.main()
