'''
Distraction analysis of trained networks.

A pixel is a distraction in a state when changing its value leaves the
optimal Q-function unchanged, so ∂Q/∂pixel = 0. `pixel_sensitivity` measures
that derivative of the learned min-Q by central differences; `mask_stats`
compares the Masker's output on task pixels against the background.
'''

from collections.abc import Callable, Sequence
import logging
import numpy as np
import torch
from src.core.errors import ShapeError
from src.nets.modules import Masker, frame_masks

logger = logging.getLogger(__name__)

SENSITIVITY_STEP = 2.0 / 255.0
PIXEL_CHUNK = 32

QFunction = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def pixel_sensitivity(q_fn: QFunction,
                      obs: torch.Tensor,
                      action: torch.Tensor,
                      pixels: Sequence[tuple[int, int]] | None = None,
                      step: float = SENSITIVITY_STEP) -> np.ndarray:

    '''
    Central-difference sensitivity of min-Q to individual pixels.

    For each selected pixel (row, col) and each colour channel c, the value of
    channel c of the newest frame is moved by ±step (clamped to [0, 1]) and
    the change of Q is divided by the realised change of that value. Older
    stacked frames are left untouched, so the result is the partial
    derivative with respect to the current frame only. The pixel's
    sensitivity is the largest absolute derivative over its three channels.

    Args:
        q_fn: Maps (N, 3k, H, W) unit-interval observations and (N, d)
            actions to (N,) values, e.g. `Agent.min_q`.
        obs: One stacked observation (3k, H, W) in [0, 1].
        action: The action (d,) to evaluate Q at.
        pixels: Pixels to measure; all H·W pixels when None.
        step: Finite-difference step.

    Returns:
        np.ndarray: Sensitivity per selected pixel, in the given order.
    '''

    if obs.dim() != 3 or obs.shape[0] % 3 != 0:
        raise ShapeError(f'Expected one stacked observation (3k, H, W), received {tuple(obs.shape)}')
    channels, height, width = obs.shape
    if pixels is None:
        pixels = [(i, j) for i in range(height) for j in range(width)]
    pixels = list(pixels)
    newest = channels - 3
    logger.debug('Measuring %d pixels with step %.4g', len(pixels), step)

    sensitivities = np.zeros(len(pixels), dtype=np.float64)
    with torch.no_grad():
        for start in range(0, len(pixels), PIXEL_CHUNK):
            chunk = pixels[start:start + PIXEL_CHUNK]
            # perturbed copies ordered (pixel, channel, sign)
            perturbed = obs.unsqueeze(0).repeat(6 * len(chunk), 1, 1, 1)
            for n, (i, j) in enumerate(chunk):
                for c in range(3):
                    for s, sign in enumerate((1.0, -1.0)):
                        index = 6 * n + 2 * c + s
                        value = obs[newest + c, i, j] + sign * step
                        perturbed[index, newest + c, i, j] = value.clamp(0.0, 1.0)

            actions = action.unsqueeze(0).expand(perturbed.shape[0], -1)
            values = q_fn(perturbed, actions).reshape(len(chunk), 3, 2)
            moved = perturbed[:, newest:newest + 3].reshape(len(chunk), 3, 2, 3, height, width)
            for n, (i, j) in enumerate(chunk):
                derivatives = []
                for c in range(3):
                    dx = float(moved[n, c, 0, c, i, j] - moved[n, c, 1, c, i, j])
                    dq = float(values[n, c, 0] - values[n, c, 1])
                    derivatives.append(abs(dq / dx) if dx != 0.0 else 0.0)
                sensitivities[start + n] = max(derivatives)

    return sensitivities


def sensitivity_by_region(sensitivities: np.ndarray, task_mask: np.ndarray) -> tuple[float, float]:

    '''Mean sensitivity over task pixels and over background pixels of a full H×W map.'''

    flat = np.asarray(sensitivities).reshape(task_mask.shape)
    return _region_means(flat, task_mask)


def mean_over_frames(values: Sequence[float]) -> float:

    '''Mean of the finite per-frame means; NaN when the region was absent from every frame.'''

    values = np.asarray(values, dtype=np.float64)
    finite = values[np.isfinite(values)]
    return float(finite.mean()) if finite.size else float('nan')


def _region_means(values: np.ndarray, task_mask: np.ndarray) -> tuple[float, float]:
    task = values[task_mask]
    background = values[~task_mask]
    mean_task = float(task.mean()) if task.size else float('nan')
    mean_background = float(background.mean()) if background.size else float('nan')
    return mean_task, mean_background


def mask_stats(masker: Masker, obs: torch.Tensor, task_mask: np.ndarray) -> tuple[float, float]:

    '''
    Mean mask value over task pixels and over background pixels of the newest frame.

    Args:
        masker: The Masker under inspection.
        obs: One stacked observation (3k, H, W) in [0, 1].
        task_mask: Boolean H×W ground truth of the task pixels.

    Returns:
        tuple[float, float]: (mean_task, mean_background); NaN for an empty set.
    '''

    if tuple(task_mask.shape) != tuple(obs.shape[-2:]):
        raise ShapeError(f'Task mask {task_mask.shape} does not match frames {tuple(obs.shape[-2:])}')
    param = next(masker.parameters())
    with torch.no_grad():
        masks = frame_masks(masker, obs.unsqueeze(0).to(param.dtype))
    newest = masks[0, -1].cpu().numpy().astype(np.float64)
    return _region_means(newest, np.asarray(task_mask, dtype=bool))
