'''
Observation augmentations on unit-interval tensors.

Every function accepts a single stacked observation (3k, H, W) or a batch
(B, 3k, H, W) and returns the same layout. Randomness comes only from the
numpy generator passed in; optional `kernel`, `offsets` and `origins`
arguments fix the random draw for inspection.

    overlay  α·o + (1−α)·x with an unrelated image x
    conv     one random 3×3 convolution per observation, min-max renormalised
    splice   background pixels (inside an HSV box) replaced by an image
    shift    integer translation with edge replication
    crop     one crop window per observation
'''

import numpy as np
import torch
import torch.nn.functional as F
from src.core.errors import ShapeError


def _as_batch(obs: torch.Tensor) -> tuple[torch.Tensor, bool]:
    if obs.dim() == 3:
        return obs.unsqueeze(0), True
    if obs.dim() == 4:
        return obs, False
    raise ShapeError(f'Expected (3k, H, W) or (B, 3k, H, W), received {tuple(obs.shape)}')


def _restore(batch: torch.Tensor, squeezed: bool) -> torch.Tensor:
    return batch.squeeze(0) if squeezed else batch


def _frames(batch: torch.Tensor) -> torch.Tensor:
    '''(B, 3k, H, W) -> (B, k, 3, H, W)'''
    b, c, h, w = batch.shape
    if c % 3 != 0:
        raise ShapeError(f'Channel count must be a multiple of 3, received {c}')
    return batch.reshape(b, c // 3, 3, h, w)


def _image_per_obs(image: torch.Tensor, batch: torch.Tensor) -> torch.Tensor:
    '''Image as (B, 1, 3, H, W), broadcastable over the stacked frames.'''
    if image.dim() == 3:
        image = image.unsqueeze(0)
    if image.shape[-3:] != (3, *batch.shape[-2:]):
        raise ShapeError(f'Image of shape {tuple(image.shape)} does not fit frames of '
                         f'shape {(3, *batch.shape[-2:])}')
    return image.to(batch.dtype).unsqueeze(1)


def overlay(obs: torch.Tensor, image: torch.Tensor, alpha: float = 0.5) -> torch.Tensor:

    '''
    Blends every stacked frame with `image`: α·f + (1−α)·image, clamped to [0, 1].

    Args:
        obs: (3k, H, W) or (B, 3k, H, W) tensor in [0, 1].
        image: (3, H, W) shared image or (B, 3, H, W), one per observation.
        alpha: Weight of the observation.
    '''

    batch, squeezed = _as_batch(obs)
    frames = _frames(batch)
    mixed = alpha * frames + (1.0 - alpha) * _image_per_obs(image, batch)
    return _restore(mixed.clamp(0.0, 1.0).reshape(batch.shape), squeezed)


def random_conv(obs: torch.Tensor,
                rng: np.random.Generator | None = None,
                kernel: torch.Tensor | None = None) -> torch.Tensor:

    '''
    Random 3×3 RGB→RGB convolution with reflection padding.

    Weights are i.i.d. N(0, 1/9), one kernel per observation shared by its
    frames. Each output frame is min-max renormalised to [0, 1]; a frame with
    no spread is clamped instead.

    Args:
        obs: (3k, H, W) or (B, 3k, H, W) tensor in [0, 1].
        rng: Generator for the kernel weights.
        kernel: Fixed weights, (3, 3, 3, 3) for all observations or (B, 3, 3, 3, 3).
    '''

    batch, squeezed = _as_batch(obs)
    frames = _frames(batch)
    b, k, _, h, w = frames.shape

    if kernel is None:
        if rng is None:
            raise ValueError('random_conv needs a generator or a fixed kernel')
        kernel = torch.from_numpy(rng.normal(0.0, 1.0 / 3.0, size=(b, 3, 3, 3, 3)))
    kernel = kernel.to(batch.dtype)
    if kernel.dim() == 4:
        kernel = kernel.unsqueeze(0).expand(b, -1, -1, -1, -1)

    # grouped convolution: one group per observation, frames along the batch axis
    grouped = frames.permute(1, 0, 2, 3, 4).reshape(k, b * 3, h, w)
    grouped = F.pad(grouped, (1, 1, 1, 1), mode='reflect')
    out = F.conv2d(grouped, kernel.reshape(b * 3, 3, 3, 3), groups=b)
    out = out.reshape(k, b, 3, h, w).permute(1, 0, 2, 3, 4)

    lo = out.amin(dim=(2, 3, 4), keepdim=True)
    hi = out.amax(dim=(2, 3, 4), keepdim=True)
    spread = hi - lo
    flat = spread <= 1e-12
    normalised = (out - lo) / torch.where(flat, torch.ones_like(spread), spread)
    out = torch.where(flat, out.clamp(0.0, 1.0), normalised)
    return _restore(out.reshape(batch.shape), squeezed)


def rgb_to_hsv(rgb: torch.Tensor) -> torch.Tensor:

    '''Converts (..., 3, H, W) RGB in [0, 1] to HSV in [0, 1]; hue of gray pixels is 0.'''

    r, g, b = rgb.unbind(dim=-3)
    maxc, _ = rgb.max(dim=-3)
    minc, _ = rgb.min(dim=-3)
    delta = maxc - minc
    safe_delta = torch.where(delta > 0, delta, torch.ones_like(delta))

    hue_r = torch.remainder((g - b) / safe_delta, 6.0)
    hue_g = (b - r) / safe_delta + 2.0
    hue_b = (r - g) / safe_delta + 4.0
    hue = torch.where(maxc == r, hue_r, torch.where(maxc == g, hue_g, hue_b))
    hue = torch.where(delta > 0, hue / 6.0, torch.zeros_like(hue))

    sat = torch.where(maxc > 0, delta / torch.where(maxc > 0, maxc, torch.ones_like(maxc)),
                      torch.zeros_like(maxc))
    return torch.stack((hue, sat, maxc), dim=-3)


def splice(obs: torch.Tensor,
           image: torch.Tensor,
           hsv_lo: tuple[float, float, float] = (0.0, 0.0, 0.45),
           hsv_hi: tuple[float, float, float] = (1.0, 0.1, 0.55)) -> torch.Tensor:

    '''
    Replaces background pixels by `image`, keeping the foreground crisp.

    A pixel is background when each of its H, S, V values lies inside the
    closed box [hsv_lo, hsv_hi].
    '''

    batch, squeezed = _as_batch(obs)
    frames = _frames(batch)
    hsv = rgb_to_hsv(frames)
    lo = torch.tensor(hsv_lo, dtype=batch.dtype).view(3, 1, 1)
    hi = torch.tensor(hsv_hi, dtype=batch.dtype).view(3, 1, 1)
    background = ((hsv >= lo) & (hsv <= hi)).all(dim=-3, keepdim=True)
    spliced = torch.where(background, _image_per_obs(image, batch), frames)
    return _restore(spliced.reshape(batch.shape), squeezed)


def random_shift(obs: torch.Tensor,
                 radius: int = 4,
                 rng: np.random.Generator | None = None,
                 offsets: np.ndarray | None = None) -> torch.Tensor:

    '''
    Translates each observation by one integer offset (dx, dy) ∈ [−radius, radius]²,
    the same for all its frames, replicating edge pixels.

    Args:
        offsets: Fixed (B, 2) array of (dx, dy); a positive dx moves content right.
    '''

    batch, squeezed = _as_batch(obs)
    b, _, h, w = batch.shape
    if radius == 0 and offsets is None:
        return obs.clone()
    if 2 * radius >= min(h, w):
        raise ValueError(f'Shift radius {radius} must be below half the frame size {min(h, w)}')

    if offsets is None:
        offsets = rng.integers(-radius, radius + 1, size=(b, 2))
    offsets = np.asarray(offsets).reshape(b, 2)
    pad = max(radius, int(np.abs(offsets).max()))

    padded = F.pad(batch, (pad, pad, pad, pad), mode='replicate')
    out = torch.empty_like(batch)
    for i, (dx, dy) in enumerate(offsets):
        top, left = pad - int(dy), pad - int(dx)
        out[i] = padded[i, :, top:top + h, left:left + w]
    return _restore(out, squeezed)


def crop_origin_count(source: int, target: int) -> int:
    '''Number of distinct crop windows per axis pair for a square crop.'''
    return (source - target + 1) ** 2


def random_crop(obs: torch.Tensor,
                target_hw: tuple[int, int],
                rng: np.random.Generator | None = None,
                origins: np.ndarray | None = None) -> torch.Tensor:

    '''
    Crops each observation to `target_hw` with one random window per observation.

    Args:
        origins: Fixed (B, 2) array of (row, col) window origins.

    Raises:
        ValueError: If the target is larger than the rendered source.
    '''

    batch, squeezed = _as_batch(obs)
    b, _, h, w = batch.shape
    th, tw = target_hw
    if th > h or tw > w:
        raise ValueError(f'Crop target {th}×{tw} is larger than source {h}×{w}')

    if origins is None:
        rows = rng.integers(0, h - th + 1, size=b)
        cols = rng.integers(0, w - tw + 1, size=b)
        origins = np.stack([rows, cols], axis=1)
    origins = np.asarray(origins).reshape(b, 2)

    out = torch.stack([batch[i, :, r:r + th, c:c + tw] for i, (r, c) in enumerate(origins)])
    return _restore(out, squeezed)


def center_crop(obs: torch.Tensor, target_hw: tuple[int, int]) -> torch.Tensor:

    '''Deterministic centre window, used when acting and evaluating.'''

    batch, squeezed = _as_batch(obs)
    _, _, h, w = batch.shape
    th, tw = target_hw
    if th > h or tw > w:
        raise ValueError(f'Crop target {th}×{tw} is larger than source {h}×{w}')
    top, left = (h - th) // 2, (w - tw) // 2
    return _restore(batch[:, :, top:top + th, left:left + tw], squeezed)
