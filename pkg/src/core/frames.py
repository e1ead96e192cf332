'''
Pixel containers: single RGB frames, frame-stacked observations and replay
transitions.

Pixels are stored as 8-bit integers and converted to unit-interval floats only
at network input; the conversion is exact over all 256 intensity values.
'''

from dataclasses import dataclass
import numpy as np
from src.core.errors import ShapeError

MIN_FRAME_SIZE = 16


def to_unit(pixels: np.ndarray) -> np.ndarray:

    '''Converts 8-bit intensities to float32 values in [0, 1].'''

    return pixels.astype(np.float32) / np.float32(255.0)


def from_unit(values: np.ndarray) -> np.ndarray:

    '''Converts [0, 1] floats back to 8-bit intensities (rounding, clipped).'''

    return np.clip(np.rint(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class Frame:

    '''One H×W×3 RGB image with 8-bit intensities.'''

    pixels: np.ndarray

    def __post_init__(self):
        pixels = self.pixels
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ShapeError(f'Frame must be H×W×3, received shape {pixels.shape}')
        if pixels.shape[0] < MIN_FRAME_SIZE or pixels.shape[1] < MIN_FRAME_SIZE:
            raise ShapeError(f'Frame must be at least {MIN_FRAME_SIZE}×{MIN_FRAME_SIZE}, '
                             f'received {pixels.shape[0]}×{pixels.shape[1]}')
        if pixels.dtype != np.uint8:
            raise ShapeError(f'Frame pixels must be uint8, received {pixels.dtype}')

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def chw(self) -> np.ndarray:
        '''Channel-first view (3, H, W).'''
        return np.transpose(self.pixels, (2, 0, 1))


@dataclass(frozen=True)
class Observation:

    '''
    k consecutive frames, newest last.

    The stacked view is frame-major: channels [0, 3) hold the oldest frame.
    '''

    frames: tuple[Frame, ...]

    def __post_init__(self):
        if not self.frames:
            raise ShapeError('Observation needs at least one frame')
        shape = self.frames[0].pixels.shape
        for frame in self.frames[1:]:
            if frame.pixels.shape != shape:
                raise ShapeError(f'All stacked frames must share H, W: {frame.pixels.shape} != {shape}')

    @property
    def stack_size(self) -> int:
        return len(self.frames)

    @property
    def newest(self) -> Frame:
        return self.frames[-1]

    def stacked(self) -> np.ndarray:
        '''(3k, H, W) uint8 array.'''
        return np.concatenate([frame.chw() for frame in self.frames], axis=0)

    def shifted(self, frame: Frame) -> 'Observation':
        '''Drops the oldest frame and appends `frame`.'''
        return Observation(self.frames[1:] + (frame,))

    @classmethod
    def repeated(cls, frame: Frame, k: int) -> 'Observation':
        return cls((frame,) * k)

    @classmethod
    def from_stacked(cls, stacked: np.ndarray) -> 'Observation':
        if stacked.ndim != 3 or stacked.shape[0] % 3 != 0:
            raise ShapeError(f'Stacked observation must be (3k, H, W), received {stacked.shape}')
        frames = tuple(Frame(np.ascontiguousarray(np.transpose(stacked[i:i + 3], (1, 2, 0))))
                       for i in range(0, stacked.shape[0], 3))
        return cls(frames)


@dataclass(frozen=True)
class Transition:

    '''One replay record. `bootstrap` is true when the successor value is bootstrapped.'''

    obs: Observation
    action: np.ndarray
    reward: float
    next_obs: Observation
    bootstrap: bool = True

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise ValueError(f'Transition reward must be finite, received {self.reward}')
        if (self.obs.stack_size != self.next_obs.stack_size
                or self.obs.newest.pixels.shape != self.next_obs.newest.pixels.shape):
            raise ShapeError('obs and next_obs of a transition must share a shape')
