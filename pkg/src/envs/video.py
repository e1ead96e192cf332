'''
Procedural background videos.

Each video is a per-channel drifting sinusoidal plane

    pixel(x, y, t, c) = 0.5 + 0.5 * sin(2π (u_c x/W + v_c y/H + w_c t + φ_c))

whose parameters are drawn deterministically from (namespace, index). The
evaluation videos and the augmentation images use different namespaces, so
their parameter draws come from different seeds.
'''

from dataclasses import dataclass
import numpy as np
from src.core.frames import Frame, from_unit
from src.core.rng import fnv1a_64

SPATIAL_FREQ_RANGE = (0.5, 3.0)
TEMPORAL_FREQ_RANGE = (0.02, 0.12)


def video_seed(namespace: str, index: int) -> int:
    return fnv1a_64(f'{namespace}/{index}')


@dataclass(frozen=True)
class ProceduralVideo:

    '''Parameters of one drifting-plane video; arrays hold one entry per RGB channel.'''

    namespace: str
    index: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    phase: np.ndarray

    @classmethod
    def from_index(cls, namespace: str, index: int) -> 'ProceduralVideo':
        rng = np.random.default_rng(video_seed(namespace, index))
        u = rng.uniform(*SPATIAL_FREQ_RANGE, size=3) * rng.choice((-1.0, 1.0), size=3)
        v = rng.uniform(*SPATIAL_FREQ_RANGE, size=3) * rng.choice((-1.0, 1.0), size=3)
        w = rng.uniform(*TEMPORAL_FREQ_RANGE, size=3)
        phase = rng.uniform(0.0, 1.0, size=3)
        return cls(namespace=namespace, index=int(index), u=u, v=v, w=w, phase=phase)

    def sample(self, x: np.ndarray, y: np.ndarray, t: float, height: int, width: int) -> np.ndarray:

        '''
        Evaluates the video at pixel coordinates `x`, `y` (any matching shape).

        Returns:
            np.ndarray: values in [0, 1] with a trailing channel axis of size 3.
        '''

        angle = (self.u[None, :] * (x.reshape(-1, 1) / width)
                 + self.v[None, :] * (y.reshape(-1, 1) / height)
                 + self.w[None, :] * t
                 + self.phase[None, :])
        values = 0.5 + 0.5 * np.sin(2.0 * np.pi * angle)
        return values.reshape(*x.shape, 3)

    def frame(self, t: float, height: int, width: int) -> np.ndarray:
        '''Unrotated (H, W, 3) float frame at time t.'''
        y, x = np.mgrid[0:height, 0:width].astype(np.float64)
        return self.sample(x, y, t, height, width)

    def still(self, t: float, height: int, width: int) -> Frame:
        return Frame(from_unit(self.frame(t, height, width)))
