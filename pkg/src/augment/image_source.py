'''
Procedural augmentation images.

Stills of drifting-plane videos drawn from the `augment` namespace, which is
kept apart from the namespace of evaluation backgrounds.
'''

import numpy as np
import torch
from src.core.frames import Frame
from src.envs.video import ProceduralVideo
from src.models.model import AUGMENT_NAMESPACE

INDEX_SPACE = 2 ** 31
TIME_SPAN = 1000.0


def image_source_next(rng: np.random.Generator, height: int, width: int,
                      namespace: str = AUGMENT_NAMESPACE) -> Frame:

    '''Draws one augmentation image: a random video of the namespace at a random time.'''

    index = int(rng.integers(0, INDEX_SPACE))
    t = float(rng.uniform(0.0, TIME_SPAN))
    return ProceduralVideo.from_index(namespace, index).still(t, height, width)


def image_batch(rng: np.random.Generator, n: int, height: int, width: int,
                dtype: torch.dtype = torch.float32) -> torch.Tensor:

    '''`n` augmentation images as a (n, 3, H, W) tensor in [0, 1].'''

    frames = [image_source_next(rng, height, width).chw() for _ in range(n)]
    return torch.from_numpy(np.stack(frames)).to(dtype) / 255.0
