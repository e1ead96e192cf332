'''
Deterministic randomness for a run.

A run is seeded once with a 64-bit master seed. Every consumer (environment,
network initialisation, augmentation, evaluation, background videos, replay
sampling, policy noise) draws from its own named substream, whose seed is the
master seed XOR the 64-bit FNV-1a hash of the substream name. Substreams are
therefore independent of each other and of the order in which they are first
requested.
'''

import copy
import logging
import numpy as np
import torch

logger = logging.getLogger(__name__)

MASK_64 = 0xFFFF_FFFF_FFFF_FFFF
FNV_OFFSET_BASIS = 0xCBF2_9CE4_8422_2325
FNV_PRIME = 0x0000_0100_0000_01B3



def fnv1a_64(name: str) -> int:

    '''
    Returns the 64-bit FNV-1a hash of a string (UTF-8 encoded).

    Example:
        >>> hex(fnv1a_64(''))
        '0xcbf29ce484222325'
    '''

    value = FNV_OFFSET_BASIS
    for byte in name.encode('utf-8'):
        value ^= byte
        value = (value * FNV_PRIME) & MASK_64
    return value


def derive_seed(seed: int, name: str) -> int:

    '''Seed of the substream `name` under master seed `seed`.'''

    return (seed & MASK_64) ^ fnv1a_64(name)


def torch_generator(seed: int) -> torch.Generator:

    '''Creates a CPU torch generator from a 64-bit seed.'''

    generator = torch.Generator()
    generator.manual_seed(seed & MASK_64)
    return generator


class RngStream:

    '''
    Master seed plus lazily created named substreams.

    `numpy(name)` and `torch(name)` return the same generator object on every
    call, so consumers share the draw sequence of a substream. `clone()`
    copies the current state of every substream already in use.
    '''

    def __init__(self, seed: int):
        self.seed = seed & MASK_64
        self._numpy: dict[str, np.random.Generator] = {}
        self._torch: dict[str, torch.Generator] = {}

    def substream_seed(self, name: str) -> int:
        return derive_seed(self.seed, name)

    def numpy(self, name: str) -> np.random.Generator:
        if name not in self._numpy:
            self._numpy[name] = np.random.default_rng(self.substream_seed(name))
            logger.debug('Created numpy substream %s for seed %d', name, self.seed)
        return self._numpy[name]

    def torch(self, name: str) -> torch.Generator:
        if name not in self._torch:
            self._torch[name] = torch_generator(self.substream_seed(name))
            logger.debug('Created torch substream %s for seed %d', name, self.seed)
        return self._torch[name]

    def clone(self) -> 'RngStream':
        twin = RngStream(self.seed)
        twin._numpy = {name: copy.deepcopy(gen) for name, gen in self._numpy.items()}
        for name, gen in self._torch.items():
            twin_gen = torch.Generator()
            twin_gen.set_state(gen.get_state())
            twin._torch[name] = twin_gen
        return twin
