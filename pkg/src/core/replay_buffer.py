'''
Fixed-capacity ring replay buffer.

Observations are kept as uint8 arrays so torch tensors are created only at the
update step; sampling is uniform with replacement and driven by an explicit
numpy generator, so batches are a pure function of the generator state.
'''

from dataclasses import dataclass
import logging
import numpy as np
from src.core.errors import InsufficientDataError, ShapeError
from src.core.frames import Observation, Transition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionBatch:

    '''
    Column view of sampled transitions.

    Shapes:
        obs, next_obs: (B, 3k, H, W) uint8
        action:        (B, d) float32
        reward:        (B,) float32
        bootstrap:     (B,) float32 (1.0 when the target bootstraps)
    '''

    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    bootstrap: np.ndarray

    def __len__(self) -> int:
        return self.reward.shape[0]


class ReplayBuffer:

    '''Ring buffer: once full, each push overwrites the oldest entry.'''

    def __init__(self, capacity: int, obs_shape: tuple[int, int, int], action_dim: int):
        if capacity <= 0:
            raise ValueError(f'Replay capacity must be positive, received {capacity}')
        self.capacity = int(capacity)
        self.obs_shape = tuple(obs_shape)
        self.action_dim = int(action_dim)

        self._obs = np.empty((self.capacity, *self.obs_shape), dtype=np.uint8)
        self._next_obs = np.empty((self.capacity, *self.obs_shape), dtype=np.uint8)
        self._action = np.empty((self.capacity, self.action_dim), dtype=np.float32)
        self._reward = np.empty((self.capacity,), dtype=np.float32)
        self._bootstrap = np.empty((self.capacity,), dtype=np.float32)

        self._cursor = 0
        self._pushes = 0

    def __len__(self) -> int:
        return min(self._pushes, self.capacity)

    @property
    def pushes(self) -> int:
        return self._pushes

    def push(self, transition: Transition) -> None:

        '''
        Stores one transition, overwriting the oldest when full.

        Raises:
            ShapeError: If the observation or action shape differs from the
                buffer's declared shapes.
        '''

        obs = transition.obs.stacked()
        next_obs = transition.next_obs.stacked()
        action = np.asarray(transition.action, dtype=np.float32).reshape(-1)

        if obs.shape != self.obs_shape or next_obs.shape != self.obs_shape:
            raise ShapeError(f'Observation shape {obs.shape} does not match buffer shape {self.obs_shape}')
        if action.shape != (self.action_dim,):
            raise ShapeError(f'Action shape {action.shape} does not match buffer action dim {self.action_dim}')

        slot = self._cursor
        self._obs[slot] = obs
        self._next_obs[slot] = next_obs
        self._action[slot] = action
        self._reward[slot] = transition.reward
        self._bootstrap[slot] = 1.0 if transition.bootstrap else 0.0

        self._cursor = (self._cursor + 1) % self.capacity
        self._pushes += 1

        if self._pushes == self.capacity:
            logger.info('Replay buffer reached capacity %d; overwriting oldest entries from now on',
                        self.capacity)

    def ordered_indices(self) -> np.ndarray:
        '''Storage slots from oldest to newest.'''
        if self._pushes < self.capacity:
            return np.arange(self._pushes)
        return (np.arange(self.capacity) + self._cursor) % self.capacity

    def transition(self, slot: int) -> Transition:
        return Transition(obs=Observation.from_stacked(self._obs[slot]),
                          action=self._action[slot].copy(),
                          reward=float(self._reward[slot]),
                          next_obs=Observation.from_stacked(self._next_obs[slot]),
                          bootstrap=bool(self._bootstrap[slot] > 0.5))

    def items(self) -> list[Transition]:
        '''Stored transitions in push order, oldest first.'''
        return [self.transition(int(slot)) for slot in self.ordered_indices()]

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:

        '''
        Draws `n` storage slots uniformly with replacement.

        Raises:
            InsufficientDataError: If fewer than `n` transitions are stored.
        '''

        if n < 1:
            raise ValueError(f'Batch size must be at least 1, received {n}')
        size = len(self)
        if n > size:
            raise InsufficientDataError(f'Cannot sample {n} transitions from a buffer holding {size}')
        return rng.integers(0, size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> TransitionBatch:

        '''Samples a batch of `n` transitions; see `sample_indices`.'''

        idx = self.sample_indices(n, rng)
        return TransitionBatch(obs=self._obs[idx],
                               action=self._action[idx],
                               reward=self._reward[idx],
                               next_obs=self._next_obs[idx],
                               bootstrap=self._bootstrap[idx])
