'''
Shared builders for the unit tests: tiny configurations, agents and filled
replay buffers that keep every test within CPU-seconds.
'''

import numpy as np
import torch
from src.agents.agent import Agent
from src.core.frames import Frame, Observation, Transition
from src.core.replay_buffer import ReplayBuffer
from src.core.rng import RngStream
from src.models.model import AlgorithmName, AlgorithmSpec, AugmentKind, AugmentSpec, HyperParams, RunConfig


TINY_HYPER = dict(batch_size=4, buffer_capacity=64, total_steps=24, init_steps=8, eval_interval=12,
                  eval_episodes=1, log_interval=6, encoder_layers=1, num_filters=2, projection_dim=4,
                  hidden_dim=8, masker_channels=2)

TINY_ENV = dict(frame_height=16, frame_width=16, episode_length=10, crop_margin=4)


def tiny_config(algorithm: str = 'madi', output_dir: str = 'runs/test', **hyper) -> RunConfig:
    return RunConfig(algorithm=algorithm,
                     env=TINY_ENV,
                     hyper={**TINY_HYPER, **hyper},
                     augment={'kind': 'overlay', 'shift_radius': 2},
                     eval_tiers=['clean', 'video_hard'],
                     seed=0,
                     output_dir=output_dir)


def tiny_config_text(algorithm: str = 'madi', total_steps: int = 10, eval_interval: int = 5) -> str:

    '''The same tiny configuration as `key = value` text.'''

    lines = [f'algorithm = {algorithm}', 'eval_tiers = clean, video_hard', 'augment.shift_radius = 2']
    lines += [f'env.{key} = {value}' for key, value in TINY_ENV.items()]
    hyper = {**TINY_HYPER, 'total_steps': total_steps, 'eval_interval': eval_interval, 'log_interval': 5}
    lines += [f'hyper.{key} = {value}' for key, value in hyper.items()]
    return '\n'.join(lines) + '\n'


def tiny_agent(name: AlgorithmName | str,
               seed: int = 0,
               dtype: torch.dtype = torch.float32,
               augment: AugmentKind = AugmentKind.OVERLAY,
               size: int = 16,
               **hyper) -> Agent:

    algo = AlgorithmSpec.from_name(AlgorithmName(name), augment)
    render = size + 4 if algo.crops else size
    return Agent(algo=algo,
                 hyper=HyperParams(**{**TINY_HYPER, **hyper}),
                 augment=AugmentSpec(kind=augment, shift_radius=2),
                 obs_shape=(9, render, render),
                 frame_hw=(size, size),
                 action_dim=2,
                 rng=RngStream(seed),
                 dtype=dtype)


def random_observation(rng: np.random.Generator, size: int = 16, k: int = 3) -> Observation:
    return Observation(tuple(Frame(rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8))
                             for _ in range(k)))


def filled_buffer(n: int = 16, size: int = 16, seed: int = 0) -> ReplayBuffer:

    '''Buffer holding `n` random transitions with rewards in [0, 1).'''

    rng = np.random.default_rng(seed)
    buffer = ReplayBuffer(n, (9, size, size), 2)
    for _ in range(n):
        buffer.push(Transition(obs=random_observation(rng, size),
                               action=rng.uniform(-1.0, 1.0, size=2),
                               reward=float(rng.uniform()),
                               next_obs=random_observation(rng, size)))
    return buffer
