'''
Policy evaluation on a distraction tier.

Evaluation builds its own environment from a dedicated random stream and
drives a frozen policy, so it never reads from or writes to the training
buffer, parameters or random streams.
'''

from collections.abc import Callable
import logging
import numpy as np
from src.core.frames import Observation
from src.core.rng import derive_seed
from src.envs.reacher import VisualReacherEnv
from src.models.model import DistractionSpec, RunConfig, Tier

logger = logging.getLogger(__name__)

Policy = Callable[[Observation], np.ndarray]


def eval_rng(seed: int, tier: Tier | str, step: int) -> np.random.Generator:

    '''Generator of the eval substream for one (tier, step) evaluation point.'''

    return np.random.default_rng(derive_seed(seed, f'eval/{Tier(tier).value}/{step}'))


def make_env(config: RunConfig, tier: Tier | str, rng: np.random.Generator, cropped: bool = False) -> VisualReacherEnv:
    return VisualReacherEnv(config.env,
                            DistractionSpec.for_tier(Tier(tier), config.distraction),
                            rng,
                            frame_stack=config.hyper.frame_stack,
                            cropped=cropped)


def rollout(policy: Policy, env: VisualReacherEnv) -> float:

    '''Undiscounted return of one full episode.'''

    obs = env.reset()
    total = 0.0
    while not env.done:
        obs, reward, _ = env.step(policy(obs))
        total += reward
    return total


def evaluate(policy: Policy, env: VisualReacherEnv, episodes: int) -> float:

    '''
    Mean undiscounted return of `episodes` rollouts.

    Args:
        policy: Deterministic action function, e.g. `PolicySnapshot.act`.
        env: Environment of the tier to evaluate on.
        episodes: Number of episodes E ≥ 1.

    Returns:
        float: The mean return.
    '''

    if episodes < 1:
        raise ValueError(f'At least one evaluation episode is required, received {episodes}')
    returns = [rollout(policy, env) for _ in range(episodes)]
    logger.debug('Evaluated %d episodes on %s: %s', episodes, env.dspec.tier.value, returns)
    return float(np.mean(returns))


def scripted_policy(env: VisualReacherEnv) -> Policy:

    '''Oracle controller bound to `env`; reference for the achievable return.'''

    return lambda obs: env.oracle_action()
