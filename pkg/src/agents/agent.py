'''
One SAC actor-critic core for every algorithm of the lab.

The algorithms differ only in how observation batches are preprocessed
before the shared encoder:

    sac       unit-interval floats
    drq       random shift (±radius) for both updates
    rad       random crop from the larger render for updates, centre crop when acting
    svea      critic batch = concat(clean, δ(clean)); the actor only sees clean data
    madi      svea + a Masker in front of the encoder, trained by the critic loss
    madi_sac  sac + Masker

Gradient routing: the critic loss updates critic, encoder and Masker; the
actor sees encoder features detached, so neither encoder nor Masker ever
receives actor gradients. Only critic and encoder have target copies.
'''

from collections.abc import Callable
from dataclasses import dataclass
import copy
import logging
import math
import numpy as np
import torch
import torch.nn.functional as F
from src.augment.augmentations import center_crop, overlay, random_conv, random_crop, random_shift, splice
from src.augment.image_source import image_batch
from src.core.errors import CheckpointError
from src.core.frames import Observation, Transition
from src.core.replay_buffer import ReplayBuffer, TransitionBatch
from src.core.rng import RngStream
from src.models.model import AlgorithmSpec, AugmentKind, AugmentSpec, HyperParams, Phase
from src.nets.modules import Actor, Critic, Encoder, Masker, apply_mask, build_seeded, masker_init
from src.nets.params import ParamSet, count_parameters, ema_update, load_param_set, param_set

logger = logging.getLogger(__name__)


def to_unit_tensor(obs, dtype: torch.dtype = torch.float32, device: str = 'cpu') -> torch.Tensor:

    '''uint8 arrays/tensors are divided by 255; float tensors are taken as already in [0, 1].'''

    if isinstance(obs, Observation):
        obs = obs.stacked()[None]
    tensor = torch.as_tensor(obs, device=device)
    if tensor.dtype == torch.uint8:
        return tensor.to(dtype) / 255.0
    return tensor.to(dtype)


def act_view(x: torch.Tensor, algo: AlgorithmSpec, frame_hw: tuple[int, int], masker: Masker | None) -> torch.Tensor:

    '''Act-phase pipeline shared by the agent and its evaluation snapshots.'''

    if algo.crops:
        x = center_crop(x, frame_hw)
    if algo.use_masker:
        x = apply_mask(masker, x)
    return x


@dataclass
class UpdateInfo:

    '''Losses of one update step; actor and temperature losses only on actor steps.'''

    loss_q: float
    loss_pi: float | None = None
    loss_alpha: float | None = None
    alpha: float | None = None


@dataclass
class PolicySnapshot:

    '''Frozen copy of the acting networks; evaluating it never touches training state.'''

    algo: AlgorithmSpec
    frame_hw: tuple[int, int]
    encoder: Encoder
    actor: Actor
    critic: Critic
    masker: Masker | None = None
    dtype: torch.dtype = torch.float32
    device: str = 'cpu'

    def act(self, obs: Observation) -> np.ndarray:
        '''Deterministic action tanh(μ).'''
        with torch.no_grad():
            x = act_view(to_unit_tensor(obs, self.dtype, self.device), self.algo, self.frame_hw, self.masker)
            return self.actor.deterministic(self.encoder(x))[0].cpu().numpy().astype(np.float64)


class Agent:

    '''
    SAC agent parameterised by an AlgorithmSpec.

    Every network is initialised from its own `net-init/<name>` seed, so two
    agents built from the same RngStream share all common parameters even
    when only one of them has a Masker.
    '''

    def __init__(self,
                 algo: AlgorithmSpec,
                 hyper: HyperParams,
                 augment: AugmentSpec,
                 obs_shape: tuple[int, int, int],
                 frame_hw: tuple[int, int],
                 action_dim: int,
                 rng: RngStream,
                 device: str = 'cpu',
                 dtype: torch.dtype = torch.float32):
        self.algo = algo
        self.hyper = hyper
        self.augment_spec = augment
        self.obs_shape = tuple(obs_shape)
        self.frame_hw = tuple(frame_hw)
        self.action_dim = action_dim
        self.device = device
        self.dtype = dtype

        def seed(name: str) -> int:
            return rng.substream_seed(f'net-init/{name}')

        in_channels = obs_shape[0]
        height, width = self.frame_hw
        self.encoder = build_seeded(lambda: Encoder(in_channels, height, width,
                                                    hyper.encoder_layers, hyper.num_filters), seed('encoder'))
        feature_dim = self.encoder.out_dim
        self.actor = build_seeded(lambda: Actor(feature_dim, action_dim, hyper.projection_dim, hyper.hidden_dim,
                                                hyper.log_std_min, hyper.log_std_max), seed('actor'))
        self.critic = build_seeded(lambda: Critic(feature_dim, action_dim, hyper.projection_dim,
                                                  hyper.hidden_dim), seed('critic'))
        self.masker = masker_init(hyper.masker_channels, seed('masker')) if algo.use_masker else None

        for module in self._online_modules():
            module.to(device=device, dtype=dtype)

        self.target_encoder = copy.deepcopy(self.encoder).requires_grad_(False)
        self.target_critic = copy.deepcopy(self.critic).requires_grad_(False)

        self.log_alpha = torch.tensor(math.log(hyper.init_temperature), dtype=dtype, device=device,
                                      requires_grad=True)
        self.target_entropy = -float(action_dim)

        betas = (hyper.beta1, hyper.beta2)
        self.actor_optimizer = torch.optim.Adam(self.actor.parameters(), lr=hyper.actor_lr, betas=betas)
        self.critic_optimizer = torch.optim.Adam(list(self.critic.parameters()) + list(self.encoder.parameters()),
                                                 lr=hyper.critic_lr, betas=betas)
        self.masker_optimizer = (torch.optim.Adam(self.masker.parameters(), lr=hyper.masker_lr, betas=betas)
                                 if self.masker is not None else None)
        self.alpha_optimizer = torch.optim.Adam([self.log_alpha], lr=hyper.alpha_lr,
                                                betas=(hyper.alpha_beta1, hyper.alpha_beta2))

        self.augment_rng = rng.numpy('augment')
        self.replay_rng = rng.numpy('replay')
        self.policy_generator = rng.torch('policy')

        self.critic_updates = 0
        self.actor_updates = 0
        self.masker_updates = 0
        self.target_updates = 0

    # ------------------------------------------------------------------ helpers

    def _online_modules(self) -> list[torch.nn.Module]:
        modules = [self.encoder, self.actor, self.critic]
        if self.masker is not None:
            modules.append(self.masker)
        return modules

    @property
    def alpha(self) -> torch.Tensor:
        return self.log_alpha.exp()

    def parameter_counts(self) -> dict[str, int]:
        counts = {'encoder': count_parameters(self.encoder),
                  'actor': count_parameters(self.actor),
                  'critic': count_parameters(self.critic)}
        if self.masker is not None:
            counts['masker'] = count_parameters(self.masker)
        return counts

    def _tensor(self, array: np.ndarray) -> torch.Tensor:
        return torch.as_tensor(array, dtype=self.dtype, device=self.device)

    def _delta(self, x: torch.Tensor) -> torch.Tensor:

        '''The critic-batch augmentation δ of svea and madi.'''

        kind = self.algo.augment
        height, width = x.shape[-2:]
        if kind == AugmentKind.OVERLAY:
            images = image_batch(self.augment_rng, x.shape[0], height, width, self.dtype).to(self.device)
            return overlay(x, images, self.augment_spec.alpha)
        if kind == AugmentKind.CONV:
            return random_conv(x, self.augment_rng)
        if kind == AugmentKind.SPLICE:
            images = image_batch(self.augment_rng, x.shape[0], height, width, self.dtype).to(self.device)
            return splice(x, images, self.augment_spec.hsv_lo, self.augment_spec.hsv_hi)
        raise ValueError(f'{kind.value} is not a critic-batch augmentation')

    # ------------------------------------------------------------ preprocessing

    def preprocess(self, obs, phase: Phase | str) -> torch.Tensor:

        '''
        Turns an observation batch into encoder input for `phase`.

        act           float (+ centre crop for rad) (+ mask)
        critic        float (+ shift for drq, random crop for rad)
                      (+ concat(clean, δ(clean)) for svea/madi) (+ mask)
        actor_update  float (+ shift for drq, random crop for rad) (+ mask); never δ

        Raises:
            ValueError: On an unknown phase.
        '''

        phase = Phase(phase)
        x = to_unit_tensor(obs, self.dtype, self.device)

        if phase == Phase.ACT:
            return act_view(x, self.algo, self.frame_hw, self.masker)

        if self.algo.augment == AugmentKind.SHIFT:
            x = random_shift(x, self.augment_spec.shift_radius, self.augment_rng)
        elif self.algo.crops:
            x = random_crop(x, self.frame_hw, self.augment_rng)

        if phase == Phase.CRITIC and self.algo.svea_doubling:
            x = torch.cat([x, self._delta(x)], dim=0)

        if self.algo.use_masker:
            x = apply_mask(self.masker, x)
        return x

    # ------------------------------------------------------------------- acting

    def sample_action(self, obs: Observation) -> np.ndarray:
        with torch.no_grad():
            features = self.encoder(self.preprocess(obs, Phase.ACT))
            _, _, action, _ = self.actor(features, generator=self.policy_generator)
        return action[0].cpu().numpy().astype(np.float64)

    def select_action(self, obs: Observation) -> np.ndarray:
        with torch.no_grad():
            features = self.encoder(self.preprocess(obs, Phase.ACT))
            return self.actor.deterministic(features)[0].cpu().numpy().astype(np.float64)

    def snapshot(self) -> PolicySnapshot:
        return PolicySnapshot(algo=self.algo,
                              frame_hw=self.frame_hw,
                              encoder=copy.deepcopy(self.encoder).requires_grad_(False),
                              actor=copy.deepcopy(self.actor).requires_grad_(False),
                              critic=copy.deepcopy(self.critic).requires_grad_(False),
                              masker=copy.deepcopy(self.masker).requires_grad_(False) if self.masker else None,
                              dtype=self.dtype,
                              device=self.device)

    def min_q(self, obs: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        '''min(Q1, Q2) on the act-phase view of unit-interval observations, shape (N,).'''
        q1, q2 = self.critic(self.encoder(self.preprocess(obs, Phase.ACT)), action)
        return torch.min(q1, q2).squeeze(-1)

    # ------------------------------------------------------------------- losses

    def critic_target(self, batch: TransitionBatch) -> torch.Tensor:

        '''
        y = r + bootstrap·γ·(min(Q1ᵗᵍᵗ, Q2ᵗᵍᵗ)(s′, a′) − α·log π(a′|s′)), shape (B, 1).

        s′ goes through the act-phase pipeline; a′ is sampled from the current
        policy and the twin Q values come from the target encoder and critic.
        '''

        with torch.no_grad():
            next_x = self.preprocess(batch.next_obs, Phase.ACT)
            _, _, next_action, next_log_prob = self.actor(self.encoder(next_x), generator=self.policy_generator)
            target_q1, target_q2 = self.target_critic(self.target_encoder(next_x), next_action)
            soft_value = torch.min(target_q1, target_q2) - self.alpha.detach() * next_log_prob
            reward = self._tensor(batch.reward).unsqueeze(-1)
            bootstrap = self._tensor(batch.bootstrap).unsqueeze(-1)
            return reward + bootstrap * self.hyper.discount * soft_value

    def critic_loss(self, x: torch.Tensor, action: torch.Tensor, target: torch.Tensor) -> torch.Tensor:

        '''
        Σᵢ mean (Qᵢ − y)² over the batch.

        For a doubled batch the clean and augmented halves are weighted by
        svea_alpha and svea_beta; at 0.5/0.5 this equals the plain mean over
        the concatenated batch.
        '''

        q1, q2 = self.critic(self.encoder(x), action)
        if not self.algo.svea_doubling:
            return F.mse_loss(q1, target) + F.mse_loss(q2, target)

        half = target.shape[0] // 2
        clean = F.mse_loss(q1[:half], target[:half]) + F.mse_loss(q2[:half], target[:half])
        augmented = F.mse_loss(q1[half:], target[half:]) + F.mse_loss(q2[half:], target[half:])
        return self.hyper.svea_alpha * clean + self.hyper.svea_beta * augmented

    def actor_loss(self, features: torch.Tensor,
                   noise: torch.Tensor | None = None) -> tuple[torch.Tensor, torch.Tensor]:

        '''
        mean(α·log π(ã|s) − min(Q1, Q2)(s, ã)) on detached encoder features.

        Returns:
            (loss, log_prob)
        '''

        _, _, action, log_prob = self.actor(features, noise=noise, generator=self.policy_generator)
        q1, q2 = self.critic(features, action)
        loss = (self.alpha.detach() * log_prob - torch.min(q1, q2)).mean()
        return loss, log_prob

    def temperature_loss(self, log_prob: torch.Tensor) -> torch.Tensor:
        '''mean(−α·(log π + H_tgt)) with log π treated as a constant.'''
        return (-self.alpha * (log_prob.detach() + self.target_entropy)).mean()

    # ------------------------------------------------------------------ updates

    def update_critic(self, batch: TransitionBatch) -> float:

        '''One gradient step on critic, encoder and (masker algorithms) Masker.'''

        target = self.critic_target(batch)
        x = self.preprocess(batch.obs, Phase.CRITIC)
        action = self._tensor(batch.action)
        if self.algo.svea_doubling:
            target = target.repeat(2, 1)
            action = action.repeat(2, 1)

        loss = self.critic_loss(x, action, target)

        self.critic_optimizer.zero_grad(set_to_none=True)
        if self.masker_optimizer is not None:
            self.masker_optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self.critic_optimizer.step()
        self.critic_updates += 1

        if self.masker_optimizer is not None and self.critic_updates % self.hyper.masker_update_freq == 0:
            self.masker_optimizer.step()
            self.masker_updates += 1
        return float(loss.item())

    def update_actor(self, batch: TransitionBatch) -> tuple[float, torch.Tensor]:

        '''One gradient step on the actor; encoder and Masker stay untouched.'''

        with torch.no_grad():
            features = self.encoder(self.preprocess(batch.obs, Phase.ACTOR_UPDATE))

        loss, log_prob = self.actor_loss(features)
        self.actor_optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self.actor_optimizer.step()
        # the critic's .grad picked up by this loss is never applied
        self.critic_optimizer.zero_grad(set_to_none=True)
        self.actor_updates += 1
        return float(loss.item()), log_prob

    def update_temperature(self, log_prob: torch.Tensor) -> float:
        loss = self.temperature_loss(log_prob)
        self.alpha_optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self.alpha_optimizer.step()
        return float(loss.item())

    def update_targets(self) -> None:
        ema_update(self.critic, self.target_critic, self.hyper.critic_tau)
        ema_update(self.encoder, self.target_encoder, self.hyper.encoder_tau)
        self.target_updates += 1

    def update(self, buffer: ReplayBuffer, step: int) -> UpdateInfo:

        '''
        One training step: critic (+encoder, +Masker) every step, actor and
        temperature every `actor_update_freq` steps, target EMA every
        `target_update_freq` steps.
        '''

        batch = buffer.sample(self.hyper.batch_size, self.replay_rng)
        info = UpdateInfo(loss_q=self.update_critic(batch))

        if step % self.hyper.actor_update_freq == 0:
            info.loss_pi, log_prob = self.update_actor(batch)
            info.loss_alpha = self.update_temperature(log_prob)
            info.alpha = float(self.alpha.item())

        if step % self.hyper.target_update_freq == 0:
            self.update_targets()
        return info

    # -------------------------------------------------------------- checkpoints

    def param_sets(self) -> dict[str, ParamSet]:
        sets = {'encoder': param_set(self.encoder),
                'actor': param_set(self.actor),
                'critic': param_set(self.critic),
                'encoder_target': param_set(self.target_encoder),
                'critic_target': param_set(self.target_critic),
                'temperature': ParamSet(log_alpha=self.log_alpha.detach().cpu().clone())}
        if self.masker is not None:
            sets['masker'] = param_set(self.masker)
        return sets

    def load_param_sets(self, sets: dict[str, ParamSet]) -> None:

        '''
        Restores every network from checkpoint parameter sets.

        Raises:
            CheckpointError: If a group is missing, unexpected or does not fit.
        '''

        modules = {'encoder': self.encoder, 'actor': self.actor, 'critic': self.critic,
                   'encoder_target': self.target_encoder, 'critic_target': self.target_critic}
        if self.masker is not None:
            modules['masker'] = self.masker
        expected = set(modules) | {'temperature'}
        if set(sets) != expected:
            raise CheckpointError(f'Checkpoint groups {sorted(sets)} do not match the model {sorted(expected)}')

        for group, module in modules.items():
            load_param_set(module, sets[group], group)
        with torch.no_grad():
            self.log_alpha.copy_(sets['temperature']['log_alpha'].to(self.dtype))
        logger.debug('Restored parameter groups %s', sorted(sets))


@dataclass
class StepResult:

    '''Outcome of one environment interaction and the update that followed it.'''

    reward: float
    done: bool
    update: UpdateInfo | None = None
    episode_return: float | None = None


def agent_step(t: int,
               env,
               agent: Agent,
               buffer: ReplayBuffer,
               schedule: HyperParams,
               explore_rng: np.random.Generator,
               episode_state: dict,
               act: Callable[[Observation], np.ndarray] | None = None) -> StepResult:

    '''
    One interaction at global step t followed by the scheduled updates.

    Uniform random actions are taken while t < init_steps and no update is
    made; from then on every step updates the critic. `episode_state` carries
    the running return between calls.

    Every stored transition bootstraps: episodes end only by time limit.
    '''

    if env.done or env.obs is None:
        env.reset()
        episode_state['return'] = 0.0

    obs = env.obs
    if t < schedule.init_steps:
        action = explore_rng.uniform(-1.0, 1.0, size=env.spec.action_dim)
    else:
        action = (act or agent.sample_action)(obs)

    next_obs, reward, done = env.step(action)
    buffer.push(Transition(obs=obs, action=action, reward=reward, next_obs=next_obs, bootstrap=True))
    episode_state['return'] = episode_state.get('return', 0.0) + reward

    result = StepResult(reward=reward, done=done)
    if done:
        result.episode_return = episode_state['return']

    if t >= schedule.init_steps and len(buffer) >= schedule.batch_size:
        result.update = agent.update(buffer, t)
    return result
