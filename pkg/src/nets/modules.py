'''
Networks of the agents: Masker, shared ConvNet encoder, actor and twin critic.

    obs (B, 3k, H, W) ── Masker ⊙ ──> Encoder ──┬─> Actor  (own projection, features detached)
                                                └─> Critic (projection shared by Q1 and Q2)

The Masker sees one RGB frame at a time; `apply_mask` folds the k stacked
frames into the batch axis so a single forward pass masks every frame.
'''

from collections.abc import Callable
import math
import torch
import torch.nn as nn
from src.core.errors import ShapeError

LOG_PROB_EPS = 1e-6
MASKER_OUTPUT_SCALE = 1e-4


def build_seeded(factory: Callable[[], nn.Module], seed: int) -> nn.Module:

    '''Constructs a module under a private torch seed, leaving the global RNG untouched.'''

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return factory()


class Masker(nn.Module):

    '''
    Three 3×3 convolutions (stride 1, zero padding 1): 3 → c → c → 1, ReLU
    after the first two, Sigmoid on the output. Output keeps the input's
    spatial size and lies in (0, 1).

    `forced_value`, when set, replaces the output by a constant mask of that
    value (used to compare against unmasked baselines).
    '''

    def __init__(self, channels: int = 32):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(3, channels, kernel_size=3, stride=1, padding=1),
            nn.ReLU(),
            nn.Conv2d(channels, channels, kernel_size=3, stride=1, padding=1),
            nn.ReLU(),
            nn.Conv2d(channels, 1, kernel_size=3, stride=1, padding=1),
            nn.Sigmoid(),
        )
        self.forced_value: float | None = None

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        if self.forced_value is not None:
            n, _, h, w = frames.shape
            return torch.full((n, 1, h, w), float(self.forced_value), dtype=frames.dtype, device=frames.device)
        return self.layers(frames)


def masker_init(channels: int = 32, seed: int = 0) -> Masker:

    '''
    Builds a Masker whose first masks are ≈ 0.5 everywhere.

    Weights use the standard fan-in scaled init, the output layer's weights
    are scaled by 1e-4 and every bias is zero, so a zero frame maps to
    exactly 0.5.
    '''

    masker = build_seeded(lambda: Masker(channels), seed)
    with torch.no_grad():
        for layer in masker.layers:
            if isinstance(layer, nn.Conv2d):
                layer.bias.zero_()
        masker.layers[-2].weight.mul_(MASKER_OUTPUT_SCALE)
    return masker


def apply_mask(masker: Masker, obs: torch.Tensor) -> torch.Tensor:

    '''
    Masks every stacked frame with one Masker forward pass.

    (B, 3k, H, W) is split into k frames, concatenated along the batch axis
    to (kB, 3, H, W), masked with (kB, 1, H, W), split back and multiplied
    frame by frame, broadcasting over the RGB channels.

    Raises:
        ShapeError: If the channel count is not a multiple of 3.
    '''

    if obs.dim() != 4 or obs.shape[1] % 3 != 0:
        raise ShapeError(f'apply_mask needs (B, 3k, H, W) input, received {tuple(obs.shape)}')
    k = obs.shape[1] // 3
    frames = obs.chunk(k, dim=1)
    masks = masker(torch.cat(frames, dim=0)).chunk(k, dim=0)
    return torch.cat([m * f for m, f in zip(masks, frames)], dim=1)


def frame_masks(masker: Masker, obs: torch.Tensor) -> torch.Tensor:

    '''Masks of every stacked frame as (B, k, H, W).'''

    k = obs.shape[1] // 3
    masks = masker(torch.cat(obs.chunk(k, dim=1), dim=0))
    return torch.cat(masks.chunk(k, dim=0), dim=1)


def conv_output_size(size: int, num_layers: int) -> int:

    '''Spatial size after the encoder: stride 2 first layer, stride 1 after, 3×3 kernels, no padding.'''

    out = (size - 3) // 2 + 1 - 2 * (num_layers - 1)
    if out < 1:
        raise ValueError(f'An encoder of {num_layers} layers does not fit a {size}-pixel input')
    return out


class Encoder(nn.Module):

    '''Shared ConvNet: 3×3 convolutions, first with stride 2, ReLU between layers, flattened output.'''

    def __init__(self, in_channels: int, height: int, width: int, num_layers: int = 5, num_filters: int = 32):
        super().__init__()
        layers: list[nn.Module] = [nn.Conv2d(in_channels, num_filters, kernel_size=3, stride=2)]
        for _ in range(1, num_layers):
            layers.append(nn.ReLU())
            layers.append(nn.Conv2d(num_filters, num_filters, kernel_size=3, stride=1))
        layers.append(nn.Flatten())
        self.layers = nn.Sequential(*layers)
        self.out_dim = num_filters * conv_output_size(height, num_layers) * conv_output_size(width, num_layers)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        return self.layers(obs)


class Projection(nn.Module):

    '''Linear map to a small vector followed by LayerNorm and Tanh.'''

    def __init__(self, in_dim: int, out_dim: int = 100):
        super().__init__()
        self.layers = nn.Sequential(nn.Linear(in_dim, out_dim), nn.LayerNorm(out_dim), nn.Tanh())
        self.out_dim = out_dim

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.layers(features)


def mlp(in_dim: int, hidden_dim: int, out_dim: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(in_dim, hidden_dim), nn.ReLU(),
                         nn.Linear(hidden_dim, hidden_dim), nn.ReLU(),
                         nn.Linear(hidden_dim, out_dim))


def squashed_gaussian(mu: torch.Tensor,
                      log_std: torch.Tensor,
                      noise: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:

    '''
    Reparameterised tanh-Gaussian sample and its log-density.

    Returns:
        (action, log_prob): a = tanh(μ + σ·ε) and
            log N(μ + σ·ε; μ, σ) − Σ log(1 − a² + 1e-6), shape (B, 1).
    '''

    pi = mu + noise * log_std.exp()
    log_prob = (-0.5 * noise.pow(2) - log_std).sum(dim=-1, keepdim=True)
    log_prob = log_prob - 0.5 * math.log(2.0 * math.pi) * mu.shape[-1]
    action = torch.tanh(pi)
    log_prob = log_prob - torch.log(torch.relu(1.0 - action.pow(2)) + LOG_PROB_EPS).sum(dim=-1, keepdim=True)
    return action, log_prob


class Actor(nn.Module):

    '''Own projection, ReLU trunk and a (mean, log-std) head; log-std clamped to [log_std_min, log_std_max].'''

    def __init__(self, feature_dim: int, action_dim: int, projection_dim: int = 100,
                 hidden_dim: int = 512, log_std_min: float = -10.0, log_std_max: float = 2.0):
        super().__init__()
        self.projection = Projection(feature_dim, projection_dim)
        self.trunk = mlp(projection_dim, hidden_dim, 2 * action_dim)
        self.action_dim = action_dim
        self.log_std_min = log_std_min
        self.log_std_max = log_std_max

    def forward(self,
                features: torch.Tensor,
                noise: torch.Tensor | None = None,
                generator: torch.Generator | None = None) -> tuple[torch.Tensor, ...]:

        '''
        Returns (mean, log_std, action, log_prob).

        `noise` fixes ε; otherwise it is drawn from `generator`.
        '''

        mu, log_std = self.trunk(self.projection(features)).chunk(2, dim=-1)
        log_std = torch.clamp(log_std, self.log_std_min, self.log_std_max)
        if noise is None:
            noise = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
        action, log_prob = squashed_gaussian(mu, log_std, noise)
        return mu, log_std, action, log_prob

    def deterministic(self, features: torch.Tensor) -> torch.Tensor:
        mu, _ = self.trunk(self.projection(features)).chunk(2, dim=-1)
        return torch.tanh(mu)


class Critic(nn.Module):

    '''Twin Q-networks on top of one shared projection; the action joins after the projection.'''

    def __init__(self, feature_dim: int, action_dim: int, projection_dim: int = 100, hidden_dim: int = 512):
        super().__init__()
        self.projection = Projection(feature_dim, projection_dim)
        self.q1 = mlp(projection_dim + action_dim, hidden_dim, 1)
        self.q2 = mlp(projection_dim + action_dim, hidden_dim, 1)

    def forward(self, features: torch.Tensor, action: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        joined = torch.cat([self.projection(features), action], dim=-1)
        return self.q1(joined), self.q2(joined)
