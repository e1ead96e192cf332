'''
Pydantic schemas for everything a run is configured with.

Closed vocabularies are `str` enums so they round-trip through the flat
`key = value` config text; cross-field rules are `model_validator`s.
'''

from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


AUGMENT_NAMESPACE = 'augment'


class TaskId(str, Enum):

    '''Synthetic reacher tasks'''

    REACHER_DENSE = 'reacher_dense'
    REACHER_SPARSE = 'reacher_sparse'


class Tier(str, Enum):

    '''Distraction tiers, from no distraction to intensity-parameterised'''

    CLEAN = 'clean'
    VIDEO_EASY = 'video_easy'
    VIDEO_HARD = 'video_hard'
    DISTRACTING = 'distracting'


class AugmentKind(str, Enum):

    '''Data augmentations'''

    OVERLAY = 'overlay'
    CONV = 'conv'
    SPLICE = 'splice'
    SHIFT = 'shift'
    CROP = 'crop'
    NONE = 'none'


class AlgorithmName(str, Enum):

    '''Agents sharing the SAC core'''

    SAC = 'sac'
    DRQ = 'drq'
    RAD = 'rad'
    SVEA = 'svea'
    MADI = 'madi'
    MADI_SAC = 'madi_sac'


class Phase(str, Enum):

    '''Where an observation batch is consumed'''

    ACT = 'act'
    CRITIC = 'critic'
    ACTOR_UPDATE = 'actor_update'


# Augmentations a madi/svea run may use as the critic-batch δ
DOUBLING_AUGMENTS = (AugmentKind.OVERLAY, AugmentKind.CONV, AugmentKind.SPLICE)


class HyperParams(BaseModel):

    '''Training hyperparameters; defaults follow the simulation column of the reference table.'''

    model_config = ConfigDict(extra='forbid')

    actor_lr: float = Field(default=1e-3, gt=0)
    critic_lr: float = Field(default=1e-3, gt=0)
    masker_lr: float = Field(default=1e-3, gt=0)
    alpha_lr: float = Field(default=1e-4, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    alpha_beta1: float = Field(default=0.5, ge=0, lt=1)
    alpha_beta2: float = Field(default=0.999, ge=0, lt=1)
    discount: float = Field(default=0.99, gt=0, le=1)
    frame_stack: int = Field(default=3, ge=1)
    batch_size: int = Field(default=128, ge=1)
    buffer_capacity: int = Field(default=100_000, ge=1)
    total_steps: int = Field(default=20_000, ge=1)
    init_steps: int = Field(default=1000, ge=0)
    actor_update_freq: int = Field(default=2, ge=1)
    target_update_freq: int = Field(default=2, ge=1)
    masker_update_freq: int = Field(default=1, ge=1)
    critic_tau: float = Field(default=0.01, gt=0, le=1)
    encoder_tau: float = Field(default=0.05, gt=0, le=1)
    init_temperature: float = Field(default=0.1, gt=0)
    svea_alpha: float = Field(default=0.5, ge=0)
    svea_beta: float = Field(default=0.5, ge=0)
    eval_interval: int = Field(default=1000, ge=1)
    eval_episodes: int = Field(default=10, ge=1)
    log_interval: int = Field(default=250, ge=1)

    # network sizes
    encoder_layers: int = Field(default=5, ge=1)
    num_filters: int = Field(default=32, ge=1)
    projection_dim: int = Field(default=100, ge=1)
    hidden_dim: int = Field(default=512, ge=1)
    masker_channels: int = Field(default=32, ge=1)
    log_std_min: float = -10.0
    log_std_max: float = 2.0

    @model_validator(mode='after')
    def check_svea_weights(self) -> 'HyperParams':

        '''The clean and augmented critic losses are a convex combination.'''

        if abs(self.svea_alpha + self.svea_beta - 1.0) > 1e-9:
            raise ValueError(f'svea_alpha + svea_beta must equal 1. '
                             f'Received: {self.svea_alpha} + {self.svea_beta}')
        if self.log_std_min >= self.log_std_max:
            raise ValueError(f'log_std_min must be below log_std_max. '
                             f'Received: {self.log_std_min}, {self.log_std_max}')
        return self


class EnvSpec(BaseModel):

    '''Declarative description of a synthetic reacher task'''

    model_config = ConfigDict(extra='forbid')

    task: TaskId = TaskId.REACHER_DENSE
    frame_height: int = Field(default=48, ge=16, le=128)
    frame_width: int = Field(default=48, ge=16, le=128)
    episode_length: int = Field(default=150, ge=1)
    action_dim: int = 2
    action_repeat: int = Field(default=4, ge=1)
    crop_margin: int = Field(default=16, ge=0)
    view_scale: float = Field(default=2.0, gt=0)
    step_size: float = Field(default=0.05, gt=0)
    target_radius: float = Field(default=0.08, gt=0, lt=0.5)
    reward_coef: float = Field(default=800.0, gt=0)
    reward_clip_lo: float = 0.0
    reward_clip_hi: float = 4.0
    sparse_threshold: float = Field(default=0.05, gt=0)

    @model_validator(mode='after')
    def check_geometry(self) -> 'EnvSpec':

        '''The camera moves in the plane and crop rendering stays within frame limits.'''

        if self.action_dim != 2:
            raise ValueError(f'The reacher camera moves in 2 dimensions. Received action_dim: {self.action_dim}')
        if self.reward_clip_lo > self.reward_clip_hi:
            raise ValueError(f'reward_clip_lo must not exceed reward_clip_hi. '
                             f'Received: {self.reward_clip_lo}, {self.reward_clip_hi}')
        if max(self.frame_height, self.frame_width) + self.crop_margin > 128:
            raise ValueError(f'Frame plus crop margin must stay within 128 pixels. '
                             f'Received: {self.frame_height}×{self.frame_width} + {self.crop_margin}')
        return self

    def render_size(self, cropped: bool = False) -> tuple[int, int]:
        '''(H, W) the renderer produces; crop-based agents render larger and crop back.'''
        margin = self.crop_margin if cropped else 0
        return self.frame_height + margin, self.frame_width + margin


class DistractionSettings(BaseModel):

    '''Run-level distraction knobs from which each tier's spec is derived'''

    model_config = ConfigDict(extra='forbid')

    easy_pool: int = Field(default=10, ge=1)
    hard_pool: int = Field(default=100, ge=1)
    intensity: float = Field(default=0.1, ge=0, le=1)
    max_rotation_deg: float = Field(default=15.0, ge=0)
    video_namespace: str = 'video'

    @field_validator('video_namespace')
    @classmethod
    def check_namespace(cls, value: str) -> str:
        if value == AUGMENT_NAMESPACE:
            raise ValueError(f"Video namespace must differ from the augmentation namespace '{AUGMENT_NAMESPACE}'")
        return value


class DistractionSpec(BaseModel):

    '''Distraction applied by the renderer for one tier'''

    model_config = ConfigDict(extra='forbid')

    tier: Tier = Tier.CLEAN
    pool_size: int = Field(default=1, ge=1)
    intensity: float = Field(default=0.1, ge=0, le=1)
    keep_surface: bool = False
    max_rotation_deg: float = Field(default=15.0, ge=0)
    video_namespace: str = 'video'

    @model_validator(mode='after')
    def check_namespace(self) -> 'DistractionSpec':

        '''Evaluation videos never share seeds with augmentation images.'''

        if self.video_namespace == AUGMENT_NAMESPACE:
            raise ValueError(f"Video namespace must differ from the augmentation namespace '{AUGMENT_NAMESPACE}'")
        return self

    @classmethod
    def for_tier(cls, tier: Tier, settings: DistractionSettings | None = None) -> 'DistractionSpec':

        '''
        Builds the DistractionSpec of a tier from run-level settings.

        Easy keeps the static border band of the clean surface and samples from
        the small pool; hard uses the large pool over the whole frame; the
        distracting tier is hard plus the surface band plus intensity-driven
        rotation, colour drift and pool growth.
        '''

        settings = settings or DistractionSettings()
        common = {'intensity': settings.intensity,
                  'max_rotation_deg': settings.max_rotation_deg,
                  'video_namespace': settings.video_namespace}

        if tier == Tier.CLEAN:
            return cls(tier=tier, pool_size=1, keep_surface=False, **common)
        if tier == Tier.VIDEO_EASY:
            return cls(tier=tier, pool_size=settings.easy_pool, keep_surface=True, **common)
        if tier == Tier.VIDEO_HARD:
            return cls(tier=tier, pool_size=settings.hard_pool, keep_surface=False, **common)
        return cls(tier=tier, pool_size=settings.hard_pool, keep_surface=True, **common)


class AugmentSpec(BaseModel):

    '''Augmentation parameters'''

    model_config = ConfigDict(extra='forbid')

    kind: AugmentKind = AugmentKind.OVERLAY
    alpha: float = Field(default=0.5, ge=0, le=1)
    shift_radius: int = Field(default=4, ge=0)
    hsv_lo: tuple[float, float, float] = (0.0, 0.0, 0.45)
    hsv_hi: tuple[float, float, float] = (1.0, 0.1, 0.55)

    @field_validator('hsv_lo', 'hsv_hi', mode='before')
    @classmethod
    def split_triplet(cls, value):
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(','))
        return value

    @model_validator(mode='after')
    def check_hsv_box(self) -> 'AugmentSpec':

        '''The splice box must be a valid HSV interval.'''

        for lo, hi in zip(self.hsv_lo, self.hsv_hi):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f'HSV box must satisfy 0 <= lo <= hi <= 1. '
                                 f'Received: {self.hsv_lo} .. {self.hsv_hi}')
        return self


class AlgorithmSpec(BaseModel):

    '''Which augmentation an agent uses, where, and whether it masks its input'''

    model_config = ConfigDict(extra='forbid')

    name: AlgorithmName
    augment: AugmentKind = AugmentKind.NONE
    use_masker: bool = False
    svea_doubling: bool = False

    @model_validator(mode='after')
    def check_variant(self) -> 'AlgorithmSpec':

        '''Checks masker and doubling flags against the algorithm name.'''

        name = self.name

        if name == AlgorithmName.MADI:
            if not (self.use_masker and self.svea_doubling):
                raise ValueError('madi requires the masker and SVEA-style critic doubling')

        elif name == AlgorithmName.MADI_SAC:
            if not self.use_masker or self.svea_doubling:
                raise ValueError('madi_sac requires the masker and no critic doubling')

        elif name == AlgorithmName.SVEA:
            if self.use_masker or not self.svea_doubling:
                raise ValueError('svea uses critic doubling and no masker')

        elif self.use_masker or self.svea_doubling:
            raise ValueError(f'{name.value} uses neither the masker nor critic doubling')

        if self.svea_doubling and self.augment not in DOUBLING_AUGMENTS:
            raise ValueError(f'Critic doubling needs one of overlay, conv, splice. Received: {self.augment.value}')

        return self

    @classmethod
    def from_name(cls, name: AlgorithmName, doubling_augment: AugmentKind = AugmentKind.OVERLAY) -> 'AlgorithmSpec':

        '''Standard spec of each algorithm; `doubling_augment` is δ for svea and madi.'''

        name = AlgorithmName(name)
        if name == AlgorithmName.DRQ:
            return cls(name=name, augment=AugmentKind.SHIFT)
        if name == AlgorithmName.RAD:
            return cls(name=name, augment=AugmentKind.CROP)
        if name == AlgorithmName.SVEA:
            return cls(name=name, augment=doubling_augment, svea_doubling=True)
        if name == AlgorithmName.MADI:
            return cls(name=name, augment=doubling_augment, use_masker=True, svea_doubling=True)
        if name == AlgorithmName.MADI_SAC:
            return cls(name=name, use_masker=True)
        return cls(name=name)

    @property
    def crops(self) -> bool:
        return self.augment == AugmentKind.CROP


class RunConfig(BaseModel):

    '''Everything a training run needs. Training always happens on the clean tier.'''

    model_config = ConfigDict(extra='forbid')

    algorithm: AlgorithmName = AlgorithmName.MADI
    augment: AugmentSpec = Field(default_factory=AugmentSpec)
    env: EnvSpec = Field(default_factory=EnvSpec)
    distraction: DistractionSettings = Field(default_factory=DistractionSettings)
    hyper: HyperParams = Field(default_factory=HyperParams)
    eval_tiers: list[Tier] = Field(default_factory=lambda: [Tier.CLEAN, Tier.VIDEO_EASY,
                                                            Tier.VIDEO_HARD, Tier.DISTRACTING])
    seed: int = Field(default=0, ge=0)
    output_dir: str = 'runs/default'

    @field_validator('eval_tiers', mode='before')
    @classmethod
    def split_tiers(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(',') if part.strip()]
        return value

    @model_validator(mode='after')
    def check_run(self) -> 'RunConfig':

        '''Checks the augmentation choice and evaluation list.'''

        if not self.eval_tiers:
            raise ValueError('At least one evaluation tier is required')
        if len(set(self.eval_tiers)) != len(self.eval_tiers):
            raise ValueError(f'Evaluation tiers must be unique. Received: {[t.value for t in self.eval_tiers]}')
        if self.algorithm in (AlgorithmName.SVEA, AlgorithmName.MADI) and self.augment.kind not in DOUBLING_AUGMENTS:
            raise ValueError(f'{self.algorithm.value} needs augment.kind overlay, conv or splice. '
                             f'Received: {self.augment.kind.value}')
        return self

    def algorithm_spec(self) -> AlgorithmSpec:
        return AlgorithmSpec.from_name(self.algorithm, self.augment.kind)
