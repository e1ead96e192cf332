'''
Visual reacher: a 2-DoF camera that has to keep a red target disc centred.

The camera centre p and the target centre g live in the unit square. Actions
move the camera by step_size·a per physics tick, repeated `action_repeat`
times per control step with the rewards summed. The dense reward is computed
from the rendered task layer with the red-detection formula

    r = clip((c / (h·w)) · Σ M ⊙ W, lo, hi)

where M is the binary red mask and W a weight map equal to 1 at the frame
centre and decaying linearly to 0 at the nearest edge. The sparse variant pays
1 whenever ‖p − g‖ is within a threshold.

Distraction tiers only change the background the agent observes: the reward
is always computed on the task layer (mid-gray surface plus target disc).
'''

from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math
import numpy as np
from src.core.errors import EpisodeFinishedError
from src.core.frames import Frame, Observation, from_unit
from src.envs.video import ProceduralVideo
from src.models.model import DistractionSpec, EnvSpec, TaskId, Tier

logger = logging.getLogger(__name__)

SURFACE_GRAY = 128
TARGET_RGB = (220, 20, 20)
COLOR_DRIFT = 50

# Red-detection thresholds as fractions of 255
RED_MIN, GREEN_MAX, BLUE_MAX = 0.7, 0.3, 0.3

CLEAN = DistractionSpec(tier=Tier.CLEAN)


@dataclass
class ReacherState:

    '''Camera centre p, target centre g, control step t and the episode's background video.'''

    p: np.ndarray
    g: np.ndarray
    t: int = 0
    video: ProceduralVideo | None = None
    ticks: int = field(default=0)


@lru_cache(maxsize=16)
def reward_weights(height: int, width: int) -> np.ndarray:

    '''
    Weight matrix W: 1 at pixel (H//2, W//2), decaying linearly to 0 at the
    nearest edge (Chebyshev distance).

    Each side of the centre is normalised by its own extent, so every border
    row and column has weight 0 for even and odd frame sizes alike.
    '''

    def _axis(size: int) -> np.ndarray:
        centre = size // 2
        index = np.arange(size)
        before = (centre - index) / max(centre, 1)
        after = (index - centre) / max(size - 1 - centre, 1)
        return np.where(index <= centre, before, after)

    weights = 1.0 - np.maximum(_axis(height)[:, None], _axis(width)[None, :])
    weights = np.clip(weights, 0.0, 1.0)
    weights.setflags(write=False)
    return weights


def red_mask(pixels: np.ndarray) -> np.ndarray:

    '''Binary red-detection mask of an H×W×3 uint8 image.'''

    pixels = pixels.astype(np.float64)
    return ((pixels[..., 0] > RED_MIN * 255.0)
            & (pixels[..., 1] < GREEN_MAX * 255.0)
            & (pixels[..., 2] < BLUE_MAX * 255.0))


def reward_visual(frame: Frame,
                  c: float = 800.0,
                  clip_lo: float = 0.0,
                  clip_hi: float = 4.0,
                  weights: np.ndarray | None = None) -> float:

    '''
    Dense visual reward of a rendered frame.

    Args:
        frame: The rendered task frame.
        c: Reward coefficient.
        clip_lo: Lower clip bound.
        clip_hi: Upper clip bound.
        weights: Optional replacement for the radial weight matrix.

    Returns:
        float: clip((c / (h·w)) · Σ M ⊙ W, clip_lo, clip_hi).
    '''

    h, w = frame.height, frame.width
    weights = reward_weights(h, w) if weights is None else weights
    total = float(np.sum(red_mask(frame.pixels) * weights))
    return float(np.clip(c / (h * w) * total, clip_lo, clip_hi))


def reward_sparse(state: ReacherState, threshold: float) -> float:

    '''1 when the camera is within `threshold` of the target (boundary included), else 0.'''

    return 1.0 if float(np.linalg.norm(state.p - state.g)) <= threshold else 0.0


def target_centre(state: ReacherState, spec: EnvSpec, height: int, width: int) -> tuple[float, float]:

    '''Pixel (row, col) of the target disc centre; centring the camera centres the target.'''

    row = height // 2 + (state.g[1] - state.p[1]) * spec.view_scale * height
    col = width // 2 + (state.g[0] - state.p[0]) * spec.view_scale * width
    return row, col


def target_disc_mask(state: ReacherState, spec: EnvSpec, height: int, width: int) -> np.ndarray:

    '''Boolean H×W mask of the pixels covered by the target disc.'''

    row, col = target_centre(state, spec, height, width)
    radius = spec.target_radius * width
    rr, cc = np.mgrid[0:height, 0:width]
    return (rr - row) ** 2 + (cc - col) ** 2 <= radius ** 2


def rotation_angle(t: int, spec: EnvSpec, dspec: DistractionSpec) -> float:

    '''View rotation in degrees at control step t (distracting tier only).'''

    if dspec.tier != Tier.DISTRACTING:
        return 0.0
    return dspec.intensity * dspec.max_rotation_deg * math.sin(2.0 * math.pi * t / spec.episode_length)


def target_color(t: int, spec: EnvSpec, dspec: DistractionSpec) -> tuple[int, int, int]:

    '''Target RGB; the distracting tier drifts the hue through G and B within the red thresholds.'''

    if dspec.tier != Tier.DISTRACTING or dspec.intensity == 0.0:
        return TARGET_RGB
    phase = 2.0 * math.pi * t / spec.episode_length
    drift_g = round(dspec.intensity * COLOR_DRIFT * (0.5 + 0.5 * math.sin(phase)))
    drift_b = round(dspec.intensity * COLOR_DRIFT * (0.5 + 0.5 * math.cos(phase)))
    return TARGET_RGB[0], TARGET_RGB[1] + drift_g, TARGET_RGB[2] + drift_b


def effective_pool(dspec: DistractionSpec) -> int:

    '''Video pool size; the distracting tier grows it with the intensity.'''

    if dspec.tier == Tier.DISTRACTING:
        return dspec.pool_size + math.ceil(dspec.intensity * dspec.pool_size)
    return dspec.pool_size


def band_width(height: int) -> int:
    return max(2, height // 8)


def render(state: ReacherState, dspec: DistractionSpec, spec: EnvSpec,
           height: int | None = None, width: int | None = None) -> Frame:

    '''
    Renders the agent's view of `state` under a distraction tier.

    Composition order: background (mid-gray or the episode's video at time t),
    the static surface band (when `keep_surface`), view rotation of both
    (distracting tier), then the target disc, which no tier paints over.
    '''

    if height is None or width is None:
        height, width = spec.render_size()

    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    angle = rotation_angle(state.t, spec, dspec)
    if angle != 0.0:
        theta = math.radians(angle)
        cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
        dx, dy = x - cx, y - cy
        x = cx + math.cos(theta) * dx - math.sin(theta) * dy
        y = cy + math.sin(theta) * dx + math.cos(theta) * dy

    if dspec.tier == Tier.CLEAN or state.video is None:
        pixels = np.full((height, width, 3), SURFACE_GRAY, dtype=np.uint8)
    else:
        pixels = from_unit(state.video.sample(x, y, state.t, height, width))

    if dspec.keep_surface:
        band = band_width(height)
        surface = ((x < band) | (x > width - 1 - band) | (y < band) | (y > height - 1 - band))
        pixels[surface] = SURFACE_GRAY

    disc = target_disc_mask(state, spec, height, width)
    pixels[disc] = target_color(state.t, spec, dspec)
    return Frame(pixels)


class VisualReacherEnv:

    '''
    Episodic reacher with frame-stacked pixel observations.

    Episodes end only by the time limit: `done` is true after `episode_length`
    control steps.
    '''

    def __init__(self,
                 spec: EnvSpec,
                 dspec: DistractionSpec,
                 rng: np.random.Generator,
                 frame_stack: int = 3,
                 cropped: bool = False):
        self.spec = spec
        self.dspec = dspec
        self.rng = rng
        self.frame_stack = frame_stack
        self.height, self.width = spec.render_size(cropped)
        self.state: ReacherState | None = None
        self.obs: Observation | None = None
        self.physics_ticks = 0
        self._done = True

    @property
    def obs_shape(self) -> tuple[int, int, int]:
        return 3 * self.frame_stack, self.height, self.width

    @property
    def done(self) -> bool:
        return self._done

    def reset(self) -> Observation:

        '''Samples a target, centres the camera and draws one background video from the pool.'''

        g = self.rng.uniform(0.0, 1.0, size=2)
        video = None
        if self.dspec.tier != Tier.CLEAN:
            index = int(self.rng.integers(0, effective_pool(self.dspec)))
            video = ProceduralVideo.from_index(self.dspec.video_namespace, index)
            logger.debug('Episode background video %s/%d', self.dspec.video_namespace, index)

        self.state = ReacherState(p=np.array([0.5, 0.5]), g=g, t=0, video=video)
        self._done = False
        self.obs = Observation.repeated(self.render(), self.frame_stack)
        return self.obs

    def render(self) -> Frame:
        return render(self.state, self.dspec, self.spec, self.height, self.width)

    def task_frame(self) -> Frame:
        '''Render of the task layer alone (clean surface and undrifted target).'''
        return render(self.state, CLEAN, self.spec, self.height, self.width)

    def task_pixel_mask(self) -> np.ndarray:
        return target_disc_mask(self.state, self.spec, self.height, self.width)

    def _tick_reward(self) -> float:
        if self.spec.task == TaskId.REACHER_SPARSE:
            return reward_sparse(self.state, self.spec.sparse_threshold)
        return reward_visual(self.task_frame(), self.spec.reward_coef,
                             self.spec.reward_clip_lo, self.spec.reward_clip_hi)

    def step(self, action: np.ndarray) -> tuple[Observation, float, bool]:

        '''
        Applies one control step.

        Raises:
            EpisodeFinishedError: If the episode already reached its time limit.
            ValueError: If an action component lies outside [-1, 1].
        '''

        if self._done:
            raise EpisodeFinishedError('Cannot step a finished episode; call reset() first')
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.spec.action_dim,):
            raise ValueError(f'Action must have {self.spec.action_dim} components, received {action.shape}')
        if np.any(np.abs(action) > 1.0 + 1e-6):
            raise ValueError(f'Action components must lie in [-1, 1], received {action}')
        action = np.clip(action, -1.0, 1.0)

        reward = 0.0
        for _ in range(self.spec.action_repeat):
            self.state.p = np.clip(self.state.p + self.spec.step_size * action, 0.0, 1.0)
            self.state.ticks += 1
            self.physics_ticks += 1
            reward += self._tick_reward()

        self.state.t += 1
        self.obs = self.obs.shifted(self.render())
        self._done = self.state.t >= self.spec.episode_length
        return self.obs, reward, self._done

    def oracle_action(self) -> np.ndarray:
        '''Scripted controller: heads straight for the target, arriving without overshoot.'''
        reach = self.spec.step_size * self.spec.action_repeat
        return np.clip((self.state.g - self.state.p) / reach, -1.0, 1.0)

    def max_episode_return(self) -> float:
        '''Return of a camera that sits on the target from the first tick.'''
        per_tick = 1.0 if self.spec.task == TaskId.REACHER_SPARSE else self.spec.reward_clip_hi
        return per_tick * self.spec.action_repeat * self.spec.episode_length
