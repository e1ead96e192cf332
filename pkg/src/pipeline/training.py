'''
Training orchestration.

A run trains one agent on the clean tier for `total_steps` environment
steps, evaluates a frozen snapshot on every configured tier every
`eval_interval` steps, and writes into its output directory:

    config.resolved        effective configuration (`key = value`)
    train.csv              loss and mask statistics every `log_interval` steps
    eval.csv               step, tier, mean_return
    mask_stepNNNNNN.pgm    newest-frame mask at each eval point (masker algorithms)
    final.ckpt             all parameter sets

Everything is a function of the config and its seed.
'''

from dataclasses import dataclass, field
from pathlib import Path
import logging
import numpy as np
import pandas as pd
import torch
from src.agents.agent import Agent, UpdateInfo, agent_step, to_unit_tensor
from src.augment.augmentations import center_crop
from src.config_utils import dump_config, load_config_file
from src.core.netpbm import write_pgm
from src.core.replay_buffer import ReplayBuffer
from src.core.rng import RngStream
from src.envs.reacher import VisualReacherEnv
from src.models.model import RunConfig, Tier
from src.models.settings import LabSettings
from src.nets.modules import frame_masks
from src.nets.params import checkpoint_load, checkpoint_save
from src.pipeline.analysis import mask_stats
from src.pipeline.data_handler import EVAL_COLUMNS, TRAIN_COLUMNS, export_data
from src.pipeline.data_validation import validate_run_config
from src.pipeline.evaluation import eval_rng, evaluate, make_env

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.resolved'
CHECKPOINT_FILE = 'final.ckpt'


@dataclass
class RunMetrics:

    '''Eval points, logged training rows and finished training-episode returns of one run.'''

    eval_rows: list[dict] = field(default_factory=list)
    train_rows: list[dict] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)

    def eval_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.eval_rows, columns=EVAL_COLUMNS)
        return df.astype({'step': int, 'tier': str, 'mean_return': float})

    def train_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.train_rows, columns=TRAIN_COLUMNS)
        return df.astype({column: float for column in TRAIN_COLUMNS[1:]} | {'step': int})


def build_agent(config: RunConfig, rng: RngStream, device: str = 'cpu') -> Agent:

    '''Agent for `config`, sized for the observation shape of its training environment.'''

    algo = config.algorithm_spec()
    height, width = config.env.render_size(cropped=algo.crops)
    obs_shape = (3 * config.hyper.frame_stack, height, width)
    return Agent(algo=algo,
                 hyper=config.hyper,
                 augment=config.augment,
                 obs_shape=obs_shape,
                 frame_hw=(config.env.frame_height, config.env.frame_width),
                 action_dim=config.env.action_dim,
                 rng=rng,
                 device=device)


def load_checkpoint_agent(ckpt_path: Path | str, settings: LabSettings | None = None) -> tuple[RunConfig, Agent]:

    '''
    Rebuilds the agent of a finished run from `final.ckpt` and the
    `config.resolved` stored next to it.

    Raises:
        ConfigError: If the run's config is missing or invalid.
        CheckpointError: If the checkpoint is corrupt or does not fit the config.
    '''

    ckpt_path = Path(ckpt_path)
    config = validate_run_config(load_config_file(ckpt_path.parent / CONFIG_FILE))
    settings = settings or LabSettings()
    agent = build_agent(config, RngStream(config.seed), settings.device)
    agent.load_param_sets(checkpoint_load(ckpt_path))
    return config, agent


def observed_view(agent: Agent, env: VisualReacherEnv) -> tuple[torch.Tensor, np.ndarray]:

    '''The act-phase view of the current observation (before masking) and its task-pixel mask.'''

    obs = to_unit_tensor(env.obs.stacked(), agent.dtype, agent.device)
    task = env.task_pixel_mask()
    if agent.algo.crops:
        obs = center_crop(obs, agent.frame_hw)
        height, width = agent.frame_hw
        top, left = (task.shape[0] - height) // 2, (task.shape[1] - width) // 2
        task = task[top:top + height, left:left + width]
    return obs, task


def _mean(values: list[float | None]) -> float | None:
    values = [value for value in values if value is not None]
    return float(np.mean(values)) if values else None


def _train_row(step: int, updates: list[UpdateInfo], agent: Agent, env: VisualReacherEnv) -> dict:
    row = {'step': step,
           'loss_q': _mean([u.loss_q for u in updates]),
           'loss_pi': _mean([u.loss_pi for u in updates]),
           'loss_alpha': _mean([u.loss_alpha for u in updates]),
           'alpha': float(agent.alpha.item()),
           'mask_task_mean': None,
           'mask_bg_mean': None}
    if agent.masker is not None:
        obs, task = observed_view(agent, env)
        row['mask_task_mean'], row['mask_bg_mean'] = mask_stats(agent.masker, obs, task)
    return row


def dump_mask(agent: Agent, env: VisualReacherEnv, out_dir: Path, step: int) -> Path:
    obs, _ = observed_view(agent, env)
    with torch.no_grad():
        masks = frame_masks(agent.masker, obs.unsqueeze(0))
    return write_pgm(out_dir / f'mask_step{step:06d}.pgm', masks[0, -1].cpu().numpy())


def evaluate_tiers(agent: Agent, config: RunConfig, step: int, episodes: int | None = None) -> dict[Tier, float]:

    '''Evaluates a snapshot of `agent` on every configured tier at eval point `step`.'''

    snapshot = agent.snapshot()
    episodes = episodes or config.hyper.eval_episodes
    results = {}
    for tier in config.eval_tiers:
        env = make_env(config, tier, eval_rng(config.seed, tier, step), cropped=agent.algo.crops)
        results[tier] = evaluate(snapshot.act, env, episodes)
    return results


def train(config: RunConfig, settings: LabSettings | None = None) -> RunMetrics:

    '''
    Trains `config.algorithm` on the clean tier and writes the run's files.

    Args:
        config (RunConfig): The validated run configuration.
        settings (LabSettings, optional): Process settings (torch device).

    Returns:
        RunMetrics: Everything written to train.csv and eval.csv.

    Raises:
        OSError: If the output directory is not writable.
    '''

    settings = settings or LabSettings()
    hyper = config.hyper
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / CONFIG_FILE).write_text(dump_config(config), encoding='utf-8')

    rng = RngStream(config.seed)
    agent = build_agent(config, rng, settings.device)
    env = make_env(config, Tier.CLEAN, rng.numpy('env'), cropped=agent.algo.crops)
    buffer = ReplayBuffer(min(hyper.buffer_capacity, hyper.total_steps), env.obs_shape, config.env.action_dim)
    explore_rng = rng.numpy('policy')

    bold, end_bold = '\033[1m', '\033[0m'
    counts = agent.parameter_counts()
    logger.info('Parameter counts: %s', counts)
    print(f"🚀 Training {bold}{config.algorithm.value}{end_bold} (seed {config.seed}) for "
          f"{hyper.total_steps} steps; parameters: "
          + ', '.join(f'{name} {count:,}' for name, count in counts.items()))

    metrics = RunMetrics()
    pending: list[UpdateInfo] = []
    episode_state: dict = {}

    for t in range(hyper.total_steps):
        result = agent_step(t, env, agent, buffer, hyper, explore_rng, episode_state)
        if result.update is not None:
            pending.append(result.update)
        if result.episode_return is not None:
            metrics.episode_returns.append(result.episode_return)

        step = t + 1
        if step % hyper.log_interval == 0:
            metrics.train_rows.append(_train_row(step, pending, agent, env))
            pending = []

        if step % hyper.eval_interval == 0:
            for tier, mean_return in evaluate_tiers(agent, config, step).items():
                metrics.eval_rows.append({'step': step, 'tier': tier.value, 'mean_return': mean_return})
                print(f"✅ step {step:>7} | {bold}{tier.value:<11}{end_bold} | mean return {mean_return:9.2f}")
            if agent.masker is not None:
                dump_mask(agent, env, out_dir, step)
            export_data(metrics.eval_frame(), 'eval.csv', out_dir, quiet=True)
            export_data(metrics.train_frame(), 'train.csv', out_dir, quiet=True)

    if not metrics.eval_rows:
        print(f"⚠️ No evaluation point within {hyper.total_steps} steps "
              f"(eval_interval {hyper.eval_interval}).")

    export_data(metrics.eval_frame(), 'eval.csv', out_dir, quiet=True)
    export_data(metrics.train_frame(), 'train.csv', out_dir, quiet=True)
    checkpoint_save(agent.param_sets(), out_dir / CHECKPOINT_FILE)
    logger.info('Critic updates %d, actor updates %d, target updates %d',
                agent.critic_updates, agent.actor_updates, agent.target_updates)
    print(f"✅ Run finished: {bold}{out_dir}{end_bold}")
    return metrics


def resolve_config(raw: dict, seed: int | None = None, output_dir: str | None = None,
                   settings: LabSettings | None = None) -> RunConfig:

    '''
    Applies overrides to a parsed config and validates it.

    `MADI_SEED` wins over `seed`, which wins over the file's own seed.

    Raises:
        ConfigError: If the result does not validate.
    '''

    raw = dict(raw)
    settings = settings or LabSettings()
    if settings.seed is not None:
        seed = settings.seed
    if seed is not None:
        raw['seed'] = seed
    if output_dir is not None:
        raw['output_dir'] = output_dir
    return validate_run_config(raw)
