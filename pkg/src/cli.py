'''
Command line of the lab.

    madi-lab train  --config PATH [--seed N] [--out DIR]
    madi-lab eval   --ckpt PATH --tier NAME [--episodes E]
    madi-lab masks  --ckpt PATH --tier NAME [--frames N] [--out DIR]
    madi-lab sensitivity --ckpt PATH --tier NAME [--frames N] [--out DIR]
    madi-lab record --ckpt PATH --tier NAME [--out DIR]
    madi-lab report --runs DIR [DIR ...] [--out DIR]

Exit codes: 0 success, 2 configuration or metric problems (and argument
errors), 3 I/O errors, 4 checkpoint problems. `MADI_SEED` overrides --seed.
'''

from pathlib import Path
import argparse
import logging
import sys
import numpy as np
import torch
from src.config_utils import load_config_file
from src.core.errors import CheckpointError, ConfigError, MetricsError
from src.core.netpbm import write_pgm, write_ppm
from src.envs.recorder import EpisodeRecorder
from src.models.model import Tier
from src.nets.modules import frame_masks
from src.pipeline.analysis import mask_stats, mean_over_frames, pixel_sensitivity, sensitivity_by_region
from src.pipeline.evaluation import eval_rng, evaluate, make_env
from src.pipeline.reporting import report
from src.pipeline.training import load_checkpoint_agent, observed_view, resolve_config, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CHECKPOINT = 4

TIER_NAMES = [tier.value for tier in Tier]
CLI_EVAL_STEP = -1


def cmd_train(args: argparse.Namespace) -> int:
    raw = load_config_file(args.config) if args.config else {}
    config = resolve_config(raw, seed=args.seed, output_dir=args.out)
    train(config)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config, agent = load_checkpoint_agent(args.ckpt)
    episodes = args.episodes or config.hyper.eval_episodes
    env = make_env(config, args.tier, eval_rng(config.seed, args.tier, config.hyper.total_steps),
                   cropped=agent.algo.crops)
    mean_return = evaluate(agent.snapshot().act, env, episodes)
    print(f'tier={args.tier} mean_return={mean_return:.6f}')
    return EXIT_OK


def _masker_run(args: argparse.Namespace):

    '''Checkpoint agent plus an environment on the requested tier; masker algorithms only.'''

    config, agent = load_checkpoint_agent(args.ckpt)
    if agent.masker is None:
        raise CheckpointError(f'{args.ckpt} was trained with {config.algorithm.value}, which has no masker')
    env = make_env(config, args.tier, eval_rng(config.seed, args.tier, CLI_EVAL_STEP), cropped=agent.algo.crops)
    env.reset()
    return config, agent, env


def _advance(agent, env) -> None:
    if env.done:
        env.reset()
    else:
        env.step(agent.select_action(env.obs))


def cmd_masks(args: argparse.Namespace) -> int:

    '''Writes obs_i.ppm, mask_i.pgm and masked_i.ppm for the newest frame of N consecutive observations.'''

    _, agent, env = _masker_run(args)
    out_dir = Path(args.out) if args.out else Path(args.ckpt).parent / 'masks'

    task_means, background_means = [], []
    for i in range(args.frames):
        obs, task = observed_view(agent, env)
        with torch.no_grad():
            mask = frame_masks(agent.masker, obs.unsqueeze(0))[0, -1].cpu().numpy()
        newest = obs[-3:].permute(1, 2, 0).cpu().numpy()

        write_ppm(out_dir / f'obs_{i}.ppm', np.rint(newest * 255.0).astype(np.uint8))
        write_pgm(out_dir / f'mask_{i}.pgm', mask)
        write_ppm(out_dir / f'masked_{i}.ppm', np.rint(newest * mask[..., None] * 255.0).astype(np.uint8))

        mean_task, mean_background = mask_stats(agent.masker, obs, task)
        task_means.append(mean_task)
        background_means.append(mean_background)
        _advance(agent, env)

    bold, end_bold = '\033[1m', '\033[0m'
    print(f"✅ Wrote {3 * args.frames} files to {bold}{out_dir}{end_bold}")
    print(f"mask_task_mean={mean_over_frames(task_means):.6f} "
          f"mask_bg_mean={mean_over_frames(background_means):.6f}")
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:

    '''Per-pixel min-Q sensitivity maps of N observations, with task and background means.'''

    config, agent = load_checkpoint_agent(args.ckpt)
    env = make_env(config, args.tier, eval_rng(config.seed, args.tier, CLI_EVAL_STEP), cropped=agent.algo.crops)
    env.reset()
    out_dir = Path(args.out) if args.out else Path(args.ckpt).parent / 'sensitivity'

    task_means, background_means = [], []
    for i in range(args.frames):
        obs, task = observed_view(agent, env)
        action = torch.as_tensor(agent.select_action(env.obs), dtype=agent.dtype)
        values = pixel_sensitivity(agent.min_q, obs, action)
        sensitivity = values.reshape(task.shape)
        mean_task, mean_background = sensitivity_by_region(sensitivity, task)
        task_means.append(mean_task)
        background_means.append(mean_background)
        peak = sensitivity.max()
        write_pgm(out_dir / f'sensitivity_{i}.pgm', sensitivity / peak if peak > 0 else sensitivity)
        _advance(agent, env)

    print(f"sensitivity_task_mean={mean_over_frames(task_means):.6e} "
          f"sensitivity_bg_mean={mean_over_frames(background_means):.6e}")
    return EXIT_OK


def cmd_record(args: argparse.Namespace) -> int:
    config, agent = load_checkpoint_agent(args.ckpt)
    env = make_env(config, args.tier, eval_rng(config.seed, args.tier, CLI_EVAL_STEP), cropped=agent.algo.crops)
    out_dir = Path(args.out) if args.out else Path(args.ckpt).parent / f'episode_{args.tier}'
    episode_return = EpisodeRecorder(out_dir).record_episode(env, agent.snapshot().act)
    print(f'tier={args.tier} episode_return={episode_return:.6f}')
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out else Path('reporting')
    report(args.runs, out_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:

    parser = argparse.ArgumentParser(prog='madi-lab', description='Distraction-robust pixel RL lab')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    train_parser = commands.add_parser('train', help='train one agent on the clean tier')
    train_parser.add_argument('--config', type=str, default=None, help='key = value config file')
    train_parser.add_argument('--seed', type=int, default=None)
    train_parser.add_argument('--out', type=str, default=None, help='output directory')
    train_parser.set_defaults(handler=cmd_train)

    eval_parser = commands.add_parser('eval', help='evaluate a checkpoint on one tier')
    eval_parser.add_argument('--ckpt', type=str, required=True)
    eval_parser.add_argument('--tier', choices=TIER_NAMES, required=True)
    eval_parser.add_argument('--episodes', type=int, default=None)
    eval_parser.set_defaults(handler=cmd_eval)

    for name, handler, help_text in (('masks', cmd_masks, 'write observation/mask/masked triplets'),
                                     ('sensitivity', cmd_sensitivity, 'write per-pixel min-Q sensitivity maps')):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--ckpt', type=str, required=True)
        sub.add_argument('--tier', choices=TIER_NAMES, required=True)
        sub.add_argument('--frames', type=int, default=1)
        sub.add_argument('--out', type=str, default=None)
        sub.set_defaults(handler=handler)

    record_parser = commands.add_parser('record', help='record one evaluation episode as PPM frames')
    record_parser.add_argument('--ckpt', type=str, required=True)
    record_parser.add_argument('--tier', choices=TIER_NAMES, required=True)
    record_parser.add_argument('--out', type=str, default=None)
    record_parser.set_defaults(handler=cmd_record)

    report_parser = commands.add_parser('report', help='summarise finished runs')
    report_parser.add_argument('--runs', nargs='+', required=True)
    report_parser.add_argument('--out', type=str, default=None)
    report_parser.set_defaults(handler=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:

    '''
    Runs one command and maps lab errors to exit codes; messages go to standard error.
    '''

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    logger.debug('Running %s with %s', args.command, vars(args))

    try:
        return args.handler(args)
    except (ConfigError, MetricsError) as e:
        print(f'🚨 {e}', file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as e:
        print(f'🚨 {e}', file=sys.stderr)
        return EXIT_CHECKPOINT
    except OSError as e:
        print(f'❌ {e}', file=sys.stderr)
        return EXIT_IO
