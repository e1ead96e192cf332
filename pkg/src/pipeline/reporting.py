'''
Aggregation of finished runs into a summary table and learning-curve plots.

Every run directory holds `config.resolved` and `eval.csv`. Runs are grouped
by (algorithm, tier); each group gets a FinalScore over its seeds and the
two-sided Welch p-value against the best baseline of that tier, the
non-masking algorithm (sac, drq, rad, svea) with the highest mean.
'''

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
import logging
import numpy as np
import pandas as pd
from src.config_utils import load_config_file
from src.core.errors import ConfigError, MetricsError, StatisticsError
from src.models.model import AlgorithmName, RunConfig, Tier
from src.pipeline.base_graphs import learning_curves, save_figure
from src.pipeline.data_handler import EVAL_COLUMNS, SUMMARY_COLUMNS, export_data, load_metrics
from src.pipeline.data_validation import validate_run_config
from src.pipeline.statistics import final_score, run_final_return, welch_t_test

logger = logging.getLogger(__name__)

BASELINES = (AlgorithmName.SAC, AlgorithmName.DRQ, AlgorithmName.RAD, AlgorithmName.SVEA)


@dataclass
class RunRecord:

    '''A finished run: its configuration and eval metrics.'''

    path: Path
    config: RunConfig
    eval_df: pd.DataFrame


def load_run(run_dir: Path | str) -> RunRecord:

    '''
    Reads one run directory.

    Raises:
        MetricsError: If `config.resolved` or `eval.csv` is missing or corrupt.
    '''

    run_dir = Path(run_dir)
    try:
        config = validate_run_config(load_config_file(run_dir / 'config.resolved'))
    except ConfigError as e:
        raise MetricsError(f'Run {run_dir} has no usable config.resolved: {e}') from e
    return RunRecord(path=run_dir, config=config, eval_df=load_metrics(run_dir / 'eval.csv', EVAL_COLUMNS))


def summarise(runs: Sequence[RunRecord]) -> pd.DataFrame:

    '''
    Summary rows (algorithm, tier, mean, stderr, p_vs_best) in algorithm then tier order.

    `stderr` is empty for single-seed cells; `p_vs_best` is empty for the best
    baseline itself and whenever the Welch test is undefined.
    '''

    finals: dict[tuple[AlgorithmName, Tier], list[float]] = {}
    for run in runs:
        for tier in run.config.eval_tiers:
            value = run_final_return(run.eval_df, tier.value, run.config.hyper.total_steps)
            finals.setdefault((run.config.algorithm, tier), []).append(value)

    scores = {cell: final_score(values) for cell, values in finals.items()}

    best: dict[Tier, AlgorithmName] = {}
    for (algorithm, tier), score in scores.items():
        if algorithm in BASELINES and (tier not in best or score.mean > scores[(best[tier], tier)].mean):
            best[tier] = algorithm

    rows = []
    algorithm_order = list(AlgorithmName)
    tier_order = list(Tier)
    for algorithm, tier in sorted(scores, key=lambda cell: (algorithm_order.index(cell[0]),
                                                            tier_order.index(cell[1]))):
        score = scores[(algorithm, tier)]
        p_value = None
        baseline = best.get(tier)
        if baseline is not None and baseline != algorithm:
            try:
                p_value = welch_t_test(finals[(algorithm, tier)], finals[(baseline, tier)]).p
            except StatisticsError as e:
                logger.info('No p-value for %s on %s: %s', algorithm.value, tier.value, e)
        rows.append({'algorithm': algorithm.value, 'tier': tier.value, 'mean': score.mean,
                     'stderr': score.stderr, 'p_vs_best': p_value})

    df = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    return df.astype({'mean': float, 'stderr': float, 'p_vs_best': float})


def curve_table(runs: Sequence[RunRecord]) -> pd.DataFrame:

    '''Mean and standard error over seeds per (algorithm, tier, step).'''

    frames = [run.eval_df.assign(algorithm=run.config.algorithm.value) for run in runs]
    df = pd.concat(frames, ignore_index=True)
    grouped = df.groupby(['algorithm', 'tier', 'step'])['mean_return']
    table = grouped.agg(mean='mean', std='std', count='count').reset_index()
    table['stderr'] = np.where(table['count'] > 1, table['std'] / np.sqrt(table['count']), np.nan)
    return table.drop(columns=['std', 'count'])


def report(run_dirs: Sequence[Path | str], out_dir: Path | str) -> pd.DataFrame:

    '''
    Writes `summary.csv` and one `curves_<tier>.html` per tier into `out_dir`.

    Raises:
        MetricsError: If no run directory is given or a run's files are
            missing or corrupt.
    '''

    if not run_dirs:
        raise MetricsError('report needs at least one run directory')
    runs = [load_run(run_dir) for run_dir in run_dirs]

    summary = summarise(runs)
    export_data(summary, 'summary.csv', out_dir)

    curves = curve_table(runs)
    for tier, tier_df in curves.groupby('tier'):
        save_figure(learning_curves(tier_df, tier), Path(out_dir) / f'curves_{tier}.html')

    bold, end_bold = '\033[1m', '\033[0m'
    print(f"✅ Summarised {bold}{len(runs)}{end_bold} runs into {len(summary)} (algorithm, tier) cells.")
    return summary
