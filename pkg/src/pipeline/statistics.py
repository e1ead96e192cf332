'''
Significance testing and final scores.

A run's final return is the average evaluated return over the eval points in
the last 10% of training (the 90% boundary included); a FinalScore aggregates
those per-seed values into a mean and standard error. Algorithms are compared
with the two-sided unequal-variance (Welch) t-test.
'''

from dataclasses import dataclass
import math
import numpy as np
import pandas as pd
from scipy.special import betainc
from src.core.errors import MetricsError, StatisticsError

FINAL_WINDOW = 0.1


@dataclass(frozen=True)
class WelchResult:

    t: float
    df: float
    p: float


@dataclass(frozen=True)
class FinalScore:

    '''Mean and standard error over seeds; `stderr` is None for a single seed.'''

    mean: float
    stderr: float | None
    n_seeds: int


def welch_t_test(sample_a, sample_b) -> WelchResult:

    '''
    Two-sided Welch t-test.

    t = (m_a − m_b) / √(v_a/n_a + v_b/n_b), df from Welch–Satterthwaite and
    p = I_{df/(df+t²)}(df/2, 1/2), the Student-t tail through the regularised
    incomplete beta function.

    Raises:
        StatisticsError: If a sample has fewer than two values or both
            samples have zero variance.
    '''

    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise StatisticsError(f'Welch test needs at least 2 values per sample, received {a.size} and {b.size}')

    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    se2 = va + vb
    if se2 <= 0.0:
        raise StatisticsError('Welch test is undefined when both samples have zero variance')

    t = float((a.mean() - b.mean()) / math.sqrt(se2))
    df = float(se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1)))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t=t, df=df, p=min(max(p, 0.0), 1.0))


def in_final_window(step: int, total_steps: int) -> bool:
    '''True for steps ≥ 0.9·total_steps (exact integer comparison).'''
    return step * 10 >= (10 - round(10 * FINAL_WINDOW)) * total_steps


def run_final_return(eval_df: pd.DataFrame, tier: str, total_steps: int) -> float:

    '''
    Average return of one run's eval points on `tier` within the final window.

    Raises:
        MetricsError: If the run has no eval point on `tier` in the window.
    '''

    rows = eval_df[(eval_df['tier'] == tier)
                   & eval_df['step'].map(lambda step: in_final_window(int(step), total_steps))]
    if rows.empty:
        raise MetricsError(f'No eval points for tier {tier} in the last 10% of {total_steps} steps')
    return float(rows['mean_return'].mean())


def final_score(per_seed_returns) -> FinalScore:

    values = np.asarray(per_seed_returns, dtype=np.float64)
    if values.size == 0:
        raise StatisticsError('FinalScore needs at least one run')
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else None
    return FinalScore(mean=float(values.mean()), stderr=stderr, n_seeds=int(values.size))
