'''
Module: data_handler.py

Loading and exporting of the metric tables a run produces. It handles
directory management, file existence and header validation, and readable
reporting of common I/O problems such as permission errors.

Functions:
    - load_metrics: Reads a metric CSV and checks its declared columns.
    - export_data: Saves a DataFrame as CSV with automated folder creation.
'''

from pathlib import Path
import logging
import pandas as pd
from pandas.errors import EmptyDataError, ParserError
from src.core.errors import MetricsError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'

EVAL_COLUMNS = ['step', 'tier', 'mean_return']
TRAIN_COLUMNS = ['step', 'loss_q', 'loss_pi', 'loss_alpha', 'alpha', 'mask_task_mean', 'mask_bg_mean']
SUMMARY_COLUMNS = ['algorithm', 'tier', 'mean', 'stderr', 'p_vs_best']


def load_metrics(path: Path | str, columns: list[str]) -> pd.DataFrame:

    '''
    Loads a metric CSV into a pandas DataFrame.

    Args:
        path: The CSV file.
        columns: The header the file must declare, in order.

    Returns:
        pd.DataFrame: The metric records.

    Raises:
        MetricsError: If the file is missing, unreadable, has a different
            header, or `step` is not strictly increasing within a tier.

    Example:
        >>> df = load_metrics('runs/madi_0/eval.csv', EVAL_COLUMNS)
    '''

    path = Path(path)
    if not path.exists():
        raise MetricsError(f'Metric file not found at {path}')

    try:
        df = pd.read_csv(path)
    except (EmptyDataError, ParserError, UnicodeDecodeError) as e:
        raise MetricsError(f'Metric file {path} is corrupt: {e}') from e

    if list(df.columns) != columns:
        raise MetricsError(f'Metric file {path} has columns {list(df.columns)}, expected {columns}')

    if 'step' in df.columns:
        steps = pd.to_numeric(df['step'], errors='coerce')
        if steps.isna().any():
            raise MetricsError(f'Metric file {path} has non-numeric steps')
        groups = df.groupby('tier')['step'] if 'tier' in df.columns else [(None, df['step'])]
        for _, series in groups:
            if not series.is_monotonic_increasing or series.duplicated().any():
                raise MetricsError(f'Steps in {path} are not strictly increasing')
    return df


def export_data(df: pd.DataFrame,
                output_file_name: str,
                output_folder: Path | str = 'reporting',
                quiet: bool = False) -> Path:

    '''
    Exports a DataFrame to a CSV file within a specified directory.

    Floats are written with a fixed six-decimal format so identical runs give
    identical bytes; missing values become empty fields.

    Args:
        df: The pandas DataFrame to be exported.
        output_file_name: The name of the output file (e.g., 'eval.csv').
        output_folder: The folder the file is saved in. Defaults to 'reporting'.
        quiet: Skip the success message (periodic rewrites during training).

    Returns:
        Path: The written file.

    Raises:
        OSError: If the folder cannot be created or the file cannot be written.
    '''

    output_dir = Path(output_folder)

    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except PermissionError:
        print(f"\n❌ Permission Denied: Cannot create folder at {output_dir}.")
        raise
    except OSError as e:
        print(f"\n❌ General OS Error creating directory '{output_dir}': {e}")
        raise

    output_file = output_dir / output_file_name

    try:
        df.to_csv(output_file, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except PermissionError:
        print(f"\n❌ Permission Denied: The file '{output_file.name}' is likely open. "
              "Please close it and retry.")
        raise

    if not quiet:
        bold, end_bold = '\033[1m', '\033[0m'
        print(f"\n✅ Export successful for {bold}{output_file_name}{end_bold}:")
        print(f"   Location: {output_file}")
    logger.debug('Wrote %d rows to %s', len(df), output_file)
    return output_file
