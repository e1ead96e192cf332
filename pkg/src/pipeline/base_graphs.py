'''
Base graph functions for learning curves
'''

from pathlib import Path
import pandas as pd
import plotly.express as px
from plotly.graph_objects import Figure


def learning_curves(df: pd.DataFrame, tier: str) -> Figure:

    '''
    Line plot of mean evaluated return against training step, one line per algorithm.

    Args:
        df (pd.DataFrame): Columns algorithm, step, mean, stderr for one tier;
            stderr may be missing for single-seed cells.
        tier (str): Tier name used in the title.

    Returns:
        Figure: The plotly figure.
    '''

    fig = px.line(df,
                  x='step',
                  y='mean',
                  color='algorithm',
                  error_y='stderr',
                  markers=True,
                  title=f'Evaluation return on {tier}',
                  labels={'step': 'Environment step', 'mean': 'Mean return'})

    fig.update_layout(hovermode='x unified')

    return fig


def save_figure(fig: Figure, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(path, include_plotlyjs='cdn')
    return path
