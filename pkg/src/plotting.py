"""
Plotting Module

SVG log-log plots of norm time series with reference-slope guide lines.
CSV files are the ground truth; these figures are for reading them.
"""

import logging
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from decay_analysis import expected_rates  # noqa: E402
from errors import RateParameterError  # noqa: E402

logger = logging.getLogger(__name__)

NORM_PLOT_COLUMNS = ('u', 'theta', 'grad_h_u', 'grad_h_theta', 'd3_u3')
ORACLE_PLOT_COLUMNS = ('all', 'u', 'theta', 'grad_h_all')

# Guide line drawn for each plotted column: rate-table row name
GUIDE_ROWS = {
    'u': 'u',
    'grad_h_u': 'grad_h_u',
    'all': 'linear_l2',
    'grad_h_all': 'linear_grad_h',
}


def reference_slopes(sigma: float, delta: float) -> Dict[str, float]:
    """Rate-table exponents keyed by row name; empty when (sigma, delta) is outside the admissible set"""
    try:
        table = expected_rates(sigma, delta)
    except RateParameterError as e:
        logger.warning(f"⚠️ No reference slopes: {str(e)}")
        return {}
    return dict(zip(table['quantity'], table['exponent']))


def _guide(ax, t: np.ndarray, anchor: float, exponent: float, label: str) -> None:
    x = 1.0 + t
    ax.plot(t, anchor * (x / x[0]) ** exponent, linestyle='--', linewidth=1.0, color='gray', alpha=0.8)
    ax.annotate(label, xy=(t[-1], anchor * (x[-1] / x[0]) ** exponent), fontsize=8, color='gray')


def plot_decay(frame: pd.DataFrame, path: str, columns: Sequence[str], sigma: float, delta: float,
               title: str = 'Norm decay') -> Optional[str]:
    """
    Write a log-log SVG of the given columns of frame against t

    Args:
        frame: table with a 't' column and the plotted columns
        path: output .svg path
        columns: columns to draw; missing ones are skipped
        sigma: data order for the reference slopes
        delta: loss parameter for the reference slopes
        title: figure title

    Returns:
        path, or None when nothing could be drawn
    """
    data = frame[frame['t'] > 0]
    drawn = [c for c in columns if c in data.columns and np.all(data[c].to_numpy() > 0)]
    if data.empty or not drawn:
        logger.warning(f"⚠️ Nothing to plot for {path}")
        return None

    slopes = reference_slopes(sigma, delta)
    t = data['t'].to_numpy()

    fig, ax = plt.subplots(figsize=(8, 6))
    for column in drawn:
        values = data[column].to_numpy()
        ax.loglog(t, values, label=column, linewidth=1.5)
        row = GUIDE_ROWS.get(column)
        if row in slopes:
            _guide(ax, t, values[0], slopes[row], f"{row}: {slopes[row]:.3f}")

    ax.set_xlabel('t')
    ax.set_ylabel('norm')
    ax.set_title(title)
    ax.legend(loc='lower left')
    ax.grid(True, which='both', alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format='svg')
    plt.close(fig)
    logger.info(f"✅ Plot written to {path}")
    return path


def plot_norm_series(frame: pd.DataFrame, path: str, sigma: float, delta: float) -> Optional[str]:
    return plot_decay(frame, path, NORM_PLOT_COLUMNS, sigma, delta, title='Norm decay (grid)')


def plot_oracle(frame: pd.DataFrame, path: str, sigma: float, delta: float) -> Optional[str]:
    return plot_decay(frame, path, ORACLE_PLOT_COLUMNS, sigma, delta, title='Norm decay (continuous oracle)')
