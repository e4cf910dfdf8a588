"""Python access to the snowball_sim core.

Updates are passed as lists of layer slices (one list of floats per layer).
Configs use the same `key = value` text as the command-line tool.
"""

from ._core import (
    ConfigError,
    SnowballError,
    __version__,
    bottom_up_election,
    ch_score,
    gap_statistic,
    kmeans,
    krum_select,
    minmax_normalize,
    resolve_config,
    rounds_csv_header,
    run_experiment,
    vae_loss,
)

__all__ = [
    "ConfigError",
    "SnowballError",
    "__version__",
    "bottom_up_election",
    "ch_score",
    "gap_statistic",
    "kmeans",
    "krum_select",
    "minmax_normalize",
    "resolve_config",
    "rounds_csv_header",
    "run_experiment",
    "vae_loss",
]
