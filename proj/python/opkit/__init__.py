"""Operator-learning toolkit: FNO/GNO models, PDE data generators, and the
spectral transforms behind them, backed by the C++ core."""

from ._core import (
    Fno,
    darcy_coefficient,
    generate_dataset,
    irfftn,
    read_dataset,
    relative_l2,
    rfftn,
    sample_grf_1d,
    sample_grf_2d,
    solve_burgers,
    solve_darcy,
)

__all__ = [
    "Fno",
    "darcy_coefficient",
    "generate_dataset",
    "irfftn",
    "read_dataset",
    "relative_l2",
    "rfftn",
    "sample_grf_1d",
    "sample_grf_2d",
    "solve_burgers",
    "solve_darcy",
]
