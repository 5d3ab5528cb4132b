"""Semi-analytic spectra on intervals and disks with constant thickness."""

from .disk import (
    DiskMode,
    disk_limit_spectrum,
    disk_trace_ratio,
    disk_twophase_spectrum,
    values,
)
from .interval import (
    IntervalLimitMode,
    IntervalTwoPhaseMode,
    interval_limit_spectrum,
    interval_twophase_spectrum,
)

__all__ = [
    "DiskMode",
    "IntervalLimitMode",
    "IntervalTwoPhaseMode",
    "disk_limit_spectrum",
    "disk_trace_ratio",
    "disk_twophase_spectrum",
    "interval_limit_spectrum",
    "interval_twophase_spectrum",
    "values",
]
