"""Parallel-beam tomographic reconstruction.

Sinograms are float64 arrays shaped (n_theta, n_t) with angles on [0, pi) and
detector positions on [-1, 1]; images are (n, n) on the same unit square.
"""

from ._core import (
    FormatError,
    MemoryBudgetError,
    PipelineError,
    TomoIOError,
    analytic_sinogram,
    apply_center,
    backproject_ss,
    bst_backproject,
    detector_coordinates,
    estimate_center,
    fbp,
    forward_radon,
    normalize,
    pixel_coordinates,
    ramp_filter,
    read_volume,
    render_slice,
    run_cli,
    suppress_rings,
    write_volume,
)

__all__ = [name for name in dir() if not name.startswith("_")]
