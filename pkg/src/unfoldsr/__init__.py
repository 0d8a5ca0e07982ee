"""Unfolded MAP super-resolution for the classical degradation model."""

__version__ = "0.1.0"

from .data_step import DataStep, data_step, data_step_oracle, wiener_deblur
from .degradation import (DegradationSpec, degrade, gaussian_kernel, kernel_center_of_mass,
                          load_benchmark_kernel, motion_kernel, read_kernel, write_kernel)
from .imaging import (add_awgn, make_rng, nearest_upsample, psnr, read_png, standard_downsample,
                      write_png, zero_upsample)
from .kernel_estimation import bicubic_downsample, estimate_equivalent_kernel, reapply_kernel
from .priors.tv import IdentityPrior, TVPrior, tv_denoise
from .schedule import HyperSchedule, analytic_schedule, mlp_schedule
from .solver import preprocess_real_lr, super_resolve, unfold_sr

__all__ = [
    "DataStep", "data_step", "data_step_oracle", "wiener_deblur",
    "DegradationSpec", "degrade", "gaussian_kernel", "kernel_center_of_mass",
    "load_benchmark_kernel", "motion_kernel",
    "read_kernel", "write_kernel",
    "add_awgn", "make_rng", "nearest_upsample", "psnr", "read_png", "standard_downsample",
    "write_png", "zero_upsample",
    "bicubic_downsample", "estimate_equivalent_kernel", "reapply_kernel",
    "IdentityPrior", "TVPrior", "tv_denoise",
    "HyperSchedule", "analytic_schedule", "mlp_schedule",
    "preprocess_real_lr", "super_resolve", "unfold_sr",
]
