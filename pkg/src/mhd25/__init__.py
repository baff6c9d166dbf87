"""Pseudospectral toolkit for a 2.5D compressible viscous non-resistive MHD
system: dyadic frequency analysis, symbol spectra, time integration, and
decay-rate measurement on a large periodic box."""

from .grid import (
    Grid,
    SpectralField,
    dealias,
    divergence,
    fractional_lambda,
    gradient,
    laplacian,
)
from .dyadic import BesovParams, DyadicBlocks, DyadicCutoffFamily, build_cutoffs
from .system import (
    MhdState,
    Params,
    ReformulatedState,
    compute_delta,
    compute_phi,
    rational_I,
)
from .solver import SolverConfig, Trajectory, simulate, step
from .diagnostics import DiagnosticsRecorder, fit_decay
from .initial import InitialSpec, generate_initial

__version__ = "0.1.0"

__all__ = [
    "BesovParams",
    "DiagnosticsRecorder",
    "DyadicBlocks",
    "DyadicCutoffFamily",
    "Grid",
    "InitialSpec",
    "MhdState",
    "Params",
    "ReformulatedState",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "build_cutoffs",
    "compute_delta",
    "compute_phi",
    "dealias",
    "divergence",
    "fit_decay",
    "fractional_lambda",
    "generate_initial",
    "gradient",
    "laplacian",
    "rational_I",
    "simulate",
    "step",
]
