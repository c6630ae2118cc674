"""Spectral cell method for the scalar wave equation on immersed domains."""
from .assembly import Material, PartitionedSystem, assemble
from .geometry import ImplicitDomain, IndicatorConfig, parse_csg
from .mesh import build_mesh, partition_dofs
from .spectra import critical_dt, max_eig
from .timeint import run_cdm, run_leapfrog, run_newmark_imex, run_trapezoidal

__version__ = "0.1.0"
