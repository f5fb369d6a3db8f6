"""nlslab: numerical laboratory for semiclassical NLS norm inflation.

Spectral torus fields, multi-scale bubble data, a symmetric-hyperbolic
hydrodynamic solver with zero-speed support checks, a split-step NLS
solver, modulated-energy diagnostics, and scaling-law experiments.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DegenerateCouplingError,
    DomainError,
    LifespanError,
    NlsLabError,
    ResolutionError,
    StructuralError,
)
