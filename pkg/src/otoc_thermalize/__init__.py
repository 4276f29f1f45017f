"""Principal-angle geometry and OTOC-based thermalization bounds.

The package computes correlators G^(2n) of pairs of high-dimensional
projectors, their principal-angle decomposition, the thermal-subspace and
nonthermal-fraction bounds that follow from a small angle variance, Haar
typicality statistics, and finite-time-window predictor bounds -- together
with a seeded CLI that runs the verification experiments.
"""

__version__ = "0.1.0"

__all__ = [
    "hilbert",
    "geometry",
    "thermalization",
    "dynamics",
    "predictor",
    "cli",
]
