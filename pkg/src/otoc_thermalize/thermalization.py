"""Thermal-subspace and nonthermal-fraction bounds from the angle variance.

A small variance sigma^2 of the principal-angle distribution forces almost
every state of the reference subspace to carry a near-thermal expectation
value of the observable projector. This module implements the resulting
bounds: the guaranteed dimension of the thermal subspace, the upper bound on
the fraction of nonthermal basis states (valid for *every* orthonormal basis
of the range), the converse variance bound, the witness lower bound achieved
by the principal-axes basis, and the core-sizing arithmetic that turns a
target resolution and fraction into a minimum core dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    SubspaceGeometry,
    correlator_trace,
    halmos_decompose,
    orthonormal_range_basis,
)
from .hilbert import Projector, sample_haar_unitary, derive_rng

#: Absolute float slack allowed when checking exact inequalities.
FLOAT_SLACK = 1e-9

#: Tolerance on the orthonormality defect of a supplied basis.
BASIS_TOL = 1e-8


def bound_thermal_dimension(sigma2: float, lam: float, d_rho: int) -> float:
    """Guaranteed thermal-subspace dimension, D_rho (1 - sigma^2 / lambda^2).

    Clamped below at 0. ``lam`` is the resolution at which an expectation
    value counts as thermal.
    """
    if lam <= 0:
        raise ValueError(f"resolution lambda must be positive, got {lam}")
    return max(0.0, d_rho * (1.0 - sigma2 / lam ** 2))


def bound_nonthermal_fraction(sigma2: float, lam: float):
    """Upper bound (3/lambda)(sigma^2/4)^(1/3) on the nonthermal fraction.

    Holds for every orthonormal basis of range(P_rho). Returns
    ``(value, vacuous)`` where the value is clamped into [0, 1] and
    ``vacuous`` flags a clamped (> 1) bound.
    """
    if lam <= 0:
        raise ValueError(f"resolution lambda must be positive, got {lam}")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    raw = (3.0 / lam) * (sigma2 / 4.0) ** (1.0 / 3.0)
    return min(1.0, raw), raw > 1.0


def thermal_subspace(g: SubspaceGeometry, lam: float):
    """Projector onto the thermal subspace and its dimension.

    The subspace is spanned by the principal axes |w_k> whose cos^2 theta_k
    deviates from G^2 by at most ``lam``; every unit vector in it has an
    observable expectation within ``lam`` of G^2.
    """
    if lam <= 0:
        raise ValueError(f"resolution lambda must be positive, got {lam}")
    cos2 = g.cos2
    g2 = float(np.sum(cos2)) / g.d_rho
    keep = np.abs(cos2 - g2) <= lam
    basis = g.axes_w[:, keep]
    return Projector.from_isometry(basis), int(np.count_nonzero(keep))


def empirical_nonthermal_fraction(p_r: Projector, basis: np.ndarray,
                                  g2: float, lam: float) -> float:
    """Measured fraction of basis states with |<b|P_R|b> - G^2| > lambda.

    The inequality is strict, so boundary ties count as thermal. The columns
    of ``basis`` must be orthonormal (checked; violation raises).
    """
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim != 2 or basis.shape[0] != p_r.dim:
        raise ValueError(f"basis shape {basis.shape} incompatible with dim {p_r.dim}")
    n = basis.shape[1]
    if n < 1:
        raise ValueError("basis must contain at least one column")
    defect = np.linalg.norm(basis.conj().T @ basis - np.eye(n))
    if defect > BASIS_TOL:
        raise ValueError(f"basis not orthonormal: defect {defect:.3e}")
    expect = np.einsum("ij,ij->j", basis.conj(), p_r.entries @ basis).real
    return float(np.count_nonzero(np.abs(expect - g2) > lam)) / n


def worst_case_basis(g: SubspaceGeometry) -> np.ndarray:
    """The principal axes |w_k>: the adversarial basis witnessing nonthermality."""
    return g.axes_w


def haar_rotated_basis(g: SubspaceGeometry, seed=None, rng=None) -> np.ndarray:
    """A Haar-random orthonormal basis of range(P_rho)."""
    q = sample_haar_unitary(g.d_rho, seed=seed, rng=rng)
    return g.axes_w @ q


def converse_variance_bound(lam: float, f_max: float) -> float:
    """Converse bound sigma^2 <= lambda^2 + (1 - lambda^2) f_max."""
    if not 0 <= lam < 1:
        raise ValueError(f"lambda must be in [0, 1), got {lam}")
    if not 0 <= f_max <= 1:
        raise ValueError(f"f_max must be in [0, 1], got {f_max}")
    return lam ** 2 + (1.0 - lam ** 2) * f_max


def nonthermal_witness_bound(gamma2: float, lam: float) -> float:
    """Lower bound (gamma^2 - lambda^2)/(1 - lambda^2) on the worst-basis fraction.

    Whenever sigma^2 >= gamma^2, the principal-axes basis must contain at
    least this fraction of nonthermal states.
    """
    if not 0 <= lam < 1:
        raise ValueError(f"lambda must be in [0, 1), got {lam}")
    return max(0.0, (gamma2 - lam ** 2) / (1.0 - lam ** 2))


@dataclass(frozen=True)
class SizingRow:
    """Minimum core size for a target relative resolution and fraction."""

    lambda_rel: float
    f_target: float
    d_s: int
    lambda_abs: float
    d_sigma_min: int
    n_sigma: int
    sigma2_threshold_rel: float
    sigma2_threshold_abs: float


def core_sizing(lambda_rel: float, f_target: float, d_s: int) -> SizingRow:
    """Minimum core dimension D_sigma >= (D_S(D_S-1)/4) (3/(lambda_rel f))^3.

    ``lambda_rel`` is the resolution relative to the thermal value 1/D_S;
    the absolute resolution is lambda_rel / D_S. The returned row carries the
    ceiling of the formula, the qubit count ceil(log2 D_sigma), and the
    variance thresholds 4 (f lambda / 3)^3 in both the relative and absolute
    lambda conventions.
    """
    if lambda_rel <= 0:
        raise ValueError(f"lambda_rel must be positive, got {lambda_rel}")
    if not 0 < f_target <= 1:
        raise ValueError(f"f_target must be in (0, 1], got {f_target}")
    if d_s < 2:
        raise ValueError(f"d_s must be >= 2, got {d_s}")
    v = (d_s * (d_s - 1) / 4.0) * (3.0 / (lambda_rel * f_target)) ** 3
    # snap values a hair above an integer back down before the ceiling
    d_sigma_min = max(1, math.ceil(v * (1.0 - 1e-12)))
    n_sigma = (d_sigma_min - 1).bit_length() if d_sigma_min > 1 else 0
    lambda_abs = lambda_rel / d_s
    return SizingRow(
        lambda_rel=lambda_rel,
        f_target=f_target,
        d_s=d_s,
        lambda_abs=lambda_abs,
        d_sigma_min=d_sigma_min,
        n_sigma=n_sigma,
        sigma2_threshold_rel=4.0 * (f_target * lambda_rel / 3.0) ** 3,
        sigma2_threshold_abs=4.0 * (f_target * lambda_abs / 3.0) ** 3,
    )


@dataclass(frozen=True)
class ThermalizationReport:
    """Bounds and empirical fractions for one projector pair at one lambda."""

    g2: float
    g4: float
    sigma2: float
    lam: float
    dim_thermal_bound: float
    dim_thermal_achieved: int
    f_lambda_bound: float
    f_bound_vacuous: bool
    worst_basis_f: float
    empirical_f: Sequence[float]
    converse_bound: float

    def sound(self, slack: float = FLOAT_SLACK) -> bool:
        """True when every measured fraction respects the bounds."""
        fractions = [self.worst_basis_f, *self.empirical_f]
        if any(f > self.f_lambda_bound + slack for f in fractions):
            return False
        return self.dim_thermal_achieved >= self.dim_thermal_bound - slack


def thermalization_report(p_r: Projector, p_rho: Projector, lam: float,
                          n_bases: int = 20, seed=None) -> ThermalizationReport:
    """Evaluate all bounds for one pair and measure fractions on sampled bases.

    Measures the nonthermal fraction on the principal-axes basis and on
    ``n_bases`` Haar-rotated orthonormal bases of range(P_rho), and packages
    them with the forward bounds and the converse bound computed from the
    largest measured fraction.
    """
    geom = halmos_decompose(p_r, p_rho)
    g2 = correlator_trace(p_r, p_rho, 1)
    g4 = correlator_trace(p_r, p_rho, 2)
    sigma2 = max(0.0, g4 - g2 * g2)
    f_bound, vacuous = bound_nonthermal_fraction(sigma2, lam)
    _, dim_achieved = thermal_subspace(geom, lam)
    worst_f = empirical_nonthermal_fraction(p_r, worst_case_basis(geom), g2, lam)
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "report-bases")
    empirical = [
        empirical_nonthermal_fraction(
            p_r, haar_rotated_basis(geom, rng=rng), g2, lam)
        for _ in range(n_bases)
    ]
    f_max = max([worst_f, *empirical], default=worst_f)
    return ThermalizationReport(
        g2=g2, g4=g4, sigma2=sigma2, lam=lam,
        dim_thermal_bound=bound_thermal_dimension(sigma2, lam, p_rho.rank),
        dim_thermal_achieved=dim_achieved,
        f_lambda_bound=f_bound, f_bound_vacuous=vacuous,
        worst_basis_f=worst_f, empirical_f=tuple(empirical),
        converse_bound=converse_variance_bound(min(lam, 1.0 - 1e-12), f_max)
        if lam < 1 else 1.0,
    )
