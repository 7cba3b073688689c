"""Numerical tolerances shared by every module and by the test-suite."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # matfun
    symmetry_rel: float = 1e-12
    spd_eig_floor: float = 1e-14
    sqrtm_residual: float = 1e-10
    gram_pd_rel: float = 1e-12
    stabilizing_margin: float = 0.05

    # basis
    gram_inverse: float = 1e-9
    orthonormality: float = 1e-8
    expansion_residual: float = 1e-8

    # lmi
    strict_margin_rel: float = 1e-7
    gamma_floor: float = 1e-6

    # solver
    solver_feas: float = 1e-8
    solver_gap: float = 1e-8
    solver_iter_cap: int = 100
    residual_check_factor: float = 10.0

    # synthesis
    rho1: float = 0.01
    rho2: float = 0.01
    eps: float = 1e-6
    max_iter: int = 100
    monotone_slack: float = 1e-6
    max_rejections: int = 3

    # verify
    spectrum_convergence: float = 1e-4
    dissipation_rel: float = 1e-4
    positivity_floor: float = -1e-8


TOL = Tolerances()
