"""Predictor-based initial gains for the dynamical state feedback controller.

For K with A + BK Hurwitz and X Hurwitz, the controller

    u' = (KB + X) u + (KA - XK) (e^{Ar} x + int e^{-A tau} B u(t + tau) dtau)

assigns the closed-loop spectrum eig(A + BK) U eig(X).  Written in the
distributed-gain form it reads K1 = [(KA - XK) e^{Ar}, KB + X], K2 = 0 and
K3 = Gamma, the orthonormal-basis coefficients of [0, (KA - XK) e^{-A tau} B].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matfun
from .basis import BasisSpec, GramData, expand_in_basis, orthonormalize_coeffs
from .errors import BasisInsufficientError, DimensionError, StabilizabilityError
from .model import ControllerGains, PlantModel


@dataclass(frozen=True)
class PredictorSeed:
    K: np.ndarray
    X: np.ndarray
    gains: ControllerGains
    Gamma: np.ndarray
    expAr: np.ndarray
    residual: float


def predictor_init(plant: PlantModel, spec: BasisSpec, g: GramData, K=None, X=None) -> PredictorSeed:
    A, B, r = plant.A, plant.B, spec.r
    n, p, nu, d = plant.n, plant.p, plant.nu, spec.d
    K = matfun.stabilizing_gain(A, B, K=K)
    X = -0.1 * np.eye(p) if X is None else matfun.as_matrix(X, "X")
    if X.shape != (p, p):
        raise DimensionError(f"X must be {p}x{p}")
    if matfun.spectral_abscissa_of(X) >= 0:
        raise StabilizabilityError("X must be Hurwitz")

    M = K @ A - X @ K
    expAr = matfun.expm(A, r)
    K1 = np.hstack([M @ expAr, K @ B + X])
    K2 = np.zeros((p, nu))
    try:
        coeff, residual = expand_in_basis(M, A, B, spec)
    except BasisInsufficientError as exc:
        raise BasisInsufficientError(
            f"{exc}. Enlarge the basis (Pi, f0); any number of extra exponentials may be added."
        ) from exc
    plain = np.zeros((p, d * nu))
    for j in range(d):
        plain[:, j * nu + n : (j + 1) * nu] = coeff[:, j * p : (j + 1) * p]
    Gamma = orthonormalize_coeffs(plain, g)
    return PredictorSeed(K, X, ControllerGains(K1, K2, Gamma), Gamma, expAr, residual)
