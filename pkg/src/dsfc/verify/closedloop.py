from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..basis import BasisSpec, GramData, eval_F_many
from ..errors import DimensionError
from ..matfun import as_matrix
from ..model import ControllerGains


@dataclass(frozen=True)
class ClosedLoop:
    """chi' = A0 chi + A1 chi(t-r) + int A3 F(tau) chi(t+tau) dtau + Dw w,
    z = C1 chi + C2 chi(t-r) + int C3 F(tau) chi(t+tau) dtau + D3 w.

    ``F`` maps an array of tau values to a (k, d nu, nu) stack; it is None when there
    is no distributed term.
    """

    A0: np.ndarray
    A1: np.ndarray
    A3: np.ndarray | None
    Dw: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    C3: np.ndarray | None
    D3: np.ndarray
    r: float
    F: Callable | None = None

    @property
    def nu(self) -> int:
        return self.A0.shape[0]

    @property
    def q(self) -> int:
        return self.Dw.shape[1]

    @property
    def m(self) -> int:
        return self.C1.shape[0]

    def kernels(self, taus):
        """(A3 F(tau_j), C3 F(tau_j)) stacks, zeros when there is no distributed term."""
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        k = taus.size
        if self.F is None:
            return np.zeros((k, self.nu, self.nu)), np.zeros((k, self.m, self.nu))
        Fs = self.F(taus)
        return np.einsum("ij,kjl->kil", self.A3, Fs), np.einsum("ij,kjl->kil", self.C3, Fs)


def closed_loop(plant, spec: BasisSpec, g: GramData, gains: ControllerGains, C3=None) -> ClosedLoop:
    """Closed loop of the plant under u' = K1 chi + K2 chi(t-r) + int K3 F chi + D2 w."""
    from ..basis import orthonormalize_coeffs

    n, p, nu = plant.n, plant.p, plant.nu
    if gains.K1.shape != (p, nu) or gains.K3.shape != (p, spec.d * nu):
        raise DimensionError("gains do not match the plant/basis")
    A0 = np.block([[plant.A, np.zeros((n, p))], [gains.K1]])
    A1 = np.block([[np.zeros((n, n)), plant.B], [gains.K2]])
    A3 = np.vstack([np.zeros((n, spec.d * nu)), gains.K3])
    Dw = np.vstack([plant.D1, plant.D2])
    C3 = orthonormalize_coeffs(plant.C3bar, g) if C3 is None else C3
    return ClosedLoop(A0, A1, A3, Dw, plant.C1, plant.C2, C3, plant.D3, plant.r, lambda t: eval_F_many(g, spec, t))


def plain_loop(A0, A1, r: float, Dw=None, C1=None, C2=None, D3=None) -> ClosedLoop:
    """Pointwise-delay loop without a distributed term (for checks and small examples)."""
    A0 = as_matrix(A0, "A0")
    nu = A0.shape[0]
    A1 = as_matrix(A1, "A1")
    Dw = np.zeros((nu, 1)) if Dw is None else as_matrix(Dw, "Dw")
    C1 = np.eye(nu) if C1 is None else as_matrix(C1, "C1")
    m = C1.shape[0]
    C2 = np.zeros((m, nu)) if C2 is None else as_matrix(C2, "C2")
    D3 = np.zeros((m, Dw.shape[1])) if D3 is None else as_matrix(D3, "D3")
    return ClosedLoop(A0, A1, None, Dw, C1, C2, None, D3, float(r), None)
