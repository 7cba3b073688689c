"""Characteristic roots by pseudospectral discretization of the solution operator's generator.

The segment chi_t on [-r, 0] is represented by its values at N+1 Chebyshev points;
the derivative rows use the spectral differentiation matrix and the tau=0 row
carries the right-hand side of the delay equation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..constants import TOL
from ..errors import DomainError
from .closedloop import ClosedLoop


def cheb(N: int):
    """Chebyshev points x_j = cos(j pi / N) and the differentiation matrix on [-1, 1]."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def clenshaw_curtis(N: int):
    """Nodes and weights of the (N+1)-point Clenshaw-Curtis rule on [-1, 1]."""
    theta = np.pi * np.arange(N + 1) / N
    x = np.cos(theta)
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    ii = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[ii]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k**2 - 1)
    w[ii] = 2.0 * v / N
    return x, w


def generator_matrix(cl: ClosedLoop, N: int) -> np.ndarray:
    if N < 5:
        raise DomainError("need N >= 5 collocation intervals")
    r, nu = cl.r, cl.nu
    x, D = cheb(N)
    theta = 0.5 * r * (x - 1.0)  # theta_0 = 0, theta_N = -r
    _, wcc = clenshaw_curtis(N)
    wcc = 0.5 * r * wcc
    I = np.eye(nu)
    M = np.kron((2.0 / r) * D, I)
    row = np.zeros((nu, (N + 1) * nu))
    kern, _ = cl.kernels(theta)
    for j in range(N + 1):
        row[:, j * nu : (j + 1) * nu] = wcc[j] * kern[j]
    row[:, :nu] += cl.A0
    row[:, N * nu :] += cl.A1
    M[:nu] = row
    return M


@dataclass
class SpectrumReport:
    N_list: list
    rightmost: dict = field(default_factory=dict)  # N -> array of roots sorted by real part
    abscissae: dict = field(default_factory=dict)
    abscissa: float = float("nan")
    converged: bool = False

    def write_csv(self, path, count: int = 10) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "rank", "real", "imag"])
            for N in self.N_list:
                for k, s in enumerate(self.rightmost[N][:count]):
                    w.writerow([N, k, repr(float(s.real)), repr(float(s.imag))])


def spectral_abscissa(cl: ClosedLoop, N_list=(10, 20, 40), keep: int = 20) -> SpectrumReport:
    rep = SpectrumReport(list(N_list))
    for N in N_list:
        ev = np.linalg.eigvals(generator_matrix(cl, N))
        ev = ev[np.argsort(-ev.real)]
        rep.rightmost[N] = ev[:keep]
        rep.abscissae[N] = float(ev[0].real)
    vals = [rep.abscissae[N] for N in N_list]
    rep.abscissa = vals[-1]
    rep.converged = len(vals) >= 2 and abs(vals[-1] - vals[-2]) < TOL.spectrum_convergence
    return rep
