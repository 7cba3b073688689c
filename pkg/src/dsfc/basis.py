"""Exponential basis f(tau) = exp(Pi tau) f0 on [-r, 0] and the quantities derived from it."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from . import matfun
from .constants import TOL
from .errors import BasisInsufficientError, ConfigurationError, DegenerateBasisError, DimensionError, DomainError


_EXTENDED_COND = 1e6


@dataclass(frozen=True)
class BasisSpec:
    Pi: np.ndarray
    f0: np.ndarray
    r: float

    def __post_init__(self):
        Pi = matfun.as_matrix(self.Pi, "Pi")
        f0 = np.asarray(self.f0, dtype=float).reshape(-1)
        if Pi.shape[0] != Pi.shape[1]:
            raise DimensionError(f"Pi must be square, got {Pi.shape}")
        if f0.shape[0] != Pi.shape[0]:
            raise DimensionError(f"f0 has length {f0.shape[0]}, Pi is {Pi.shape[0]}x{Pi.shape[0]}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise DomainError(f"delay r must be positive, got {self.r}")
        object.__setattr__(self, "Pi", Pi)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "r", float(self.r))

    @property
    def d(self) -> int:
        return self.f0.shape[0]

    @classmethod
    def diagonal(cls, exponents, r: float) -> "BasisSpec":
        """Basis of pure exponentials exp(lambda_k tau), each equal to 1 at tau = 0."""
        lam = np.asarray(exponents, dtype=float).reshape(-1)
        return cls(np.diag(lam), np.ones_like(lam), r)

    def f(self, tau) -> np.ndarray:
        """Basis values; returns shape (d,) for scalar tau and (len(tau), d) for arrays."""
        taus = np.atleast_1d(np.asarray(tau, dtype=float))
        Pi = self.Pi
        if np.count_nonzero(Pi - np.diag(np.diag(Pi))) == 0:
            out = np.exp(np.outer(taus, np.diag(Pi))) * self.f0
        else:
            out = np.array([matfun.expm(Pi, t) @ self.f0 for t in taus])
        return out[0] if np.ndim(tau) == 0 else out


@dataclass(frozen=True)
class GramData:
    Finv: np.ndarray
    F: np.ndarray
    sqrtF: np.ndarray
    sqrtFinv: np.ndarray
    PiHat: np.ndarray
    nu: int
    orthonormality_defect: float = field(default=0.0)

    @property
    def d(self) -> int:
        return self.F.shape[0]


def _gram_factors_extended(spec: BasisSpec, dps: int = 50):
    """Finv, F, sqrtF, sqrtFinv from a Van Loan exponential evaluated at `dps` digits."""
    with mp.workdps(dps):
        d = spec.d
        H = mp.zeros(2 * d, 2 * d)
        for i in range(d):
            for j in range(d):
                H[i, j] = spec.Pi[i, j] * spec.r
                H[d + i, d + j] = -spec.Pi[j, i] * spec.r
                H[i, d + j] = spec.f0[i] * spec.f0[j] * spec.r
        E = mp.expm(H)
        G = E[d:, d:].T * E[:d, d:]
        G = (G + G.T) / 2
        w, V = mp.eigsy(G)

        def rebuild(fn):
            D = mp.diag([fn(w[k]) for k in range(d)])
            return np.array((V * D * V.T).tolist(), dtype=float)

        out = [rebuild(lambda x: x), rebuild(lambda x: 1 / x), rebuild(lambda x: 1 / mp.sqrt(x)), rebuild(mp.sqrt)]
    return [matfun.sym(a) for a in out]


def build_gram(spec: BasisSpec, nu: int) -> GramData:
    try:
        Finv = matfun.vanloan_gram(spec.Pi, spec.f0, spec.r)
    except DegenerateBasisError as exc:
        raise ConfigurationError(f"degenerate basis: {exc}") from exc
    w, V = np.linalg.eigh(Finv)
    if w.max() / w.min() > _EXTENDED_COND:
        # double precision pins the small eigen-directions of Finv only to
        # eps * cond; recompute the factors with extra digits
        Finv, F, sqrtF, sqrtFinv = _gram_factors_extended(spec)
    else:
        F = matfun.sym((V / w) @ V.T)
        sqrtF = matfun.sym((V / np.sqrt(w)) @ V.T)
        sqrtFinv = matfun.sym((V * np.sqrt(w)) @ V.T)
    PiHat = np.kron(sqrtF @ spec.Pi @ sqrtFinv, np.eye(nu))
    # g = sqrtF f is orthonormal iff sqrtF Finv sqrtF = I
    defect = float(np.abs(sqrtF @ Finv @ sqrtF - np.eye(spec.d)).max())
    return GramData(Finv, F, sqrtF, sqrtFinv, PiHat, int(nu), defect)


def eval_F(g: GramData, spec: BasisSpec, tau: float) -> np.ndarray:
    """F(tau) = (sqrtF f(tau)) kron I_nu, a (d nu) x nu matrix."""
    if not (-spec.r - 1e-12 <= tau <= 1e-12):
        raise DomainError(f"tau={tau} outside [-{spec.r}, 0]")
    return np.kron((g.sqrtF @ spec.f(float(tau))).reshape(-1, 1), np.eye(g.nu))


def eval_F_many(g: GramData, spec: BasisSpec, taus) -> np.ndarray:
    """Stack of F(tau_k), shape (len(taus), d nu, nu)."""
    vals = spec.f(np.asarray(taus, dtype=float).reshape(-1)) @ g.sqrtF.T
    eye = np.eye(g.nu)
    return np.einsum("kj,ab->kjab", vals, eye).reshape(len(vals), -1, g.nu)


def chebyshev_nodes(r: float, n: int) -> np.ndarray:
    """Chebyshev points of the second kind mapped to [-r, 0], from 0 down to -r."""
    if n == 1:
        return np.array([-0.5 * r])
    return 0.5 * r * (np.cos(np.pi * np.arange(n) / (n - 1)) - 1.0)


def expand_in_basis(M, A, B, spec: BasisSpec) -> tuple[np.ndarray, float]:
    """Coefficients G with M exp(-A tau) B = G (f(tau) kron I_p), by collocation.

    Returns (G, residual) where residual is the largest entry-wise mismatch over
    10 d equispaced check points.
    """
    M = matfun.as_matrix(M, "M")
    A = matfun.as_matrix(A, "A")
    B = matfun.as_matrix(B, "B")
    n, p = B.shape
    if M.shape[1] != n or A.shape != (n, n):
        raise DimensionError("M, A, B have inconsistent shapes")
    d = spec.d

    def target(taus):
        return np.array([M @ matfun.expm(A, -t) @ B for t in taus])

    nodes = chebyshev_nodes(spec.r, d)
    V = spec.f(nodes)  # (d nodes, d functions)
    Y = target(nodes)  # (d, pt, p)
    pt = M.shape[0]
    blocks, *_ = np.linalg.lstsq(V, Y.reshape(d, -1), rcond=None)
    blocks = blocks.reshape(d, pt, p)
    coeff = np.concatenate(list(blocks), axis=1) if d else np.zeros((pt, 0))

    check = np.linspace(-spec.r, 0.0, 10 * d)
    Yc = target(check)
    recon = np.einsum("kj,jab->kab", spec.f(check), blocks)
    residual = float(np.abs(recon - Yc).max()) if Yc.size else 0.0
    scale = float(np.abs(Yc).sum(axis=2).max()) if Yc.size else 0.0
    if residual > TOL.expansion_residual * (1.0 + scale):
        raise BasisInsufficientError(
            f"basis does not span the modes of exp(-A tau) B (residual {residual:.3e}); "
            "add exponentials covering the eigenvalues of -A to Pi/f0"
        )
    return coeff, residual


def orthonormalize_coeffs(plain, g: GramData) -> np.ndarray:
    """Convert plain-basis coefficients to orthonormal-basis ones: plain (sqrtF^{-1} kron I_nu)."""
    plain = matfun.as_matrix(plain, "coefficients")
    if plain.shape[1] != g.d * g.nu:
        raise DimensionError(f"coefficient matrix has {plain.shape[1]} columns, expected {g.d * g.nu}")
    return plain @ np.kron(g.sqrtFinv, np.eye(g.nu))
