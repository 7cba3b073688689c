"""Dense real matrix utilities: exponential, SPD square root, Gram integrals, stabilizing gains."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .constants import TOL
from .errors import (
    DegenerateBasisError,
    DimensionError,
    DomainError,
    NotPositiveDefiniteError,
    StabilizabilityError,
)

# Higham (2005) degree-13 Pade numerator coefficients and the 1-norm bound
# below which no scaling is needed.
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array (scalars become 1x1, vectors become columns)."""
    a = np.asarray(M, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def _square(M, name: str) -> np.ndarray:
    a = as_matrix(M, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def spectral_abscissa_of(M) -> float:
    """Largest real part among the eigenvalues of a square matrix."""
    a = _square(M, "M")
    if a.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(a).real))


def expm(M, t: float = 1.0) -> np.ndarray:
    """Return exp(M t) by scaling and squaring with the [13/13] Pade approximant."""
    a = _square(M, "M")
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    n = a.shape[0]
    if n == 0:
        return a.copy()
    a = a * float(t)
    norm1 = np.linalg.norm(a, 1)
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
        a = a / 2.0**s

    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def sqrtm_spd(M) -> np.ndarray:
    """Unique symmetric positive definite square root."""
    a = _square(M, "M")
    scale = max(np.linalg.norm(a, np.inf), 1e-300)
    if np.linalg.norm(a - a.T, np.inf) > TOL.symmetry_rel * scale:
        raise NotPositiveDefiniteError("matrix is not symmetric")
    w, V = np.linalg.eigh(sym(a))
    if w.size and w.min() <= TOL.spd_eig_floor * max(abs(w).max(), 1.0):
        raise NotPositiveDefiniteError(f"smallest eigenvalue {w.min():.3e} is not positive")
    return sym((V * np.sqrt(w)) @ V.T)


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def vanloan_gram(Pi, w0, r: float) -> np.ndarray:
    """Integral over [-r, 0] of exp(Pi t) w0 w0^T exp(Pi^T t), via one block exponential.

    With E = expm([[Pi, w0 w0^T], [0, -Pi^T]], r) the integral equals E22^T E12.
    """
    P = _square(Pi, "Pi")
    w = as_matrix(w0, "w0").reshape(-1, 1)
    d = P.shape[0]
    if w.shape[0] != d:
        raise DimensionError(f"w0 has length {w.shape[0]}, expected {d}")
    if not r > 0:
        raise DomainError("r must be positive")
    H = np.zeros((2 * d, 2 * d))
    H[:d, :d] = P
    H[:d, d:] = w @ w.T
    H[d:, d:] = -P.T
    E = expm(H, r)
    G = sym(E[d:, d:].T @ E[:d, d:])
    eig = np.linalg.eigvalsh(G)
    if eig.min() <= TOL.gram_pd_rel * np.trace(G):
        cond = np.inf if eig.min() <= 0 else eig.max() / eig.min()
        raise DegenerateBasisError(
            f"Gram matrix is not numerically positive definite (condition number {cond:.3e}); "
            "the basis functions are linearly dependent on [-r, 0]"
        )
    return G


def _shifted_lqr(A, B, shift: float) -> np.ndarray:
    """Riccati gain for (A + shift I, B); exists whenever the pair is stabilizable but not controllable."""
    n, p = A.shape[0], B.shape[1]
    try:
        X = sla.solve_continuous_are(A + shift * np.eye(n), B, np.eye(n), np.eye(p))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise StabilizabilityError(f"(A, B) is not stabilizable: {exc}") from None
    return -B.T @ X


def stabilizing_gain(A, B, K=None, margin: float = TOL.stabilizing_margin, shift: float | None = None) -> np.ndarray:
    """Gain K such that A + B K has spectral abscissa <= -margin.

    Bass' method: with beta > ||A||_inf solve (A + beta I) W + W (A + beta I)^T = 2 B B^T
    and take K = -B^T W^{-1}; every closed-loop eigenvalue then has real part -beta.
    If (A, B) is uncontrollable, a Riccati gain for the shifted pair is used instead.
    A supplied K is only checked.
    """
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
    if K is None:
        beta = np.linalg.norm(A, np.inf) + (2.0 * margin if shift is None else shift)
        if beta <= margin:
            raise StabilizabilityError("shift too small to reach the requested margin")
        W = sla.solve_continuous_lyapunov(A + beta * np.eye(n), 2.0 * B @ B.T)
        W = sym(W)
        if np.linalg.eigvalsh(W).min() > 1e-12 * max(np.trace(W), 1e-300):
            K = -np.linalg.solve(W, B).T
        else:
            K = _shifted_lqr(A, B, 2.0 * margin)
    else:
        K = as_matrix(K, "K")
        if K.shape != (B.shape[1], n):
            raise DimensionError(f"K must be {B.shape[1]}x{n}, got {K.shape}")
    alpha = spectral_abscissa_of(A + B @ K)
    if not alpha <= -margin:
        raise StabilizabilityError(f"closed loop A+BK has spectral abscissa {alpha:.4g} > -{margin}")
    return K
