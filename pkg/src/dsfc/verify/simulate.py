"""Method of steps with classical RK4 on a uniform grid aligned with the delay.

History values off the grid (the half-step RK4 stages) come from cubic
interpolation of stored nodes; the distributed integral is composite Simpson over
the stored segment.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .closedloop import ClosedLoop


@dataclass
class Trajectory:
    t: np.ndarray  # nodes from -r to the horizon
    chi: np.ndarray  # (len(t), nu)
    z: np.ndarray  # (len(t), m); NaN on the initial segment
    w: np.ndarray  # (len(t), q)
    h: float
    r: float
    diverged: bool = False

    @property
    def M(self) -> int:
        return int(round(self.r / self.h))

    @property
    def start(self) -> int:
        """Index of t = 0."""
        return self.M

    def write_csv(self, path) -> None:
        nu, m, q = self.chi.shape[1], self.z.shape[1], self.w.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t"] + [f"chi{i}" for i in range(nu)] + [f"z{i}" for i in range(m)] + [f"w{i}" for i in range(q)])
            for k in range(self.t.size):
                wr.writerow([repr(float(v)) for v in (self.t[k], *self.chi[k], *self.z[k], *self.w[k])])


def write_two_column(path, t, values) -> None:
    """Plot-ready ``time value`` text file."""
    np.savetxt(path, np.column_stack([t, values]), fmt="%.12e")


def simpson_weights(M: int, h: float) -> np.ndarray:
    if M % 2:
        raise DomainError("Simpson's rule needs an even number of intervals")
    w = np.ones(M + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _lagrange_mid(count: int, off: int) -> np.ndarray:
    """Weights of the interpolant through nodes 0..count-1, evaluated at off + 1/2."""
    x = off + 0.5
    nodes = np.arange(count)
    w = np.ones(count)
    for k in range(count):
        for j in range(count):
            if j != k:
                w[k] *= (x - nodes[j]) / (nodes[k] - nodes[j])
    return w


def _midpoints(X: np.ndarray, i0: int, i1: int, last: int, brk: int) -> np.ndarray:
    """Cubic-interpolated values halfway between nodes i and i+1, for i in [i0, i1).

    Stencils never straddle ``brk`` (the junction with the initial segment, where the
    solution has a kink) and use only known nodes 0..last; centred where possible.
    """
    i = np.arange(i0, i1)
    first = i < brk
    lo_b = np.where(first, 0, brk)
    hi_b = np.where(first, min(brk, last), last)
    cnt = np.minimum(4, hi_b - lo_b + 1)
    start = np.clip(i - 1, lo_b, hi_b - cnt + 1)
    off = i - start
    out = np.empty((i.size, X.shape[1]))
    for c, o in set(zip(cnt.tolist(), off.tolist())):
        sel = (cnt == c) & (off == o)
        w = _lagrange_mid(c, o)
        out[sel] = sum(w[k] * X[start[sel] + k] for k in range(c))
    return out


def _as_input(w, q: int):
    if w is None:
        return lambda t: np.zeros(q)
    if callable(w):
        return lambda t: np.broadcast_to(np.asarray(w(t), dtype=float), (q,)).copy()
    c = np.broadcast_to(np.asarray(w, dtype=float), (q,)).copy()
    return lambda t: c


def _initial_segment(psi, taus, nu):
    if psi is None:
        return np.zeros((taus.size, nu))
    if callable(psi):
        return np.array([np.broadcast_to(np.asarray(psi(s), dtype=float), (nu,)) for s in taus])
    a = np.asarray(psi, dtype=float)
    if a.ndim == 2:
        if a.shape != (taus.size, nu):
            raise DomainError(f"sampled initial segment must be {(taus.size, nu)}")
        return a.copy()
    return np.tile(np.broadcast_to(a, (nu,)), (taus.size, 1))


def simulate(cl: ClosedLoop, psi=None, w=None, horizon: float = 10.0, step: float | None = None,
             blowup: float = 1e12) -> Trajectory:
    r, nu, q = cl.r, cl.nu, cl.q
    h = r / 100.0 if step is None else float(step)
    if h > r / 10.0 + 1e-15:
        raise DomainError("step must be at most r/10")
    M = int(round(r / h))
    if abs(M * h - r) > 1e-9 * r or M % 2:
        raise DomainError("r/step must be an even integer")
    nsteps = int(np.ceil(horizon / h - 1e-9))
    t = -r + h * np.arange(M + nsteps + 1)
    wfun = _as_input(w, q)
    X = np.full((M + nsteps + 1, nu), np.nan)
    X[: M + 1] = _initial_segment(psi, t[: M + 1], nu)

    taus = -r + h * np.arange(M + 1)
    sw = simpson_weights(M, h)
    Kx, Kz = cl.kernels(taus)
    WA = sw[:, None, None] * Kx
    WC = sw[:, None, None] * Kz

    def rhs(s, y, delayed, segment):
        dist = np.einsum("kij,kj->i", WA, segment)
        return cl.A0 @ y + cl.A1 @ delayed + dist + cl.Dw @ wfun(s)

    diverged = False
    last_ok = M + nsteps
    for n in range(M, M + nsteps):
        tn = t[n]
        y = X[n]
        # grid-aligned segments end at the stage value itself
        seg_n = X[n - M : n + 1]
        k1 = rhs(tn, y, X[n - M], seg_n)
        mids = np.vstack([_midpoints(X, n - M, n, n, M), [np.zeros(nu)]])
        dmid = mids[0]
        y2 = y + 0.5 * h * k1
        mids[-1] = y2
        k2 = rhs(tn + 0.5 * h, y2, dmid, mids)
        y3 = y + 0.5 * h * k2
        mids[-1] = y3
        k3 = rhs(tn + 0.5 * h, y3, dmid, mids)
        y4 = y + h * k3
        seg4 = np.vstack([X[n + 1 - M : n + 1], y4])
        k4 = rhs(tn + h, y4, X[n + 1 - M], seg4)
        X[n + 1] = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(X[n + 1])) or np.abs(X[n + 1]).max() > blowup:
            diverged = True
            last_ok = n
            break

    X = X[: last_ok + 1]
    t = t[: last_ok + 1]
    W = np.array([wfun(s) for s in t])
    Z = np.full((t.size, cl.m), np.nan)
    for n in range(M, t.size):
        seg = X[n - M : n + 1]
        Z[n] = cl.C1 @ X[n] + cl.C2 @ X[n - M] + np.einsum("kij,kj->i", WC, seg) + cl.D3 @ W[n]
    return Trajectory(t, X, Z, W, h, r, diverged)


def distributed_state(traj: Trajectory, F) -> np.ndarray:
    """eta(t) = int F(tau) chi(t+tau) dtau at every node with a full segment (t >= 0)."""
    M = traj.M
    taus = -traj.r + traj.h * np.arange(M + 1)
    WF = simpson_weights(M, traj.h)[:, None, None] * F(taus)
    out = []
    for n in range(M, traj.t.size):
        out.append(np.einsum("kij,kj->i", WF, traj.chi[n - M : n + 1]))
    return np.array(out)
