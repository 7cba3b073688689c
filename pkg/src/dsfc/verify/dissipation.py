from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ..constants import TOL
from ..errors import DomainError
from ..model import SupplyRate
from .closedloop import ClosedLoop
from .simulate import Trajectory, distributed_state, simpson_weights, simulate


def functional_values(traj: Trajectory, cert: dict, F) -> np.ndarray:
    """v(chi_t) at every node t >= 0, by Simpson quadrature over the stored segment."""
    M, h, r = traj.M, traj.h, traj.r
    P, Q, R, S, U = (np.asarray(cert[k], dtype=float) for k in ("P", "Q", "R", "S", "U"))
    eta = distributed_state(traj, F)
    chi = traj.chi[M:]
    quad = (
        np.einsum("ki,ij,kj->k", chi, P, chi)
        + 2.0 * np.einsum("ki,ij,kj->k", chi, Q, eta)
        + np.einsum("ki,ij,kj->k", eta, R, eta)
    )
    taus = -r + h * np.arange(M + 1)
    kern = S[None] + (taus + r)[:, None, None] * U[None]
    sw = simpson_weights(M, h)
    hist = np.empty(chi.shape[0])
    for k, n in enumerate(range(M, traj.t.size)):
        seg = traj.chi[n - M : n + 1]
        hist[k] = sw @ np.einsum("ki,kij,kj->k", seg, kern, seg)
    return quad + hist


@dataclass
class DissipationReport:
    ok: bool
    positive: bool
    worst_time: float
    worst_margin: float  # max of v' - s - tol over interior nodes (<= 0 passes)
    tol: float
    min_v: float
    t: np.ndarray
    v: np.ndarray
    vdot: np.ndarray
    s: np.ndarray


def dissipation_check(traj: Trajectory, cert: dict, supply: SupplyRate, cl: ClosedLoop, gamma=None) -> DissipationReport:
    """Sampled v' - s(z, w) <= tol along a trajectory, plus v >= -1e-8."""
    if traj.t[-1] < 2 * traj.r - 1e-12:
        raise DomainError("trajectory must cover at least 2r")
    if cl.F is None:
        raise DomainError("closed loop carries no basis for the functional")
    v = functional_values(traj, cert, cl.F)
    M = traj.M
    t = traj.t[M:]
    s = supply.evaluate(traj.z[M:], traj.w[M:], gamma)
    vdot = (v[2:] - v[:-2]) / (2.0 * traj.h)
    s_in = s[1:-1]
    tol = TOL.dissipation_rel * (1.0 + float(np.abs(s).max(initial=0.0)))
    excess = vdot - s_in - tol
    k = int(np.argmax(excess))
    min_v = float(v.min())
    positive = min_v >= TOL.positivity_floor
    return DissipationReport(
        ok=bool(excess[k] <= 0.0) and positive,
        positive=positive,
        worst_time=float(t[1 + k]),
        worst_margin=float(excess[k]),
        tol=tol,
        min_v=min_v,
        t=t,
        v=v,
        vdot=vdot,
        s=s,
    )


@dataclass
class GainEstimate:
    gamma_emp: float
    worst_input: str
    ratios: dict
    diverged: bool


def input_library(q: int, horizon: float, seed: int = 0, freqs=None):
    """Step, sine sweep (fixed frequencies and a chirp) and seeded noise inputs."""
    rng = np.random.default_rng(seed)
    direction = np.ones(q) / np.sqrt(q)
    lib = {"step": lambda t, d=direction: d * (t >= 0.0)}
    freqs = np.geomspace(0.05, 10.0, 12) if freqs is None else freqs
    for om in freqs:
        lib[f"sine:{om:.4g}"] = lambda t, om=om, d=direction: d * np.sin(om * t)
    f0, f1 = 0.01, 2.0
    lib["chirp"] = lambda t, d=direction: d * np.sin(2 * np.pi * (f0 * t + 0.5 * (f1 - f0) / horizon * t * t))
    # piecewise-linear noise on a 0.1 s mesh
    knots = np.arange(0.0, horizon + 0.2, 0.1)
    vals = rng.standard_normal((knots.size, q))
    lib[f"noise:{seed}"] = lambda t, k=knots, v=vals: np.array([np.interp(t, k, v[:, i]) for i in range(q)])
    return lib


def l2_gain_estimate(cl: ClosedLoop, horizon: float, step: float | None = None, seed: int = 0,
                     library: dict | None = None) -> GainEstimate:
    """max ||z|| / ||w|| over an input library, zero initial segment."""
    library = input_library(cl.q, horizon, seed) if library is None else library
    ratios = {}
    for name, w in library.items():
        tr = simulate(cl, None, w, horizon, step)
        if tr.diverged:
            return GainEstimate(float("nan"), name, ratios, True)
        M = tr.M
        tt = tr.t[M:]
        zn = trapezoid(np.sum(tr.z[M:] ** 2, axis=1), tt)
        wn = trapezoid(np.sum(tr.w[M:] ** 2, axis=1), tt)
        ratios[name] = float(np.sqrt(zn / wn)) if wn > 0 else 0.0
    worst = max(ratios, key=ratios.get)
    return GainEstimate(ratios[worst], worst, ratios, False)
