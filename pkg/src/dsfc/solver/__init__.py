"""Backend-neutral SDP solve: StandardSdp in, SdpSolution out.

Backends: ``reference`` (the dense interior-point method shipped here) and
``cvxopt``.  The default is read from the ``DSFC_SOLVER`` environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..constants import TOL
from ..errors import UsageError
from ..lmi.problem import StandardSdp

STATUSES = ("optimal", "infeasible", "unbounded", "numerical-failure", "iteration-limit")


@dataclass
class SdpSolution:
    status: str
    x: np.ndarray | None
    values: dict = field(default_factory=dict)
    objective: float = float("nan")
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def residual_floor(sdp: StandardSdp, x) -> list[float]:
    """Smallest eigenvalue of every constraint block at x, recomputed from the data."""
    return [float(np.linalg.eigvalsh(S).min()) for S in sdp.slacks(x)]


def default_backend() -> str:
    return os.environ.get("DSFC_SOLVER", "reference")


def _validate(sdp: StandardSdp) -> None:
    if sdp.c.ndim != 1:
        raise UsageError("objective vector must be 1-D")
    for b in sdp.blocks:
        L = b.size * (b.size + 1) // 2
        if b.G.shape != (L, sdp.nvars) or b.h.shape != (L,):
            raise UsageError(f"block {b.name!r} has malformed data")
        if not (np.all(np.isfinite(b.G)) and np.all(np.isfinite(b.h))):
            raise UsageError(f"block {b.name!r} has non-finite data")


def solve(sdp: StandardSdp, feastol: float = TOL.solver_feas, gaptol: float = TOL.solver_gap,
          iter_cap: int = TOL.solver_iter_cap, backend: str | None = None) -> SdpSolution:
    _validate(sdp)
    backend = backend or default_backend()
    if backend == "reference":
        from .ipm import solve_hsde

        status, x, stats = solve_hsde(sdp, feastol, gaptol, iter_cap)
    elif backend == "cvxopt":
        from .cvxopt_backend import solve_cvxopt

        status, x, stats = solve_cvxopt(sdp, feastol, gaptol, iter_cap)
    else:
        raise UsageError(f"unknown solver backend {backend!r}")
    stats["backend"] = backend
    sol = SdpSolution(status, x, stats=stats)
    if x is not None and status == "optimal":
        floors = residual_floor(sdp, x)
        scale = max([1.0] + [float(np.abs(b.h).max(initial=0.0)) for b in sdp.blocks])
        stats["eig_floor"] = min(floors, default=0.0)
        if stats["eig_floor"] < -TOL.residual_check_factor * feastol * scale:
            sol.status = "numerical-failure"
            stats["reason"] = "independent residual check failed"
        sol.values = sdp.unpack(x)
        sol.objective = float(sdp.c @ x + sdp.c0)
    return sol
