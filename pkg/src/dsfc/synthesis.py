"""Inner convex approximation for the bilinear dissipativity inequality.

Workflow: predictor seed -> fixed-gain solve (certificate) -> fixed-(P, Q) solve
(gains) -> proximal iterations on the convex overestimate around the last
accepted iterate.  Every accepted iterate is checked against the original
bilinear inequality without going through the overestimate.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, GramData, build_gram
from .constants import TOL
from .errors import ConfigurationError, InfeasibleError
from .lmi.expr import bmat
from .lmi.theorem import (
    assemble_overestimate,
    assemble_theorem9,
    dissipation_matrix,
    positivity_matrix,
    proximal_epigraph,
    strict_margin,
)
from .model import AugmentedSystem, ControllerGains, PlantModel, SupplyRate, build_augmented, validate_plant
from .predictor import PredictorSeed, predictor_init
from .solver import SdpSolution, solve

log = logging.getLogger(__name__)

CERT_NAMES = ("P", "Q", "R", "S", "U")


@dataclass
class AlgorithmConfig:
    rho1: float = TOL.rho1
    rho2: float = TOL.rho2
    eps: float = TOL.eps
    max_iter: int = TOL.max_iter
    X: np.ndarray | None = None
    K: np.ndarray | None = None
    r: float | None = None
    proximal_only: bool = False  # literal loop objective, without gamma
    literal_phi: bool = False
    backend: str | None = None
    feastol: float = TOL.solver_feas
    gaptol: float = TOL.solver_gap
    iter_cap: int = TOL.solver_iter_cap
    max_rejections: int = TOL.max_rejections

    def __post_init__(self):
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ConfigurationError("rho1 and rho2 must be positive")
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if self.max_iter < 0:
            raise ConfigurationError("max_iter must be non-negative")


@dataclass
class Problem:
    """Plant, basis and supply rate with the derived Gram data and augmented system."""

    plant: PlantModel
    spec: BasisSpec
    supply: SupplyRate
    gram: GramData
    aug: AugmentedSystem

    @property
    def eps_strict(self) -> float:
        return strict_margin(self.aug, self.supply)


def prepare(plant: PlantModel, spec: BasisSpec, supply: SupplyRate, r: float | None = None) -> Problem:
    if r is not None:
        from dataclasses import replace

        plant = replace(plant, r=float(r))
        spec = BasisSpec(spec.Pi, spec.f0, float(r))
    validate_plant(plant, spec).raise_if_fatal()
    if supply.m != plant.m or supply.q != plant.q:
        raise ConfigurationError(f"supply rate is for m={supply.m}, q={supply.q}; plant has m={plant.m}, q={plant.q}")
    g = build_gram(spec, plant.nu)
    return Problem(plant, spec, supply, g, build_augmented(plant, g, spec))


@dataclass
class TraceRow:
    iteration: int
    gamma: float
    status: str
    rel_change: float
    accepted: bool
    bmi_max_eig: float


@dataclass
class AlgorithmState:
    P_anchor: np.ndarray
    Q_anchor: np.ndarray
    K_anchor: np.ndarray
    cert: dict
    gains: ControllerGains
    gamma: float | None
    iteration: int = 0
    gamma_history: list = field(default_factory=list)
    rejections: int = 0
    last_rel_change: float = math.inf


@dataclass
class SynthesisResult:
    gains: ControllerGains
    certificate: dict
    gamma_final: float | None
    gamma0: float | None
    gamma1: float | None
    trace: list
    stop_reason: str
    seed: PredictorSeed | None = None
    recheck_status: str = ""
    recheck_gamma: float | None = None

    def write_trace(self, path) -> None:
        write_trace_csv(self.trace, path)


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "gamma", "status", "relative_change", "accepted", "bmi_max_eig"])
        for t in trace:
            w.writerow([t.iteration, repr(t.gamma), t.status, repr(t.rel_change), int(t.accepted), repr(t.bmi_max_eig)])


def _solve(prob, cfg: AlgorithmConfig) -> SdpSolution:
    return solve(prob.compile(), feastol=cfg.feastol, gaptol=cfg.gaptol, iter_cap=cfg.iter_cap, backend=cfg.backend)


def bmi_max_eig(problem: Problem, cert: dict, gains, gamma) -> float:
    """Largest eigenvalue of the bilinear dissipation matrix at a concrete point."""
    M = dissipation_matrix(problem.aug, problem.supply, *(cert[k] for k in CERT_NAMES), gains, gamma)
    return float(np.linalg.eigvalsh(M).max())


def positivity_min_eig(problem: Problem, cert: dict) -> float:
    M = positivity_matrix(cert["P"], cert["Q"], cert["R"], cert["S"], problem.spec.d)
    return float(min(np.linalg.eigvalsh(M).min(), np.linalg.eigvalsh(cert["S"]).min(), np.linalg.eigvalsh(cert["U"]).min()))


def initialize(problem: Problem, cfg: AlgorithmConfig, seed: PredictorSeed | None = None):
    """Seed gains -> certificate (min gamma) -> gains for that certificate (min gamma)."""
    if seed is None:
        seed = predictor_init(problem.plant, problem.spec, problem.gram, K=cfg.K, X=cfg.X)
    th = assemble_theorem9(problem.aug, problem.supply, fixed_gains=seed.gains, literal=cfg.literal_phi)
    sol = _solve(th.problem, cfg)
    if not sol.ok:
        raise InfeasibleError(
            f"the predictor seed admits no certificate (solver status {sol.status}); "
            "try enlarging the basis, reducing the delay, or relaxing the supply rate"
        )
    gamma0 = sol.values.get("gamma")
    P, Q = sol.values["P"], sol.values["Q"]
    log.info("fixed-gain step: gamma0=%s", gamma0)

    th2 = assemble_theorem9(problem.aug, problem.supply, fixed_PQ=(P, Q), literal=cfg.literal_phi)
    sol2 = _solve(th2.problem, cfg)
    if sol2.ok:
        gains = ControllerGains.from_stacked(sol2.values["K"], problem.plant.nu)
        cert = {"P": P, "Q": Q, "R": sol2.values["R"], "S": sol2.values["S"], "U": sol2.values["U"]}
        gamma1 = sol2.values.get("gamma")
    else:
        # the step-1 point stays feasible; keep it rather than abort
        log.warning("fixed-(P,Q) step returned %s; keeping the seed gains", sol2.status)
        gains = seed.gains
        cert = {k: sol.values[k] for k in CERT_NAMES}
        gamma1 = gamma0
    log.info("fixed-PQ step: gamma1=%s", gamma1)
    state = AlgorithmState(P, Q, gains.stacked(), cert, gains, gamma1, gamma_history=[gamma0, gamma1])
    return state, seed, gamma0, gamma1


def relative_change(Lam, K, Lam_anchor, K_anchor) -> float:
    new = np.concatenate([np.ravel(Lam), np.ravel(K)])
    old = np.concatenate([np.ravel(Lam_anchor), np.ravel(K_anchor)])
    return float(np.abs(new - old).max() / (np.abs(old).max() + 1.0))


def iterate(state: AlgorithmState, problem: Problem, cfg: AlgorithmConfig) -> tuple[AlgorithmState, TraceRow]:
    """One proximal subproblem around the current anchors; anchors move only on success."""
    ov = assemble_overestimate(problem.aug, problem.supply, state.P_anchor, state.Q_anchor, state.K_anchor,
                               literal=cfg.literal_phi)
    Lam = bmat([[ov.cert.P, ov.cert.Q]])
    Lam_anchor = np.hstack([state.P_anchor, state.Q_anchor])
    prox = proximal_epigraph(ov.problem, Lam, Lam_anchor, ov.K, state.K_anchor, cfg.rho1, cfg.rho2)
    if ov.gamma is not None and not cfg.proximal_only:
        ov.problem.minimize(ov.gamma + prox)
    else:
        ov.problem.minimize(prox)
    sol = _solve(ov.problem, cfg)
    it = state.iteration + 1
    if not sol.ok:
        state.iteration = it
        state.rejections += 1
        row = TraceRow(it, float("nan"), sol.status, float("nan"), False, float("nan"))
        return state, row

    v = sol.values
    gains = ControllerGains.from_stacked(v["K"], problem.plant.nu)
    cert = {k: v[k] for k in CERT_NAMES}
    gamma = v.get("gamma")
    rel = relative_change(np.hstack([v["P"], v["Q"]]), v["K"], Lam_anchor, state.K_anchor)
    worst = bmi_max_eig(problem, cert, gains, gamma)
    new = AlgorithmState(
        P_anchor=v["P"],
        Q_anchor=v["Q"],
        K_anchor=v["K"],
        cert=cert,
        gains=gains,
        gamma=gamma,
        iteration=it,
        gamma_history=state.gamma_history + [gamma],
        rejections=0,
        last_rel_change=rel,
    )
    row = TraceRow(it, float("nan") if gamma is None else float(gamma), sol.status, rel, True, worst)
    return new, row


def run(problem: Problem, cfg: AlgorithmConfig, seed: PredictorSeed | None = None, callback=None) -> SynthesisResult:
    state, seed, gamma0, gamma1 = initialize(problem, cfg, seed)
    trace = [
        TraceRow(-1, _f(gamma0), "optimal", float("nan"), True, float("nan")),
        TraceRow(0, _f(gamma1), "optimal", float("nan"), True, bmi_max_eig(problem, state.cert, state.gains, gamma1)),
    ]
    reason = "max-iter"
    while state.iteration < cfg.max_iter:
        state, row = iterate(state, problem, cfg)
        trace.append(row)
        if callback is not None:
            callback(row)
        if not row.accepted:
            if state.rejections >= cfg.max_rejections:
                reason = "aborted"
                break
            continue
        if row.rel_change < cfg.eps:
            reason = "converged"
            break
    res = SynthesisResult(state.gains, state.cert, state.gamma, gamma0, gamma1, trace, reason, seed)
    # post hoc: the final gains alone must admit a certificate
    th = assemble_theorem9(problem.aug, problem.supply, fixed_gains=state.gains, literal=cfg.literal_phi)
    sol = _solve(th.problem, cfg)
    res.recheck_status = sol.status
    res.recheck_gamma = sol.values.get("gamma") if sol.ok else None
    return res


def _f(x) -> float:
    return float("nan") if x is None else float(x)


def synthesize(plant: PlantModel, spec: BasisSpec, supply: SupplyRate, cfg: AlgorithmConfig | None = None) -> SynthesisResult:
    cfg = cfg or AlgorithmConfig()
    return run(prepare(plant, spec, supply, r=cfg.r), cfg)
