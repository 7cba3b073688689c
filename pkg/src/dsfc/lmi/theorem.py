"""Dissipativity matrix inequalities for the delayed closed loop.

Krasovskii functional

    v = [chi; eta]^T [[P, Q], [Q^T, R]] [chi; eta] + int chi^T(t+tau) (S + (tau + r) U) chi(t+tau) dtau

with eta = int F(tau) chi(t + tau) dtau.  Positivity and the dissipation
inequality v' - s(z, w) <= 0 become

    [[P, Q], [Q^T, R + I_d kron S]] > 0,   S > 0,   U > 0,
    Phi + Sy(bbP^T (bbA + bbB bbK)) < 0,

where bbP = [P, 0, Q, 0, 0] and Phi collects the functional and supply terms in the
augmented coordinate xi = (chi, chi(t-r), eta, w, zeta).  The product bbP^T bbB bbK
is bilinear; it is either frozen on one side (fixed gain or fixed P, Q) or
replaced by a convex overestimate that is exact at an anchor point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constants import TOL
from ..errors import DimensionError, UsageError
from ..model import AugmentedSystem, ControllerGains, SupplyRate
from .expr import FULL, SCALAR, SYMMETRIC, Expr, Sy, as_expr, bmat, blkdiag, kron_const, trace, zeros
from .problem import LmiProblem


def strict_margin(aug: AugmentedSystem, supply: SupplyRate) -> float:
    """Margin realizing strict inequalities: 1e-7 (1 + largest plant/supply entry scale)."""
    consts = [aug.bbA, aug.Sigma, supply.J1, supply.Jtilde, supply.J2, supply.J3]
    scale = max(float(np.abs(c).sum(axis=1).max(initial=0.0)) for c in consts)
    return TOL.strict_margin_rel * (1.0 + scale)


@dataclass
class CertVars:
    P: Expr
    Q: Expr
    R: Expr
    S: Expr
    U: Expr


def register_certificate(prob: LmiProblem, aug: AugmentedSystem, fixed_PQ=None) -> CertVars:
    nu, dnu = aug.nu, aug.layout.d * aug.nu
    if fixed_PQ is None:
        P = as_expr(prob.var("P", SYMMETRIC, (nu, nu)))
        Q = as_expr(prob.var("Q", FULL, (nu, dnu)))
    else:
        P, Q = (as_expr(np.asarray(a, dtype=float)) for a in fixed_PQ)
        if P.shape != (nu, nu) or Q.shape != (nu, dnu):
            raise DimensionError("fixed P, Q have wrong shapes")
    R = as_expr(prob.var("R", SYMMETRIC, (dnu, dnu)))
    S = as_expr(prob.var("S", SYMMETRIC, (nu, nu)))
    U = as_expr(prob.var("U", SYMMETRIC, (nu, nu)))
    return CertVars(P, Q, R, S, U)


def register_gamma(prob: LmiProblem, supply: SupplyRate):
    if not supply.gamma_role:
        return None
    g = prob.var("gamma", SCALAR)
    prob.add_psd(g, "gamma_floor", margin=TOL.gamma_floor)
    return as_expr(g)


def assemble_positivity(prob: LmiProblem, cv: CertVars, d: int) -> None:
    prob.add_psd(bmat([[cv.P, cv.Q], [cv.Q.T, cv.R + kron_const(np.eye(d), cv.S)]]), "positivity")
    prob.add_psd(cv.S, "S_pos")
    prob.add_psd(cv.U, "U_pos")


def _supply_blocks(supply: SupplyRate, gamma, literal: bool):
    if supply.gamma_role:
        if gamma is None:
            raise UsageError("supply rate needs gamma")
        if literal:
            raise UsageError("the literal layout uses J1^{-1}, which is not affine in gamma")
        J1 = kron_const(supply.J1, gamma)
        J3 = kron_const(supply.J3, gamma)
    else:
        J1, J3 = as_expr(supply.J1), as_expr(supply.J3)
    return J1, supply.Jtilde, supply.J2, J3


def assemble_phi(aug: AugmentedSystem, supply: SupplyRate, cv: CertVars, gamma=None, literal: bool = False) -> Expr:
    """Phi, the part of the dissipation matrix that does not involve the closed-loop map.

    Default layout: diag(S + rU, -S, -I_d kron U, -J3, J1) with coupling -J2^T Sigma
    in the w rows and Jtilde Sigma in the zeta rows, so that the Schur complement in
    zeta returns -Sigma^T Jtilde^T J1^{-1} Jtilde Sigma.  ``literal=True`` uses the
    printed layout instead: diag(..., J3, J1^{-1}), J2^T and I_m.
    """
    lay = aug.layout
    nu, d, q, m = lay.nu, lay.d, lay.q, lay.m
    dnu = d * nu
    if aug.Sigma.shape != (m, 2 * nu + dnu + q):
        raise DimensionError("Sigma does not match the layout")
    J1, Jt, J2, J3 = _supply_blocks(supply, gamma, literal)

    L = bmat([[cv.Q], [zeros(nu, dnu)], [cv.R], [zeros(q, dnu)], [zeros(m, dnu)]])
    Rrow = np.hstack([aug.F0, -aug.Fmr, -aug.PiHat, np.zeros((dnu, q)), np.zeros((dnu, m))])
    functional = Sy(L @ Rrow)

    SrU = cv.S + aug.r * cv.U
    if literal:
        diag = blkdiag(SrU, -cv.S, -kron_const(np.eye(d), cv.U), J3, np.linalg.inv(supply.J1))
        Mcol = np.vstack([np.zeros((2 * nu + dnu, m)), J2.T, np.eye(m)])
    else:
        diag = blkdiag(SrU, -cv.S, -kron_const(np.eye(d), cv.U), -J3, J1)
        Mcol = np.vstack([np.zeros((2 * nu + dnu, m)), -J2.T, Jt])
    supply_cross = Sy(Mcol @ np.hstack([aug.Sigma, np.zeros((m, m))]))
    return functional + diag + supply_cross


def bbP_expr(aug: AugmentedSystem, P, Q) -> Expr:
    nu, q, m = aug.nu, aug.layout.q, aug.layout.m
    return bmat([[P, zeros(nu, nu), Q, zeros(nu, q), zeros(nu, m)]])


def _bbK_expr(aug: AugmentedSystem, K) -> Expr:
    lay = aug.layout
    return bmat([[K, zeros(aug.p, lay.q + lay.m)]])


@dataclass
class Theorem9:
    problem: LmiProblem
    cert: CertVars
    gamma: Expr | None
    K: Expr | None
    mode: str


def assemble_theorem9(aug: AugmentedSystem, supply: SupplyRate, fixed_gains=None, fixed_PQ=None,
                      literal: bool = False) -> Theorem9:
    """Positivity plus Phi + Sy(bbP^T bbA) + Sy(bbP^T bbB bbK) <= -eps I with one factor frozen."""
    if (fixed_gains is None) == (fixed_PQ is None):
        raise UsageError("fix exactly one of the gains or (P, Q)")
    prob = LmiProblem(eps_strict=strict_margin(aug, supply))
    nu, dnu = aug.nu, aug.layout.d * aug.nu
    cv = register_certificate(prob, aug, fixed_PQ=fixed_PQ)
    if fixed_gains is not None:
        Kbar = fixed_gains.stacked() if isinstance(fixed_gains, ControllerGains) else np.asarray(fixed_gains, float)
        if Kbar.shape != (aug.p, 2 * nu + dnu):
            raise DimensionError(f"gains must be {aug.p}x{2 * nu + dnu}")
        K = as_expr(Kbar)
        mode = "fixed-gain"
    else:
        K = as_expr(prob.var("K", FULL, (aug.p, 2 * nu + dnu)))
        mode = "fixed-PQ"
    gamma = register_gamma(prob, supply)
    assemble_positivity(prob, cv, aug.layout.d)
    bbP = bbP_expr(aug, cv.P, cv.Q)
    closed = bbP.T @ aug.bbA + bbP.T @ (aug.bbB @ _bbK_expr(aug, K))
    prob.add_nsd(assemble_phi(aug, supply, cv, gamma, literal) + Sy(closed), "dissipation")
    if gamma is not None:
        prob.minimize(gamma)
    return Theorem9(prob, cv, gamma, K if mode == "fixed-PQ" else None, mode)


@dataclass
class Overestimate:
    problem: LmiProblem
    cert: CertVars
    gamma: Expr | None
    K: Expr
    Z: Expr


def assemble_overestimate(aug: AugmentedSystem, supply: SupplyRate, P_anchor, Q_anchor, K_anchor,
                          literal: bool = False) -> Overestimate:
    """Convex restriction of the bilinear inequality around an anchor (P~, Q~, K~).

    Sy(bbP^T N) <= Sy(bbP~^T N + bbP^T N~ - bbP~^T N~)
                   + (bbP - bbP~)^T Z^{-1} (bbP - bbP~) + (N - N~)^T (I - Z)^{-1} (N - N~)

    for 0 < Z < I, with N = bbB bbK; the Schur complement of the two quadratic
    terms gives one linear matrix inequality.
    """
    nu, dnu, p = aug.nu, aug.layout.d * aug.nu, aug.p
    P_anchor = np.asarray(P_anchor, dtype=float)
    Q_anchor = np.asarray(Q_anchor, dtype=float)
    Kt = K_anchor.stacked() if isinstance(K_anchor, ControllerGains) else np.asarray(K_anchor, dtype=float)
    if P_anchor.shape != (nu, nu) or Q_anchor.shape != (nu, dnu) or Kt.shape != (p, 2 * nu + dnu):
        raise DimensionError("anchor shapes do not match the plant/basis")
    prob = LmiProblem(eps_strict=strict_margin(aug, supply))
    cv = register_certificate(prob, aug)
    K = as_expr(prob.var("K", FULL, (p, 2 * nu + dnu)))
    gamma = register_gamma(prob, supply)
    Z = as_expr(prob.var("Z", SYMMETRIC, (nu, nu)))
    assemble_positivity(prob, cv, aug.layout.d)

    bbP = bbP_expr(aug, cv.P, cv.Q)
    bbPt = aug.bbP(P_anchor, Q_anchor)
    N = aug.bbB @ _bbK_expr(aug, K)
    Nt = aug.bbB @ aug.bbK(Kt)
    top = (
        assemble_phi(aug, supply, cv, gamma, literal)
        + Sy(bbP.T @ aug.bbA)
        + Sy(bbPt.T @ N + bbP.T @ Nt - bbPt.T @ Nt)
    )
    dP = bbP - bbPt
    dN = N - Nt
    block = bmat([[top, dP.T, dN.T], [dP, -Z, None], [dN, None, -(np.eye(nu) - Z)]])
    prob.add_nsd(block, "overestimate")
    prob.add_psd(Z, "Z_pos")
    prob.add_psd(np.eye(nu) - Z, "Z_below_I")
    if gamma is not None:
        prob.minimize(gamma)
    return Overestimate(prob, cv, gamma, K, Z)


def proximal_epigraph(prob: LmiProblem, Lam: Expr, Lam_anchor, K: Expr, K_anchor, rho1: float, rho2: float) -> Expr:
    """Epigraph slacks T1 >= (Lam - Lam~)(Lam - Lam~)^T, T2 likewise for K; returns rho1 tr T1 + rho2 tr T2."""
    if not (rho1 > 0 and rho2 > 0):
        raise UsageError("proximal weights must be positive")
    out = []
    for name, X, Xt, rho in (("T1", Lam, Lam_anchor, rho1), ("T2", K, K_anchor, rho2)):
        X = as_expr(X)
        rows, cols = X.shape
        T = as_expr(prob.var(name, SYMMETRIC, (rows, rows)))
        D = X - np.asarray(Xt, dtype=float)
        prob.add_psd(bmat([[T, D], [D.T, np.eye(cols)]]), f"{name}_epigraph", margin=0.0)
        out.append(rho * trace(T))
    return out[0] + out[1]


def dissipation_matrix(aug: AugmentedSystem, supply: SupplyRate, P, Q, R, S, U, gains, gamma=None) -> np.ndarray:
    """Numeric Phi + Sy(bbP^T (bbA + bbB bbK)), filled block by block without the expression layer."""
    lay = aug.layout
    nu, d, m = lay.nu, lay.d, lay.m
    ell = lay.ell
    J1, Jt, J2, J3 = supply.at(gamma)
    Kfull = aug.bbK(gains)
    bbP = aug.bbP(P, Q)
    out = np.zeros((ell, ell))
    # v' from the quadratic part
    out += bbP.T @ (aug.bbA + aug.bbB @ Kfull)
    etadot = np.zeros((d * nu, ell))
    etadot[:, lay.chi] = aug.F0
    etadot[:, lay.chi_r] = -aug.Fmr
    etadot[:, lay.eta] = -aug.PiHat
    left = np.zeros((ell, d * nu))
    left[lay.chi] = Q
    left[lay.eta] = R
    out += left @ etadot
    out = out + out.T
    # v' from the integral part, with the Bessel bound on the U term
    out[lay.chi, lay.chi] += S + aug.r * U
    out[lay.chi_r, lay.chi_r] -= S
    out[lay.eta, lay.eta] -= np.kron(np.eye(d), U)
    # -s(z, w); the z-quadratic term sits behind the zeta Schur complement
    out[lay.w, lay.w] -= J3
    sig = np.zeros((m, ell))
    sig[:, : aug.Sigma.shape[1]] = aug.Sigma
    cross = np.zeros((ell, ell))
    cross[lay.w] = -J2.T @ sig
    cross[lay.zeta] = Jt @ sig
    out += cross + cross.T
    out[lay.zeta, lay.zeta] += J1
    return out


def positivity_matrix(P, Q, R, S, d: int) -> np.ndarray:
    return np.block([[P, Q], [Q.T, R + np.kron(np.eye(d), S)]])
