"""Dense primal-dual interior-point method for small standard-form SDPs.

Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector, so infeasibility and unboundedness come out as
certificates instead of stalls.  Intended for blocks up to a few dozen rows.

Embedding (x free, S, Z PSD, tau, kappa >= 0)::

    G^T Z + c tau        = 0
    S + G x - H tau      = 0
    kappa + c^T x + <H, Z> = 0
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from ..lmi.problem import StandardSdp, smat


class _Block:
    __slots__ = ("n", "idx", "G", "H")

    def __init__(self, n, idx, G, H):
        self.n = n
        self.idx = idx  # variables with non-zero coefficients in this block
        self.G = G  # (len(idx), n, n)
        self.H = H


def _prepare(sdp: StandardSdp) -> list[_Block]:
    out = []
    for b in sdp.blocks:
        idx = np.flatnonzero(np.any(b.G != 0.0, axis=0))
        Gm = np.array([smat(b.G[:, j]) for j in idx]).reshape(len(idx), b.size, b.size)
        out.append(_Block(b.size, idx, Gm, smat(b.h)))
    return out


def _apply_G(blocks, x):
    return [np.einsum("k,kij->ij", x[b.idx], b.G) for b in blocks]


def _apply_Gt(blocks, Zs, m):
    out = np.zeros(m)
    for b, Z in zip(blocks, Zs):
        out[b.idx] += np.einsum("kij,ij->k", b.G, Z)
    return out


def _inner(As, Bs) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(As, Bs)))


def _sym(M):
    return 0.5 * (M + M.T)


def _max_step_scaled(scal, dMs) -> float:
    """Largest alpha with diag(lam) + alpha dM PSD for every (scaled) block."""
    amax = np.inf
    for sc, dM in zip(scal, dMs):
        r = 1.0 / np.sqrt(sc.lam)
        low = np.linalg.eigvalsh(r[:, None] * dM * r[None, :]).min()
        if low < 0:
            amax = min(amax, -1.0 / low)
    return amax


class _Scaling:
    """NT scaling of one block: R^T Z R = diag(lam) = R^{-1} S R^{-T}."""

    def __init__(self, S, Z):
        Ls = np.linalg.cholesky(S)
        Lz = np.linalg.cholesky(Z)
        U, lam, Vt = np.linalg.svd(Lz.T @ Ls)
        rs = 1.0 / np.sqrt(lam)
        self.lam = lam
        self.R = (Ls @ Vt.T) * rs
        self.Rinv = (U.T @ Lz.T) * rs[:, None]
        self.W = self.R @ self.R.T  # W Z W = S
        self.Winv = self.Rinv.T @ self.Rinv

    def solve_jordan(self, D):
        """U with (diag(lam) U + U diag(lam)) / 2 = D."""
        return 2.0 * D / (self.lam[:, None] + self.lam[None, :])


def _tril_weights(n):
    i, j = np.tril_indices(n)
    return i, j, np.where(i == j, 1.0, np.sqrt(2.0))


class _Normal:
    """Normal equations M = A^T A held through a QR factor of A, never formed explicitly.

    Row block b of A is svec(Rinv_b G_i Rinv_b^T) over the variables i touching b, so
    that (A^T A)_ij = sum_b tr(G_i W_b^{-1} G_j W_b^{-1}).
    """

    def __init__(self, blocks, scal, m):
        rows = []
        self.blocks = blocks
        self.Gh = []
        for b, sc in zip(blocks, scal):
            Gh = sc.Rinv @ b.G @ sc.Rinv.T
            self.Gh.append(Gh)
            if len(b.idx) == 0:
                continue
            i, j, wt = _tril_weights(b.n)
            blk = np.zeros((len(i), m))
            blk[:, b.idx] = (Gh[:, i, j] * wt).T
            rows.append(blk)
        A = np.vstack(rows) if rows else np.zeros((0, m))
        self.A = A
        R = np.linalg.qr(A, mode="r")
        d = np.abs(np.diag(R))
        floor = 1e-13 * max(d.max(initial=0.0), 1.0)
        if np.any(d <= floor):
            # rank-deficient direction: pin it with a tiny Tikhonov row block
            R = np.linalg.qr(np.vstack([A, floor * np.eye(m)]), mode="r")
        self.R = R

    def G(self, x):
        """Scaled operator x -> [Rinv_b (sum_i x_i G_i) Rinv_b^T]_b."""
        return [np.einsum("k,kij->ij", x[b.idx], Gh) for b, Gh in zip(self.blocks, self.Gh)]

    def Gt(self, Ys):
        out = np.zeros(self.A.shape[1])
        for b, Gh, Y in zip(self.blocks, self.Gh, Ys):
            out[b.idx] += np.einsum("kij,ij->k", Gh, Y)
        return out

    def matvec(self, x):
        return self.A.T @ (self.A @ x)

    def solve(self, rhs, sweeps=2):
        def raw(v):
            y = sla.solve_triangular(self.R, v, trans="T")
            return sla.solve_triangular(self.R, y)

        x = raw(rhs)
        for _ in range(sweeps):
            x = x + raw(rhs - self.matvec(x))
        return x


# accept a stalled run whose best iterate met the tolerances up to this factor
_LOOSE = 100.0


def solve_hsde(sdp: StandardSdp, feastol: float = 1e-8, gaptol: float = 1e-8, max_iter: int = 100):
    """Solve ``sdp``; returns (status, x, info dict)."""
    blocks = _prepare(sdp)
    m = sdp.nvars
    c = sdp.c.astype(float)
    Hs = [b.H for b in blocks]
    hnorm = max(1.0, np.sqrt(_inner(Hs, Hs)))
    cnorm = max(1.0, np.linalg.norm(c))
    degree = sum(b.n for b in blocks) + 1

    x = np.zeros(m)
    Ss = [np.eye(b.n) for b in blocks]
    Zs = [np.eye(b.n) for b in blocks]
    tau = kappa = 1.0
    info = {"iterations": 0}
    status = "iteration-limit"
    best = None
    # the most accurate iterate within a loosened tolerance, used if progress stalls
    fallback, fallback_err, fallback_info = None, np.inf, None

    for it in range(max_iter + 1):
        Gx = _apply_G(blocks, x)
        GtZ = _apply_Gt(blocks, Zs, m)
        hz = _inner(Hs, Zs)
        cx = float(c @ x)
        rx = GtZ + c * tau
        rz = [S + g - H * tau for S, g, H in zip(Ss, Gx, Hs)]
        rt = kappa + cx + hz
        mu = (_inner(Ss, Zs) + tau * kappa) / degree

        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            # tau -> 0 on infeasible problems; the residuals are then meaningless, not errors
            pres = np.sqrt(_inner(rz, rz)) / tau / hnorm
            dres = np.linalg.norm(rx) / tau / cnorm
            pcost, dcost = cx / tau, -hz / tau
            gap = _inner(Ss, Zs) / tau**2
            relgap = gap / max(1.0, min(abs(pcost), abs(dcost)))
        info.update(iterations=it, pres=pres, dres=dres, gap=gap, pcost=pcost, dcost=dcost, tau=tau, kappa=kappa)
        if pres <= feastol and dres <= feastol and (relgap <= gaptol or gap <= gaptol):
            status = "optimal"
            best = x / tau
            break
        err = max(pres / feastol, dres / feastol, min(relgap, gap) / gaptol)
        if err <= _LOOSE and err < fallback_err:
            fallback, fallback_err, fallback_info = x / tau, err, dict(info)
        # infeasibility certificates (checked on the unnormalized iterates)
        if hz < 0 and np.linalg.norm(GtZ) / cnorm <= feastol * (-hz):
            status = "infeasible"
            break
        if cx < 0:
            GxS = [g + S for g, S in zip(Gx, Ss)]
            if np.sqrt(_inner(GxS, GxS)) / hnorm <= feastol * (-cx):
                status = "unbounded"
                break
        if it == max_iter:
            break

        try:
            scal = [_Scaling(S, Z) for S, Z in zip(Ss, Zs)]
            normal = _Normal(blocks, scal, m)
            # everything below lives in NT-scaled coordinates, where W = I
            Hh = [sc.Rinv @ H @ sc.Rinv.T for sc, H in zip(scal, Hs)]
            rzh = [sc.Rinv @ r @ sc.Rinv.T for sc, r in zip(scal, rz)]
            dx2 = normal.solve(-c + normal.Gt(Hh))
            dZ2 = [g - h for g, h in zip(normal.G(dx2), Hh)]
            denom_base = c @ dx2 + _inner(Hh, dZ2)

            def direction(eta, Ds, dk):
                inner = [eta * r + sc.solve_jordan(D) for sc, r, D in zip(scal, rzh, Ds)]
                dx1 = normal.solve(-eta * rx - normal.Gt(inner))
                dZ1 = [g + a for g, a in zip(normal.G(dx1), inner)]
                dtau = (-eta * rt - dk / tau - c @ dx1 - _inner(Hh, dZ1)) / (denom_base - kappa / tau)
                dxx = dx1 + dtau * dx2
                dZ = [_sym(a + dtau * b) for a, b in zip(dZ1, dZ2)]
                dS = [_sym(-eta * r - g + H * dtau) for r, g, H in zip(rzh, normal.G(dxx), Hh)]
                dkap = (dk - kappa * dtau) / tau
                return dxx, dS, dZ, dtau, dkap, eta

            def step_to_boundary(dS, dZ, dtau, dkap):
                a = min(_max_step_scaled(scal, dS), _max_step_scaled(scal, dZ))
                if dtau < 0:
                    a = min(a, -tau / dtau)
                if dkap < 0:
                    a = min(a, -kappa / dkap)
                return a

            # predictor
            Da = [-np.diag(sc.lam**2) for sc in scal]
            dxa, dSa, dZa, dta, dka, _ = direction(1.0, Da, -tau * kappa)
            alpha_a = min(1.0, step_to_boundary(dSa, dZa, dta, dka))
            sigma = (1.0 - alpha_a) ** 3
            # corrector
            Dc = [
                -np.diag(sc.lam**2) - 0.5 * (s_ @ z_ + z_ @ s_) + sigma * mu * np.eye(len(sc.lam))
                for sc, s_, z_ in zip(scal, dSa, dZa)
            ]
            dx, dSh, dZh, dt, dk, eta = direction(1.0 - sigma, Dc, -tau * kappa - dta * dka + sigma * mu)
            alpha = min(1.0, 0.99 * step_to_boundary(dSh, dZh, dt, dk))
            # the primal update is formed unscaled so that the residual contracts exactly
            dS = [_sym(-eta * r - g + H * dt) for r, g, H in zip(rz, _apply_G(blocks, dx), Hs)]
            dZ = [sc.Rinv.T @ d @ sc.Rinv for sc, d in zip(scal, dZh)]
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break
        if not np.isfinite(alpha) or alpha < 1e-12:
            status = "numerical-failure"
            break

        x = x + alpha * dx
        Ss = [_sym(S + alpha * d) for S, d in zip(Ss, dS)]
        Zs = [_sym(Z + alpha * d) for Z, d in zip(Zs, dZ)]
        tau += alpha * dt
        kappa += alpha * dk

    if status in ("numerical-failure", "iteration-limit") and fallback is not None:
        status, best = "optimal", fallback
        info.update(fallback_info, inaccurate=True)
    if best is None:
        best = x / tau if tau > 0 else x
    info["x_last"] = best
    return status, best, info
