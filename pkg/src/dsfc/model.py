"""Plant, supply rate, controller gains and the augmented quadratic-form coordinate.

The augmented coordinate is

    xi = col(chi(t), chi(t - r), eta(t), w(t), zeta)

with chi = col(x, u) of size nu = n + p, eta = int F(tau) chi(t + tau) dtau of size
d nu, and zeta an m-dimensional slack used to embed the output term of the supply
rate by a Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matfun
from .basis import BasisSpec, GramData, eval_F, orthonormalize_coeffs
from .errors import DimensionError, StabilizabilityError, UsageError


def _mat(a, name):
    return matfun.as_matrix(a, name)


@dataclass(frozen=True)
class PlantModel:
    """x' = A x + B u(t-r) + D1 w, z = C1 chi + C2 chi(t-r) + int C3(tau) chi + D3 w.

    ``C3bar`` holds plain-basis coefficients: C3(tau) = C3bar (f(tau) kron I_nu).
    ``D2`` is the disturbance entering the controller dynamics during synthesis.
    """

    A: np.ndarray
    B: np.ndarray
    D1: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    C3bar: np.ndarray
    D2: np.ndarray
    D3: np.ndarray
    r: float

    def __post_init__(self):
        for name in ("A", "B", "D1", "C1", "C2", "C3bar", "D2", "D3"):
            object.__setattr__(self, name, _mat(getattr(self, name), name))
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.D1.shape[1]

    @property
    def m(self) -> int:
        return self.C1.shape[0]

    @property
    def nu(self) -> int:
        return self.n + self.p


@dataclass(frozen=True)
class SupplyRate:
    """s(z, w) = z^T Jt^T J1^{-1} Jt z + 2 z^T J2 w + w^T J3 w.

    With ``gamma_role`` set, ``J1`` and ``J3`` are the coefficients of a decision
    variable gamma: the effective matrices are gamma*J1 and gamma*J3.
    """

    J1: np.ndarray
    Jtilde: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    gamma_role: bool = False

    def __post_init__(self):
        for name in ("J1", "Jtilde", "J2", "J3"):
            object.__setattr__(self, name, _mat(getattr(self, name), name))
        m, q = self.J2.shape
        if self.J1.shape != (m, m) or self.Jtilde.shape != (m, m) or self.J3.shape != (q, q):
            raise DimensionError("supply-rate blocks have inconsistent sizes")
        if m and np.linalg.eigvalsh(matfun.sym(self.J1)).max() >= 0:
            raise DimensionError("J1 must be symmetric negative definite")

    @property
    def m(self) -> int:
        return self.J2.shape[0]

    @property
    def q(self) -> int:
        return self.J2.shape[1]

    def at(self, gamma: float | None = None):
        """Concrete (J1, Jtilde, J2, J3) for a given gamma."""
        if self.gamma_role:
            if gamma is None:
                raise UsageError("this supply rate needs a value of gamma")
            return gamma * self.J1, self.Jtilde, self.J2, gamma * self.J3
        return self.J1, self.Jtilde, self.J2, self.J3

    def evaluate(self, z, w, gamma: float | None = None) -> np.ndarray:
        """Supply rate for sample rows z (k x m) and w (k x q)."""
        J1, Jt, J2, J3 = self.at(gamma)
        z = np.atleast_2d(z)
        w = np.atleast_2d(w)
        Mz = Jt.T @ np.linalg.solve(J1, Jt)
        return (
            np.einsum("ki,ij,kj->k", z, Mz, z)
            + 2.0 * np.einsum("ki,ij,kj->k", z, J2, w)
            + np.einsum("ki,ij,kj->k", w, J3, w)
        )


def supply_from_template(kind: str, m: int, q: int, alpha: float | None = None, beta: float | None = None) -> SupplyRate:
    """Standard supply rates: ``l2gain``, ``passivity`` or ``sector``."""
    if kind == "l2gain":
        return SupplyRate(-np.eye(m), np.eye(m), np.zeros((m, q)), np.eye(q), gamma_role=True)
    if kind == "passivity":
        if m != q:
            raise DimensionError("passivity needs m == q")
        return SupplyRate(-np.eye(m), np.zeros((m, m)), np.eye(m), np.zeros((q, q)))
    if kind == "sector":
        if m != q:
            raise DimensionError(f"sector constraint needs m == q, got m={m}, q={q}")
        if alpha is None or beta is None:
            raise UsageError("sector constraint needs alpha and beta")
        I = np.eye(m)
        return SupplyRate(-I, -I, -0.5 * (alpha + beta) * I, alpha * beta * I)
    raise UsageError(f"unknown supply template {kind!r}")


@dataclass(frozen=True)
class ControllerGains:
    """u' = K1 chi + K2 chi(t-r) + int K3 F(tau) chi(t+tau) dtau (orthonormal basis)."""

    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray

    def __post_init__(self):
        for name in ("K1", "K2", "K3"):
            object.__setattr__(self, name, _mat(getattr(self, name), name))
        p, nu = self.K1.shape
        if self.K2.shape != (p, nu) or self.K3.shape[0] != p or self.K3.shape[1] % nu:
            raise DimensionError("gain blocks have inconsistent sizes")

    def stacked(self) -> np.ndarray:
        return np.hstack([self.K1, self.K2, self.K3])

    @classmethod
    def from_stacked(cls, K, nu: int) -> "ControllerGains":
        K = _mat(K, "K")
        return cls(K[:, :nu], K[:, nu : 2 * nu], K[:, 2 * nu :])


@dataclass(frozen=True)
class Layout:
    nu: int
    d: int
    q: int
    m: int

    @property
    def ell(self) -> int:
        return 2 * self.nu + self.d * self.nu + self.q + self.m

    @property
    def chi(self) -> slice:
        return slice(0, self.nu)

    @property
    def chi_r(self) -> slice:
        return slice(self.nu, 2 * self.nu)

    @property
    def eta(self) -> slice:
        return slice(2 * self.nu, (2 + self.d) * self.nu)

    @property
    def w(self) -> slice:
        s = (2 + self.d) * self.nu
        return slice(s, s + self.q)

    @property
    def zeta(self) -> slice:
        s = (2 + self.d) * self.nu + self.q
        return slice(s, s + self.m)

    def blocks(self) -> list[tuple[str, slice]]:
        return [("chi", self.chi), ("chi_r", self.chi_r), ("eta", self.eta), ("w", self.w), ("zeta", self.zeta)]


@dataclass(frozen=True)
class AugmentedSystem:
    layout: Layout
    n: int
    p: int
    r: float
    bbA: np.ndarray
    bbB: np.ndarray
    Sigma: np.ndarray
    C3: np.ndarray
    F0: np.ndarray
    Fmr: np.ndarray
    PiHat: np.ndarray

    @property
    def nu(self) -> int:
        return self.layout.nu

    @property
    def ell(self) -> int:
        return self.layout.ell

    def bbK(self, gains) -> np.ndarray:
        """[K1 K2 K3 0] padded to the full layout width."""
        K = gains.stacked() if isinstance(gains, ControllerGains) else _mat(gains, "K")
        out = np.zeros((self.p, self.ell))
        out[:, : K.shape[1]] = K
        return out

    def bbP(self, P, Q) -> np.ndarray:
        lay = self.layout
        out = np.zeros((self.nu, self.ell))
        out[:, lay.chi] = P
        out[:, lay.eta] = Q
        return out


@dataclass
class Diagnostic:
    name: str
    message: str
    fatal: bool = True


@dataclass
class PlantReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.fatal for d in self.diagnostics)

    def add(self, name: str, message: str, fatal: bool = True) -> None:
        self.diagnostics.append(Diagnostic(name, message, fatal))

    def raise_if_fatal(self) -> None:
        bad = [d for d in self.diagnostics if d.fatal]
        if bad:
            text = "; ".join(f"{d.name}: {d.message}" for d in bad)
            if any(d.name == "stabilizability" for d in bad):
                raise StabilizabilityError(text)
            raise DimensionError(text)


def validate_plant(plant: PlantModel, spec: BasisSpec) -> PlantReport:
    rep = PlantReport()
    n, p, q, m, nu = plant.n, plant.p, plant.q, plant.m, plant.nu
    expected = {
        "A": (n, n),
        "B": (n, p),
        "D1": (n, q),
        "C1": (m, nu),
        "C2": (m, nu),
        "C3bar": (m, spec.d * nu),
        "D2": (p, q),
        "D3": (m, q),
    }
    for name, shape in expected.items():
        got = getattr(plant, name).shape
        if got != shape:
            rep.add("dimension", f"{name} has shape {got}, expected {shape}")
    if not plant.r > 0:
        rep.add("delay", f"r must be positive, got {plant.r}")
    if abs(plant.r - spec.r) > 1e-12 * max(1.0, plant.r):
        rep.add("delay", f"plant delay {plant.r} differs from basis interval {spec.r}")
    if plant.A.shape == (n, n) and plant.B.shape[0] == n:
        try:
            matfun.stabilizing_gain(plant.A, plant.B)
        except (StabilizabilityError, np.linalg.LinAlgError, ValueError) as exc:
            rep.add("stabilizability", str(exc))
    return rep


def build_augmented(plant: PlantModel, g: GramData, spec: BasisSpec) -> AugmentedSystem:
    n, p, q, m, nu, d = plant.n, plant.p, plant.q, plant.m, plant.nu, spec.d
    lay = Layout(nu, d, q, m)
    bbA = np.zeros((nu, lay.ell))
    bbA[:n, :n] = plant.A
    bbA[:n, nu + n : 2 * nu] = plant.B
    bbA[:n, lay.w] = plant.D1
    bbA[n:, lay.w] = plant.D2
    bbB = np.vstack([np.zeros((n, p)), np.eye(p)])
    C3 = orthonormalize_coeffs(plant.C3bar, g)
    Sigma = np.hstack([plant.C1, plant.C2, C3, plant.D3])
    return AugmentedSystem(
        layout=lay,
        n=n,
        p=p,
        r=spec.r,
        bbA=bbA,
        bbB=bbB,
        Sigma=Sigma,
        C3=C3,
        F0=eval_F(g, spec, 0.0),
        Fmr=eval_F(g, spec, -spec.r),
        PiHat=g.PiHat,
    )
