"""LMI problem container and compilation to a standard-form SDP.

Standard form used throughout the solver layer::

    minimize    c^T x + c0
    subject to  h_b - G_b x  in  S^{n_b}_+      for every block b

with every symmetric block stored in ``svec`` coordinates: the lower triangle,
column by column, off-diagonal entries scaled by sqrt(2) so that
svec(A) . svec(B) = trace(A B).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NonAffineError, UsageError
from .expr import Expr, VarRef, as_expr

_SQRT2 = np.sqrt(2.0)


def svec(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    i, j = np.tril_indices(n)
    order = np.lexsort((i, j))  # column-major lower triangle
    i, j = i[order], j[order]
    return np.where(i == j, 1.0, _SQRT2) * M[i, j]


def smat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if n * (n + 1) // 2 != v.size:
        raise DimensionError(f"vector of length {v.size} is not an svec")
    i, j = np.tril_indices(n)
    order = np.lexsort((i, j))
    i, j = i[order], j[order]
    vals = np.where(i == j, 1.0, 1.0 / _SQRT2) * v
    M = np.zeros((n, n))
    M[i, j] = vals
    M[j, i] = vals
    return M


def svec_many(E: np.ndarray) -> np.ndarray:
    """svec of a stack (k, n, n) -> (svec_len, k)."""
    n = E.shape[1]
    i, j = np.tril_indices(n)
    order = np.lexsort((i, j))
    i, j = i[order], j[order]
    return (np.where(i == j, 1.0, _SQRT2)[:, None] * E[:, i, j].T).reshape(len(i), E.shape[0])


@dataclass
class Constraint:
    """``expr >= margin*I`` (sense '>') or ``expr <= -margin*I`` (sense '<')."""

    expr: Expr
    sense: str
    margin: float
    name: str


@dataclass
class SdpBlock:
    name: str
    size: int
    G: np.ndarray  # (size(size+1)/2, nvars)
    h: np.ndarray


@dataclass(frozen=True)
class VarSlot:
    name: str
    kind: str
    shape: tuple[int, int]
    offset: int
    size: int


@dataclass
class StandardSdp:
    c: np.ndarray
    blocks: list[SdpBlock]
    manifest: list[VarSlot]
    c0: float = 0.0

    @property
    def nvars(self) -> int:
        return self.c.size

    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    def slacks(self, x) -> list[np.ndarray]:
        """Constraint matrices h_b - G_b x as full symmetric matrices."""
        return [smat(b.h - b.G @ x) for b in self.blocks]

    def unpack(self, x) -> dict[str, np.ndarray]:
        out = {}
        for s in self.manifest:
            v = VarRef(s.name, s.kind, s.shape)
            out[s.name] = v.from_coords(x[s.offset : s.offset + s.size])
            if s.kind == "scalar":
                out[s.name] = float(out[s.name][0, 0])
        return out

    def dump(self, path) -> None:
        """Write a plain-text sparse listing (see README, "problem dump")."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"nvars {self.nvars}\nnblocks {len(self.blocks)}\n")
            fh.write("c " + " ".join(repr(float(v)) for v in self.c) + "\n")
            fh.write(f"c0 {self.c0!r}\n")
            for k, b in enumerate(self.blocks):
                fh.write(f"block {k} {b.name} {b.size}\n")
                for i in np.flatnonzero(b.h):
                    fh.write(f"h {k} {i} {b.h[i]!r}\n")
                rows, cols = np.nonzero(b.G)
                for i, j in zip(rows, cols):
                    fh.write(f"G {k} {i} {j} {b.G[i, j]!r}\n")


@dataclass
class LmiProblem:
    """Variables, matrix inequalities and a scalar affine objective (minimized)."""

    eps_strict: float = 1e-7
    variables: list[VarRef] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: Expr | None = None

    def var(self, name: str, kind: str, shape=(1, 1)) -> VarRef:
        if any(v.name == name for v in self.variables):
            raise UsageError(f"variable {name!r} already registered")
        v = VarRef(name, kind, tuple(shape))
        self.variables.append(v)
        return v

    def get(self, name: str) -> VarRef:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def _check(self, e: Expr) -> None:
        known = set(map(id, self.variables))
        for v in e.variables():
            if id(v) not in known:
                raise UsageError(f"expression uses unregistered variable {v.name!r}")

    def add_psd(self, expr, name: str, margin: float | None = None) -> None:
        """expr >= margin*I; ``margin`` defaults to the strictness margin."""
        self._add(expr, ">", name, margin)

    def add_nsd(self, expr, name: str, margin: float | None = None) -> None:
        """expr <= -margin*I."""
        self._add(expr, "<", name, margin)

    def _add(self, expr, sense: str, name: str, margin: float | None) -> None:
        e = as_expr(expr)
        if e.shape[0] != e.shape[1]:
            raise DimensionError(f"constraint {name!r} is not square: {e.shape}")
        self._check(e)
        self.constraints.append(Constraint(e, sense, self.eps_strict if margin is None else margin, name))

    def minimize(self, expr) -> None:
        e = as_expr(expr)
        if e.shape != (1, 1):
            raise DimensionError("objective must be scalar")
        self._check(e)
        self.objective = e

    def compile(self) -> "StandardSdp":
        return compile_to_standard_form(self)

    def listing(self) -> str:
        lines = [f"LMI problem: {len(self.variables)} variables, {len(self.constraints)} constraints, eps_strict={self.eps_strict:.3e}"]
        off = 0
        for v in self.variables:
            lines.append(f"  var {v.name:<6} {v.kind:<9} {v.shape[0]}x{v.shape[1]}  coords [{off}, {off + v.size})")
            off += v.size
        for c in self.constraints:
            rel = ">= +" if c.sense == ">" else "<= -"
            used = ", ".join(v.name for v in c.expr.variables()) or "-"
            lines.append(f"  {c.name:<12} {c.expr.shape[0]:>3}x{c.expr.shape[1]:<3} {rel}{c.margin:.2e} I   vars: {used}")
        if self.objective is not None:
            used = ", ".join(v.name for v in self.objective.variables())
            lines.append(f"  minimize over {used}")
        return "\n".join(lines)


def _is_symmetric(M: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(M).max())) if M.size else 1.0
    return bool(np.abs(M - np.swapaxes(M, -1, -2)).max(initial=0.0) <= 1e-12 * scale)


def compile_to_standard_form(prob: LmiProblem) -> StandardSdp:
    offsets = {}
    off = 0
    manifest = []
    for v in prob.variables:
        offsets[id(v)] = off
        v.offset = off
        manifest.append(VarSlot(v.name, v.kind, v.shape, off, v.size))
        off += v.size
    nvars = off

    blocks = []
    for c in prob.constraints:
        e = c.expr
        for v in e.variables():
            if id(v) not in offsets:
                raise UsageError(f"constraint {c.name!r} uses unregistered variable {v.name!r}")
        k = e.shape[0]
        if not _is_symmetric(e.const) or not all(_is_symmetric(E) for E in e.terms.values()):
            raise NonAffineError(f"constraint {c.name!r} is not symmetric")
        sign = 1.0 if c.sense == ">" else -1.0
        h = svec(sign * e.const - c.margin * np.eye(k))
        G = np.zeros((k * (k + 1) // 2, nvars))
        for v, E in e.terms.items():
            o = offsets[id(v)]
            G[:, o : o + v.size] = -sign * svec_many(E)
        blocks.append(SdpBlock(c.name, k, G, h))

    cvec = np.zeros(nvars)
    c0 = 0.0
    if prob.objective is not None:
        c0 = float(prob.objective.const[0, 0])
        for v, E in prob.objective.terms.items():
            o = offsets[id(v)]
            cvec[o : o + v.size] += E[:, 0, 0]
    return StandardSdp(cvec, blocks, manifest, c0)
