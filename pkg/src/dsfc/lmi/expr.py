"""Affine matrix expressions in a small set of matrix decision variables.

An expression is ``const + sum_v sum_k x_{v,k} E_{v,k}`` where ``x_v`` are the scalar
coordinates of variable ``v`` and ``E_{v,k}`` fixed coefficient matrices.  Products
are only allowed against constants, so every expression stays affine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NonAffineError

SYMMETRIC = "symmetric"
FULL = "full"
SCALAR = "scalar"


@dataclass(eq=False)
class VarRef:
    """A matrix decision variable; identity-hashed so it can key coefficient maps."""

    name: str
    kind: str
    shape: tuple[int, int]
    offset: int = field(default=-1, repr=False)

    __array_ufunc__ = None

    def __post_init__(self):
        if self.kind == SCALAR:
            self.shape = (1, 1)
        elif self.kind == SYMMETRIC and self.shape[0] != self.shape[1]:
            raise DimensionError(f"symmetric variable {self.name} must be square")
        elif self.kind not in (SYMMETRIC, FULL):
            raise ValueError(f"unknown variable kind {self.kind!r}")

    @property
    def size(self) -> int:
        r, c = self.shape
        return r * (r + 1) // 2 if self.kind == SYMMETRIC else r * c

    def coordinates(self) -> np.ndarray:
        """Coefficient tensor (size, rows, cols) mapping coordinates to the matrix."""
        r, c = self.shape
        E = np.zeros((self.size, r, c))
        if self.kind == SYMMETRIC:
            k = 0
            for j in range(r):
                for i in range(j, r):
                    E[k, i, j] = 1.0
                    E[k, j, i] = 1.0
                    k += 1
        else:
            E[np.arange(r * c), np.repeat(np.arange(r), c), np.tile(np.arange(c), r)] = 1.0
        return E

    def to_coords(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float).reshape(self.shape)
        if self.kind == SYMMETRIC:
            r = self.shape[0]
            return np.array([M[i, j] for j in range(r) for i in range(j, r)])
        return M.reshape(-1).copy()

    def from_coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("k,kij->ij", x, self.coordinates())

    # arithmetic is delegated to Expr
    def _e(self) -> "Expr":
        return Expr.of(self)

    def __add__(self, other):
        return self._e() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._e() - other

    def __rsub__(self, other):
        return as_expr(other) - self._e()

    def __neg__(self):
        return -self._e()

    def __mul__(self, s):
        return self._e() * s

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self._e() @ other

    def __rmatmul__(self, other):
        return as_expr(other) @ self._e()

    @property
    def T(self) -> "Expr":
        return self._e().T


class Expr:
    """AffineMatrixExpr: constant block plus per-variable coefficient tensors."""

    # make numpy defer to the reflected operators (ndarray @ Expr)
    __array_ufunc__ = None

    def __init__(self, const, terms: dict | None = None):
        self.const = np.atleast_2d(np.asarray(const, dtype=float))
        self.terms: dict[VarRef, np.ndarray] = dict(terms or {})
        for v, E in self.terms.items():
            if E.shape[1:] != self.const.shape:
                raise DimensionError(f"term in {v.name} has shape {E.shape[1:]}, expected {self.const.shape}")

    @classmethod
    def of(cls, v: VarRef) -> "Expr":
        return cls(np.zeros(v.shape), {v: v.coordinates()})

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def variables(self) -> list[VarRef]:
        return list(self.terms)

    def __add__(self, other) -> "Expr":
        other = as_expr(other, like=self)
        if other.shape != self.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        terms = dict(self.terms)
        for v, E in other.terms.items():
            terms[v] = terms[v] + E if v in terms else E
        return Expr(self.const + other.const, terms)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(-self.const, {v: -E for v, E in self.terms.items()})

    def __sub__(self, other) -> "Expr":
        return self + (-as_expr(other, like=self))

    def __rsub__(self, other) -> "Expr":
        return as_expr(other, like=self) + (-self)

    def __mul__(self, s) -> "Expr":
        if isinstance(s, (Expr, VarRef)):
            raise NonAffineError("product of two decision expressions is not affine")
        s = float(s)
        return Expr(s * self.const, {v: s * E for v, E in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Expr":
        other = as_expr(other)
        if not other.is_constant:
            if not self.is_constant:
                raise NonAffineError("product of two decision expressions is not affine")
            return other.__rmatmul__(self.const)
        R = other.const
        if self.shape[1] != R.shape[0]:
            raise DimensionError(f"cannot multiply {self.shape} by {R.shape}")
        return Expr(self.const @ R, {v: E @ R for v, E in self.terms.items()})

    def __rmatmul__(self, other) -> "Expr":
        other = as_expr(other)
        if not other.is_constant:
            raise NonAffineError("product of two decision expressions is not affine")
        L = other.const
        if L.shape[1] != self.shape[0]:
            raise DimensionError(f"cannot multiply {L.shape} by {self.shape}")
        return Expr(L @ self.const, {v: np.einsum("ij,kjl->kil", L, E) for v, E in self.terms.items()})

    @property
    def T(self) -> "Expr":
        return Expr(self.const.T, {v: E.transpose(0, 2, 1) for v, E in self.terms.items()})

    def value(self, values: dict) -> np.ndarray:
        """Evaluate with ``values`` mapping VarRef (or its name) to a matrix."""
        out = self.const.copy()
        byname = {k.name if isinstance(k, VarRef) else k: v for k, v in values.items()}
        for v, E in self.terms.items():
            if v.name not in byname:
                raise KeyError(f"no value for variable {v.name}")
            out += np.einsum("k,kij->ij", v.to_coords(byname[v.name]), E)
        return out

    def substitute(self, values: dict) -> "Expr":
        """Fix some variables to numeric values."""
        byname = {k.name if isinstance(k, VarRef) else k: v for k, v in values.items()}
        const = self.const.copy()
        terms = {}
        for v, E in self.terms.items():
            if v.name in byname:
                const += np.einsum("k,kij->ij", v.to_coords(byname[v.name]), E)
            else:
                terms[v] = E
        return Expr(const, terms)

    def __repr__(self) -> str:
        names = ", ".join(v.name for v in self.terms)
        return f"Expr(shape={self.shape}, vars=[{names}])"


def as_expr(x, like: Expr | None = None) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, VarRef):
        return Expr.of(x)
    a = np.asarray(x, dtype=float)
    if a.ndim == 0 and like is not None:
        return Expr(np.full(like.shape, float(a)))
    return Expr(np.atleast_2d(a))


def Sy(x) -> Expr:
    """X + X^T."""
    e = as_expr(x)
    return e + e.T


def zeros(r: int, c: int) -> Expr:
    return Expr(np.zeros((r, c)))


def bmat(rows) -> Expr:
    """Block matrix from a nested list; ``None`` entries are zero blocks sized by their row/column."""
    rows = [[None if b is None else as_expr(b) for b in row] for row in rows]
    nr, nc = len(rows), len(rows[0])
    heights = [None] * nr
    widths = [None] * nc
    for i, row in enumerate(rows):
        if len(row) != nc:
            raise DimensionError("ragged block matrix")
        for j, b in enumerate(row):
            if b is None:
                continue
            h, w = b.shape
            if heights[i] not in (None, h) or widths[j] not in (None, w):
                raise DimensionError(f"block ({i},{j}) has shape {b.shape}, inconsistent with its row/column")
            heights[i], widths[j] = h, w
    if None in heights or None in widths:
        raise DimensionError("every block row and column needs at least one sized block")
    ro = np.concatenate([[0], np.cumsum(heights)])
    co = np.concatenate([[0], np.cumsum(widths)])
    const = np.zeros((ro[-1], co[-1]))
    terms: dict[VarRef, np.ndarray] = {}
    for i, row in enumerate(rows):
        for j, b in enumerate(row):
            if b is None:
                continue
            const[ro[i] : ro[i + 1], co[j] : co[j + 1]] = b.const
            for v, E in b.terms.items():
                if v not in terms:
                    terms[v] = np.zeros((v.size, ro[-1], co[-1]))
                terms[v][:, ro[i] : ro[i + 1], co[j] : co[j + 1]] += E
    return Expr(const, terms)


def blkdiag(*blocks) -> Expr:
    k = len(blocks)
    return bmat([[blocks[i] if i == j else None for j in range(k)] for i in range(k)])


def kron_const(C, x) -> Expr:
    """C kron X for a constant C."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    e = as_expr(x)
    return Expr(np.kron(C, e.const), {v: np.stack([np.kron(C, Ek) for Ek in E]) for v, E in e.terms.items()})


def trace(x) -> Expr:
    e = as_expr(x)
    if e.shape[0] != e.shape[1]:
        raise DimensionError("trace of a non-square expression")
    return Expr([[np.trace(e.const)]], {v: np.trace(E, axis1=1, axis2=2).reshape(-1, 1, 1) for v, E in e.terms.items()})
