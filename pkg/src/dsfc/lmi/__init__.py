from .expr import FULL, SCALAR, SYMMETRIC, Expr, Sy, VarRef, as_expr, blkdiag, bmat, kron_const, trace, zeros
from .problem import LmiProblem, StandardSdp, compile_to_standard_form, smat, svec

__all__ = [
    "FULL", "SCALAR", "SYMMETRIC", "Expr", "Sy", "VarRef", "as_expr", "blkdiag", "bmat", "kron_const",
    "trace", "zeros", "LmiProblem", "StandardSdp", "compile_to_standard_form", "smat", "svec",
]
