from __future__ import annotations

import numpy as np

from ..lmi.problem import StandardSdp, smat

_STATUS = {"optimal": "optimal", "primal infeasible": "infeasible", "dual infeasible": "unbounded"}


def solve_cvxopt(sdp: StandardSdp, feastol: float, gaptol: float, iter_cap: int):
    import cvxopt
    from cvxopt import solvers

    # cvxopt stores an 's' cone block as the full n x n matrix, column-major
    rows_G, rows_h = [], []
    for b in sdp.blocks:
        cols = [smat(b.G[:, j]).reshape(-1, order="F") for j in range(sdp.nvars)]
        rows_G.append(np.column_stack(cols) if cols else np.zeros((b.size**2, 0)))
        rows_h.append(smat(b.h).reshape(-1, order="F"))
    G = np.vstack(rows_G)
    h = np.concatenate(rows_h)
    dims = {"l": 0, "q": [], "s": [b.size for b in sdp.blocks]}
    opts = {"show_progress": False, "feastol": feastol, "abstol": gaptol, "reltol": gaptol, "maxiters": iter_cap}
    try:
        res = solvers.conelp(cvxopt.matrix(sdp.c), cvxopt.matrix(G), cvxopt.matrix(h), dims, options=opts)
    except (ArithmeticError, ValueError) as exc:
        # cvxopt raises from inside its scaling update when an iterate hits the boundary
        return "numerical-failure", None, {"iterations": None, "reason": str(exc)}
    status = _STATUS.get(res["status"], "iteration-limit" if res["iterations"] >= iter_cap else "numerical-failure")
    x = None if res["x"] is None else np.array(res["x"]).reshape(-1)
    stats = {
        "iterations": res["iterations"],
        "pres": res.get("primal infeasibility"),
        "dres": res.get("dual infeasibility"),
        "gap": res.get("gap"),
    }
    return status, x, stats
