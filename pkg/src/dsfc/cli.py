"""Command-line entry point.

Exit codes: 0 success, 1 infeasible problem or failed verification, 2 bad configuration.
The solver backend is chosen with ``--backend`` or the DSFC_SOLVER environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgio
from .errors import (
    BasisInsufficientError,
    ConfigurationError,
    DegenerateBasisError,
    DimensionError,
    DomainError,
    DsfcError,
    InfeasibleError,
    NotPositiveDefiniteError,
    StabilizabilityError,
    UsageError,
)
from .lmi.theorem import assemble_overestimate, assemble_theorem9
from .predictor import predictor_init
from .synthesis import prepare, run, write_trace_csv
from .verify import closed_loop, dissipation_check, l2_gain_estimate, simulate, spectral_abscissa
from .verify.dissipation import input_library

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# min gamma after the given number of iterations, as tabulated for the example
TABLE1 = {100: 0.481, 200: 0.4714, 300: 0.46398, 400: 0.45749}
PAPER_INIT = (0.49425, 0.49227)

log = logging.getLogger("dsfc")


def _setup(path):
    cfg = cfgio.load_config(path)
    return cfg, cfgio.setup_from_config(cfg)


def _apply_backend(args, setup):
    if getattr(args, "backend", None):
        setup.algorithm.backend = args.backend


def cmd_synthesize(args) -> int:
    _, st = _setup(args.config)
    _apply_backend(args, st)
    if args.max_iter is not None:
        st.algorithm.max_iter = args.max_iter
    problem = prepare(st.plant, st.spec, st.supply)

    def show(row):
        if not args.quiet:
            print(f"iter {row.iteration:4d}  gamma {row.gamma:.6f}  {row.status:<17} rel {row.rel_change:.3e}")

    res = run(problem, st.algorithm, callback=show)
    out = args.output or st.output.get("gains") or "gains.json"
    extra = {"stop_reason": res.stop_reason, "gamma0": res.gamma0, "gamma1": res.gamma1,
             "recheck_status": res.recheck_status, "recheck_gamma": res.recheck_gamma}
    cfgio.write_gains(out, res.gains, res.gamma_final, res.certificate, extra)
    trace = args.trace or st.output.get("trace")
    if trace:
        write_trace_csv(res.trace, trace)
    print(f"gamma0 {res.gamma0}  gamma1 {res.gamma1}  final {res.gamma_final}  ({res.stop_reason})")
    print(f"post-hoc fixed-gain check: {res.recheck_status}, gamma {res.recheck_gamma}")
    print(f"gains written to {out}")
    if res.stop_reason == "aborted" or res.recheck_status != "optimal":
        return EXIT_FAIL
    return EXIT_OK


def _verify_report(st, gains, gamma, cert, horizon, seed):
    problem = prepare(st.plant, st.spec, st.supply)
    cl = closed_loop(problem.plant, problem.spec, problem.gram, gains)
    spec_rep = spectral_abscissa(cl)
    report = {
        "abscissa": spec_rep.abscissa,
        "abscissa_by_N": {str(k): v for k, v in spec_rep.abscissae.items()},
        "spectrum_converged": spec_rep.converged,
    }
    ok = spec_rep.converged and spec_rep.abscissa < 0
    horizon = horizon if horizon is not None else 20 * st.plant.r
    if cert is not None and ok:
        traj = simulate(cl, None, lambda t: np.sin(0.7 * t) * np.ones(cl.q), horizon)
        d = dissipation_check(traj, cert, st.supply, cl, gamma)
        report.update(dissipation_ok=d.ok, dissipation_worst_margin=d.worst_margin,
                      dissipation_worst_time=d.worst_time, functional_min=d.min_v)
        ok = ok and d.ok
    if ok:
        est = l2_gain_estimate(cl, horizon, seed=seed)
        report.update(l2_gain_empirical=est.gamma_emp, l2_worst_input=est.worst_input)
        if gamma is not None and st.supply.gamma_role:
            report["l2_within_bound"] = bool(est.gamma_emp <= 1.05 * gamma)
            ok = ok and report["l2_within_bound"]
    report["ok"] = bool(ok)
    return report


def cmd_verify(args) -> int:
    _, st = _setup(args.config)
    _apply_backend(args, st)
    gains, gamma, cert, _ = cfgio.read_gains(args.gains)
    report = _verify_report(st, gains, gamma, cert, args.horizon, args.seed)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    dest = args.report or st.output.get("report")
    if dest:
        Path(dest).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK if report["ok"] else EXIT_FAIL


def _input_signal(spec: str, q: int, seed: int, horizon: float):
    ones = np.ones(q)
    if spec == "zero":
        return None
    if spec == "step":
        return lambda t: ones * (t >= 0)
    if spec == "sine":
        return lambda t: ones * np.sin(t)
    if spec.startswith("noise"):
        s = int(spec.split(":", 1)[1]) if ":" in spec else seed
        return input_library(q, horizon, s)[f"noise:{s}"]
    raise DomainError(f"unknown input {spec!r}; use zero, step, sine or noise:SEED")


def cmd_simulate(args) -> int:
    _, st = _setup(args.config)
    gains, _, _, _ = cfgio.read_gains(args.gains)
    problem = prepare(st.plant, st.spec, st.supply)
    cl = closed_loop(problem.plant, problem.spec, problem.gram, gains)
    w = _input_signal(args.input, cl.q, args.seed, args.horizon)
    rng = np.random.default_rng(args.seed)
    psi = rng.standard_normal(cl.nu) if args.random_initial else None
    traj = simulate(cl, psi, w, args.horizon, args.step)
    traj.write_csv(args.output)
    print(f"{traj.t.size} samples written to {args.output}" + ("  (diverged)" if traj.diverged else ""))
    return EXIT_FAIL if traj.diverged else EXIT_OK


def cmd_dump_lmi(args) -> int:
    _, st = _setup(args.config)
    problem = prepare(st.plant, st.spec, st.supply)
    seed = predictor_init(problem.plant, problem.spec, problem.gram, K=st.algorithm.K, X=st.algorithm.X)
    if args.mode == "overestimate":
        nu, dnu = problem.plant.nu, problem.spec.d * problem.plant.nu
        lmi = assemble_overestimate(problem.aug, problem.supply, np.eye(nu), np.zeros((nu, dnu)), seed.gains).problem
    else:
        lmi = assemble_theorem9(problem.aug, problem.supply, fixed_gains=seed.gains).problem
    print(lmi.listing())
    sdp = lmi.compile()
    print(f"standard form: {sdp.nvars} scalar variables, blocks {sdp.block_sizes()}")
    if args.sdp:
        sdp.dump(args.sdp)
        print(f"sparse listing written to {args.sdp}")
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.example != "paper-example":
        print(f"unknown demo {args.example!r}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = cfgio.paper_example_config()
    st = cfgio.setup_from_config(cfg)
    _apply_backend(args, st)
    st.algorithm.max_iter = args.noi
    problem = prepare(st.plant, st.spec, st.supply)
    t0 = time.time()
    marks = set(range(0, args.noi + 1, max(1, args.noi // 10))) | set(TABLE1) | {args.noi}

    def show(row):
        if row.iteration in marks:
            ref = f"   (tabulated {TABLE1[row.iteration]})" if row.iteration in TABLE1 else ""
            print(f"  iter {row.iteration:4d}  gamma {row.gamma:.6f}{ref}", flush=True)

    print("example plant, basis {1, e^t, e^2t, e^3t, e^-0.1t}, r = 1, X = -0.1, Bass gain K")
    res = run(problem, st.algorithm, callback=show)
    print(f"initial gamma (seed gains)      {res.gamma0:.6f}   (tabulated {PAPER_INIT[0]})")
    print(f"after fixed-(P,Q) resolve       {res.gamma1:.6f}   (tabulated {PAPER_INIT[1]})")
    gam = [row.gamma for row in res.trace if row.accepted]
    monotone = all(b <= a + 1e-6 for a, b in zip(gam, gam[1:]))
    print(f"final gamma {res.gamma_final:.6f} after {res.trace[-1].iteration} iterations ({res.stop_reason}); "
          f"monotone: {monotone}; {time.time() - t0:.1f} s")
    cl = closed_loop(problem.plant, problem.spec, problem.gram, res.gains)
    rep = spectral_abscissa(cl)
    print(f"closed-loop spectral abscissa {rep.abscissa:.6f} (converged: {rep.converged})")
    seed_cl = closed_loop(problem.plant, problem.spec, problem.gram, res.seed.gains)
    print(f"seed closed-loop abscissa {spectral_abscissa(seed_cl).abscissa:.6f}")
    if args.output:
        cfgio.write_gains(args.output, res.gains, res.gamma_final, res.certificate)
    if args.trace:
        write_trace_csv(res.trace, args.trace)
    ok = monotone and rep.converged and rep.abscissa < 0 and res.gamma_final <= res.gamma1 + 1e-6
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsfc", description="Dissipative dynamical state feedback for input-delay systems")
    ap.add_argument("--seed", type=int, default=0, help="seed for all stochastic test signals")
    ap.add_argument("--backend", choices=["reference", "cvxopt"], help="SDP backend (default: $DSFC_SOLVER or reference)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="run the synthesis loop")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--trace")
    p.add_argument("--max-iter", type=int)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="spectrum, dissipation and L2 checks for stored gains")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-g", "--gains", required=True)
    p.add_argument("--horizon", type=float)
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate the closed loop and write a CSV trajectory")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-g", "--gains", required=True)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--step", type=float)
    p.add_argument("--input", default="zero", help="zero | step | sine | noise:SEED")
    p.add_argument("--random-initial", action="store_true", help="seeded constant random initial segment")
    p.add_argument("-o", "--output", default="trajectory.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", help="built-in examples")
    p.add_argument("example", choices=["paper-example"])
    p.add_argument("--noi", type=int, default=100, help="number of iterations")
    p.add_argument("-o", "--output")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("dump-lmi", help="print the assembled matrix inequalities")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--mode", choices=["fixed-gain", "overestimate"], default="fixed-gain")
    p.add_argument("--sdp", help="also write the standard-form problem as a sparse listing")
    p.set_defaults(func=cmd_dump_lmi)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.backend:
        os.environ["DSFC_SOLVER"] = args.backend
    try:
        return args.func(args)
    except (InfeasibleError, StabilizabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigurationError, UsageError, DimensionError, DomainError, DegenerateBasisError,
            NotPositiveDefiniteError, BasisInsufficientError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DsfcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
