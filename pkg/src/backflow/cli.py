"""Command line front end.

Subcommands map one-to-one onto the quantities of interest: `eigen` and
`bound-scan` for the flux-operator spectrum, `current`/`flux`/`prob` for
time-domain quantities of a chosen state, `smear`/`propagate`/`seq` for the
measurement models, `gauss-scan` for parameter scans of the gaussian
superposition, and `verify` for the acceptance suite.

Outputs are deterministic: CSV files carry a header row, 12 significant
digits and "\n" line endings; JSON objects carry a meta block with the
package version and a hash of the resolved configuration.  A JSON file
passed via --config overrides the corresponding command line flags;
unknown keys are rejected.  The environment variable BACKFLOW_THREADS caps
BLAS threading (it must be applied before numpy is first imported, which
is why the compute modules are imported lazily).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys


def _apply_thread_cap():
    cap = os.environ.get("BACKFLOW_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _config_hash(params: dict) -> str:
    canon = json.dumps(params, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_json(path, payload: dict, params: dict):
    from . import __version__

    payload = {"meta": {"version": __version__, "config_hash": _config_hash(params)},
               **payload}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _add_state_flags(p):
    p.add_argument("--state", default="guess2",
                   choices=["planewaves", "gauss2", "guess1", "guess2", "extremal"])
    p.add_argument("--preset", default=None, help="named parameter set, e.g. paper-gauss-B")
    p.add_argument("--p1", type=float, default=0.3)
    p.add_argument("--p2", type=float, default=1.4)
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--A1", type=float, default=1.8)
    p.add_argument("--A2", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.6)
    p.add_argument("--b", type=float, default=2.8)
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--n", type=int, default=800, help="eigensolve size for --state extremal")
    p.add_argument("--umax", type=float, default=20.0)


def _build_state(args):
    from .states import state_from_config

    if args.preset:
        return state_from_config({"preset": args.preset})
    if args.state == "planewaves":
        cfg = dict(family="planewaves", p1=args.p1, p2=args.p2, A1=args.A1, A2=args.A2)
    elif args.state == "gauss2":
        cfg = dict(family="gauss2", p1=args.p1, p2=args.p2, sigma=args.sigma,
                   A1=args.A1, A2=args.A2)
    elif args.state == "guess1":
        cfg = dict(family="guess1", a=args.a, epsilon=args.eps)
    elif args.state == "guess2":
        cfg = dict(family="guess2", a=args.a, b=args.b, epsilon=args.eps)
    else:  # extremal
        from .kernel import build_grid, build_kernel, solve_spectrum

        res = solve_spectrum(build_kernel(build_grid(args.n, args.umax)))
        return res.ground_state
    return state_from_config(cfg)


def _time_grid(args):
    import numpy as np

    if args.samples < 2:
        raise ValueError("need at least 2 samples")
    return np.linspace(args.t_min, args.t_max, args.samples)


def _params_of(args, skip=("func", "config", "out", "format")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommand bodies ---------------------------------------------------------

def _cmd_eigen(args):
    from .kernel import bracken_melloy_bound, build_grid, build_kernel, solve_spectrum

    params = _params_of(args)
    if args.extrapolate:
        report = bracken_melloy_bound()
        _write_json(args.out, report, params)
        return 0
    res = solve_spectrum(build_kernel(build_grid(args.n, args.umax), a=args.a))
    if args.spectrum_out:
        _write_csv(args.spectrum_out, ("index", "eigenvalue"),
                   [(i, v) for i, v in enumerate(res.eigenvalues)])
    if args.state_out:
        _write_csv(args.state_out, ("u", "phi"),
                   zip(res.grid.nodes, res.ground_state.values))
    payload = {
        "most_negative": res.most_negative,
        "max_eigenvalue": res.max_eigenvalue,
        "negative_eigenvalues": res.negative_eigenvalues.tolist(),
        "n": args.n, "u_max": args.umax, "a": args.a,
    }
    _write_json(args.out, payload, params)
    return 0


def _cmd_bound_scan(args):
    import numpy as np

    from .kernel import build_grid, lambda_of_a

    a_values = np.array([float(s) for s in args.a_values.split(",")])
    rows = lambda_of_a(a_values, build_grid(args.n, args.umax), form=args.kernel_form)
    _write_csv(args.out, ("a", "lambda"), rows)
    return 0


def _cmd_current(args):
    import numpy as np

    state = _build_state(args)
    if args.phi:
        from .states import eval_phi

        u = np.linspace(0.0, args.umax, args.samples)
        _write_csv(args.out, ("u", "phi"), zip(u, eval_phi(state, u)))
        return 0
    from .currents import make_trace

    trace = make_trace(state, _time_grid(args))
    _write_csv(args.out, ("t", "J", "excluded"),
               zip(trace.times, trace.values, trace.excluded))
    return 0


def _cmd_flux(args):
    from .fluxes import backflow_report

    state = _build_state(args)
    report = backflow_report(state, args.search_lo, args.search_hi, tol=args.tol)
    rows = [(r.t1, r.t2, r.F, r.fraction_of_cbm, r.method, r.tolerance) for r in report]
    if args.format == "json":
        _write_json(args.out, {"windows": [r._asdict() if hasattr(r, "_asdict")
                                           else vars(r) for r in report]},
                    _params_of(args))
    else:
        _write_csv(args.out, ("t1", "t2", "F", "fraction", "method", "tolerance"), rows)
    return 0


def _cmd_prob(args):
    from .measurement import left_probability_curve

    state = _build_state(args)
    times = _time_grid(args)
    p_vals = left_probability_curve(state, times)
    _write_csv(args.out, ("t", "P"), zip(times, p_vals))
    return 0


def _cmd_smear(args):
    from .currents import current_for
    from .measurement import smear_current

    state = _build_state(args)
    j, exclusions = current_for(state)
    times = _time_grid(args)
    pi = smear_current(j, args.v0, times, exclusions=exclusions)
    j_vals = [float("nan") if any(abs(t - e) < 1e-9 for e in exclusions) else j(float(t))
              for t in times]
    _write_csv(args.out, ("tau", "J", "Pi"), zip(times, j_vals, pi.values))
    return 0


def _cmd_propagate(args):
    import numpy as np

    from .measurement import gaussian_packet, propagate, survival_and_arrival

    packet = gaussian_packet(args.x_min, args.x_max, args.dx, args.x0, args.p,
                             args.packet_sigma)
    result = propagate(packet, args.dt, args.steps, V0=args.v0)
    norms, arrival = survival_and_arrival(result)
    pi = np.concatenate(([np.nan], arrival.values, [np.nan]))
    _write_csv(args.out, ("tau", "norm", "Pi"), zip(result.times, norms, pi))
    return 0


def _cmd_seq(args):
    from .fluxes import integrate_current
    from .currents import current_for
    from .measurement import sequential_probability

    state = _build_state(args)
    p = sequential_probability(state, args.t1, args.t2)
    j, exclusions = current_for(state)
    flux = integrate_current(j, args.t1, args.t2, tol=1e-6, exclusions=exclusions)
    _write_json(args.out, {"p": p, "t1": args.t1, "t2": args.t2,
                           "flux_same_window": flux}, _params_of(args))
    return 0


def _cmd_gauss_scan(args):
    from .fluxes import backflow_report
    from .states import GaussianSuperposition

    rows = []
    for p1 in [float(s) for s in args.p1_list.split(",")]:
        for p2 in [float(s) for s in args.p2_list.split(",")]:
            for a1 in [float(s) for s in args.A1_list.split(",")]:
                for a2 in [float(s) for s in args.A2_list.split(",")]:
                    state = GaussianSuperposition(p1, p2, args.sigma, a1, a2)
                    report = backflow_report(state, 0.0, args.search_hi, tol=1e-6)
                    if report:
                        best = report[0]
                        rows.append((p1, p2, args.sigma, a1, a2, best.F, best.t1, best.t2))
                    else:
                        rows.append((p1, p2, args.sigma, a1, a2, 0.0,
                                     float("nan"), float("nan")))
    _write_csv(args.out, ("p1", "p2", "sigma", "A1", "A2", "F", "t1", "t2"), rows)
    return 0


def _cmd_verify(args):
    from .acceptance import run_all

    only = set(args.only.split(",")) if args.only else None
    ok, results = run_all(only=only, verbose_details=args.details)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        line = f"{status} criterion {r['criterion']}: {r['summary']} ({r['seconds']} s)"
        if r["message"]:
            line += f" -- {r['message']}"
        print(line)
        if args.details and r["details"]:
            print("     " + json.dumps(r["details"], sort_keys=True, default=str))
    print("verify:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="backflow", description=__doc__.split("\n")[0])
    top.add_argument("--config", default=None,
                     help="JSON file whose entries override the flags")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="flux-operator spectrum / backflow bound")
    p.add_argument("--n", type=int, default=800)
    p.add_argument("--umax", type=float, default=20.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--extrapolate", action="store_true",
                   help="converged bound from the (n, u_max) ladder")
    p.add_argument("--spectrum-out", default=None)
    p.add_argument("--state-out", default=None)
    p.set_defaults(func=_cmd_eigen)

    p = sub.add_parser("bound-scan", help="most negative eigenvalue vs smearing a")
    p.add_argument("--a-values", default="0,0.5,1,2,3,5,8")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--umax", type=float, default=15.0)
    p.add_argument("--kernel-form", default="flux", choices=["flux", "limit"])
    p.set_defaults(func=_cmd_bound_scan)

    p = sub.add_parser("current", help="current trace J(t), or phi(u) with --phi")
    _add_state_flags(p)
    p.add_argument("--t-min", type=float, default=-3.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=1200)
    p.add_argument("--phi", action="store_true", help="emit momentum amplitude instead")
    p.set_defaults(func=_cmd_current)

    p = sub.add_parser("flux", help="negative-current windows and their fluxes")
    _add_state_flags(p)
    p.add_argument("--search-lo", type=float, default=-3.0)
    p.add_argument("--search-hi", type=float, default=3.0)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=_cmd_flux)

    p = sub.add_parser("prob", help="left probability P(t)")
    _add_state_flags(p)
    p.add_argument("--t-min", type=float, default=-2.5)
    p.add_argument("--t-max", type=float, default=2.5)
    p.add_argument("--samples", type=int, default=51)
    p.set_defaults(func=_cmd_prob)

    p = sub.add_parser("smear", help="weak-limit time-smeared current")
    _add_state_flags(p)
    p.add_argument("--v0", type=float, default=0.5)
    p.add_argument("--t-min", type=float, default=-3.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=241)
    p.set_defaults(func=_cmd_smear)

    p = sub.add_parser("propagate", help="absorbing-potential survival run")
    p.add_argument("--x0", type=float, default=-15.0)
    p.add_argument("--p", type=float, default=1.5)
    p.add_argument("--packet-sigma", type=float, default=2.0)
    p.add_argument("--x-min", type=float, default=-80.0)
    p.add_argument("--x-max", type=float, default=140.0)
    p.add_argument("--dx", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--v0", type=float, default=0.5)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("seq", help="sequential-measurement probability p(t1, t2)")
    _add_state_flags(p)
    p.add_argument("--t1", type=float, default=-0.93)
    p.add_argument("--t2", type=float, default=0.93)
    p.set_defaults(func=_cmd_seq)

    p = sub.add_parser("gauss-scan", help="grid scan of gaussian-superposition backflow")
    p.add_argument("--p1-list", default="0.3,0.5")
    p.add_argument("--p2-list", default="1.4,2.0")
    p.add_argument("--A1-list", default="1.7,1.8")
    p.add_argument("--A2-list", default="1.0")
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--search-hi", type=float, default=8.0)
    p.set_defaults(func=_cmd_gauss_scan)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", default=None, help="comma-separated criterion ids")
    p.add_argument("--details", action="store_true")
    p.set_defaults(func=_cmd_verify)

    for name, sp in sub.choices.items():
        if name != "verify":
            sp.add_argument("--out", default=None, help="output path (default stdout)")
            sp.add_argument("--format", default="csv", choices=["csv", "json"])
    return top


def run(argv) -> int:
    _apply_thread_cap()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
        known = set(vars(args))
        unknown = set(overrides) - known
        if unknown:
            parser.exit(2, f"unknown config keys: {sorted(unknown)}\n")
        for key, value in overrides.items():
            setattr(args, key, value)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
