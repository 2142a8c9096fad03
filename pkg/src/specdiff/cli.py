"""Command-line interface.

Subcommands: ``simulate`` writes observation CSVs, ``oracle`` dumps the
forward solver's ground truth, ``estimate`` runs the estimator on a data
file, ``rate-study`` runs a Monte Carlo error-trend study, and ``basis``
dumps basis functions for debugging.  Exit codes: 0 on success, 2 for
configuration errors, 3 for numerical failures.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import estimate as est
from . import harness, simulate, specs
from .basis import build_basis
from .errors import NumericalError
from .oracle import choose_truncation, generator_eigs, transition_density

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_spec(token):
    if token in specs.PRESET_NAMES:
        return specs.preset(token)
    return specs.from_json(token)


def _parse_interval(text):
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("interval must look like 0.1,0.9") from exc
    return (a, b)


def _cmd_simulate(args):
    spec = _load_spec(args.spec)
    if args.mode == "euler":
        init = "stationary" if args.x0 is None else args.x0
        path = simulate.simulate_euler(
            spec, args.delta, args.n_obs,
            substeps=args.substeps, seed=args.seed, init=init,
        )
    else:
        path = simulate.simulate_exact(
            spec, args.delta, args.n_obs, seed=args.seed, n_grid=args.oracle_n
        )
    path.save_csv(args.out)
    print(f"wrote {args.n_obs + 1} observations to {args.out}")
    return 0


def _cmd_oracle(args):
    spec = _load_spec(args.spec)
    dec = generator_eigs(spec, args.n, args.K)
    u1p = dec.u_deriv(1)
    with open(args.out, "w") as fh:
        fh.write(f"# spec={spec.name} n={args.n} K={args.K} C0={float(dec.C0)!r}\n")
        fh.write("# nu: " + " ".join(repr(float(v)) for v in dec.nu) + "\n")
        fh.write("x,mu,S,u1,u1_prime\n")
        for i, x in enumerate(dec.grid):
            row = (x, dec.mu[i], dec.S[i], dec.u[1][i], u1p[i])
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"wrote oracle table to {args.out}")
    if args.pdelta_out:
        K = choose_truncation(dec, args.delta)
        p = transition_density(dec, args.delta, K)
        np.savetxt(args.pdelta_out, p, delimiter=",")
        print(f"wrote transition density (delta={args.delta}, K={K}) "
              f"to {args.pdelta_out}")
    return 0


def _cmd_estimate(args):
    path = simulate.SamplePath.load_csv(args.data)
    if args.J is None and args.s is None:
        raise ValueError("need --J or --s to pick the resolution level")
    result = est.estimate_path(
        path,
        s=args.s,
        J=args.J,
        interval=args.interval,
        grid_size=args.grid,
        clip_frac=args.clip,
    )
    payload = result.to_dict()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        print(f"wrote estimate to {args.out}")
    else:
        json.dump(payload, sys.stdout)
        sys.stdout.write("\n")
    return 0


def _cmd_rate_study(args):
    overrides = {
        "spec": args.spec,
        "delta": args.delta,
        "n_values": [int(v) for v in args.n_values.split(",")] if args.n_values else None,
        "replicates": args.replicates,
        "seed_base": args.seed,
        "s": args.s,
        "mode": args.mode,
        "substeps": args.substeps,
        "clip_frac": args.clip,
        "out_dir": args.out_dir,
    }
    if args.config:
        config = harness.ExperimentConfig.from_json(args.config, **overrides)
    else:
        config = harness.ExperimentConfig(
            **{k: v for k, v in overrides.items() if v is not None}
        )
    result = harness.rate_study(config)
    paths = harness.emit_report(result)
    for key, fit in result.fits.items():
        theory = result.exponents[key]
        if fit is None:
            print(f"{key}: no fit ({result.fit_reason})")
        else:
            print(
                f"{key}: slope {fit['slope']:+.4f} (se {fit['stderr']:.4f}), "
                f"theory {theory:+.4f}"
            )
    print(f"degenerate fraction {result.degenerate_fraction:.3f}")
    print("wrote " + ", ".join(paths))
    return 0


def _cmd_basis(args):
    basis = build_basis(args.J, args.order)
    xs = np.linspace(0.0, 1.0, args.points)
    design = basis.design_matrix(xs, args.deriv)
    with open(args.out, "w") as fh:
        fh.write("x," + ",".join(f"psi_{i}" for i in range(basis.dim)) + "\n")
        for i, x in enumerate(xs):
            fh.write(f"{float(x)!r}," + ",".join(repr(float(v)) for v in design[i]) + "\n")
    print(f"wrote {basis.dim} basis functions to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specdiff",
        description="Spectral estimation of reflected-diffusion coefficients "
                    "from low-frequency data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate observation CSVs")
    p.add_argument("--spec", default="rbm",
                   help="preset name, JSON file, or inline JSON")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--n-obs", type=int, required=True, dest="n_obs")
    p.add_argument("--substeps", type=int, default=simulate.DEFAULT_SUBSTEPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("euler", "exact"), default="euler")
    p.add_argument("--x0", type=float, default=None,
                   help="fixed start (default: stationary)")
    p.add_argument("--oracle-n", type=int, default=512, dest="oracle_n")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("oracle", help="dump ground truth for a known spec")
    p.add_argument("--spec", default="rbm")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.add_argument("--pdelta-out", default=None, dest="pdelta_out",
                   help="also write the transition density matrix CSV")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("estimate", help="estimate coefficients from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--s", type=float, default=None,
                   help="smoothness used by the level rule")
    p.add_argument("--J", type=int, default=None,
                   help="explicit resolution level (overrides the rule)")
    p.add_argument("--interval", type=_parse_interval, default=(0.1, 0.9))
    p.add_argument("--clip", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("rate-study", help="Monte Carlo error-trend study")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--spec", default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-values", default=None, dest="n_values",
                   help="comma-separated sample sizes")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--mode", choices=("euler", "exact"), default=None)
    p.add_argument("--substeps", type=int, default=None)
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--out-dir", default=None, dest="out_dir",
                   help="defaults to $SPECDIFF_OUTDIR or the cwd")
    p.set_defaults(func=_cmd_rate_study)

    p = sub.add_parser("basis", help="dump basis functions (debug)")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--deriv", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_basis)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
