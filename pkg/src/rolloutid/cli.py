"""Command-line entry point: ``rolloutid <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or config, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import storage
from .bounds import check_proposition, corollary2_bound, proposition_threshold, theorem1_bound
from .errors import NumericFailureError, SysIdError
from .estimators import (
    EstimationResult,
    assemble_data_matrices,
    error_decomposition_check,
    ols_final_sample,
    ols_full,
)
from .experiments import PRESETS, load_config, preset, rescale_to_radius, run_sweep, system_from_spec
from .lti import NoiseConfig, SystemModel, simulate_dataset, true_markov
from .realization import (
    fir_hinf_report,
    hankel_error,
    ho_kalman,
    realization_robustness_check,
)

EXIT_INVALID = 2
EXIT_NUMERIC = 3


def _add_system_args(p):
    g = p.add_argument_group("system")
    g.add_argument(
        "--system",
        default="newton_delta",
        help="newton_delta, unstable_3x3, random, or a JSON file with A, B, C[, D, Bw, Dv]",
    )
    g.add_argument("--delta-step", type=float, default=0.2, help="step of the newton_delta system")
    g.add_argument("--system-seed", type=int, default=0, help="seed for --system random")
    g.add_argument("--rho", type=float, default=None, help="rescale A to this spectral radius")


def _add_noise_args(p, sigma_w=0.2, sigma_v=0.5):
    g = p.add_argument_group("noise")
    g.add_argument("--sigma-u", type=float, default=1.0)
    g.add_argument("--sigma-w", type=float, default=sigma_w)
    g.add_argument("--sigma-v", type=float, default=sigma_v)
    g.add_argument("--sigma-0", type=float, default=0.0)


def _system(args) -> SystemModel:
    name = args.system
    if name.endswith(".json") or Path(name).is_file():
        spec = json.loads(Path(name).read_text())
        spec.setdefault("kind", "explicit")
    elif name == "random":
        spec = {"kind": "random", "seed": args.system_seed}
    else:
        spec = {"kind": name, "delta": args.delta_step}
    if args.rho is not None:
        spec["target_rho"] = args.rho
        if spec["kind"] != "random":
            return rescale_to_radius(system_from_spec(spec), args.rho)
    return system_from_spec(spec)


def _noise(args) -> NoiseConfig:
    return NoiseConfig(args.sigma_u, args.sigma_w, args.sigma_v, args.sigma_0)


def _print_json(obj):
    print(json.dumps(obj, indent=2, default=float))


def _table(rows, headers):
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    print(line)
    print("-" * len(line))
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)))


def cmd_simulate(args):
    sys_ = _system(args)
    ds = simulate_dataset(sys_, _noise(args), args.N, args.T, seed=args.seed, system_tag=args.system)
    out = storage.save_dataset(ds, args.out)
    print(f"wrote {ds.N} rollouts of length {ds.T2} to {out}")


def cmd_estimate(args):
    ds = storage.load_dataset(args.dataset)
    T1 = args.t1 if args.t1 is not None else ds.T2
    dm = None
    if args.method == "final":
        res = ols_final_sample(ds)
    elif args.method == "unequal":
        dm = assemble_data_matrices(ds, T1)
        res = ols_full(dm)
    else:
        dm = assemble_data_matrices(ds, ds.T2)
        res = ols_full(dm)
    extra = {}
    if ds.system is not None:
        res.with_truth(true_markov(ds.system, res.G_hat.horizon))
        if dm is not None and dm.W is not None:
            extra["decomposition_residual"] = error_decomposition_check(dm, ds.system, res.G_hat)
    if args.method != "unequal" and T1 < ds.T2:
        # report the first T1 blocks only
        res = EstimationResult(res.G_hat.truncate(T1), res.min_eig_UUT, res.method_tag, res.N, T1, ds.T2)
        if ds.system is not None:
            res.with_truth(true_markov(ds.system, T1))
    if args.out:
        csv_path, json_path = storage.save_estimate(res, args.out)
        extra["files"] = [str(csv_path), str(json_path)]
    _print_json({**res.summary(), **extra})


def cmd_hokalman(args):
    if args.estimate:
        G = storage.load_estimate(args.estimate)
        truth = _system(args) if args.truth else None
    else:
        truth = _system(args)
        G = true_markov(truth, args.t1 + args.t2 + 1)
    real = ho_kalman(G, args.order, args.t1, args.t2)
    out = real.to_dict()
    if truth is not None:
        G_true = true_markov(truth, G.horizon)
        err = hankel_error(G_true, G, args.t1, args.t2)
        out["robustness"] = realization_robustness_check(truth, real, err).to_dict()
    if args.out:
        storage.save_json(out, args.out)
    _print_json(out)


def cmd_bound(args):
    sys_ = _system(args)
    fn = theorem1_bound if args.theorem == "1" else corollary2_bound
    rep = fn(sys_, _noise(args), args.T, args.N, args.delta)
    if args.json:
        _print_json(rep.to_dict())
        return
    rows = [[k, f"{v:.6g}" if isinstance(v, float) else str(v)] for k, v in rep.to_dict().items()]
    _table(rows, ["quantity", "value"])


def cmd_check(args):
    sys_ = _system(args)
    prop = f"P{args.prop}"
    N = args.N if args.N is not None else proposition_threshold(prop, sys_, args.T, args.delta)
    chk = check_proposition(prop, sys_, _noise(args), args.T, N, args.delta, args.trials, args.seed)
    if args.json:
        _print_json(chk.to_dict())
        return
    d = chk.to_dict()
    rows = [[k, f"{v:.6g}" if isinstance(v, float) else str(v)] for k, v in d.items()]
    rows.append(["passed", str(chk.passed)])
    _table(rows, ["field", "value"])


def cmd_sweep(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset)
    updates = {}
    if args.seeds is not None:
        updates["seeds"] = args.seeds
    if args.workers is not None:
        updates["workers"] = args.workers
    if updates:
        cfg = cfg.with_updates(**updates)
    out = args.out or cfg.output_dir or f"sweep_{cfg.name}"
    result = run_sweep(cfg)
    result.write(out)
    print(result.summary_csv(), end="")
    print(f"wrote results to {out}")


def cmd_fir_report(args):
    truth = _system(args)
    if args.estimate:
        G_hat = storage.load_estimate(args.estimate)
    else:
        G_hat = true_markov(truth, args.T)
    rep = fir_hinf_report(truth, G_hat, args.grid)
    _print_json(rep.to_dict())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rolloutid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a multi-rollout dataset directory")
    _add_system_args(p)
    _add_noise_args(p)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate Markov parameters from a dataset")
    p.add_argument("dataset")
    p.add_argument("--method", choices=["full", "final", "unequal"], default="full")
    p.add_argument("--t1", type=int, default=None, help="Markov length for --method unequal")
    p.add_argument("--out", default=None, help="output prefix for <out>.csv and <out>.json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("hokalman", help="Ho-Kalman realization from an estimate or a known system")
    _add_system_args(p)
    p.add_argument("--estimate", default=None, help="prefix written by 'estimate --out'")
    p.add_argument("--truth", action="store_true", help="compare against --system")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--t2", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hokalman)

    p = sub.add_parser("bound", help="evaluate the closed-form error bound")
    _add_system_args(p)
    _add_noise_args(p)
    p.add_argument("--theorem", choices=["1", "cor2"], default="1")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("check", help="Monte Carlo check of a concentration inequality")
    _add_system_args(p)
    _add_noise_args(p)
    p.add_argument("--prop", choices=["1", "2", "3", "4"], required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--N", type=int, default=None, help="defaults to the proposition's threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON scenario file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fir-report", help="H-infinity split into OLS error and FIR tail")
    _add_system_args(p)
    p.add_argument("--estimate", default=None)
    p.add_argument("--T", type=int, default=10, help="horizon when no estimate is given")
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(func=cmd_fir_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except NumericFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SysIdError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
