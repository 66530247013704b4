"""Command-line driver: fit / solve / bench / rate-curve / gram.

Flag values win over config-file entries, which win over built-in
defaults.  Exit codes: 0 success, 1 usage or input error, 2 training abort.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, bench
from .bench import RunSpec, run_one
from .losses import LossWeights
from .optim import InitSpec, TrainSchedule, TrainingDiverged
from .problems import SUPERVISED_CATALOG, wedge_spectrum
from .sampling import graded_1d

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class CliError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise CliError(f"config file {path}: expected a JSON object")
    return cfg


def _resolve(args, cfg, key, default):
    """flags > config file > default."""
    v = getattr(args, key.replace("-", "_"), None)
    if v is not None:
        return v
    if key in cfg:
        return cfg[key]
    return default


def _default_out_dir():
    return os.environ.get("MUNTZFIT_OUT", "results")


def _print_report(report: analysis.RecoveryReport, loss: dict):
    print(f"{'dominant exponent':<24}{report.dominant_mu:.6f}")
    for mu, c in report.active:
        print(f"{'  active term':<24}mu = {mu:.6f}   c = {c:+.6f}")
    for target, mu, err in report.matched:
        print(f"{'  matched':<24}target {target:.6f} -> {mu:.6f}   ({err:.4f}% err)")
    if report.under_resolved:
        print(f"{'  resolution':<24}under-resolved (fewer clusters than targets)")
    if math.isfinite(report.gram_condition):
        print(f"{'gram condition':<24}{report.gram_condition:.6g}")
    print(f"{'constraint violation':<24}{report.constraint_violation:.6g}")
    for k, v in loss.items():
        print(f"{'loss ' + k:<24}{v:.6g}")


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=bench._json_default)
        fh.write("\n")


def _execute(spec: RunSpec, out):
    rec = run_one(spec)
    if not rec.ok:
        print(f"training aborted: {rec.error}", file=sys.stderr)
        return EXIT_NUMERIC
    _print_report(rec.report, rec.loss)
    if out:
        _write_json(out, rec.to_dict())
        print(f"wrote {out}")
    return EXIT_OK


def cmd_fit(args):
    cfg = _load_config(args.config)
    K = int(_resolve(args, cfg, "K", 4))
    epochs = int(_resolve(args, cfg, "epochs", 10_000))
    seed = int(_resolve(args, cfg, "seed", 0))
    noise = float(_resolve(args, cfg, "noise", 0.0))

    if args.data is not None:
        try:
            data = np.loadtxt(args.data, delimiter=None if str(args.data).endswith(".txt") else ",")
        except OSError:
            raise CliError(f"data file not found: {args.data}")
        except ValueError as exc:
            raise CliError(f"data file {args.data}: {exc}")
        if data.ndim != 2 or data.shape[1] != 2:
            raise CliError(f"data file {args.data}: expected two numeric columns (x, y)")
        from .estimator import PowerLawRegressor
        est = PowerLawRegressor(n_terms=K, epochs=epochs, random_state=seed)
        try:
            est.fit(data[:, 0], data[:, 1])
        except TrainingDiverged as exc:
            print(f"training aborted: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        report = analysis.RecoveryReport(
            dominant_mu=est.dominant_exponent_,
            active=tuple(est.active_terms_),
            matched=(), max_rel_err_pct=0.0, under_resolved=False,
        )
        _print_report(report, {"total": float(est.trace_.losses[-1][0])})
        if args.out:
            _write_json(args.out, report.to_dict())
            print(f"wrote {args.out}")
        return EXIT_OK

    if args.target is None:
        raise CliError("either --target or --data is required")
    if args.target not in SUPERVISED_CATALOG:
        raise CliError(f"unknown target {args.target!r}; "
                       f"known: {', '.join(sorted(SUPERVISED_CATALOG))}")
    exact = SUPERVISED_CATALOG[args.target]
    spec = bench._supervised_run(
        f"fit-{args.target}", args.target, K=K, epochs=epochs, seed=seed,
        noise=noise, targets=exact.exponents,
        target_mu=exact.exponents[0] if len(exact.exponents) == 1 else None,
    )
    return _execute(spec, args.out)


def cmd_solve(args):
    cfg = _load_config(args.config)
    seed = int(_resolve(args, cfg, "seed", 0))
    method = _resolve(args, cfg, "method", "constraint")
    if method not in ("naive", "constraint", "constraint-aware"):
        raise CliError(f"--method must be naive or constraint, got {method!r}")
    method = "constraint-aware" if method.startswith("constraint") else "naive"

    if args.problem == "ode":
        spec = bench._pde_run("solve-ode", "ode", {}, (0.5,), 0.5, seed=seed)
    elif args.problem == "poisson":
        beta = float(_resolve(args, cfg, "beta", -0.5))
        if not beta > -1:
            raise CliError(f"--beta must be > -1, got {beta}")
        spec = bench._pde_run("solve-poisson", "poisson", {"beta": beta},
                              (1.0, beta + 2.0), None, seed=seed)
    elif args.problem == "corner":
        omega_deg = float(_resolve(args, cfg, "omega-deg", 270.0))
        bc = _resolve(args, cfg, "bc", "DD")
        if bc not in ("DD", "NN", "DN", "ND"):
            raise CliError(f"--bc must be one of DD, NN, DN, ND, got {bc!r}")
        if omega_deg == 270.0 and bc == "DD":
            spec = bench._corner_run("solve-corner", method, seed=seed)
        else:
            spec = bench._wedge_run("solve-corner", omega_deg, bc, method, seed=seed)
    else:
        raise CliError(f"unknown problem {args.problem!r}")

    rc = _execute(spec, args.out)
    if rc == EXIT_OK and spec.problem_kind == "wedge":
        omega = spec.problem_params["omega"]
        bc = spec.problem_params["bc"]
        modes = wedge_spectrum(omega, bc, 3)
        print("admissible spectrum: " + ", ".join(f"{m:.6f}" for m in modes))
    return rc


def cmd_bench(args):
    cfg = _load_config(args.config)
    jobs = int(_resolve(args, cfg, "jobs", 1))
    out = _resolve(args, cfg, "out", _default_out_dir())
    reg = bench.registry()
    if args.experiment_id not in reg:
        print(f"unknown experiment {args.experiment_id!r}; known ids:",
              file=sys.stderr)
        for k in sorted(reg):
            print(f"  {k}", file=sys.stderr)
        return EXIT_USAGE
    config = reg[args.experiment_id]
    summary = bench.run(config, jobs=jobs, out_dir=out, keep_traces=args.traces)
    agg = summary.aggregates
    print(f"experiment {config.id}: {agg['n_runs']} runs "
          f"({agg['n_failed']} failed)")
    print(f"{'success':<24}{agg['success_pct']:.1f}%")
    for key in ("mean_rel_err_pct", "median_rel_err_pct", "p90_rel_err_pct",
                "mean_constraint_violation"):
        if key in agg:
            print(f"{key:<24}{agg[key]:.6g}")
    print(f"results in {out}/")
    return EXIT_OK


def cmd_rate_curve(args):
    alpha = args.alpha
    span = args.span
    mus = np.linspace(max(alpha - span, 0.01), alpha + span, args.points)
    mus = np.unique(np.append(mus, alpha))
    rows = analysis.rate_curve(alpha, mus)
    lines = ["mu,c_star,R"]
    lines += [f"{mu:.12g},{c:.12g},{r:.12g}" for mu, c, r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_points_spec(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if parts[0] == "graded":
        if len(parts) != 3:
            raise CliError("points spec: graded:<n>:<p>")
        x = graded_1d(int(parts[1]), float(parts[2]))
        return x[x > 0]
    if parts[0] == "uniform":
        if len(parts) != 2:
            raise CliError("points spec: uniform:<n>")
        return np.linspace(0.0, 1.0, int(parts[1]))[1:]
    raise CliError(f"unknown points spec {spec!r} (use graded:<n>:<p> or uniform:<n>)")


def cmd_gram(args):
    try:
        mus = [float(v) for v in args.mus.split(",")]
    except ValueError:
        raise CliError(f"--mus must be a comma-separated float list, got {args.mus!r}")
    if len(mus) < 2:
        raise CliError("--mus needs at least two exponents")
    points = _parse_points_spec(args.points)
    cond = analysis.gram_condition(mus, points)
    print(f"gram condition: {'inf' if math.isinf(cond) else format(cond, '.12g')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="muntzfit",
        description="Discover power-law scaling exponents from data and PDE constraints.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a supervised target or a two-column data file")
    f.add_argument("--target", help="catalog target id (e.g. single, three-term)")
    f.add_argument("--data", help="two-column numeric file: x, y")
    f.add_argument("--K", type=int, help="number of power terms")
    f.add_argument("--epochs", type=int)
    f.add_argument("--noise", type=float, help="additive Gaussian noise sigma")
    f.add_argument("--seed", type=int)
    f.add_argument("--out", help="write the report JSON here")
    f.add_argument("--config", help="JSON config file (flags win)")
    f.set_defaults(fn=cmd_fit)

    s = sub.add_parser("solve", help="solve a PDE problem and report exponents")
    s.add_argument("problem", choices=["ode", "poisson", "corner"])
    s.add_argument("--beta", type=float, help="forcing exponent for poisson")
    s.add_argument("--omega-deg", type=float, help="wedge opening angle, degrees")
    s.add_argument("--bc", help="wedge edge conditions: DD, NN, DN or ND")
    s.add_argument("--method", help="naive | constraint")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--config")
    s.set_defaults(fn=cmd_solve)

    b = sub.add_parser("bench", help="run a registered experiment")
    b.add_argument("experiment_id")
    b.add_argument("--out", help="output directory (default $MUNTZFIT_OUT or ./results)")
    b.add_argument("--jobs", type=int, help="parallel worker count")
    b.add_argument("--traces", action="store_true", help="also export per-epoch CSVs")
    b.add_argument("--config")
    b.set_defaults(fn=cmd_bench)

    r = sub.add_parser("rate-curve", help="closed-form projection error around alpha")
    r.add_argument("--alpha", type=float, required=True)
    r.add_argument("--span", type=float, default=0.5)
    r.add_argument("--points", type=int, default=101)
    r.add_argument("--out")
    r.set_defaults(fn=cmd_rate_curve)

    g = sub.add_parser("gram", help="condition number of the power-basis Gram matrix")
    g.add_argument("--mus", required=True, help="comma-separated exponents")
    g.add_argument("--points", default="graded:200:2",
                   help="graded:<n>:<p> or uniform:<n>")
    g.set_defaults(fn=cmd_gram)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
