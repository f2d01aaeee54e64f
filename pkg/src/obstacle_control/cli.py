"""Command-line front end: ``obstacle-control {solve,check,optimize,sweep,report}``.

Runs are described by an INI file (sections ``grid``, ``data``,
``problem``, ``solver``, ``control``, ``checks``, ``sweep``, ``run``);
command-line flags override it. Every CSV written starts with a comment
block echoing the effective configuration, and nothing time- or
path-dependent goes into it, so identical configs give identical bytes.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure,
3 optimizer failure, 4 a hard check or sweep assertion failed.
"""

import argparse
import configparser
import csv
import logging
import os
import sys

import numpy as np

from .assembly import assemble, build_grid
from .control import (
    ControlProblem,
    OptimizerConfig,
    minimize_cost,
    write_control_csv,
    write_nodes_csv,
)
from .convergence import fit_rate, h_sweep_control, h_sweep_state
from .exceptions import ConfigurationError, LineSearchError, NonConvergenceError
from .fields import evaluate_preset
from .suite import CHECK_NAMES, run_check_suite, summarize, validate_names, write_report_csv
from .tables import write_header
from .vi_solver import SolverConfig, solve_vi, write_solution_csv

log = logging.getLogger("obstacle_control")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_OPTIMIZER, EXIT_CHECK = 0, 1, 2, 3, 4


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _names(text):
    return [v.strip() for v in str(text).replace(";", ",").split(",") if v.strip()]


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default); "out" is the only path-like key and is
# left out of the echoed header
SCHEMA = {
    "grid": {"dim": (int, 1), "nodes_per_axis": (int, 65), "gamma1": (str, "left"),
             "mass": (str, "consistent")},
    "data": {"g": (str, "const:0"), "b": (str, "const:0"), "q": (str, "const:0")},
    "problem": {"mode": (str, "dirichlet"), "h": (float, 10.0), "M": (float, 1.0)},
    "solver": {"solver": (str, "pdas"), "tol_comp": (float, 1e-10), "omega": (float, 1.5),
               "max_iter": (int, 200_000), "inner_tol": (float, 1e-12),
               "max_active_set_iter": (int, 500)},
    "control": {"tol_opt": (float, 1e-8), "max_iter": (int, 2000), "armijo_c": (float, 1e-4),
                "shrink": (float, 0.5), "initial_step": (float, 1.0),
                "min_step": (float, 1e-14), "warm_start": (_bool, True)},
    "checks": {"names": (_names, list(CHECK_NAMES)), "n_pairs": (int, 20),
               "amplitude": (float, 20.0), "mus": (_floats, [k / 10 for k in range(11)]),
               "h1": (float, 10.0), "h2": (float, 1.0), "n_continuity": (int, 3)},
    "sweep": {"h_list": (_floats, [1.0, 10.0, 100.0, 1000.0, 10000.0]),
              "kind": (str, "both"), "rate_tol": (float, 0.05)},
    "run": {"seed": (int, 0), "jobs": (int, 1), "out": (str, "out")},
}


def load_config(path=None, overrides=None):
    """Typed configuration from an INI file plus ``{(section, key): text}`` overrides."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}") from None
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]")
    cfg = {}
    for section, keys in SCHEMA.items():
        cfg[section] = {}
        for key, (conv, default) in keys.items():
            raw = (overrides or {}).get((section, key))
            if raw is None and parser.has_option(section, key):
                raw = parser.get(section, key)
            if raw is None:
                cfg[section][key] = default
                continue
            try:
                cfg[section][key] = conv(raw)
            except ValueError:
                raise ConfigurationError(f"[{section}] {key} = {raw!r} is not valid") from None
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["problem"]["mode"] not in ("dirichlet", "robin"):
        raise ConfigurationError("problem.mode must be dirichlet or robin")
    for section, key in (("problem", "h"), ("problem", "M"), ("solver", "tol_comp"),
                         ("solver", "inner_tol"), ("control", "tol_opt"),
                         ("sweep", "rate_tol")):
        if not cfg[section][key] > 0:
            raise ConfigurationError(f"{section}.{key} must be positive")
    if cfg["run"]["jobs"] < 1:
        raise ConfigurationError("run.jobs must be at least 1")
    if cfg["sweep"]["kind"] not in ("state", "control", "both"):
        raise ConfigurationError("sweep.kind must be state, control or both")
    validate_names(cfg["checks"]["names"])


def header(cfg, command):
    meta = {s: dict(v) for s, v in cfg.items()}
    meta["run"] = {k: v for k, v in meta["run"].items() if k != "out"}
    return {"command": command, "config": meta}


def build_problem(cfg):
    g_cfg, d_cfg, p_cfg = cfg["grid"], cfg["data"], cfg["problem"]
    grid = build_grid(g_cfg["dim"], g_cfg["nodes_per_axis"], g_cfg["gamma1"])
    rng = np.random.default_rng(cfg["run"]["seed"])
    g = evaluate_preset(d_cfg["g"], grid.coords, rng)
    b = evaluate_preset(d_cfg["b"], grid.coords[grid.gamma1], rng)
    q = evaluate_preset(d_cfg["q"], grid.coords[grid.gamma2], rng)
    h = p_cfg["h"] if p_cfg["mode"] == "robin" else None
    return assemble(grid, g, q, b, p_cfg["mode"], h, g_cfg["mass"])


def solver_config(cfg):
    s = cfg["solver"]
    return SolverConfig(tol_comp=s["tol_comp"], max_iter=s["max_iter"], omega=s["omega"],
                        inner_tol=s["inner_tol"], max_active_set_iter=s["max_active_set_iter"])


def optimizer_config(cfg):
    c = cfg["control"]
    return OptimizerConfig(armijo_c=c["armijo_c"], shrink=c["shrink"],
                           initial_step=c["initial_step"], tol_opt=c["tol_opt"],
                           max_iter=c["max_iter"], min_step=c["min_step"])


def _out(cfg, name):
    out = cfg["run"]["out"]
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def cmd_solve(cfg):
    problem = build_problem(cfg)
    try:
        sol = solve_vi(problem, solver_config(cfg), cfg["solver"]["solver"])
    except NonConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    path = _out(cfg, "solution.csv")
    write_solution_csv(sol, problem.grid, path, header(cfg, "solve"))
    print(f"solver {sol.solver_id}: {sol.iterations} iterations, "
          f"{int(sol.active_mask.sum())} active nodes")
    print(f"complementarity residual {sol.residual_complementarity:.3e}")
    print(f"stationarity residual    {sol.residual_stationarity:.3e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check(cfg, names=None):
    names = validate_names(names or cfg["checks"]["names"])
    cfg["checks"]["names"] = names
    c = cfg["checks"]
    template = build_problem(cfg).with_mode("dirichlet")
    try:
        reports = run_check_suite(
            template, names, n_pairs=c["n_pairs"], seed=cfg["run"]["seed"], mus=c["mus"],
            amplitude=c["amplitude"], M=cfg["problem"]["M"], config=solver_config(cfg),
            solver=cfg["solver"]["solver"], h=cfg["problem"]["h"], h_pair=(c["h1"], c["h2"]),
            n_continuity=c["n_continuity"], jobs=cfg["run"]["jobs"],
        )
    except NonConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    path = _out(cfg, "checks.csv")
    write_report_csv(reports, path, header(cfg, "check"))
    for line in summarize(reports):
        print(line)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports)} reports, {failed} failed; wrote {path}")
    return EXIT_OK if failed == 0 else EXIT_CHECK


def cmd_optimize(cfg):
    problem = build_problem(cfg)
    cp = ControlProblem(problem, cfg["problem"]["M"], optimizer_config(cfg), solver_config(cfg),
                        cfg["solver"]["solver"])
    meta = header(cfg, "optimize")
    try:
        res = minimize_cost(cp)
    except LineSearchError as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        _write_history(exc.history, _out(cfg, "control_history.csv"), meta)
        return EXIT_OPTIMIZER
    except NonConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_control_csv(res, _out(cfg, "control_history.csv"), meta)
    write_nodes_csv(problem.grid, {"g_op": res.g_op, "u_op": res.u_op.u},
                    _out(cfg, "control_nodes.csv"), meta)
    print(f"J = {res.J_value!r} after {res.outer_iterations} iterations, "
          f"|grad|_H = {res.gradient_norm_final:.3e}")
    if not res.converged:
        print(f"optimizer failure: no convergence within max_iter={cp.optimizer.max_iter}",
              file=sys.stderr)
        return EXIT_OPTIMIZER
    return EXIT_OK


def _write_history(history, path, meta):
    with open(path, "w", newline="") as fh:
        write_header(fh, meta)
        w = csv.writer(fh)
        w.writerow(["iteration", "J"])
        for k, J in enumerate(history):
            w.writerow([k, repr(float(J))])


def cmd_sweep(cfg):
    s = cfg["sweep"]
    template = build_problem(cfg)
    config, solver = solver_config(cfg), cfg["solver"]["solver"]
    meta = header(cfg, "sweep")
    tables = {}
    if s["kind"] in ("state", "both"):
        tables["state"] = h_sweep_state(template, template.g, s["h_list"], config, solver,
                                        M=cfg["problem"]["M"], rate_tol=s["rate_tol"],
                                        jobs=cfg["run"]["jobs"])
    if s["kind"] in ("control", "both"):
        tables["control"] = h_sweep_control(template, cfg["problem"]["M"], s["h_list"],
                                            optimizer_config(cfg), config, solver,
                                            warm_start=cfg["control"]["warm_start"],
                                            jobs=cfg["run"]["jobs"])
    rates = []
    ok = True
    for kind, table in tables.items():
        table.metadata = {**meta, "sweep": kind}
        table.to_csv(_out(cfg, f"sweep_{kind}.csv"))
        for name, passed in table.checks.items():
            print(f"{kind:8s} {name:22s} {'PASS' if passed else 'FAIL'}")
        if "status" in table.info:
            print(f"{kind:8s} status: {table.info['status']}")
        ok = ok and table.passed
        for col in ("state_dist_V", "control_dist_H"):
            if col not in table.columns:
                continue
            try:
                slope, r2 = fit_rate(table, col)
            except ConfigurationError:
                continue
            rates.append((kind, col, slope, r2))
            print(f"{kind:8s} rate {col}: slope {slope:.4f} (r^2 {r2:.4f})")
    with open(_out(cfg, "sweep_rates.csv"), "w", newline="") as fh:
        write_header(fh, meta)
        w = csv.writer(fh)
        w.writerow(["sweep", "column", "slope", "r_squared"])
        for kind, col, slope, r2 in rates:
            w.writerow([kind, col, repr(slope), repr(r2)])
    return EXIT_OK if ok else EXIT_CHECK


def _read_csv(path):
    meta, lines = [], []
    with open(path) as fh:
        for line in fh:
            (meta if line.startswith("#") else lines).append(line)
    return meta, list(csv.DictReader(lines))


def cmd_report(cfg):
    """Summarize whatever result files exist in the output directory."""
    out = cfg["run"]["out"]
    found = []
    text = []
    checks = os.path.join(out, "checks.csv")
    if os.path.exists(checks):
        _, rows = _read_csv(checks)
        found.append(checks)
        text.append("checks:")
        for name in sorted({r["check_name"] for r in rows}):
            group = [r for r in rows if r["check_name"] == name]
            failed = sum(r["pass"] != "1" for r in group)
            worst = min(float(r["slack"]) for r in group)
            text.append(f"  {name:28s} n={len(group):5d} failed={failed:4d} "
                        f"worst_slack={worst:.3e}")
    hist = os.path.join(out, "control_history.csv")
    if os.path.exists(hist):
        _, rows = _read_csv(hist)
        found.append(hist)
        if rows:
            last = rows[-1]
            text.append(f"optimize: {len(rows) - 1} iterations, final J {float(last['J']):.10g}")
    for kind in ("state", "control"):
        path = os.path.join(out, f"sweep_{kind}.csv")
        if not os.path.exists(path):
            continue
        meta, rows = _read_csv(path)
        found.append(path)
        status = [m[2:].strip() for m in meta if m.startswith("# checks:")]
        text.append(f"sweep {kind}: {len(rows)} rows; {status[0] if status else ''}")
    sol = os.path.join(out, "solution.csv")
    if os.path.exists(sol):
        _, rows = _read_csv(sol)
        found.append(sol)
        text.append(f"solve: {len(rows)} nodes, {sum(r['active'] == '1' for r in rows)} active")
    if not found:
        print(f"no result files in {out}", file=sys.stderr)
        return EXIT_USAGE
    path = os.path.join(out, "report.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(text) + "\n")
    print("\n".join(text))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with the run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker threads for sweeps and checks")
    common.add_argument("--seed", type=int, help="seed for random data and check samples")
    common.add_argument("--mode", choices=("dirichlet", "robin"))
    common.add_argument("--h", type=float, help="Robin heat transfer coefficient")
    common.add_argument("--h-list", dest="h_list", help="comma separated sweep values of h")
    common.add_argument("--M", type=float, help="control regularization weight")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="obstacle-control", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve one obstacle problem")
    p = sub.add_parser("check", parents=[common], help="run estimate checks")
    p.add_argument("names", nargs="*", help=f"subset of: {', '.join(CHECK_NAMES)}")
    sub.add_parser("optimize", parents=[common], help="compute the optimal control")
    sub.add_parser("sweep", parents=[common], help="Robin-to-Dirichlet sweeps over h")
    sub.add_parser("report", parents=[common], help="summarize results in --out")
    return parser


def _overrides(args):
    pairs = {("run", "out"): args.out, ("run", "jobs"): args.jobs, ("run", "seed"): args.seed,
             ("problem", "mode"): args.mode, ("problem", "h"): args.h,
             ("problem", "M"): args.M, ("sweep", "h_list"): args.h_list}
    return {k: str(v) for k, v in pairs.items() if v is not None}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "check":
            return cmd_check(cfg, args.names)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_report(cfg)
    except ValueError as exc:
        # configuration, preset and precondition errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
