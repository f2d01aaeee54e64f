"""Batch driver for the estimate checkers over seeded random samples.

One call produces a flat list of :class:`EstimateReport` rows covering
both boundary modes; :func:`write_report_csv` serializes them as
``check_name, mode, mu, lhs, rhs, slack, pass``.
"""

import csv
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .assembly import estimate_coercivity
from .control import ControlProblem, check_convexity_gap
from .estimates import (
    check_continuity_report,
    check_lemma_h_bounds,
    check_lemma_l3,
    check_mignot_monotony,
    check_monotone_in_g,
    check_sandwich,
    check_theorem1,
    convex_state_pair,
)
from .exceptions import ConfigurationError
from .fields import random_field
from .tables import _fmt, write_header
from .vi_solver import SolverConfig, solve_vi

CHECK_NAMES = ("theorem1", "monotone_g", "sandwich", "h_bounds", "lemma_l3", "mignot",
               "continuity", "convexity")
REPORT_COLUMNS = ("check_name", "mode", "mu", "lhs", "rhs", "slack", "pass")
DEFAULT_MUS = tuple(k / 10 for k in range(11))
CONTINUITY_EPS = (1.0, 0.5, 0.25, 0.125, 0.0625)


def validate_names(names):
    names = list(CHECK_NAMES) if not names else list(names)
    bad = [n for n in names if n not in CHECK_NAMES]
    if bad:
        raise ConfigurationError(
            f"unknown check name(s) {', '.join(bad)}; valid names: {', '.join(CHECK_NAMES)}"
        )
    # keep the canonical order so reports do not depend on argument order
    return [n for n in CHECK_NAMES if n in names]


def sample_pairs(grid, n_pairs, seed, amplitude=20.0, stream=0):
    """Seeded list of ``(g1, g2)`` random field pairs."""
    rng = np.random.default_rng([seed, stream])
    return [(random_field(grid, rng, amplitude), random_field(grid, rng, amplitude))
            for _ in range(n_pairs)]


def _pair_reports(problem, names, g1, g2, mus, m, M, config, solver, pair_index,
                  n_continuity):
    out = []
    s1 = solve_vi(problem.with_g(g1), config, solver)
    s2 = solve_vi(problem.with_g(g2), config, solver)
    bounds = None
    if "sandwich" in names:
        bounds = (solve_vi(problem.with_g(np.minimum(g1, g2)), config, solver).u,
                  solve_vi(problem.with_g(np.maximum(g1, g2)), config, solver).u)
    per_mu = [n for n in ("theorem1", "lemma_l3", "mignot", "sandwich") if n in names]
    if per_mu:
        for mu in mus:
            combo = convex_state_pair(problem, g1, g2, mu, config, solver, s1, s2)
            for name in per_mu:
                if name == "theorem1":
                    out.append(check_theorem1(combo, m))
                elif name == "lemma_l3":
                    out.append(check_lemma_l3(combo, m))
                elif name == "mignot":
                    out.append(check_mignot_monotony(combo))
                else:
                    out.append(check_sandwich(combo, bounds))
    if "monotone_g" in names:
        out.append(check_monotone_in_g(problem, np.maximum(g1, g2), np.minimum(g1, g2),
                                       config, solver))
    if "convexity" in names:
        cp = ControlProblem(problem, M, solver_config=config, solver=solver)
        for mu in mus:
            if 0.0 < mu < 1.0:
                out.append(check_convexity_gap(cp, g1, g2, mu))
    if "continuity" in names and pair_index < n_continuity:
        rep, _ = check_continuity_report(problem, g1, CONTINUITY_EPS, seed=pair_index,
                                         config=config, solver=solver)
        out.append(rep)
    return out


def _h_bounds_reports(template, g1, g2, h1, h2, config, solver):
    # the order bounds need g2 <= g <= 0, a positive constant b and q >= 0
    g = -np.abs(g1)
    g_low = g - np.abs(g2)
    b_vals = np.asarray(template.b, dtype=float)
    b_const = float(b_vals[0]) if b_vals.size and np.all(b_vals == b_vals[0]) and b_vals[0] > 0 else 1.0
    q = np.maximum(np.asarray(template.q, dtype=float), 0.0)
    return check_lemma_h_bounds(template, g, b_const, q, h1, h2, g2=g_low, config=config,
                                solver=solver)


def run_check_suite(template, names=None, n_pairs=20, seed=0, mus=DEFAULT_MUS,
                    amplitude=20.0, M=1.0, config=None, solver="pdas", h=10.0,
                    h_pair=(10.0, 1.0), modes=("dirichlet", "robin"), n_continuity=3, jobs=1):
    """Run the named checkers on ``n_pairs`` seeded pairs in every mode.

    ``template`` supplies the grid, ``b``, ``q`` and the mass type. Robin
    mode uses coefficient ``h``; the h-dependence bounds use ``h_pair =
    (h1, h2)`` and run once per pair regardless of ``modes``.
    """
    names = validate_names(names)
    config = config or SolverConfig()
    mus = [float(mu) for mu in mus]
    if any(not 0.0 <= mu <= 1.0 for mu in mus):
        raise ConfigurationError("mu values must lie in [0, 1]")
    if n_pairs < 1:
        raise ConfigurationError("n_pairs must be positive")
    h1, h2 = (float(v) for v in h_pair)
    if not 0 < h2 <= h1:
        raise ConfigurationError(f"h_pair must satisfy 0 < h2 <= h1, got {h_pair}")

    reports = []
    pooled = ("theorem1", "monotone_g", "sandwich", "lemma_l3", "mignot", "continuity",
              "convexity")
    for k, mode in enumerate(modes if any(n in names for n in pooled) else ()):
        problem = template.with_mode(mode, h if mode == "robin" else None)
        pairs = sample_pairs(problem.grid, n_pairs, seed, amplitude, stream=k)
        m = estimate_coercivity(problem)

        def work(item, problem=problem, m=m):
            i, (g1, g2) = item
            return _pair_reports(problem, names, g1, g2, mus, m, M, config, solver, i,
                                 n_continuity)

        for chunk in _map(work, list(enumerate(pairs)), jobs):
            reports.extend(chunk)
    if "h_bounds" in names:
        pairs = sample_pairs(template.grid, n_pairs, seed, amplitude, stream=len(modes))
        for chunk in _map(lambda p: _h_bounds_reports(template, p[0], p[1], h1, h2, config,
                                                      solver), pairs, jobs):
            reports.extend(chunk)
    return reports


def _map(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def report_rows(reports):
    return [{"check_name": r.name, "mode": r.mode, "mu": r.mu, "lhs": r.lhs, "rhs": r.rhs,
             "slack": r.slack, "pass": r.passed} for r in reports]


def write_report_csv(reports, path, metadata=None):
    with open(path, "w", newline="") as fh:
        write_header(fh, metadata or {})
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for row in report_rows(reports):
            w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])


def summarize(reports):
    """Per-check counts and worst slack, in canonical order."""
    lines = []
    for name in sorted({r.name for r in reports},
                       key=lambda n: (CHECK_NAMES.index(n.split(":")[0]), n)):
        group = [r for r in reports if r.name == name]
        failed = sum(not r.passed for r in group)
        worst = min(r.slack for r in group)
        lines.append(f"{name:28s} n={len(group):5d} failed={failed:4d} worst_slack={worst:.3e}")
    return lines
