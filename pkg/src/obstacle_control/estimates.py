"""Numerical checks of the error estimates and order properties of the
obstacle-problem solution map g -> u_g.

Every checker returns an :class:`EstimateReport` whose ``slack`` is
``rhs - lhs``; a report passes when ``slack >= -1e-9 * (1 + |rhs|)``.
Order properties (monotonicity, sandwich bounds, ...) are phrased as
``lhs = max violation``, ``rhs = 0``.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble, estimate_coercivity, trace_norm
from .exceptions import InputError
from .tables import SweepTable
from .vi_solver import solve_vi

CHECK_TOL = 1e-9


def check_tolerance(rhs):
    return CHECK_TOL * (1.0 + abs(rhs))


@dataclass
class EstimateReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    mode: str = ""
    mu: float = None
    components: dict = field(default_factory=dict)


def make_report(name, lhs, rhs, mode="", mu=None, components=None, extra_ok=True):
    lhs, rhs = float(lhs), float(rhs)
    slack = rhs - lhs
    ok = bool(slack >= -check_tolerance(rhs)) and bool(extra_ok)
    return EstimateReport(name, lhs, rhs, slack, ok, mode, mu, dict(components or {}))


def mode_label(problem):
    return f"robin(h={problem.h:g})" if problem.is_robin else "dirichlet"


@dataclass(frozen=True, eq=False)
class ConvexCombo:
    """States at g1, g2, their convex combination u3 and the state u4 at
    the convex combination of the controls."""

    problem: object
    mu: float
    g1: np.ndarray
    g2: np.ndarray
    u1: object
    u2: object
    u3: np.ndarray
    u4: object

    @property
    def g3(self):
        return self.mu * self.g1 + (1.0 - self.mu) * self.g2


def convex_state_pair(problem, g1, g2, mu, config=None, solver="pdas", sol1=None, sol2=None):
    """Solve at ``g1``, ``g2`` and ``mu g1 + (1 - mu) g2`` and bundle the results.

    Pre-computed solutions for ``g1``/``g2`` may be passed in to avoid
    re-solving while sweeping ``mu``.
    """
    if not 0.0 <= mu <= 1.0:
        raise InputError(f"mu must lie in [0, 1], got {mu}")
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if sol1 is None:
        sol1 = solve_vi(problem.with_g(g1), config, solver)
    if sol2 is None:
        sol2 = solve_vi(problem.with_g(g2), config, solver)
    u3 = mu * sol1.u + (1.0 - mu) * sol2.u
    g3 = mu * g1 + (1.0 - mu) * g2
    if mu == 1.0:
        sol4 = sol1
    elif mu == 0.0:
        sol4 = sol2
    else:
        sol4 = solve_vi(problem.with_g(g3), config, solver)
    return ConvexCombo(problem, float(mu), g1, g2, sol1, sol2, u3, sol4)


def _residual(problem, u, g, w):
    """a(u, w) - <g, w> for the operative form and pairing of ``problem``."""
    return problem.energy(u, w) - problem.pairing(g, w)


def compute_alpha_beta(combo):
    """Variational residuals of each state tested at the other one."""
    p = combo.problem
    u1, u2 = combo.u1.u, combo.u2.u
    alpha = _residual(p, u1, combo.g1, u2 - u1)
    beta = _residual(p, u2, combo.g2, u1 - u2)
    return alpha, beta


def _i14_i24(combo):
    p = combo.problem
    u1, u2, u4 = combo.u1.u, combo.u2.u, combo.u4.u
    return (_residual(p, u1, combo.g1, u4 - u1), _residual(p, u2, combo.g2, u4 - u2))


def check_theorem1(combo, coercivity_m):
    """m |u4 - u3|_V^2 + mu I14 + (1 - mu) I24 <= mu (1 - mu) (alpha + beta)."""
    p, mu = combo.problem, combo.mu
    alpha, beta = compute_alpha_beta(combo)
    i14, i24 = _i14_i24(combo)
    dist2 = p.norm_V(combo.u4.u - combo.u3) ** 2
    lhs = coercivity_m * dist2 + mu * i14 + (1.0 - mu) * i24
    rhs = mu * (1.0 - mu) * (alpha + beta)
    tol = check_tolerance(rhs)
    return make_report(
        "theorem1", lhs, rhs, mode_label(p), mu,
        {"alpha": alpha, "beta": beta, "I14": i14, "I24": i24, "m": coercivity_m,
         "dist_V": np.sqrt(dist2)},
        extra_ok=(i14 >= -tol and i24 >= -tol and alpha >= -tol and beta >= -tol),
    )


def check_lemma_l3(combo, lambda_const):
    """Error bound between u3 and u4 in terms of |g1 - g2|_H.

    The squared right-hand side is the pass criterion; the unsquared
    variant is reported in ``components``.
    """
    p, mu, lam = combo.problem, combo.mu, lambda_const
    i14, i24 = _i14_i24(combo)
    lhs = (
        p.norm_V(combo.u3 - combo.u4.u) ** 2
        + mu * (1.0 - mu) * p.norm_V(combo.u1.u - combo.u2.u) ** 2
        + (mu / lam) * i14
        + ((1.0 - mu) / lam) * i24
    )
    dg = p.norm_H(combo.g1 - combo.g2)
    rhs = mu * (1.0 - mu) / lam**2 * dg**2
    rhs_unsq = mu * (1.0 - mu) / lam**2 * dg
    return make_report(
        "lemma_l3", lhs, rhs, mode_label(p), mu,
        {"lambda": lam, "I14": i14, "I24": i24, "rhs_unsquared": rhs_unsq,
         "slack_unsquared": rhs_unsq - lhs},
    )


def check_mignot_monotony(combo):
    """u4 <= u3 nodewise, hence |u4|_H <= |u3|_H."""
    p = combo.problem
    viol = float(np.max(combo.u4.u - combo.u3))
    n4, n3 = p.norm_H(combo.u4.u), p.norm_H(combo.u3)
    return make_report(
        "mignot", viol, 0.0, mode_label(p), combo.mu,
        {"max_u4_minus_u3": viol, "norm_H_u4": n4, "norm_H_u3": n3,
         "gap_sum": float(np.sum(combo.u3 - combo.u4.u))},
        extra_ok=n4 <= n3 + check_tolerance(n3),
    )


def check_monotone_in_g(problem, g1, g2, config=None, solver="pdas"):
    """g1 >= g2 nodewise implies u_{g1} >= u_{g2} nodewise."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if np.any(g1 < g2):
        raise InputError("check_monotone_in_g needs g1 >= g2 at every node")
    u1 = solve_vi(problem.with_g(g1), config, solver).u
    u2 = solve_vi(problem.with_g(g2), config, solver).u
    viol = float(np.max(u2 - u1))
    return make_report("monotone_g", viol, 0.0, mode_label(problem), None,
                       {"max_u2_minus_u1": viol})


def check_sandwich(combo, bounds=None, config=None, solver="pdas"):
    """u_{min(g1,g2)} <= u4 <= u_{max(g1,g2)} nodewise.

    ``bounds`` may carry pre-computed ``(u_min, u_max)`` states.
    """
    p = combo.problem
    if bounds is None:
        lo = solve_vi(p.with_g(np.minimum(combo.g1, combo.g2)), config, solver).u
        hi = solve_vi(p.with_g(np.maximum(combo.g1, combo.g2)), config, solver).u
    else:
        lo, hi = bounds
    u4 = combo.u4.u
    below = float(np.max(lo - u4))
    above = float(np.max(u4 - hi))
    return make_report("sandwich", max(below, above), 0.0, mode_label(p), combo.mu,
                       {"lower_violation": below, "upper_violation": above})


def calibrated_lambda1(problem, h2, tol=1e-8):
    """Largest lambda_1 with lambda_1 * min(1, h) below the discrete
    coercivity of A + h C for h in {h2, 1}."""
    values = []
    for h in sorted({float(h2), 1.0}):
        values.append(estimate_coercivity(problem, "V", h=h, tol=tol) / min(1.0, h))
    return min(values)


def check_trace_lipschitz(problem, g, h1, h2, config=None, solver="pdas"):
    """|u_{h2} - u_{h1}|_V <= |gamma0| / (lambda_1 min(1, h2)) |b - u_{h1}|_{Gamma_1} (h1 - h2)."""
    if h2 > h1 or h2 <= 0:
        raise InputError(f"need 0 < h2 <= h1, got h1={h1}, h2={h2}")
    p = problem.with_g(g)
    u1 = solve_vi(p.with_mode("robin", h1), config, solver).u
    u2 = u1 if h1 == h2 else solve_vi(p.with_mode("robin", h2), config, solver).u
    gamma0 = trace_norm(p)
    lam1 = calibrated_lambda1(p, h2)
    lhs = p.norm_V(u2 - u1)
    trace_gap = p.norm_gamma1(p.b_ext - u1)
    rhs = gamma0 / (lam1 * min(1.0, h2)) * trace_gap * (h1 - h2)
    return make_report(
        "h_bounds:trace_lipschitz", lhs, rhs, f"robin(h1={h1:g},h2={h2:g})", None,
        {"trace_norm": gamma0, "lambda1": lam1, "trace_gap": trace_gap},
    )


def check_lemma_h_bounds(problem, g, b_const, q, h1, h2, g2=None, config=None, solver="pdas"):
    """Bounds of the Robin states in terms of b, h and the Dirichlet state.

    Returns four reports: states below ``b``; monotone in (g, h); below the
    Dirichlet state; Lipschitz dependence on h. The first three need
    ``g2 <= g <= 0``, ``b`` a positive constant and ``q >= 0``.
    ``problem`` supplies the grid and mass type; its data are replaced.
    """
    g = np.asarray(g, dtype=float)
    g2 = g.copy() if g2 is None else np.asarray(g2, dtype=float)
    q = np.broadcast_to(np.asarray(q, dtype=float), problem.q.shape)
    if not np.isscalar(b_const) and np.ndim(b_const) != 0:
        raise InputError("b must be a constant")
    b_const = float(b_const)
    if b_const <= 0:
        raise InputError("b must be a positive constant")
    if np.any(g > 0) or np.any(g2 > g):
        raise InputError("need g2 <= g <= 0 at every node")
    if np.any(q < 0):
        raise InputError("need q >= 0 on Gamma_2")
    if h2 > h1 or h2 <= 0:
        raise InputError(f"need 0 < h2 <= h1, got h1={h1}, h2={h2}")

    base = assemble(problem.grid, g, q, b_const, "dirichlet", mass=problem.mass)
    label = f"robin(h1={h1:g},h2={h2:g})"
    u_d = solve_vi(base, config, solver).u
    u_h1 = solve_vi(base.with_mode("robin", h1), config, solver).u
    u_h2 = solve_vi(base.with_mode("robin", h2), config, solver).u
    u_g2h2 = solve_vi(base.with_g(g2).with_mode("robin", h2), config, solver).u

    viol_b = float(max(np.max(u_h1 - b_const), np.max(u_h2 - b_const)))
    viol_h = float(np.max(u_g2h2 - u_h1))
    viol_d = float(max(np.max(u_h1 - u_d), np.max(u_h2 - u_d)))
    reports = [
        make_report("h_bounds:below_b", viol_b, 0.0, label, None, {"max_u_minus_b": viol_b}),
        make_report("h_bounds:monotone_in_h", viol_h, 0.0, label, None,
                    {"max_ug2h2_minus_ug1h1": viol_h}),
        make_report("h_bounds:below_dirichlet", viol_d, 0.0, label, None,
                    {"max_uh_minus_u": viol_d}),
        check_trace_lipschitz(base, g, h1, h2, config, solver),
    ]
    return reports


def check_continuity(problem, g, perturbation_sizes, seed=0, config=None, solver="pdas"):
    """Distance of u_{g + eps r} to u_g along a fixed random unit direction r.

    Checks that the distance shrinks with eps, vanishes at eps = 0 and
    stays below the Lipschitz bound eps / lambda.
    """
    eps = np.asarray(perturbation_sizes, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise InputError("perturbation_sizes must be a strictly decreasing positive sequence")
    g = np.asarray(g, dtype=float)
    rng = np.random.default_rng(seed)
    r = rng.normal(size=g.size)
    r /= problem.norm_H(r)
    lam = estimate_coercivity(problem)
    u0 = solve_vi(problem.with_g(g), config, solver).u
    table = SweepTable(
        columns=["eps", "dist_V", "bound"],
        metadata={"check": "continuity", "mode": mode_label(problem), "seed": seed,
                  "lambda": lam},
    )
    for e in list(eps) + [0.0]:
        u = solve_vi(problem.with_g(g + e * r), config, solver).u
        table.rows.append({"eps": e, "dist_V": problem.norm_V(u - u0), "bound": e / lam})
    d = table.column("dist_V")
    b = table.column("bound")
    tol = CHECK_TOL * (1.0 + np.max(d))
    table.checks = {
        "nonincreasing": bool(np.all(np.diff(d) <= tol)),
        "zero_at_zero": bool(d[-1] <= tol),
        "lipschitz_bound": bool(np.all(d <= b + CHECK_TOL * (1.0 + b))),
    }
    return table


def check_continuity_report(problem, g, perturbation_sizes, seed=0, config=None, solver="pdas"):
    """:func:`check_continuity` summarized as one report (worst bound slack)."""
    table = check_continuity(problem, g, perturbation_sizes, seed, config, solver)
    d, b = table.column("dist_V"), table.column("bound")
    k = int(np.argmin(b - d))
    return make_report(
        "continuity", d[k], b[k], mode_label(problem), None,
        {"eps": table.rows[k]["eps"], **{f"check_{k2}": v for k2, v in table.checks.items()}},
        extra_ok=table.passed,
    ), table

