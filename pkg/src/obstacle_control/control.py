"""Distributed optimal control of the obstacle problem over the source g.

J(g) = 1/2 |u_g|_H^2 + M/2 |g|_H^2, minimized over unconstrained nodal g.
Gradients are H-Riesz representatives (``grad . B_H d`` is the
directional derivative along ``d``), computed by freezing the active set
of the state and solving a linear adjoint system on the inactive nodes.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .estimates import mode_label, check_tolerance, make_report
from .exceptions import ConfigurationError, LineSearchError
from .tables import write_header
from .vi_solver import SolverConfig, solve_vi


@dataclass(frozen=True)
class OptimizerConfig:
    armijo_c: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    tol_opt: float = 1e-8
    max_iter: int = 2000
    min_step: float = 1e-14

    def __post_init__(self):
        if not 0 < self.armijo_c < 1 or not 0 < self.shrink < 1:
            raise ConfigurationError("Armijo constants must lie in (0, 1)")
        if self.tol_opt <= 0 or self.initial_step <= 0 or self.max_iter < 1:
            raise ConfigurationError("optimizer tolerances and caps must be positive")


@dataclass(frozen=True, eq=False)
class ControlProblem:
    template: object
    M: float = 1.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    solver: str = "pdas"

    def __post_init__(self):
        if not self.M > 0:
            raise ConfigurationError(f"regularization weight M must be positive, got {self.M}")


@dataclass(eq=False)
class ControlResult:
    g_op: np.ndarray
    u_op: object
    J_value: float
    gradient_norm_final: float
    outer_iterations: int
    descent_history: list
    converged: bool
    grad_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)


def _state(cp, g, x0=None):
    return solve_vi(cp.template.with_g(g), cp.solver_config, cp.solver, x0=x0)


def eval_cost(cp, g, x0=None):
    """Return ``(J(g), solution)``."""
    g = np.asarray(g, dtype=float)
    sol = _state(cp, g, x0)
    p = cp.template
    J = 0.5 * p.norm_H(sol.u) ** 2 + 0.5 * cp.M * p.norm_H(g) ** 2
    return float(J), sol


def _inactive_factor(cp, sol):
    p = cp.template
    free = p.free
    inactive = free[~sol.active_mask[free]]
    if not inactive.size:
        return inactive, None
    return inactive, spla.splu(sp.csc_matrix(p.operator[inactive][:, inactive]))


def cost_gradient(cp, g, sol=None, factor=None):
    """H-gradient ``M g + p`` of the reduced cost with the active set frozen."""
    g = np.asarray(g, dtype=float)
    if sol is None:
        _, sol = eval_cost(cp, g)
    p = cp.template
    inactive, lu = factor if factor is not None else _inactive_factor(cp, sol)
    adj = np.zeros(p.grid.n_nodes)
    if inactive.size:
        adj[inactive] = lu.solve((p.B_H @ sol.u)[inactive])
    return cp.M * g + adj


def _cost_change(cp, g, sol, g_try, sol_try, J, J_try, factor):
    """J(g_try) - J(g).

    With an unchanged active set the state increment is linear in the
    control increment; solving for it directly keeps the difference
    accurate far below the round-off level of J itself.
    """
    if not np.array_equal(sol.active_mask, sol_try.active_mask):
        return J_try - J
    p = cp.template
    inactive, lu = factor
    dg = g_try - g
    du = np.zeros(p.grid.n_nodes)
    if inactive.size:
        du[inactive] = lu.solve((p.B_H @ dg)[inactive])
    return 0.5 * (du @ (p.B_H @ (2.0 * sol.u + du))) + 0.5 * cp.M * (dg @ (p.B_H @ (2.0 * g + dg)))


def minimize_cost(cp, g_initial=None):
    """Gradient descent with Armijo backtracking in the H metric.

    ``descent_history`` accumulates the accepted cost decrements, so it is
    nonincreasing by construction.
    """
    opt = cp.optimizer
    p = cp.template
    g = np.zeros(p.grid.n_nodes) if g_initial is None else np.array(g_initial, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ConfigurationError("initial control must be finite")
    J, sol = eval_cost(cp, g)
    history, grads, steps = [J], [], []
    for it in range(opt.max_iter + 1):
        factor = _inactive_factor(cp, sol)
        grad = cost_gradient(cp, g, sol, factor)
        gn = p.norm_H(grad)
        grads.append(gn)
        if gn <= opt.tol_opt * (1.0 + abs(J)):
            return ControlResult(g, sol, J, gn, it, history, True, grads, steps)
        if it == opt.max_iter:
            break
        t = opt.initial_step
        while True:
            g_try = g - t * grad
            J_try, sol_try = eval_cost(cp, g_try, x0=sol.u)
            dJ = _cost_change(cp, g, sol, g_try, sol_try, J, J_try, factor)
            if dJ <= -opt.armijo_c * t * gn**2:
                break
            t *= opt.shrink
            if t < opt.min_step:
                raise LineSearchError(
                    f"Armijo step fell below {opt.min_step:g} at iteration {it}"
                    f" (J={J:.6g}, |grad|_H={gn:.3g})",
                    history, t,
                )
        g, sol = g_try, sol_try
        J = float(J + dJ)
        history.append(J)
        steps.append(t)
    return ControlResult(g, sol, J, grads[-1], opt.max_iter, history, False, grads, steps)


def multistart(cp, n_starts=3, seed=0, scale=1.0):
    """Run :func:`minimize_cost` from seeded random initial controls."""
    rng = np.random.default_rng(seed)
    n = cp.template.grid.n_nodes
    return [minimize_cost(cp, scale * rng.normal(size=n)) for _ in range(n_starts)]


def check_convexity_gap(cp, g1, g2, mu):
    """Strict convexity of J along the segment [g1, g2] at ``mu``.

    Verifies the parallelogram identity for |u3|_H^2, the decomposition of
    the convexity gap and the lower bound
    ``mu (1 - mu) / 2 (|u1 - u2|_H^2 + M |g1 - g2|_H^2)``. The variant of
    the bound with the V-norm of ``u1 - u2`` is logged, not asserted.
    """
    if not 0.0 < mu < 1.0:
        raise ConfigurationError(f"mu must lie in (0, 1), got {mu}")
    p = cp.template
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    g3 = mu * g1 + (1.0 - mu) * g2
    J1, s1 = eval_cost(cp, g1)
    J2, s2 = eval_cost(cp, g2)
    J3, s4 = eval_cost(cp, g3)
    u1, u2, u4 = s1.u, s2.u, s4.u
    u3 = mu * u1 + (1.0 - mu) * u2
    n1, n2, n3, n4 = (p.norm_H(v) ** 2 for v in (u1, u2, u3, u4))
    du2 = p.norm_H(u1 - u2) ** 2
    dg2 = p.norm_H(g1 - g2) ** 2
    w = mu * (1.0 - mu)

    ident_rhs = mu * n1 + (1.0 - mu) * n2 - w * du2
    ident_err = abs(n3 - ident_rhs) / max(abs(n3), abs(ident_rhs), 1e-300)
    if n3 == 0.0 and ident_rhs == 0.0:
        ident_err = 0.0

    gap = mu * J1 + (1.0 - mu) * J2 - J3
    decomposition = 0.5 * (n3 - n4) + 0.5 * w * du2 + 0.5 * cp.M * w * dg2
    decomp_err = abs(gap - decomposition) / (1.0 + abs(gap))
    bound = 0.5 * w * (du2 + cp.M * dg2)
    bound_V = 0.5 * w * (p.norm_V(u1 - u2) ** 2 + cp.M * dg2)
    return make_report(
        "convexity", bound, gap, mode_label(p), mu,
        {"identity_rel_err": ident_err, "decomposition_rel_err": decomp_err,
         "bound_V": bound_V, "slack_V": gap - bound_V, "norm_H_u3_sq": n3, "norm_H_u4_sq": n4},
        extra_ok=ident_err <= 1e-12 and decomp_err <= check_tolerance(gap),
    )


def write_control_csv(result, path, metadata=None):
    """Optimization history as ``iteration, J, grad_norm, step``."""
    with open(path, "w", newline="") as fh:
        write_header(fh, metadata or {})
        w = csv.writer(fh)
        w.writerow(["iteration", "J", "grad_norm", "step"])
        for k, J in enumerate(result.descent_history):
            gn = result.grad_history[k] if k < len(result.grad_history) else None
            step = result.step_history[k - 1] if k >= 1 else None
            w.writerow([k, repr(float(J)), "" if gn is None else repr(float(gn)),
                        "" if step is None else repr(float(step))])


def write_nodes_csv(grid, columns, path, metadata=None):
    """Nodal dump: coordinates followed by the named vectors."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        write_header(fh, metadata or {})
        w = csv.writer(fh)
        w.writerow(["node_index", "x"] + (["y"] if grid.dim == 2 else []) + names)
        for i in range(grid.n_nodes):
            w.writerow([i] + [repr(float(c)) for c in grid.coords[i]]
                       + [repr(float(columns[n][i])) for n in names])
