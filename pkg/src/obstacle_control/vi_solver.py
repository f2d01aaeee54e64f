"""Discrete obstacle problems as linear complementarity problems.

Find ``x >= 0`` with ``M x - f >= 0`` and ``x . (M x - f) = 0``. Two
independent solvers are provided, projected SOR and a primal-dual active
set method, so that each serves as an oracle for the other.
"""

import csv
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigurationError, InfeasibleConstraintError, NonConvergenceError
from .linalg import pcg
from .tables import write_header

SOLVERS = ("psor", "pdas")


@dataclass(frozen=True)
class SolverConfig:
    tol_comp: float = 1e-10
    max_iter: int = 200_000
    omega: float = 1.5
    inner_tol: float = 1e-12
    max_active_set_iter: int = 500

    def __post_init__(self):
        if not 0.0 < self.omega < 2.0:
            raise ConfigurationError(f"omega must lie in (0, 2), got {self.omega}")
        if self.tol_comp <= 0 or self.inner_tol <= 0:
            raise ConfigurationError("solver tolerances must be positive")
        if self.max_iter < 1 or self.max_active_set_iter < 1:
            raise ConfigurationError("iteration caps must be positive")


@dataclass(frozen=True, eq=False)
class ViSolution:
    """Nodal state with its contact diagnostics.

    ``multiplier`` is the full-space residual ``A_op u - F``; on active nodes
    it is the (nonnegative) contact force.
    """

    u: np.ndarray
    active_mask: np.ndarray
    residual_stationarity: float
    residual_complementarity: float
    iterations: int
    solver_id: str
    multiplier: np.ndarray = field(repr=False)


def complementarity_residual(x, r):
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(np.minimum(x, r))))


@numba.njit(cache=True)
def _psor_sweeps(indptr, indices, data, diag, f, x, omega, nsweeps):
    n = x.shape[0]
    step = 0.0
    for _ in range(nsweeps):
        step = 0.0
        for i in range(n):
            s = f[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j != i:
                    s -= data[k] * x[j]
            xi = (1.0 - omega) * x[i] + omega * s / diag[i]
            if xi < 0.0:
                xi = 0.0
            d = abs(xi - x[i])
            if d > step:
                step = d
            x[i] = xi
    return step


def _unconstrained_start(M, f):
    if f.size == 0:
        return np.zeros(0)
    x = spla.spsolve(sp.csc_matrix(M), f)
    return np.maximum(np.atleast_1d(x), 0.0)


def _check_lcp(M, f):
    M = sp.csr_matrix(M, dtype=float)
    f = np.asarray(f, dtype=float)
    if M.shape != (f.size, f.size):
        raise ConfigurationError(f"LCP shapes disagree: M {M.shape}, f {f.shape}")
    diag = M.diagonal()
    if np.any(diag <= 0):
        raise ConfigurationError("LCP matrix needs a positive diagonal")
    M.sort_indices()
    return M, f, diag


def psor(M, f, config=None, x0=None, block=10):
    """Projected SOR for the LCP ``(M, f)``. Returns ``(x, sweeps)``.

    Convergence is declared when the a-posteriori error estimate
    ``step * rho / (1 - rho)`` (``rho`` the observed contraction over a
    block of sweeps) is below ``tol_comp * (1 + |x|_inf)`` and the
    complementarity residual is below ``tol_comp * (1 + |f|_inf)``. A
    step already at the rounding floor counts as converged.
    """
    config = config or SolverConfig()
    M, f, diag = _check_lcp(M, f)
    n = f.size
    if n == 0:
        return np.zeros(0), 0
    x = _unconstrained_start(M, f) if x0 is None else np.maximum(np.array(x0, dtype=float), 0.0)
    fscale = 1.0 + np.max(np.abs(f))
    history = []
    prev_step = None
    sweeps = 0
    while sweeps < config.max_iter:
        step = _psor_sweeps(M.indptr, M.indices, M.data, diag, f, x, config.omega, block)
        sweeps += block
        comp = complementarity_residual(x, M @ x - f)
        history.append(comp)
        xscale = 1.0 + np.max(x)
        # steps at the rounding floor carry no contraction information
        if step <= 64 * np.finfo(float).eps * xscale and comp <= config.tol_comp * fscale:
            return x, sweeps
        if prev_step:
            rho = min((step / prev_step) ** (1.0 / block), 1.0 - 1e-12)
            err = step * rho / (1.0 - rho)
            if err <= config.tol_comp * xscale and comp <= config.tol_comp * fscale:
                return x, sweeps
        prev_step = step
        lookback = 100 // block
        if len(history) > lookback and comp > 10.0 * history[-1 - lookback] and comp > fscale:
            raise NonConvergenceError("PSOR residual diverging", history, x)
    raise NonConvergenceError(f"PSOR hit max_iter={config.max_iter}", history, x)


def pdas(M, f, config=None, x0=None):
    """Primal-dual active set method for the LCP ``(M, f)``. Returns ``(x, iterations)``.

    Active set prediction ``{i : (M x - f)_i / M_ii > x_i}``; inactive
    unknowns are obtained from ``M_II x_I = f_I`` by preconditioned CG.
    Stops as soon as the active set repeats.
    """
    config = config or SolverConfig()
    M, f, diag = _check_lcp(M, f)
    n = f.size
    if n == 0:
        return np.zeros(0), 0
    x = _unconstrained_start(M, f) if x0 is None else np.maximum(np.array(x0, dtype=float), 0.0)
    lam = M @ x - f
    seen = set()
    history = []
    for it in range(1, config.max_active_set_iter + 1):
        eps = 1e-14 * (1.0 + np.max(np.abs(x)))
        active = lam / diag - x > eps
        key = active.tobytes()
        inactive = np.flatnonzero(~active)
        x_new = np.zeros(n)
        if inactive.size:
            MII = M[inactive][:, inactive]
            x_new[inactive], _ = pcg(MII, f[inactive], x0=x[inactive], rtol=config.inner_tol)
        lam = M @ x_new - f
        lam[inactive] = 0.0
        x = x_new
        history.append(int(active.sum()))
        if it > 1 and key == prev_key:
            return np.maximum(x, 0.0), it
        if key in seen:
            raise NonConvergenceError("PDAS active set is cycling", history, x)
        seen.add(key)
        prev_key = key
    raise NonConvergenceError(
        f"PDAS hit max_active_set_iter={config.max_active_set_iter}", history, x
    )


def _solve_lcp(M, f, config, solver, x0):
    if solver == "psor":
        return psor(M, f, config, x0=x0)
    if solver == "pdas":
        return pdas(M, f, config, x0=x0)
    raise ConfigurationError(f"unknown solver {solver!r}; choose from {SOLVERS}")


def _package(problem, x_free, iterations, solver):
    n = problem.grid.n_nodes
    u = problem.b_ext.copy() if not problem.is_robin else np.zeros(n)
    u[problem.free] = x_free
    r = problem.operator @ u - problem.load()
    free = problem.free
    rf = r[free]
    # u_i = 0 with zero multiplier counts as inactive
    active = np.zeros(n, dtype=bool)
    active[free] = (x_free <= 0.0) & (rf > 0.0)
    inactive_free = free[~active[free]]
    stat = float(np.linalg.norm(r[inactive_free])) if inactive_free.size else 0.0
    return ViSolution(
        u=u,
        active_mask=active,
        residual_stationarity=stat,
        residual_complementarity=complementarity_residual(x_free, rf),
        iterations=int(iterations),
        solver_id=solver.upper(),
        multiplier=r,
    )


def solve_dirichlet_vi(problem, config=None, solver="pdas", x0=None):
    """Solve the obstacle problem with ``u = b`` on Gamma_1."""
    if problem.is_robin:
        raise ConfigurationError("solve_dirichlet_vi needs a Dirichlet-mode problem")
    if np.any(problem.b < 0):
        raise InfeasibleConstraintError("Dirichlet data b must be >= 0 on Gamma_1 for K to be nonempty")
    M, f, free = problem.lcp()
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)[free]
    x, it = _solve_lcp(M, f, config or SolverConfig(), solver, x0)
    return _package(problem, x, it, solver)


def solve_robin_vi(problem, config=None, solver="pdas", x0=None):
    """Solve the obstacle problem with the Robin condition on Gamma_1."""
    if not problem.is_robin:
        raise ConfigurationError("solve_robin_vi needs a Robin-mode problem")
    M, f, _ = problem.lcp()
    x, it = _solve_lcp(M, f, config or SolverConfig(), solver, x0)
    return _package(problem, x, it, solver)


def solve_vi(problem, config=None, solver="pdas", x0=None):
    """Dispatch on ``problem.mode``."""
    if problem.is_robin:
        return solve_robin_vi(problem, config, solver, x0)
    return solve_dirichlet_vi(problem, config, solver, x0)


def solve_unconstrained(problem, g=None):
    """Solution of the linear boundary value problem without the obstacle."""
    M, f, free = problem.lcp(g)
    u = problem.b_ext.copy() if not problem.is_robin else np.zeros(problem.grid.n_nodes)
    u[free] = np.atleast_1d(spla.spsolve(sp.csc_matrix(M), f))
    return u


def write_solution_csv(solution, grid, path, metadata=None):
    """CSV with columns ``node_index, x, (y,) u, active, multiplier``.

    ``metadata`` is written first as ``# key: value`` comment lines.
    """
    cols = ["node_index", "x"] + (["y"] if grid.dim == 2 else []) + ["u", "active", "multiplier"]
    with open(path, "w", newline="") as fh:
        write_header(fh, metadata or {})
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(grid.n_nodes):
            row = [i] + [repr(float(c)) for c in grid.coords[i]]
            row += [repr(float(solution.u[i])), int(solution.active_mask[i]),
                    repr(float(solution.multiplier[i]))]
            w.writerow(row)
