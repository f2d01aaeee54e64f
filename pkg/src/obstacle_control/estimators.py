"""scikit-learn style wrappers around the solver and the control problem.

``ObstacleVI`` is a transformer: each row of ``X`` is a nodal source
``g`` and ``transform`` returns the corresponding obstacle states.
``OptimalControl`` fits the optimal source for the configured problem.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import assemble, build_grid
from .control import ControlProblem, OptimizerConfig, eval_cost, minimize_cost
from .exceptions import ConfigurationError
from .vi_solver import SolverConfig, solve_vi


class _ProblemParams(BaseEstimator):
    """Shared constructor parameters and problem assembly."""

    def __init__(self, dim=1, nodes_per_axis=65, gamma1="left", b=0.0, q=0.0,
                 mode="dirichlet", h=None, solver="pdas", tol=1e-10, omega=1.5,
                 mass="consistent"):
        self.dim = dim
        self.nodes_per_axis = nodes_per_axis
        self.gamma1 = gamma1
        self.b = b
        self.q = q
        self.mode = mode
        self.h = h
        self.solver = solver
        self.tol = tol
        self.omega = omega
        self.mass = mass

    def _build(self):
        if self.solver not in ("pdas", "psor"):
            raise ConfigurationError(f"unknown solver {self.solver!r}")
        grid = build_grid(self.dim, self.nodes_per_axis, self.gamma1)
        problem = assemble(grid, 0.0, self.q, self.b, self.mode, self.h, self.mass)
        config = SolverConfig(tol_comp=self.tol, omega=self.omega)
        return grid, problem, config


class ObstacleVI(TransformerMixin, _ProblemParams):
    """Solution operator g -> u_g of the obstacle problem.

    ``fit`` only assembles the operators; ``y`` is ignored. After fitting,
    ``active_masks_`` and ``iterations_`` describe the last transform.

    >>> import numpy as np
    >>> est = ObstacleVI(nodes_per_axis=9, b=1.0).fit()
    >>> U = est.transform(np.full((2, 9), 2.0))
    >>> U.shape
    (2, 9)
    """

    def fit(self, X=None, y=None):
        self.grid_, self.problem_, self.config_ = self._build()
        self.n_features_in_ = self.grid_.n_nodes
        return self

    def transform(self, X):
        check_is_fitted(self, "problem_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but ObstacleVI expects {self.n_features_in_}"
            )
        U = np.empty_like(X)
        masks, its = [], []
        for k, g in enumerate(X):
            sol = solve_vi(self.problem_.with_g(g), self.config_, self.solver)
            U[k] = sol.u
            masks.append(sol.active_mask)
            its.append(sol.iterations)
        self.active_masks_ = np.array(masks)
        self.iterations_ = np.array(its)
        return U

    def score(self, X, y=None):
        """Mean negative cost 1/2 |u_g|_H^2 over the rows (no control term)."""
        U = self.transform(X)
        return -float(np.mean([0.5 * self.problem_.norm_H(u) ** 2 for u in U]))


class OptimalControl(_ProblemParams):
    """Minimize J(g) = 1/2 |u_g|_H^2 + M/2 |g|_H^2 over the nodal source g."""

    def __init__(self, dim=1, nodes_per_axis=65, gamma1="left", b=0.0, q=0.0,
                 mode="dirichlet", h=None, solver="pdas", tol=1e-10, omega=1.5,
                 mass="consistent", M=1.0, tol_opt=1e-8, max_iter=2000):
        super().__init__(dim, nodes_per_axis, gamma1, b, q, mode, h, solver, tol, omega, mass)
        self.M = M
        self.tol_opt = tol_opt
        self.max_iter = max_iter

    def _control_problem(self):
        _, problem, config = self._build()
        opt = OptimizerConfig(tol_opt=self.tol_opt, max_iter=self.max_iter)
        return ControlProblem(problem, self.M, opt, config, self.solver)

    def fit(self, X=None, y=None):
        """``X``, if given, is a single row with the initial control."""
        cp = self._control_problem()
        g0 = None
        if X is not None:
            g0 = check_array(X, dtype=float, ensure_2d=False).ravel()
        res = minimize_cost(cp, g0)
        self.control_problem_ = cp
        self.result_ = res
        self.g_op_ = res.g_op
        self.u_op_ = res.u_op.u
        self.J_ = res.J_value
        self.converged_ = res.converged
        self.n_iter_ = res.outer_iterations
        return self

    def predict(self, X=None):
        """The optimal state; with ``X`` given, the states for each row."""
        check_is_fitted(self, "g_op_")
        if X is None:
            return self.u_op_.copy()
        X = check_array(X, dtype=float)
        p, cfg = self.control_problem_.template, self.control_problem_.solver_config
        return np.array([solve_vi(p.with_g(g), cfg, self.solver).u for g in X])

    def score(self, X=None, y=None):
        """Negative cost of the fitted control (or of each row of ``X``, averaged)."""
        check_is_fitted(self, "g_op_")
        if X is None:
            return -self.J_
        X = check_array(X, dtype=float)
        return -float(np.mean([eval_cost(self.control_problem_, g)[0] for g in X]))
