"""Grids on the unit interval / unit square and finite element assembly.

Piecewise linear (1D) and bilinear (2D) conforming elements. On a
tensor-product grid the bilinear stiffness and mass matrices are Kronecker
products of the 1D ones, which is what :func:`assemble` uses.

Boundary nodes are split into Gamma_1 (Dirichlet or Robin side) and
Gamma_2 (flux side). Nodes shared by a Gamma_1 side and a Gamma_2 side
belong to Gamma_1.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError
from .linalg import largest_generalized_eigenvalue, smallest_generalized_eigenvalue

INTERIOR, GAMMA1, GAMMA2 = 0, 1, 2

_SIDE_ALIASES = {
    "left": "left", "x=0": "left", "x0": "left",
    "right": "right", "x=1": "right", "x1": "right",
    "bottom": "bottom", "y=0": "bottom", "y0": "bottom",
    "top": "top", "y=1": "top", "y1": "top",
}
_SIDES_1D = ("left", "right")
_SIDES_2D = ("left", "right", "bottom", "top")


def _parse_sides(gamma1_spec, dim):
    if isinstance(gamma1_spec, str):
        raw = [s for s in gamma1_spec.replace("+", ",").split(",") if s.strip()]
    else:
        raw = list(gamma1_spec)
    allowed = _SIDES_1D if dim == 1 else _SIDES_2D
    sides = []
    for s in raw:
        key = _SIDE_ALIASES.get(str(s).strip().lower())
        if key is None or key not in allowed:
            raise ConfigurationError(
                f"unknown boundary side {s!r} for dim={dim}; choose from {allowed}"
            )
        if key not in sides:
            sides.append(key)
    if not sides:
        raise ConfigurationError("gamma1_spec selects no boundary nodes")
    return tuple(sides)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node grid on ``[0, L]`` or ``[0, Lx] x [0, Ly]``.

    Nodes are numbered with x varying fastest. ``labels`` holds
    ``INTERIOR``, ``GAMMA1`` or ``GAMMA2`` per node. ``gamma1_weight`` and
    ``gamma2_weight`` are trapezoidal boundary quadrature weights (point
    masses of weight 1 in 1D).
    """

    dim: int
    nodes_per_axis: tuple
    extent: tuple
    gamma1_sides: tuple
    coords: np.ndarray
    labels: np.ndarray
    gamma1_weight: np.ndarray
    gamma2_weight: np.ndarray
    axes: tuple = field(repr=False)

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def cell_size(self):
        return tuple(L / (n - 1) for L, n in zip(self.extent, self.nodes_per_axis))

    @property
    def gamma1(self):
        return np.flatnonzero(self.labels == GAMMA1)

    @property
    def gamma2(self):
        return np.flatnonzero(self.labels == GAMMA2)

    @property
    def interior(self):
        return np.flatnonzero(self.labels == INTERIOR)

    @property
    def not_gamma1(self):
        return np.flatnonzero(self.labels != GAMMA1)

    @property
    def x(self):
        return self.coords[:, 0]

    def to_dict(self):
        return {
            "dim": self.dim,
            "nodes_per_axis": list(self.nodes_per_axis),
            "extent": list(self.extent),
            "gamma1": list(self.gamma1_sides),
            "n_nodes": int(self.n_nodes),
            "n_gamma1": int(self.gamma1.size),
            "n_gamma2": int(self.gamma2.size),
        }


def build_grid(dim, nodes_per_axis, gamma1_spec="left", extent=1.0):
    """Build a uniform grid and label its boundary.

    >>> g = build_grid(1, 5, "left")
    >>> g.x.tolist(), g.gamma1.tolist(), g.gamma2.tolist()
    ([0.0, 0.25, 0.5, 0.75, 1.0], [0], [4])
    """
    if dim not in (1, 2):
        raise ConfigurationError(f"dim must be 1 or 2, got {dim!r}")
    n = (nodes_per_axis,) * dim if np.isscalar(nodes_per_axis) else tuple(nodes_per_axis)
    if len(n) != dim or any(int(k) != k or k < 3 for k in n):
        raise ConfigurationError(f"nodes_per_axis must be integers >= 3, got {nodes_per_axis!r}")
    n = tuple(int(k) for k in n)
    L = (float(extent),) * dim if np.isscalar(extent) else tuple(float(e) for e in extent)
    if len(L) != dim or any(e <= 0 for e in L):
        raise ConfigurationError(f"extent must be positive, got {extent!r}")
    sides = _parse_sides(gamma1_spec, dim)
    axes = tuple(np.linspace(0.0, Lk, nk) for Lk, nk in zip(L, n))

    if dim == 1:
        coords = axes[0][:, None]
        side_nodes = {"left": [np.array([0])], "right": [np.array([n[0] - 1])]}
        side_edges = {}
    else:
        nx, ny = n
        X, Y = np.meshgrid(axes[0], axes[1])
        coords = np.column_stack([X.ravel(), Y.ravel()])
        idx = np.arange(nx * ny).reshape(ny, nx)
        side_nodes = {
            "left": [idx[:, 0]], "right": [idx[:, -1]],
            "bottom": [idx[0, :]], "top": [idx[-1, :]],
        }
        side_edges = {
            "left": (idx[:, 0], L[1] / (ny - 1)),
            "right": (idx[:, -1], L[1] / (ny - 1)),
            "bottom": (idx[0, :], L[0] / (nx - 1)),
            "top": (idx[-1, :], L[0] / (nx - 1)),
        }

    N = coords.shape[0]
    labels = np.full(N, INTERIOR, dtype=np.int8)
    all_sides = _SIDES_1D if dim == 1 else _SIDES_2D
    for s in all_sides:
        labels[np.concatenate(side_nodes[s])] = GAMMA2
    for s in sides:
        labels[np.concatenate(side_nodes[s])] = GAMMA1

    w1 = np.zeros(N)
    w2 = np.zeros(N)
    if dim == 1:
        for s in all_sides:
            node = side_nodes[s][0][0]
            (w1 if labels[node] == GAMMA1 else w2)[node] += 1.0
    else:
        for s in all_sides:
            line, hs = side_edges[s]
            ends = np.zeros(line.size)
            ends[:-1] += hs / 2
            ends[1:] += hs / 2
            if s in sides:
                np.add.at(w1, line, ends)
            else:
                mask = labels[line] == GAMMA2
                np.add.at(w2, line[mask], ends[mask])

    for arr in (coords, labels, w1, w2):
        arr.setflags(write=False)
    return Grid(dim, n, L, sides, coords, labels, w1, w2, axes)


def _interval_matrices(n, length, mass="consistent"):
    hc = length / (n - 1)
    main = np.full(n, 2.0)
    main[[0, -1]] = 1.0
    K = sp.diags([-np.ones(n - 1), main, -np.ones(n - 1)], [-1, 0, 1]) / hc
    if mass == "lumped":
        M = sp.diags(main * hc / 2)
    else:
        M = sp.diags([np.ones(n - 1), 2 * main, np.ones(n - 1)], [-1, 0, 1]) * (hc / 6)
    return sp.csr_matrix(K), sp.csr_matrix(M)


@dataclass(frozen=True, eq=False)
class ViProblem:
    """Assembled discrete obstacle problem.

    ``A`` is the Neumann stiffness matrix, ``B_H`` the mass matrix, ``B_V =
    A + B_H`` the H^1 Gram matrix and ``C`` the (diagonal) Gamma_1 boundary
    mass. ``q_vec`` is the Gamma_2 flux load, ``b_ext`` the Gamma_1 data
    extended by zero.
    """

    grid: Grid
    A: sp.csr_matrix
    B_H: sp.csr_matrix
    B_V: sp.csr_matrix
    C: sp.csr_matrix
    q_vec: np.ndarray
    b_ext: np.ndarray
    g: np.ndarray
    q: np.ndarray
    b: np.ndarray
    mode: str = "dirichlet"
    h: float = None
    mass: str = "consistent"

    @property
    def is_robin(self):
        return self.mode == "robin"

    @property
    def operator(self):
        """Operative stiffness: ``A`` (Dirichlet) or ``A + h C`` (Robin)."""
        if self.is_robin:
            return sp.csr_matrix(self.A + self.h * self.C)
        return self.A

    def load(self, g=None):
        """Full-space right-hand side ``B_H g - q_vec (+ h C b_ext)``."""
        g = self.g if g is None else g
        F = self.B_H @ g - self.q_vec
        if self.is_robin:
            F = F + self.h * (self.C @ self.b_ext)
        return F

    def pairing(self, g, v):
        """Discrete duality pairing <g, v> matching the mode."""
        return float(v @ self.load(g))

    def energy(self, u, v):
        """Operative bilinear form a(u, v) or a_h(u, v)."""
        return float(u @ (self.operator @ v))

    @property
    def free(self):
        """Indices of the unknowns of the complementarity system."""
        if self.is_robin:
            return np.arange(self.grid.n_nodes)
        return self.grid.not_gamma1

    def lcp(self, g=None):
        """Reduced LCP data ``(M, f, free)``.

        In Dirichlet mode the Gamma_1 rows and columns are eliminated and
        the coupling to ``b`` moves to the right-hand side.
        """
        F = self.load(g)
        if self.is_robin:
            return self.operator, F, self.free
        I = self.free
        A = self.A
        M = sp.csr_matrix(A[I][:, I])
        f = F[I] - A[I] @ self.b_ext
        return M, f, I

    def with_g(self, g):
        return replace(self, g=_nodal(g, self.grid.n_nodes, "g"))

    def with_mode(self, mode, h=None):
        mode, h = _check_mode(mode, h)
        return replace(self, mode=mode, h=h)

    def norm_V(self, v):
        return float(np.sqrt(max(v @ (self.B_V @ v), 0.0)))

    def norm_H(self, v):
        return float(np.sqrt(max(v @ (self.B_H @ v), 0.0)))

    def inner_H(self, u, v):
        return float(u @ (self.B_H @ v))

    def norm_gamma1(self, v):
        return float(np.sqrt(max(v @ (self.C @ v), 0.0)))


def _nodal(values, n, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigurationError(f"{name} must have {n} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def _check_mode(mode, h):
    mode = str(mode).lower()
    if mode not in ("dirichlet", "robin"):
        raise ConfigurationError(f"mode must be 'dirichlet' or 'robin', got {mode!r}")
    if mode == "robin":
        if h is None or not np.isfinite(h) or h <= 0:
            raise ConfigurationError(f"Robin mode needs a positive h, got {h!r}")
        return mode, float(h)
    return mode, None


def assemble(grid, g=0.0, q=0.0, b=0.0, mode="dirichlet", h=None, mass="consistent"):
    """Assemble all operators of the discrete obstacle problem.

    ``g`` lives on all nodes, ``q`` on the Gamma_2 nodes and ``b`` on the
    Gamma_1 nodes; scalars are broadcast.
    """
    mode, h = _check_mode(mode, h)
    if mass not in ("consistent", "lumped"):
        raise ConfigurationError(f"mass must be 'consistent' or 'lumped', got {mass!r}")
    N = grid.n_nodes
    g = _nodal(g, N, "g")
    q = _nodal(q, grid.gamma2.size, "q")
    b = _nodal(b, grid.gamma1.size, "b")

    if grid.dim == 1:
        A, B_H = _interval_matrices(grid.nodes_per_axis[0], grid.extent[0], mass)
    else:
        Kx, Mx = _interval_matrices(grid.nodes_per_axis[0], grid.extent[0], mass)
        Ky, My = _interval_matrices(grid.nodes_per_axis[1], grid.extent[1], mass)
        A = sp.kron(My, Kx) + sp.kron(Ky, Mx)
        B_H = sp.kron(My, Mx)
    A = sp.csr_matrix(A)
    B_H = sp.csr_matrix(B_H)
    A.sort_indices()
    B_H.sort_indices()
    B_V = sp.csr_matrix(A + B_H)
    C = sp.csr_matrix(sp.diags(np.asarray(grid.gamma1_weight)))

    q_vec = np.zeros(N)
    q_vec[grid.gamma2] = grid.gamma2_weight[grid.gamma2] * q
    b_ext = np.zeros(N)
    b_ext[grid.gamma1] = b
    for arr in (g, q, b, q_vec, b_ext):
        arr.setflags(write=False)
    return ViProblem(grid, A, B_H, B_V, C, q_vec, b_ext, g, q, b, mode, h, mass)


def estimate_coercivity(problem, subspace=None, h=None, tol=1e-8, max_iter=20000):
    """Sharp discrete coercivity constant of the operative form w.r.t. ``B_V``.

    ``subspace="V0"`` removes the Gamma_1 nodes and uses ``A``;
    ``subspace="V"`` uses ``A + h C`` on all nodes (``h`` defaults to the
    problem's own Robin coefficient).
    """
    if subspace is None:
        subspace = "V" if problem.is_robin else "V0"
    if subspace == "V0":
        I = problem.grid.not_gamma1
        K = problem.A[I][:, I]
        B = problem.B_V[I][:, I]
    elif subspace == "V":
        h = problem.h if h is None else h
        if h is None or h <= 0:
            raise ConfigurationError("coercivity on V needs a positive Robin coefficient h")
        K = problem.A + h * problem.C
        B = problem.B_V
    else:
        raise ConfigurationError(f"subspace must be 'V0' or 'V', got {subspace!r}")
    return float(smallest_generalized_eigenvalue(K, B, tol=tol, max_iter=max_iter))


def trace_norm(problem):
    """Norm of the discrete trace map V -> L^2(Gamma_1)."""
    return float(np.sqrt(largest_generalized_eigenvalue(problem.C, problem.B_V)))


def export_coo(matrix, path):
    """Write ``matrix`` as ``row col value`` lines (0-based indices)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")
