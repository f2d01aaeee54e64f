"""Small sparse linear-algebra kernels: Jacobi-preconditioned CG and
generalized eigenvalue iterations."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import NonConvergenceError


def pcg(A, b, x0=None, rtol=1e-12, max_iter=None):
    """Solve ``A x = b`` for SPD ``A`` by Jacobi-preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= rtol * ||b||``. Returns ``(x, iterations)``.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n + 100
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    dinv = 1.0 / A.diagonal()
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    history = []
    for k in range(1, max_iter + 1):
        rnorm = np.linalg.norm(r)
        if rnorm <= rtol * bnorm:
            return x, k - 1
        Ap = A @ p
        step = rz / (p @ Ap)
        x += step * p
        r -= step * Ap
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        history.append(rnorm / bnorm)
    if np.linalg.norm(r) <= rtol * bnorm:
        return x, max_iter
    raise NonConvergenceError(
        f"CG did not reach rtol={rtol:g} in {max_iter} iterations", history, x
    )


def _b_normalize(x, B):
    return x / np.sqrt(x @ (B @ x))


def smallest_generalized_eigenvalue(K, B, tol=1e-8, max_iter=20000, seed=0):
    """Smallest eigenvalue of the pencil ``K v = lam B v`` (K, B SPD).

    Inverse power iteration with a sparse LU of ``K``; the Rayleigh
    quotient is returned once its relative change drops below ``tol``.
    """
    K = sp.csc_matrix(K)
    B = sp.csr_matrix(B)
    lu = spla.splu(K)
    rng = np.random.default_rng(seed)
    x = _b_normalize(1.0 + 0.1 * rng.random(K.shape[0]), B)
    theta = x @ (K @ x)
    history = [theta]
    for _ in range(max_iter):
        y = lu.solve(B @ x)
        x = _b_normalize(y, B)
        theta_new = x @ (K @ x)
        history.append(theta_new)
        if abs(theta_new - theta) <= tol * abs(theta_new):
            return theta_new
        theta = theta_new
    raise NonConvergenceError(
        "inverse power iteration did not converge", history, x
    )


def largest_generalized_eigenvalue(C, B, tol=1e-10, max_iter=20000, seed=0):
    """Largest eigenvalue of ``C v = lam B v`` with C symmetric PSD, B SPD.

    Plain power iteration on ``B^{-1} C``.
    """
    C = sp.csr_matrix(C)
    lu = spla.splu(sp.csc_matrix(B))
    B = sp.csr_matrix(B)
    rng = np.random.default_rng(seed)
    x = _b_normalize(1.0 + 0.1 * rng.random(C.shape[0]), B)
    theta = x @ (C @ x)
    history = [theta]
    for _ in range(max_iter):
        y = lu.solve(C @ x)
        if not np.any(y):
            return 0.0
        x = _b_normalize(y, B)
        theta_new = x @ (C @ x)
        history.append(theta_new)
        if abs(theta_new - theta) <= tol * abs(theta_new):
            return theta_new
        theta = theta_new
    raise NonConvergenceError("power iteration did not converge", history, x)
