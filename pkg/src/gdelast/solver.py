"""SPD linear solves and the frozen-coefficient (Picard) nonlinear solve."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_residual, assemble_rhs, assemble_secant
from .gd import DENSE_LIMIT, GradientDiscretisation, GramSet, gram_set
from .laws import StressLaw


class SolverError(RuntimeError):
    def __init__(self, msg: str, residual: float = np.nan):
        self.residual = residual
        super().__init__(msg if np.isnan(residual) else f"{msg} (residual {residual:.3e})")


def solve_spd(A, b, tol: float = 1e-10, maxit: int | None = None) -> np.ndarray:
    """Solve ``A x = b`` for SPD ``A``.

    Dense Cholesky below ``DENSE_LIMIT`` unknowns, Jacobi-preconditioned
    conjugate gradients above.  Raises :class:`SolverError` if ``A`` is not
    positive definite (dense path) or CG stalls before ``tol``.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if n == 0 or not np.any(b):
        return np.zeros(n)
    if n <= DENSE_LIMIT:
        M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        try:
            return sla.cho_solve(sla.cho_factor(M), b)
        except sla.LinAlgError:
            raise SolverError("matrix is not positive definite") from None
    A = sp.csr_matrix(A)
    d = A.diagonal()
    if np.any(d <= 0):
        raise SolverError("matrix has a non-positive diagonal entry")
    precond = sp.diags(1.0 / d)
    maxit = 10 * n if maxit is None else maxit
    x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=maxit, M=precond)
    res = float(np.linalg.norm(A @ x - b) / np.linalg.norm(b))
    if info != 0 or res > 10 * tol:
        raise SolverError(f"conjugate gradients did not converge in {maxit} iterations", res)
    return x


@dataclass
class NonlinearResult:
    u: np.ndarray
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    rhs_norm: float = 0.0


def dual_norm(grams: GramSet, r: np.ndarray) -> float:
    """``sqrt(r^T G^{-1} r)``."""
    if r.size == 0:
        return 0.0
    return float(np.sqrt(max(r @ grams.solve_G(r), 0.0)))


def solve_nonlinear(
    gd: GradientDiscretisation,
    law: StressLaw,
    F=None,
    g=None,
    tol: float = 1e-10,
    maxit: int = 50,
    omega: float = 1.0,
    u0: np.ndarray | None = None,
    grams: GramSet | None = None,
    raise_on_failure: bool = True,
) -> NonlinearResult:
    """Picard iteration with the secant stiffness frozen at the current iterate.

    Each iteration solves ``A(u_k) w = b`` and sets
    ``u_{k+1} = u_k + omega (w - u_k)``.  The stopping test is
    ``|r(u_{k+1})|_* <= tol (1 + |b|_*)`` in the dual norm of ``|nabla_D .|``.
    ``residuals`` and ``norms`` hold ``|r|_*`` and ``|u|_D`` per iterate.
    """
    if not 0 < omega <= 1:
        raise ValueError("relaxation factor must lie in (0, 1]")
    g_set = grams or gram_set(gd)
    b = assemble_rhs(gd, F, g)
    bnorm = dual_norm(g_set, b)
    u = np.zeros(gd.ndof) if u0 is None else np.array(u0, dtype=float)
    out = NonlinearResult(u, 0, False, rhs_norm=bnorm)
    if gd.ndof == 0:
        out.iterations, out.converged = 1, True
        out.residuals.append(0.0)
        out.norms.append(0.0)
        return out
    threshold = tol * (1.0 + bnorm)
    for k in range(1, maxit + 1):
        A = assemble_secant(gd, law, u)
        try:
            w = solve_spd(A, b, tol=min(1e-12, tol))
        except SolverError as exc:
            raise SolverError(f"Picard step {k}: linearized stiffness not solvable ({exc})") from exc
        u = u + omega * (w - u)
        r = dual_norm(g_set, assemble_residual(gd, law, u, b))
        out.residuals.append(r)
        out.norms.append(float(np.sqrt(max(u @ (g_set.G @ u), 0.0))))
        out.u, out.iterations = u, k
        if r <= threshold:
            out.converged = True
            return out
    if raise_on_failure:
        raise SolverError(f"Picard iteration did not converge in {maxit} iterations", out.residuals[-1])
    return out
