"""Gradient discretisations as quadrature tables, and their quality indicators.

A :class:`GradientDiscretisation` stores, for every volume quadrature point,
sparse rows giving the reconstructed function ``Pi_D v`` (2 rows) and the
discrete gradient ``nabla_D v`` (4 rows, ``g_ij = d_j v_i`` row-major) as
linear functions of the dof vector, and the same for the trace ``T_D v`` at
Neumann quadrature points.  Everything else (norms, stiffness, indicators)
is computed from these tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .tensor import FULL_TO_VOIGT

DENSE_LIMIT = 600

# full-gradient coordinates -> full coordinates of the symmetric part
_SYM4 = np.array(
    [[1.0, 0, 0, 0], [0, 0.5, 0.5, 0], [0, 0.5, 0.5, 0], [0, 0, 0, 1.0]]
)


class DiscretisationError(ValueError):
    pass


class KornKernelError(DiscretisationError):
    """eps_D vanishes on a nonzero discrete function."""


class EigenConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        self.residual = residual
        super().__init__(f"{msg} (residual {residual:.3e})")


@dataclass(frozen=True, eq=False)
class GradientDiscretisation:
    name: str
    ndof: int
    points: np.ndarray
    weights: np.ndarray
    cells: np.ndarray
    pi: sp.csr_matrix
    grad: sp.csr_matrix
    bpoints: np.ndarray
    bweights: np.ndarray
    bnormals: np.ndarray
    trace: sp.csr_matrix
    params: dict = field(default_factory=dict)
    regions: np.ndarray | None = None
    dof_labels: list | None = None

    @property
    def nq(self) -> int:
        return len(self.weights)

    @property
    def nbq(self) -> int:
        return len(self.bweights)

    @cached_property
    def strain_voigt(self) -> sp.csr_matrix:
        """Rows ``(e11, e22, sqrt2 e12)`` of ``eps_D`` per quadrature point."""
        return (sp.kron(sp.identity(self.nq), FULL_TO_VOIGT, format="csr") @ self.grad).tocsr()

    @cached_property
    def strain_full(self) -> sp.csr_matrix:
        return (sp.kron(sp.identity(self.nq), _SYM4, format="csr") @ self.grad).tocsr()

    @property
    def law_cells(self) -> np.ndarray:
        """Index used to pick a piecewise-constant law at each volume point.

        Cells for most back-ends; dual volumes (vertex ids) for nodal strain.
        """
        if self.params.get("law_on") == "regions":
            return self.regions
        return self.cells

    def evaluate(self, u: np.ndarray):
        """``(Pi_D u, nabla_D u)`` at the volume points, shapes ``(nq,2)`` and ``(nq,2,2)``."""
        return (self.pi @ u).reshape(-1, 2), (self.grad @ u).reshape(-1, 2, 2)

    def strain(self, u: np.ndarray) -> np.ndarray:
        return (self.strain_full @ u).reshape(-1, 2, 2)

    def trace_values(self, u: np.ndarray) -> np.ndarray:
        return (self.trace @ u).reshape(-1, 2)


def _weighted(rows: sp.spmatrix, w: np.ndarray, k: int) -> sp.csr_matrix:
    return (sp.diags(np.repeat(w, k)) @ rows).tocsr()


def _symmetric(A: sp.spmatrix) -> sp.csr_matrix:
    return (0.5 * (A + A.T)).tocsr()


@dataclass(frozen=True, eq=False)
class GramSet:
    G: sp.csr_matrix
    E: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix

    @cached_property
    def solve_G(self):
        return spd_factor(self.G)


def spd_factor(A):
    """Return ``b -> A^{-1} b`` for a sparse SPD matrix."""
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        c = sla.cho_factor(A.toarray())
        return lambda b: sla.cho_solve(c, b)
    return spla.factorized(sp.csc_matrix(A))


def gram_set(gd: GradientDiscretisation) -> GramSet:
    grad = gd.grad
    G = _symmetric(grad.T @ _weighted(grad, gd.weights, 4))
    eps = gd.strain_voigt
    E = _symmetric(eps.T @ _weighted(eps, gd.weights, 3))
    M = _symmetric(gd.pi.T @ _weighted(gd.pi, gd.weights, 2))
    if gd.nbq:
        B = _symmetric(gd.trace.T @ _weighted(gd.trace, gd.bweights, 2))
    else:
        B = sp.csr_matrix((gd.ndof, gd.ndof))
    if gd.ndof:
        _check_norm(G)
    return GramSet(G, E, M, B)


def _check_norm(G):
    n = G.shape[0]
    if n <= DENSE_LIMIT:
        w = np.linalg.eigvalsh(G.toarray())
        if w[0] <= 1e-12 * max(w[-1], 1e-300):
            raise DiscretisationError("||nabla_D .|| is not a norm: gradient Gram matrix is singular")
        return
    try:
        lu = spla.splu(sp.csc_matrix(G))
    except RuntimeError:
        raise DiscretisationError("||nabla_D .|| is not a norm: gradient Gram matrix is singular") from None
    d = np.abs(lu.U.diagonal())
    if d.min() <= 1e-13 * d.max():
        raise DiscretisationError("||nabla_D .|| is not a norm: gradient Gram matrix is singular")


def _check_pair(A, B, lam, x, what):
    Ax = A @ x
    r = np.linalg.norm(Ax - lam * (B @ x)) / max(np.linalg.norm(Ax), np.linalg.norm(B @ x) * abs(lam), 1e-300)
    if r > 1e-6:
        raise EigenConvergenceError(f"{what}: eigen iteration did not converge", r)


def max_generalized_eig(A, B, seed: int = 0, tol: float = 1e-10) -> float:
    """Largest ``lam`` with ``A x = lam B x``; ``B`` SPD, ``A`` symmetric PSD."""
    n = A.shape[0]
    if n == 0:
        return 0.0
    if A.nnz == 0:
        return 0.0
    if n <= DENSE_LIMIT:
        w = sla.eigh(A.toarray(), B.toarray(), eigvals_only=True, subset_by_index=[n - 1, n - 1])
        return max(float(w[0]), 0.0)
    v0 = np.random.default_rng(seed).standard_normal(n)
    solve_B = spd_factor(B)
    Minv = spla.LinearOperator((n, n), matvec=solve_B, dtype=float)
    try:
        w, x = spla.eigsh(A, k=1, M=B, Minv=Minv, which="LA", v0=v0, tol=tol, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise EigenConvergenceError("largest generalized eigenvalue", np.nan) from exc
    _check_pair(A, B, w[0], x[:, 0], "largest generalized eigenvalue")
    return max(float(w[0]), 0.0)


def min_generalized_eig(A, B, seed: int = 0, tol: float = 1e-10) -> float:
    """Smallest ``lam`` with ``A x = lam B x``; ``B`` SPD, ``A`` symmetric PSD."""
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        return float(sla.eigh(A.toarray(), B.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        lu = spla.splu(sp.csc_matrix(A))
    except RuntimeError:
        return 0.0
    d = np.abs(lu.U.diagonal())
    if d.min() <= 1e-13 * d.max():
        return 0.0
    OPinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    try:
        w, x = spla.eigsh(A, k=1, M=B, sigma=0.0, OPinv=OPinv, which="LM", v0=v0, tol=tol, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise EigenConvergenceError("smallest generalized eigenvalue", np.nan) from exc
    _check_pair(A, B, w[0], x[:, 0], "smallest generalized eigenvalue")
    return float(w[0])


def coercivity_C(gd: GradientDiscretisation, grams: GramSet | None = None, seed: int = 0) -> float:
    """Norm of ``Pi_D`` and ``T_D`` with respect to ``||nabla_D .||`` (the larger one)."""
    if gd.ndof == 0:
        return 0.0
    g = grams or gram_set(gd)
    vals = [max_generalized_eig(g.M, g.G, seed)]
    if gd.nbq:
        vals.append(max_generalized_eig(g.B, g.G, seed + 1))
    return float(np.sqrt(max(vals)))


def korn_K(gd: GradientDiscretisation, grams: GramSet | None = None, seed: int = 0) -> float:
    """Discrete Korn constant ``max ||nabla_D v|| / ||eps_D v||``."""
    if gd.ndof == 0:
        return 1.0
    g = grams or gram_set(gd)
    lam = min_generalized_eig(g.E, g.G, seed)
    if lam <= 1e-12:
        raise KornKernelError("eps_D has nontrivial kernel (rigid motions not removed by the Dirichlet part?)")
    return float(1.0 / np.sqrt(lam))


def _field_rhs(gd, phi, grad_phi):
    pv = np.asarray(phi(gd.points), dtype=float).reshape(gd.nq, 2)
    gv = np.asarray(grad_phi(gd.points), dtype=float).reshape(gd.nq, 4)
    rhs = gd.pi.T @ (gd.weights[:, None] * pv).ravel() + gd.grad.T @ (gd.weights[:, None] * gv).ravel()
    return rhs, pv, gv


def interpolate_PD(gd: GradientDiscretisation, phi, grad_phi, grams: GramSet | None = None) -> np.ndarray:
    """Minimizer of ``||Pi_D w - phi||^2 + ||nabla_D w - grad phi||^2``.

    ``phi`` and ``grad_phi`` map points ``(n, 2)`` to ``(n, 2)`` and ``(n, 2, 2)``.
    """
    if gd.ndof == 0:
        return np.zeros(0)
    g = grams or gram_set(gd)
    rhs, _, _ = _field_rhs(gd, phi, grad_phi)
    return spd_factor(g.M + g.G)(rhs)


def _l2(values, weights):
    return float(np.sqrt(np.sum(weights * np.sum(values.reshape(len(weights), -1) ** 2, axis=1))))


def consistency_S(gd: GradientDiscretisation, phi, grad_phi, grams: GramSet | None = None) -> float:
    """``||Pi_D w - phi|| + ||nabla_D w - grad phi||`` at ``w = interpolate_PD``."""
    w = interpolate_PD(gd, phi, grad_phi, grams)
    pv = np.asarray(phi(gd.points), dtype=float).reshape(gd.nq, 2)
    gv = np.asarray(grad_phi(gd.points), dtype=float).reshape(gd.nq, 4)
    rp = (gd.pi @ w).reshape(gd.nq, 2) - pv if gd.ndof else -pv
    rg = (gd.grad @ w).reshape(gd.nq, 4) - gv if gd.ndof else -gv
    return _l2(rp, gd.weights) + _l2(rg, gd.weights)


def conformity_functional(gd: GradientDiscretisation, tau, div_tau, normal_trace=None) -> np.ndarray:
    """``b(v) = int nabla_D v : tau + Pi_D v . div tau - int_N gamma_n(tau) . T_D v`` on the dofs."""
    tv = np.asarray(tau(gd.points), dtype=float).reshape(gd.nq, 4)
    dv = np.asarray(div_tau(gd.points), dtype=float).reshape(gd.nq, 2)
    b = gd.grad.T @ (gd.weights[:, None] * tv).ravel() + gd.pi.T @ (gd.weights[:, None] * dv).ravel()
    if gd.nbq:
        if normal_trace is None:
            tb = np.asarray(tau(gd.bpoints), dtype=float).reshape(gd.nbq, 2, 2)
            gn = np.einsum("qij,qj->qi", tb, gd.bnormals)
        else:
            gn = np.asarray(normal_trace(gd.bpoints, gd.bnormals), dtype=float).reshape(gd.nbq, 2)
        b = b - gd.trace.T @ (gd.bweights[:, None] * gn).ravel()
    return b


def limitconformity_W(gd: GradientDiscretisation, tau, div_tau, normal_trace=None, grams: GramSet | None = None) -> float:
    """Dual norm ``sqrt(b^T G^{-1} b)`` of the integration-by-parts defect."""
    if gd.ndof == 0:
        return 0.0
    g = grams or gram_set(gd)
    b = conformity_functional(gd, tau, div_tau, normal_trace)
    return float(np.sqrt(max(b @ g.solve_G(b), 0.0)))


def dof_norm(grams: GramSet, u: np.ndarray) -> float:
    """``||u||_D = ||nabla_D u||``."""
    return float(np.sqrt(max(u @ (grams.G @ u), 0.0)))
