"""Statically condensed Hu-Washizu scheme on parallelogram Q1 meshes.

The discrete stress/strain space on each element is the pullback of a
reference space ``S`` spanned by entry-wise monomials in ``{1, x, y}`` on
``[-1, 1]^2``.  ``S`` splits L2-orthogonally into ``S^c`` (members with
constant trace, closed under isotropic tensors) and its complement ``S^t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..gd import DiscretisationError, GradientDiscretisation
from ..mesh import Mesh
from ..quadrature import square_rule
from ..tensor import IsoTensor4
from .conforming import vertex_tables

# atom k = 3 * entry + monomial; entries are (11, 12, 21, 22), monomials (1, x, y)
_MONO_NORM2 = np.array([4.0, 4.0 / 3.0, 4.0 / 3.0])
_DIAG = (0, 3)
SPACES = {
    "S1": {0: (0, 2), 1: (0,), 2: (0,), 3: (0, 1)},
    "S2": {0: (0, 2), 1: (0, 1, 2), 2: (0, 1, 2), 3: (0, 1)},
    "S3": {0: (0,), 1: (0, 1, 2), 2: (0, 1, 2), 3: (0,)},
}


def atom_values(xi: np.ndarray) -> np.ndarray:
    """L2-normalized atoms at reference points, shape ``(npts, 4, 12)`` (flat entry, atom)."""
    mono = np.column_stack([np.ones(len(xi)), xi[:, 0], xi[:, 1]]) / np.sqrt(_MONO_NORM2)
    out = np.zeros((len(xi), 4, 12))
    for e in range(4):
        out[:, e, 3 * e : 3 * e + 3] = mono
    return out


def iso_coefficient_map(C: IsoTensor4) -> np.ndarray:
    """Action of ``tau -> a tr(tau) I + b tau`` on atom coefficients."""
    M = C.b * np.eye(12)
    for p in range(3):
        for e in _DIAG:
            for f in _DIAG:
                M[3 * e + p, 3 * f + p] += C.a
    return M


@dataclass(frozen=True, eq=False)
class SpaceDecomposition:
    """Orthonormal bases of ``S^c`` and ``S^t`` as columns over the 12 atoms."""

    space: str
    Sc: np.ndarray
    St: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.Sc.shape[1], self.St.shape[1]

    def symmetric_dims(self) -> tuple[int, int]:
        """Dimensions of ``S^c`` and ``S^t`` intersected with symmetric tensors."""
        skew = np.zeros((3, 12))
        for p in range(3):
            skew[p, 3 + p], skew[p, 6 + p] = 1.0, -1.0

        def dim(B):
            if B.shape[1] == 0:
                return 0
            return B.shape[1] - np.linalg.matrix_rank(skew @ B, tol=1e-12)

        return dim(self.Sc), dim(self.St)

    def closure_residual(self, C: IsoTensor4) -> float:
        """Largest distance of ``C tau`` to ``S^c`` over the ``S^c`` basis."""
        if self.Sc.shape[1] == 0:
            return 0.0
        image = iso_coefficient_map(C) @ self.Sc
        coef, *_ = np.linalg.lstsq(self.Sc, image, rcond=None)
        return float(np.abs(image - self.Sc @ coef).max())

    def cross_gram(self) -> np.ndarray:
        return self.Sc.T @ self.St

    @cached_property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """``(P^c, P^t)`` acting on the 36 full-gradient values at the 3x3 Gauss points."""
        xi, w = square_rule(3)
        phi = atom_values(xi).reshape(-1, 12)
        w36 = np.repeat(w, 4)

        def proj(B):
            psi = phi @ B
            return psi @ (psi.T * w36)

        return proj(self.Sc), proj(self.St)


def decompose_Sh(space_choice: str = "S1", lam: float = 1.0, mu: float = 1.0) -> SpaceDecomposition:
    """Split ``S`` into constant-trace members and their L2 complement.

    The split does not depend on ``(lam, mu)``; they are accepted so that
    closure under ``C`` can be checked by the caller.
    """
    key = space_choice.upper()
    if key not in SPACES:
        raise DiscretisationError(f"unknown space {space_choice!r}; expected one of {sorted(SPACES)}")
    sel = np.array([3 * e + p for e, ps in sorted(SPACES[key].items()) for p in ps])
    cons = np.zeros((2, 12))
    for row, p in enumerate((1, 2)):
        for e in _DIAG:
            cons[row, 3 * e + p] = 1.0
    sc_local = sla.null_space(cons[:, sel])
    st_local = sla.null_space(sc_local.T) if sc_local.shape[1] < len(sel) else np.zeros((len(sel), 0))
    Sc = np.zeros((12, sc_local.shape[1]))
    St = np.zeros((12, st_local.shape[1]))
    Sc[sel] = sc_local
    St[sel] = st_local
    return SpaceDecomposition(key, Sc, St)


@dataclass(frozen=True)
class HuWashizuParams:
    space: str = "S1"
    theta: float | None = None
    lam: float = 1.0
    mu: float = 1.0

    @property
    def C(self) -> IsoTensor4:
        return IsoTensor4.from_lame(self.lam, self.mu)

    @property
    def theta_value(self) -> float:
        return 2.0 * self.mu if self.theta is None else float(self.theta)


def _check(mesh: Mesh, params: HuWashizuParams):
    if mesh.kind != "quad" or not mesh.is_parallelogram():
        raise DiscretisationError("Hu-Washizu needs a mesh of parallelogram quadrilaterals")
    if not params.theta_value > 0:
        raise DiscretisationError(f"theta must be positive, got {params.theta_value}")
    if not params.C.is_positive_definite():
        raise DiscretisationError("C is not positive definite")


def _base(mesh: Mesh) -> GradientDiscretisation:
    xi, w = square_rule(3)
    return vertex_tables(mesh, xi, w, "huw")


def build_huwashizu(mesh: Mesh, params: HuWashizuParams) -> GradientDiscretisation:
    """Gradient ``P^c grad v + sqrt(theta) C^{-1/2} P^t grad v`` on Q1."""
    _check(mesh, params)
    dec = decompose_Sh(params.space, params.lam, params.mu)
    Pc, Pt = dec.projectors
    Cm = params.C.power(-0.5).matrix4()
    block = Pc + np.sqrt(params.theta_value) * np.kron(np.eye(9), Cm) @ Pt
    gd = _base(mesh)
    op = sp.kron(sp.identity(mesh.ncells), sp.csr_matrix(block), format="csr")
    grad = (op @ gd.grad).tocsr()
    return GradientDiscretisation(
        name="huw",
        ndof=gd.ndof,
        points=gd.points,
        weights=gd.weights,
        cells=gd.cells,
        pi=gd.pi,
        grad=grad,
        bpoints=gd.bpoints,
        bweights=gd.bweights,
        bnormals=gd.bnormals,
        trace=gd.trace,
        params=dict(gd.params, space=dec.space, theta=params.theta_value, lam=params.lam, mu=params.mu),
        regions=None,
        dof_labels=gd.dof_labels,
    )


def assemble_huwashizu_reference(mesh: Mesh, params: HuWashizuParams) -> sp.csr_matrix:
    """``int P_S eps(u) : C_h P_S eps(v)`` with ``C_h = C P^c + theta P^t``."""
    _check(mesh, params)
    dec = decompose_Sh(params.space, params.lam, params.mu)
    Pc, Pt = dec.projectors
    C4 = params.C.matrix4()
    Ch = np.kron(np.eye(9), C4) @ Pc + params.theta_value * Pt
    gd = _base(mesh)
    nc = mesh.ncells
    Ps = sp.kron(sp.identity(nc), sp.csr_matrix(Pc + Pt), format="csr")
    Pe = (Ps @ gd.strain_full).tocsr()
    W = sp.diags(np.repeat(gd.weights, 4))
    A = (Pe.T @ W @ sp.kron(sp.identity(nc), sp.csr_matrix(Ch), format="csr") @ Pe).tocsr()
    return (0.5 * (A + A.T)).tocsr()
