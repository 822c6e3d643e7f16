"""Stabilized nodal-strain scheme: barycentric dual-volume projection of the gradient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp

from ..gd import DiscretisationError, GradientDiscretisation
from ..mesh import Mesh
from ..quadrature import square_fragment_rule, triangle_fragment_rule
from ..tensor import FULL_TO_VOIGT, IsoTensor4, as_general
from . import _elements as el
from .conforming import vertex_tables


@dataclass(frozen=True)
class NodalStrainParams:
    """Stiffness ``C`` and stabilization ``D`` per dual volume.

    Each may be a single tensor, a sequence with one tensor per vertex, or a
    callable ``x -> tensor`` which is averaged over every dual volume.
    """

    C: Any
    D: Any

    @classmethod
    def isotropic(cls, lam: float = 1.0, mu: float = 1.0, D_lambda: float = 0.0, D_mu: float | None = None):
        return cls(IsoTensor4.from_lame(lam, mu), IsoTensor4.from_lame(D_lambda, mu if D_mu is None else D_mu))


def _rule(mesh: Mesh):
    return triangle_fragment_rule(3) if mesh.kind == "tri" else square_fragment_rule(3)


def _base(mesh: Mesh, base: str | None) -> GradientDiscretisation:
    expected = "p1" if mesh.kind == "tri" else "q1"
    if base is not None and base.lower() != expected:
        raise DiscretisationError(f"base {base} does not match a {mesh.kind} mesh")
    pts, w, own = _rule(mesh)
    return vertex_tables(mesh, pts, w, "nodal", owners=own)


def _averaging(gd: GradientDiscretisation, nv: int):
    """Dual-volume average ``(nv x nq)``, its transpose expansion and volume areas."""
    nq = gd.nq
    R = sp.csr_matrix((np.ones(nq), (gd.regions, np.arange(nq))), shape=(nv, nq))
    areas = np.asarray(R @ gd.weights).ravel()
    if np.any(areas <= 0):
        raise DiscretisationError("dual volume with zero area")
    avg = (sp.diags(1.0 / areas) @ R @ sp.diags(gd.weights)).tocsr()
    return avg, R.T.tocsr(), areas


def _matrices(tensor, gd: GradientDiscretisation, avg, nv: int, what: str):
    """Full-coordinate 4x4 matrices of ``tensor`` per dual volume, and a projected flag."""
    if callable(tensor) and not hasattr(tensor, "matrix4"):
        vals = np.stack([as_general(tensor(x)).matrix4() for x in gd.points])
        mats = (avg @ vals.reshape(gd.nq, 16)).reshape(nv, 4, 4)
        projected = True
    elif isinstance(tensor, (list, tuple)):
        if len(tensor) != nv:
            raise DiscretisationError(f"{what}: expected {nv} tensors (one per vertex), got {len(tensor)}")
        mats = np.stack([as_general(t).matrix4() for t in tensor])
        projected = False
    else:
        mats = np.broadcast_to(as_general(tensor).matrix4(), (nv, 4, 4)).copy()
        projected = False
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    w = np.linalg.eigvalsh(mats)
    if np.any(w[:, 0] <= 0):
        raise DiscretisationError(f"{what} is not symmetric positive definite on every dual volume")
    return mats, projected


def _spd_power(mats: np.ndarray, p: float) -> np.ndarray:
    w, q = np.linalg.eigh(mats)
    return np.einsum("nij,nj,nkj->nik", q, w**p, q)


def build_nodal_strain(mesh: Mesh, params: NodalStrainParams, base: str | None = None) -> GradientDiscretisation:
    """Gradient ``Pi* grad v + C^{-1/2} D^{1/2} (grad v - Pi* grad v)`` on dual volumes.

    The conforming base space is P1 on triangles and Q1 on quadrilaterals;
    ``Pi*`` is the average over each barycentric dual volume, evaluated with
    a Gauss rule on the per-cell fragments.
    """
    gd = _base(mesh, base)
    nv = mesh.nvertices
    avg, expand, areas = _averaging(gd, nv)
    C, c_proj = _matrices(params.C, gd, avg, nv, "C")
    D, d_proj = _matrices(params.D, gd, avg, nv, "D")
    L = np.einsum("nij,njk->nik", _spd_power(C, -0.5), _spd_power(D, 0.5))

    I4 = sp.identity(4, format="csr")
    proj = (sp.kron(expand, I4) @ (sp.kron(avg, I4) @ gd.grad)).tocsr()
    grad = (proj + el.block_diag(L[gd.regions]) @ (gd.grad - proj)).tocsr()
    grad.eliminate_zeros()
    C_voigt = np.einsum("ia,nab,jb->nij", FULL_TO_VOIGT, C, FULL_TO_VOIGT)
    out = dict(gd.params)
    out.update(
        law_on="regions",
        C_voigt=C_voigt,
        dual_areas=areas,
        projected_C=c_proj,
        projected_D=d_proj,
    )
    return GradientDiscretisation(
        name="nodal",
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
        params=out,
        regions=gd.regions,
        dof_labels=gd.dof_labels,
    )


def assemble_nodal_strain_reference(mesh: Mesh, params: NodalStrainParams, base: str | None = None) -> sp.csr_matrix:
    """Projection-plus-stabilization stiffness assembled directly.

    ``int C Pi* eps(u) : Pi* eps(v) + int D (eps(u) - Pi* eps(u)) : (eps(v) - Pi* eps(v))``
    """
    gd = _base(mesh, base)
    nv = mesh.nvertices
    avg, expand, areas = _averaging(gd, nv)
    C, _ = _matrices(params.C, gd, avg, nv, "C")
    D, _ = _matrices(params.D, gd, avg, nv, "D")
    to_v = lambda m: np.einsum("ia,nab,jb->nij", FULL_TO_VOIGT, m, FULL_TO_VOIGT)  # noqa: E731
    Cv, Dv = to_v(C), to_v(D)

    I3 = sp.identity(3, format="csr")
    eps = (sp.kron(sp.identity(gd.nq), FULL_TO_VOIGT) @ gd.grad).tocsr()
    mean = (sp.kron(avg, I3) @ eps).tocsr()
    fluct = (eps - sp.kron(expand, I3) @ mean).tocsr()
    A1 = mean.T @ el.block_diag(areas[:, None, None] * Cv) @ mean
    A2 = fluct.T @ el.block_diag(gd.weights[:, None, None] * Dv[gd.regions]) @ fluct
    A = (A1 + A2).tocsr()
    return (0.5 * (A + A.T)).tocsr()
