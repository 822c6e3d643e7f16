"""Crouzeix-Raviart nonconforming P1 with the broken gradient."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from ..gd import DiscretisationError, GradientDiscretisation
from ..mesh import Mesh
from ..quadrature import triangle_rule
from . import _elements as el

KORN_WARNING = (
    "Crouzeix-Raviart with a Neumann boundary part: the discrete Korn inequality "
    "is not guaranteed and K_D may blow up under refinement"
)


class KornWarning(UserWarning):
    pass


def _cr_from_p1(ev: el.ElementValues) -> el.ElementValues:
    # basis of local edge k (vertex k -> k+1) is 1 - 2*lambda of the opposite vertex
    opp = [2, 0, 1]
    N = 1.0 - 2.0 * np.asarray(ev.N)[..., opp]
    dN = -2.0 * np.asarray(ev.dN)[..., opp, :]
    return el.ElementValues(ev.points, ev.weights, N, dN)


def _barycentric(mesh: Mesh, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
    x = mesh.cell_coords[cells]
    J = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=-1)
    xi = np.linalg.solve(J, (pts - x[:, 0])[..., None])[..., 0]
    return np.column_stack([1.0 - xi.sum(axis=1), xi])


def build_crouzeix_raviart(mesh: Mesh, require_full_dirichlet: bool = True) -> GradientDiscretisation:
    """Edge-midpoint dofs, cellwise gradients.

    Parameters
    ----------
    mesh : Mesh
        Triangle mesh.
    require_full_dirichlet : bool
        Refuse meshes with Neumann edges (the default). When ``False`` such
        meshes are accepted with a :class:`KornWarning`.
    """
    if mesh.kind != "tri":
        raise DiscretisationError("Crouzeix-Raviart needs a triangle mesh")
    if not mesh.all_dirichlet:
        if require_full_dirichlet:
            raise DiscretisationError(KORN_WARNING + "; pass require_full_dirichlet=False to override")
        warnings.warn(KORN_WARNING, KornWarning, stacklevel=2)
    pts, w = triangle_rule()
    ev = _cr_from_p1(el.p1_values(mesh, pts, w))
    ne = len(mesh.edges)
    pi, grad = el.scatter_tables(mesh.cell_edges, ev, ne)

    bpts, bw, bn, erows, _ = el.neumann_points(mesh)
    nb = len(bw)
    if nb:
        eid = mesh.boundary_edge_ids[erows]
        owner = mesh.edge_cells[eid, 0]
        lam = _barycentric(mesh, owner, bpts)
        phi = 1.0 - 2.0 * lam[:, [2, 0, 1]]
        ents = mesh.cell_edges[owner]
        q = np.repeat(np.arange(nb), 3)
        rows = np.concatenate([2 * q + i for i in range(2)])
        cols = np.concatenate([2 * ents.ravel() + i for i in range(2)])
        vals = np.concatenate([phi.ravel()] * 2)
        tr = sp.csr_matrix((vals, (rows, cols)), shape=(2 * nb, 2 * ne))
    else:
        tr = sp.csr_matrix((0, 2 * ne))

    free = np.ones(ne, dtype=bool)
    free[mesh.boundary_edge_ids[mesh.boundary_tags == "D"]] = False
    cols = el.free_columns(free)
    nc, nq = ev.weights.shape
    return GradientDiscretisation(
        name="cr",
        ndof=len(cols),
        points=ev.points.reshape(-1, 2),
        weights=ev.weights.ravel(),
        cells=np.repeat(np.arange(nc), nq),
        pi=pi[:, cols].tocsr(),
        grad=grad[:, cols].tocsr(),
        bpoints=bpts,
        bweights=bw,
        bnormals=bn,
        trace=tr[:, cols].tocsr(),
        params={"entity": "edge", "korn_override": not mesh.all_dirichlet},
        dof_labels=el.dof_labels(free),
    )
