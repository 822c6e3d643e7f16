"""Conforming P1 (triangles) and Q1 (quadrilaterals) gradient discretisations."""

from __future__ import annotations

import numpy as np

from ..gd import DiscretisationError, GradientDiscretisation
from ..mesh import Mesh
from ..quadrature import square_rule, triangle_rule
from . import _elements as el

ORDERS = {"p1": "tri", "q1": "quad"}


def _check_order(mesh: Mesh, order: str) -> str:
    key = order.lower().split("-")[0]
    if key not in ORDERS:
        raise DiscretisationError(f"unknown conforming order {order!r}; expected P1 or Q1")
    if ORDERS[key] != mesh.kind:
        raise DiscretisationError(f"order {order} needs a {ORDERS[key]} mesh, got {mesh.kind}")
    return key


def vertex_tables(mesh: Mesh, ref_pts, ref_w, name: str, params=None, owners=None) -> GradientDiscretisation:
    """Vertex-based space evaluated at a reference rule, Dirichlet dofs removed.

    ``owners`` (local vertex per reference point) turns into per-point
    ``regions`` holding the global vertex id, used by the nodal back-end.
    """
    ev = el.reference_values(mesh, ref_pts, ref_w)
    nv = mesh.nvertices
    pi, grad = el.scatter_tables(mesh.cells, ev, nv)
    bpts, bw, bn, erows, t = el.neumann_points(mesh)
    tr = el.vertex_trace(mesh, erows, t, nv)
    free = ~mesh.dirichlet_vertices
    cols = el.free_columns(free)
    nc, nq = ev.weights.shape
    regions = None if owners is None else mesh.cells[:, owners].ravel()
    return GradientDiscretisation(
        name=name,
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
        params=dict(params or {}, entity="vertex"),
        regions=regions,
        dof_labels=el.dof_labels(free),
    )


def build_conforming(mesh: Mesh, order: str | None = None) -> GradientDiscretisation:
    """P1 on triangles or Q1 on quadrilaterals with exact gradients.

    Parameters
    ----------
    mesh : Mesh
    order : {"P1", "Q1"}, optional
        Defaults to the order matching ``mesh.kind``.
    """
    if order is None:
        order = "p1" if mesh.kind == "tri" else "q1"
    key = _check_order(mesh, order)
    pts, w = triangle_rule() if key == "p1" else square_rule(3)
    return vertex_tables(mesh, pts, w, key)
