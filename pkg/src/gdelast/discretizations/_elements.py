"""Shape-function evaluation and table scatter shared by the back-ends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..mesh import Mesh
from ..quadrature import bilinear_shape, line_rule

_P1_DREF = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass
class ElementValues:
    """Basis data at reference points mapped into every cell.

    ``points``/``weights`` have shape ``(nc, nq, ...)``; ``N`` is
    ``(nc, nq, nb)`` and ``dN`` (physical gradients) ``(nc, nq, nb, 2)``.
    """

    points: np.ndarray
    weights: np.ndarray
    N: np.ndarray
    dN: np.ndarray


def p1_values(mesh: Mesh, ref_pts: np.ndarray, ref_w: np.ndarray) -> ElementValues:
    x = mesh.cell_coords
    J = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=-1)  # J[c, j, i] = dx_j / dxi_i
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.linalg.inv(J)
    nc, nq = len(x), len(ref_pts)
    pts = x[:, None, 0, :] + np.einsum("cji,qi->cqj", J, ref_pts)
    N = np.column_stack([1.0 - ref_pts[:, 0] - ref_pts[:, 1], ref_pts[:, 0], ref_pts[:, 1]])
    dN = np.einsum("ki,cij->ckj", _P1_DREF, invJ)
    return ElementValues(
        pts,
        np.abs(det)[:, None] * ref_w[None, :],
        np.broadcast_to(N, (nc, nq, 3)),
        np.broadcast_to(dN[:, None], (nc, nq, 3, 2)),
    )


def q1_values(mesh: Mesh, ref_pts: np.ndarray, ref_w: np.ndarray) -> ElementValues:
    x = mesh.cell_coords
    N, dNr = bilinear_shape(ref_pts)
    pts = np.einsum("qk,ckj->cqj", N, x)
    J = np.einsum("qki,ckj->cqji", dNr, x)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(det <= 0):
        raise ValueError("quadrilateral with non-positive Jacobian (non-convex or clockwise cell)")
    invJ = np.linalg.inv(J)
    dN = np.einsum("qki,cqij->cqkj", dNr, invJ)
    nc = len(x)
    return ElementValues(pts, det * ref_w[None, :], np.broadcast_to(N, (nc,) + N.shape), dN)


def reference_values(mesh: Mesh, ref_pts, ref_w) -> ElementValues:
    return (p1_values if mesh.kind == "tri" else q1_values)(mesh, ref_pts, ref_w)


def scatter_tables(cell_dofs: np.ndarray, ev: ElementValues, nfull: int):
    """Sparse ``Pi`` (2 rows/point) and ``grad`` (4 rows/point) over entity dofs.

    ``cell_dofs[c, k]`` is the entity id of basis ``k`` on cell ``c``; the
    vector dof of component ``i`` is ``2 * entity + i``.
    """
    nc, nq, nb = ev.N.shape
    qidx = (np.arange(nc)[:, None] * nq + np.arange(nq)[None, :])[:, :, None]  # (nc, nq, 1)
    ent = cell_dofs[:, None, :]  # (nc, 1, nb)
    qq, ee = np.broadcast_arrays(qidx, ent)
    rows, cols, vals = [], [], []
    for i in range(2):
        rows.append((2 * qq + i).ravel())
        cols.append((2 * ee + i).ravel())
        vals.append(np.asarray(ev.N).ravel())
    pi = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * nc * nq, 2 * nfull)
    )
    rows, cols, vals = [], [], []
    for i in range(2):
        for j in range(2):
            rows.append((4 * qq + 2 * i + j).ravel())
            cols.append((2 * ee + i).ravel())
            vals.append(np.asarray(ev.dN[..., j]).ravel())
    grad = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(4 * nc * nq, 2 * nfull)
    )
    return pi, grad


def neumann_points(mesh: Mesh, m: int = 3):
    """Gauss points on the Neumann edges.

    Returns ``(points, weights, normals, edge_rows, t)`` where ``edge_rows``
    indexes ``mesh.boundary_edges`` and ``t`` is the parameter from the
    edge's first to second vertex.
    """
    rows = mesh.edges_tagged("N")
    t, w = line_rule(m)
    if rows.size == 0:
        z = np.zeros((0, 2))
        return z, np.zeros(0), z, np.zeros(0, dtype=np.int64), np.zeros(0)
    ab = mesh.vertices[mesh.boundary_edges[rows]]  # (ne, 2, 2)
    a, b = ab[:, 0], ab[:, 1]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    owner = mesh.edge_cells[mesh.boundary_edge_ids[rows], 0]
    flip = np.einsum("ei,ei->e", n, 0.5 * (a + b) - mesh.barycenters[owner]) < 0
    n[flip] *= -1
    pts = a[:, None, :] + t[None, :, None] * d[:, None, :]
    ne, m_ = len(rows), len(t)
    return (
        pts.reshape(-1, 2),
        (length[:, None] * w[None, :]).ravel(),
        np.repeat(n, m_, axis=0),
        np.repeat(rows, m_),
        np.tile(t, ne),
    )


def vertex_trace(mesh: Mesh, edge_rows, t, nfull: int) -> sp.csr_matrix:
    """Trace rows of a vertex-based (P1/Q1) field at Neumann points."""
    nb = len(t)
    ab = mesh.boundary_edges[edge_rows] if nb else np.zeros((0, 2), dtype=np.int64)
    q = np.arange(nb)
    rows, cols, vals = [], [], []
    for i in range(2):
        for k, wk in ((0, 1.0 - t), (1, t)):
            rows.append(2 * q + i)
            cols.append(2 * ab[:, k] + i)
            vals.append(wk)
    if nb == 0:
        return sp.csr_matrix((0, 2 * nfull))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * nb, 2 * nfull)
    )


def free_columns(free_entities: np.ndarray) -> np.ndarray:
    ids = np.flatnonzero(free_entities)
    return np.column_stack([2 * ids, 2 * ids + 1]).ravel()


def dof_labels(free_entities: np.ndarray) -> np.ndarray:
    ids = np.flatnonzero(free_entities)
    return np.column_stack([np.repeat(ids, 2), np.tile([0, 1], len(ids))])


def block_diag(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block-diagonal matrix from an array of square blocks ``(n, k, k)``."""
    n, k, _ = blocks.shape
    indptr = np.arange(n + 1)
    indices = np.arange(n)
    return sp.bsr_matrix((np.ascontiguousarray(blocks), indices, indptr), shape=(n * k, n * k)).tocsr()
