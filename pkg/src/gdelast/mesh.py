"""2D meshes, boundary tags, barycentric dual volumes and the mesh text format.

Text format::

    nv nc nb kind          # kind is tri or quad
    x y                    # nv lines
    v0 v1 v2 [v3]          # nc lines, zero-based, counterclockwise
    v0 v1 tag              # nb lines, tag is D or N

Tokens are whitespace separated and ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

SIDES = ("bottom", "right", "top", "left")


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _polygon_area(pts: np.ndarray) -> np.ndarray:
    """Signed shoelace area; ``pts`` has shape ``(..., k, 2)``."""
    x, y = pts[..., 0], pts[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        c = np.asarray(self.cells, dtype=np.int64)
        be = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        tags = np.asarray(self.boundary_tags, dtype="<U1").reshape(-1)
        for name, arr in (("vertices", v), ("cells", c), ("boundary_edges", be), ("boundary_tags", tags)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._validate()

    def _validate(self):
        k = {"tri": 3, "quad": 4}.get(self.kind)
        if k is None:
            raise MeshError(f"unknown cell kind {self.kind!r}")
        if self.cells.ndim != 2 or self.cells.shape[1] != k:
            raise MeshError(f"{self.kind} cells need {k} vertex ids each")
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= len(self.vertices)):
            raise MeshError("cell references a non-existent vertex")
        bad = np.flatnonzero(self.cell_areas <= 0)
        if bad.size:
            raise MeshError(f"cell {bad[0]} has negative area (clockwise or degenerate)")
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise MeshError("every boundary edge needs exactly one tag")
        if not set(self.boundary_tags.tolist()) <= {"D", "N"}:
            raise MeshError("boundary tags must be D or N")
        expected = {tuple(e) for e in np.sort(self.edges[self.edge_cells[:, 1] < 0], axis=1)}
        given = [tuple(e) for e in np.sort(self.boundary_edges, axis=1)]
        if len(set(given)) != len(given):
            raise MeshError("boundary edge listed twice")
        missing = expected - set(given)
        if missing:
            raise MeshError(f"boundary edge {sorted(missing)[0]} is untagged")
        extra = set(given) - expected
        if extra:
            raise MeshError(f"edge {sorted(extra)[0]} is not on the boundary")
        if not np.any(self.boundary_tags == "D"):
            raise MeshError("Dirichlet boundary part is empty")

    @property
    def nvertices(self) -> int:
        return len(self.vertices)

    @property
    def ncells(self) -> int:
        return len(self.cells)

    @property
    def nodes_per_cell(self) -> int:
        return self.cells.shape[1]

    @cached_property
    def cell_coords(self) -> np.ndarray:
        return self.vertices[self.cells]

    @cached_property
    def cell_areas(self) -> np.ndarray:
        return _polygon_area(self.vertices[self.cells])

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    @cached_property
    def _edge_data(self):
        k = self.nodes_per_cell
        local = np.stack([self.cells, np.roll(self.cells, -1, axis=1)], axis=-1).reshape(-1, 2)
        key = np.sort(local, axis=1)
        edges, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        cell_edges = inverse.reshape(-1, k)
        edge_cells = -np.ones((len(edges), 2), dtype=np.int64)
        owner = np.repeat(np.arange(self.ncells), k)
        for e, c in zip(inverse, owner):
            slot = 0 if edge_cells[e, 0] < 0 else 1
            if slot == 1 and edge_cells[e, 1] >= 0:
                raise MeshError(f"edge {tuple(edges[e])} shared by more than two cells")
            edge_cells[e, slot] = c
        return edges, cell_edges, edge_cells

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """Global edge id of local edge ``i`` (vertex ``i`` to ``i+1``)."""
        return self._edge_data[1]

    @property
    def edge_cells(self) -> np.ndarray:
        """Cells on each side of an edge; ``-1`` marks the boundary."""
        return self._edge_data[2]

    @cached_property
    def boundary_edge_ids(self) -> np.ndarray:
        lookup = {tuple(e): i for i, e in enumerate(self.edges)}
        return np.array([lookup[tuple(sorted(e))] for e in self.boundary_edges.tolist()], dtype=np.int64)

    def edges_tagged(self, tag: str) -> np.ndarray:
        """Boundary-edge indices (rows of ``boundary_edges``) with the given tag."""
        return np.flatnonzero(self.boundary_tags == tag)

    @cached_property
    def dirichlet_vertices(self) -> np.ndarray:
        mask = np.zeros(self.nvertices, dtype=bool)
        mask[self.boundary_edges[self.boundary_tags == "D"].ravel()] = True
        return mask

    @property
    def all_dirichlet(self) -> bool:
        return bool(np.all(self.boundary_tags == "D"))

    def is_parallelogram(self, tol: float = 1e-12) -> bool:
        if self.kind != "quad":
            return False
        x = self.cell_coords
        gap = (x[:, 1] - x[:, 0]) - (x[:, 2] - x[:, 3])
        scale = np.abs(x[:, 1] - x[:, 0]).max(axis=1)
        return bool(np.all(np.abs(gap).max(axis=1) <= tol * np.maximum(scale, 1.0)))

    def same_as(self, other: "Mesh") -> bool:
        return (
            self.kind == other.kind
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and np.array_equal(self.boundary_tags, other.boundary_tags)
        )


def generate_unit_square(n: int, kind: str = "tri", neumann: Iterable[str] = ()) -> Mesh:
    """Uniform ``n x n`` grid on the unit square.

    ``neumann`` lists the sides (``bottom``, ``right``, ``top``, ``left``)
    tagged N; the remaining sides are Dirichlet.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    neumann = set(neumann)
    unknown = neumann - set(SIDES)
    if unknown:
        raise MeshError(f"unknown side(s) {sorted(unknown)}")
    if kind not in ("tri", "quad"):
        raise MeshError(f"unknown cell kind {kind!r}")
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if kind == "quad":
                cells.append((a, b, c, d))
            else:
                cells.append((a, b, c))
                cells.append((a, c, d))
    edges, tags = [], []
    sides = {
        "bottom": [(vid(i, 0), vid(i + 1, 0)) for i in range(n)],
        "right": [(vid(n, j), vid(n, j + 1)) for j in range(n)],
        "top": [(vid(i + 1, n), vid(i, n)) for i in reversed(range(n))],
        "left": [(vid(0, j + 1), vid(0, j)) for j in reversed(range(n))],
    }
    for side in SIDES:
        edges.extend(sides[side])
        tags.extend(["N" if side in neumann else "D"] * n)
    return Mesh(vertices, np.array(cells), np.array(edges), np.array(tags), kind)


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.nvertices} {mesh.ncells} {len(mesh.boundary_edges)} {mesh.kind}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [" ".join(str(v) for v in c) for c in mesh.cells.tolist()]
    lines += [f"{a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].split()
        if text:
            rows.append((lineno, text))
    if not rows:
        raise MeshFormatError("empty mesh file")
    lineno, head = rows[0]
    if len(head) != 4:
        raise MeshFormatError("header must be 'nv nc nb kind'", lineno)
    try:
        nv, nc, nb = (int(h) for h in head[:3])
    except ValueError:
        raise MeshFormatError("header counts must be integers", lineno) from None
    kind = head[3]
    if kind not in ("tri", "quad"):
        raise MeshFormatError(f"unknown cell kind {kind!r}", lineno)
    k = 3 if kind == "tri" else 4
    body = rows[1:]
    if len(body) != nv + nc + nb:
        last = body[-1][0] if body else lineno
        raise MeshFormatError(f"expected {nv + nc + nb} data lines, found {len(body)}", last)

    def parse(chunk, width, conv, what):
        out = []
        for ln, toks in chunk:
            if len(toks) != width:
                raise MeshFormatError(f"{what} line needs {width} fields, got {len(toks)}", ln)
            try:
                out.append([conv(t) for t in toks])
            except ValueError:
                raise MeshFormatError(f"malformed {what} line", ln) from None
        return out

    verts = parse(body[:nv], 2, float, "vertex")
    cells = parse(body[nv : nv + nc], k, int, "cell")
    edge_rows = body[nv + nc :]
    edges, tags = [], []
    for ln, toks in edge_rows:
        if len(toks) != 3:
            raise MeshFormatError("boundary edge line needs 'v0 v1 tag'", ln)
        if toks[2] not in ("D", "N"):
            raise MeshFormatError(f"boundary tag must be D or N, got {toks[2]!r}", ln)
        try:
            edges.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise MeshFormatError("malformed boundary edge line", ln) from None
        tags.append(toks[2])
    cell_arr = np.array(cells, dtype=np.int64).reshape(-1, k)
    if cell_arr.size and (cell_arr.min() < 0 or cell_arr.max() >= nv):
        raise MeshFormatError("cell references a non-existent vertex")
    areas = _polygon_area(np.array(verts).reshape(-1, 2)[cell_arr])
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        raise MeshFormatError(f"cell {bad[0]} has negative area", body[nv + bad[0]][0])
    try:
        return Mesh(np.array(verts), cell_arr, np.array(edges).reshape(-1, 2), np.array(tags), kind)
    except MeshError as exc:
        raise MeshFormatError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class DualMesh:
    """Barycentric dual volumes, stored as per-cell quadrilateral fragments.

    ``fragments[c, i]`` is the polygon (vertex, next edge midpoint, cell
    barycenter, previous edge midpoint) of cell ``c`` owned by its local
    vertex ``i``.
    """

    mesh: Mesh
    fragments: np.ndarray
    fragment_areas: np.ndarray
    owners: np.ndarray
    areas: np.ndarray

    @property
    def nvolumes(self) -> int:
        return len(self.areas)

    def polygon(self, i: int) -> np.ndarray:
        """Boundary of dual volume ``i`` as an ordered point list."""
        mesh = self.mesh
        center = mesh.vertices[i]
        pts = []
        mask = self.owners == i
        for frag in self.fragments[mask]:
            pts.extend(frag[1:])
        pts = np.unique(np.round(np.array(pts), 14), axis=0)
        ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
        order = np.argsort(ang)
        pts, ang = pts[order], ang[order]
        if _on_boundary(mesh, i):
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
            start = (int(np.argmax(gaps)) + 1) % len(pts)
            pts = np.concatenate([pts[start:], pts[:start]])
            pts = np.vstack([center, pts])
        return pts


def _on_boundary(mesh: Mesh, i: int) -> bool:
    return bool(np.any(mesh.boundary_edges == i))


def build_dual(mesh: Mesh) -> DualMesh:
    x = mesh.cell_coords
    nxt = np.roll(x, -1, axis=1)
    prv = np.roll(x, 1, axis=1)
    bary = np.broadcast_to(mesh.barycenters[:, None, :], x.shape)
    frags = np.stack([x, 0.5 * (x + nxt), bary, 0.5 * (x + prv)], axis=2)
    fa = _polygon_area(frags)
    areas = np.bincount(mesh.cells.ravel(), weights=fa.ravel(), minlength=mesh.nvertices)
    return DualMesh(mesh, frags, fa, mesh.cells.copy(), areas)
