import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdelast.mesh import (
    Mesh,
    MeshError,
    MeshFormatError,
    _polygon_area,
    build_dual,
    generate_unit_square,
    read_mesh,
    write_mesh,
)

kinds = st.sampled_from(["tri", "quad"])


def test_counts():
    m = generate_unit_square(1, "quad")
    assert (m.nvertices, m.ncells, len(m.boundary_edges)) == (4, 1, 4)
    m = generate_unit_square(2, "tri")
    assert (m.nvertices, m.ncells) == (9, 8)
    m = generate_unit_square(4, "quad")
    assert len(m.boundary_edges) == 16 and m.all_dirichlet


def test_neumann_tagging():
    m = generate_unit_square(3, "tri", neumann=("top",))
    top = m.vertices[m.boundary_edges[m.edges_tagged("N")]]
    assert np.all(top[..., 1] == 1.0)
    assert len(m.edges_tagged("N")) == 3
    # corner vertices of the top side stay Dirichlet through the sides
    assert m.dirichlet_vertices.sum() == 4 * 3 - 2


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_invalid_n(bad):
    with pytest.raises(MeshError):
        generate_unit_square(bad)


def test_unknown_side_and_kind():
    with pytest.raises(MeshError):
        generate_unit_square(2, neumann=("north",))
    with pytest.raises(MeshError):
        generate_unit_square(2, kind="hex")


def test_all_neumann_rejected():
    with pytest.raises(MeshError, match="Dirichlet"):
        generate_unit_square(2, neumann=("bottom", "right", "top", "left"))


def test_roundtrip(tmp_path):
    m = generate_unit_square(2, "tri", neumann=("left",))
    write_mesh(m, tmp_path / "m.txt")
    assert read_mesh(tmp_path / "m.txt").same_as(m)


def _text(m):
    lines = [f"{m.nvertices} {m.ncells} {len(m.boundary_edges)} {m.kind}"]
    lines += [f"{x} {y}" for x, y in m.vertices]
    lines += [" ".join(map(str, c)) for c in m.cells]
    lines += [f"{a} {b} {t}" for (a, b), t in zip(m.boundary_edges, m.boundary_tags)]
    return lines


def test_clockwise_cell_rejected(tmp_path):
    m = generate_unit_square(1, "quad")
    lines = _text(m)
    lines[5] = "0 3 2 1"
    (tmp_path / "m.txt").write_text("\n".join(lines))
    with pytest.raises(MeshFormatError, match="negative area") as exc:
        read_mesh(tmp_path / "m.txt")
    assert exc.value.line == 6


def test_untagged_edge_rejected(tmp_path):
    m = generate_unit_square(1, "quad")
    lines = _text(m)
    lines[0] = "4 1 3 quad"
    (tmp_path / "m.txt").write_text("\n".join(lines[:-1]))
    with pytest.raises(MeshFormatError, match="untagged"):
        read_mesh(tmp_path / "m.txt")


def test_parse_error_has_line_number(tmp_path):
    m = generate_unit_square(1, "tri")
    lines = _text(m)
    lines.insert(1, "# comment line")
    lines[3] = "0.0 abc"
    (tmp_path / "m.txt").write_text("\n".join(lines))
    with pytest.raises(MeshFormatError) as exc:
        read_mesh(tmp_path / "m.txt")
    assert exc.value.line == 4 and "line 4" in str(exc.value)


def test_comments_are_ignored(tmp_path):
    m = generate_unit_square(1, "tri")
    lines = [ln + "   # trailing" for ln in _text(m)]
    (tmp_path / "m.txt").write_text("# header comment\n" + "\n".join(lines))
    assert read_mesh(tmp_path / "m.txt").same_as(m)


def test_edges_and_owners():
    m = generate_unit_square(2, "tri")
    assert len(m.edges) == 16
    assert np.sum(m.edge_cells[:, 1] < 0) == 8
    for e, (c0, c1) in enumerate(m.edge_cells):
        for c in (c0, c1):
            if c >= 0:
                assert e in m.cell_edges[c]


def test_parallelogram_check():
    m = generate_unit_square(3, "quad")
    assert m.is_parallelogram()
    v = m.vertices.copy()
    v[5] += [0.05, 0.02]
    bent = Mesh(v, m.cells, m.boundary_edges, m.boundary_tags, "quad")
    assert not bent.is_parallelogram()
    assert not generate_unit_square(2, "tri").is_parallelogram()


def test_dual_examples():
    d = build_dual(generate_unit_square(1, "quad"))
    assert d.nvolumes == 4 and np.allclose(d.areas, 0.25, atol=1e-15)
    d = build_dual(generate_unit_square(2, "tri"))
    assert abs(d.areas.sum() - 1.0) <= 1e-12
    m = generate_unit_square(4, "quad")
    d = build_dual(m)
    inner = 6  # vertex (1, 1)
    assert np.allclose(m.vertices[inner], [0.25, 0.25])
    assert _polygon_area(d.polygon(inner)) == pytest.approx(1 / 16, abs=1e-14)


def test_boundary_dual_polygon():
    m = generate_unit_square(2, "tri")
    d = build_dual(m)
    for i in range(m.nvertices):
        assert _polygon_area(d.polygon(i)) == pytest.approx(d.areas[i], abs=1e-14)


@given(st.integers(1, 6), kinds)
def test_area_partitions(n, kind):
    m = generate_unit_square(n, kind)
    assert abs(m.cell_areas.sum() - 1.0) <= 1e-12
    d = build_dual(m)
    assert np.allclose(d.fragment_areas.sum(axis=1), m.cell_areas, rtol=1e-12)
    assert abs(d.areas.sum() - 1.0) <= 1e-12


@given(st.integers(1, 5), kinds)
def test_refinement_quarters_areas(n, kind):
    a = generate_unit_square(n, kind).cell_areas
    b = generate_unit_square(2 * n, kind).cell_areas
    assert np.allclose(b, a[0] / 4, rtol=1e-12)
