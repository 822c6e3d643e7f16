import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdelast.discretizations import build_conforming
from gdelast.laws import LinearLaw
from gdelast.mesh import generate_unit_square
from gdelast.study import (
    CASES,
    CSV_COLUMNS,
    ManufacturedCase,
    builtin_case,
    classify_bound,
    convergence_study,
    error_norms,
    indicator_row,
    locking_as_rows,
    locking_experiment,
    locking_summary,
    plot_convergence,
    plot_locking,
    polynomial_tensor,
    rows_to_csv,
    error_bound,
    verify_case,
)
from gdelast.tensor import IsoTensor4

PI = np.pi


def test_case_table():
    assert builtin_case("lin-mixed").neumann == ("top",)
    assert builtin_case("lin-smooth-dirichlet").linear
    assert not builtin_case("hvm-smooth").linear
    assert not builtin_case("damage-smooth").linear
    with pytest.raises(ValueError, match="unknown case"):
        builtin_case("bogus")


@pytest.mark.parametrize("lam, mu", [(1.0, 1.0), (3.0, 0.5)])
def test_body_force_oracle(lam, mu):
    # u = (s, s), s = sin(pi x) sin(pi y): at the centre grad div u = (-pi^2, -pi^2), lap u = -2 pi^2
    case = builtin_case("lin-smooth-dirichlet", lam, mu)
    F = case.F(np.array([[0.5, 0.5]]))[0]
    assert F == pytest.approx([(lam + 3 * mu) * PI**2] * 2, rel=1e-13)


def test_traction_oracle():
    case = builtin_case("lin-mixed", lam=2.0, mu=1.0)
    a = PI / np.sqrt(2.0)
    g = case.g(np.array([[0.25, 1.0]]), np.array([[0.0, 1.0]]))[0]
    assert g == pytest.approx([a, 2 * a], rel=1e-13)


@pytest.mark.parametrize("name", CASES)
def test_body_force_matches_differences(name):
    assert verify_case(builtin_case(name), npoints=30) <= 1e-8


def test_incompressible_is_divergence_free(rng):
    case = builtin_case("lin-incompressible")
    x = rng.uniform(size=(50, 2))
    g = case.grad(x)
    assert np.allclose(g[:, 0, 0] + g[:, 1, 1], 0.0, atol=1e-15)
    # vanishes on the boundary
    edge = np.column_stack([rng.uniform(size=10), np.zeros(10)])
    assert np.allclose(case.u(edge), 0.0)


def test_polynomial_tensors():
    x = np.array([[0.3, 0.7]])
    for name in ("const", "linear", "quadratic"):
        tau, div = polynomial_tensor(name)
        h = 1e-6
        fd = sum((tau(x + h * e)[0][:, j] - tau(x - h * e)[0][:, j]) / (2 * h) for j, e in enumerate(np.eye(2)))
        assert np.allclose(fd, div(x)[0], atol=1e-8)
    with pytest.raises(ValueError):
        polynomial_tensor("cubic")


def test_error_norms():
    mesh = generate_unit_square(3, "quad", neumann=("right", "top", "bottom"))
    gd = build_conforming(mesh)
    lin = ManufacturedCase(
        "lin",
        LinearLaw(IsoTensor4.from_lame(1.0, 1.0)),
        lambda x: np.column_stack([x[:, 0] * x[:, 1], 2 * x[:, 0]]),
        lambda x: np.stack([np.column_stack([x[:, 1], x[:, 0]]), np.column_stack([2 + 0 * x[:, 0], 0 * x[:, 0]])], 1),
        lambda x: np.zeros((len(x), 2, 2, 2)),
    )
    u = np.array([lin.u(mesh.vertices[[e]])[0, c] for e, c in gd.dof_labels])
    e1, e0 = error_norms(gd, u, lin)
    assert e1 <= 1e-13 and e0 <= 1e-13
    # the zero vector measures the exact field itself: |grad|^2 = int y^2 + x^2 + 4 = 14/3
    e1, e0 = error_norms(gd, np.zeros(gd.ndof), lin)
    assert e1 == pytest.approx(np.sqrt(14.0 / 3.0), rel=1e-12)
    assert e0 == pytest.approx(np.sqrt(1.0 / 9.0 + 4.0 / 3.0), rel=1e-12)


def test_p1_first_order():
    rows = convergence_study("p1", builtin_case("lin-smooth-dirichlet"), [8, 16], indicators=False)
    assert 1.7 <= rows[0].errH1 / rows[1].errH1 <= 2.3
    assert rows[1].eocH1 == pytest.approx(math.log2(rows[0].errH1 / rows[1].errH1))
    assert math.isnan(rows[0].eocH1)


def test_bound_and_indicators():
    rows = convergence_study("q1", builtin_case("lin-mixed"), [4, 8])
    for r in rows:
        assert r.bound_ok == "true"
        assert r.errH1 <= r.bound
    r = indicator_row("p1", 4, builtin_case("lin-smooth-dirichlet"), tensor="linear")
    assert r.W <= 1e-10 and r.S > 0 and r.C > 0 and r.K >= 1.0


def test_nonlinear_rows():
    (row,) = convergence_study("p1", builtin_case("hvm-smooth"), [4])
    assert row.iterations > 1 and row.apriori_ok
    assert row.bound_ok == "na"


def test_empty_n_list():
    with pytest.raises(ValueError, match="empty n-list"):
        convergence_study("p1", builtin_case("zero"), [])


@given(st.floats(1.0, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.1, 5.0), st.floats(1.0, 20.0))
def test_bound_monotone(K, W, S, lo, ratio):
    b = error_bound(K, W, S, lo * ratio, lo)
    assert b >= 0
    assert error_bound(2 * K, W, S, lo * ratio, lo) >= b
    assert classify_bound(b, b) == "true"
    if b > 0:
        assert classify_bound(1.04 * b, b) == "slack"
    assert classify_bound(2 * b + 1.0, b) == "false"


def test_csv_format():
    rows = convergence_study("p1", builtin_case("lin-smooth-dirichlet"), [2, 4])
    text = rows_to_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert parsed[1][CSV_COLUMNS.index("eocH1")] == ""
    assert float(parsed[2][CSV_COLUMNS.index("errH1")]) == float("%.12e" % rows[1].errH1)
    assert text == rows_to_csv(convergence_study("p1", builtin_case("lin-smooth-dirichlet"), [4, 2]))


def test_plots_deterministic(tmp_path):
    rows = convergence_study("p1", builtin_case("lin-smooth-dirichlet"), [2, 4], indicators=False)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_convergence(rows, a)
    plot_convergence(rows, b)
    assert a.read_bytes() == b.read_bytes()
    lock = locking_experiment(("q1",), (1.0, 10.0), n=2)
    plot_locking(lock, a)
    plot_locking(lock, b)
    assert a.read_bytes() == b.read_bytes()


def test_locking_helpers():
    lock = locking_experiment(("q1", "huw:S1"), (1.0, 1e4), n=4)
    summary = locking_summary(lock)
    assert set(summary) == {"q1", "huw:S1"}
    assert summary["q1"]["growth"] > summary["huw:S1"]["growth"]
    assert locking_as_rows(lock)[1].case == "lin-incompressible:lam=10000"
