"""Manufactured solutions, error norms, convergence and locking studies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .assembly import assemble_linear, assemble_rhs
from .discretizations import make_backend
from .gd import GradientDiscretisation, coercivity_C, consistency_S, gram_set, korn_K, limitconformity_W
from .laws import DamageLaw, HenckyVonMises, LinearLaw, StressLaw
from .mesh import generate_unit_square
from .solver import solve_nonlinear, solve_spd
from .tensor import IsoTensor4

CASES = ("lin-smooth-dirichlet", "lin-mixed", "hvm-smooth", "damage-smooth", "lin-incompressible", "zero")
TENSORS = ("const", "linear", "quadratic")
CSV_COLUMNS = ("backend", "case", "n", "h", "dofs", "errH1", "errL2", "S", "W", "C", "K", "eocH1", "eocL2", "bound_ok")
PI = np.pi


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """Exact displacement with the load and traction it induces.

    ``u``, ``grad`` and ``hess`` map points ``(n, 2)`` to arrays of shape
    ``(n, 2)``, ``(n, 2, 2)`` (``grad[:, i, j] = d_j u_i``) and
    ``(n, 2, 2, 2)`` (``hess[:, i, j, k] = d_j d_k u_i``).
    """

    name: str
    law: StressLaw
    u: Callable
    grad: Callable
    hess: Callable
    neumann: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def linear(self) -> bool:
        return self.law.is_linear

    def strain(self, x):
        grad = self.grad(x)
        return 0.5 * (grad + np.swapaxes(grad, -1, -2))

    def stress(self, x):
        return self.law.stress(self.strain(x))

    def F(self, x):
        """``-div sigma(eps(u))`` by the chain rule through the law's tangent."""
        eps = self.strain(x)
        hess = self.hess(x)
        out = np.zeros((len(x), 2))
        for j in range(2):
            d = hess[:, :, :, j]
            ds = self.law.tangent(eps, 0.5 * (d + np.swapaxes(d, -1, -2)))
            out -= ds[:, :, j]
        return out

    def g(self, x, normals):
        return np.einsum("qij,qj->qi", self.stress(x), normals)


def _sines(ky: float):
    """``s = sin(pi x) sin(ky pi y)`` and its derivatives."""

    def s(x):
        return np.sin(PI * x[:, 0]) * np.sin(ky * PI * x[:, 1])

    def ds(x):
        X, Y = PI * x[:, 0], ky * PI * x[:, 1]
        return np.column_stack([PI * np.cos(X) * np.sin(Y), ky * PI * np.sin(X) * np.cos(Y)])

    def d2s(x):
        X, Y = PI * x[:, 0], ky * PI * x[:, 1]
        v = np.sin(X) * np.sin(Y)
        xy = ky * PI**2 * np.cos(X) * np.cos(Y)
        return np.stack([np.column_stack([-(PI**2) * v, xy]), np.column_stack([xy, -((ky * PI) ** 2) * v])], axis=1)

    return s, ds, d2s


def _diagonal_field(ky: float):
    s, ds, d2s = _sines(ky)
    return (
        lambda x: np.column_stack([s(x), s(x)]),
        lambda x: np.stack([ds(x), ds(x)], axis=1),
        lambda x: np.stack([d2s(x), d2s(x)], axis=1),
    )


def _stream_field():
    """``u = (d_y psi, -d_x psi)`` with ``psi = x^2 (1-x)^2 y^2 (1-y)^2``."""

    def p(t):
        return (t * (1 - t)) ** 2

    def p1(t):
        return 2 * t * (1 - t) * (1 - 2 * t)

    def p2(t):
        return 2 * (1 - 6 * t + 6 * t**2)

    def p3(t):
        return 12 * (2 * t - 1)

    def u(x):
        a, b = x[:, 0], x[:, 1]
        return np.column_stack([p(a) * p1(b), -p1(a) * p(b)])

    def grad(x):
        a, b = x[:, 0], x[:, 1]
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = p1(a) * p1(b)
        g[:, 0, 1] = p(a) * p2(b)
        g[:, 1, 0] = -p2(a) * p(b)
        g[:, 1, 1] = -p1(a) * p1(b)
        return g

    def hess(x):
        a, b = x[:, 0], x[:, 1]
        h = np.empty((len(x), 2, 2, 2))
        h[:, 0, 0, 0] = p2(a) * p1(b)
        h[:, 0, 0, 1] = h[:, 0, 1, 0] = p1(a) * p2(b)
        h[:, 0, 1, 1] = p(a) * p3(b)
        h[:, 1, 0, 0] = -p3(a) * p(b)
        h[:, 1, 0, 1] = h[:, 1, 1, 0] = -p2(a) * p1(b)
        h[:, 1, 1, 1] = -p1(a) * p2(b)
        return h

    return u, grad, hess


def _zero_field():
    return (
        lambda x: np.zeros((len(x), 2)),
        lambda x: np.zeros((len(x), 2, 2)),
        lambda x: np.zeros((len(x), 2, 2, 2)),
    )


def builtin_case(name: str, lam: float = 1.0, mu: float = 1.0, law: StressLaw | None = None) -> ManufacturedCase:
    """Named manufactured case on the unit square.

    ``lam``/``mu`` set the linear stiffness, the damage base stiffness, or
    ``(lam0, mu0)`` of the Hencky-von Mises law (``mu_inf = mu / 2``).
    An explicit ``law`` overrides the default one.
    """
    C = IsoTensor4.from_lame(lam, mu)
    neumann = ()
    if name == "lin-smooth-dirichlet":
        fields, default = _diagonal_field(1.0), LinearLaw(C)
    elif name == "lin-mixed":
        fields, default, neumann = _diagonal_field(0.5), LinearLaw(C), ("top",)
    elif name == "hvm-smooth":
        fields, default = _diagonal_field(1.0), HenckyVonMises.default(lam, mu, 0.5 * mu)
    elif name == "damage-smooth":
        fields, default = _diagonal_field(1.0), DamageLaw.default(C)
    elif name == "lin-incompressible":
        fields, default = _stream_field(), LinearLaw(C)
    elif name == "zero":
        fields, default = _zero_field(), LinearLaw(C)
    else:
        raise ValueError(f"unknown case {name!r}; expected one of {', '.join(CASES)}")
    return ManufacturedCase(name, law or default, *fields, neumann=neumann, params={"lam": lam, "mu": mu})


def _poly(entries, divergence):
    def tau(x):
        X, Y = x[:, 0], x[:, 1]
        return np.stack([np.stack(row, axis=-1) for row in entries(X, Y)], axis=1)

    def div(x):
        return np.column_stack(divergence(x[:, 0], x[:, 1]))

    return tau, div


POLY_TENSORS = {
    "const": _poly(lambda X, Y: [[1 + 0 * X, 2 + 0 * X], [-1 + 0 * X, 3 + 0 * X]], lambda X, Y: [0 * X, 0 * X]),
    "linear": _poly(lambda X, Y: [[X + 2 * Y, X - Y], [3 * X, Y]], lambda X, Y: [0 * X, 4 + 0 * X]),
    "quadratic": _poly(
        lambda X, Y: [[X**2, X * Y], [Y**2, X * Y + X**2]], lambda X, Y: [3 * X, X]
    ),
}


def polynomial_tensor(name: str):
    """``(tau, div tau)`` of a named polynomial tensor field (rows are ``tau[:, i, :]``)."""
    try:
        return POLY_TENSORS[name]
    except KeyError:
        raise ValueError(f"unknown tensor {name!r}; expected one of {', '.join(POLY_TENSORS)}") from None


def verify_case(case: ManufacturedCase, npoints: int = 20, seed: int = 0, h: float = 1e-5) -> float:
    """Largest relative gap between ``F`` and central differences of ``-div sigma``."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 0.95, size=(npoints, 2))
    fd = np.zeros((npoints, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd -= (case.stress(x + e)[:, :, j] - case.stress(x - e)[:, :, j]) / (2 * h)
    ref = case.F(x)
    return float(np.abs(fd - ref).max() / max(np.abs(ref).max(), 1.0))


def _l2(values, weights):
    return float(np.sqrt(np.sum(weights * np.sum(values.reshape(len(weights), -1) ** 2, axis=1))))


def error_norms(gd: GradientDiscretisation, u: np.ndarray, case: ManufacturedCase) -> tuple[float, float]:
    """``(|grad u - nabla_D u_D|, |u - Pi_D u_D|)`` in L2 by volume quadrature."""
    pu, gu = gd.evaluate(u) if gd.ndof else (np.zeros((gd.nq, 2)), np.zeros((gd.nq, 2, 2)))
    return _l2(case.grad(gd.points) - gu, gd.weights), _l2(case.u(gd.points) - pu, gd.weights)


def load_norms(gd: GradientDiscretisation, case: ManufacturedCase) -> tuple[float, float]:
    """``(|F|_{L2}, |g|_{L2(Gamma_N)})`` by quadrature."""
    f = _l2(case.F(gd.points), gd.weights)
    g = _l2(case.g(gd.bpoints, gd.bnormals), gd.bweights) if gd.nbq else 0.0
    return f, g


@dataclass
class ConvergenceRow:
    backend: str
    case: str
    n: int
    h: float
    dofs: int
    errH1: float = math.nan
    errL2: float = math.nan
    S: float = math.nan
    W: float = math.nan
    C: float = math.nan
    K: float = math.nan
    eocH1: float = math.nan
    eocL2: float = math.nan
    bound: float = math.nan
    bound_ok: str = "na"
    iterations: int = 0
    residuals: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    apriori: float = math.nan
    apriori_ok: bool | None = None
    u: np.ndarray | None = field(default=None, repr=False)


def error_bound(K: float, W: float, S: float, sigma_upper: float, sigma_lower: float) -> float:
    """Right side of the linear error estimate with the sqrt(2) consistency slack."""
    return (K**2 / sigma_lower) * W + (K**2 * sigma_upper / sigma_lower + 1.0) * math.sqrt(2.0) * S


def classify_bound(err: float, bound: float, slack: float = 0.05) -> str:
    if err <= bound:
        return "true"
    if err <= (1.0 + slack) * bound:
        return "slack"
    return "false"


def build_backend(backend: str, n: int, case: ManufacturedCase, kind: str | None = None, **opts):
    """Mesh and back-end for one row; ``backend`` may carry a space, e.g. ``huw:S2``."""
    name, _, space = backend.partition(":")
    if kind is None:
        kind = "tri" if name in ("p1", "cr") else "quad"
    mesh = generate_unit_square(n, kind, neumann=case.neumann)
    opts = dict(opts)
    opts.setdefault("lam", case.params.get("lam", 1.0))
    opts.setdefault("mu", case.params.get("mu", 1.0))
    if space:
        opts["space"] = space
    return mesh, make_backend(name, mesh, **opts)


def solve_case(gd: GradientDiscretisation, case: ManufacturedCase, tol: float = 1e-10, maxit: int = 50,
               omega: float = 1.0, grams=None):
    """Discrete solution of ``case``: one SPD solve if linear, Picard otherwise."""
    if case.linear:
        A = assemble_linear(gd, case.law)
        b = assemble_rhs(gd, case.F, case.g)
        return solve_spd(A, b, tol=min(tol, 1e-10)), None
    res = solve_nonlinear(gd, case.law, case.F, case.g, tol=tol, maxit=maxit, omega=omega, grams=grams)
    return res.u, res


def indicator_row(backend: str, n: int, case: ManufacturedCase, seed: int = 0, kind=None, tensor=None,
                  **opts) -> ConvergenceRow:
    """Indicators ``S, W, C, K`` only (no solve).

    ``S`` uses the exact displacement of ``case``; ``W`` uses its stress, or
    the named polynomial ``tensor`` when given.
    """
    mesh, gd = build_backend(backend, n, case, kind, **opts)
    row = ConvergenceRow(backend, case.name, n, 1.0 / n, gd.ndof)
    _fill_indicators(row, gd, gram_set(gd), case, seed, tensor)
    return row


def _fill_indicators(row, gd, grams, case, seed, tensor=None):
    row.S = consistency_S(gd, case.u, case.grad, grams)
    if tensor is None:
        row.W = limitconformity_W(gd, case.stress, lambda x: -case.F(x), lambda x, nrm: case.g(x, nrm), grams)
    else:
        tau, div = polynomial_tensor(tensor)
        row.W = limitconformity_W(gd, tau, div, grams=grams)
    row.C = coercivity_C(gd, grams, seed)
    row.K = korn_K(gd, grams, seed)


def convergence_study(backend: str, case: ManufacturedCase, n_list, seed: int = 0, kind: str | None = None,
                      indicators: bool = True, tol: float = 1e-10, maxit: int = 50, omega: float = 1.0,
                      **opts) -> list[ConvergenceRow]:
    """One row per ``n``; linear cases also get the error-bound verdict.

    ``eocH1``/``eocL2`` compare each row with the previous one,
    ``log(e_prev / e) / log(h_prev / h)``.
    """
    n_list = list(n_list)
    if not n_list:
        raise ValueError("empty n-list")
    rows = []
    for n in sorted(n_list):
        mesh, gd = build_backend(backend, n, case, kind, **opts)
        grams = gram_set(gd)
        u, res = solve_case(gd, case, tol, maxit, omega, grams)
        row = ConvergenceRow(backend, case.name, n, 1.0 / n, gd.ndof, u=u)
        row.errH1, row.errL2 = error_norms(gd, u, case)
        if indicators:
            _fill_indicators(row, gd, grams, case, seed)
        law = case.law
        if case.linear and indicators:
            row.bound = error_bound(row.K, row.W, row.S, law.sigma_upper, law.sigma_lower)
            row.bound_ok = classify_bound(row.errH1, row.bound)
        if res is not None:
            row.iterations, row.residuals, row.norms = res.iterations, res.residuals, res.norms
            if indicators:
                f, g = load_norms(gd, case)
                row.apriori = row.C * row.K**2 / law.sigma_lower * (f + g)
                row.apriori_ok = bool(max(res.norms) <= 1.05 * row.apriori)
        if rows:
            prev = rows[-1]
            scale = math.log(prev.h / row.h)
            row.eocH1 = _eoc(prev.errH1, row.errH1, scale)
            row.eocL2 = _eoc(prev.errL2, row.errL2, scale)
        rows.append(row)
    return rows


def _eoc(e0, e1, scale):
    if e0 > 0 and e1 > 0:
        return math.log(e0 / e1) / scale
    return math.nan


@dataclass
class LockingRow:
    backend: str
    lam: float
    n: int
    dofs: int
    errH1: float
    errL2: float


def locking_experiment(backends=("q1", "nodal", "huw:S1", "huw:S2", "huw:S3"), lambdas=(1.0, 1e3, 1e6),
                       n: int = 16, mu: float = 1.0, **opts) -> list[LockingRow]:
    """``errH1`` of the divergence-free case per back-end and ``lambda``."""
    rows = []
    for backend in backends:
        for lam in lambdas:
            case = builtin_case("lin-incompressible", lam=lam, mu=mu)
            _, gd = build_backend(backend, n, case, **opts)
            u, _ = solve_case(gd, case)
            e1, e0 = error_norms(gd, u, case)
            rows.append(LockingRow(backend, float(lam), n, gd.ndof, e1, e0))
    return rows


def locking_summary(rows: list[LockingRow]) -> dict:
    """Per back-end ratio ``max errH1 / min errH1`` and ``errH1(lam_max) / errH1(lam_min)``."""
    out = {}
    for name in dict.fromkeys(r.backend for r in rows):
        sub = sorted((r for r in rows if r.backend == name), key=lambda r: r.lam)
        errs = [r.errH1 for r in sub]
        out[name] = {"spread": max(errs) / min(errs), "growth": errs[-1] / errs[0]}
    return out


def locking_as_rows(rows: list[LockingRow]) -> list[ConvergenceRow]:
    return [
        ConvergenceRow(r.backend, f"lin-incompressible:lam={r.lam:g}", r.n, 1.0 / r.n, r.dofs, r.errH1, r.errL2)
        for r in rows
    ]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or not math.isfinite(v):
        return ""
    return "%.12e" % v


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def plot_convergence(rows, path) -> None:
    """Log-log plot of ``errH1`` against ``h`` per back-end, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "gdelast", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name in dict.fromkeys(r.backend for r in rows):
            sub = sorted((r for r in rows if r.backend == name), key=lambda r: r.h)
            ax.loglog([r.h for r in sub], [r.errH1 for r in sub], "o-", label=name)
        ax.set_xlabel("h")
        ax.set_ylabel("errH1")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def plot_locking(rows: list[LockingRow], path) -> None:
    """Log-log plot of ``errH1`` against ``lambda`` per back-end, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "gdelast", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name in dict.fromkeys(r.backend for r in rows):
            sub = sorted((r for r in rows if r.backend == name), key=lambda r: r.lam)
            ax.loglog([r.lam for r in sub], [r.errH1 for r in sub], "o-", label=name)
        ax.set_xlabel("lambda")
        ax.set_ylabel("errH1")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


__all__ = [
    "CASES",
    "CSV_COLUMNS",
    "ConvergenceRow",
    "LockingRow",
    "ManufacturedCase",
    "builtin_case",
    "classify_bound",
    "convergence_study",
    "error_norms",
    "indicator_row",
    "load_norms",
    "locking_as_rows",
    "locking_experiment",
    "locking_summary",
    "plot_convergence",
    "plot_locking",
    "polynomial_tensor",
    "rows_to_csv",
    "solve_case",
    "error_bound",
    "verify_case",
    "write_csv",
]
