"""Acceptance checks, one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also repeated in the terminal summary.
"""

import warnings

import numpy as np
import pytest

from conftest import CRITERIA
from gdelast import study as st
from gdelast.assembly import assemble_linear
from gdelast.cli import main
from gdelast.discretizations import (
    HuWashizuParams,
    NodalStrainParams,
    assemble_huwashizu_reference,
    assemble_nodal_strain_reference,
    build_conforming,
    build_huwashizu,
    build_nodal_strain,
    make_backend,
)
from gdelast.gd import coercivity_C, gram_set, korn_K, limitconformity_W
from gdelast.laws import DamageLaw, HenckyVonMises, broken_damage_law, check_hypotheses
from gdelast.mesh import generate_unit_square
from gdelast.tensor import IsoTensor4, general_sqrt, iso_compose, iso_sqrt

CR_REASON = "Crouzeix-Raviart loses the discrete Korn bound for the broken strain; see notes/decisions.md"


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    CRITERIA.append(line)
    print(line)
    assert ok, line


def _rel(A, R):
    return abs(A - R).max() / abs(R).max()


# 1 ---------------------------------------------------------------------------


def test_criterion_1_tensor_identities():
    rng = np.random.default_rng(2024)
    worst_root = worst_comp = worst_gen = 0.0
    for _ in range(1000):
        lam, mu, lam2, mu2 = rng.uniform(0.1, 100.0, size=4)
        C, C2 = IsoTensor4.from_lame(lam, mu), IsoTensor4.from_lame(lam2, mu2)
        tau = rng.standard_normal((2, 2))
        tau = tau + tau.T
        R = iso_sqrt(C)
        Ct = C.apply(tau)
        worst_root = max(worst_root, np.linalg.norm(R.apply(R.apply(tau)) - Ct) / np.linalg.norm(Ct))
        seq = C.apply(C2.apply(tau))
        worst_comp = max(worst_comp, np.linalg.norm(iso_compose(C, C2).apply(tau) - seq) / np.linalg.norm(seq))
        G = general_sqrt(C.general()).matrix4()
        worst_gen = max(worst_gen, np.abs(G - R.matrix4()).max() / np.abs(R.matrix4()).max())
    ok = worst_root <= 1e-12 and worst_comp <= 1e-13 and worst_gen <= 1e-12
    record(1, ok, f"root {worst_root:.2e} <= 1e-12, compose {worst_comp:.2e} <= 1e-13, general {worst_gen:.2e} <= 1e-12")


# 2 ---------------------------------------------------------------------------


def test_criterion_2_law_hypotheses():
    C = IsoTensor4.from_lame(1.0, 1.0)
    hvm = check_hypotheses(HenckyVonMises.default(), samples=10_000, seed=0)
    dmg = check_hypotheses(DamageLaw.default(C), samples=10_000, seed=0)
    broken = check_hypotheses(broken_damage_law(C), samples=10_000, seed=0)
    ok = hvm.ok and dmg.ok and not broken.ok
    record(
        2, ok,
        f"hvm violations {sum(hvm.violations.values())}, damage {sum(dmg.violations.values())}, "
        f"broken law flagged {not broken.ok} (monotonicity violations {broken.violations['monotonicity']})",
    )


# 3 ---------------------------------------------------------------------------


def test_criterion_3_equivalences():
    worst_nodal = worst_huw = 0.0
    C, D = IsoTensor4.from_lame(1.0, 1.0), IsoTensor4.from_lame(0.0, 0.5)
    for n in (2, 4):
        for kind in ("tri", "quad"):
            mesh = generate_unit_square(n, kind)
            p = NodalStrainParams(C, D)
            gd = build_nodal_strain(mesh, p)
            A = assemble_linear(gd, gd.params["C_voigt"][gd.regions])
            worst_nodal = max(worst_nodal, _rel(A, assemble_nodal_strain_reference(mesh, p)))
        mesh = generate_unit_square(n, "quad")
        for space in ("S1", "S2", "S3"):
            p = HuWashizuParams(space, lam=1.0, mu=1.0)
            A = assemble_linear(build_huwashizu(mesh, p), p.C)
            worst_huw = max(worst_huw, _rel(A, assemble_huwashizu_reference(mesh, p)))
    ok = worst_nodal <= 1e-10 and worst_huw <= 1e-10
    record(3, ok, f"nodal strain {worst_nodal:.2e}, Hu-Washizu {worst_huw:.2e} (relative, <= 1e-10)")


# 4 ---------------------------------------------------------------------------


def test_criterion_4_conformity():
    worst = 0.0
    for name, kind in (("p1", "tri"), ("q1", "quad")):
        for n in (2, 4, 8):
            for neumann in ((), ("top", "right")):
                gd = build_conforming(generate_unit_square(n, kind, neumann=neumann))
                grams = gram_set(gd)
                for tensor in st.TENSORS:
                    tau, div = st.polynomial_tensor(tensor)
                    worst = max(worst, limitconformity_W(gd, tau, div, grams=grams))
    record(4, worst <= 1e-10, f"max W {worst:.2e} <= 1e-10 over 3 tensors, P1/Q1, n in 2,4,8")


# 5, 6 ------------------------------------------------------------------------

STUDIES = {
    "p1": ("p1", "tri"),
    "nodal-tri": ("nodal", "tri"),
    "nodal-quad": ("nodal", "quad"),
    "huw:S1": ("huw:S1", "quad"),
    "huw:S2": ("huw:S2", "quad"),
    "huw:S3": ("huw:S3", "quad"),
    "cr": ("cr", "tri"),
}


@pytest.fixture(scope="module")
def studies():
    case = st.builtin_case("lin-smooth-dirichlet")
    return {k: st.convergence_study(b, case, [8, 16, 32], kind=kind) for k, (b, kind) in STUDIES.items()}


def _eocs(rows):
    return [r.eocH1 for r in rows[1:]], [r.eocL2 for r in rows[1:]]


def test_criterion_5_convergence(studies):
    h1, l2 = _eocs(studies["p1"])
    ok = all(0.9 <= e <= 1.1 for e in h1) and all(1.7 <= e <= 2.3 for e in l2)
    detail = [f"p1 eocH1 {min(h1):.3f}..{max(h1):.3f}, eocL2 {min(l2):.3f}..{max(l2):.3f}"]
    for key in ("nodal-tri", "nodal-quad", "huw:S1", "huw:S2", "huw:S3"):
        e = min(_eocs(studies[key])[0])
        ok = ok and e >= 0.9
        detail.append(f"{key} {e:.3f}")
    record(5, ok, "; ".join(detail))


@pytest.mark.xfail(strict=True, reason=CR_REASON)
def test_criterion_5_convergence_cr(studies):
    h1, _ = _eocs(studies["cr"])
    errs = ", ".join(f"{r.errH1:.3g}" for r in studies["cr"])
    record("5 (cr)", min(h1) >= 0.9, f"cr eocH1 {min(h1):.3f} >= 0.9 (errH1 {errs})")


def test_criterion_6_error_bound(studies):
    bad = [(k, r.n) for k, rows in studies.items() for r in rows if not r.errH1 <= r.bound]
    ratio = max(r.errH1 / r.bound for rows in studies.values() for r in rows)
    record(6, not bad, f"{sum(map(len, studies.values()))} rows, max errH1/bound {ratio:.3f}, failures {bad}")


# 7 ---------------------------------------------------------------------------

COERCIVITY = [("p1", "tri"), ("q1", "quad"), ("nodal", "tri"), ("nodal", "quad"), ("huw:S1", "quad"),
              ("huw:S2", "quad"), ("huw:S3", "quad")]


def _trend(backend, kind):
    name, _, space = backend.partition(":")
    Cs, Ks = [], []
    for n in (4, 8, 16):
        opts = {"space": space} if space else {}
        gd = make_backend(name, generate_unit_square(n, kind), **opts)
        grams = gram_set(gd)
        Cs.append(coercivity_C(gd, grams))
        Ks.append(korn_K(gd, grams))
    spread = lambda v: max(v) / min(v) - 1.0  # noqa: E731
    return spread(Cs), spread(Ks), min(Ks)


def test_criterion_7_coercivity_trend():
    ok, detail = True, []
    for backend, kind in COERCIVITY:
        sc, sk, kmin = _trend(backend, kind)
        ok = ok and sc < 0.1 and sk < 0.1 and kmin >= 1.0
        detail.append(f"{backend}/{kind} dC {sc:.3f} dK {sk:.3f}")
    record(7, ok, "; ".join(detail))


@pytest.mark.xfail(strict=True, reason=CR_REASON)
def test_criterion_7_coercivity_trend_cr():
    sc, sk, kmin = _trend("cr", "tri")
    record("7 (cr)", sc < 0.1 and sk < 0.1 and kmin >= 1.0, f"cr dC {sc:.3f} dK {sk:.3f} (< 0.1)")


# 8 ---------------------------------------------------------------------------


@pytest.mark.parametrize("backend, kind", [("p1", "tri"), ("q1", "quad"), ("nodal", "tri")])
def test_criterion_8_nonlinear(backend, kind):
    rows = st.convergence_study(backend, st.builtin_case("hvm-smooth"), [4, 8, 16], kind=kind, tol=1e-10, maxit=50)
    res = [r.residuals[-1] for r in rows]
    its = [r.iterations for r in rows]
    errs = [r.errH1 for r in rows]
    ok = (
        max(res) < 1e-8
        and max(its) <= 50
        and all(b < a for a, b in zip(errs, errs[1:]))
        and all(r.apriori_ok for r in rows)
    )
    record(8, ok, f"{backend}: residual {max(res):.2e} < 1e-8, iterations {its}, errH1 decreasing, a priori ok")


# 9 ---------------------------------------------------------------------------


def test_criterion_9_locking():
    rows = st.locking_experiment(("q1", "huw:S1", "huw:S2", "huw:S3"), (1.0, 1e3, 1e6), n=16)
    s = st.locking_summary(rows)
    ok = s["q1"]["growth"] > 5.0 and all(s[f"huw:{k}"]["spread"] < 2.0 for k in ("S1", "S2", "S3"))
    detail = ", ".join(f"{k} spread {v['spread']:.3f}" for k, v in s.items() if k != "q1")
    record(9, ok, f"q1 growth {s['q1']['growth']:.2f} > 5; {detail} < 2")


# 10 --------------------------------------------------------------------------

RUNS = {
    "solve": ("seed = 7\n[mesh]\nn = 4\n[backend]\nname = huw\nspace = S2\n[law]\nkind = hvm\n[case]\nname = hvm-smooth\n",
              ["solution.csv", "fields.csv", "summary.txt"]),
    "indicators": ("seed = 7\n[backend]\nname = nodal\n[study]\nn_list = 2 4\n", ["indicators.csv"]),
    "study": ("seed = 7\n[backend]\nname = q1\n[study]\nn_list = 2 4\n", ["study.csv"]),
    "check-law": ("seed = 7\n[law]\nkind = damage\nsamples = 2000\n", ["check_law.txt"]),
}


def test_criterion_10_determinism(tmp_path):
    same, count = True, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for command, (text, files) in RUNS.items():
            cfg = tmp_path / f"{command}.ini"
            cfg.write_text(text)
            outs = [tmp_path / f"{command}-{i}" for i in range(2)]
            codes = [main([command, str(cfg), "--out", str(o)]) for o in outs]
            same = same and codes == [0, 0]
            for f in files:
                same = same and (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
                count += 1
    record(10, same, f"{count} output files byte-identical across repeated runs of {len(RUNS)} commands")
