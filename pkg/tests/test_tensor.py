import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdelast.tensor import (
    FULL_TO_VOIGT,
    GeneralTensor4,
    IsoTensor4,
    SymTensor2,
    TensorDomainError,
    dev2,
    from_voigt,
    general_sqrt,
    inner,
    iso_apply,
    iso_compose,
    iso_sqrt,
    operator_product,
    to_voigt,
)

lame = st.floats(0.1, 100.0)
entry = st.floats(-10.0, 10.0)
sym_tensors = st.builds(SymTensor2, entry, entry, entry)


def test_iso_apply_identity_on_unit():
    C = IsoTensor4.from_lame(1.0, 1.0)
    out = iso_apply(C, SymTensor2(1.0, 0.0, 1.0))
    # C I = (2 lam + 2 mu) I
    assert out == SymTensor2(4.0, 0.0, 4.0)


def test_iso_apply_shear():
    C = IsoTensor4.from_lame(3.0, 0.5)
    out = iso_apply(C, SymTensor2(0.0, 1.0, 0.0))
    assert out.t12 == pytest.approx(1.0) and out.t11 == 0.0 and out.t22 == 0.0


def test_iso_sqrt_closed_form():
    R = iso_sqrt(IsoTensor4.from_lame(1.0, 1.0))
    # (a, b) = (1, 2): sqrt(b)=sqrt2, ((sqrt(b + 2a) - sqrt(b)) / 2)
    assert R.b == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert R.a == pytest.approx((2.0 - np.sqrt(2.0)) / 2.0, abs=1e-15)


@pytest.mark.parametrize("lam, mu", [(1.0, -1.0), (-5.0, 1.0), (0.0, 0.0)])
def test_iso_sqrt_rejects_non_pd(lam, mu):
    with pytest.raises(TensorDomainError):
        iso_sqrt(IsoTensor4.from_lame(lam, mu))


def test_iso_sqrt_accepts_negative_lambda_when_pd():
    C = IsoTensor4.from_lame(-0.5, 1.0)
    R = iso_sqrt(C)
    tau = SymTensor2(1.0, 0.3, -2.0)
    assert np.allclose(iso_apply(R, iso_apply(R, tau)).matrix(), iso_apply(C, tau).matrix(), atol=1e-13)


def test_dev2_examples():
    assert dev2(SymTensor2(1.0, 0.0, 1.0)) == 0.0
    assert dev2(SymTensor2(1.0, 0.0, -1.0)) == pytest.approx(2.0)
    assert dev2(SymTensor2(0.0, 1.0, 0.0)) == pytest.approx(2.0)


def test_voigt_roundtrip_and_inner():
    t = SymTensor2(1.0, 2.0, 3.0)
    assert SymTensor2.from_voigt(t.voigt()) == t
    assert np.dot(t.voigt(), t.voigt()) == pytest.approx(t.inner(t))
    assert t.inner(t) == pytest.approx(1 + 8 + 9)


def test_iso_voigt_and_full_agree():
    C = IsoTensor4.from_lame(2.0, 0.7)
    g = np.array([[1.0, 2.0], [-3.0, 0.5]])
    full = (C.matrix4() @ g.ravel()).reshape(2, 2)
    assert np.allclose(full, C.apply(g))
    assert np.allclose(FULL_TO_VOIGT @ C.matrix4() @ FULL_TO_VOIGT.T, C.voigt())


def test_general_tensor_skew_default():
    G = IsoTensor4.from_lame(1.0, 1.0).general()
    assert G.skew == pytest.approx(2.0)
    w = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(G.apply(w), 2.0 * w)


def test_general_sqrt_rejects_indefinite():
    with pytest.raises(TensorDomainError):
        general_sqrt(GeneralTensor4(np.diag([1.0, -1.0, 1.0])))


def test_operator_product_identity():
    C = IsoTensor4.from_lame(1.0, 2.0)
    L = operator_product(C.power(-0.5), C.power(0.5))
    assert np.allclose(L, np.eye(4), atol=1e-14)


@given(lame, lame, sym_tensors)
def test_sqrt_squares_back(lam, mu, t):
    C = IsoTensor4.from_lame(lam, mu)
    R = iso_sqrt(C)
    ref = iso_apply(C, t).matrix()
    got = iso_apply(R, iso_apply(R, t)).matrix()
    assert np.linalg.norm(got - ref) <= 1e-12 * max(np.linalg.norm(ref), 1e-300)


@given(lame, lame, lame, lame, sym_tensors)
def test_compose_is_sequential_and_commutes(l1, m1, l2, m2, t):
    C1, C2 = IsoTensor4.from_lame(l1, m1), IsoTensor4.from_lame(l2, m2)
    seq = iso_apply(C1, iso_apply(C2, t)).matrix()
    scale = max(np.linalg.norm(seq), 1.0)
    assert np.allclose(iso_apply(iso_compose(C1, C2), t).matrix(), seq, atol=1e-13 * scale)
    assert np.allclose(iso_apply(iso_compose(C2, C1), t).matrix(), seq, atol=1e-13 * scale)


@given(lame, lame)
def test_general_sqrt_matches_iso(lam, mu):
    C = IsoTensor4.from_lame(lam, mu)
    a = general_sqrt(C.general())
    b = iso_sqrt(C).general()
    assert np.allclose(a.voigt, b.voigt, rtol=1e-12, atol=1e-12 * np.abs(b.voigt).max())
    assert a.skew == pytest.approx(b.skew, rel=1e-12)


@given(lame, lame, st.floats(-2.0, 2.0))
def test_power_exponents_add(lam, mu, p):
    C = IsoTensor4.from_lame(lam, mu)
    prod = iso_compose(C.power(p), C.power(1.0 - p))
    assert np.allclose(prod.voigt(), C.voigt(), rtol=1e-9, atol=1e-9 * C.b)


@given(st.lists(entry, min_size=3, max_size=3), st.lists(entry, min_size=3, max_size=3))
def test_voigt_inner_is_frobenius(a, b):
    A, B = from_voigt(np.array(a)), from_voigt(np.array(b))
    assert np.dot(a, b) == pytest.approx(float(inner(A, B)), abs=1e-10)
    assert np.allclose(to_voigt(A), a)


@given(sym_tensors, st.floats(-5.0, 5.0))
def test_dev2_ignores_spherical_shift(t, s):
    shifted = SymTensor2(t.t11 + s, t.t12, t.t22 + s)
    assert dev2(shifted) == pytest.approx(dev2(t), abs=1e-9)
    assert dev2(t) >= 0.0
