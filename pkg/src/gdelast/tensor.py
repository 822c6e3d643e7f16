"""Symmetric 2x2 tensors and 4th-order elasticity tensors in two dimensions.

Tensor fields are handled as numpy arrays of shape ``(..., 2, 2)``.  Operators
are stored in two coordinate systems:

* Voigt coordinates ``(t11, t22, sqrt(2) t12)`` of a symmetric tensor, in which
  the Euclidean dot product equals the Frobenius product ``tau : omega``;
* full-gradient coordinates ``(g11, g12, g21, g22)`` (row-major flattening of a
  general 2x2 matrix), used by discrete gradients that are not symmetric.

A 4th-order tensor that maps symmetric tensors to symmetric tensors and
commutes with transposition is block diagonal on ``sym + skew``; it is fully
described by its 3x3 Voigt block and one scalar acting on the skew part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIM = 2
SQRT2 = np.sqrt(2.0)

# rows: orthonormal basis (E11, E22, (E12+E21)/sqrt2, (E12-E21)/sqrt2) in full coordinates
_SYM_SKEW = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 1.0 / SQRT2, 1.0 / SQRT2, 0.0],
        [0.0, 1.0 / SQRT2, -1.0 / SQRT2, 0.0],
    ]
)
#: full-gradient coordinates -> Voigt coordinates of the symmetric part
FULL_TO_VOIGT = _SYM_SKEW[:3].copy()


class TensorDomainError(ValueError):
    """Raised when an operation needs a positive definite tensor and gets something else."""


@dataclass(frozen=True)
class SymTensor2:
    """A symmetric 2x2 tensor; only the upper triangle is stored."""

    t11: float
    t12: float
    t22: float

    @classmethod
    def from_matrix(cls, m) -> "SymTensor2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    @classmethod
    def from_voigt(cls, v) -> "SymTensor2":
        return cls(float(v[0]), float(v[2]) / SQRT2, float(v[1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.t11, self.t12], [self.t12, self.t22]])

    def voigt(self) -> np.ndarray:
        return np.array([self.t11, self.t22, SQRT2 * self.t12])

    @property
    def trace(self) -> float:
        return self.t11 + self.t22

    def inner(self, other: "SymTensor2") -> float:
        return self.t11 * other.t11 + 2.0 * self.t12 * other.t12 + self.t22 * other.t22

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))


def _as_array(tau):
    if isinstance(tau, SymTensor2):
        return tau.matrix(), True
    return np.asarray(tau, dtype=float), False


def _wrap(result, was_sym):
    return SymTensor2.from_matrix(result) if was_sym else result


def trace(tau: np.ndarray) -> np.ndarray:
    return tau[..., 0, 0] + tau[..., 1, 1]


def inner(tau: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Frobenius product over the last two axes."""
    return np.einsum("...ij,...ij->...", tau, omega)


def sym(tau: np.ndarray) -> np.ndarray:
    return 0.5 * (tau + np.swapaxes(tau, -1, -2))


def to_voigt(tau: np.ndarray) -> np.ndarray:
    """Voigt coordinates of the symmetric part of ``tau`` (shape ``(..., 3)``)."""
    tau = np.asarray(tau, dtype=float)
    out = np.empty(tau.shape[:-2] + (3,))
    out[..., 0] = tau[..., 0, 0]
    out[..., 1] = tau[..., 1, 1]
    out[..., 2] = (tau[..., 0, 1] + tau[..., 1, 0]) / SQRT2
    return out


def from_voigt(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape[:-1] + (2, 2))
    out[..., 0, 0] = v[..., 0]
    out[..., 1, 1] = v[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = v[..., 2] / SQRT2
    return out


def dev2(tau) -> np.ndarray | float:
    """Squared Frobenius norm of the deviator ``tau - tr(tau)/2 I``."""
    t, was_sym = _as_array(tau)
    d = t - 0.5 * trace(t)[..., None, None] * np.eye(DIM)
    out = inner(d, d)
    return float(out) if was_sym or np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IsoTensor4:
    """Isotropic tensor ``tau -> a tr(tau) I + b tau``.

    With Lamé coefficients the pair is ``(a, b) = (lambda, 2 mu)``.
    """

    a: float
    b: float

    @classmethod
    def from_lame(cls, lam: float, mu: float) -> "IsoTensor4":
        return cls(float(lam), 2.0 * float(mu))

    @classmethod
    def identity(cls) -> "IsoTensor4":
        return cls(0.0, 1.0)

    @property
    def lame(self) -> tuple[float, float]:
        return self.a, 0.5 * self.b

    def eigenvalues(self) -> tuple[float, float]:
        """(trace eigenvalue, deviatoric/shear eigenvalue)."""
        return self.a * DIM + self.b, self.b

    def is_positive_definite(self) -> bool:
        return self.b > 0 and self.a * DIM + self.b > 0

    def apply(self, tau):
        t, was_sym = _as_array(tau)
        out = self.a * trace(t)[..., None, None] * np.eye(DIM) + self.b * t
        return _wrap(out, was_sym)

    def voigt(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a + b, a, 0.0], [a, a + b, 0.0], [0.0, 0.0, b]])

    def matrix4(self) -> np.ndarray:
        e = np.array([1.0, 0.0, 0.0, 1.0])
        return self.a * np.outer(e, e) + self.b * np.eye(4)

    def power(self, p: float) -> "IsoTensor4":
        """``C**p`` through the trace/deviator spectral split."""
        if not self.is_positive_definite():
            raise TensorDomainError(f"isotropic tensor (a={self.a}, b={self.b}) is not positive definite")
        tr_eig, dev_eig = self.eigenvalues()
        bp = dev_eig**p
        return IsoTensor4((tr_eig**p - bp) / DIM, bp)

    def general(self) -> "GeneralTensor4":
        return GeneralTensor4(self.voigt(), self.b)


@dataclass(frozen=True)
class GeneralTensor4:
    """Stiffness-like tensor stored as a 3x3 Voigt block plus a skew scale.

    ``skew`` is the factor applied to the antisymmetric part of a general 2x2
    argument.  It does not enter any symmetric contraction; it only matters when
    the tensor acts on non-symmetric discrete gradients.  When omitted it is
    taken equal to the shear entry ``voigt[2, 2]``, which is exact for
    isotropic tensors.
    """

    voigt: np.ndarray
    skew: float | None = field(default=None)

    def __post_init__(self):
        v = np.array(self.voigt, dtype=float).reshape(3, 3)
        v.setflags(write=False)
        object.__setattr__(self, "voigt", v)
        if self.skew is None:
            object.__setattr__(self, "skew", float(v[2, 2]))
        else:
            object.__setattr__(self, "skew", float(self.skew))

    @classmethod
    def identity(cls) -> "GeneralTensor4":
        return cls(np.eye(3), 1.0)

    def is_spd(self, rtol: float = 1e-12) -> bool:
        v = self.voigt
        scale = max(np.abs(v).max(), 1e-300)
        if np.abs(v - v.T).max() > rtol * scale:
            return False
        return bool(np.linalg.eigvalsh(0.5 * (v + v.T)).min() > 0 and self.skew > 0)

    def matrix4(self) -> np.ndarray:
        block = np.zeros((4, 4))
        block[:3, :3] = self.voigt
        block[3, 3] = self.skew
        return _SYM_SKEW.T @ block @ _SYM_SKEW

    def apply(self, tau):
        t, was_sym = _as_array(tau)
        flat = t.reshape(t.shape[:-2] + (4,))
        out = (flat @ self.matrix4().T).reshape(t.shape)
        return _wrap(out, was_sym)

    def power(self, p: float) -> "GeneralTensor4":
        if not self.is_spd():
            raise TensorDomainError("tensor is not symmetric positive definite in Voigt form")
        w, q = np.linalg.eigh(0.5 * (self.voigt + self.voigt.T))
        return GeneralTensor4((q * w**p) @ q.T, self.skew**p)

    def extreme_eigenvalues(self) -> tuple[float, float]:
        w = np.linalg.eigvalsh(0.5 * (self.voigt + self.voigt.T))
        return float(w[0]), float(w[-1])


def as_general(C) -> GeneralTensor4:
    if isinstance(C, GeneralTensor4):
        return C
    if isinstance(C, IsoTensor4):
        return C.general()
    raise TypeError(f"expected a 4th-order tensor, got {type(C).__name__}")


def iso_apply(C: IsoTensor4, tau):
    return C.apply(tau)


def iso_compose(C1: IsoTensor4, C2: IsoTensor4) -> IsoTensor4:
    """Coefficients of ``C1 C2`` (isotropic tensors commute)."""
    return IsoTensor4(C1.a * (C2.a * DIM + C2.b) + C1.b * C2.a, C1.b * C2.b)


def iso_sqrt(C: IsoTensor4) -> IsoTensor4:
    """Positive definite square root, ``((sqrt(b + a d) - sqrt(b)) / d, sqrt(b))``."""
    if not C.is_positive_definite():
        raise TensorDomainError(
            f"square root needs 2mu > 0 and 2mu + d lambda > 0, got lambda={C.a}, mu={C.b / 2}"
        )
    return C.power(0.5)


def general_sqrt(E: GeneralTensor4) -> GeneralTensor4:
    return E.power(0.5)


def operator_product(*tensors) -> np.ndarray:
    """Composition of tensors as a 4x4 operator in full-gradient coordinates."""
    out = np.eye(4)
    for t in tensors:
        out = out @ (t if isinstance(t, np.ndarray) else as_general(t).matrix4())
    return out
