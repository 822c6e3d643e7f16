"""Quadrature assembly of stiffness, load vector and nonlinear residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discretizations._elements import block_diag
from .gd import GradientDiscretisation
from .laws import LinearLaw, StressLaw
from .tensor import GeneralTensor4, IsoTensor4, as_general, to_voigt


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: sp.csr_matrix
    b: np.ndarray


def stiffness_field(gd: GradientDiscretisation, C) -> np.ndarray:
    """Voigt stiffness ``(nq, 3, 3)`` at the volume points.

    ``C`` is a tensor, a :class:`LinearLaw` (indexed by ``gd.law_cells``), or
    an array of shape ``(3, 3)`` or ``(nq, 3, 3)``.
    """
    if isinstance(C, (IsoTensor4, GeneralTensor4)):
        field = np.broadcast_to(as_general(C).voigt, (gd.nq, 3, 3))
    elif isinstance(C, LinearLaw):
        field = C.voigt_at((gd.nq,), gd.law_cells)
    else:
        field = np.broadcast_to(np.asarray(C, dtype=float), (gd.nq, 3, 3))
    if gd.nq and np.linalg.eigvalsh(0.5 * (field + np.swapaxes(field, 1, 2)))[:, 0].min() <= 0:
        raise ValueError("stiffness is not positive definite at every quadrature point")
    return field


def _form(gd: GradientDiscretisation, voigt: np.ndarray) -> sp.csr_matrix:
    eps = gd.strain_voigt
    A = (eps.T @ block_diag(gd.weights[:, None, None] * voigt) @ eps).tocsr()
    A = (0.5 * (A + A.T)).tocsr()
    A.sort_indices()
    return A


def assemble_linear(gd: GradientDiscretisation, C) -> sp.csr_matrix:
    """``A_ij = int C eps_D(phi_j) : eps_D(phi_i)``."""
    return _form(gd, stiffness_field(gd, C))


def assemble_secant(gd: GradientDiscretisation, law: StressLaw, u: np.ndarray) -> sp.csr_matrix:
    """Stiffness with the law's coefficients frozen at ``eps_D(u)``."""
    eps = gd.strain(u) if gd.ndof else np.zeros((gd.nq, 2, 2))
    return _form(gd, law.secant(eps, _cells(gd, law)))


def _cells(gd, law):
    return None if law.ncells is None else gd.law_cells


def _values(f, pts, *extra):
    if f is None:
        return np.zeros((len(pts), 2))
    if callable(f):
        return np.asarray(f(pts, *extra), dtype=float).reshape(len(pts), 2)
    return np.broadcast_to(np.asarray(f, dtype=float), (len(pts), 2))


def assemble_rhs(gd: GradientDiscretisation, F=None, g=None) -> np.ndarray:
    """``b_i = int F . Pi_D phi_i + int_N g . T_D phi_i``.

    ``F`` maps points to vectors; ``g`` maps ``(points, normals)`` to
    tractions. Either may be ``None`` (zero) or a constant vector.
    """
    b = gd.pi.T @ (gd.weights[:, None] * _values(F, gd.points)).ravel()
    if gd.nbq and g is not None:
        b = b + gd.trace.T @ (gd.bweights[:, None] * _values(g, gd.bpoints, gd.bnormals)).ravel()
    return np.asarray(b, dtype=float)


def assemble_residual(gd: GradientDiscretisation, law: StressLaw, u: np.ndarray, b: np.ndarray | None = None):
    """``r_i = int sigma(eps_D(u)) : eps_D(phi_i) - b_i``."""
    eps = gd.strain(u) if gd.ndof else np.zeros((gd.nq, 2, 2))
    sigma = to_voigt(law.stress(eps, _cells(gd, law)))
    r = gd.strain_voigt.T @ (gd.weights[:, None] * sigma).ravel()
    return r if b is None else r - b


def assemble_system(gd: GradientDiscretisation, law: LinearLaw, F=None, g=None) -> LinearSystem:
    return LinearSystem(assemble_linear(gd, law), assemble_rhs(gd, F, g))
