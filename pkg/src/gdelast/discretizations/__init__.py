"""Back-ends producing :class:`~gdelast.gd.GradientDiscretisation` values."""

from __future__ import annotations

from ..gd import DiscretisationError
from .conforming import build_conforming
from .crouzeix_raviart import KORN_WARNING, KornWarning, build_crouzeix_raviart
from .huwashizu import (
    HuWashizuParams,
    SpaceDecomposition,
    assemble_huwashizu_reference,
    build_huwashizu,
    decompose_Sh,
)
from .nodal_strain import NodalStrainParams, assemble_nodal_strain_reference, build_nodal_strain

BACKENDS = ("p1", "q1", "cr", "nodal", "huw")


def make_backend(name: str, mesh, *, lam=1.0, mu=1.0, D_lambda=0.0, D_mu=None, theta=None, space="S1",
                 require_full_dirichlet=True):
    """Build a back-end by name.

    ``lam``/``mu`` are the Lamé coefficients of the stiffness used inside the
    nodal-strain and Hu-Washizu gradients.
    """
    key = name.lower()
    if key in ("p1", "q1"):
        return build_conforming(mesh, key)
    if key == "cr":
        return build_crouzeix_raviart(mesh, require_full_dirichlet=require_full_dirichlet)
    if key == "nodal":
        return build_nodal_strain(mesh, NodalStrainParams.isotropic(lam, mu, D_lambda, D_mu))
    if key == "huw":
        return build_huwashizu(mesh, HuWashizuParams(space=space, theta=theta, lam=lam, mu=mu))
    raise DiscretisationError(f"unknown backend {name!r}; expected one of {', '.join(BACKENDS)}")


__all__ = [
    "BACKENDS",
    "KORN_WARNING",
    "HuWashizuParams",
    "KornWarning",
    "NodalStrainParams",
    "SpaceDecomposition",
    "assemble_huwashizu_reference",
    "assemble_nodal_strain_reference",
    "build_conforming",
    "build_crouzeix_raviart",
    "build_huwashizu",
    "build_nodal_strain",
    "decompose_Sh",
    "make_backend",
]
