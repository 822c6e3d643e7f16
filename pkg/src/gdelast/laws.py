"""Stress laws: linear, Hencky-von Mises, and scalar damage.

Every law is vectorized over points: ``eps`` has shape ``(..., 2, 2)`` and
``cells`` (when the law varies in space) has shape ``eps.shape[:-2]``.
Laws expose three evaluations:

``stress``   the stress response sigma(x, eps);
``secant``   a linear tensor C_k (Voigt, shape ``(..., 3, 3)``) with
             ``sigma(x, eps) = C_k eps``, frozen at ``eps`` (Picard step);
``tangent``  the directional derivative of sigma at ``eps`` along ``deps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import (
    DIM,
    GeneralTensor4,
    IsoTensor4,
    SymTensor2,
    as_general,
    dev2,
    from_voigt,
    inner,
    to_voigt,
    trace,
)

_EYE = np.eye(DIM)


class StressLaw:
    """Base class; subclasses set ``sigma_upper`` / ``sigma_lower``."""

    name = "law"
    sigma_upper: float
    sigma_lower: float

    def stress(self, eps, cells=None):
        raise NotImplementedError

    def secant(self, eps, cells=None):
        raise NotImplementedError

    def tangent(self, eps, deps, cells=None):
        raise NotImplementedError

    @property
    def is_linear(self) -> bool:
        return False

    @property
    def ncells(self) -> int | None:
        return None


def _voigt_field(C) -> np.ndarray:
    if isinstance(C, (IsoTensor4, GeneralTensor4)):
        return as_general(C).voigt[None]
    arr = [as_general(c).voigt for c in C]
    return np.stack(arr)


class LinearLaw(StressLaw):
    """``sigma(x, eps) = C(x) eps`` with C constant or piecewise constant per cell."""

    name = "linear"

    def __init__(self, C, sigma_upper: float | None = None, sigma_lower: float | None = None):
        self.C = C
        self._voigt = _voigt_field(C)
        w = np.linalg.eigvalsh(self._voigt)
        if w.min() <= 0:
            raise ValueError("linear stress law needs a positive definite stiffness in every cell")
        self.sigma_lower = float(w.min()) if sigma_lower is None else float(sigma_lower)
        self.sigma_upper = float(w.max()) if sigma_upper is None else float(sigma_upper)

    @property
    def is_linear(self) -> bool:
        return True

    @property
    def ncells(self) -> int | None:
        n = self._voigt.shape[0]
        return None if n == 1 else n

    def voigt_at(self, shape, cells=None) -> np.ndarray:
        if self._voigt.shape[0] == 1:
            return np.broadcast_to(self._voigt[0], tuple(shape) + (3, 3))
        if cells is None:
            raise ValueError("cell ids are required for a cellwise stiffness")
        return self._voigt[np.asarray(cells)]

    def stress(self, eps, cells=None):
        eps = np.asarray(eps, dtype=float)
        C = self.voigt_at(eps.shape[:-2], cells)
        return from_voigt(np.einsum("...ij,...j->...i", C, to_voigt(eps)))

    def secant(self, eps, cells=None):
        eps = np.asarray(eps)
        return np.array(self.voigt_at(eps.shape[:-2], cells))

    def tangent(self, eps, deps, cells=None):
        return self.stress(deps, cells)


def _default_mu(mu0: float, mu_inf: float):
    delta = mu0 - mu_inf

    def mu(rho):
        return mu_inf + delta / np.sqrt(1.0 + rho)

    def dmu(rho):
        return -0.5 * delta / (1.0 + rho) ** 1.5

    return mu, dmu


class HenckyVonMises(StressLaw):
    """``sigma = lam(rho) tr(eps) I + 2 mu(rho) eps`` with ``rho = dev2(eps)``.

    The trace coefficient is tied to the shear one through a constant bulk
    modulus, ``lam(rho) = bulk - mu(rho)``, so that
    ``sigma = 2 bulk sph(eps) + 2 mu(rho) dev(eps)``; this keeps the law
    monotone whenever ``s -> mu(s^2) s`` is increasing.
    """

    name = "hvm"

    def __init__(
        self,
        mu: Callable,
        dmu: Callable,
        bulk: float,
        sigma_upper: float,
        sigma_lower: float,
    ):
        self.mu, self.dmu, self.bulk = mu, dmu, float(bulk)
        self.sigma_upper = float(sigma_upper)
        self.sigma_lower = float(sigma_lower)

    @classmethod
    def default(cls, lam0: float = 1.0, mu0: float = 1.0, mu_inf: float = 0.5) -> "HenckyVonMises":
        """``mu(rho) = mu_inf + (mu0 - mu_inf)/sqrt(1 + rho)`` and ``lam(0) = lam0``."""
        if not 0 < mu_inf <= mu0:
            raise ValueError("need 0 < mu_inf <= mu0")
        bulk = lam0 + mu0
        if bulk <= 0:
            raise ValueError("need lam0 + mu0 > 0")
        mu, dmu = _default_mu(mu0, mu_inf)
        law = cls(mu, dmu, bulk, max(2 * bulk, 2 * mu0), min(2 * bulk, 2 * mu_inf))
        law.params = dict(lam0=lam0, mu0=mu0, mu_inf=mu_inf)
        return law

    def lam(self, rho):
        return self.bulk - self.mu(rho)

    def stress(self, eps, cells=None):
        eps = np.asarray(eps, dtype=float)
        rho = dev2(eps)
        return (self.lam(rho) * trace(eps))[..., None, None] * _EYE + 2.0 * self.mu(rho)[..., None, None] * eps

    def secant(self, eps, cells=None):
        rho = dev2(np.asarray(eps, dtype=float))
        a = self.lam(rho)
        b = 2.0 * self.mu(rho)
        out = np.zeros(np.shape(rho) + (3, 3))
        out[..., 0, 0] = out[..., 1, 1] = a + b
        out[..., 0, 1] = out[..., 1, 0] = a
        out[..., 2, 2] = b
        return out

    def tangent(self, eps, deps, cells=None):
        eps = np.asarray(eps, dtype=float)
        deps = np.asarray(deps, dtype=float)
        rho = dev2(eps)
        dev = eps - 0.5 * trace(eps)[..., None, None] * _EYE
        drho = 2.0 * inner(dev, deps)
        dmu = self.dmu(rho) * drho
        lin = (self.lam(rho) * trace(deps))[..., None, None] * _EYE + 2.0 * self.mu(rho)[..., None, None] * deps
        return lin + (-dmu * trace(eps))[..., None, None] * _EYE + 2.0 * dmu[..., None, None] * eps


class DamageLaw(StressLaw):
    """``sigma = f(|eps|) C eps`` with ``f`` valued in ``[lower, upper]``."""

    name = "damage"

    def __init__(self, C, f: Callable, df: Callable, lower: float, upper: float):
        self.C = C
        self._lin = LinearLaw(C)
        self.f, self.df = f, df
        self.lower, self.upper = float(lower), float(upper)
        self.sigma_lower = self.lower * self._lin.sigma_lower
        self.sigma_upper = self.upper * self._lin.sigma_upper

    @classmethod
    def default(cls, C, d_low: float = 0.2, d_high: float = 1.0) -> "DamageLaw":
        """Residual stiffness ``f(s) = d_low + (d_high - d_low)/(1 + s)``."""
        if not 0 < d_low <= d_high:
            raise ValueError("need 0 < d_low <= d_high")
        span = d_high - d_low
        law = cls(C, lambda s: d_low + span / (1.0 + s), lambda s: -span / (1.0 + s) ** 2, d_low, d_high)
        law.params = dict(d_low=d_low, d_high=d_high)
        return law

    @property
    def ncells(self):
        return self._lin.ncells

    def stress(self, eps, cells=None):
        eps = np.asarray(eps, dtype=float)
        s = np.sqrt(inner(eps, eps))
        return self.f(s)[..., None, None] * self._lin.stress(eps, cells)

    def secant(self, eps, cells=None):
        eps = np.asarray(eps, dtype=float)
        s = np.sqrt(inner(eps, eps))
        return self.f(s)[..., None, None] * self._lin.secant(eps, cells)

    def tangent(self, eps, deps, cells=None):
        eps = np.asarray(eps, dtype=float)
        s = np.sqrt(inner(eps, eps))
        safe = np.where(s > 0, s, 1.0)
        ds = np.where(s > 0, inner(eps, deps) / safe, 0.0)
        return self.f(s)[..., None, None] * self._lin.stress(deps, cells) + (self.df(s) * ds)[
            ..., None, None
        ] * self._lin.stress(eps, cells)


def broken_damage_law(C) -> DamageLaw:
    """Damage with ``f(s) = 1/(1+s)^2``: ``s f(s)`` decreases for ``s > 1``."""
    return DamageLaw(C, lambda s: 1.0 / (1.0 + s) ** 2, lambda s: -2.0 / (1.0 + s) ** 3, 0.05, 1.0)


def stress_eval(law: StressLaw, cell: int, tau: SymTensor2) -> SymTensor2:
    sigma = law.stress(tau.matrix(), None if law.ncells is None else np.asarray(cell))
    return SymTensor2.from_matrix(sigma)


@dataclass
class HypothesisReport:
    samples: int
    violations: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    strict_margin: float = np.inf

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def lines(self) -> list[str]:
        out = [f"samples = {self.samples}"]
        for key in ("growth", "coercivity", "monotonicity"):
            out.append(f"{key}: violations = {self.violations[key]}, worst margin = {self.worst[key]:.6e}")
        out.append(f"strict monotonicity margin = {self.strict_margin:.6e}")
        return out


def _random_sym(rng, n, scale):
    a = rng.uniform(-scale, scale, size=(n, 2, 2))
    a[:, 1, 0] = a[:, 0, 1]
    return a


def check_hypotheses(
    law: StressLaw, samples: int = 10_000, seed: int = 0, scale: float = 10.0, rtol: float = 1e-12
) -> HypothesisReport:
    """Spot-check growth, coercivity and monotonicity on seeded random pairs.

    Entries are drawn uniformly in ``[-scale, scale]``.  A 1D scan along the
    unit spherical direction is appended to the monotonicity check, since
    scalar damage laws fail there first.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    tau = _random_sym(rng, samples, scale)
    omega = _random_sym(rng, samples, scale)
    cells = None if law.ncells is None else rng.integers(0, law.ncells, size=samples)

    st = law.stress(tau, cells)
    so = law.stress(omega, cells)
    ntau = np.sqrt(inner(tau, tau))

    growth = law.sigma_upper * ntau + law.sigma_upper - np.sqrt(inner(st, st))
    coerc = inner(st, tau) - law.sigma_lower * ntau**2
    diff = tau - omega
    ndiff2 = inner(diff, diff)
    mono = inner(st - so, diff)

    s = np.linspace(0.0, 4.0 * scale, 2001)
    sph = s[:, None, None] * _EYE / np.sqrt(DIM)
    cs = None if cells is None else np.zeros(len(s), dtype=int)
    ss = law.stress(sph, cs)
    mono_line = inner(ss[1:] - ss[:-1], sph[1:] - sph[:-1])
    dline = inner(sph[1:] - sph[:-1], sph[1:] - sph[:-1])

    mono_all = np.concatenate([mono, mono_line])
    scale_all = np.concatenate([ndiff2, dline]) * max(law.sigma_upper, 1.0)
    ratio = np.concatenate([mono / np.where(ndiff2 > 0, ndiff2, 1.0), mono_line / dline])

    tol_g = rtol * (law.sigma_upper * ntau + law.sigma_upper)
    tol_c = rtol * law.sigma_upper * ntau**2
    report = HypothesisReport(samples=samples)
    report.violations = {
        "growth": int((growth < -tol_g).sum()),
        "coercivity": int((coerc < -tol_c).sum()),
        "monotonicity": int((mono_all < -rtol * scale_all).sum()),
    }
    report.worst = {
        "growth": float(growth.min()),
        "coercivity": float(coerc.min()),
        "monotonicity": float(mono_all.min()),
    }
    report.strict_margin = float(ratio.min())
    return report
