"""Helicity of exact forms on closed hypersurfaces and Stokes' theorem for helicity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .forms import PolyForm, liouville_primitive, scale_form, standard_symplectic, wedge, wedge_power
from .geometry import (GeometryError, Hypersurface, QuadratureSpec, Region, integrate_over_hypersurface,
                       integrate_over_region, top_coefficient_at_nodes)

STOKES_RTOL = 1e-6
SCALING_RTOL = 1e-9


class HelicityError(ValueError):
    """Non-exact witness, bad degrees, or a failed maxipotency check."""


@dataclass(frozen=True)
class ExactFormWitness:
    """An exact k-form ``sigma`` together with a primitive ``alpha`` (``d alpha = sigma``)."""

    sigma: PolyForm
    alpha: PolyForm

    def __post_init__(self):
        if self.alpha.dim != self.sigma.dim or self.alpha.degree + 1 != self.sigma.degree:
            raise HelicityError("alpha must be a (k-1)-form on the same space as sigma")
        if self.alpha.d() != self.sigma:
            raise HelicityError("alpha is not a primitive of sigma")

    @classmethod
    def standard(cls, dim: int) -> ExactFormWitness:
        """``(omega_st, lambda)`` on R^dim."""
        return cls(standard_symplectic(dim), liouville_primitive(dim))

    @classmethod
    def from_primitive(cls, alpha: PolyForm) -> ExactFormWitness:
        return cls(alpha.d(), alpha)

    @property
    def k(self) -> int:
        return self.sigma.degree

    @property
    def dim(self) -> int:
        return self.sigma.dim

    @property
    def n(self) -> int:
        if self.k == 0 or self.dim % self.k:
            raise HelicityError(f"dimension {self.dim} is not a multiple of the degree {self.k}")
        return self.dim // self.k

    def scaled(self, c) -> ExactFormWitness:
        return ExactFormWitness(scale_form(self.sigma, c), scale_form(self.alpha, c))

    def perturbed(self, beta: PolyForm) -> ExactFormWitness:
        """``(sigma + d beta, alpha + beta)``."""
        return ExactFormWitness(self.sigma + beta.d(), self.alpha + beta)

    def helicity_integrand(self) -> PolyForm:
        n = self.n
        if n < 2:
            raise HelicityError("helicity needs n >= 2")
        return wedge(self.alpha, wedge_power(self.sigma, n - 1))

    def top_power(self) -> PolyForm:
        return wedge_power(self.sigma, self.n)


def helicity(h: Hypersurface, w: ExactFormWitness, q: QuadratureSpec | None = None,
             method: str = "auto") -> float:
    """``∫_h alpha ∧ sigma^(n-1)`` over the oriented closed hypersurface ``h``."""
    if h.dim != w.dim:
        raise HelicityError(f"witness lives in R^{w.dim}, hypersurface in R^{h.dim}")
    return integrate_over_hypersurface(w.helicity_integrand(), h, q, method=method)


def primitive_independence_check(h: Hypersurface, sigma: PolyForm, alpha1: PolyForm, alpha2: PolyForm,
                                 q: QuadratureSpec | None = None) -> float:
    """Absolute difference of the helicities computed with two primitives."""
    w1 = ExactFormWitness(sigma, alpha1)
    w2 = ExactFormWitness(sigma, alpha2)
    if alpha1 == alpha2:
        return 0.0
    return abs(helicity(h, w1, q) - helicity(h, w2, q))


@dataclass(frozen=True)
class StokesResult:
    lhs: float
    rhs: float
    residual: float
    components: dict[str, float] = field(default_factory=dict)

    @property
    def relative_residual(self) -> float:
        return self.residual / (1.0 + abs(self.lhs))

    def passed(self, rtol: float = STOKES_RTOL) -> bool:
        return self.residual <= rtol * (1.0 + abs(self.lhs))


def stokes_helicity_check(r: Region, w: ExactFormWitness, q: QuadratureSpec | None = None) -> StokesResult:
    """Compare ``∫_r sigma^n`` against the summed boundary helicities."""
    if not r.boundary:
        raise GeometryError(f"{r.label} has no boundary data; Stokes check needs a compact region")
    if w.sigma.is_zero():
        return StokesResult(0.0, 0.0, 0.0, {h.label: 0.0 for h in r.boundary})
    lhs = integrate_over_region(w.top_power(), r, q)
    comps = {h.label: helicity(h, w, q) for h in r.boundary}
    rhs = math.fsum(comps.values())
    return StokesResult(lhs, rhs, abs(lhs - rhs), comps)


@dataclass(frozen=True)
class HelicityProfile:
    """Boundary helicities of a compact region, indexed by component label."""

    n: int
    components: tuple[tuple[str, float], ...]
    k: int | None = None

    def __post_init__(self):
        if int(self.n) < 2:
            raise HelicityError(f"helicity needs n >= 2, got n = {self.n}")
        labels = [c[0] for c in self.components]
        if len(set(labels)) != len(labels):
            raise HelicityError("component labels must be unique")
        object.__setattr__(self, "components", tuple((str(a), float(b)) for a, b in self.components))

    @classmethod
    def from_values(cls, values: Sequence[float], n: int, k: int | None = None) -> HelicityProfile:
        return cls(n, tuple((f"c{i}", float(v)) for i, v in enumerate(values)), k)

    @property
    def labels(self) -> list[str]:
        return [c[0] for c in self.components]

    @property
    def values(self) -> np.ndarray:
        return np.array([c[1] for c in self.components], dtype=float)

    def __len__(self) -> int:
        return len(self.components)

    def h(self, i: int) -> float:
        return self.components[i][1]

    @property
    def positive(self) -> list[int]:
        return [i for i, (_, v) in enumerate(self.components) if v > 0]

    @property
    def negative(self) -> list[int]:
        return [i for i, (_, v) in enumerate(self.components) if v < 0]

    @property
    def zero(self) -> list[int]:
        return [i for i, (_, v) in enumerate(self.components) if v == 0]

    def total(self) -> float:
        return math.fsum(v for _, v in self.components)

    def to_json(self) -> dict:
        out: dict = {"n": self.n, "components": [{"label": a, "h": b} for a, b in self.components]}
        if self.k is not None:
            out = {"k": self.k, **out}
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> HelicityProfile:
        return cls(int(data["n"]), tuple((c["label"], c["h"]) for c in data["components"]),
                   int(data["k"]) if data.get("k") is not None else None)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def is_maxipotent_on(r: Region, w: ExactFormWitness, q: QuadratureSpec | None = None) -> int:
    """Sign of ``sigma^n`` if it is sign-constant and nonzero at the region's nodes, else 0."""
    top = w.top_power()
    if top.is_zero():
        return 0
    coeff = top.coefficient(*range(r.dim))
    if coeff.is_constant():
        values = np.array([float(next(iter(coeff.terms.values())))])
    else:
        values = top_coefficient_at_nodes(top, r, q=q)
    if np.all(values > 0):
        return 1
    if np.all(values < 0):
        return -1
    return 0


def boundary_helicity_profile(r: Region, w: ExactFormWitness, q: QuadratureSpec | None = None) -> HelicityProfile:
    """Helicity of each boundary component, with the orientation induced by ``sigma``."""
    sign = is_maxipotent_on(r, w, q)
    if sign == 0:
        raise HelicityError(f"sigma^n changes sign or vanishes at nodes of {r.label}; not maxipotent")
    oriented = r.with_orientation(sign)
    comps = tuple((h.label, helicity(h, w, q)) for h in oriented.boundary)
    return HelicityProfile(w.n, comps, w.k)


@dataclass(frozen=True)
class ScalingResult:
    scaled: float
    predicted: float
    residual: float

    def passed(self, rtol: float = SCALING_RTOL) -> bool:
        return self.residual <= rtol * (1.0 + abs(self.predicted))


def scaling_check(h: Hypersurface, w: ExactFormWitness, c, q: QuadratureSpec | None = None) -> ScalingResult:
    """``h(C sigma)`` against ``C^n h(sigma)`` on the same nodes."""
    if not c > 0:
        raise HelicityError("scaling constant must be positive")
    base = helicity(h, w, q)
    scaled = helicity(h, w.scaled(c), q)
    predicted = float(c) ** w.n * base
    return ScalingResult(scaled, predicted, abs(scaled - predicted))


__all__ = [
    "ExactFormWitness", "HelicityError", "HelicityProfile", "ScalingResult", "StokesResult",
    "boundary_helicity_profile", "helicity", "is_maxipotent_on", "primitive_independence_check",
    "scaling_check", "stokes_helicity_check",
]
