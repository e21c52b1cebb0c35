"""Seeded random generators and the randomized property suites run by ``helicap suite``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import capacity as cap
from .forms import PolyForm, Polynomial, multi_indices, wedge
from .geometry import ball, shell, sphere
from .helicity import ExactFormWitness, HelicityProfile, is_maxipotent_on, scaling_check, stokes_helicity_check
from .oracles import grid_C1, grid_C2, wedge_by_permutations
from .recognition import (HypothesisViolated, compute_C1, compute_C2, verify_key_lemma,
                          verify_recognition)

SUITES = ("forms", "stokes", "scaling", "recognition", "capacity")


def random_fraction(rng: np.random.Generator, num: int = 5, den: int = 4) -> Fraction:
    return Fraction(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def random_polynomial(rng: np.random.Generator, nvars: int, max_degree: int = 2, nterms: int = 3,
                      scale: Fraction = Fraction(1)) -> Polynomial:
    terms: dict = {}
    for _ in range(nterms):
        exps = [0] * nvars
        for _ in range(int(rng.integers(0, max_degree + 1))):
            exps[int(rng.integers(nvars))] += 1
        terms[tuple(exps)] = terms.get(tuple(exps), Fraction(0)) + scale * random_fraction(rng)
    return Polynomial(nvars, terms)


def random_form(rng: np.random.Generator, dim: int, degree: int, max_degree: int = 2, nterms: int = 2,
                scale: Fraction = Fraction(1)) -> PolyForm:
    idx = multi_indices(dim, degree)
    chosen = rng.choice(len(idx), size=min(nterms, len(idx)), replace=False)
    return PolyForm(dim, degree, {idx[int(i)]: random_polynomial(rng, dim, max_degree, 2, scale) for i in chosen})


def random_profile(rng: np.random.Generator, max_size: int = 5, bound: float = 10.0,
                   ns: tuple[int, ...] = (2, 3), need_negative: bool = False) -> HelicityProfile:
    """Random profile with occasional repeated and zero helicities."""
    while True:
        size = int(rng.integers(1, max_size + 1))
        vals = [float(v) for v in rng.uniform(-bound, bound, size)]
        if size > 1 and rng.random() < 0.25:
            vals[-1] = vals[0]
        if rng.random() < 0.1:
            vals[int(rng.integers(size))] = 0.0
        p = HelicityProfile.from_values(vals, int(rng.choice(ns)))
        if not need_negative or math.fsum(p.h(i) for i in p.negative) < 0:
            return p


def random_perturbation(rng: np.random.Generator, dim: int, size: Fraction = Fraction(1, 40)) -> PolyForm:
    """A small polynomial 1-form ``beta``; ``omega_st + d beta`` stays maxipotent on catalog regions."""
    return random_form(rng, dim, 1, max_degree=2, nterms=2, scale=size)


def perturbed_witness(rng: np.random.Generator, region, tries: int = 20) -> ExactFormWitness:
    base = ExactFormWitness.standard(region.dim)
    for _ in range(tries):
        w = base.perturbed(random_perturbation(rng, region.dim))
        if is_maxipotent_on(region, w) != 0:
            return w
    raise RuntimeError("could not draw a maxipotent perturbation")


@dataclass
class SuiteResult:
    name: str
    instances: int = 0
    failures: list[str] = field(default_factory=list)
    max_residual: float = 0.0

    def record(self, ok: bool, residual: float = 0.0, detail: str = ""):
        self.instances += 1
        self.max_residual = max(self.max_residual, residual)
        if not ok:
            self.failures.append(detail)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"instances": self.instances, "failures": len(self.failures),
                "first_failures": self.failures[:3], "max_residual": self.max_residual, "pass": self.passed}


def forms_suite(rng: np.random.Generator, count: int) -> SuiteResult:
    res = SuiteResult("forms")
    for _ in range(count):
        dim = int(rng.integers(2, 6))
        p, q = int(rng.integers(0, dim + 1)), int(rng.integers(0, dim + 1))
        a, b = random_form(rng, dim, p), random_form(rng, dim, q)
        ok = a.d().d().is_zero()
        if p + q <= dim:
            ok &= wedge(a, b) == wedge(b, a) * (-1) ** (p * q)
            if p + q < dim:
                ok &= (a ^ b).d() == (a.d() ^ b) + (a ^ b.d()) * (-1) ** p
            r = int(rng.integers(0, dim - p - q + 1))
            c = random_form(rng, dim, r)
            ok &= (a ^ b) ^ c == a ^ (b ^ c)
            point = rng.uniform(-1, 1, dim)
            vecs = rng.uniform(-1, 1, (p + q, dim))
            direct = (a ^ b).evaluate(point, vecs)
            oracle = wedge_by_permutations(a, b, point, vecs)
            err = abs(direct - oracle) / (1 + abs(oracle))
            ok &= err < 1e-9
        else:
            err = 0.0
        res.record(bool(ok), err, f"dim={dim} p={p} q={q}")
    return res


def stokes_suite(rng: np.random.Generator, count: int) -> SuiteResult:
    res = SuiteResult("stokes")
    regions = [ball(4, 1.0), shell(4, 1.0, 2.0), shell(4, 1.0, 1.02)]
    for _ in range(count):
        r = regions[int(rng.integers(len(regions)))]
        w = perturbed_witness(rng, r)
        out = stokes_helicity_check(r, w)
        res.record(out.passed(), out.relative_residual, f"{r.label}: residual {out.residual!r}")
    return res


def scaling_suite(rng: np.random.Generator, count: int) -> SuiteResult:
    res = SuiteResult("scaling")
    for _ in range(count):
        dim = int(rng.choice([4, 6]))
        h = sphere(dim, float(rng.uniform(0.5, 2.0)))
        w = ExactFormWitness.standard(dim).perturbed(random_perturbation(rng, dim))
        c = float(rng.uniform(0.1, 10.0))
        out = scaling_check(h, w, c)
        res.record(out.passed(), out.residual / (1 + abs(out.predicted)), f"dim={dim} C={c!r}")
    return res


def recognition_suite(rng: np.random.Generator, count: int) -> SuiteResult:
    res = SuiteResult("recognition")
    for _ in range(count):
        p = random_profile(rng)
        vals = list(p.values)
        err = max(abs(compute_C1(p) - grid_C1(vals, p.n)), abs(compute_C2(p) - grid_C2(vals, p.n)))
        kl = verify_key_lemma(p)
        ok = err <= 1e-5 and kl.passed
        detail = f"{vals} n={p.n}: oracle gap {err:.3g}, key lemma {kl.passed}"
        try:
            rec = verify_recognition(p)
            ok &= rec.passed
            detail += f", recognition {rec.passed}"
        except HypothesisViolated:
            pass
        res.record(ok, err, detail)
    return res


def capacity_suite(rng: np.random.Generator, count: int) -> SuiteResult:
    res = SuiteResult("capacity")
    catalog = cap.default_catalog(4)
    for _ in range(count):
        t = catalog[int(rng.integers(len(catalog)))]
        a = float(rng.uniform(0.1, 10.0))
        base = cap.gromov_width_bounds(t)
        routes = [cap.gromov_width_bounds(t.with_scale(a)), cap.gromov_width_bounds(t.with_scale(a).rescaled_shape())]
        err = max(cap._rel(b.lower, a * base.lower) for b in routes)
        err = max(err, max(cap._rel(b.upper, a * base.upper) for b in routes))
        ok = err <= cap.CONFORMALITY_RTOL and all(b.consistent() for b in routes)
        ok &= cap.thinness_check(t)[0] == cap.thinness_check(t.with_scale(a))[0]
        res.record(ok, err, f"{t} a={a!r}: conformality gap {err:.3g}")
    return res


_RUNNERS = {"forms": forms_suite, "stokes": stokes_suite, "scaling": scaling_suite,
            "recognition": recognition_suite, "capacity": capacity_suite}


def run_property_suites(seed: int, count: int, suites=SUITES) -> dict:
    """Run every suite with its own child stream of ``seed``; the result is deterministic."""
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    out = {}
    for name, child in zip(SUITES, children):
        if name in suites:
            out[name] = _RUNNERS[name](np.random.default_rng(child), count)
    return {"seed": seed, "count": count, "suites": {k: v.to_json() for k, v in out.items()},
            "pass": all(v.passed for v in out.values())}
