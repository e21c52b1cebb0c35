"""Certified interval bounds for embedding capacities on a catalog of model domains.

Domains live in ``R^{2n}`` with the standard form, possibly multiplied by a
positive scale ``a``. Internally every shape is described by squared radii
(``rho = r^2``; an ellipsoid of symplectic widths ``a_i`` has
``rho_i = a_i / pi``), so rescaling the form by ``a`` multiplies every
``rho`` by ``a``.

Bounds come from a small rule base applied to all ordered pairs of a
catalog and closed under composition until nothing improves. Each side of
a :class:`Bound` carries the list of rule applications that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

KINDS = ("ball", "cylinder", "ellipsoid", "shell")
SCALES = (0.25, 0.5, 1.0, 2.0, 4.0)
CONSISTENCY_RTOL = 1e-12
CONFORMALITY_RTOL = 1e-12
_IMPROVE = 1e-12


class CapacityError(ValueError):
    pass


class InconsistentBound(CapacityError):
    pass


@dataclass(frozen=True)
class Rule:
    name: str
    statement: str
    provenance: str


RULES = {
    "NONSQUEEZE": Rule("NONSQUEEZE", "a ball of squared radius rho embeds into Z(rho') only if rho <= rho'",
                       "external-theorem"),
    "INCLUSION": Rule("INCLUSION", "an explicit rescaled inclusion (after translation) between catalog shapes",
                      "geometry"),
    "VOLUME": Rule("VOLUME", "form-preserving embeddings do not increase the integral of omega^n",
                   "axiom"),
    "SCALING": Rule("SCALING", "c_(D, a_D)(T, a_T) = (a_T / a_D) c_D(T)", "axiom"),
    "COMPOSE": Rule("COMPOSE", "embeddings compose; capacities multiply along chains", "geometry"),
}


@dataclass(frozen=True)
class ModelDomain:
    """A catalog shape in ``R^dim`` carrying the form ``scale * omega_st``.

    ``params`` are radii for ball, cylinder and shell, and symplectic
    widths (sorted ascending, one per complex plane) for ellipsoids.
    """

    kind: str
    dim: int
    params: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CapacityError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 2 or self.dim % 2:
            raise CapacityError(f"dimension must be even and positive, got {self.dim}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if not all(p > 0 and math.isfinite(p) for p in params) or not self.scale > 0:
            raise CapacityError(f"parameters must be positive and finite: {self}")
        expected = {"ball": 1, "cylinder": 1, "shell": 2, "ellipsoid": self.dim // 2}[self.kind]
        if len(params) != expected:
            raise CapacityError(f"{self.kind} in dimension {self.dim} takes {expected} parameter(s)")
        if self.kind == "shell" and not params[0] < params[1]:
            raise CapacityError("shell needs r < R")
        if self.kind == "ellipsoid" and list(params) != sorted(params):
            raise CapacityError("ellipsoid widths must be sorted ascending")

    @property
    def n(self) -> int:
        return self.dim // 2

    def unscaled(self) -> ModelDomain:
        return ModelDomain(self.kind, self.dim, self.params)

    def with_scale(self, a: float) -> ModelDomain:
        return ModelDomain(self.kind, self.dim, self.params, a)

    def rescaled_shape(self) -> ModelDomain:
        """The unscaled shape symplectomorphic to this one via ``x -> sqrt(scale) x``."""
        a = self.scale
        if self.kind == "ellipsoid":
            return ModelDomain(self.kind, self.dim, tuple(a * p for p in self.params))
        return ModelDomain(self.kind, self.dim, tuple(math.sqrt(a) * p for p in self.params))

    # squared-radius data ------------------------------------------------
    @property
    def rho(self) -> tuple[float, ...]:
        if self.kind == "ellipsoid":
            return tuple(p / math.pi for p in self.params)
        return tuple(p * p for p in self.params)

    @property
    def bounded(self) -> bool:
        return self.kind != "cylinder"

    def inball(self) -> float:
        """Squared radius of the largest ball that fits (after translation)."""
        rho = self.rho
        if self.kind == "shell":
            return ((self.params[1] - self.params[0]) / 2.0) ** 2
        return min(rho)

    def enclosing(self) -> float:
        """Squared radius of the smallest origin-centred ball containing the shape."""
        if self.kind == "cylinder":
            return math.inf
        return max(self.rho)

    def cylinder_radius(self) -> float:
        """Squared radius of the thinnest cylinder over the first complex plane containing the shape."""
        return min(self.rho) if self.kind in ("ellipsoid", "cylinder") else max(self.rho)

    def volume(self) -> float:
        """Euclidean volume; the integral of ``omega^n`` is ``n!`` times this."""
        n, rho = self.n, self.rho
        if self.kind == "cylinder":
            return math.inf
        if self.kind == "ellipsoid":
            return math.prod(math.pi * p for p in rho) / math.factorial(n)
        if self.kind == "ball":
            return (math.pi * rho[0]) ** n / math.factorial(n)
        return math.pi ** n * (rho[1] ** n - rho[0] ** n) / math.factorial(n)

    def __str__(self) -> str:
        name = {"ball": "Ball", "cylinder": "Cylinder", "ellipsoid": "Ellipsoid", "shell": "Shell"}[self.kind]
        body = f"{name}({', '.join(f'{p:g}' for p in self.params)})"
        return body if self.scale == 1.0 else f"({body}, {self.scale:g}ω)"


def Ball(r: float = 1.0, dim: int = 4, scale: float = 1.0) -> ModelDomain:
    return ModelDomain("ball", dim, (r,), scale)


def Cylinder(r: float = 1.0, dim: int = 4, scale: float = 1.0) -> ModelDomain:
    return ModelDomain("cylinder", dim, (r,), scale)


def Ellipsoid(widths: Sequence[float], scale: float = 1.0) -> ModelDomain:
    return ModelDomain("ellipsoid", 2 * len(widths), tuple(widths), scale)


def Shell(r: float, R: float, dim: int = 4, scale: float = 1.0) -> ModelDomain:
    return ModelDomain("shell", dim, (r, R), scale)


def parse_domain(text: str, dim: int = 4) -> ModelDomain:
    """Parse ``kind[:p1,p2,...][@scale]``, e.g. ``ball:1``, ``cylinder``, ``shell:1,2@0.5``."""
    body, _, scale = text.strip().partition("@")
    kind, _, params = body.partition(":")
    kind = {"b": "ball", "z": "cylinder", "cyl": "cylinder", "e": "ellipsoid"}.get(kind.lower(), kind.lower())
    try:
        values = tuple(float(p) for p in params.split(",")) if params else ()
        a = float(scale) if scale else 1.0
    except ValueError as exc:
        raise CapacityError(f"cannot parse domain {text!r}: {exc}") from None
    if kind in ("ball", "cylinder") and not values:
        values = (1.0,)
    if kind == "ellipsoid":
        return ModelDomain(kind, 2 * len(values), values, a)
    return ModelDomain(kind, dim, values, a)


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class Bound:
    lower: float = 0.0
    upper: float = math.inf
    lower_chain: tuple[str, ...] = ()
    upper_chain: tuple[str, ...] = ()

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def consistent(self, rtol: float = CONSISTENCY_RTOL) -> bool:
        return self.lower <= self.upper * (1.0 + rtol)

    def scaled(self, factor: float, note: str | None = None) -> Bound:
        if factor == 1.0:
            return self
        step = (note or f"SCALING(x{factor:g})",)
        return Bound(self.lower * factor, self.upper * factor, self.lower_chain + step, self.upper_chain + step)

    @property
    def derivation(self) -> list[str]:
        return [f"lower: {s}" for s in self.lower_chain] + [f"upper: {s}" for s in self.upper_chain]

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper if math.isfinite(self.upper) else "inf",
                "derivation": self.derivation}


def _inclusion_lower(d: ModelDomain, t: ModelDomain) -> tuple[float, str] | None:
    """Largest ``a`` for which an explicit inclusion of ``(d, a omega)`` into ``t`` is known."""
    best: tuple[float, str] | None = None

    def offer(a: float, why: str):
        nonlocal best
        if a > 0 and (best is None or a > best[0]):
            best = (a, f"INCLUSION({why})")

    if d.kind == t.kind == "shell":
        (r, R), (r2, R2) = d.rho, t.rho
        if r2 / r <= R2 / R:
            offer(R2 / R, f"{d} scaled into {t} concentrically")
    if d.kind == t.kind == "cylinder":
        offer(t.rho[0] / d.rho[0], f"{d} scaled into {t}")
    if d.kind in ("ball", "ellipsoid") and t.kind in ("ball", "ellipsoid"):
        dr = d.rho if d.kind == "ellipsoid" else d.rho * d.n
        tr = t.rho if t.kind == "ellipsoid" else t.rho * t.n
        offer(min(b / a for a, b in zip(dr, tr)), f"{d} scaled into {t} axis by axis")
    if d.kind in ("ball", "ellipsoid") and t.kind == "cylinder":
        offer(t.rho[0] / d.cylinder_radius(), f"{d} scaled into {t}")
    if d.bounded:
        offer(t.inball() / d.enclosing(), f"{d} inside its enclosing ball, translated into {t}")
        if t.kind == "cylinder":
            offer(t.rho[0] / d.cylinder_radius(), f"{d} inside {t} after scaling")
    return best


def _direct_bounds(d: ModelDomain, t: ModelDomain) -> Bound:
    lower, lchain = 0.0, ()
    found = _inclusion_lower(d, t)
    if found:
        lower, lchain = found[0], (found[1],)
    # a ball inside d, t inside a cylinder, then non-squeezing
    cyl = t.cylinder_radius()
    upper = cyl / d.inball()
    uchain = (f"INCLUSION(Ball(r^2={d.inball():g}) into {d})",
              f"INCLUSION({t} into Cylinder(r^2={cyl:g}))", "NONSQUEEZE")
    vd, vt = d.volume(), t.volume()
    if math.isfinite(vd) and math.isfinite(vt):
        a = (vt / vd) ** (1.0 / d.n)
        if a < upper:
            upper, uchain = a, (f"VOLUME(vol {t} / vol {d})",)
    elif not math.isfinite(vd) and math.isfinite(vt):
        upper, uchain = 0.0, (f"VOLUME(infinite-volume {d} into finite-volume {t})",)
    return Bound(lower, upper, lchain, uchain)


class RuleEngine:
    """Pairwise bounds over a fixed list of unscaled domains, closed under composition."""

    def __init__(self, domains: Iterable[ModelDomain], max_rounds: int = 50):
        seen: list[ModelDomain] = []
        for d in domains:
            d = d.unscaled()
            if d not in seen:
                seen.append(d)
        dims = {d.dim for d in seen}
        if len(dims) > 1:
            raise CapacityError(f"catalog mixes dimensions {sorted(dims)}")
        self.domains = tuple(seen)
        self._index = {d: i for i, d in enumerate(self.domains)}
        m = len(seen)
        self.bounds = [[_direct_bounds(a, b) for b in seen] for a in seen]
        self.rounds = 0
        for _ in range(max_rounds):
            self.rounds += 1
            if not self._compose_round(m):
                break

    def _compose_round(self, m: int) -> bool:
        B = self.bounds
        changed = False
        for i in range(m):
            for j in range(m):
                lo, up = B[i][j].lower, B[i][j].upper
                lch, uch = B[i][j].lower_chain, B[i][j].upper_chain
                for x in range(m):
                    if x in (i, j):
                        continue
                    cand = B[i][x].lower * B[x][j].lower
                    if cand > lo * (1 + _IMPROVE) and cand > 0:
                        lo, lch = cand, ("COMPOSE",) + B[i][x].lower_chain + B[x][j].lower_chain
                    if B[x][i].lower > 0 and math.isfinite(B[x][j].upper):
                        cand = B[x][j].upper / B[x][i].lower
                        if cand < up * (1 - _IMPROVE):
                            up, uch = cand, ("COMPOSE",) + B[x][i].lower_chain + B[x][j].upper_chain
                    if B[j][x].lower > 0 and math.isfinite(B[i][x].upper):
                        cand = B[i][x].upper / B[j][x].lower
                        if cand < up * (1 - _IMPROVE):
                            up, uch = cand, ("COMPOSE",) + B[i][x].upper_chain + B[j][x].lower_chain
                if (lo, up) != (B[i][j].lower, B[i][j].upper):
                    B[i][j] = Bound(lo, up, lch, uch)
                    changed = True
        return changed

    def __contains__(self, d: ModelDomain) -> bool:
        return d.unscaled() in self._index

    def bound(self, domain: ModelDomain, target: ModelDomain) -> Bound:
        """``c_domain(target)``, scales included."""
        if domain.dim != target.dim:
            raise CapacityError(f"dimension mismatch: {domain.dim} vs {target.dim}")
        try:
            b = self.bounds[self._index[domain.unscaled()]][self._index[target.unscaled()]]
        except KeyError:
            raise CapacityError(f"{domain} or {target} is not in this engine's catalog") from None
        return b.scaled(target.scale / domain.scale)

    def inconsistencies(self, rtol: float = CONSISTENCY_RTOL) -> list[str]:
        out = []
        for i, d in enumerate(self.domains):
            for j, t in enumerate(self.domains):
                b = self.bounds[i][j]
                if not b.consistent(rtol):
                    out.append(f"c_{d}({t}): lower {b.lower!r} via {list(b.lower_chain)} exceeds "
                               f"upper {b.upper!r} via {list(b.upper_chain)}")
        return out


def intermediates(dim: int) -> list[ModelDomain]:
    """Reference shapes always present in an engine: the unit ball and cylinder."""
    return [Ball(1.0, dim), Cylinder(1.0, dim)]


def default_catalog(dim: int = 4) -> list[ModelDomain]:
    """The catalog used by the axiom suite (at most 20 shapes)."""
    n = dim // 2
    cat = [Ball(0.5, dim), Ball(1.0, dim), Ball(2.0, dim), Cylinder(1.0, dim), Cylinder(2.0, dim),
           Shell(1.0, 2.0, dim), Shell(1.0, 1.1, dim), Shell(1.0, 1.05, dim), Shell(0.5, 2.0, dim),
           Shell(1.5, 1.8, dim)]
    widths = [math.pi * (1 + i) for i in range(n)]
    cat.append(Ellipsoid(widths))
    cat.append(Ellipsoid([math.pi * 0.5] + [math.pi * 4.0] * (n - 1)))
    cat.append(Ellipsoid([math.pi] * (n - 1) + [math.pi * 3.0]))
    return cat


def engine_for(*domains: ModelDomain, catalog: Sequence[ModelDomain] | None = None) -> RuleEngine:
    dims = {d.dim for d in domains}
    if len(dims) != 1:
        raise CapacityError(f"dimension mismatch: {sorted(dims)}")
    dim = dims.pop()
    base = list(catalog) if catalog is not None else intermediates(dim)
    return RuleEngine(base + list(domains))


def embedding_capacity_bounds(domain: ModelDomain, target: ModelDomain,
                              engine: RuleEngine | None = None) -> Bound:
    """Certified interval for ``c_domain(target)``."""
    if domain.dim != target.dim:
        raise CapacityError(f"dimension mismatch: {domain.dim} vs {target.dim}")
    if engine is None or domain not in engine or target not in engine:
        engine = engine_for(domain, target)
    return engine.bound(domain, target)


def gromov_width_bounds(target: ModelDomain, engine: RuleEngine | None = None) -> Bound:
    return embedding_capacity_bounds(Ball(1.0, target.dim), target, engine)


def cbar_bounds(base: ModelDomain, target: ModelDomain, engine: RuleEngine | None = None) -> Bound:
    """Componentwise maximum of ``c_base(target)`` and the Gromov width of ``target``."""
    c = embedding_capacity_bounds(base, target, engine)
    w = gromov_width_bounds(target, engine)
    lo, lch = (c.lower, c.lower_chain) if c.lower >= w.lower else (w.lower, w.lower_chain)
    up, uch = (c.upper, c.upper_chain) if c.upper >= w.upper else (w.upper, w.upper_chain)
    return Bound(lo, up, lch, uch)


# ---------------------------------------------------------------------------
# axioms and verdicts

Evaluator = Callable[[ModelDomain], Bound]


def capacity_evaluators(engine: RuleEngine, dim: int) -> dict[str, Evaluator]:
    """The capacities exercised by the axiom suite: ``w``, a few ``c_D`` and ``cbar``."""
    out: dict[str, Evaluator] = {"w": lambda t: gromov_width_bounds(t, engine)}
    for base in (Ball(1.0, dim), Ball(1.0, dim, scale=2.0), Shell(1.0, 2.0, dim), Cylinder(1.0, dim)):
        out[f"c_{base}"] = (lambda b: lambda t: embedding_capacity_bounds(b, t, engine))(base)
    out[f"cbar_{Shell(1.0, 2.0, dim)}"] = lambda t: cbar_bounds(Shell(1.0, 2.0, dim), t, engine)
    return out


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return abs(a - b) / max(abs(a), abs(b))


def conformality_check(evaluator: Evaluator, domains: Sequence[ModelDomain],
                       scales: Sequence[float] = SCALES) -> float:
    """Worst relative deviation of ``c(A, a omega)`` from ``a c(A, omega)``.

    Two routes are compared against ``a c(A)``: the scaled form itself, and
    the rescaled shape carrying the unscaled form.
    """
    worst = 0.0
    for t in domains:
        base = evaluator(t)
        for a in scales:
            expected = (base.lower * a, base.upper * a)
            scaled = t.with_scale(t.scale * a)
            for variant in (scaled, scaled.rescaled_shape()):
                got = evaluator(variant)
                worst = max(worst, _rel(got.lower, expected[0]), _rel(got.upper, expected[1]))
    return worst


def contains(a: ModelDomain, b: ModelDomain) -> bool:
    """Whether shape ``a`` is a subset of shape ``b`` as origin-centred sets (forms must agree)."""
    if a.dim != b.dim or a.scale != b.scale:
        return False
    if b.kind == "cylinder":
        if a.kind == "cylinder":
            return a.rho[0] <= b.rho[0]
        return a.cylinder_radius() <= b.rho[0]
    if a.kind == "cylinder":
        return False
    if b.kind == "shell":
        return a.kind == "shell" and b.params[0] <= a.params[0] and a.params[1] <= b.params[1]
    if a.kind == "shell":
        a_rho = (a.rho[1],) * a.n
    else:
        a_rho = a.rho if a.kind == "ellipsoid" else a.rho * a.n
    b_rho = b.rho if b.kind == "ellipsoid" else b.rho * b.n
    return all(x <= y for x, y in zip(a_rho, b_rho))


def inclusion_pairs(domains: Sequence[ModelDomain]) -> list[tuple[ModelDomain, ModelDomain]]:
    return [(a, b) for a in domains for b in domains if a != b and contains(a, b)]


def monotonicity_check(evaluator: Evaluator, pairs: Sequence[tuple[ModelDomain, ModelDomain]],
                       rtol: float = CONSISTENCY_RTOL) -> float:
    """Worst amount by which ``lower c(A)`` exceeds ``upper c(B)`` for included ``A ⊂ B``."""
    worst = 0.0
    for a, b in pairs:
        lo, up = evaluator(a).lower, evaluator(b).upper
        if lo > up * (1 + rtol):
            worst = max(worst, lo - up)
    return worst


def normalization_check(base: ModelDomain, engine: RuleEngine | None = None) -> tuple[str, Bound]:
    """Whether ``cbar_base`` is normalized, read off the interval for ``c_base(Z)``."""
    b = embedding_capacity_bounds(base, Cylinder(1.0, base.dim), engine)
    if b.upper <= 1.0:
        return "normalized", b
    if b.lower > 1.0:
        return "not-normalized", b
    return "inconclusive", b


def normalizing_scale(base: ModelDomain, engine: RuleEngine | None = None) -> float | None:
    """``A = c_base(Z)`` when the rule base pins it down exactly, else ``None``."""
    b = embedding_capacity_bounds(base.unscaled(), Cylinder(1.0, base.dim), engine)
    return b.lower if b.exact and b.lower > 0 else None


def thinness_check(domain: ModelDomain, engine: RuleEngine | None = None) -> tuple[str, Bound, Bound]:
    """Whether ``w(D) c_D(Z) < 1`` holds, fails or cannot be decided from the intervals.

    The form scale cancels in the product, so it is evaluated on the
    unscaled domain; the verdict is therefore scale invariant.
    """
    d = domain.unscaled()
    if engine is None or d not in engine:
        engine = engine_for(d, Ball(1.0, d.dim), Cylinder(1.0, d.dim))
    w = gromov_width_bounds(d, engine)
    c = embedding_capacity_bounds(d, Cylinder(1.0, d.dim), engine)
    if w.upper * c.upper < 1.0:
        verdict = "holds"
    elif w.lower * c.lower >= 1.0:
        verdict = "fails"
    else:
        verdict = "inconclusive"
    return verdict, w, c


@dataclass
class AxiomReport:
    dim: int
    domains: list[str]
    conformality: dict[str, float] = field(default_factory=dict)
    monotonicity: dict[str, float] = field(default_factory=dict)
    inconsistencies: list[str] = field(default_factory=list)
    anchor_cB_Z: Bound = field(default_factory=Bound)

    @property
    def passed(self) -> bool:
        return (all(v <= CONFORMALITY_RTOL for v in self.conformality.values())
                and all(v == 0 for v in self.monotonicity.values())
                and not self.inconsistencies
                and self.anchor_cB_Z.lower == 1.0 == self.anchor_cB_Z.upper)

    def to_json(self) -> dict:
        return {"dim": self.dim, "domains": self.domains, "conformality_max_rel": self.conformality,
                "monotonicity_max_violation": self.monotonicity, "inconsistent_bounds": self.inconsistencies,
                "c_B(Z)": self.anchor_cB_Z.to_json(), "pass": self.passed}


def axiom_suite(dim: int = 4, scales: Sequence[float] = SCALES,
                catalog: Sequence[ModelDomain] | None = None) -> AxiomReport:
    """Conformality, monotonicity and rule-base consistency over a catalog."""
    cat = list(catalog) if catalog is not None else default_catalog(dim)
    # every shape reached by the conformality check must be in the engine
    extra = [t.with_scale(a).rescaled_shape() for t in cat for a in scales]
    engine = RuleEngine(intermediates(dim) + cat + [Shell(1.0, 2.0, dim)] + extra)
    report = AxiomReport(dim, [str(d) for d in cat])
    pairs = inclusion_pairs(cat)
    for name, ev in capacity_evaluators(engine, dim).items():
        report.conformality[name] = conformality_check(ev, cat, scales)
        report.monotonicity[name] = monotonicity_check(ev, pairs)
    report.inconsistencies = engine.inconsistencies()
    report.anchor_cB_Z = embedding_capacity_bounds(Ball(1.0, dim), Cylinder(1.0, dim), engine)
    return report
