"""Oriented parametrized regions and hypersurfaces, and quadrature of forms over them.

Two integration routes share one tensor-product Gauss-Legendre rule:

``nodes``
    The generic route. Every node of the tensor grid is visited; the form
    is evaluated on the parametrization's partial derivatives and summed
    with the product weights. Works for any parametrization.

``factored``
    For charts whose coordinates are products of per-axis factors
    ``t^a cos(t)^b sin(t)^c`` (balls, shells, ellipsoids, truncated
    cylinders, spheres), a polynomial integrand splits into monomials and
    each monomial's tensor-rule sum factorizes into a product of 1-D sums.
    Same rule, same answer up to rounding, but the cost no longer grows
    like ``order ** dim``.

Orientation conventions: regions default to the standard orientation of
R^m; boundary components carry the outward-normal-first induced
orientation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .forms import FormError, PolyForm, Polynomial, evaluate_batch

DEFAULT_ORDER = 32

Box = tuple[tuple[float, float], ...]


class GeometryError(ValueError):
    """Invalid region parameters or a degenerate parametrization."""


@lru_cache(maxsize=256)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int, lo: float = -1.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    if order < 1:
        raise GeometryError("quadrature order must be at least 1")
    x, w = _leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor-product Gauss-Legendre rule.

    ``order`` is either one order used on every axis or a tuple with one
    order per axis. ``chunk_size`` bounds the number of grid nodes held in
    memory at once by the node route; chunk sums are combined with
    :func:`math.fsum` in a fixed order, so ``workers`` never changes the
    result.
    """

    order: int | tuple[int, ...] = DEFAULT_ORDER
    chunk_size: int = 250_000
    workers: int = 1

    def __post_init__(self):
        orders = (self.order,) if isinstance(self.order, int) else tuple(self.order)
        if not orders or any(int(o) < 1 for o in orders):
            raise GeometryError(f"invalid quadrature order {self.order!r}")
        if self.chunk_size < 1 or self.workers < 1:
            raise GeometryError("chunk_size and workers must be positive")

    def orders(self, ndim: int) -> tuple[int, ...]:
        if isinstance(self.order, int):
            return (self.order,) * ndim
        if len(self.order) != ndim:
            raise GeometryError(f"quadrature spec has {len(self.order)} orders, box has {ndim} axes")
        return tuple(int(o) for o in self.order)

    def rules(self, box: Box) -> list[tuple[np.ndarray, np.ndarray]]:
        return [gauss_legendre(o, lo, hi) for o, (lo, hi) in zip(self.orders(len(box)), box)]

    def doubled(self) -> QuadratureSpec:
        orders = self.order * 2 if isinstance(self.order, int) else tuple(2 * o for o in self.order)
        return replace(self, order=orders)


# ---------------------------------------------------------------------------
# separable charts


@dataclass(frozen=True)
class SeparableChart:
    """A chart ``x_j = scale_j * prod_i f_{j,i}(t_i)`` on a box.

    Each per-axis factor is ``t^a cos(t)^b sin(t)^c``, stored as the triple
    ``(a, b, c)``. ``density_*`` describes the measure factor (the Jacobian
    determinant, or the area element for sphere charts) in the same form.
    """

    box: Box
    coord_scale: tuple[float, ...]
    coord_exps: tuple[tuple[tuple[int, int, int], ...], ...]
    density_scale: float
    density_exps: tuple[tuple[int, int, int], ...]

    @property
    def ndim(self) -> int:
        return len(self.coord_scale)

    def integrate_polynomial(self, p: Polynomial, q: QuadratureSpec) -> float:
        """Tensor-rule quadrature of ``p(x(t)) * density(t)`` over the box."""
        if p.nvars != self.ndim:
            raise GeometryError("polynomial and chart dimensions differ")
        rules = q.rules(self.box)
        cache: dict[tuple[int, tuple[int, int, int]], float] = {}

        def axis_sum(i: int, e: tuple[int, int, int]) -> float:
            key = (i, e)
            if key not in cache:
                t, w = rules[i]
                vals = w.copy()
                if e[0]:
                    vals = vals * t ** e[0]
                if e[1]:
                    vals = vals * np.cos(t) ** e[1]
                if e[2]:
                    vals = vals * np.sin(t) ** e[2]
                cache[key] = math.fsum(vals)
            return cache[key]

        contributions = []
        for exps, c in p.items():
            value = float(c) * self.density_scale
            for j, a in enumerate(exps):
                if a:
                    value *= self.coord_scale[j] ** a
            for i in range(len(self.box)):
                e = list(self.density_exps[i])
                for j, a in enumerate(exps):
                    if a:
                        ce = self.coord_exps[j][i]
                        e[0] += a * ce[0]
                        e[1] += a * ce[1]
                        e[2] += a * ce[2]
                value *= axis_sum(i, tuple(e))
                if value == 0.0:
                    break
            contributions.append(value)
        return math.fsum(contributions)


def _sphere_tables(m: int) -> tuple[tuple, tuple]:
    """Coordinate and area-element exponents of hyperspherical angles on S^{m-1}."""
    d = m - 1
    coords = []
    for j in range(m):
        row = []
        for i in range(d):
            if j == m - 1:
                row.append((0, 0, 1))
            elif i < j:
                row.append((0, 0, 1))
            elif i == j:
                row.append((0, 1, 0))
            else:
                row.append((0, 0, 0))
        coords.append(tuple(row))
    density = tuple((0, 0, m - 2 - i) if i < d - 1 else (0, 0, 0) for i in range(d))
    return tuple(coords), density


def _sphere_box(m: int) -> Box:
    return tuple([(0.0, math.pi)] * (m - 2) + [(0.0, 2.0 * math.pi)])


def unit_sphere_chart(m: int) -> SeparableChart:
    coords, density = _sphere_tables(m)
    return SeparableChart(_sphere_box(m), (1.0,) * m, coords, 1.0, density)


def radial_chart(m: int, r0: float, r1: float, axes: Sequence[float]) -> SeparableChart:
    """``x = rho * diag(axes) * xi(phi)`` with ``rho in [r0, r1]``."""
    coords, density = _sphere_tables(m)
    coords = tuple(((1, 0, 0),) + row for row in coords)
    density = ((m - 1, 0, 0),) + density
    return SeparableChart(((r0, r1),) + _sphere_box(m), tuple(float(a) for a in axes),
                          coords, float(np.prod(axes)), density)


def cylinder_chart(m: int, r: float, half_length: float) -> SeparableChart:
    """Polar coordinates in the first plane times a cube in the rest."""
    box = ((0.0, r), (0.0, 2.0 * math.pi)) + ((-half_length, half_length),) * (m - 2)
    coords = []
    for j in range(m):
        row = [(0, 0, 0)] * m
        if j == 0:
            row[0], row[1] = (1, 0, 0), (0, 1, 0)
        elif j == 1:
            row[0], row[1] = (1, 0, 0), (0, 0, 1)
        else:
            row[j] = (1, 0, 0)
        coords.append(tuple(row))
    density = ((1, 0, 0),) + ((0, 0, 0),) * (m - 1)
    return SeparableChart(box, (1.0,) * m, tuple(coords), 1.0, density)


# ---------------------------------------------------------------------------
# explicit parametrizations used by the node route


def _sphere_coords_from(s: np.ndarray, c: np.ndarray) -> np.ndarray:
    n, d = s.shape
    prefix = np.ones((n, d + 1))
    prefix[:, 1:] = np.cumprod(s, axis=1)
    x = np.empty((n, d + 1))
    x[:, :d] = prefix[:, :d] * c
    x[:, d] = prefix[:, d]
    return x


def sphere_point(phi: np.ndarray) -> np.ndarray:
    """Unit vectors in R^{d+1} from hyperspherical angles ``phi`` of shape ``(N, d)``."""
    return _sphere_coords_from(np.sin(phi), np.cos(phi))


def sphere_jacobian(phi: np.ndarray) -> np.ndarray:
    """Partial derivatives of :func:`sphere_point`, shape ``(N, d+1, d)``."""
    s, c = np.sin(phi), np.cos(phi)
    n, d = phi.shape
    jac = np.empty((n, d + 1, d))
    for l in range(d):
        # angle l enters coordinates j >= l exactly once, as sin or cos
        s2, c2 = s.copy(), c.copy()
        s2[:, l], c2[:, l] = c[:, l], -s[:, l]
        col = _sphere_coords_from(s2, c2)
        col[:, :l] = 0.0
        jac[:, :, l] = col
    return jac


@dataclass(frozen=True)
class Hypersurface:
    """Closed oriented hypersurface in R^m given by a parametrization of a box in R^{m-1}.

    ``orientation_sign`` composed with the parameter ordering gives the
    orientation. For sphere-type surfaces (``axes`` set, ``x = diag(axes) xi``
    with ``xi`` on the unit sphere) ``chart_sign`` records whether the
    parameter ordering is outward-normal-first, which enables the
    factored route.
    """

    dim: int
    box: Box
    point: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    orientation_sign: int = 1
    label: str = ""
    axes: tuple[float, ...] | None = None
    chart_sign: int = 1

    def __post_init__(self):
        if self.orientation_sign not in (1, -1):
            raise GeometryError("orientation_sign must be +1 or -1")
        if len(self.box) != self.dim - 1:
            raise GeometryError("a hypersurface in R^m is parametrized by m - 1 coordinates")

    def reversed(self) -> Hypersurface:
        return replace(self, orientation_sign=-self.orientation_sign)

    def with_label(self, label: str) -> Hypersurface:
        return replace(self, label=label)

    @property
    def outward_sign(self) -> int:
        """Orientation relative to the outward normal (sphere-type surfaces only)."""
        if self.axes is None:
            raise GeometryError(f"{self.label or 'hypersurface'} has no sphere structure")
        return self.orientation_sign * self.chart_sign

    def linear_image(self, matrix: Sequence[Sequence[float]], label: str | None = None) -> Hypersurface:
        """Image under ``x -> A x`` carrying the pushed-forward orientation."""
        A = np.asarray(matrix, dtype=float)
        if A.shape != (self.dim, self.dim):
            raise GeometryError("linear image needs an m x m matrix")
        pt, jac = self.point, self.jacobian
        return Hypersurface(
            self.dim, self.box,
            lambda t: pt(t) @ A.T,
            lambda t: np.einsum("ij,njk->nik", A, jac(t)),
            self.orientation_sign, label or f"A({self.label})", None, 1,
        )


def sphere(dim: int, radius: float = 1.0, *, axes: Sequence[float] | None = None,
           outward: bool = True, label: str = "sphere") -> Hypersurface:
    """Sphere of the given radius, or ellipsoid boundary ``diag(axes) S^{m-1}``."""
    if dim < 2:
        raise GeometryError("spheres need ambient dimension at least 2")
    ax = tuple(float(a) for a in axes) if axes is not None else (float(radius),) * dim
    if len(ax) != dim or any(not a > 0 for a in ax):
        raise GeometryError(f"need {dim} positive semi-axes, got {ax}")
    D = np.asarray(ax)

    def point(phi):
        return sphere_point(phi) * D

    def jacobian(phi):
        return sphere_jacobian(phi) * D[None, :, None]

    box = _sphere_box(dim)
    probe = np.array([[0.5 * (lo + hi) + 0.1 for lo, hi in box]])
    normal = sphere_point(probe)[0] / D
    chart_sign = int(np.sign(np.linalg.det(np.column_stack([normal, jacobian(probe)[0]]))))
    return Hypersurface(dim, box, point, jacobian, chart_sign * (1 if outward else -1),
                        label, ax, chart_sign)


@dataclass(frozen=True)
class Region:
    """Compact (or truncated) oriented region in R^m.

    ``point``/``jacobian`` parametrize a box in R^m covering the region up
    to measure zero. ``boundary`` lists the boundary components with the
    induced orientation. ``orientation_sign`` is relative to the standard
    orientation of R^m; ``chart_sign`` is the sign of the parametrization's
    Jacobian determinant.
    """

    dim: int
    label: str
    contains: Callable[[np.ndarray], np.ndarray]
    box: Box
    point: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    boundary: tuple[Hypersurface, ...] = ()
    orientation_sign: int = 1
    chart_sign: int = 1
    chart: SeparableChart | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.orientation_sign not in (1, -1):
            raise GeometryError("orientation_sign must be +1 or -1")
        if len(self.box) != self.dim:
            raise GeometryError("region parametrization box must have m axes")

    def with_orientation(self, sign: int) -> Region:
        """Same region with orientation ``sign`` relative to the standard one."""
        if sign == self.orientation_sign:
            return self
        return replace(self, orientation_sign=sign,
                       boundary=tuple(h.reversed() for h in self.boundary))

    def component(self, label: str) -> Hypersurface:
        for h in self.boundary:
            if h.label == label:
                return h
        raise KeyError(label)


def _radial_region(dim: int, r0: float, r1: float, axes: Sequence[float], label: str,
                   contains: Callable, boundary: tuple[Hypersurface, ...], params: dict) -> Region:
    D = np.asarray(axes, dtype=float)

    def point(t):
        return t[:, :1] * sphere_point(t[:, 1:]) * D

    def jacobian(t):
        rho, phi = t[:, :1], t[:, 1:]
        jac = np.empty((t.shape[0], dim, dim))
        jac[:, :, 0] = sphere_point(phi) * D
        jac[:, :, 1:] = rho[:, :, None] * sphere_jacobian(phi) * D[None, :, None]
        return jac

    box = ((r0, r1),) + _sphere_box(dim)
    probe = np.array([[0.5 * (lo + hi) + 0.1 for lo, hi in box]])
    chart_sign = int(np.sign(np.linalg.det(jacobian(probe)[0])))
    return Region(dim, label, contains, box, point, jacobian, boundary, 1, chart_sign,
                  radial_chart(dim, r0, r1, axes), params)


def ball(dim: int, r: float = 1.0) -> Region:
    if not r > 0:
        raise GeometryError("ball radius must be positive")

    def contains(x):
        return np.linalg.norm(np.atleast_2d(x), axis=1) <= r

    return _radial_region(dim, 0.0, r, (1.0,) * dim, f"ball({r:g})", contains,
                          (sphere(dim, r, label="outer"),), {"kind": "ball", "r": r})


def shell(dim: int, r: float, R: float) -> Region:
    if not (0 < r < R):
        raise GeometryError(f"shell needs 0 < r < R, got r={r}, R={R}")

    def contains(x):
        nrm = np.linalg.norm(np.atleast_2d(x), axis=1)
        return (nrm >= r) & (nrm <= R)

    boundary = (sphere(dim, R, label="outer"), sphere(dim, r, outward=False, label="inner"))
    return _radial_region(dim, r, R, (1.0,) * dim, f"shell({r:g},{R:g})", contains, boundary,
                          {"kind": "shell", "r": r, "R": R})


def ellipsoid(dim: int, semi_axes: Sequence[float]) -> Region:
    """Solid ellipsoid ``sum_i |z_i|^2 / r_i^2 <= 1`` with one radius per complex plane.

    ``semi_axes`` may also list all ``dim`` Cartesian semi-axes.
    """
    semi = [float(a) for a in semi_axes]
    if len(semi) * 2 == dim:
        semi = [a for a in semi for _ in range(2)]
    if len(semi) != dim or any(not a > 0 for a in semi):
        raise GeometryError(f"ellipsoid in R^{dim} needs {dim // 2} or {dim} positive semi-axes")
    D = np.asarray(semi)

    def contains(x):
        return np.sum((np.atleast_2d(x) / D) ** 2, axis=1) <= 1.0

    label = "ellipsoid(" + ",".join(f"{a:g}" for a in semi_axes) + ")"
    return _radial_region(dim, 0.0, 1.0, semi, label, contains,
                          (sphere(dim, axes=semi, label="outer"),),
                          {"kind": "ellipsoid", "semi_axes": tuple(semi_axes)})


def cylinder_truncated(dim: int, r: float, half_length: float) -> Region:
    """``B^2_r x [-L, L]^{m-2}``; a volume surrogate without boundary data."""
    if not (r > 0 and half_length > 0) or dim < 2:
        raise GeometryError("cylinder needs positive radius and half-length")

    def contains(x):
        x = np.atleast_2d(x)
        return (np.hypot(x[:, 0], x[:, 1]) <= r) & np.all(np.abs(x[:, 2:]) <= half_length, axis=1)

    def point(t):
        x = t.copy()
        x[:, 0] = t[:, 0] * np.cos(t[:, 1])
        x[:, 1] = t[:, 0] * np.sin(t[:, 1])
        return x

    def jacobian(t):
        n = t.shape[0]
        jac = np.zeros((n, dim, dim))
        jac[:, 0, 0], jac[:, 0, 1] = np.cos(t[:, 1]), -t[:, 0] * np.sin(t[:, 1])
        jac[:, 1, 0], jac[:, 1, 1] = np.sin(t[:, 1]), t[:, 0] * np.cos(t[:, 1])
        for j in range(2, dim):
            jac[:, j, j] = 1.0
        return jac

    box = ((0.0, r), (0.0, 2 * math.pi)) + ((-half_length, half_length),) * (dim - 2)
    return Region(dim, f"cylinder_truncated({r:g},{half_length:g})", contains, box, point, jacobian,
                  (), 1, 1, cylinder_chart(dim, r, half_length),
                  {"kind": "cylinder_truncated", "r": r, "L": half_length})


CATALOG = ("ball", "shell", "ellipsoid", "cylinder_truncated")


def catalog_region(name: str, dim: int, *params: float) -> Region:
    """Build a catalog region by name: ``ball(r)``, ``shell(r, R)``,
    ``ellipsoid(a_1, ..., a_n)`` or ``cylinder_truncated(r, L)``."""
    if dim < 2:
        raise GeometryError("regions need dimension at least 2")
    try:
        if name == "ball":
            return ball(dim, *(params or (1.0,)))
        if name == "shell":
            return shell(dim, *params)
        if name == "ellipsoid":
            return ellipsoid(dim, params)
        if name in ("cylinder_truncated", "cylinder"):
            return cylinder_truncated(dim, *params)
    except TypeError as exc:
        raise GeometryError(f"bad parameters for {name}: {params}") from exc
    raise GeometryError(f"unknown region {name!r}; choose from {', '.join(CATALOG)}")


def parse_region(text: str, dim: int) -> Region:
    """Parse ``"shell:1,2"``-style region names."""
    name, _, rest = text.partition(":")
    params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
    return catalog_region(name.strip(), dim, *params)


# ---------------------------------------------------------------------------
# integration


def _grid_chunks(rules, chunk_size: int):
    orders = tuple(len(n) for n, _ in rules)
    total = math.prod(orders)
    for start in range(0, total, chunk_size):
        idx = np.unravel_index(np.arange(start, min(start + chunk_size, total)), orders)
        theta = np.column_stack([rules[i][0][idx[i]] for i in range(len(rules))])
        weights = np.ones(theta.shape[0])
        for i in range(len(rules)):
            weights = weights * rules[i][1][idx[i]]
        yield theta, weights


def _node_sum(rules, chunk_size: int, workers: int, integrand: Callable) -> float:
    def work(chunk):
        theta, weights = chunk
        return float(np.sum(weights * integrand(theta)))

    chunks = _grid_chunks(rules, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(work, chunks))
    else:
        partial = [work(c) for c in chunks]
    return math.fsum(partial)


def _min_rank_ratio(jac: np.ndarray) -> float:
    sv = np.linalg.svd(jac, compute_uv=False)
    return float(np.min(sv[:, -1] / np.maximum(sv[:, 0], 1e-300)))


def jacobian_rank_ratio(h: Hypersurface, q: QuadratureSpec | None = None) -> float:
    """Smallest ratio of extreme singular values of the Jacobian over all nodes."""
    q = q or QuadratureSpec()
    worst = math.inf
    for theta, _ in _grid_chunks(q.rules(h.box), q.chunk_size):
        worst = min(worst, _min_rank_ratio(h.jacobian(theta)))
    return worst


RANK_TOL = 1e-12


def _choose(method: str, factored_ok: bool) -> str:
    if method == "auto":
        return "factored" if factored_ok else "nodes"
    if method == "factored" and not factored_ok:
        raise GeometryError("factored integration needs a separable chart")
    if method not in ("nodes", "factored"):
        raise GeometryError(f"unknown integration method {method!r}")
    return method


def integrate_over_hypersurface(form: PolyForm, h: Hypersurface, q: QuadratureSpec | None = None,
                                method: str = "auto", check_rank: bool = True) -> float:
    """Integral of an ``(m-1)``-form over an oriented hypersurface.

    Raises :class:`FormError` on a dimension or degree mismatch and
    :class:`GeometryError` when the Jacobian is rank deficient at a node.
    """
    q = q or QuadratureSpec()
    if form.dim != h.dim:
        raise FormError(f"form lives in R^{form.dim}, hypersurface in R^{h.dim}")
    if form.degree != h.dim - 1:
        raise FormError(f"need a form of degree {h.dim - 1}, got degree {form.degree}")
    if form.is_zero():
        return 0.0
    if _choose(method, h.axes is not None) == "factored":
        if check_rank:
            _check_sphere_nodes(h, q)
        return h.outward_sign * _sphere_flux(form, h.axes, q)

    def integrand(theta):
        jac = h.jacobian(theta)
        if check_rank and _min_rank_ratio(jac) < RANK_TOL:
            raise GeometryError(f"rank-deficient Jacobian on {h.label or 'hypersurface'}")
        return evaluate_batch(form, h.point(theta), jac)

    return h.orientation_sign * _node_sum(q.rules(h.box), q.chunk_size, q.workers, integrand)


def _check_sphere_nodes(h: Hypersurface, q: QuadratureSpec) -> None:
    # the hyperspherical Jacobian of diag(axes) S^{m-1} drops rank only where a polar sine vanishes
    for nodes, _ in q.rules(h.box)[:-1]:
        if np.min(np.abs(np.sin(nodes))) < RANK_TOL:
            raise GeometryError(f"rank-deficient Jacobian on {h.label or 'hypersurface'}")


def _sphere_flux(form: PolyForm, axes: Sequence[float], q: QuadratureSpec) -> float:
    """Outward integral of ``form`` over ``diag(axes) S^{m-1}``.

    Uses that ``dx_1 ∧ .. ^dx_j .. ∧ dx_m`` restricts to the unit sphere as
    ``(-1)^j xi_j dsigma`` (0-based ``j``).
    """
    m = form.dim
    chart = unit_sphere_chart(m)
    total = Polynomial(m)
    for idx, p in form.items():
        (missing,) = set(range(m)) - set(idx)
        factor = math.prod(axes[l] for l in idx) * (-1) ** missing
        total = total + p.scale_variables(axes) * Polynomial.variable(missing, m) * factor
    return chart.integrate_polynomial(total, q)


def integrate_over_region(form: PolyForm, r: Region, q: QuadratureSpec | None = None,
                          method: str = "auto") -> float:
    """Integral of a top-degree form over a region with its orientation."""
    q = q or QuadratureSpec()
    if form.dim != r.dim:
        raise FormError(f"form lives in R^{form.dim}, region in R^{r.dim}")
    if form.degree != r.dim:
        raise FormError(f"need a top-degree form (degree {r.dim}), got degree {form.degree}")
    if form.is_zero():
        return 0.0
    coeff = form.coefficient(*range(r.dim))
    if _choose(method, r.chart is not None) == "factored":
        return r.orientation_sign * r.chart.integrate_polynomial(coeff, q)

    def integrand(theta):
        return evaluate_batch(form, r.point(theta), r.jacobian(theta))

    return r.orientation_sign * r.chart_sign * _node_sum(q.rules(r.box), q.chunk_size, q.workers, integrand)


def top_coefficient_at_nodes(form: PolyForm, r: Region, max_nodes: int = 200_000,
                             q: QuadratureSpec | None = None) -> np.ndarray:
    """Values of a top form's coefficient at the region's quadrature nodes.

    When the full grid exceeds ``max_nodes`` the per-axis order is lowered
    uniformly until it fits.
    """
    q = q or QuadratureSpec()
    orders = list(q.orders(r.dim))
    while math.prod(orders) > max_nodes and max(orders) > 2:
        orders = [max(2, o - 1) for o in orders]
    coeff = form.coefficient(*range(r.dim))
    rules = QuadratureSpec(tuple(orders)).rules(r.box)
    values = [coeff.evaluate_batch(r.point(theta)) for theta, _ in _grid_chunks(rules, q.chunk_size)]
    return np.concatenate(values)
