"""Exact exterior algebra on R^m with polynomial coefficients.

Coefficients are multivariate polynomials over the rationals
(:class:`fractions.Fraction`), so every algebraic identity (graded
commutativity, d∘d = 0, the Leibniz rule) holds with equality.
Numerical evaluation at points, used by the quadrature layer, converts
to float only at the last step.

Conventions
-----------
* Coordinates are indexed from 0 internally. Multi-indices are strictly
  increasing tuples. The JSON form uses 1-based indices.
* ``dx_i ∧ dx_j (e_i, e_j) = 1`` (determinant convention).
* The standard symplectic form is ``sum_i dx_{2i-1} ∧ dx_{2i}`` and its
  canonical primitive is ``sum_i x_{2i-1} dx_{2i}`` (1-based).
"""

from __future__ import annotations

import json
from fractions import Fraction
from itertools import combinations
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponents = tuple[int, ...]
MultiIndex = tuple[int, ...]


class FormError(ValueError):
    """Raised on malformed forms or incompatible operands."""


def _to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, (float, np.floating)):
        if not np.isfinite(c):
            raise FormError(f"non-finite coefficient {c!r}")
        return Fraction(float(c))
    raise TypeError(f"cannot use {type(c).__name__} as a rational coefficient")


def _merge_sign(a: MultiIndex, b: MultiIndex) -> tuple[int, MultiIndex] | None:
    """Sign of the shuffle sorting ``a + b``, or None if they overlap."""
    if set(a) & set(b):
        return None
    inversions = sum(1 for i in a for j in b if i > j)
    return (-1) ** inversions, tuple(sorted(a + b))


class Polynomial:
    """Sparse multivariate polynomial in ``nvars`` variables, rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponents, object] | None = None):
        if nvars < 0:
            raise FormError("number of variables must be non-negative")
        self.nvars = nvars
        clean: dict[Exponents, Fraction] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars or any(e < 0 for e in exps):
                raise FormError(f"bad exponent vector {exps} for {nvars} variables")
            c = _to_fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, c, nvars: int) -> Polynomial:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, j: int, nvars: int) -> Polynomial:
        exps = [0] * nvars
        exps[j] = 1
        return cls(nvars, {tuple(exps): 1})

    @property
    def terms(self) -> dict[Exponents, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def _check(self, other: Polynomial):
        if self.nvars != other.nvars:
            raise FormError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other: Polynomial) -> Polynomial:
        self._check(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    def __neg__(self) -> Polynomial:
        return Polynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + (-other)

    def __mul__(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check(other)
            out: dict[Exponents, Fraction] = {}
            for e1, c1 in self._terms.items():
                for e2, c2 in other._terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
            return Polynomial(self.nvars, out)
        c = _to_fraction(other)
        return Polynomial(self.nvars, {e: c * v for e, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in sorted(self._terms.items()):
            mono = "*".join(f"x{j + 1}^{p}" if p > 1 else f"x{j + 1}" for j, p in enumerate(e) if p)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def derivative(self, j: int) -> Polynomial:
        out = {}
        for e, c in self._terms.items():
            if e[j]:
                e2 = list(e)
                e2[j] -= 1
                out[tuple(e2)] = c * e[j]
        return Polynomial(self.nvars, out)

    def scale_variables(self, factors: Sequence) -> Polynomial:
        """Substitute ``x_j -> factors[j] * x_j``."""
        fs = [_to_fraction(f) for f in factors]
        out = {}
        for e, c in self._terms.items():
            for f, p in zip(fs, e):
                c = c * f**p
            out[e] = c
        return Polynomial(self.nvars, out)

    def compose_linear(self, matrix: Sequence[Sequence]) -> Polynomial:
        """Substitute ``x -> A x`` for a rational square matrix ``A``."""
        A = [[_to_fraction(a) for a in row] for row in matrix]
        m = self.nvars
        if len(A) != m or any(len(row) != m for row in A):
            raise FormError("linear substitution needs an m x m matrix")
        images = [Polynomial(m, {tuple(int(i == j) for i in range(m)): A[r][j] for j in range(m)})
                  for r in range(m)]
        out = Polynomial(m)
        one = Polynomial.constant(1, m)
        for e, c in self._terms.items():
            term = one * c
            for r, p in enumerate(e):
                for _ in range(p):
                    term = term * images[r]
            out = out + term
        return out

    def __call__(self, point: Sequence[float]) -> float:
        return float(self.evaluate_batch(np.asarray(point, dtype=float)[None, :])[0])

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape ``(N, nvars)``)."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[0])
        if not self._terms:
            return out
        maxdeg = [max(e[j] for e in self._terms) for j in range(self.nvars)]
        powers = []
        for j in range(self.nvars):
            pw = [np.ones(points.shape[0])]
            for _ in range(maxdeg[j]):
                pw.append(pw[-1] * points[:, j])
            powers.append(pw)
        for e, c in self._terms.items():
            mono = np.full(points.shape[0], float(c))
            for j, p in enumerate(e):
                if p:
                    mono = mono * powers[j][p]
            out += mono
        return out

    def to_json(self) -> list[dict]:
        return [{"exps": list(e), "num": c.numerator, "den": c.denominator}
                for e, c in sorted(self._terms.items())]

    @classmethod
    def from_json(cls, data: Iterable[Mapping], nvars: int) -> Polynomial:
        terms: dict[Exponents, Fraction] = {}
        for t in data:
            e = tuple(t["exps"])
            terms[e] = terms.get(e, Fraction(0)) + Fraction(int(t["num"]), int(t.get("den", 1)))
        return cls(nvars, terms)


class PolyForm:
    """A differential ``degree``-form on R^``dim`` with polynomial coefficients.

    Immutable. ``terms`` maps strictly increasing 0-based index tuples to
    :class:`Polynomial` coefficients; zero coefficients are dropped. The
    zero form of degree ``dim + 1`` is representable (it is what ``d``
    returns on top-degree forms).
    """

    __slots__ = ("dim", "degree", "_terms")

    def __init__(self, dim: int, degree: int, terms: Mapping[MultiIndex, Polynomial] | None = None):
        if dim < 1:
            raise FormError("ambient dimension must be positive")
        if degree < 0 or degree > dim + 1:
            raise FormError(f"degree {degree} out of range for dimension {dim}")
        clean: dict[MultiIndex, Polynomial] = {}
        for idx, p in (terms or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree:
                raise FormError(f"index {idx} does not have length {degree}")
            if any(a >= b for a, b in zip(idx, idx[1:])) or any(i < 0 or i >= dim for i in idx):
                raise FormError(f"index {idx} is not strictly increasing within 0..{dim - 1}")
            if not isinstance(p, Polynomial):
                p = Polynomial.constant(p, dim)
            if p.nvars != dim:
                raise FormError("coefficient polynomial has the wrong number of variables")
            if idx in clean:
                p = clean[idx] + p
            if p.is_zero():
                clean.pop(idx, None)
            else:
                clean[idx] = p
        if degree == dim + 1 and clean:
            raise FormError("a form of degree dim + 1 must be zero")
        self.dim = dim
        self.degree = degree
        self._terms = clean

    # construction helpers
    @classmethod
    def zero(cls, dim: int, degree: int) -> PolyForm:
        return cls(dim, degree)

    @classmethod
    def basis(cls, dim: int, *indices: int, coefficient=1) -> PolyForm:
        """``coefficient * dx_{i1} ∧ ... ∧ dx_{ik}`` with 0-based, unsorted indices allowed."""
        idx = tuple(indices)
        if len(set(idx)) < len(idx):
            return cls(dim, len(idx))
        order = sorted(range(len(idx)), key=lambda t: idx[t])
        sign = _permutation_sign(order)
        coeff = coefficient if isinstance(coefficient, Polynomial) else Polynomial.constant(coefficient, dim)
        return cls(dim, len(idx), {tuple(sorted(idx)): coeff * sign})

    @classmethod
    def function(cls, p: Polynomial) -> PolyForm:
        return cls(p.nvars, 0, {(): p})

    @property
    def terms(self) -> dict[MultiIndex, Polynomial]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, *indices: int) -> Polynomial:
        return self._terms.get(tuple(indices), Polynomial(self.dim))

    def _check(self, other: PolyForm, same_degree: bool = True):
        if not isinstance(other, PolyForm):
            raise TypeError("expected a PolyForm")
        if self.dim != other.dim:
            raise FormError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if same_degree and self.degree != other.degree:
            raise FormError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: PolyForm) -> PolyForm:
        self._check(other)
        out = dict(self._terms)
        for idx, p in other._terms.items():
            out[idx] = out[idx] + p if idx in out else p
        return PolyForm(self.dim, self.degree, out)

    def __neg__(self) -> PolyForm:
        return PolyForm(self.dim, self.degree, {i: -p for i, p in self._terms.items()})

    def __sub__(self, other: PolyForm) -> PolyForm:
        return self + (-other)

    def __mul__(self, c) -> PolyForm:
        if isinstance(c, PolyForm):
            return NotImplemented
        if isinstance(c, Polynomial):
            return PolyForm(self.dim, self.degree, {i: p * c for i, p in self._terms.items()})
        c = _to_fraction(c)
        return PolyForm(self.dim, self.degree, {i: p * c for i, p in self._terms.items()})

    __rmul__ = __mul__

    def __xor__(self, other: PolyForm) -> PolyForm:
        return wedge(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyForm):
            return NotImplemented
        return (self.dim, self.degree, self._terms) == (other.dim, other.degree, other._terms)

    def __hash__(self) -> int:
        return hash((self.dim, self.degree, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"PolyForm(dim={self.dim}, degree={self.degree}, 0)"
        parts = []
        for idx, p in sorted(self._terms.items()):
            basis = "∧".join(f"dx{i + 1}" for i in idx) or "1"
            parts.append(f"({p}) {basis}")
        return f"PolyForm(dim={self.dim}, degree={self.degree}, " + " + ".join(parts) + ")"

    def wedge(self, other: PolyForm) -> PolyForm:
        return wedge(self, other)

    def d(self) -> PolyForm:
        return exterior_derivative(self)

    def power(self, n: int) -> PolyForm:
        return wedge_power(self, n)

    def coefficient_degree(self) -> int:
        return max((p.degree() for p in self._terms.values()), default=-1)

    def evaluate(self, point: Sequence[float], vectors: Sequence[Sequence[float]]) -> float:
        return evaluate(self, point, vectors)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"idx": [i + 1 for i in idx], "poly": p.to_json()}
                      for idx, p in sorted(self._terms.items())],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: Mapping) -> PolyForm:
        try:
            dim, degree = int(data["dim"]), int(data["degree"])
            terms: dict[MultiIndex, Polynomial] = {}
            for t in data["terms"]:
                idx = tuple(int(i) - 1 for i in t["idx"])
                p = Polynomial.from_json(t["poly"], dim)
                terms[idx] = terms[idx] + p if idx in terms else p
        except (KeyError, TypeError) as exc:
            raise FormError(f"malformed form JSON: {exc}") from exc
        return cls(dim, degree, terms)

    @classmethod
    def loads(cls, text: str) -> PolyForm:
        return cls.from_json(json.loads(text))


def _permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def wedge(a: PolyForm, b: PolyForm) -> PolyForm:
    """Exterior product ``a ∧ b``.

    Raises :class:`FormError` on dimension mismatch or when the degrees
    add up to more than the ambient dimension.
    """
    a._check(b, same_degree=False)
    deg = a.degree + b.degree
    if deg > a.dim:
        raise FormError(f"wedge degree {deg} exceeds ambient dimension {a.dim}")
    out: dict[MultiIndex, Polynomial] = {}
    for ia, pa in a.items():
        for ib, pb in b.items():
            merged = _merge_sign(ia, ib)
            if merged is None:
                continue
            sign, idx = merged
            term = pa * pb
            if sign < 0:
                term = -term
            out[idx] = out[idx] + term if idx in out else term
    return PolyForm(a.dim, deg, out)


def wedge_power(a: PolyForm, n: int) -> PolyForm:
    """``a ∧ ... ∧ a`` (n factors); ``n = 0`` gives the constant 1."""
    if n < 0:
        raise FormError("wedge power must be non-negative")
    result = PolyForm.function(Polynomial.constant(1, a.dim))
    for _ in range(n):
        result = wedge(result, a)
    return result


def exterior_derivative(a: PolyForm) -> PolyForm:
    """Exterior derivative. On a top-degree form returns the zero ``(m+1)``-form."""
    if a.degree >= a.dim:
        return PolyForm(a.dim, a.degree + 1) if a.degree == a.dim else PolyForm(a.dim, a.degree)
    out: dict[MultiIndex, Polynomial] = {}
    for idx, p in a.items():
        for j in range(a.dim):
            if j in idx:
                continue
            dp = p.derivative(j)
            if dp.is_zero():
                continue
            pos = sum(1 for i in idx if i < j)
            if pos % 2:
                dp = -dp
            key = tuple(sorted(idx + (j,)))
            out[key] = out[key] + dp if key in out else dp
    return PolyForm(a.dim, a.degree + 1, out)


def _minor_batch(vectors: np.ndarray, rows: MultiIndex) -> np.ndarray:
    """Determinants of the ``rows`` submatrices of ``vectors`` (shape ``(N, m, k)``)."""
    sub = vectors[:, list(rows), :]
    k = len(rows)
    if k == 0:
        return np.ones(vectors.shape[0])
    if k == 1:
        return sub[:, 0, 0]
    if k == 2:
        return sub[:, 0, 0] * sub[:, 1, 1] - sub[:, 0, 1] * sub[:, 1, 0]
    return np.linalg.det(sub)


def evaluate_batch(a: PolyForm, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Evaluate ``a`` at ``points`` (``(N, m)``) on ``vectors`` (``(N, m, k)``, columns)."""
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if points.ndim != 2 or points.shape[1] != a.dim:
        raise FormError(f"points must have shape (N, {a.dim})")
    if vectors.shape != (points.shape[0], a.dim, a.degree):
        raise FormError(f"expected {a.degree} vectors of length {a.dim} per point, "
                        f"got array of shape {vectors.shape}")
    out = np.zeros(points.shape[0])
    for idx, p in a.items():
        out += p.evaluate_batch(points) * _minor_batch(vectors, idx)
    return out


def evaluate(a: PolyForm, point: Sequence[float], vectors: Sequence[Sequence[float]]) -> float:
    """Value of the form at ``point`` on the given tangent vectors.

    Multilinear and alternating in ``vectors``; the value is the sum of
    coefficient times the corresponding minor of the vector matrix.
    """
    point = np.asarray(point, dtype=float)
    vecs = np.asarray(vectors, dtype=float).reshape(-1, a.dim) if len(vectors) else np.zeros((0, a.dim))
    if point.shape != (a.dim,):
        raise FormError(f"point must have length {a.dim}")
    if vecs.shape[0] != a.degree:
        raise FormError(f"form of degree {a.degree} needs {a.degree} vectors, got {vecs.shape[0]}")
    # Evaluate on a canonical ordering of the vectors and restore the sign, so
    # that swapping two inputs negates the float result exactly.
    order = sorted(range(len(vecs)), key=lambda i: tuple(vecs[i]))
    if any((vecs[i] == vecs[j]).all() for i, j in zip(order, order[1:])):
        return 0.0
    sign = _permutation_sign(order)
    return sign * float(evaluate_batch(a, point[None, :], vecs[order].T[None, :, :])[0])


def scale_form(a: PolyForm, c) -> PolyForm:
    """``c * a`` with ``c`` converted to an exact rational."""
    return a * _to_fraction(c)


def pullback_linear(a: PolyForm, matrix: Sequence[Sequence]) -> PolyForm:
    """Pullback of ``a`` under the linear map ``x -> A x`` (rational ``A``)."""
    A = [[_to_fraction(v) for v in row] for row in matrix]
    m = a.dim
    if len(A) != m or any(len(row) != m for row in A):
        raise FormError("pullback needs an m x m matrix")
    # A^* dx_r = sum_j A[r][j] dx_j
    images = [PolyForm(m, 1, {(j,): Polynomial.constant(A[r][j], m) for j in range(m)}) for r in range(m)]
    out = PolyForm(m, a.degree)
    for idx, p in a.items():
        term = PolyForm.function(p.compose_linear(A))
        for r in idx:
            term = wedge(term, images[r])
        out = out + term
    return out


def standard_symplectic(dim: int) -> PolyForm:
    """``sum_i dx_{2i-1} ∧ dx_{2i}`` on R^dim (dim even)."""
    if dim % 2:
        raise FormError("the standard symplectic form needs an even dimension")
    return PolyForm(dim, 2, {(2 * i, 2 * i + 1): Polynomial.constant(1, dim) for i in range(dim // 2)})


def liouville_primitive(dim: int) -> PolyForm:
    """Canonical primitive ``sum_i x_{2i-1} dx_{2i}`` of :func:`standard_symplectic`."""
    if dim % 2:
        raise FormError("the standard symplectic form needs an even dimension")
    return PolyForm(dim, 1, {(2 * i + 1,): Polynomial.variable(2 * i, dim) for i in range(dim // 2)})


def volume_form(dim: int) -> PolyForm:
    return PolyForm(dim, dim, {tuple(range(dim)): Polynomial.constant(1, dim)})


def multi_indices(dim: int, degree: int) -> list[MultiIndex]:
    return list(combinations(range(dim), degree))
