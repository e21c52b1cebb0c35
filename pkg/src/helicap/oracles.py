"""Independent reference computations used to cross-check the main code paths.

None of these share code with the routines they check: the separation
constants are found by brute-force search over a grid of ``C`` values,
wedge products are evaluated through the permutation expansion of
alternating multilinear maps, and integrals use closed-form Gamma-function
moments together with Stokes' theorem.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from .forms import PolyForm

GRID_STEP = 1e-6


@lru_cache(maxsize=8)
def _grid(n: int, step: float = GRID_STEP) -> tuple[np.ndarray, np.ndarray]:
    c = np.arange(0, round(1 / step) + 1) * step
    return c, c ** n


def _grid_max(mask: np.ndarray, c: np.ndarray) -> float:
    hits = np.flatnonzero(mask)
    return float(c[hits[-1]]) if hits.size else 0.0


def grid_C1(values: Sequence[float], n: int, step: float = GRID_STEP) -> float:
    """Largest grid ``C`` in [0, 1] with strict positive pair ``h > h'`` and ``h' >= C^n h``."""
    c, cn = _grid(n, step)
    pos = [v for v in values if v > 0]
    best = 0.0
    for hi in pos:
        for hj in pos:
            if hi > hj:
                best = max(best, _grid_max(hj >= cn * hi, c))
    return best


def grid_C2(values: Sequence[float], n: int, step: float = GRID_STEP) -> float:
    """Largest grid ``C`` in [0, 1] with ``(1 - C^n) h+ >= -h-`` for some positive/negative pair."""
    c, cn = _grid(n, step)
    best = 0.0
    for hp in (v for v in values if v > 0):
        for hm in (v for v in values if v < 0):
            best = max(best, _grid_max((1 - cn) * hp >= -hm, c))
    return best


def grid_C0(values: Sequence[float], n: int, step: float = GRID_STEP) -> float:
    return max(grid_C1(values, n, step), grid_C2(values, n, step))


def _perm_sign(p: Sequence[int]) -> int:
    sign, p = 1, list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def wedge_by_permutations(a: PolyForm, b: PolyForm, point, vectors) -> float:
    """``(a ∧ b)(v_1..v_{p+q})`` from the alternation formula, using only evaluations of ``a`` and ``b``."""
    p, q = a.degree, b.degree
    vectors = [list(v) for v in vectors]
    total = 0.0
    for perm in permutations(range(p + q)):
        va = [vectors[i] for i in perm[:p]]
        vb = [vectors[i] for i in perm[p:]]
        total += _perm_sign(perm) * a.evaluate(point, va) * b.evaluate(point, vb)
    return total / (math.factorial(p) * math.factorial(q))


def sphere_moment(alpha: Sequence[int], radius: float = 1.0) -> float:
    """``∫ x^alpha dσ`` over the round sphere of the given radius in ``R^len(alpha)``."""
    if any(a % 2 for a in alpha):
        return 0.0
    m, deg = len(alpha), sum(alpha)
    log = math.log(2.0) + sum(math.lgamma((a + 1) / 2) for a in alpha) - math.lgamma((deg + m) / 2)
    return math.exp(log) * radius ** (deg + m - 1)


def ball_moment(alpha: Sequence[int], radius: float = 1.0, inner: float = 0.0) -> float:
    """``∫ x^alpha dx`` over the ball (or shell, if ``inner > 0``)."""
    m, deg = len(alpha), sum(alpha)
    unit = sphere_moment(alpha)
    return unit * (radius ** (deg + m) - inner ** (deg + m)) / (deg + m)


def ball_volume(dim: int, radius: float = 1.0) -> float:
    return math.pi ** (dim / 2) * radius ** dim / math.gamma(dim / 2 + 1)


def top_form_over_ball(form: PolyForm, radius: float = 1.0, inner: float = 0.0) -> float:
    """``∫ form`` over a centred ball or shell with the standard orientation, from monomial moments."""
    if form.degree != form.dim:
        raise ValueError("need a top-degree form")
    coeff = form.coefficient(*range(form.dim))
    return math.fsum(float(c) * ball_moment(e, radius, inner) for e, c in coeff.items())


def boundary_integral_by_stokes(form: PolyForm, radius: float = 1.0, inner: float = 0.0) -> float:
    """``∫`` of an ``(m-1)``-form over the oriented boundary of a centred ball/shell, via ``∫ d(form)``."""
    return top_form_over_ball(form.d(), radius, inner)
