"""The slit shell showing that compactness cannot be dropped.

``M`` is the closed ball of radius 3 about ``(0, -2, 0, 0)`` with the open
unit ball about the same centre and the segment ``[0, 1] x {0}`` removed.
``M'`` is ``M`` minus the point ``(2, 0, 0, 0)``. The linear flow
``(e^t q1, e^-t p1, q2, p2)`` stretches the removed segment over the
puncture, which is why every capacity agrees on ``M`` and ``M'``.
"""

from __future__ import annotations

import math
import time
from enum import Enum
from fractions import Fraction

import numpy as np
import sympy as sp

from .forms import pullback_linear, standard_symplectic

CENTER = np.array([0.0, -2.0, 0.0, 0.0])
OUTER_RADIUS = 3.0
INNER_RADIUS = 1.0
PUNCTURE = np.array([2.0, 0.0, 0.0, 0.0])
GRID_SIDE = 18  # 18^4 = 104976 sample points


class Membership(str, Enum):
    M_PRIME = "M'"
    PUNCTURE_ONLY = "M-not-M'"
    OUTSIDE = "outside"


def _on_segment(x: np.ndarray) -> np.ndarray:
    return (x[..., 0] >= 0) & (x[..., 0] <= 1) & np.all(x[..., 1:] == 0, axis=-1)


def _in_M(x: np.ndarray) -> np.ndarray:
    r2 = np.sum((x - CENTER) ** 2, axis=-1)
    return (r2 <= OUTER_RADIUS ** 2) & (r2 >= INNER_RADIUS ** 2) & ~_on_segment(x)


def _is_puncture(x: np.ndarray) -> np.ndarray:
    return np.all(x == PUNCTURE, axis=-1)


def slit_shell_membership(point) -> Membership:
    x = np.asarray(point, dtype=float)
    if x.shape != (4,):
        raise ValueError("the slit shell is implemented in R^4 only")
    if not _in_M(x):
        return Membership.OUTSIDE
    return Membership.PUNCTURE_ONLY if _is_puncture(x) else Membership.M_PRIME


def _reference_membership(x: list[float]) -> Membership:
    # independent scalar restatement of the construction, used to cross-check the batch path
    d = math.dist(x, (0.0, -2.0, 0.0, 0.0))
    slit = 0.0 <= x[0] <= 1.0 and x[1] == x[2] == x[3] == 0.0
    if not 1.0 <= d <= 3.0 or slit:
        return Membership.OUTSIDE
    return Membership.PUNCTURE_ONLY if x == [2.0, 0.0, 0.0, 0.0] else Membership.M_PRIME


def classify_batch(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised membership flags ``(in M, in M')`` for an ``(N, 4)`` array."""
    in_m = _in_M(points)
    return in_m, in_m & ~_is_puncture(points)


def flow_matrix(t: float, dim: int = 4) -> np.ndarray:
    if dim < 2 or dim % 2:
        raise ValueError("dimension must be even")
    diag = np.ones(dim)
    diag[0], diag[1] = math.exp(t), math.exp(-t)
    return np.diag(diag)


def hamiltonian_flow(t: float, point) -> np.ndarray:
    """``(e^t q1, e^-t p1, q2, p2, ...)`` in the coordinates ``(q1, p1, q2, p2, ...)``.

    ``point`` may be a single vector or an array of row vectors.
    """
    x = np.asarray(point, dtype=float)
    return x @ flow_matrix(t, x.shape[-1]).T


def symbolic_symplectic_residual(dim: int = 4) -> sp.Matrix:
    """``A(t)^T J A(t) - J`` for the flow matrix with symbolic ``t``."""
    t = sp.symbols("t", real=True)
    A = sp.diag(sp.exp(t), sp.exp(-t), *([1] * (dim - 2)))
    J = sp.zeros(dim, dim)
    for i in range(0, dim, 2):
        J[i, i + 1], J[i + 1, i] = 1, -1
    return sp.simplify(A.T * J * A - J)


def exact_pullback_residual(factor: Fraction = Fraction(2), dim: int = 4) -> bool:
    """Whether the flow with ``e^t = factor`` pulls ``omega_st`` back to itself exactly."""
    A = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(dim):
        A[i][i] = Fraction(1)
    A[0][0], A[1][1] = factor, 1 / factor
    omega = standard_symplectic(dim)
    return pullback_linear(omega, A) == omega


def sample_grid(side: int = GRID_SIDE) -> np.ndarray:
    """Tensor grid over a box containing ``M``, with the puncture and slit points appended."""
    axes = [np.linspace(c - 3.5, c + 3.5, side) for c in CENTER]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
    specials = np.array([PUNCTURE, [0.5, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0], CENTER,
                         [0, 1, 0, 0], [1.5, 0, 0, 0], [0, -2, 3, 0], [0, -2, 1, 0]])
    return np.vstack([grid, specials])


def counterexample_witness(side: int = GRID_SIDE) -> dict:
    start = time.perf_counter()
    residual = symbolic_symplectic_residual(4)
    symbolic_zero = residual == sp.zeros(4, 4)
    exact_zero = exact_pullback_residual()

    t = math.log(2.0)
    endpoint = hamiltonian_flow(t, [1.0, 0.0, 0.0, 0.0])
    # the flow is linear, so the image of [0,1] x {0} is the segment between the endpoint images
    image = hamiltonian_flow(t, np.outer(np.linspace(0, 1, 101), [1.0, 0, 0, 0]))
    covers = bool(image[0, 0] == 0.0 and image[-1, 0] >= 2.0 and np.all(image[:, 1:] == 0))

    points = sample_grid(side)
    in_m, in_mp = classify_batch(points)
    reference = [_reference_membership(p) for p in points.tolist()]
    agree = all((s is not Membership.OUTSIDE) == bool(m) and (s is Membership.M_PRIME) == bool(mp)
                for s, m, mp in zip(reference, in_m, in_mp))
    violations = int(np.sum(in_mp & ~in_m))
    checks = {
        "symplectic_residual_zero": bool(symbolic_zero and exact_zero),
        "endpoint_is_puncture": bool(np.array_equal(endpoint, PUNCTURE)),
        "segment_image_covers_puncture": covers,
        "grid_M_prime_subset_M": violations == 0,
        "puncture_classified": slit_shell_membership(PUNCTURE) is Membership.PUNCTURE_ONLY,
        "reference_agrees": agree,
    }
    return {
        "symplectic_residual": [[str(v) for v in row] for row in residual.tolist()],
        "flow_endpoint": endpoint.tolist(),
        "grid_points": int(len(points)),
        "counts": {"M'": int(np.sum(in_mp)), "M-not-M'": int(np.sum(in_m & ~in_mp)),
                   "outside": int(np.sum(~in_m))},
        "grid_violations": violations,
        "checks": checks,
        "pass": all(checks.values()),
        "seconds": time.perf_counter() - start,
    }
