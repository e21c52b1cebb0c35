"""Separation constants, admissible assignments and exact feasible-rescaling analysis.

A self-embedding ``(M, C omega) -> (M, omega)`` induces a partition of two
copies of the boundary components in which every block holds exactly one
domain component. Such a partition is encoded as an :class:`Assignment`:
a map ``g`` sending each target component to the domain component of its
block. Each block must satisfy the helicity inequality

    -C^n h(i) + sum_{g(i') = i} h(i') >= 0,

whose solution set in ``C > 0`` is an interval. Everything below is exact
case analysis of these intervals over all assignments.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .helicity import HelicityProfile

EPS_FEAS = 1e-12
SPECTRUM_TOL = 1e-9
KEY_LEMMA_TOL = 1e-9
PERMUTATION_TOL = 1e-12
DEFAULT_CAP = 10**7


class RecognitionError(ValueError):
    pass


class EnumerationCapError(RecognitionError):
    pass


class HypothesisViolated(RecognitionError):
    """The profile has no negative-helicity component."""


class PermutationClaimError(RecognitionError):
    """A claim of the positive-pairing argument failed for an assignment."""


# ---------------------------------------------------------------------------
# constants


def compute_C1(p: HelicityProfile) -> float:
    """Largest ``(h(j)/h(i))^(1/n)`` over positive pairs with ``h(i) > h(j)``; 0 if none."""
    pos = [p.h(i) for i in p.positive]
    best = 0.0
    for hi in pos:
        for hj in pos:
            if hi > hj:
                best = max(best, min(1.0, (hj / hi) ** (1.0 / p.n)))
    return best


def compute_C2(p: HelicityProfile) -> float:
    """Largest ``(1 + h(i-)/h(i+))^(1/n)`` over positive/negative pairs, clipped at 0."""
    best = 0.0
    for ip in p.positive:
        for im in p.negative:
            base = max(0.0, 1.0 + p.h(im) / p.h(ip))
            best = max(best, min(1.0, base ** (1.0 / p.n)))
    return best


def compute_C0(p: HelicityProfile) -> float:
    return max(compute_C1(p), compute_C2(p))


# ---------------------------------------------------------------------------
# intervals


@dataclass(frozen=True)
class FeasibleCSet:
    """An interval of rescaling constants ``C``; empty when ``lo > hi`` or a degenerate open point."""

    lo: float = 0.0
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    @classmethod
    def empty(cls) -> FeasibleCSet:
        return cls(1.0, 0.0, False, False)

    @property
    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def contains(self, c: float) -> bool:
        if self.is_empty:
            return False
        above = c >= self.lo if self.lo_closed else c > self.lo
        below = c <= self.hi if self.hi_closed else c < self.hi
        return above and below

    def intersect(self, other: FeasibleCSet) -> FeasibleCSet:
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        result = FeasibleCSet(lo, hi, lo_closed, hi_closed)
        return FeasibleCSet.empty() if result.is_empty else result

    def unit(self) -> FeasibleCSet:
        """Intersection with ``(0, 1]``."""
        return self.intersect(UNIT)

    @property
    def sup(self) -> float:
        return -math.inf if self.is_empty else self.hi

    @property
    def inf(self) -> float:
        return math.inf if self.is_empty else self.lo

    def __str__(self) -> str:
        if self.is_empty:
            return "∅"
        return f"{'[' if self.lo_closed else '('}{self.lo:.12g}, {self.hi:.12g}{']' if self.hi_closed else ')'}"


UNIT = FeasibleCSet(0.0, 1.0, False, True)
POSITIVE = FeasibleCSet(0.0, math.inf, False, False)


def block_interval(h: float, s: float, n: int, slack: float = 0.0) -> FeasibleCSet:
    """Solution set in ``C > 0`` of ``-C^n h + s >= -slack``."""
    t = s + slack
    if h > 0:
        return FeasibleCSet(0.0, (t / h) ** (1.0 / n), False, True) if t > 0 else FeasibleCSet.empty()
    if h < 0:
        return POSITIVE if t >= 0 else FeasibleCSet((t / h) ** (1.0 / n), math.inf, True, False)
    return POSITIVE if t >= 0 else FeasibleCSet.empty()


# ---------------------------------------------------------------------------
# assignments


@dataclass(frozen=True)
class Assignment:
    """Map ``mapping[i'] = i`` from target components to domain components."""

    domain: HelicityProfile
    target: HelicityProfile
    mapping: tuple[int, ...]

    def __post_init__(self):
        if self.domain.n != self.target.n:
            raise RecognitionError("domain and target profiles have different n")
        if len(self.mapping) != len(self.target):
            raise RecognitionError("assignment must map every target component")
        if any(not 0 <= i < len(self.domain) for i in self.mapping):
            raise RecognitionError("assignment maps to a non-existent domain component")

    @property
    def n(self) -> int:
        return self.domain.n

    def block(self, i: int) -> list[int]:
        """Target components in the block of domain component ``i``."""
        return [t for t, g in enumerate(self.mapping) if g == i]

    def block_sum(self, i: int) -> float:
        return math.fsum(self.target.h(t) for t in self.block(i))

    def describe(self) -> str:
        return ", ".join(f"{self.target.labels[t]}->{self.domain.labels[g]}" for t, g in enumerate(self.mapping))


def identity_assignment(p: HelicityProfile) -> Assignment:
    return Assignment(p, p, tuple(range(len(p))))


def assignment_count(domain: HelicityProfile, target: HelicityProfile) -> int:
    return len(domain) ** len(target)


def _check_cap(domain: HelicityProfile, target: HelicityProfile, cap: int) -> int:
    count = assignment_count(domain, target)
    if count > cap:
        raise EnumerationCapError(
            f"{len(domain)}^{len(target)} = {count} assignments exceeds the enumeration cap {cap}")
    return count


def enumerate_assignments(domain: HelicityProfile, target: HelicityProfile, cap: int = DEFAULT_CAP,
                          start: int = 0, stop: int | None = None) -> Iterator[Assignment]:
    """All total maps from target components to domain components, in lexicographic order."""
    _check_cap(domain, target, cap)
    maps = itertools.product(range(len(domain)), repeat=len(target))
    for mapping in itertools.islice(maps, start, stop):
        yield Assignment(domain, target, mapping)


def block_inequality(a: Assignment, i: int, c: float, slack: float = EPS_FEAS) -> bool:
    """Whether the block of domain component ``i`` satisfies the helicity inequality at ``C = c``."""
    if not c > 0:
        raise RecognitionError("C must be positive")
    return -(c ** a.n) * a.domain.h(i) + a.block_sum(i) >= -slack


def feasible_C_interval(a: Assignment, slack: float = 0.0) -> FeasibleCSet:
    """All ``C > 0`` at which every block inequality holds.

    ``slack = 0`` is the exact constraint set; pass ``EPS_FEAS`` to get the
    solution set of :func:`block_inequality` with its default slack.
    """
    result = POSITIVE
    for i in range(len(a.domain)):
        result = result.intersect(block_interval(a.domain.h(i), a.block_sum(i), a.n, slack))
        if result.is_empty:
            break
    return result


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def separates(a: Assignment) -> bool:
    """True iff no block mixes positive and negative helicity elements."""
    for i in range(len(a.domain)):
        signs = {_sign(a.domain.h(i))} | {_sign(a.target.h(t)) for t in a.block(i)}
        if 1 in signs and -1 in signs:
            return False
    return True


def extract_permutation(a: Assignment, c0: float | None = None) -> dict[int, int]:
    """The pairing ``f: I+ -> I+`` of positive domain components with positive targets.

    Requires ``a`` to separate and to be feasible at some ``C`` in
    ``(C0, 1]``. Raises :class:`PermutationClaimError` naming the claim
    that fails.
    """
    if c0 is None:
        c0 = compute_C0(a.domain)
    window = feasible_C_interval(a).intersect(FeasibleCSet(c0 + SPECTRUM_TOL, 1.0, False, True))
    if window.is_empty:
        raise PermutationClaimError(f"assignment [{a.describe()}] is not feasible for any C in ({c0:.6g}, 1]")
    if not separates(a):
        raise PermutationClaimError(f"assignment [{a.describe()}] does not separate helicity signs")
    f: dict[int, int] = {}
    for ip in a.domain.positive:
        partners = [t for t in a.block(ip) if a.target.h(t) > 0]
        if len(partners) != 1:
            raise PermutationClaimError(
                f"|I_i+| = {len(partners)} != 1 for domain component {a.domain.labels[ip]}")
        f[ip] = partners[0]
    if sorted(f.values()) != sorted(a.target.positive):
        raise PermutationClaimError("pairing of positive components is not a bijection")
    for ip, t in f.items():
        h0, h1 = a.domain.h(ip), a.target.h(t)
        if abs(h1 - h0) > PERMUTATION_TOL * max(1.0, abs(h0)):
            raise PermutationClaimError(
                f"h(f(i+)) = {h1!r} differs from h(i+) = {h0!r} for {a.domain.labels[ip]}")
    return f


# ---------------------------------------------------------------------------
# enumeration scans


@dataclass
class _ScanResult:
    count: int = 0
    violators: int = 0
    worst_cmax: float = -math.inf
    worst_mapping: tuple[int, ...] | None = None
    spectrum: list[FeasibleCSet] = field(default_factory=list)


def _scan_range(domain: HelicityProfile, target: HelicityProfile, start: int, stop: int,
                c0: float, collect_spectrum: bool) -> _ScanResult:
    out = _ScanResult()
    for a in enumerate_assignments(domain, target, cap=math.inf, start=start, stop=stop):
        out.count += 1
        unit = feasible_C_interval(a).unit()
        if not separates(a):
            out.violators += 1
            if unit.sup > out.worst_cmax:
                out.worst_cmax, out.worst_mapping = unit.sup, a.mapping
        if collect_spectrum and not unit.is_empty:
            out.spectrum.append(unit)
    return out


def _scan(domain: HelicityProfile, target: HelicityProfile, c0: float, cap: int, workers: int,
          collect_spectrum: bool) -> _ScanResult:
    total = _check_cap(domain, target, cap)
    if workers <= 1 or total < 2 * workers:
        parts = [_scan_range(domain, target, 0, total, c0, collect_spectrum)]
    else:
        step = -(-total // workers)
        bounds = [(s, min(s + step, total)) for s in range(0, total, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_scan_range, domain, target, s, e, c0, collect_spectrum) for s, e in bounds]
            parts = [f.result() for f in futures]
    merged = _ScanResult()
    for part in parts:
        merged.count += part.count
        merged.violators += part.violators
        if part.worst_cmax > merged.worst_cmax:
            merged.worst_cmax, merged.worst_mapping = part.worst_cmax, part.worst_mapping
        merged.spectrum.extend(part.spectrum)
    return merged


def merge_intervals(intervals: Sequence[FeasibleCSet]) -> list[FeasibleCSet]:
    """Union of intervals as a sorted list of disjoint intervals."""
    items = sorted((iv for iv in intervals if not iv.is_empty), key=lambda iv: (iv.lo, not iv.lo_closed))
    merged: list[FeasibleCSet] = []
    for iv in items:
        if merged:
            last = merged[-1]
            touching = iv.lo < last.hi or (iv.lo == last.hi and (iv.lo_closed or last.hi_closed))
            if touching:
                if iv.hi > last.hi or (iv.hi == last.hi and iv.hi_closed):
                    merged[-1] = FeasibleCSet(last.lo, iv.hi, last.lo_closed, iv.hi_closed or
                                              (iv.hi == last.hi and last.hi_closed))
                continue
        merged.append(iv)
    return merged


@dataclass(frozen=True)
class KeyLemmaReport:
    c0: float
    worst_violator_cmax: float
    assignments: int
    violators: int
    worst_assignment: str | None
    passed: bool

    def to_json(self) -> dict:
        return {"C0": self.c0, "worst_violator_Cmax": _jsonable(self.worst_violator_cmax),
                "assignments": self.assignments, "non_separating": self.violators,
                "worst_assignment": self.worst_assignment, "pass": self.passed}


def _jsonable(x: float):
    return x if math.isfinite(x) else ("-inf" if x < 0 else "inf")


def verify_key_lemma(p: HelicityProfile, cap: int = DEFAULT_CAP, workers: int = 1) -> KeyLemmaReport:
    """Check that every non-separating self-assignment is infeasible above ``C0``."""
    c0 = compute_C0(p)
    scan = _scan(p, p, c0, cap, workers, collect_spectrum=False)
    worst = scan.worst_cmax
    desc = Assignment(p, p, scan.worst_mapping).describe() if scan.worst_mapping is not None else None
    return KeyLemmaReport(c0, worst, scan.count, scan.violators, desc, worst <= c0 + KEY_LEMMA_TOL)


@dataclass(frozen=True)
class RecognitionReport:
    c0: float
    forced_c: float | None
    spectrum: tuple[FeasibleCSet, ...]
    assignments: int
    passed: bool

    def to_json(self) -> dict:
        return {"C0": self.c0, "forced_C": self.forced_c, "assignments": self.assignments,
                "spectrum_above_C0": [str(iv) for iv in self.spectrum], "pass": self.passed}


def feasible_spectrum(p: HelicityProfile, cap: int = DEFAULT_CAP, workers: int = 1) -> list[FeasibleCSet]:
    """Union over all self-assignments of the feasible set within ``(0, 1]``."""
    return merge_intervals(_scan(p, p, 0.0, cap, workers, collect_spectrum=True).spectrum)


def verify_recognition(p: HelicityProfile, cap: int = DEFAULT_CAP, workers: int = 1) -> RecognitionReport:
    """Check that the only admissible rescaling above ``C0`` is ``C = 1``.

    Raises :class:`HypothesisViolated` when the profile has no negative
    component: without one the conclusion is known to fail in general.
    """
    negatives = [p.h(i) for i in p.negative]
    if not negatives or math.fsum(negatives) >= 0:
        raise HypothesisViolated("recognition needs a boundary component with negative helicity")
    c0 = compute_C0(p)
    scan = _scan(p, p, c0, cap, workers, collect_spectrum=True)
    # C0 and the block endpoints are the same real number computed two ways;
    # the window starts a tolerance above C0 so rounding does not count.
    window = FeasibleCSet(c0 + SPECTRUM_TOL, 1.0, False, True)
    above = merge_intervals([iv.intersect(window) for iv in scan.spectrum])
    early = [iv for iv in above if iv.inf < 1.0 - SPECTRUM_TOL]
    has_one = any(iv.contains(1.0) for iv in above)
    passed = not early and has_one
    return RecognitionReport(c0, 1.0 if passed else None, tuple(above), scan.count, passed)
