import math

import numpy as np
import pytest

from helicap.helicity import HelicityProfile
from helicap.oracles import grid_C0, grid_C1, grid_C2
from helicap.recognition import (EPS_FEAS, SPECTRUM_TOL, Assignment, EnumerationCapError, FeasibleCSet,
                                 HypothesisViolated, PermutationClaimError, block_inequality, block_interval,
                                 compute_C0, compute_C1, compute_C2, enumerate_assignments, extract_permutation,
                                 feasible_C_interval, feasible_spectrum, identity_assignment, merge_intervals,
                                 separates, verify_key_lemma, verify_recognition)
from helicap.suite import random_profile

PI2 = math.pi ** 2


def prof(*values, n=2):
    return HelicityProfile.from_values(values, n)


SHELL = prof(16 * PI2, -PI2)
MIXED = prof(2.0, 1.0, -0.5)


def test_constants_examples():
    assert compute_C1(prof(2.0, 1.0)) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert compute_C1(prof(3.0, 3.0)) == 0.0
    assert compute_C1(prof(-1.0)) == 0.0
    assert compute_C2(MIXED) == pytest.approx(math.sqrt(0.75), abs=1e-12)
    assert compute_C2(prof(2.0, 1.0)) == 0.0
    assert compute_C2(prof(1.0, -3.0)) == 0.0
    assert compute_C0(MIXED) == pytest.approx(0.866025, abs=1e-6)
    assert compute_C0(HelicityProfile(2, ())) == 0.0
    assert compute_C0(prof(1.0, -1.0)) == 0.0


def test_constants_match_grid_oracle(rng):
    for _ in range(30):
        p = random_profile(rng)
        vals = list(p.values)
        assert abs(compute_C1(p) - grid_C1(vals, p.n)) <= 1e-5
        assert abs(compute_C2(p) - grid_C2(vals, p.n)) <= 1e-5
    assert abs(grid_C0([2.0, 1.0, -0.5], 2) - 0.866025) <= 1e-6


def test_block_inequality_examples():
    a = identity_assignment(MIXED)
    assert all(block_inequality(a, i, 1.0) for i in range(3))
    # domain h = 1 receiving targets summing to 0.5
    a = Assignment(prof(1.0, -1.0), prof(0.5, -1.0), (0, 1))
    assert not block_inequality(a, 0, 0.8)
    # negative domain component with no targets
    a = Assignment(prof(1.0, -1.0), prof(1.0, 2.0), (0, 0))
    assert all(block_inequality(a, 1, c) for c in (0.1, 1.0, 7.0))
    with pytest.raises(ValueError):
        block_inequality(a, 0, 0.0)


def test_block_interval_cases():
    assert str(block_interval(2.0, 1.0, 2)) == f"(0, {math.sqrt(0.5):.12g}]"
    assert block_interval(1.0, -0.5, 2).is_empty
    assert block_interval(-1.0, 0.5, 2).contains(100.0)
    iv = block_interval(-4.0, -1.0, 2)
    assert iv.lo == pytest.approx(0.5) and iv.lo_closed and not iv.contains(0.49)
    assert block_interval(0.0, 0.0, 3).contains(2.0)
    assert block_interval(0.0, -1.0, 3).is_empty


def test_feasible_interval_examples():
    assert feasible_C_interval(identity_assignment(MIXED)).contains(1.0)
    single = Assignment(prof(2.0), prof(1.0), (0,))
    iv = feasible_C_interval(single)
    assert iv.hi == pytest.approx(math.sqrt(0.5)) and iv.hi_closed and iv.lo == 0 and not iv.lo_closed
    assert feasible_C_interval(Assignment(prof(1.0), prof(-0.5), (0,))).is_empty


def test_feasible_set_algebra():
    a, b = FeasibleCSet(0.2, 0.8, True, False), FeasibleCSet(0.8, 1.0, True, True)
    assert a.intersect(b).is_empty
    assert FeasibleCSet(0.5, 0.5, True, True).contains(0.5)
    assert FeasibleCSet.empty().sup == -math.inf
    merged = merge_intervals([a, b, FeasibleCSet.empty(), FeasibleCSet(0.1, 0.15, False, True)])
    assert [str(iv) for iv in merged] == ["(0.1, 0.15]", "[0.2, 1]"]
    assert len(merge_intervals([FeasibleCSet(0, 1, False, False), FeasibleCSet(1, 2, False, True)])) == 2


def test_interval_agrees_with_brute_force(rng):
    cs = np.sort(rng.uniform(1e-3, 2.0, 1000))
    for _ in range(40):
        p = random_profile(rng, max_size=4)
        for a in enumerate_assignments(p, p):
            iv = feasible_C_interval(a, slack=EPS_FEAS)
            direct = np.ones_like(cs, dtype=bool)
            for i in range(len(p)):
                direct &= -(cs ** p.n) * p.h(i) + a.block_sum(i) >= -EPS_FEAS
            assert [iv.contains(float(c)) for c in cs] == direct.tolist(), a.describe()


def test_enumeration_counts_and_cap():
    assert len(list(enumerate_assignments(prof(1.0, -1.0), prof(1.0, -1.0)))) == 4
    maps = [a.mapping for a in enumerate_assignments(MIXED, MIXED)]
    assert len(maps) == 27 == len(set(maps))
    assert [a.mapping for a in enumerate_assignments(prof(1.0), MIXED)] == [(0, 0, 0)]
    with pytest.raises(EnumerationCapError, match="27"):
        list(enumerate_assignments(MIXED, MIXED, cap=26))


def test_separates_examples():
    assert separates(identity_assignment(MIXED))
    assert not separates(Assignment(MIXED, MIXED, (0, 1, 0)))
    p = prof(3.0, 1.0, 0.0)
    assert all(separates(a) for a in enumerate_assignments(p, p))


def test_key_lemma_examples():
    rep = verify_key_lemma(SHELL)
    assert rep.passed and rep.assignments == 4
    rep = verify_key_lemma(MIXED)
    assert rep.passed and rep.assignments == 27
    assert rep.worst_violator_cmax <= 0.86603
    rep = verify_key_lemma(prof(1.0, 2.0, 5.0))
    assert rep.passed and rep.worst_violator_cmax == -math.inf and rep.violators == 0


def test_key_lemma_random_profiles(rng):
    for _ in range(60):
        assert verify_key_lemma(random_profile(rng)).passed


def test_extract_permutation_examples():
    assert extract_permutation(identity_assignment(MIXED)) == {0: 0, 1: 1}
    p = prof(3.0, 3.0, -1.0)
    assert extract_permutation(Assignment(p, p, (1, 0, 2))) == {0: 1, 1: 0}
    with pytest.raises(PermutationClaimError, match="not feasible"):
        extract_permutation(Assignment(MIXED, MIXED, (0, 0, 0)))


def test_permutation_claims_random(rng):
    checked = 0
    for _ in range(60):
        p = random_profile(rng, max_size=4)
        window = FeasibleCSet(compute_C0(p) + SPECTRUM_TOL, 1.0, False, True)
        for a in enumerate_assignments(p, p):
            if separates(a) and not feasible_C_interval(a).intersect(window).is_empty:
                f = extract_permutation(a)
                assert all(abs(p.h(t) - p.h(i)) <= 1e-12 * max(1, abs(p.h(i))) for i, t in f.items())
                checked += 1
    assert checked >= 60


def test_recognition_examples():
    rep = verify_recognition(SHELL)
    assert rep.passed and rep.forced_c == 1.0
    assert verify_recognition(MIXED).passed
    with pytest.raises(HypothesisViolated):
        verify_recognition(prof(1.0))


def test_recognition_random_profiles(rng):
    for _ in range(60):
        p = random_profile(rng, need_negative=True)
        assert verify_recognition(p).passed, list(p.values)


def test_spectrum_contains_one_and_lower_pieces():
    spec = feasible_spectrum(MIXED)
    assert any(iv.contains(1.0) for iv in spec)
    assert any(iv.contains(0.5) for iv in spec)


def test_parallel_scan_matches_serial():
    p = prof(4.0, 2.5, 1.0, -0.7, -2.0, n=3)
    serial, parallel = verify_key_lemma(p), verify_key_lemma(p, workers=2)
    assert serial == parallel
    assert feasible_spectrum(p) == feasible_spectrum(p, workers=2)
    assert verify_recognition(p) == verify_recognition(p, workers=2)
