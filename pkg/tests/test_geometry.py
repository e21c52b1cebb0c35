import math

import numpy as np
import pytest

from helicap.forms import FormError, PolyForm, Polynomial, liouville_primitive, standard_symplectic, wedge_power
from helicap.geometry import (GeometryError, QuadratureSpec, ball, catalog_region, cylinder_truncated, ellipsoid,
                              gauss_legendre, integrate_over_hypersurface, integrate_over_region,
                              jacobian_rank_ratio, parse_region, shell, sphere)
from helicap.oracles import ball_moment, ball_volume, boundary_integral_by_stokes, sphere_moment, top_form_over_ball
from helicap.suite import random_form

PI = math.pi


def test_gauss_legendre_exact_to_degree_2n_minus_1():
    for order in (4, 16, 32):
        x, w = gauss_legendre(order)
        for deg in range(0, 2 * order, 3):
            exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
            assert abs(np.dot(w, x ** deg) - exact) <= 1e-12 * max(1.0, exact)


def test_circle_liouville():
    lam = PolyForm.function(Polynomial.variable(0, 2)) ^ PolyForm.basis(2, 1)
    for r in (0.5, 1.0, 3.0):
        h = sphere(2, r)
        assert integrate_over_hypersurface(lam, h) == pytest.approx(PI * r * r, rel=1e-12)
        assert integrate_over_hypersurface(lam, h, method="nodes") == pytest.approx(PI * r * r, rel=1e-12)


def test_zero_forms_integrate_to_zero():
    assert integrate_over_hypersurface(PolyForm.zero(4, 3), sphere(4)) == 0.0
    assert integrate_over_region(PolyForm.zero(4, 4), ball(4, 1.0)) == 0.0


def test_s3_helicity_integrand_both_routes():
    form = liouville_primitive(4) ^ standard_symplectic(4)
    h = sphere(4)
    assert integrate_over_hypersurface(form, h) == pytest.approx(PI ** 2, rel=1e-12)
    assert integrate_over_hypersurface(form, h, method="nodes") == pytest.approx(PI ** 2, rel=1e-12)


def test_region_volumes():
    top = wedge_power(standard_symplectic(4), 2)
    assert integrate_over_region(top, ball(4, 1.0)) == pytest.approx(2 * ball_volume(4), rel=1e-12)
    assert integrate_over_region(top, ball(4, 1.0)) == pytest.approx(PI ** 2, rel=1e-12)
    assert integrate_over_region(top, shell(4, 1.0, 2.0)) == pytest.approx(15 * PI ** 2, rel=1e-12)
    coarse = QuadratureSpec(order=12)
    assert integrate_over_region(top, shell(4, 1.0, 2.0), coarse, method="nodes") == pytest.approx(15 * PI ** 2, rel=1e-10)


def test_degree_mismatch():
    with pytest.raises(FormError):
        integrate_over_hypersurface(standard_symplectic(4), sphere(4))
    with pytest.raises(FormError):
        integrate_over_region(liouville_primitive(4), ball(4, 1.0))
    with pytest.raises(FormError):
        integrate_over_hypersurface(liouville_primitive(2), sphere(4))


def test_sphere_moments_match_gamma_oracle(rng):
    # x^alpha x_0 dx_1∧..∧dx_{m-1} restricts to x^alpha x_0^2 dσ on the unit sphere
    for _ in range(20):
        m = int(rng.integers(2, 6))
        alpha = [int(a) for a in rng.integers(0, 4, m)]
        exps = list(alpha)
        exps[0] += 1
        form = PolyForm(m, m - 1, {tuple(range(1, m)): Polynomial(m, {tuple(exps): 1})})
        want = sphere_moment([alpha[0] + 2] + alpha[1:])
        assert integrate_over_hypersurface(form, sphere(m)) == pytest.approx(want, rel=1e-10, abs=1e-12)
        if m <= 4:
            nodes = integrate_over_hypersurface(form, sphere(m), QuadratureSpec(16), method="nodes")
            assert nodes == pytest.approx(want, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_plain_stokes_random_forms(m, rng):
    regions = [ball(m, 1.0), ball(m, 1.7), shell(m, 1.0, 2.0), shell(m, 0.5, 0.8)]
    for _ in range(4):
        beta = random_form(rng, m, m - 1, max_degree=3, nterms=3)
        for r in regions:
            lhs = integrate_over_region(beta.d(), r)
            rhs = sum(integrate_over_hypersurface(beta, h) for h in r.boundary)
            assert abs(lhs - rhs) <= 1e-6 * (1 + abs(lhs))
            outer = r.params.get("R", r.params.get("r"))
            inner = r.params["r"] if r.params["kind"] == "shell" else 0.0
            assert lhs == pytest.approx(top_form_over_ball(beta.d(), outer, inner), rel=1e-10, abs=1e-10)


def test_stokes_oracle_matches_closed_form():
    form = liouville_primitive(4) ^ standard_symplectic(4)
    assert boundary_integral_by_stokes(form, 1.0) == pytest.approx(PI ** 2, rel=1e-12)
    assert ball_moment([0, 0, 0, 0], 1.0) == pytest.approx(ball_volume(4), rel=1e-12)


def test_orientation_reversal_negates_exactly(rng):
    for _ in range(5):
        beta = random_form(rng, 4, 3, max_degree=3, nterms=3)
        h = sphere(4, 1.3)
        for method in ("factored", "nodes"):
            a = integrate_over_hypersurface(beta, h, QuadratureSpec(12), method=method)
            b = integrate_over_hypersurface(beta, h.reversed(), QuadratureSpec(12), method=method)
            assert b == -a


def test_order_doubling_changes_little():
    form = liouville_primitive(4) ^ standard_symplectic(4)
    top = wedge_power(standard_symplectic(4), 2)
    q = QuadratureSpec()
    for value, doubled in [
        (integrate_over_hypersurface(form, sphere(4)), integrate_over_hypersurface(form, sphere(4), q.doubled())),
        (integrate_over_region(top, shell(4, 1, 2)), integrate_over_region(top, shell(4, 1, 2), q.doubled())),
    ]:
        assert abs(value - doubled) < 1e-8 * abs(value)


def test_parallel_equals_serial():
    beta = random_form(np.random.default_rng(11), 4, 3, max_degree=3, nterms=3)
    serial = QuadratureSpec(order=16, chunk_size=1000)
    parallel = QuadratureSpec(order=16, chunk_size=1000, workers=3)
    for h in (sphere(4), sphere(4, axes=(1, 2, 1, 2))):
        a = integrate_over_hypersurface(beta, h, serial, method="nodes")
        b = integrate_over_hypersurface(beta, h, parallel, method="nodes")
        assert a == b
    r = shell(4, 1, 2)
    a = integrate_over_region(beta.d(), r, serial, method="nodes")
    b = integrate_over_region(beta.d(), r, parallel, method="nodes")
    assert abs(a - b) <= 1e-12 * abs(a)


def test_catalog_construction():
    s = shell(4, 1.0, 2.0)
    assert [h.label for h in s.boundary] == ["outer", "inner"]
    assert len(ball(4, 1.0).boundary) == 1
    e = ellipsoid(4, (1.0, 2.0))
    assert len(e.boundary) == 1
    assert jacobian_rank_ratio(e.boundary[0]) > 1e-6
    assert jacobian_rank_ratio(e.boundary[0], QuadratureSpec(8)) > 1e-6
    assert parse_region("shell:1,2", 4).label == s.label
    assert catalog_region("cylinder_truncated", 4, 1.0, 2.0).boundary == ()


def test_ellipsoid_volume():
    top = wedge_power(standard_symplectic(4), 2)
    e = ellipsoid(4, (1.0, 2.0))
    # Lebesgue volume pi^2/2 * product of semi-axes (1*1*2*2), times 2! for omega^2
    assert integrate_over_region(top, e) == pytest.approx(2 * ball_volume(4) * 4, rel=1e-12)
    assert integrate_over_hypersurface(liouville_primitive(4) ^ standard_symplectic(4), e.boundary[0]) == \
        pytest.approx(2 * ball_volume(4) * 4, rel=1e-12)


def test_truncated_cylinder_volume():
    top = wedge_power(standard_symplectic(4), 2)
    c = cylinder_truncated(4, 1.0, 1.5)
    assert integrate_over_region(top, c) == pytest.approx(2 * PI * 3.0 ** 2, rel=1e-12)


@pytest.mark.parametrize("args", [("shell", 4, 2.0, 1.0), ("ball", 4, -1.0), ("ellipsoid", 4, 1.0, 2.0, 3.0),
                                  ("torus", 4, 1.0), ("ball", 1, 1.0)])
def test_catalog_errors(args):
    with pytest.raises(GeometryError):
        catalog_region(*args)


def test_rank_deficiency_detected():
    h = sphere(4)
    # with an odd order the polar rules hit the node pi/2 only; force a node at the pole instead
    bad = QuadratureSpec(order=(1, 1, 4))
    box_nodes = bad.rules(((0.0, 0.0), (0.0, 0.0), (0.0, 2 * PI)))
    assert box_nodes[0][0][0] == 0.0
    degenerate = type(h)(h.dim, ((0.0, 0.0), (0.0, 0.0), (0.0, 2 * PI)), h.point, h.jacobian,
                         h.orientation_sign, "pole", None, h.chart_sign)
    with pytest.raises(GeometryError):
        integrate_over_hypersurface(liouville_primitive(4) ^ standard_symplectic(4), degenerate, bad)
