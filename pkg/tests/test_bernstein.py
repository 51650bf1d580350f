from fractions import Fraction

import numpy as np
import pytest

from capillary import EnergyParams, make_catenoid_band, make_wall_strip
from capillary.bernstein import (SSYInput, admissible_range, bump_field,
                                 c_theta_cubed_form, c_theta_ratio_form,
                                 c_theta_threshold, constants, constants_exact,
                                 identity_checks)
from capillary.errors import NotMinimal


def test_constants_at_right_angle():
    c = constants(SSYInput(3, np.pi / 2, 0.0, 1.0, 1.0))
    assert c.c_theta == pytest.approx(1.0)
    assert c.c_n_theta == pytest.approx(0.0, abs=1e-12)
    assert c.b_value == pytest.approx(2.0 / 3.0)
    assert constants(SSYInput(2, np.pi / 2)).c_theta == pytest.approx(1.0)


def test_constants_exact_rational():
    C, cn, B = constants_exact(3, Fraction(0), Fraction(1))
    assert (C, cn) == (Fraction(1), Fraction(0))
    assert B == Fraction(2, 3)


def test_n3_condition_cancellation():
    # at C_theta = 1 the sqrt(2) terms cancel: 5/3 + 3r/2 + (r-1) - 5r/2 = 2/3
    r = np.sqrt(2.0)
    val = 5.0 / 3.0 + 3 * r / 2 + (r - 1) * 1.0 - 5 * r / 2 * 1.0
    assert val == pytest.approx(2.0 / 3.0)
    assert val > 0


def test_two_c_theta_forms_agree():
    thetas = np.linspace(np.pi / 1001, np.pi * 1000 / 1001, 1000)
    a = np.array([c_theta_cubed_form(t) for t in thetas])
    b = np.array([c_theta_ratio_form(t) for t in thetas])
    assert np.max(np.abs(a - b) / b) < 1e-12


def test_monotonicity_and_symmetry():
    grid = np.linspace(0.05, np.pi / 2, 100)
    C = np.array([c_theta_cubed_form(t) for t in grid])
    cn = np.array([constants(SSYInput(3, t)).c_n_theta for t in grid])
    B = np.array([constants(SSYInput(3, t)).b_value for t in grid])
    assert np.all(np.diff(C) < 0)
    assert np.all(np.diff(cn) < 0)
    assert np.all(np.diff(B) > 0)
    for t in (0.3, 0.9, 1.3):
        m = constants(SSYInput(4, t))
        p = constants(SSYInput(4, np.pi - t))
        assert m.c_theta == pytest.approx(p.c_theta)
        assert m.c_n_theta == pytest.approx(p.c_n_theta)
        assert m.b_value == pytest.approx(p.b_value)


def test_n5_threshold_closed_form():
    c = c_theta_threshold(5)
    assert abs(13.5 * c * c - 7.25 * c - 6.4) < 1e-10
    assert abs(c - 1.0075) < 0.002


def test_admissible_ranges():
    r2 = admissible_range(2)
    assert r2.theta_interval == (0.0, np.pi)
    for n in (3, 4, 5):
        r = admissible_range(n)
        lo, hi = r.theta_interval
        assert 0 < lo < np.pi / 2 < hi < np.pi
        assert hi == pytest.approx(np.pi - lo)
        assert 2 * r.witness_p > n
        assert constants(SSYInput(n, np.pi / 2, r.witness_q, r.witness_a,
                                  r.witness_b)).b_value > 0
    assert admissible_range(4).witness_q > 0
    assert admissible_range(5).witness_q > 0.5
    # interval boundary really is the C_theta threshold
    r5 = admissible_range(5)
    assert c_theta_cubed_form(r5.theta_interval[0]) == pytest.approx(
        c_theta_threshold(5), rel=1e-9)


def test_flat_strip_identities(halfspace):
    for theta in (np.pi / 3, np.pi / 2):
        strip = make_wall_strip(halfspace, theta, level=4)
        rep = identity_checks(strip, halfspace, EnergyParams(c=0.0, theta=theta))
        assert rep.pde_residual_l2 <= 1e-8
        assert rep.robin_residual_l2 <= 1e-8
        assert rep.curv_identity_residual_l2 <= 1e-8
        assert rep.curv_bound_satisfied
        assert rep.trace_lhs <= rep.trace_rhs * (1 + 5 * strip.max_edge_length())
        assert rep.w_boundary_mean == pytest.approx(np.cos(theta), abs=1e-9)


def test_catenoid_residual_decay(halfspace):
    theta = np.pi / 3
    p = EnergyParams(c=0.0, theta=theta)
    pde, robin = [], []
    for level in (2, 3, 4):
        band = make_catenoid_band(halfspace, theta, t_top=1.4, level=level)
        rep = identity_checks(band, halfspace, p)
        pde.append(rep.pde_residual_l2)
        robin.append(rep.robin_residual_l2)
        assert rep.curv_bound_satisfied
    assert pde[0] / pde[1] >= 1.8 and pde[1] / pde[2] >= 1.8
    assert robin[0] / robin[1] >= 1.8 and robin[1] / robin[2] >= 1.8


def test_trace_inequality_on_catenoid(halfspace):
    band = make_catenoid_band(halfspace, np.pi / 3, t_top=1.4, level=3)
    rep = identity_checks(band, halfspace, EnergyParams(c=0.0, theta=np.pi / 3))
    assert rep.trace_lhs <= rep.trace_rhs * (1 + 5 * band.max_edge_length())


def test_almost_stability_random_fields(halfspace):
    band = make_catenoid_band(halfspace, np.pi / 3, t_top=1.2, level=3)
    p = EnergyParams(c=0.0, theta=np.pi / 3)
    rng = np.random.default_rng(0)
    base = bump_field(band)
    adj = band.adjacency()
    for _ in range(50):
        f = rng.standard_normal(len(band.vertices))
        for _ in range(3):
            f = np.array([0.5 * f[i] + 0.5 * f[nb].mean() for i, nb in enumerate(adj)])
        rep = identity_checks(band, halfspace, p, f=f * base)
        assert rep.almost_stab_lhs <= rep.almost_stab_rhs * (1 + 1e-9)


def test_not_minimal_rejected(halfspace):
    from capillary import make_spherical_cap

    cap = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=3)
    with pytest.raises(NotMinimal):
        identity_checks(cap, halfspace, EnergyParams(c=0.0, theta=np.pi / 3))
