import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from lagrangian_ac import (FlowMapState, InitialProfile, JacobianPositivityError, ParameterError,
                           Potential, StartupError, TrajectorySolver, make_disc)
from lagrangian_ac.acceptance import directional_error, random_admissible
from lagrangian_ac.schemes import (bdf2_identity_gap, dissipation_audit, energy, energy_bdf2,
                                   jacobian_star, residual_weak_bdf1, residual_weak_bdf2,
                                   step_bdf1, step_bdf2, tangent_weak_bdf1, tangent_weak_bdf2)
from lagrangian_ac.spatial import FEMDisc

LIN = InitialProfile.linear()
NONE = Potential.none()


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_identity_is_stationary_without_forcing(space):
    d = make_disc(space, 10)
    s = d.identity_state()
    assert np.allclose(residual_weak_bdf1(s, s, d, LIN, NONE, 1e-2), 0.0, atol=1e-13)
    new, rep = step_bdf1(s, d, LIN, NONE, 1e-2)
    assert np.all(new.coeffs == 0.0) and new.time == pytest.approx(1e-2)


def test_residual_load_matches_independent_quadrature():
    n = 8
    d = FEMDisc.uniform(n)
    pot = Potential.double_well(1.0)
    s = d.identity_state()
    R = residual_weak_bdf1(s, s, d, LIN, pot, 1e-2)
    h = 2.0 / n
    for i, Xi in enumerate(d.nodes[1:-1]):
        hat = lambda X: max(0.0, 1.0 - abs(X - Xi) / h)
        ref = quad(lambda X: pot.dF(X) * hat(X), Xi - h, Xi + h, points=[Xi], epsabs=1e-14)[0]
        assert R[i] == pytest.approx(ref, abs=1e-12)


@given(st.integers(0, 10_000))
def test_residual_is_odd_under_reflection(seed):
    rng = np.random.default_rng(seed)
    d = FEMDisc.uniform(10)
    w = 0.02 * rng.uniform(-1, 1, 4)
    u = np.r_[w, 0.0, -w[::-1]]  # x(-X) = -x(X)
    s = FlowMapState(u, 0.1)
    prev = d.identity_state()
    R = residual_weak_bdf1(s, prev, d, LIN, Potential.double_well(0.05), 1e-2)
    assert np.allclose(R, -R[::-1], atol=1e-10 * np.max(np.abs(R)))


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_residual_at_rest_is_minus_energy_gradient(space, rng):
    d = make_disc(space, 12)
    pot = Potential.double_well(0.05)
    u = random_admissible(d, rng)
    s = FlowMapState(u, 0.0)
    R = residual_weak_bdf1(s, s, d, LIN, pot, 1e-3)
    h = 1e-6
    grad = np.array([(energy(FlowMapState(u + h * e), d, LIN, pot).total
                      - energy(FlowMapState(u - h * e), d, LIN, pot).total) / (2 * h)
                     for e in np.eye(d.ndof)])
    assert np.allclose(-R, grad, rtol=1e-6, atol=1e-6 * np.max(np.abs(grad)))


def test_rejects_folded_candidate():
    d = FEMDisc.uniform(4)
    bad = FlowMapState(np.array([0.0, 0.8, 0.0]))
    with pytest.raises(JacobianPositivityError):
        residual_weak_bdf1(bad, d.identity_state(), d, LIN, NONE, 1e-2)


def test_constant_well_profile_is_a_fixed_point():
    d = make_disc("spectral", 12)
    prof = InitialProfile.constant(1.0)
    new, _ = step_bdf1(d.identity_state(), d, prof, Potential.double_well(1e-3), 1e-3)
    assert np.max(np.abs(new.coeffs)) == 0.0


def test_bdf1_step_lowers_energy():
    d = make_disc("spectral", 64)
    pot = Potential.double_well(1e-3)
    s0 = d.identity_state()
    s1, rep = step_bdf1(s0, d, LIN, pot, 1e-4)
    assert rep.converged
    assert energy(s1, d, LIN, pot).total < energy(s0, d, LIN, pot).total
    assert d.min_jacobian(s1.coeffs) > 0


@pytest.mark.parametrize("dn,dnm1,expected", [(1.7, 1.7, 1.7), (2.0, 1.0, 3.0), (1.0, 3.0, 0.6)])
def test_jacobian_star_examples(dn, dnm1, expected):
    assert jacobian_star(dn, dnm1) == pytest.approx(expected, rel=1e-14)


def test_jacobian_star_rejects_nonpositive():
    with pytest.raises(ParameterError):
        jacobian_star(np.array([1.0, 0.0]), np.array([1.0, 1.0]))


@given(st.floats(1e-8, 1e8), st.floats(1e-8, 1e8))
def test_jacobian_star_branches_and_positivity(a, b):
    js = jacobian_star(a, b)
    assert js > 0 and np.isfinite(js)
    assert js == (2 * a - b if a >= b else 1.0 / (2.0 / a - 1.0 / b))


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_bdf2_identity(a, b, c):
    assert abs(bdf2_identity_gap(a, b, c)) <= 1e-12 * (1 + max(abs(a), abs(b), abs(c))) ** 2


def test_bdf2_first_step_is_bdf1_bit_for_bit():
    d = make_disc("spectral", 16)
    pot = Potential.double_well(1e-2)
    a, _ = step_bdf1(d.identity_state(), d, LIN, pot, 1e-3)
    b, _ = step_bdf2(d.identity_state(), d, LIN, pot, 1e-3)
    assert np.array_equal(a.coeffs, b.coeffs)
    with pytest.raises(StartupError):
        step_bdf2(d.identity_state(), d, LIN, pot, 1e-3, startup=None)
    with pytest.raises(StartupError):
        residual_weak_bdf2(a, d.identity_state(), d, LIN, pot, 1e-3)


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_identity_history_stays_identity_under_bdf2(space):
    d = make_disc(space, 8)
    s = d.identity_state()
    for _ in range(5):
        s, _ = step_bdf2(s, d, LIN, NONE, 1e-2)
    assert np.all(s.coeffs == 0.0)


def test_energy_examples(rng):
    d = make_disc("spectral", 16)
    idn = d.identity_state()
    assert energy(idn, d, LIN, NONE).total == pytest.approx(1.0, abs=1e-13)
    assert energy(idn, d, LIN, Potential.double_well(0.1)).total == pytest.approx(1 + 4 / 1.5, abs=1e-12)
    pot = Potential.double_well(0.2)
    c = InitialProfile.constant(0.3)
    for space in ("fem", "spectral"):
        dd = make_disc(space, 10)
        s = FlowMapState(random_admissible(dd, rng))
        e = energy(s, dd, c, pot)
        assert e.total == pytest.approx(2.0 * pot.F(0.3), rel=1e-12)
        assert e.gradient_part == 0.0


def test_energy_rejects_folded_map():
    d = FEMDisc.uniform(4)
    with pytest.raises(JacobianPositivityError):
        energy(FlowMapState(np.array([0.0, 0.8, 0.0])), d, LIN, NONE)


def test_energy_bdf2_augmentation():
    n, dt, delta = 16, 1e-2, 0.01
    d = FEMDisc.uniform(n)
    old = d.identity_state()
    star = np.ones_like(d.wq)
    same = energy_bdf2((old, old), star, d, LIN, NONE, dt)
    assert same.bdf2_augmentation == 0.0 and same.total == pytest.approx(1.0)
    new = FlowMapState(np.full(d.ndof, delta))
    e = energy_bdf2((new, old), star, d, LIN, NONE, dt)
    h = 2.0 / n
    # increment is delta on the interior, ramping to 0 over the end elements
    ref = quad(lambda X: (delta * min(1.0, (1 - abs(X)) / h)) ** 2, -1, 1,
               points=[-1 + h, 1 - h])[0] / (4 * dt)
    assert e.bdf2_augmentation == pytest.approx(ref, rel=1e-12)
    assert e.total == pytest.approx(e.gradient_part + e.potential_part + e.bdf2_augmentation)


@pytest.mark.parametrize("prev,nxt,ok,slack", [(5.0, 4.9, True, 0.1), (3.0, 3.0, True, 0.0),
                                                (3.0, 4.0, False, -1.0)])
def test_dissipation_audit_examples(prev, nxt, ok, slack):
    a = dissipation_audit(prev, nxt)
    assert a.satisfied is ok and a.slack == pytest.approx(slack)


@given(st.integers(0, 10_000), st.sampled_from(["fem", "spectral"]))
def test_tangents_match_finite_differences(seed, space):
    rng = np.random.default_rng(seed)
    d = make_disc(space, 12)
    pot, dt = Potential.double_well(0.05), 1e-3
    p1 = FlowMapState(random_admissible(d, rng))
    p2 = FlowMapState(random_admissible(d, rng), dt, previous=p1)
    u = random_admissible(d, rng)
    dirn = rng.uniform(-1, 1, d.ndof)
    S = lambda z: FlowMapState(z, 2 * dt)
    e1 = directional_error(lambda z: residual_weak_bdf1(S(z), p1, d, LIN, pot, dt),
                           lambda z: tangent_weak_bdf1(S(z), p1, d, LIN, pot, dt), u, dirn)
    e2 = directional_error(lambda z: residual_weak_bdf2(S(z), p2, d, LIN, pot, dt),
                           lambda z: tangent_weak_bdf2(S(z), p2, d, LIN, pot, dt), u, dirn)
    assert max(e1, e2) < 1e-5


@given(st.sampled_from(["bdf1", "bdf2"]), st.sampled_from(["fem", "spectral"]),
       st.sampled_from([1e-2, 1e-3]), st.sampled_from([1e-3, 1e-2]),
       st.sampled_from(["linear", "parabola"]))
def test_energy_law_and_positivity_on_short_runs(scheme, space, eps2, dt, prof):
    d = make_disc(space, 16)
    profile = InitialProfile.from_name(prof)
    s = TrajectorySolver(d, profile, Potential.double_well(eps2), dt, scheme=scheme)
    for rec in s.march(d.identity_state(), 8):
        assert rec.audit.satisfied
        assert rec.min_jacobian > 0
        assert rec.energy.dissipation_increment >= 0
