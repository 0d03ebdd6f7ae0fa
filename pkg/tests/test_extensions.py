import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from lagrangian_ac import (FlowMapState, InitialProfile, ParameterError, Potential, make_disc)
from lagrangian_ac.acceptance import directional_error, random_admissible
from lagrangian_ac.extensions import (AdvectionField, AxisymmetricSolver, energy_axisym, polar_disc,
                                      residual_advection_bdf1, residual_axisym_bdf1,
                                      step_advection_bdf1, step_axisym_bdf1, tangent_axisym_bdf1)
from lagrangian_ac.schemes import residual_weak_bdf1, tangent_weak_bdf1
from lagrangian_ac.spatial import FEMDisc

LIN = InitialProfile.linear()


@given(st.integers(0, 10_000), st.sampled_from(["fem", "spectral"]))
def test_zero_speed_reduces_to_base_residual(seed, space):
    rng = np.random.default_rng(seed)
    d = make_disc(space, 10)
    pot = Potential.double_well(1e-2)
    c, p = FlowMapState(random_admissible(d, rng), 1e-3), FlowMapState(random_admissible(d, rng))
    assert np.array_equal(residual_advection_bdf1(c, p, AdvectionField(0.0), d, LIN, pot, 1e-3),
                          residual_weak_bdf1(c, p, d, LIN, pot, 1e-3))


def test_unit_speed_load_on_identity():
    n = 8
    d = FEMDisc.uniform(n)
    s = d.identity_state()
    R = residual_advection_bdf1(s, s, 1.0, d, LIN, Potential.none(), 1e-2)
    # rate - v = -1 with unit weight: the residual is the pairing of +1 with each hat
    assert np.allclose(R, 2.0 / n, atol=1e-14)


def test_advection_validation_and_motion():
    with pytest.raises(ParameterError):
        AdvectionField(np.inf)
    d = make_disc("spectral", 16)
    s, _ = step_advection_bdf1(d.identity_state(), 1.0, d, LIN, Potential.none(), 1e-3)
    x = d.positions(s.coeffs)
    assert np.all(x[1:-1] > d.nodes[1:-1])


def test_advection_tangent(rng):
    d = make_disc("fem", 12)
    pot = Potential.double_well(0.05)
    p = FlowMapState(random_admissible(d, rng))
    S = lambda z: FlowMapState(z, 1e-3)
    err = directional_error(lambda z: residual_advection_bdf1(S(z), p, 0.7, d, LIN, pot, 1e-3),
                            lambda z: tangent_weak_bdf1(S(z), p, d, LIN, pot, 1e-3, advection=0.7),
                            random_admissible(d, rng), rng.uniform(-1, 1, d.ndof))
    assert err < 1e-5


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_polar_labels_start_off_the_origin(space):
    d = polar_disc(space, 16)
    assert 0.0 < d.domain.left < 0.2 and d.domain.right == 1.0
    assert d.free_left


def test_constant_profile_is_a_radial_fixed_point():
    d = polar_disc("spectral", 12)
    s, _ = step_axisym_bdf1(d.identity_state(), d, InitialProfile.constant(1.0),
                            Potential.double_well(1e-3), 1e-4)
    assert np.max(np.abs(s.coeffs)) == 0.0


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_radial_curvature_load_on_identity(space):
    d = polar_disc(space, 8)
    s = d.identity_state()
    R = residual_axisym_bdf1(s, s, d, LIN, Potential.none(), 1e-3)
    delta = d.domain.left
    for j in range(d.ndof):
        e = np.eye(d.ndof)[j]
        psi = lambda X: float(d.evaluate(e, np.array([X]))[0] - X)
        # -(1/R) f0' tested against psi in the measure R dR, plus the free-edge term
        ref = -quad(psi, delta, 1.0, limit=200, epsabs=1e-13)[0] - 0.5 * delta * psi(delta)
        assert R[j] == pytest.approx(ref, abs=1e-11)


def test_radial_energy_examples():
    d = polar_disc("spectral", 24)
    idn = d.identity_state()
    delta = d.domain.left
    pot = Potential.double_well(0.2)
    c = energy_axisym(idn, d, InitialProfile.constant(0.3), pot).total
    assert c == pytest.approx(pot.F(0.3) * (1 - delta ** 2) / 2, rel=1e-12)
    assert energy_axisym(idn, d, LIN, Potential.none()).total == pytest.approx((1 - delta ** 2) / 4,
                                                                                 rel=1e-12)
    dw = Potential.double_well(0.1)
    ref = quad(lambda R: (0.5 + dw.F(R)) * R, delta, 1.0, epsabs=1e-14)[0]
    assert energy_axisym(idn, d, LIN, dw).total == pytest.approx(ref, rel=1e-10)


@given(st.integers(0, 10_000), st.sampled_from(["fem", "spectral"]))
def test_radial_tangent_matches_finite_differences(seed, space):
    rng = np.random.default_rng(seed)
    d = polar_disc(space, 12)
    pot = Potential.double_well(0.05)
    p = FlowMapState(random_admissible(d, rng))
    S = lambda z: FlowMapState(z, 1e-3)
    err = directional_error(lambda z: residual_axisym_bdf1(S(z), p, d, LIN, pot, 1e-3),
                            lambda z: tangent_axisym_bdf1(S(z), p, d, LIN, pot, 1e-3),
                            random_admissible(d, rng), rng.uniform(-1, 1, d.ndof))
    assert err < 1e-5


def test_radial_run_dissipates_and_pins_outer_radius():
    d = polar_disc("spectral", 16)
    s = AxisymmetricSolver(d, LIN, Potential.double_well(1e-3), 1e-4)
    st_ = d.identity_state()
    for rec in s.march(st_, 10):
        assert rec.audit.satisfied and rec.min_jacobian > 0
        assert d.positions(rec.state.coeffs)[-1] == 1.0
        assert d.positions(rec.state.coeffs)[0] > 0


def test_radial_solver_is_first_order_only():
    with pytest.raises(ParameterError):
        AxisymmetricSolver(polar_disc("fem", 8), LIN, Potential.none(), 1e-3, scheme="bdf2")
