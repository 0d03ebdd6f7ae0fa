import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagrangian_ac import (Domain1D, DomainError, FlowMapState, InitialProfile, NoInterfaceError,
                           make_disc)
from lagrangian_ac.acceptance import random_admissible
from lagrangian_ac.reconstruction import (interface_level, interface_metrics, invert_flow_map,
                                          max_principle_check, reconstruct, spectral_profile,
                                          total_variation)
from lagrangian_ac.spatial import FEMDisc

LIN = InitialProfile.linear()


def _three_node_map():
    d = FEMDisc(np.array([-1.0, 0.0, 1.0]))
    return d, d.state_from_positions(np.array([-1.0, 0.5, 1.0]))


def test_identity_inverse():
    d = make_disc("spectral", 8)
    assert invert_flow_map(d.identity_state(), d, 0.3) == pytest.approx(0.3, abs=1e-12)


def test_piecewise_linear_inverse_and_composition():
    d, s = _three_node_map()
    # the piece [-1, 0] maps onto [-1, 0.5] with slope 1.5
    assert invert_flow_map(s, d, 0.25) == pytest.approx(-1.0 + 1.25 / 1.5, abs=1e-14)
    assert reconstruct(s, d, LIN, 0.25) == pytest.approx(-1.0 / 6.0, abs=1e-14)
    assert invert_flow_map(s, d, 1.0) == 1.0 and invert_flow_map(s, d, -1.0) == -1.0


def test_query_outside_range():
    d, s = _three_node_map()
    with pytest.raises(DomainError):
        invert_flow_map(s, d, 1.01)


@pytest.mark.parametrize("space", ["fem", "spectral"])
def test_reconstruction_is_exact_at_mesh_images(space, rng):
    d = make_disc(space, 16)
    s = FlowMapState(random_admissible(d, rng))
    x = d.positions(s.coeffs)
    prof = InitialProfile.parabola()
    assert np.allclose(reconstruct(s, d, prof, x), prof.value(d.nodes), atol=1e-12)


@given(st.integers(0, 10_000), st.sampled_from(["fem", "spectral"]))
def test_inversion_round_trip(seed, space):
    rng = np.random.default_rng(seed)
    d = make_disc(space, 12)
    u = random_admissible(d, rng)
    X = rng.uniform(-1, 1, 25)
    x = d.evaluate(u, X)
    assert np.allclose(invert_flow_map(FlowMapState(u), d, x), X, atol=1e-10)


@given(st.integers(0, 10_000))
def test_reconstructed_values_stay_in_range(seed):
    rng = np.random.default_rng(seed)
    d = make_disc("spectral", 12)
    s = FlowMapState(random_admissible(d, rng))
    f = reconstruct(s, d, InitialProfile.parabola(), np.linspace(-1, 1, 301))
    assert np.all(f >= 0.0) and np.all(f <= 1.0)


def test_max_principle_examples(rng):
    d = make_disc("fem", 10)
    s = FlowMapState(random_admissible(d, rng))
    lin = max_principle_check(s, d, LIN)
    assert lin.bound == 1.0 and lin.ok
    assert max_principle_check(s, d, InitialProfile.parabola()).bound == pytest.approx(1.0)
    c = max_principle_check(s, d, InitialProfile.constant(-0.4))
    assert c.max_abs == 0.4 and c.ok


def test_interface_metrics_examples():
    x = np.linspace(-1, 1, 20001)
    m = interface_metrics(x, x)
    assert m.location == pytest.approx(0.0, abs=1e-12) and m.width == pytest.approx(1.8, abs=1e-12)
    eps = np.sqrt(1e-3)
    m = interface_metrics(np.tanh(x / (np.sqrt(2) * eps)), x)
    assert m.location == pytest.approx(0.0, abs=1e-12)
    assert m.width == pytest.approx(2 * np.sqrt(2) * eps * np.arctanh(0.9), rel=1e-6)
    assert m.crossings == 1
    assert interface_metrics(np.tanh((x + 0.2) / 0.05), x).location == pytest.approx(-0.2, abs=1e-9)


def test_interface_metrics_errors():
    with pytest.raises(NoInterfaceError):
        interface_metrics(np.ones(10) * 0.5)


def test_interface_level_of_parabola():
    assert interface_level(InitialProfile.parabola(), Domain1D()) == pytest.approx((0.5, 0.5))


def test_spectral_profile_reproduces_polynomials():
    d = make_disc("spectral", 10)
    sp = spectral_profile(d.identity_state(), d, InitialProfile.parabola())
    x = np.linspace(-1, 1, 57)
    assert np.allclose(sp(x), 1 - x ** 2, atol=1e-12)
    assert sp.filtered()(np.array([0.0]))[0] < 1.0


def test_total_variation():
    assert total_variation([0.0, 1.0, -1.0, 2.0]) == 6.0
