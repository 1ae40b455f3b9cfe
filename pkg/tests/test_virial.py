import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fracbl.errors import ConfigurationError, ParameterDomainError
from fracbl.flux import flux_derivative
from fracbl.initial_data import blowup_seed, paper_fig
from fracbl.spectral import Grid, SpectralField, holder_seminorm
from fracbl.virial import (
    VirialState,
    advance_characteristic,
    blowup_time_bound,
    characteristic_step,
    j0,
    j_functional,
    odi_residual,
    shifted_nodal,
    weighted_window_integral,
)


def singular_oracle(fn, delta):
    # int_{-1}^0 g(x) |x|^-delta dx = int_0^1 g(-s) s^-delta ds with an algebraic weight
    val, _ = integrate.quad(lambda s: fn(-s), 0.0, 1.0, weight="alg", wvar=(-delta, 0.0),
                            epsabs=1e-14, epsrel=1e-13)
    return val


# ---------------------------------------------------------------- quadrature

@given(st.floats(0.01, 0.99))
def test_linear_profile_closed_form(delta):
    x = np.linspace(-1.0, 0.0, 7)
    assert weighted_window_integral(x, -x, delta) == pytest.approx(1 / (2 - delta), rel=1e-13)


def test_constant_profile_gives_zero(grid256):
    assert j_functional(SpectralField.constant(grid256, 0.4), 0.3, 0.1) == 0.0


def test_j0_blowup_seed_against_quad():
    g = Grid(4096)
    u = SpectralField.from_function(g, blowup_seed)
    oracle = singular_oracle(blowup_seed, 0.1)
    assert j0(u, 0.1) == pytest.approx(oracle, abs=1e-7)


def test_j_paper_profile_against_quad():
    g = Grid(4096)
    u = SpectralField.from_function(g, paper_fig)
    oracle = singular_oracle(lambda x: paper_fig(x) - paper_fig(0.0), 0.1)
    assert j_functional(u, 0.0, 0.1) == pytest.approx(oracle, abs=1e-6)


def test_j_converges_at_order_two_minus_delta():
    delta = 0.1
    oracle = singular_oracle(blowup_seed, delta)
    errs = [abs(j_functional(SpectralField.from_function(Grid(n), blowup_seed), 0.0, delta) - oracle)
            for n in (128, 256, 512)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 2 - delta - 0.1)


def test_j_is_linear(rng):
    g = Grid(256)
    a = SpectralField.from_function(g, lambda x: np.sin(x) + 0.3 * np.cos(3 * x))
    b = SpectralField.from_function(g, lambda x: np.cos(2 * x))
    y = 0.37
    lhs = j_functional(2.5 * a + (-1.5) * b, y, 0.2)
    rhs = 2.5 * j_functional(a, y, 0.2) - 1.5 * j_functional(b, y, 0.2)
    assert lhs == pytest.approx(rhs, abs=1e-14)


def test_shift_is_exact_translation():
    g = Grid(64)
    u = SpectralField.from_function(g, lambda x: np.cos(x) + 0.5 * np.sin(7 * x))
    y = 0.731
    np.testing.assert_allclose(shifted_nodal(u, y), np.cos(g.x + y) + 0.5 * np.sin(7 * (g.x + y)), atol=1e-13)


def test_j_shift_matches_translated_profile():
    g = Grid(512)
    y = 0.4
    u = SpectralField.from_function(g, blowup_seed)
    oracle = singular_oracle(lambda x: blowup_seed(x + y) - blowup_seed(y), 0.1)
    assert j_functional(u, y, 0.1) == pytest.approx(oracle, abs=1e-5)


def test_j_below_holder_seminorm():
    for fn in (blowup_seed, paper_fig, lambda x: np.sin(3 * x)):
        u = SpectralField.from_function(Grid(1024), fn)
        for y in (0.0, 0.5, -2.0):
            assert j_functional(u, y, 0.1) <= holder_seminorm(u, 0.1)


def test_j0_precondition():
    g = Grid(128)
    with pytest.raises(ConfigurationError):
        j0(SpectralField.from_function(g, np.cos), 0.1)
    assert j0(SpectralField.constant(g, 0.0), 0.1) == 0.0


def test_delta_domain():
    g = Grid(64)
    with pytest.raises(ParameterDomainError):
        j_functional(SpectralField.constant(g, 0.0), 0.0, 1.0)
    with pytest.raises(ParameterDomainError):
        VirialState(delta=0.0)


# ---------------------------------------------------------------- characteristic

@pytest.mark.parametrize("value,y0", [(0.0, 0.0), (1.0, 1.3)])
def test_characteristic_fixed_on_zero_speed(value, y0):
    u = SpectralField.constant(Grid(64), value)
    st_ = VirialState(delta=0.1, y=y0)
    for _ in range(10):
        advance_characteristic(st_, u, 0.1, 0.5)
    assert st_.y == y0


def test_characteristic_frozen_field_against_ode_solver():
    M = 0.5
    u = SpectralField.from_function(Grid(256), lambda x: 0.5 + 0.4 * np.sin(x))
    sol = integrate.solve_ivp(lambda t, y: flux_derivative(0.5 + 0.4 * np.sin(y), M), (0, 1), [0.0],
                              rtol=1e-12, atol=1e-13)
    y = 0.0
    for _ in range(200):
        y = characteristic_step(y, u, 0.005, M)
    assert y == pytest.approx(sol.y[0, -1], abs=1e-8)


def test_y_reduced():
    st_ = VirialState(delta=0.1, y=3 * np.pi / 2)
    assert st_.y_reduced == pytest.approx(-np.pi / 2)


# ---------------------------------------------------------------- ODI

def test_odi_zero_history():
    hist = [(t, 0.0) for t in np.linspace(0, 1, 5)]
    np.testing.assert_array_equal(odi_residual(hist, 0.5, 0.1), 0.0)


def test_odi_equality_solution():
    M, delta, T = 0.5, 0.1, 2.0
    t = np.linspace(0, 1, 201)
    j = (1 + M) / (delta * (T - t))
    res = odi_residual(np.column_stack([t, j]), M, delta)
    scale = delta / (1 + M) * j * j
    assert np.abs(res / scale).max() < 1e-4


def test_odi_needs_history():
    with pytest.raises(ValueError):
        odi_residual([(0.0, 1.0), (1.0, 2.0)], 0.5, 0.1)


def test_blowup_bound():
    assert blowup_time_bound(1.0, 0.5, 0.1) == pytest.approx(15.0, rel=1e-15)
    assert blowup_time_bound(2.0, 0.5, 0.1) == pytest.approx(7.5, rel=1e-15)
    with pytest.raises(ParameterDomainError):
        blowup_time_bound(0.0, 0.5, 0.1)
    assert math.isfinite(blowup_time_bound(1e-3, 0.5, 0.9))
