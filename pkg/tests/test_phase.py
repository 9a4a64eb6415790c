import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasekit.equation import ScalarODE
from phasekit.errors import (
    InvalidArgumentError,
    PhaseOverflowError,
    PhasekitError,
    SingularMatrixError,
)
from phasekit.levin import LevinConfig
from phasekit.phase import (
    PhaseSet,
    basis_derivatives,
    build_phase_set,
    frequency_omega,
    solve_bvp,
    solve_ivp,
)
from phasekit.problems import make_problem
from phasekit.riccati import jet_polynomials

# P_256(0.999) to 25 digits, from an arbitrary-precision evaluation
P256_0999 = -0.0740430997455557786246198


def harmonic(w, interval=(0.0, 1.0)):
    return ScalarODE(2, interval, lambda t: np.array([w * w + 0 * t, 0 * t]))


@pytest.fixture(scope="module")
def harmonic_phases():
    w = 200.0
    return w, build_phase_set(harmonic(w))


@pytest.fixture(scope="module")
def legendre_phases():
    spec = make_problem("legendre", 2.0 ** 8)
    return spec, build_phase_set(spec.ode, LevinConfig(spec.window))


@pytest.fixture(scope="module")
def fourth_order_phases():
    spec = make_problem("fourth-order", 2.0 ** 5)
    return spec, build_phase_set(spec.ode, LevinConfig(spec.window), eta=0.0)


def _branch(ps, sign):
    """Index of the branch whose r has the given sign of imaginary part."""
    return int(np.argmax(sign * np.array([ps.r(j, 0.5).imag for j in range(ps.n)])))


# -- phase construction ------------------------------------------------------

def test_harmonic_phases_are_linear(harmonic_phases):
    w, ps = harmonic_phases
    t = np.linspace(0, 1, 101)
    up, down = _branch(ps, 1), _branch(ps, -1)
    assert np.all(np.abs(ps.phase(up, t) - 1j * w * t) <= 1e-11 * w * np.maximum(t, 1e-3))
    assert np.all(np.abs(ps.phase(down, t) + 1j * w * t) <= 1e-11 * w * np.maximum(t, 1e-3))


def test_legendre_value_at_endpoint(legendre_phases):
    spec, ps = legendre_phases
    t0, values = spec.conditions
    y = solve_ivp(ps, t0, values)(0.999)
    assert abs(y - P256_0999) <= 1e-11


@pytest.mark.xfail(strict=True, reason="coefficient count exceeds 1000 at per-component "
                   "eps=1e-12; see the decisions ledger on the Riccati noise floor")
def test_third_order_coefficient_count_at_512(quiet):
    spec = make_problem("third-order", 2.0 ** 9)
    ps = build_phase_set(spec.ode, LevinConfig(spec.window))
    assert ps.ncoeffs < 1000


def test_normalization_is_exact():
    w = 50.0
    vals = np.array([0.25 - 1j, 3.0 + 0.5j])
    ps = build_phase_set(harmonic(w), eta=0.37, eta_values=vals)
    for j in range(2):
        assert ps.phase(j, 0.37) == vals[j]


def test_phase_derivative_consistency(fourth_order_phases, rng):
    _, ps = fourth_order_phases
    t = rng.uniform(-1, 1, 100)
    for j in range(ps.n):
        for d in range(ps.n - 1):
            from_phase = ps.psi[j][d](t, deriv=1)
            stored = ps.psi[j][d + 1](t)
            scale = max(1.0, np.abs(stored).max())
            assert np.abs(from_phase - stored).max() <= 1e-10 * scale


def test_eta_validation():
    with pytest.raises(InvalidArgumentError):
        build_phase_set(harmonic(10.0), eta=2.0)
    with pytest.raises(InvalidArgumentError):
        build_phase_set(harmonic(10.0), eta_values=[0.0])


def test_turning_point_is_reported():
    w = 200.0
    ode = ScalarODE(2, (0.0, 1.0), lambda t: np.array([w * w * (t - 0.5), 0 * t]))
    with pytest.raises(PhasekitError):
        build_phase_set(ode)


def test_json_round_trip(harmonic_phases):
    _, ps = harmonic_phases
    obj = json.loads(json.dumps(ps.to_json()))
    assert {"n", "a", "b", "sigma", "eta"} <= set(obj)
    back = PhaseSet.from_json(obj)
    t = np.linspace(0, 1, 7)
    for j in range(2):
        np.testing.assert_array_equal(back.phase(j, t), ps.phase(j, t))


def test_coefficient_counts(fourth_order_phases):
    _, ps = fourth_order_phases
    assert ps.ncoeffs == sum(ps.psi[j][0].ncoeffs for j in range(4))
    assert ps.ncoeffs_all == 4 * ps.ncoeffs


# -- basis functions ---------------------------------------------------------

def test_basis_at_eta_is_exp_of_prescribed_value():
    vals = np.array([0.1 + 0.2j, -0.3j])
    ps = build_phase_set(harmonic(30.0), eta=0.0, eta_values=vals)
    for j in range(2):
        assert basis_derivatives(ps, j, 0.0, 0) == pytest.approx(np.exp(vals[j]), rel=1e-15)


def test_first_derivative_is_chain_rule(harmonic_phases):
    _, ps = harmonic_phases
    t = 0.4
    for j in range(2):
        expected = ps.r(j, t) * np.exp(ps.phase(j, t))
        assert basis_derivatives(ps, j, t, 1) == pytest.approx(expected, rel=1e-14)


def test_second_derivative_of_harmonic(harmonic_phases):
    w, ps = harmonic_phases
    t = np.linspace(0, 1, 11)
    up = _branch(ps, 1)
    np.testing.assert_allclose(basis_derivatives(ps, up, t, 2), -w * w * np.exp(1j * w * t),
                               atol=1e-9 * w * w)


def test_derivative_order_range(harmonic_phases):
    _, ps = harmonic_phases
    with pytest.raises(InvalidArgumentError):
        basis_derivatives(ps, 0, 0.5, 2 + 1)


def test_overflow_is_named():
    w = 2000.0
    ode = ScalarODE(2, (0.0, 1.0), lambda t: np.array([-w * w + 0 * t, 0 * t]))
    rep = solve_ivp(build_phase_set(ode), 0.0, [1.0, 0.0])
    assert abs(rep(0.1) - np.cosh(w * 0.1)) <= 1e-10 * np.cosh(w * 0.1)
    with pytest.raises(PhaseOverflowError) as exc:
        rep(1.0)
    assert exc.value.branch in (0, 1)


# -- initial and boundary value problems ------------------------------------

def test_ivp_selects_single_exponential(harmonic_phases):
    w, ps = harmonic_phases
    rep = solve_ivp(ps, 0.0, [1.0, 1j * w])
    c = rep.basis_weights
    up, down = _branch(ps, 1), _branch(ps, -1)
    assert abs(c[up] - 1) <= 1e-12 and abs(c[down]) <= 1e-12
    t = np.linspace(0, 1, 201)
    np.testing.assert_allclose(rep(t), np.exp(1j * w * t), atol=1e-10)
    assert rep.cond >= 1.0 and rep.wall_time >= 0.0


def test_ivp_value_count(harmonic_phases):
    _, ps = harmonic_phases
    with pytest.raises(InvalidArgumentError):
        solve_ivp(ps, 0.0, [1.0, 0.0, 0.0])


def test_bvp_matches_closed_form(harmonic_phases):
    w, ps = harmonic_phases
    t1 = np.pi / (2 * w)
    # y(0) = 1, y(t1) = 2 gives y = cos(w t) + 2 sin(w t)
    rep = solve_bvp(ps, [(0.0, 0, 1.0), (t1, 0, 2.0)])
    t = np.linspace(0, 1, 201)
    np.testing.assert_allclose(rep(t), np.cos(w * t) + 2 * np.sin(w * t), atol=1e-9)
    np.testing.assert_allclose(rep(t, 1), w * (-np.sin(w * t) + 2 * np.cos(w * t)),
                               atol=1e-9 * w)


def test_bvp_condition_count(harmonic_phases):
    _, ps = harmonic_phases
    with pytest.raises(InvalidArgumentError):
        solve_bvp(ps, [(0.0, 0, 1.0)])
    with pytest.raises(InvalidArgumentError):
        solve_bvp(ps, [(0.0, 0, 1.0), (0.5, 0, 1.0), (1.0, 0, 1.0)])


def test_bvp_duplicate_conditions(harmonic_phases):
    _, ps = harmonic_phases
    with pytest.raises(SingularMatrixError):
        solve_bvp(ps, [(0.2, 0, 1.0), (0.2, 0, 1.0)])


def test_bvp_point_outside(harmonic_phases):
    _, ps = harmonic_phases
    with pytest.raises(InvalidArgumentError):
        solve_bvp(ps, [(0.0, 0, 1.0), (1.5, 0, 1.0)])


def test_real_ivp_stays_real(legendre_phases, rng):
    spec, ps = legendre_phases
    t = rng.uniform(0, 0.999, 200)
    for values in ([1.0, 0.0], [0.0, 1.0], list(rng.standard_normal(2))):
        y = solve_ivp(ps, 0.0, values)(t)
        assert np.abs(y.imag).max() <= 1e-9 * max(1.0, np.abs(y).max())


@settings(max_examples=10)
@given(st.integers(0, 2 ** 32 - 1))
def test_basis_property(fourth_order_phases, seed):
    spec, ps = fourth_order_phases
    r = np.random.default_rng(seed)
    rep = solve_ivp(ps, 0.0, r.standard_normal(4) + 1j * r.standard_normal(4))
    t = r.uniform(-1, 1, 50)
    q = spec.ode.q(t)
    n = 4
    res = 0
    size = 0
    for j in range(n):
        jet = np.stack([ps.phase(j, t, d) for d in range(1, n)]
                       + [ps.psi[j][n - 1](t, deriv=1)], axis=-1)
        P = jet_polynomials(n)
        e = rep.weights[j] * np.exp(ps.phase(j, t) - rep.shifts[j])
        R = P[n](jet) + sum(q[m] * P[m](jet) for m in range(n))
        res = res + e * R
        size = size + np.abs(e) * np.abs(P[n](jet))
    qscale = max(1.0, float(np.abs(q).max()))
    assert np.all(np.abs(res) <= 1e-7 * size * qscale)


# -- frequency ----------------------------------------------------------------

def test_harmonic_frequency():
    assert frequency_omega(harmonic(37.5)) == pytest.approx(37.5, rel=1e-12)


@pytest.mark.parametrize("name, expected", [("third-order", 3.9105711803332608),
                                            ("fourth-order", 2.9722185451883475)])
def test_frequency_matches_quadrature(name, expected):
    # expected values from arbitrary-precision quadrature of |lambda_j|
    assert frequency_omega(make_problem(name, 1.0).ode) == pytest.approx(expected, rel=1e-9)
