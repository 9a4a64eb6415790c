import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasekit.chebkit import (
    PiecewiseCheb,
    cheb_nodes,
    chebfit_adaptive,
    coeff_tail_ratio,
    coeffs_to_vals,
    diff_matrix,
    integration_matrix,
    pw_eval,
    vals_to_coeffs,
)
from phasekit.errors import DomainError, InvalidArgumentError

ks = st.integers(min_value=2, max_value=40)
intervals = st.tuples(
    st.floats(-50, 50, allow_nan=False), st.floats(1e-3, 20, allow_nan=False)
).map(lambda p: (p[0], p[0] + p[1]))


# -- nodes -------------------------------------------------------------------

def test_two_nodes_are_the_endpoints():
    np.testing.assert_array_equal(cheb_nodes(2).nodes, [-1.0, 1.0])


def test_three_nodes_include_the_midpoint_exactly():
    np.testing.assert_array_equal(cheb_nodes(3).nodes, [-1.0, 0.0, 1.0])


def test_sixteen_nodes_on_short_window():
    g = cheb_nodes(16, (0.0, 0.1))
    assert g.nodes.size == 16
    assert g.nodes[0] == 0.0 and g.nodes[15] == 0.1


@pytest.mark.parametrize("k, interval", [(1, (0, 1)), (0, (0, 1)), (4, (1, 1)), (4, (2, 1)),
                                         (2.5, (0, 1)), (4, (0, np.inf))])
def test_bad_grid_arguments(k, interval):
    with pytest.raises(InvalidArgumentError):
        cheb_nodes(k, interval)


@given(ks, intervals)
def test_nodes_follow_the_cosine_formula(k, interval):
    a, b = interval
    g = cheb_nodes(k, interval)
    j = np.arange(k)
    expected = 0.5 * (b - a) * np.cos(np.pi * (k - j - 1) / (k - 1)) + 0.5 * (b + a)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] == a and g.nodes[-1] == b
    np.testing.assert_allclose(g.nodes, expected, rtol=0, atol=1e-14 * max(abs(a), abs(b), 1))


# -- differentiation and integration ----------------------------------------

def test_diff_annihilates_constants():
    D = diff_matrix(cheb_nodes(16))
    np.testing.assert_allclose(D @ np.ones(16), 0.0, atol=1e-13)


def test_diff_of_t_squared():
    g = cheb_nodes(16)
    np.testing.assert_allclose(diff_matrix(g) @ g.nodes ** 2, 2 * g.nodes, atol=1e-12)


@given(ks)
def test_diff_rows_sum_to_zero(k):
    D = diff_matrix(cheb_nodes(k, (0.0, 3.0)))
    np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-12 * np.abs(D).max())


@given(st.integers(3, 24), intervals, st.data())
def test_diff_exact_on_polynomials(k, interval, data):
    deg = data.draw(st.integers(0, k - 1))
    c = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=deg + 1, max_size=deg + 1)))
    g = cheb_nodes(k, interval)
    a, b = interval
    x = (2 * g.nodes - a - b) / (b - a)
    p = np.polynomial.Chebyshev(c)
    exact = p.deriv()(x) * 2 / (b - a)
    scale = max(1.0, np.abs(exact).max(), np.abs(c).sum() * k * k * 2 / (b - a))
    np.testing.assert_allclose(diff_matrix(g) @ p(x), exact, atol=1e-12 * scale)


def test_integrate_one_gives_t():
    g = cheb_nodes(16, (0.0, 1.0))
    np.testing.assert_allclose(integration_matrix(g) @ np.ones(16), g.nodes, atol=1e-15)


def test_integrate_two_t_gives_t_squared():
    g = cheb_nodes(16, (0.0, 1.0))
    np.testing.assert_allclose(integration_matrix(g) @ (2 * g.nodes), g.nodes ** 2, atol=1e-15)


def test_integrate_cos_gives_sin():
    g = cheb_nodes(16, (0.0, 1.0))
    np.testing.assert_allclose(integration_matrix(g) @ np.cos(g.nodes), np.sin(g.nodes),
                               atol=1e-14)


@given(ks, intervals)
def test_integration_first_row_is_zero(k, interval):
    S = integration_matrix(cheb_nodes(k, interval))
    assert np.all(S[0] == 0.0)


# -- transforms ---------------------------------------------------------------

def test_constant_has_single_coefficient():
    c = vals_to_coeffs(np.full(16, 2.5 - 1j))
    np.testing.assert_allclose(c, np.r_[2.5 - 1j, np.zeros(15)], atol=1e-14 * abs(2.5 - 1j))


def test_t3_is_a_unit_vector():
    x = cheb_nodes(8).nodes
    np.testing.assert_allclose(vals_to_coeffs(4 * x ** 3 - 3 * x), np.eye(8)[3], atol=1e-15)


@given(st.integers(2, 40), st.integers(0, 2 ** 32 - 1))
def test_transform_round_trip(k, seed):
    r = np.random.default_rng(seed)
    v = r.standard_normal(k) + 1j * r.standard_normal(k)
    back = coeffs_to_vals(vals_to_coeffs(v))
    assert np.abs(back - v).max() <= 1e-14 * np.abs(v).max() * max(1, k / 8)


def test_transforms_accept_trailing_axes(rng):
    v = rng.standard_normal((16, 3, 2))
    c = vals_to_coeffs(v)
    assert c.shape == v.shape
    np.testing.assert_allclose(c[:, 1, 0], vals_to_coeffs(v[:, 1, 0]))


# -- tail ratio ---------------------------------------------------------------

@pytest.mark.parametrize("coeffs, expected", [
    ((1, 0, 0, 0), 0.0),
    ((0, 0, 1, 1), 1.0),
    ((1, 1, 1e-8, 0), 1e-8 / np.sqrt(2)),
    ((0, 0, 0, 0), 0.0),
])
def test_tail_ratio_examples(coeffs, expected):
    assert coeff_tail_ratio(np.array(coeffs, dtype=complex)) == pytest.approx(expected, rel=1e-12)


def test_tail_ratio_needs_four_coefficients():
    with pytest.raises(InvalidArgumentError):
        coeff_tail_ratio([1.0, 2.0, 3.0])


@given(st.lists(st.complex_numbers(max_magnitude=1e6), min_size=4, max_size=32))
def test_tail_ratio_is_a_fraction(c):
    r = coeff_tail_ratio(np.array(c))
    assert 0.0 <= r <= 1.0 + 1e-15


# -- piecewise expansions -----------------------------------------------------

def _t_squared():
    return PiecewiseCheb.from_function(lambda t: t ** 2, [0.0, 1.0], k=16)


def test_pw_eval_value():
    assert pw_eval(_t_squared(), 0.5) == pytest.approx(0.25, abs=1e-15)


def test_pw_eval_derivative():
    assert pw_eval(_t_squared(), 0.5, 1) == pytest.approx(1.0, abs=1e-13)


def test_pw_eval_outside_domain():
    with pytest.raises(DomainError):
        pw_eval(_t_squared(), 1.5)
    with pytest.raises(DomainError):
        pw_eval(_t_squared(), np.nan)


def test_pw_eval_derivative_order_range():
    with pytest.raises(InvalidArgumentError):
        pw_eval(_t_squared(), 0.5, 16)


def test_breakpoint_belongs_to_right_piece():
    # discontinuous on purpose so ownership is visible
    f = PiecewiseCheb([0.0, 1.0, 2.0], np.array([[1.0] + [0] * 7, [2.0] + [0] * 7]))
    assert f(1.0) == 2.0
    assert f(2.0) == 2.0
    assert f(0.0) == 1.0
    np.testing.assert_array_equal(f.owner([0.0, 0.5, 1.0, 1.5, 2.0]), [0, 0, 1, 1, 1])


def test_breakpoint_values_match_left_limit():
    f = chebfit_adaptive(np.cos, 0.0, 40.0, k=16, eps=1e-13)
    assert f.npieces > 1
    for x in f.partition[1:-1]:
        left = pw_eval(PiecewiseCheb(f.partition, f.coeffs), np.nextafter(x, -np.inf))
        assert abs(left - f(x)) <= 1e-12


@given(st.integers(1, 6), st.integers(4, 20))
def test_block_sizes_sum_to_m_times_k(m, k):
    f = PiecewiseCheb.from_function(np.sin, np.linspace(0, 1, m + 1), k=k)
    assert f.ncoeffs == m * k and f.coeffs.shape == (m, k)


def test_partition_must_increase():
    with pytest.raises(InvalidArgumentError):
        PiecewiseCheb([0.0, 0.0, 1.0], np.zeros((2, 4)))
    with pytest.raises(InvalidArgumentError):
        PiecewiseCheb([0.0, 1.0], np.zeros((2, 4)))


def test_json_round_trip():
    f = PiecewiseCheb.from_function(lambda t: np.exp(1j * t), [0.0, 0.5, 1.0], k=8)
    obj = json.loads(json.dumps(f.to_json()))
    assert set(obj) == {"order", "partition", "blocks"}
    g = PiecewiseCheb.from_json(obj)
    np.testing.assert_array_equal(g.coeffs, f.coeffs)
    np.testing.assert_array_equal(g.partition, f.partition)


def test_antiderivative_is_continuous_and_anchored():
    f = chebfit_adaptive(lambda t: np.cos(30 * t), 0.0, 2.0, k=16, eps=1e-13)
    F = f.antiderivative(anchor=1.0, value=3.0)
    assert F(1.0) == pytest.approx(3.0, abs=1e-14)
    t = np.linspace(0, 2, 301)
    np.testing.assert_allclose(F(t), 3.0 + (np.sin(30 * t) - np.sin(30.0)) / 30, atol=1e-13)


def test_derivative_matches_closed_form():
    f = chebfit_adaptive(np.exp, -1.0, 3.0, k=16, eps=1e-14)
    t = np.linspace(-1, 3, 101)
    np.testing.assert_allclose(f.derivative(2)(t), np.exp(t), rtol=1e-10)


def test_concatenate_requires_abutting_domains():
    a = PiecewiseCheb.from_function(np.sin, [0.0, 1.0], k=8)
    b = PiecewiseCheb.from_function(np.sin, [1.0, 2.0], k=8)
    c = PiecewiseCheb.concatenate(a, b)
    assert c.npieces == 2 and c.domain == (0.0, 2.0)
    with pytest.raises(InvalidArgumentError):
        PiecewiseCheb.concatenate(b, a)
