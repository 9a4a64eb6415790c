import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasekit.chebkit import cheb_nodes, coeff_tail_ratio
from phasekit.errors import BudgetExhaustedError, InvalidArgumentError
from phasekit.levin import LevinConfig, levin_stage
from phasekit.odesolve import (
    AdaptiveConfig,
    LinearProblem,
    NonlinearProblem,
    RiccatiProblem,
    solve_adaptive,
    solve_local_linear,
    solve_local_nonlinear,
)
from phasekit.problems import make_problem


def oscillator(w):
    return LinearProblem(lambda t: np.broadcast_to(
        np.array([[0.0, 1.0], [-w * w, 0.0]], dtype=complex), (np.size(t), 2, 2)))


def logistic():
    return NonlinearProblem(lambda t, U: U * (1 - U),
                            lambda t, U: (1 - 2 * U)[:, :, None])


def _tails(sol):
    return coeff_tail_ratio(np.moveaxis(sol.coeffs, 1, -1))


# -- local solvers -----------------------------------------------------------

def test_local_exponential():
    U, ok = solve_local_linear(lambda t: np.ones((t.size, 1, 1)), None, (0.0, 1.0), [1.0])
    g = cheb_nodes(16, (0.0, 1.0))
    assert ok
    np.testing.assert_allclose(U[:, 0], np.exp(g.nodes), atol=1e-13)


def test_local_sine_cosine():
    A = lambda t: np.broadcast_to(np.array([[0, 1], [-1, 0]], dtype=complex), (t.size, 2, 2))
    U, ok = solve_local_linear(A, None, (0.0, 1.0), [0.0, 1.0])
    g = cheb_nodes(16, (0.0, 1.0))
    assert ok
    np.testing.assert_allclose(U[:, 0], np.sin(g.nodes), atol=1e-13)
    np.testing.assert_allclose(U[:, 1], np.cos(g.nodes), atol=1e-13)


def test_local_forcing_only():
    U, ok = solve_local_linear(lambda t: np.zeros((t.size, 1, 1)), lambda t: 2 * t[:, None],
                               (0.0, 1.0), [0.5])
    g = cheb_nodes(16, (0.0, 1.0))
    np.testing.assert_allclose(U[:, 0], 0.5 + g.nodes ** 2, atol=1e-14)


def test_local_constant_riccati_converges_at_once():
    w = 20.0
    F = lambda t, U: -U ** 2 - w * w
    J = lambda t, U: (-2 * U)[:, :, None]
    U, ok = solve_local_nonlinear(F, J, (0.0, 0.1), [1j * w])
    assert ok
    np.testing.assert_allclose(U[:, 0], 1j * w, rtol=1e-14)


def test_local_logistic():
    p = logistic()
    U, ok = solve_local_nonlinear(p.F, p.jac, (0.0, 1.0), [0.5])
    g = cheb_nodes(16, (0.0, 1.0))
    assert ok
    np.testing.assert_allclose(U[:, 0], 1 / (1 + np.exp(-g.nodes)), atol=1e-12)


# -- adaptive driver ---------------------------------------------------------

def test_exponential_in_one_piece():
    p = LinearProblem(lambda t: np.ones((np.size(t), 1, 1), dtype=complex))
    sol = solve_adaptive(p, (0.0, 1.0), [1.0], AdaptiveConfig(eps=1e-12))
    assert sol.npieces == 1
    assert abs(sol(1.0)[0] - np.e) <= 1e-12 * np.e


@pytest.mark.parametrize("w", [2.0 ** 4, 2.0 ** 6, 2.0 ** 8])
def test_oscillator_endpoint(w):
    sol = solve_adaptive(oscillator(w), (0.0, 1.0), [1.0, 0.0])
    end = sol(1.0)
    assert abs(end[0] - np.cos(w)) <= 1e-9
    assert abs(end[1] + w * np.sin(w)) <= 1e-9 * w


def test_piece_count_grows_with_frequency():
    counts = [solve_adaptive(oscillator(w), (0.0, 1.0), [1.0, 0.0]).npieces
              for w in (2.0 ** 6, 2.0 ** 8, 2.0 ** 10)]
    assert counts[0] < counts[1] < counts[2]
    # roughly proportional: quadrupling w multiplies the count by 2 to 8
    assert 2 <= counts[1] / counts[0] <= 8 and 2 <= counts[2] / counts[1] <= 8


def test_blow_up_exhausts_budget():
    p = NonlinearProblem(lambda t, U: U ** 2, lambda t, U: (2 * U)[:, :, None])
    with pytest.raises(BudgetExhaustedError) as exc:
        solve_adaptive(p, (0.0, 2.0), [1.0], AdaptiveConfig(max_intervals=2000))
    assert exc.value.location == pytest.approx(1.0, abs=1e-3)
    assert exc.value.partition[-1] <= 1.0


def test_depth_cap_raises():
    p = NonlinearProblem(lambda t, U: U ** 2, lambda t, U: (2 * U)[:, :, None])
    with pytest.raises(BudgetExhaustedError):
        solve_adaptive(p, (0.0, 2.0), [1.0], AdaptiveConfig(max_depth=5))


def test_interior_condition_marches_both_ways():
    w = 40.0
    sol = solve_adaptive(oscillator(w), (-1.0, 1.0), [1.0, 0.0], eta=0.3)
    t = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(sol(t)[:, 0], np.cos(w * (t - 0.3)), atol=1e-10)
    assert sol.partition[0] == -1.0 and sol.partition[-1] == 1.0
    assert 0.3 in sol.partition


def test_backward_from_right_end():
    p = logistic()
    sol = solve_adaptive(p, (0.0, 1.0), [1 / (1 + np.exp(-1.0))], eta=1.0)
    assert abs(sol(0.0)[0] - 0.5) <= 1e-12


def test_multiple_initial_values_at_once():
    sol = solve_adaptive(oscillator(10.0), (0.0, 1.0), np.eye(2, dtype=complex))
    assert sol.shape == (2, 2)
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(sol(t)[:, 0, 1], np.sin(10 * t) / 10, atol=1e-12)


def test_legendre_riccati_extension():
    spec = make_problem("legendre", 2.0 ** 8)
    state = levin_stage(spec.ode, LevinConfig((0.0, 0.1)))
    sols = [solve_adaptive(RiccatiProblem(spec.ode), spec.interval, state.values[j],
                           eta=state.sigma) for j in range(2)]
    total = sum(s.coeffs.size for s in sols)
    assert total < 2000
    r1, r2 = sols[0](0.999)[0], sols[1](0.999)[0]
    assert abs(r2 - np.conj(r1)) <= 1e-9 * abs(r1)


@pytest.mark.parametrize("bad", [dict(eps=0.0), dict(eps=-1.0), dict(k=3)])
def test_config_validation(bad):
    with pytest.raises(InvalidArgumentError):
        AdaptiveConfig(**bad)


def test_interval_validation():
    with pytest.raises(InvalidArgumentError):
        solve_adaptive(logistic(), (1.0, 1.0), [0.5])
    with pytest.raises(InvalidArgumentError):
        solve_adaptive(logistic(), (0.0, 1.0), [0.5], eta=2.0)


# -- invariants --------------------------------------------------------------

@given(st.floats(1.0, 300.0), st.sampled_from([1e-8, 1e-10, 1e-12]))
def test_every_block_passes_the_tail_test(w, eps):
    sol = solve_adaptive(oscillator(w), (0.0, 1.0), [1.0, 0.0], AdaptiveConfig(eps=eps))
    assert np.all(_tails(sol) <= eps)
    assert np.all(np.diff(sol.partition) > 0)
    assert sol.partition[0] == 0.0 and sol.partition[-1] == 1.0


@given(st.floats(1.0, 300.0))
def test_continuity_across_breakpoints(w):
    eps = 1e-12
    sol = solve_adaptive(oscillator(w), (0.0, 1.0), [1.0, 0.0], AdaptiveConfig(eps=eps))
    scale = np.array([1.0, w])
    for x in sol.partition[1:-1]:
        left = sol(np.nextafter(x, -np.inf))
        right = sol(x)
        assert np.all(np.abs(left - right) <= 10 * eps * scale)


@pytest.mark.parametrize("w", [2.0 ** 4, 2.0 ** 6])
def test_halving_eps_does_not_hurt(w):
    errs = []
    for eps in (1e-6, 5e-7, 1e-8, 5e-9):
        end = solve_adaptive(oscillator(w), (0.0, 1.0), [1.0, 0.0], AdaptiveConfig(eps=eps))(1.0)
        errs.append(abs(end[0] - np.cos(w)))
    assert errs[1] <= errs[0] and errs[3] <= errs[2]
