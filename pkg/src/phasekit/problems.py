"""Test equations, reference solutions and the experiment harness.

Four named problems are available through :func:`make_problem`:

``legendre``
    Legendre's equation in monic form on [0, 0.999], started at 0 from the
    values of P_nu and P_nu' there; checked against the three-term
    recurrence at 0.999.
``third-order``
    A third-order boundary value problem on [-1, 1] with
    y(-1) = y(1) = 1 and y'(-1) = 0.
``third-order-52``
    A third-order initial value problem on [0, 0.1].
``fourth-order``
    A fourth-order initial value problem on [-1, 1] with
    y^(m)(0) = (i omega)^m, coefficients generated from its eigenvalues.

Reference solutions for all but Legendre come from the adaptive solver
applied to the equation written as a first-order system.
"""

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .equation import ScalarODE
from .errors import InvalidArgumentError, PhasekitError
from .levin import LevinConfig
from .linalg import companion_eigs
from .odesolve import AdaptiveConfig, companion_problem, solve_adaptive
from .phase import build_phase_set, frequency_omega, solve_bvp, solve_ivp

__all__ = [
    "ProblemSpec",
    "RunRecord",
    "PROBLEMS",
    "REFERENCE_MAX_PARAM",
    "CSV_COLUMNS",
    "coeffs_from_eigenvalues",
    "legendre_reference",
    "make_problem",
    "reference_solution",
    "run_experiment",
    "sweep",
    "write_records",
]

#: reference solutions are only built up to this parameter value
REFERENCE_MAX_PARAM = 2.0 ** 10
REFERENCE_EPS = 1e-13
CSV_COLUMNS = ("problem", "param", "time_s", "max_abs_err", "ncoefs", "omega_freq")


def coeffs_from_eigenvalues(lams):
    """Coefficient callback whose characteristic polynomial has the given
    roots: ``z^n + sum_j q_j z^j = prod_j (z - lambda_j(t))``.

    ``lams`` is a sequence of vectorized callables.
    """
    n = len(lams)
    if not 1 <= n <= 6:
        raise InvalidArgumentError("supports 1 to 6 eigenvalues")

    def coeffs(t):
        t = np.asarray(t, dtype=float)
        # poly[i] multiplies z^i; start from the constant 1
        poly = [np.ones_like(t, dtype=complex)]
        for lam in lams:
            lv = np.asarray(lam(t), dtype=complex)
            new = [np.zeros_like(poly[0]) for _ in range(len(poly) + 1)]
            for i, c in enumerate(poly):
                new[i + 1] = new[i + 1] + c
                new[i] = new[i] - lv * c
            poly = new
        return np.array(poly[:n])

    return coeffs


def legendre_reference(nu, t):
    """P_nu(t) by the three-term recurrence."""
    return _legendre_pair(nu, t)[0]


def _legendre_pair(nu, t):
    # (P_nu(t), P_{nu-1}(t))
    nu = int(nu)
    if nu < 0:
        raise InvalidArgumentError("degree must be non-negative")
    t = float(t)
    if nu == 0:
        return 1.0, 0.0
    prev, cur = 1.0, t
    for j in range(1, nu):
        prev, cur = cur, ((2 * j + 1) * t * cur - j * prev) / (j + 1)
    return cur, prev


# ---------------------------------------------------------------------------
# problem definitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    order: int
    param: float
    interval: tuple
    coeffs: Callable
    kind: str  # "ivp" or "bvp"
    conditions: tuple  # ivp: (t0, values); bvp: ((t, m, value), ...)
    eigenvalues: tuple = None
    window: tuple = (0.0, 0.1)
    sigma: float = None
    eta: float = 0.0
    eval_points: np.ndarray = field(default=None, repr=False)
    threshold: float = 1e-8

    @property
    def ode(self):
        return ScalarODE(self.order, self.interval, self.coeffs)


def _legendre(nu):
    nu_i = int(round(nu))
    if nu_i != nu or nu_i < 0:
        raise InvalidArgumentError("Legendre degree must be a non-negative integer")
    f = nu_i * (nu_i + 1.0)

    def coeffs(t):
        s = 1.0 - t * t
        return np.array([f / s, -2.0 * t / s])

    p0, pm = _legendre_pair(nu_i, 0.0)
    return ProblemSpec(
        "legendre", 2, float(nu_i), (0.0, 0.999), coeffs, "ivp",
        (0.0, (p0, nu_i * pm)),
        eval_points=np.array([0.999]), threshold=1e-11)


def _third_order(w):
    def q(t):
        et, et2, c12 = np.exp(t), np.exp(t * t), np.cos(12 * t)
        q0 = -1j * et * t * w * (et - 1j * et2 * w) * (c12 + 2)
        q1 = (et2 * w * (2 * w - 1j * et * t) + w * (et2 * w + 1j * et * (t + 1)) * c12
              + et * (et * t + 2j * (t + 1) * w))
        q2 = 1j * et2 * w - 1j * w * c12 - et * (t + 1) - 2j * w
        return np.array([q0, q1, q2])

    lams = (
        lambda t: 1j * w * (np.cos(12 * t) + 2),
        lambda t: t * np.exp(t),
        lambda t: np.exp(t) - 1j * np.exp(t * t) * w,
    )
    return ProblemSpec(
        "third-order", 3, float(w), (-1.0, 1.0), q, "bvp",
        ((-1.0, 0, 1.0), (1.0, 0, 1.0), (-1.0, 1, 0.0)),
        eigenvalues=lams, eval_points=np.linspace(-1.0, 1.0, 10000))


def _third_order_52(w):
    def q(t):
        et, c3, c8, s = np.exp(t), np.cos(3 * t), np.cos(8 * t), t * t + 1
        q0 = -w * (et * w - 1j) * (c8 + 3) * (s * c3 - 1j * w) / s
        q1 = (w * (-(w + 1j * s) * c8 + et * w * (3 * t * t + s * c8 + 4)
                   - 3j * t * t - 3 * w - 4j) / s
              + c3 * (1j * (et - 3) * w - 1j * w * c8 + 1))
        q2 = 1j * (1 / s - et + 3) * w + 1j * w * c8 - c3 - 1
        return np.array([q0, q1, q2])

    lams = (
        lambda t: 1 + 1j * np.exp(t) * w,
        lambda t: np.cos(3 * t) - 1j * w / (t * t + 1),
        lambda t: -1j * w * (np.cos(8 * t) + 3),
    )
    iw = 1j * w
    return ProblemSpec(
        "third-order-52", 3, float(w), (0.0, 0.1), q, "ivp",
        (0.0, (1.0, iw, iw ** 2)),
        eigenvalues=lams, window=(0.0, 0.1), eval_points=np.linspace(0.0, 0.1, 10000))


def _fourth_order(w):
    lams = (
        lambda t: t / 2 + 1j * np.exp(t * t) * w,
        lambda t: 1j * w / (t * t + 2) + np.exp(1j * t),
        lambda t: np.cos(3 * t) + 0j * t,
        lambda t: -1j * (t * t + 1) * w,
    )
    iw = 1j * w
    return ProblemSpec(
        "fourth-order", 4, float(w), (-1.0, 1.0), coeffs_from_eigenvalues(lams), "ivp",
        (0.0, (1.0, iw, iw ** 2, iw ** 3)),
        eigenvalues=lams, eval_points=np.linspace(-1.0, 1.0, 10000))


PROBLEMS = {
    "legendre": _legendre,
    "third-order": _third_order,
    "third-order-52": _third_order_52,
    "fourth-order": _fourth_order,
}


def make_problem(name, param, window=None, sigma=None):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    spec = factory(param)
    if window is not None or sigma is not None:
        spec = ProblemSpec(**{**_fields(spec),
                              "window": spec.window if window is None else tuple(window),
                              "sigma": sigma})
    return spec


def _fields(spec):
    return {f: getattr(spec, f) for f in spec.__dataclass_fields__}


# ---------------------------------------------------------------------------
# solving and references
# ---------------------------------------------------------------------------

def solve_problem(spec, k=16, eps=1e-12, adaptive=None):
    """Build the phase functions and solve the conditions of ``spec``.

    ``adaptive`` overrides the stage-2 solver settings (``k`` and ``eps``
    are then ignored there).
    """
    adaptive = adaptive or AdaptiveConfig(k=k, eps=eps)
    ps = build_phase_set(spec.ode, LevinConfig(spec.window, spec.sigma, k=k),
                         eta=spec.eta, adaptive=adaptive)
    if spec.kind == "ivp":
        t0, values = spec.conditions
        return solve_ivp(ps, t0, values)
    return solve_bvp(ps, spec.conditions)


def reference_solution(spec, points=None, eps=REFERENCE_EPS):
    """Oracle values of the solution at ``points`` (default: the spec's
    evaluation grid)."""
    points = spec.eval_points if points is None else np.asarray(points, dtype=float)
    if spec.name == "legendre":
        return np.array([legendre_reference(int(spec.param), t) for t in points], dtype=complex)
    n = spec.order
    ode = spec.ode
    scale = _spectral_scale(ode)
    powers = scale ** np.arange(n)
    problem = companion_problem(ode, scale)
    cfg = AdaptiveConfig(eps=eps)
    if spec.kind == "ivp":
        t0, values = spec.conditions
        z0 = np.asarray(values, dtype=complex) / powers
        sol = solve_adaptive(problem, spec.interval, z0, cfg, eta=t0)
        return sol(points)[..., 0]
    # boundary value problem: one solve per unit initial vector at the left end
    a = spec.interval[0]
    sols = [solve_adaptive(problem, spec.interval, e, cfg, eta=a)
            for e in np.eye(n, dtype=complex)]
    M = np.empty((n, n), dtype=complex)
    rhs = np.empty(n, dtype=complex)
    for row, (t, m, v) in enumerate(spec.conditions):
        M[row] = [sol(t)[m] * powers[m] for sol in sols]
        rhs[row] = v
    c = np.linalg.solve(M, rhs)
    return sum(c[j] * sols[j](points)[:, 0] for j in range(n))


def _spectral_scale(ode, samples=65):
    t = np.linspace(ode.a, ode.b, samples)
    return max(1.0, float(np.abs(companion_eigs(ode.q(t).T)).max()))


@dataclass
class RunRecord:
    problem: str
    param: float
    time_s: float
    max_abs_err: float
    ncoefs: int
    omega_freq: float
    passed: bool = True
    diagnostic: str = ""

    def row(self):
        return [self.problem, repr(self.param), repr(self.time_s), repr(self.max_abs_err),
                str(self.ncoefs), repr(self.omega_freq)]


def run_experiment(spec, repeats=25, k=16, eps=1e-12, reference=None, adaptive=None):
    """Time phase construction plus solve (averaged), then check the error.

    ``reference`` defaults to the recurrence for Legendre and otherwise to a
    reference solve when ``spec.param`` is at most :data:`REFERENCE_MAX_PARAM`
    (beyond that the error is reported as NaN).  Pass precomputed oracle
    values to reuse them.
    """
    if int(repeats) != repeats or repeats < 1:
        raise InvalidArgumentError("repeats must be a positive integer")
    omega = frequency_omega(spec.ode)
    try:
        t0 = time.perf_counter()
        for _ in range(int(repeats)):
            rep = solve_problem(spec, k, eps, adaptive)
        elapsed = (time.perf_counter() - t0) / repeats
    except PhasekitError as exc:
        return RunRecord(spec.name, spec.param, math.nan, math.nan, 0, omega, False,
                         f"{type(exc).__name__}: {exc}")

    err = math.nan
    passed = True
    diag = ""
    if reference is None and (spec.name == "legendre" or spec.param <= REFERENCE_MAX_PARAM):
        reference = reference_solution(spec)
    if reference is not None:
        err = float(np.max(np.abs(rep(spec.eval_points) - reference)))
        passed = bool(err <= spec.threshold)
        if not passed:
            diag = f"error {err:.3e} above threshold {spec.threshold:.1e}"
    return RunRecord(spec.name, spec.param, elapsed, err, rep.ncoeffs, omega, passed, diag)


def write_records(records, csv_path=None, json_path=None):
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow(r.row())
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump([asdict(r) for r in records], fh, indent=2, allow_nan=True)


def sweep(name, params, repeats=25, k=16, eps=1e-12, window=None, sigma=None,
          csv_path=None, json_path=None):
    """Run one problem family over ``params``; returns the records."""
    records = [run_experiment(make_problem(name, p, window, sigma), repeats, k, eps)
               for p in params]
    write_records(records, csv_path, json_path)
    return records
