import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from spinrod.radau import (DAESystem, NewtonError, NewtonOptions, RadauIntegrator, banded_fd_jacobian,
                           dae_step, fd_jacobian, newton_solve, radau_tableau)


@pytest.mark.parametrize("s", [1, 2])
def test_tableau_structure(s):
    tab = radau_tableau(s)
    np.testing.assert_allclose(tab.A.sum(axis=1), tab.c, atol=1e-15)
    assert tab.stiffly_accurate()
    e_s = np.zeros(s)
    e_s[-1] = 1
    np.testing.assert_allclose(tab.algebraic_weights(), e_s, atol=1e-13)


def test_tableau_values():
    assert radau_tableau(1).b.tolist() == [1.0]
    tab = radau_tableau(2)
    assert tab.A[1, 0] == 0.75 and tab.A[1, 1] == 0.25
    assert tab.c.tolist() == [1 / 3, 1.0]


def test_tableau_unsupported():
    with pytest.raises(ValueError):
        radau_tableau(3)


def _decay(lam=1.0):
    return DAESystem(z=lambda y: y, rhs=lambda y, t: -lam * y, algebraic=np.array([False]), coupling=1)


def test_scalar_decay_implicit_euler():
    r = dae_step(_decay(), np.array([[1.0]]), 0.0, 0.1, 1)
    assert r.phi[0, 0] == pytest.approx(1 / 1.1, abs=1e-14)


def test_scalar_decay_radau2_stability_function():
    z = -0.1
    exact_R = (1 + z / 3) / (1 - 2 * z / 3 + z**2 / 6)
    assert exact_R == pytest.approx(0.9048361934477379, abs=1e-15)
    r = dae_step(_decay(), np.array([[1.0]]), 0.0, 0.1, 2)
    assert r.phi[0, 0] == pytest.approx(exact_R, abs=1e-12)


@pytest.mark.parametrize("s,order", [(1, 1), (2, 3)])
def test_order_on_linear_decay(s, order):
    errs = []
    for n in (10, 20, 40):
        integ = RadauIntegrator(s, NewtonOptions(tol=1e-14))
        y = np.array([[1.0]])
        for k in range(n):
            y = integ.step(_decay(), y, k / n, 1.0 / n).phi
        errs.append(abs(y[0, 0] - math.exp(-1)))
    slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(abs(sl - order) < 0.15 for sl in slopes)


def _toy_dae(g):
    # y' = lam, 0 = y - g(t);  phi columns: (lam, y)
    return DAESystem(z=lambda p: np.column_stack([np.zeros(len(p)), p[:, 1]]),
                     rhs=lambda p, t: np.column_stack([p[:, 1] - g(t), p[:, 0]]),
                     algebraic=np.array([True, False]))


@pytest.mark.parametrize("dt", [0.1, 0.37])
def test_index2_toy_dae_implicit_euler(dt):
    g = lambda t: np.sin(t) + 2.0
    y0 = 2.0
    r = dae_step(_toy_dae(g), np.array([[0.0, y0]]), 0.0, dt, 1)
    assert r.phi[0, 1] == pytest.approx(g(dt), abs=1e-12)
    assert r.phi[0, 0] == pytest.approx((g(dt) - y0) / dt, abs=1e-9)


def test_newton_quadratic():
    r = newton_solve(lambda x: x**2 - 4, np.array([3.0]))
    assert r.x[0] == pytest.approx(2.0, abs=1e-10)


def test_newton_linear_one_iteration():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    b = np.array([1.0, -1.0])
    r = newton_solve(lambda x: A @ x - b, np.zeros(2), jac=lambda x, f: A)
    assert r.iterations == 1
    np.testing.assert_allclose(A @ r.x, b, atol=1e-12)


def test_newton_damping_engages():
    # full Newton steps from x0 = 2 overshoot on arctan; damping must rescue it
    x0 = 2.0
    full = x0 - np.arctan(x0) * (1 + x0**2)
    assert abs(np.arctan(full)) > abs(np.arctan(x0))
    r = newton_solve(lambda x: np.arctan(x), np.array([x0]), NewtonOptions(reuse_jacobian=False))
    assert abs(r.x[0]) < 1e-10
    assert all(b < a for a, b in zip(r.trace, r.trace[1:]))


def test_newton_degenerate_root_reports_failure():
    with pytest.raises(NewtonError) as info:
        newton_solve(lambda x: x**3, np.array([5.0]), NewtonOptions(tol=1e-30, max_iterations=5))
    err = info.value
    assert err.x_best is not None and np.isfinite(err.residual_norm)
    assert len(err.trace) >= 2


def test_newton_singular_jacobian():
    with pytest.raises(NewtonError):
        newton_solve(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([0.0]),
                     jac=lambda x, f: np.zeros((1, 1)))


def test_newton_options_validation():
    with pytest.raises(ValueError):
        NewtonOptions(tol=0)
    with pytest.raises(ValueError):
        NewtonOptions(max_iterations=0)


@settings(deadline=None, max_examples=20)
@given(st.integers(1, 9), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_banded_jacobian_matches_dense(n, m, seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(3, m, m))

    def rhs(phi, t):
        out = np.sin(phi) @ W[1].T
        out[1:] += phi[:-1] ** 2 @ W[0].T
        out[:-1] += np.cos(phi[1:]) @ W[2].T
        return out

    phi = rng.normal(size=(n, m))
    J = banded_fd_jacobian(rhs, phi, 0.0, rhs(phi, 0.0), 1)
    D = fd_jacobian(lambda y: rhs(y.reshape(n, m), 0.0).ravel(), phi.ravel())
    assert sp.issparse(J)
    np.testing.assert_allclose(J.toarray(), D, atol=1e-6)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        RadauIntegrator(2).step(_decay(), np.array([[1.0]]), 0.0, 0.0)


def test_stage_values_returned():
    r = RadauIntegrator(2).step(_decay(), np.array([[1.0]]), 0.0, 0.1)
    assert r.stages.shape == (2, 1, 1)
    np.testing.assert_array_equal(r.stages[-1], r.phi)
    assert r.update_discrepancy < 1e-12
