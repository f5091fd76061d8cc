import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spinrod import DimensionlessParams, Grid
from spinrod.assembly import initial_field
from spinrod.verify import (ConvergenceTable, arclength, fitted_order, l2_error, observed_order,
                            polyline_distance, project_planar, steady_residual)
from spinrod.rotation import quat_from_angle


def test_l2_two_cells():
    f = np.array([[0.3], [0.4]])
    assert l2_error(f, np.zeros_like(f), 0.5) == pytest.approx(math.sqrt(0.5 * 0.25))
    assert l2_error(f, np.zeros_like(f), 0.5) == pytest.approx(0.3535533905932738)


def test_l2_identical_is_zero():
    f = np.random.default_rng(0).normal(size=(4, 3))
    assert l2_error(f, f, 0.1) == 0.0


def test_l2_shape_mismatch():
    with pytest.raises(ValueError):
        l2_error(np.zeros((3, 2)), np.zeros((2, 2)), 0.1)


@settings(max_examples=50)
@given(arrays(float, (5, 4), elements=st.floats(-10, 10)), st.floats(0.01, 1.0),
       arrays(bool, 4))
def test_l2_homogeneity_and_partition(err, delta, mask):
    ref = np.zeros_like(err)
    assert l2_error(2 * err, ref, delta) == pytest.approx(2 * l2_error(err, ref, delta), rel=1e-12, abs=1e-300)
    full = l2_error(err, ref, delta)
    a = l2_error(err, ref, delta, mask)
    b = l2_error(err, ref, delta, ~mask)
    assert full**2 == pytest.approx(a**2 + b**2, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("e1,e2,order", [(0.1, 0.0125, 3.0), (0.3, 0.3, 0.0), (0.2, 0.1, 1.0)])
def test_observed_order(e1, e2, order):
    assert observed_order(e1, e2) == pytest.approx(order)


def test_fitted_order_exact_power_law():
    h = np.array([0.1, 0.05, 0.025])
    assert fitted_order(h, 3 * h**2) == pytest.approx(2.0)


def test_table_csv_and_monotonicity():
    t = ConvergenceTable()
    t.add(0.1, 1e-2, 1e-1)
    t.add(0.05, 2.5e-3, 5e-2)
    with pytest.raises(ValueError):
        t.add(0.05, 1e-3, 1e-3)
    lines = t.to_csv().splitlines()
    assert lines[0] == "step,err_diff,err_alg,order_diff,order_alg"
    assert lines[1].endswith(",,")
    assert float(lines[2].split(",")[3]) == pytest.approx(2.0)
    assert float(lines[2].split(",")[4]) == pytest.approx(1.0)


def test_steady_residual_fixed_point_and_perturbation():
    p = DimensionlessParams(Re=1.0)
    g = Grid.eulerian(p, 20)
    f = initial_field(g, p)
    assert steady_residual(f, g, p) < 1e-12
    f[5, 7] += 1e-3
    assert steady_residual(f, g, p) > 0


def test_project_planar_roundtrip():
    p3 = DimensionlessParams(Re=1, dim=3)
    phi = np.zeros(20)
    phi[[1, 2, 4, 5]] = [0.2, 1.1, 1.5, -0.3]
    phi[6:10] = quat_from_angle(-0.4)
    phi[10], phi[13], phi[15], phi[16], phi[17] = 0.7, 0.9, 0.1, 1.2, -0.5
    np.testing.assert_allclose(project_planar(phi, p3),
                               [0.2, 1.1, 1.5, -0.3, -0.4, 0.7, 0.9, 0.1, 1.2, -0.5], atol=1e-14)
    with pytest.raises(ValueError):
        project_planar(phi, p3.replace(dim=2))


def test_polyline_helpers():
    line = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(arclength(line), [0, 1, 2])
    d = polyline_distance(np.array([[0.5, 0.2], [2.0, 0.5], [1.0, 1.0]]), line)
    np.testing.assert_allclose(d, [0.2, 1.0, 0.0])
