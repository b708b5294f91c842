import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fbp.errors import DomainError
from fbp.kernels import (
    SpaceTimePoint,
    convolve_initial,
    heat_kernel,
    heat_kernel_dx,
    normal_tail,
    panel_rule,
    tail_convolve_initial,
)

coord = st.floats(-5, 5)
lag = st.floats(1e-3, 4.0)


@given(coord, coord, lag)
def test_kernel_symmetric_in_space(x, xi, s):
    assert heat_kernel(x, s, xi, 0.0) == pytest.approx(heat_kernel(xi, s, x, 0.0), rel=1e-14)


@given(coord, coord, lag)
def test_dx_matches_central_difference(x, xi, s):
    step = 1e-6 * max(1.0, math.sqrt(s))
    fd = (heat_kernel(x + step, s, xi, 0.0) - heat_kernel(x - step, s, xi, 0.0)) / (2 * step)
    assert heat_kernel_dx(x, s, xi, 0.0) == pytest.approx(fd, rel=1e-5, abs=1e-7)


@settings(max_examples=40)
@given(coord, coord, st.floats(0.05, 2.0))
def test_heat_equation_residual(x, xi, t):
    d = 1e-4
    g_t = (heat_kernel(x, t + d, xi, 0.0) - heat_kernel(x, t - d, xi, 0.0)) / (2 * d)
    g_xx = (heat_kernel(x + d, t, xi, 0.0) - 2 * heat_kernel(x, t, xi, 0.0) + heat_kernel(x - d, t, xi, 0.0)) / d**2
    assert g_t - 0.5 * g_xx == pytest.approx(0.0, abs=1e-5 / t**1.5)


@pytest.mark.parametrize("t", [1e-3, 0.1, 3.0])
def test_unit_mass(t):
    total, _ = integrate.quad(lambda y: heat_kernel(y, t, 0.3, 0.0), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_semigroup():
    # int G(x, t; y, s) G(y, s; xi, 0) dy = G(x, t; xi, 0)
    x, t, s, xi = 0.4, 0.7, 0.3, -0.2
    lhs, _ = integrate.quad(lambda y: heat_kernel(x, t, y, s) * heat_kernel(y, s, xi, 0.0), -np.inf, np.inf)
    assert lhs == pytest.approx(heat_kernel(x, t, xi, 0.0), rel=1e-10)


def test_diagonal_rejected():
    with pytest.raises(DomainError):
        heat_kernel(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        heat_kernel_dx(0.0, 0.5, 0.0, 1.0)


def test_space_time_point_validates():
    SpaceTimePoint(0.0, 0.0)
    with pytest.raises(DomainError):
        SpaceTimePoint(0.0, -1e-3)


def test_normal_tail_oracle():
    # quadrature of the normal density as an independent reference
    ref, _ = integrate.quad(lambda z: math.exp(-z * z / 2) / math.sqrt(2 * math.pi), 1.959964, np.inf)
    assert normal_tail(1.959964) == pytest.approx(ref, rel=1e-10)
    assert normal_tail(1.959964) == pytest.approx(0.025, abs=1e-8)
    assert normal_tail(0.0) == 0.5
    # relative accuracy in the far tail
    assert normal_tail(30.0) > 0


def test_panel_rule_exact_for_polynomials():
    x, w = panel_rule(np.linspace(0.0, 2.0, 5), order=4)
    assert w @ x**7 == pytest.approx(2.0**8 / 8, rel=1e-13)


def test_convolve_initial_against_quad():
    h = lambda xi: np.where((xi >= 1) & (xi <= 2), np.sin(3 * xi), 0.0)  # noqa: E731
    x, t = 1.3, 0.05
    ref, _ = integrate.quad(lambda xi: math.sin(3 * xi) * heat_kernel(x, t, xi, 0.0), 1, 2, epsabs=1e-13)
    assert convolve_initial(h, x, t, support=(1.0, 2.0)) == pytest.approx(ref, abs=1e-12)
    # arrays in, arrays out
    out = convolve_initial(h, np.array([1.3, 1.5]), t, support=(1.0, 2.0))
    assert out.shape == (2,)


def test_convolve_far_from_support_is_zero():
    h = lambda xi: np.ones_like(xi)  # noqa: E731
    assert convolve_initial(h, 50.0, 0.01, support=(0.0, 1.0)) == 0.0


def test_tail_convolve_against_quad():
    f = lambda xi: np.cos(xi)  # noqa: E731
    x, t = 1.2, 0.2
    ref, _ = integrate.quad(lambda xi: math.cos(xi) * float(normal_tail((x - xi) / math.sqrt(t))), 1.0, 4.0, epsabs=1e-13)
    assert tail_convolve_initial(f, x, t, (1.0, 4.0)) == pytest.approx(ref, abs=1e-11)
