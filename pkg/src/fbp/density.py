"""Density ``rho = e^t int_{L_t}^x v`` and the checks it must pass.

Also home to the two initial data used throughout: the quartic bump
:func:`make_initial_datum` and the truncated critical traveling wave
:func:`wave_datum`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .halfline import (
    BOUNDARY_SNAP,
    InitialDatum,
    evaluate_v,
    single_layer_potential,
)
from .kernels import panel_rule, tail_convolve_initial

SQRT2 = math.sqrt(2.0)
DEFAULT_WIDTH = math.sqrt(10.0)

#: spatial panels for integrals over [L_t, x_max]
N_PANELS = 64
#: nodes of a density snapshot
N_SNAPSHOT = 512


# ---------------------------------------------------------------------------
# initial data


def make_initial_datum(b, s=DEFAULT_WIDTH):
    """Quartic datum ``rho0(x) = 2u (1 - u/s)^3`` with ``u = x - b`` on ``[0, s]``.

    Its mass is ``s^2/10``, hence one for the default ``s = sqrt(10)``.  The
    triple zero at ``u = s`` keeps ``rho0``, ``h`` and ``h_xi`` continuous
    there.
    """

    def unit(x):
        r = (np.asarray(x, dtype=float) - b) / s
        return r, (r >= 0) & (r <= 1)

    def rho0(x):
        r, inside = unit(x)
        return np.where(inside, 2 * s * r * (1 - r) ** 3, 0.0)

    def h(x):
        r, inside = unit(x)
        return np.where(inside, 2 * (1 - r) ** 2 * (1 - 4 * r), 0.0)

    def h_xi(x):
        r, inside = unit(x)
        return np.where(inside, -12 * (1 - r) * (1 - 2 * r) / s, 0.0)

    return InitialDatum(b, s, rho0, h, h_xi, name="quartic")


@dataclass(frozen=True)
class TravelingWave:
    """Profile ``w(u)`` with ``w/2'' + c w' + w = 0``, ``w(0) = 0``, ``w'(0) = 2``.

    For ``c > sqrt(2)``: ``w = amplitude (e^{lam1 u} - e^{lam2 u})``;
    for ``c = sqrt(2)``: ``w = 2 u e^{-sqrt(2) u}`` (``lam1 == lam2``).
    """

    c: float
    lam1: float
    lam2: float
    amplitude: float

    @property
    def critical(self):
        return self.lam1 == self.lam2

    def derivative(self, u, order=0):
        u = np.asarray(u, dtype=float)
        if self.critical:
            lam = self.lam1
            e = np.exp(lam * u)
            # d^n/du^n (u e^{lam u}) = (lam^n u + n lam^{n-1}) e^{lam u}
            poly = lam**order * u + (order * lam ** (order - 1) if order else 0.0)
            return self.amplitude * poly * e
        return self.amplitude * (
            self.lam1**order * np.exp(self.lam1 * u) - self.lam2**order * np.exp(self.lam2 * u)
        )

    def __call__(self, u):
        return self.derivative(u, 0)

    def mass_beyond(self, U):
        """``int_U^inf w``."""
        if self.critical:
            lam = self.lam1
            return self.amplitude * math.exp(lam * U) * (-U / lam + 1 / lam**2)
        return self.amplitude * (-math.exp(self.lam1 * U) / self.lam1 + math.exp(self.lam2 * U) / self.lam2)

    def density(self, x, t, b):
        """``rho(x, t) = w(x - b - c t)`` on ``x >= b + c t``."""
        u = np.asarray(x, dtype=float) - b - self.c * t
        return np.where(u >= 0, self(u), 0.0)

    def v(self, x, t, b):
        """``v = e^{-t} rho_x``."""
        u = np.asarray(x, dtype=float) - b - self.c * t
        return math.exp(-t) * np.where(u >= 0, self.derivative(u, 1), 0.0)


def traveling_wave(c=SQRT2):
    """Closed-form wave of speed ``c``; speeds below ``sqrt(2)`` oscillate."""
    if c < SQRT2 * (1 - 1e-14):
        raise DomainError(f"wave speed {c} is below sqrt(2); the profile changes sign")
    disc = c * c - 2.0
    if disc <= 4e-14 * c * c:
        return TravelingWave(SQRT2, -SQRT2, -SQRT2, 2.0)
    root = math.sqrt(disc)
    lam1, lam2 = -c + root, -c - root
    return TravelingWave(float(c), lam1, lam2, 2.0 / (lam1 - lam2))


def wave_datum(b, c=SQRT2, tail_mass=1e-11):
    """Initial datum ``w(x - b)`` cut where the discarded mass drops below ``tail_mass``.

    No renormalisation is applied so that ``h(b) = 2`` holds exactly.
    """
    wave = traveling_wave(c)
    decay = -max(wave.lam1, wave.lam2)
    U = brentq(lambda u: wave.mass_beyond(u) - tail_mass, 1.0 / decay, 200.0 / decay)

    def cut(func):
        def inner(x):
            u = np.asarray(x, dtype=float) - b
            return np.where((u >= 0) & (u <= U), func(np.clip(u, 0.0, U)), 0.0)

        return inner

    return InitialDatum(
        b,
        U,
        cut(wave),
        cut(lambda u: wave.derivative(u, 1)),
        cut(lambda u: wave.derivative(u, 2)),
        name=f"wave(c={c:.17g})",
    )


# ---------------------------------------------------------------------------
# reconstruction and diagnostics


def x_max(field):
    """Right end of the integration range, ``b + support + 8 sqrt(T)``."""
    datum = field.datum
    return datum.b + datum.support_width + 8.0 * math.sqrt(field.grid.T)


def _check_time(field, t):
    if not 0 < t <= field.grid.T * (1 + 1e-12):
        raise DomainError(f"t = {t} outside (0, {field.grid.T}]")


def clustered_breaks(left, right, n_panels=N_PANELS):
    """Break points ``left + (right - left) (k/n)^2``, dense near ``left``."""
    return left + (right - left) * np.linspace(0.0, 1.0, n_panels + 1) ** 2


def _spatial_rule(field, t, n_panels=N_PANELS, order=8):
    Lt = float(field.curve(t))
    return Lt, panel_rule(clustered_breaks(Lt, x_max(field), n_panels), order)


def reconstruct_rho(field, x, t):
    """``rho(x, t) = e^t int_{L_t}^x v(y, t) dy`` by panel quadrature of ``v``."""
    _check_time(field, t)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    Lt = float(field.curve(t))
    if np.any(x_arr < Lt - BOUNDARY_SNAP):
        raise DomainError(f"x lies left of the boundary L_t = {Lt}")
    x_arr = np.maximum(x_arr, Lt)
    top = float(x_arr.max())
    base = clustered_breaks(Lt, max(top, Lt + 1e-12), N_PANELS)
    breaks = np.unique(np.concatenate([base, x_arr]))
    nodes, weights = panel_rule(breaks, 8)
    pieces = (weights * evaluate_v(field, nodes, t)).reshape(-1, 8).sum(axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    out = math.exp(t) * cumulative[np.searchsorted(breaks, x_arr)]
    return out if np.ndim(x) else float(out[0])


def rho_direct(field, x, t):
    """``rho = e^t [int G phi dtau - int h(xi) Psi((x - xi)/sqrt(t)) dxi]``.

    An independent route to :func:`reconstruct_rho`, valid when
    ``int_{L_t}^inf v = 0`` (i.e. at a free boundary).
    """
    _check_time(field, t)
    datum = field.datum
    layer = single_layer_potential(field.phi, field.curve, x, t)
    tail = tail_convolve_initial(datum.h, x, t, datum.support)
    return math.exp(t) * (layer - tail)


def v_mass(field, t):
    """``int_{L_t}^{x_max} v(x, t) dx``; zero at a free boundary."""
    _check_time(field, t)
    _, (nodes, weights) = _spatial_rule(field, t)
    return float(weights @ evaluate_v(field, nodes, t))


def mass(field, t, with_tail=False):
    """``int_{L_t}^{x_max} rho(x, t) dx`` computed as ``e^t int (x_max - y) v(y) dy``.

    With ``with_tail`` also returns a tail estimate ``|rho(x_max)| sqrt(t)``.
    """
    _check_time(field, t)
    top = x_max(field)
    _, (nodes, weights) = _spatial_rule(field, t)
    v = evaluate_v(field, nodes, t)
    total = math.exp(t) * float(weights @ ((top - nodes) * v))
    if with_tail:
        return total, abs(math.exp(t) * float(weights @ v)) * math.sqrt(t)
    return total


def _eps0(field, eps0=None):
    """Base step ``(x_max - b)/2048`` unless overridden."""
    return (x_max(field) - field.datum.b) / 2048.0 if eps0 is None else float(eps0)


def _richardson(values):
    """Extrapolate ``f(4e), f(2e), f(e)`` assuming ``f = f0 + a e + b e^2``."""
    f4, f2, f1 = values
    return (8.0 * f1 - 6.0 * f2 + f4) / 3.0


def boundary_trace(field, t, eps0=None):
    """Extrapolated one-sided limit ``v(L_t+, t)``."""
    _check_time(field, t)
    eps = _eps0(field, eps0) * np.array([4.0, 2.0, 1.0])
    return _richardson(evaluate_v(field, float(field.curve(t)) + eps, t))


def boundary_slope(field, t, eps0=None):
    """Extrapolated ``rho_x(L_t, t)`` from ``rho(L_t + e)/e``."""
    _check_time(field, t)
    eps = _eps0(field, eps0) * np.array([4.0, 2.0, 1.0])
    rho = reconstruct_rho(field, float(field.curve(t)) + eps, t)
    return _richardson(rho / eps)


def boundary_curvature(field, t, eps0=None):
    """Extrapolated ``rho_xx(L_t, t)`` from one-sided second differences."""
    _check_time(field, t)
    e = _eps0(field, eps0)
    Lt = float(field.curve(t))
    steps = np.array([4.0, 2.0, 1.0]) * e
    rho = reconstruct_rho(field, Lt + np.concatenate([steps, 2 * steps]), t)
    first, second = rho[:3], rho[3:]
    return _richardson((second - 2.0 * first) / steps**2)


def boundary_velocity(curve, t):
    """Centred difference of ``L`` at ``t`` over the neighbouring grid spacing."""
    nodes = curve.grid.nodes
    i = int(np.clip(np.searchsorted(nodes, t), 1, nodes.size - 2))
    if np.isclose(nodes[i], t, rtol=0, atol=1e-14):
        lo, hi = nodes[i - 1], nodes[i + 1]
    else:
        step = nodes[i] - nodes[i - 1]
        lo, hi = max(t - step, 0.0), min(t + step, nodes[-1])
    return float((curve(hi) - curve(lo)) / (hi - lo))


def stefan_velocity_check(field, t, eps0=None):
    """``(Ldot, -rho_xx(L_t)/4)``; equal at a free boundary."""
    _check_time(field, t)
    if not 0 < t < field.grid.T:
        raise DomainError("the velocity check needs an interior time")
    return boundary_velocity(field.curve, t), -0.25 * boundary_curvature(field, t, eps0)


@dataclass(frozen=True)
class DensitySnapshot:
    t: float
    x_nodes: np.ndarray
    rho_values: np.ndarray
    v_values: np.ndarray
    mass: float
    boundary_slope: float
    boundary_curvature: float

    @property
    def min_rho(self):
        return float(self.rho_values.min())

    def cdf(self, x):
        """``int_{L_t}^x rho`` from the tabulated snapshot (trapezoid)."""
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * np.diff(self.x_nodes) * (self.rho_values[1:] + self.rho_values[:-1]))]
        )
        return np.interp(x, self.x_nodes, cum, left=0.0, right=cum[-1])


def snapshot(field, t, n_nodes=N_SNAPSHOT):
    """Density on ``n_nodes`` points of ``[L_t, x_max]`` clustered at the boundary."""
    _check_time(field, t)
    Lt = float(field.curve(t))
    x_nodes = clustered_breaks(Lt, x_max(field), n_nodes - 1)
    nodes, weights = panel_rule(x_nodes, 4)
    v_all = evaluate_v(field, np.concatenate([x_nodes, nodes]), t)
    v_nodes, v_q = v_all[: x_nodes.size], v_all[x_nodes.size :]
    pieces = (weights * v_q).reshape(-1, 4).sum(axis=1)
    rho = math.exp(t) * np.concatenate([[0.0], np.cumsum(pieces)])
    return DensitySnapshot(
        t=float(t),
        x_nodes=x_nodes,
        rho_values=rho,
        v_values=v_nodes,
        mass=mass(field, t),
        boundary_slope=boundary_slope(field, t),
        boundary_curvature=boundary_curvature(field, t),
    )
