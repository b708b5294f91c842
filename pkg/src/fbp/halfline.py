"""Heat equation on the moving half-line ``x > L_t`` for a prescribed curve.

For a boundary curve ``L`` and initial datum ``h`` the field

    v(x, t) = int h(xi) G(x, t; xi, 0) dxi + int_0^t G_x(x, t; L_tau, tau) phi(tau) dtau

solves ``v_t = v_xx / 2`` with ``v(x, 0) = h`` and, through the jump relation,
``v(L_t, t) = g(t) := source * exp(-t)`` once ``phi`` solves the Volterra
equation in :func:`boundary_density`.  The boundary gradient
``q(t) = v_x(L_t, t)`` solves a second Volterra equation
(:func:`boundary_gradient`) that does not need ``phi``.

Time integrals at off-grid points use the substitution ``tau = t - s^2``,
which turns the near-singular layer kernels into smooth functions of ``s``;
the last grid interval is split geometrically towards ``s = 0``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import CurveClassError, DomainError
from .kernels import (
    INV_SQRT_2PI,
    convolve_initial,
    gauss_legendre,
    panel_rule,
)
from .volterra import GridFunction, SingularKernel, TimeGrid, abel_weights, solve_weakly_singular

#: default strength of the boundary source, v(L_t, t) = 2 exp(-t)
SOURCE = 2.0

#: points closer than this to the boundary are evaluated as boundary limits
BOUNDARY_SNAP = 1e-9

_FULL_ORDER = 6
_GEOM_ORDER = 8
_S_FLOOR = 1e-11


@dataclass(frozen=True)
class InitialDatum:
    """Initial density ``rho0`` on ``[b, b + s]`` and its derivative ``h``.

    ``h_xi`` is the derivative of ``h``; when omitted it is replaced by a
    centred difference with step ``fd_step``.  Set ``check=False`` for
    degenerate test data (for example ``h = 0``) that intentionally break the
    usual constraints.
    """

    b: float
    support_width: float
    rho0: Callable
    h: Callable
    h_xi: Callable = None
    name: str = "custom"
    check: bool = True
    fd_step: float = 1e-5

    def __post_init__(self):
        if not self.support_width > 0:
            raise DomainError("support width must be positive")
        if self.h_xi is None:
            step = self.fd_step
            h = self.h
            object.__setattr__(
                self, "h_xi", lambda x: (h(x + step) - h(x - step)) / (2.0 * step)
            )
        if self.check:
            self.validate()

    @property
    def support(self):
        return (float(self.b), float(self.b + self.support_width))

    def validate(self, mass_tol=1e-10):
        b, end = self.support
        if abs(float(self.rho0(np.array([b]))[0])) > 1e-10:
            raise DomainError("rho0(b) must vanish")
        if abs(float(self.h(np.array([b]))[0]) - 2.0) > 1e-8:
            raise DomainError("h(b) = rho0'(b) must equal 2")
        probe = np.linspace(b, end, 2001)
        if np.any(self.rho0(probe) < -1e-12):
            raise DomainError("rho0 must be non-negative on its support")
        beyond = end + np.linspace(0.0, 1.0, 11) + 1e-9
        if np.any(self.rho0(beyond) != 0) or np.any(self.h(beyond) != 0):
            raise DomainError("rho0 and h must vanish beyond the support")
        total = self.mass()
        if abs(total - 1.0) > mass_tol:
            raise DomainError(f"initial mass is {total!r}, expected 1")

    def mass(self):
        b, end = self.support
        x, w = panel_rule(np.linspace(b, end, 257), 10)
        return float(w @ self.rho0(x))

    def sup_h_xi(self, n=20001):
        b, end = self.support
        return float(np.max(np.abs(self.h_xi(np.linspace(b, end, n)))))

    def sup_h(self, n=20001):
        b, end = self.support
        return float(np.max(np.abs(self.h(np.linspace(b, end, n)))))

    @classmethod
    def zero(cls, b):
        """``rho0 = h = 0``: only meaningful with the boundary source switched off."""
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return cls(b, 1.0, zero, zero, zero, name="zero", check=False)


@dataclass(frozen=True)
class BoundaryCurve:
    """Piecewise-linear curve on a time grid with Lipschitz budget ``A``."""

    grid: TimeGrid
    values: np.ndarray
    lipschitz_budget: float = math.inf

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DomainError("curve values do not match the grid")
        if not np.all(np.isfinite(values)):
            raise DomainError("curve has non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid, b, lipschitz_budget=math.inf):
        return cls(grid, np.full(len(grid), float(b)), lipschitz_budget)

    @classmethod
    def from_function(cls, grid, func, lipschitz_budget=math.inf):
        return cls(grid, func(grid.nodes), lipschitz_budget)

    @property
    def b(self):
        return float(self.values[0])

    @property
    def T(self):
        return self.grid.T

    def __call__(self, t):
        return np.interp(t, self.grid.nodes, self.values)

    def slopes(self):
        return np.diff(self.values) / np.diff(self.grid.nodes)

    def slope_at(self, t):
        """Slope of the segment containing ``t`` (left-continuous at nodes)."""
        idx = np.searchsorted(self.grid.nodes, t, side="left") - 1
        idx = np.clip(idx, 0, self.grid.M - 1)
        return self.slopes()[idx]

    def seminorm(self):
        return float(np.max(np.abs(self.slopes())))

    def check(self):
        """Raise :class:`CurveClassError` unless the curve is in Sigma(A, T)."""
        seminorm = self.seminorm()
        if seminorm > self.lipschitz_budget * (1.0 + 1e-12):
            raise CurveClassError(
                f"curve seminorm {seminorm:.6g} exceeds its budget {self.lipschitz_budget:.6g}"
            )
        return self


@dataclass(frozen=True)
class FieldSolution:
    """Layer densities for one curve; evaluate with :func:`evaluate_v`."""

    curve: BoundaryCurve
    datum: InitialDatum
    phi: GridFunction
    q: GridFunction
    source: float = SOURCE
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.phi.grid != self.curve.grid or self.q.grid != self.curve.grid:
            raise DomainError("phi and q must share the curve's grid")

    @property
    def grid(self):
        return self.curve.grid

    def boundary_value(self, t):
        return self.source * np.exp(-np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# discrete kernels on the grid


def _check_compatible(datum, source):
    h_b = float(datum.h(np.array([datum.b]))[0])
    if abs(h_b - source) > 1e-8:
        raise DomainError(
            f"h(b) = {h_b:.6g} is incompatible with the boundary value {source:.6g} at t = 0"
        )


def _lag_and_jump(curve):
    t, L = curve.grid.nodes, curve.values
    lag = t[:, None] - t[None, :]
    jump = L[:, None] - L[None, :]
    return lag, jump


def _diagonal_slopes(curve):
    slopes = curve.slopes()
    return np.concatenate([[slopes[0]], slopes])


def curve_kernel(curve):
    """``sqrt(t - tau) G_x(L_t, t; L_tau, tau)`` on node pairs.

    Off the diagonal this is ``-(dL/dt) exp(-dL^2 / (2 dt)) / sqrt(2 pi)``;
    on the diagonal the backward-difference slope replaces ``dL/dt``.
    """
    lag, jump = _lag_and_jump(curve)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lag > 0, jump / np.where(lag > 0, lag, 1.0), 0.0)
    k = -ratio * INV_SQRT_2PI * np.exp(-0.5 * ratio * jump)
    k[np.diag_indices_from(k)] = -_diagonal_slopes(curve) * INV_SQRT_2PI
    return np.tril(k)


def _gaussian_factor(curve):
    """``sqrt(t - tau) G(L_t, t; L_tau, tau)`` on node pairs (diagonal 1/sqrt(2 pi))."""
    lag, jump = _lag_and_jump(curve)
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = np.where(lag > 0, jump * jump / (2.0 * np.where(lag > 0, lag, 1.0)), 0.0)
    return np.tril(INV_SQRT_2PI * np.exp(-expo))


def initial_forcing(curve, datum, func):
    """``int func(xi) G(L_t, t; xi, 0) dxi`` at the nodes; half of ``func(b)`` at t = 0."""
    t, L = curve.grid.nodes, curve.values
    out = np.empty_like(t)
    out[0] = 0.5 * float(func(np.array([datum.b]))[0])
    for i in range(1, t.size):
        out[i] = convolve_initial(func, L[i], t[i], support=datum.support)
    return out


def boundary_density(curve, datum, source=SOURCE, weights=None):
    """Single-layer density ``phi`` enforcing ``v(L_t, t) = source exp(-t)``.

    Solves ``phi = psi + int_0^t G_x(L_t, t; L_tau, tau) phi dtau`` with
    ``psi = -source exp(-t) + int h G(L_t, t; xi, 0) dxi``.  At ``t = 0`` the
    convolution tends to ``h(b)/2`` (only half of the Gaussian sees the
    support), so ``phi(0) = h(b)/2 - source``.
    """
    curve.check()
    t = curve.grid.nodes
    psi = -source * np.exp(-t) + initial_forcing(curve, datum, datum.h)
    return solve_weakly_singular(
        SingularKernel(matrix=curve_kernel(curve)), psi, curve.grid, weights=weights
    )


def boundary_gradient(curve, datum, source=SOURCE, weights=None):
    """Boundary gradient ``q(t) = v_x(L_t, t)`` from its own Volterra equation.

    ``q/2 = int h_xi G dxi - 1/2 int G_x q dtau + source int e^-tau G dtau``
    with every kernel evaluated on the curve.  Requires ``h(b) = source`` so
    that the corner contributions at ``(b, 0)`` cancel.
    """
    curve.check()
    _check_compatible(datum, source)
    grid = curve.grid
    W = abel_weights(grid) if weights is None else weights
    t = grid.nodes
    smooth_source = (W * _gaussian_factor(curve)) @ np.exp(-t)
    forcing = 2.0 * initial_forcing(curve, datum, datum.h_xi) + 2.0 * source * smooth_source
    return solve_weakly_singular(
        SingularKernel(matrix=-curve_kernel(curve)), forcing, grid, weights=W
    )


def solve_field(curve, datum, source=SOURCE):
    """Both layer densities for ``curve`` bundled in a :class:`FieldSolution`."""
    W = abel_weights(curve.grid)
    if source != 0:
        _check_compatible(datum, source)
    phi = boundary_density(curve, datum, source, weights=W)
    q = boundary_gradient(curve, datum, source, weights=W)
    return FieldSolution(curve, datum, phi, q, source)


# ---------------------------------------------------------------------------
# off-grid time quadrature


@lru_cache(maxsize=4096)
def _time_rule_cached(grid, t):
    nodes = grid.nodes
    k = int(np.searchsorted(nodes, t, side="left"))  # nodes[k-1] < t <= nodes[k]
    if k == 0:
        raise DomainError("time integrals need t > 0")
    # full intervals [t_j, t_{j+1}] with t_{j+1} <= t_{k-1}, in s = sqrt(t - tau)
    s_parts, w_parts = [], []
    if k >= 2:
        g, w = gauss_legendre(_FULL_ORDER)
        hi = np.sqrt(t - nodes[: k - 1])
        lo = np.sqrt(t - nodes[1:k])
        half = 0.5 * (hi - lo)
        s_parts.append(((hi + lo)[:, None] * 0.5 + half[:, None] * g).ravel())
        w_parts.append((half[:, None] * w).ravel())
    # last interval [t_{k-1}, t], split geometrically towards s = 0
    top = math.sqrt(t - nodes[k - 1])
    levels = max(1, int(math.ceil(math.log2(top / _S_FLOOR))))
    breaks = np.concatenate([[0.0], top * 0.5 ** np.arange(levels, -1, -1)])
    s_geo, w_geo = panel_rule(breaks, _GEOM_ORDER)
    s_parts.append(s_geo)
    w_parts.append(w_geo)
    s = np.concatenate(s_parts)
    ws = np.concatenate(w_parts)
    tau = t - s * s
    for arr in (s, ws, tau):
        arr.flags.writeable = False
    return s, ws, tau


def time_rule(grid, t):
    """Nodes for ``int_0^t F(tau) dtau = sum_k 2 s_k w_k F(t - s_k^2)``.

    Returns ``(s, w, tau)``; the Jacobian ``2 s`` is left to the caller so that
    it can be folded into singular kernels analytically.
    """
    t = float(t)
    if not 0 < t <= grid.T * (1 + 1e-12):
        raise DomainError(f"t = {t} outside (0, {grid.T}]")
    return _time_rule_cached(grid, min(t, grid.T))


def _offsets(curve, x, t):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Lt = float(curve(t))
    gap = x - Lt
    if np.any(gap < -BOUNDARY_SNAP):
        raise DomainError(f"x = {x[gap < -BOUNDARY_SNAP][0]} lies left of L_t = {Lt}")
    return x, Lt, gap < BOUNDARY_SNAP


def _layer(curve, x, t, density, kind):
    """``int_0^t K(x, t; L_tau, tau) density(tau) dtau`` with the direct kernel.

    ``kind`` is ``"G"`` or ``"G_x"``; ``density`` is a callable of ``tau``.
    Points on the boundary get the direct value (no jump term).
    """
    s, w, tau = time_rule(curve.grid, t)
    delta = x[:, None] - curve(tau)[None, :]
    gauss = np.exp(-delta * delta / (2.0 * s * s))
    if kind == "G":
        kern = 2.0 * INV_SQRT_2PI * gauss
    else:
        kern = -2.0 * INV_SQRT_2PI * delta / (s * s) * gauss
    return kern @ (w * density(tau))


def single_layer_potential(phi, curve, x, t):
    """``w_phi(x, t) = int_0^t G(x, t; L_tau, tau) phi(tau) dtau`` for ``x >= L_t``."""
    x_arr, _, _ = _offsets(curve, x, t)
    out = _layer(curve, x_arr, t, phi, "G")
    return out if np.ndim(x) else float(out[0])


def double_layer_direct(phi, curve, t):
    """``int_0^t G_x(L_t, t; L_tau, tau) phi(tau) dtau`` (the principal value)."""
    return float(_layer(curve, np.array([float(curve(t))]), t, phi, "G_x")[0])


def evaluate_v(field, x, t):
    """Field value from the layer representation, for ``x >= L_t``.

    On the boundary the one-sided limit ``-phi(t) + direct value`` is returned.
    """
    curve = field.curve
    x_arr, _, on_bdry = _offsets(curve, x, t)
    out = convolve_initial(field.datum, x_arr, t) + _layer(curve, x_arr, t, field.phi, "G_x")
    out = np.where(on_bdry, out - field.phi(t), out)
    return out if np.ndim(x) else float(out[0])


def evaluate_v_greens(field, x, t, include_source=True):
    """Field value from Green's identity, using the boundary gradient ``q``.

    ``v = int h G - 1/2 int G q dtau + 1/2 int g G_xi dtau - int Ldot g G dtau``
    with ``g(tau) = source exp(-tau)``.  The last term is the flux through the
    moving boundary; it vanishes for a flat curve.
    """
    curve = field.curve
    x_arr, _, on_bdry = _offsets(curve, x, t)
    out = convolve_initial(field.datum, x_arr, t) - 0.5 * _layer(curve, x_arr, t, field.q, "G")
    if include_source and field.source != 0:
        g = field.boundary_value
        # G_xi = -G_x, and crossing the boundary flips the jump sign accordingly
        dbl = -_layer(curve, x_arr, t, g, "G_x")
        dbl = np.where(on_bdry, dbl + g(t), dbl)
        flux = _layer(curve, x_arr, t, lambda tau: curve.slope_at(tau) * g(tau), "G")
        out = out + 0.5 * dbl - flux
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# a priori bounds


def bound_constants(datum, A, source=SOURCE):
    """Estimates ``(C1, C2, C3)`` for the integral inequality on ``|q|``.

    ``C1 = A/sqrt(2 pi)`` bounds ``sqrt(t - tau) |G_x|`` on the curve class,
    ``C2 = 2 source/sqrt(2 pi)`` bounds the source term's growth in ``sqrt(t)``
    and ``C3 = sup |h_xi|``.
    """
    return A * INV_SQRT_2PI, 2.0 * source * INV_SQRT_2PI, datum.sup_h_xi()


def gradient_bound(datum, A, T, t=None, source=SOURCE):
    """Gronwall-type bound ``(1 + 2 C1 sqrt(T)) exp(pi C1^2 T) (C2 sqrt(t) + C3)``."""
    C1, C2, C3 = bound_constants(datum, A, source)
    t = T if t is None else np.asarray(t, dtype=float)
    return (1 + 2 * C1 * np.sqrt(T)) * np.exp(np.pi * C1**2 * T) * (C2 * np.sqrt(t) + C3)
