"""Gaussian heat kernel for the generator 1/2 d^2/dx^2 and related quadratures.

All functions broadcast over numpy arrays.  The kernel is

    G(x, t; xi, tau) = exp(-(x - xi)^2 / (2 (t - tau))) / sqrt(2 pi (t - tau))

and is only defined for ``t > tau``; evaluating on (or too near) the diagonal
raises :class:`~fbp.errors.DomainError`.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import DomainError

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

#: smallest admissible time lag t - tau
DIAGONAL_GAP = 1e-14

#: Gaussian window (in standard deviations) outside which the initial datum
#: is ignored by :func:`convolve_initial`
WINDOW_SIGMAS = 12.0


@dataclass(frozen=True)
class SpaceTimePoint:
    x: float
    t: float

    def __post_init__(self):
        if not np.isfinite(self.t) or self.t < 0:
            raise DomainError(f"time must be finite and non-negative, got {self.t}")


def _lag(t, tau):
    lag = np.asarray(t, dtype=float) - np.asarray(tau, dtype=float)
    if np.any(lag < DIAGONAL_GAP):
        raise DomainError("heat kernel evaluated with t - tau below %g" % DIAGONAL_GAP)
    return lag


def heat_kernel(x, t, xi, tau):
    """Gaussian kernel G(x, t; xi, tau) of the heat equation u_t = u_xx / 2."""
    lag = _lag(t, tau)
    dx = np.asarray(x, dtype=float) - xi
    return INV_SQRT_2PI / np.sqrt(lag) * np.exp(-dx * dx / (2.0 * lag))


def heat_kernel_dx(x, t, xi, tau):
    """Derivative of the kernel in its first argument, -(x - xi)/(t - tau) G."""
    lag = _lag(t, tau)
    dx = np.asarray(x, dtype=float) - xi
    return -dx / lag * INV_SQRT_2PI / np.sqrt(lag) * np.exp(-dx * dx / (2.0 * lag))


def normal_tail(z):
    """Upper tail of the standard normal, Psi(z) = P(Z > z).

    Computed from ``erfc`` so that it keeps full relative accuracy for large
    positive ``z``.
    """
    return 0.5 * erfc(np.asarray(z, dtype=float) / np.sqrt(2.0))


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def panel_rule(breaks, order=8):
    """Composite Gauss-Legendre rule on the panels defined by ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    g, w = gauss_legendre(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) * 0.5 + half * g
    weights = half * w
    return nodes.ravel(), weights.ravel()


def initial_rule(support, x, t, order=8, min_panels=8):
    """Quadrature rule for integrals of ``f(xi) G(x, t; xi, 0)`` over ``support``.

    Panels have width at most ``sqrt(t)/2`` (at least ``min_panels`` of them)
    and cover the part of the support within ``WINDOW_SIGMAS`` standard
    deviations of the evaluation points, beyond which the kernel is below
    machine precision.
    """
    if t <= 0:
        raise DomainError(f"initial-datum convolution needs t > 0, got {t}")
    a, b = support
    x = np.atleast_1d(np.asarray(x, dtype=float))
    reach = WINDOW_SIGMAS * np.sqrt(t)
    lo = max(a, float(x.min()) - reach)
    hi = min(b, float(x.max()) + reach)
    if hi <= lo:
        return np.empty(0), np.empty(0)
    n_panels = max(min_panels, int(np.ceil((hi - lo) / (0.5 * np.sqrt(t)))))
    return panel_rule(np.linspace(lo, hi, n_panels + 1), order)


def convolve_initial(h, x, t, support=None, order=8):
    """Integral of ``h(xi) G(x, t; xi, 0)`` over the compact support of ``h``.

    Parameters
    ----------
    h : InitialDatum or callable
        Either an initial datum (its ``h`` and support are used) or a
        vectorised function of one variable.
    x : float or array_like
        Evaluation positions.
    t : float
        Time, strictly positive.
    support : tuple of float, optional
        Support ``(a, b)`` of ``h``; required when ``h`` is a plain callable.
    """
    if support is None:
        support = h.support
        h = h.h
    x_arr = np.asarray(x, dtype=float)
    xi, w = initial_rule(support, x_arr, t, order=order)
    if xi.size == 0:
        return np.zeros_like(x_arr) if x_arr.ndim else 0.0
    values = heat_kernel(x_arr[..., None], t, xi, 0.0) @ (w * h(xi))
    return values if x_arr.ndim else float(values)


def tail_convolve_initial(f, x, t, support, order=8):
    """Integral of ``f(xi) Psi((x - xi)/sqrt(t))`` over ``support``.

    This is ``int f(xi) int_x^inf G(y, t; xi, 0) dy dxi``.  Unlike the kernel
    itself, ``Psi`` does not decay for ``xi`` far to the right of ``x``, so the
    quadrature window only trims the left side.
    """
    if t <= 0:
        raise DomainError(f"initial-datum convolution needs t > 0, got {t}")
    x_arr = np.asarray(x, dtype=float)
    a, b = support
    lo = max(a, float(np.min(x_arr)) - WINDOW_SIGMAS * np.sqrt(t))
    if b <= lo:
        return np.zeros_like(x_arr) if x_arr.ndim else 0.0
    n_panels = max(8, int(np.ceil((b - lo) / (0.5 * np.sqrt(t)))))
    xi, w = panel_rule(np.linspace(lo, b, n_panels + 1), order)
    z = (x_arr[..., None] - xi) / np.sqrt(t)
    values = normal_tail(z) @ (w * f(xi))
    return values if x_arr.ndim else float(values)
