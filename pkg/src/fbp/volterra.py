"""Second-kind Volterra equations with Abel-type kernels.

Solves

    phi(t) = psi(t) + int_0^t k(t, tau) / sqrt(t - tau) phi(tau) dtau

by product integration: on every grid interval the product
``k(t_i, .) phi(.)`` is replaced by its linear interpolant and integrated
exactly against ``(t_i - tau)^(-1/2)``.  The unknown at ``t_i`` appears on
both sides and is obtained from a scalar solve, so the march is implicit and
causal.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, SingularStepError


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing nodes ``0 = t_0 < ... < t_M = T``."""

    nodes: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("a time grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise DomainError("time grids start at t = 0")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("time-grid nodes must be strictly increasing")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T, M=256):
        if not T > 0:
            raise DomainError(f"horizon must be positive, got {T}")
        return cls(np.linspace(0.0, T, M + 1), kind="uniform")

    @classmethod
    def graded(cls, T, M=256, power=2.0):
        """Nodes ``T (i/M)^power``, clustered near t = 0."""
        if not T > 0:
            raise DomainError(f"horizon must be positive, got {T}")
        return cls(T * np.linspace(0.0, 1.0, M + 1) ** power, kind="graded")

    @property
    def M(self):
        return self.nodes.size - 1

    @property
    def T(self):
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())


@dataclass(frozen=True)
class GridFunction:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DomainError(
                f"{values.size} values for a grid of {self.grid.nodes.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function has non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        """Piecewise-linear interpolant."""
        return np.interp(t, self.grid.nodes, self.values)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + _values(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - _values(other))

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _values(obj):
    return obj.values if isinstance(obj, GridFunction) else obj


@dataclass(frozen=True)
class SingularKernel:
    """Kernel ``k(t, tau) / sqrt(t - tau)``.

    ``smooth_factor`` must accept broadcastable arrays ``(t, tau)`` with
    ``tau <= t`` and return finite values, including on the diagonal.
    Alternatively ``matrix`` holds ``k(t_i, t_j)`` precomputed on a grid
    (only the lower triangle is read).
    """

    smooth_factor: Callable = None
    matrix: np.ndarray = field(default=None, repr=False)
    exponent: float = 0.5

    def __post_init__(self):
        if self.exponent != 0.5:
            raise DomainError("only the exponent 1/2 is supported")
        if self.smooth_factor is None and self.matrix is None:
            raise DomainError("give either smooth_factor or matrix")

    @classmethod
    def constant(cls, lam):
        return cls(lambda t, tau: np.full(np.broadcast(t, tau).shape, float(lam)))

    def on_grid(self, grid):
        if self.matrix is not None:
            mat = np.asarray(self.matrix, dtype=float)
            if mat.shape != (len(grid), len(grid)):
                raise DomainError("kernel matrix does not match the grid")
            return np.tril(mat)
        t = grid.nodes
        mat = np.asarray(self.smooth_factor(t[:, None], t[None, :]), dtype=float)
        return np.tril(np.broadcast_to(mat, (t.size, t.size)))

    def bound(self, grid):
        """``K_max = max |k(t_i, t_j)|`` over node pairs ``t_j <= t_i``."""
        return float(np.max(np.abs(self.on_grid(grid))))


def abel_weights(grid):
    """Product-integration weights for ``(t_i - tau)^(-1/2)``.

    Returns the lower-triangular matrix ``W`` with

        int_0^{t_i} f(tau) / sqrt(t_i - tau) dtau ~= sum_j W[i, j] f(t_j)

    exact for ``f`` piecewise linear on the grid.
    """
    t = grid.nodes
    n = t.size
    W = np.zeros((n, n))
    # interval j = [t_j, t_{j+1}] seen from node i >= j + 1
    i_idx, j_idx = np.tril_indices(n, k=-1)
    a = t[i_idx] - t[j_idx + 1]
    c = t[i_idx] - t[j_idx]
    sa, sc = np.sqrt(np.maximum(a, 0.0)), np.sqrt(c)
    s = sa + sc
    d = (c - a) / s  # sqrt(c) - sqrt(a) without cancellation
    np.add.at(W, (i_idx, j_idx + 1), 2.0 * d * (2.0 * sc + sa) / (3.0 * s))
    np.add.at(W, (i_idx, j_idx), 2.0 * d * (sc + 2.0 * sa) / (3.0 * s))
    return W


def _forcing_values(forcing, grid):
    if isinstance(forcing, GridFunction):
        if forcing.grid != grid:
            raise DomainError("forcing lives on a different grid")
        return forcing.values
    values = np.asarray(forcing, dtype=float)
    if values.shape != grid.nodes.shape:
        raise DomainError("forcing does not match the grid")
    return values


def solve_weakly_singular(kernel, forcing, grid=None, weights=None):
    """March the product-integration discretisation node by node.

    Parameters
    ----------
    kernel : SingularKernel
    forcing : GridFunction or array_like
        ``psi`` at the grid nodes; ``psi(t_0)`` is also the solution at
        ``t = 0`` since the memory term vanishes there.
    grid : TimeGrid, optional
        Defaults to the forcing's grid.
    weights : ndarray, optional
        Precomputed :func:`abel_weights` for ``grid``.

    Raises
    ------
    SingularStepError
        If ``|1 - W_ii k(t_i, t_i)| < 1e-10`` at some node.
    """
    if grid is None:
        grid = forcing.grid
    psi = _forcing_values(forcing, grid)
    W = abel_weights(grid) if weights is None else weights
    A = W * kernel.on_grid(grid)
    phi = np.empty_like(psi)
    phi[0] = psi[0]
    diag = 1.0 - np.diag(A)
    bad = np.flatnonzero(np.abs(diag[1:]) < 1e-10)
    if bad.size:
        raise SingularStepError(f"ill-conditioned diagonal solve at node {bad[0] + 1}")
    for i in range(1, psi.size):
        phi[i] = (psi[i] + A[i, :i] @ phi[:i]) / diag[i]
    return GridFunction(grid, phi)


def picard_solve(kernel, forcing, grid=None, tol=1e-12, max_iter=200):
    """Solve the same discrete system by fixed-point iteration.

    An independent route to :func:`solve_weakly_singular`; returns the
    solution and the sup-norm increments of successive iterates.
    """
    if grid is None:
        grid = forcing.grid
    psi = _forcing_values(forcing, grid)
    A = abel_weights(grid) * kernel.on_grid(grid)
    phi = psi.copy()
    history = []
    for _ in range(max_iter):
        new = psi + A @ phi
        history.append(float(np.max(np.abs(new - phi))))
        phi = new
        if history[-1] <= tol:
            return GridFunction(grid, phi), history
    raise ConvergenceError("Picard iteration did not converge", history)


def _abel_term_logs(z, n):
    return n * np.log(abs(z)) - gammaln(n / 2.0 + 1.0)


def picard_series_oracle(lam, grid, terms=20, tol=1e-9):
    """Neumann series for ``phi = 1 + lam int_0^t phi(tau)/sqrt(t - tau) dtau``.

    The n-th iterated Abel integral of 1 is
    ``(lam sqrt(pi))^n t^(n/2) / Gamma(n/2 + 1)``; terms ``0..terms`` are summed.
    The tail beyond the last term is bounded through Gautschi's inequality and
    must stay below ``tol``.
    """
    if terms < 1:
        raise DomainError("need at least one series term")
    t = grid.nodes
    z = lam * np.sqrt(np.pi)
    if lam != 0:
        zT = abs(z) * np.sqrt(grid.T)
        # term ratio n -> n+1 is at most zT / sqrt(n/2 + 1/2)
        ratio = zT / np.sqrt((terms + 1) / 2.0 + 0.5)
        first = np.exp(_abel_term_logs(zT, terms + 1))
        remainder = np.inf if ratio >= 1 else first / (1.0 - ratio)
        if remainder > tol:
            raise ConvergenceError(
                f"series remainder bound {remainder:.3g} exceeds {tol:.1g}; add terms"
            )
    total = np.zeros_like(t)
    for n in range(terms + 1):
        total += z**n * t ** (n / 2.0) / np.exp(gammaln(n / 2.0 + 1.0))
    return GridFunction(grid, total)
