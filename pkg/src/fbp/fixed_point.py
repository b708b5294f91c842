"""Boundary-update map and the damped Picard iteration for the free boundary.

``K[L](t) = b - 1/4 int_0^t e^tau q(tau) dtau`` where ``q`` is the boundary
gradient computed for the curve ``L``.  A fixed point of ``K`` is a free
boundary; it is found by iterating ``L <- (1 - theta) L + theta K[L]`` from
the flat curve ``L = b``.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import BudgetError, ConvergenceError, DomainError
from .halfline import SOURCE, BoundaryCurve, bound_constants, boundary_gradient, solve_field
from .volterra import TimeGrid, abel_weights

log = logging.getLogger(__name__)

MAX_HALVINGS = 6
STALL_LIMIT = 3
FALLBACK_DAMPING = 0.5


@dataclass
class SolverConfig:
    """Parameters of :func:`solve_fbp`.

    ``A = None`` asks :func:`lipschitz_budget` for a value.  ``source`` scales
    the boundary condition ``v(L_t, t) = source exp(-t)``; it is 2 for the
    selection problem and 0 only in degenerate test runs.
    """

    b: float = 1.0
    T: float = 0.25
    M: int = 256
    A: float = None
    damping: float = 1.0
    tol_fp: float = 1e-8
    max_iter: int = 100
    adaptive_T: bool = True
    grid: str = "uniform"
    source: float = SOURCE

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (isinstance(self.T, (int, float)) and self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"T must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 2:
            raise DomainError(f"M must be an integer >= 2, got {self.M}")
        if not 0 < self.damping <= 1:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol_fp > 0:
            raise DomainError(f"tol_fp must be positive, got {self.tol_fp}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.A is not None and not self.A > 0:
            raise DomainError(f"A must be positive, got {self.A}")
        if self.grid not in ("uniform", "graded"):
            raise DomainError(f"grid must be 'uniform' or 'graded', got {self.grid!r}")

    def make_grid(self, T=None):
        T = self.T if T is None else T
        if self.grid == "graded":
            return TimeGrid.graded(T, int(self.M))
        return TimeGrid.uniform(T, int(self.M))


@dataclass
class FixedPointReport:
    iterates: int = 0
    final_residual: float = math.inf
    contraction_ratios: list = field(default_factory=list)
    lipschitz_seminorm: float = math.nan
    horizon_used: float = math.nan
    residual_history: list = field(default_factory=list)
    damping_used: float = 1.0
    budget: float = math.nan
    halvings: int = 0
    converged: bool = False

    def to_dict(self):
        return asdict(self)


def lipschitz_seminorm(curve):
    """Largest slope between adjacent nodes (exact for piecewise-linear curves)."""
    if len(curve.grid) < 2:
        raise DomainError("degenerate grid")
    return curve.seminorm()


def k_map(curve, q):
    """``b - 1/4 int_0^t e^tau q dtau`` by the composite trapezoid rule."""
    t = curve.grid.nodes
    return curve.b - 0.25 * cumulative_trapezoid(np.exp(t) * q.values, t, initial=0.0)


def apply_K(curve, datum, source=SOURCE, weights=None):
    """One application of the boundary-update map.

    Returns the image curve (carrying the input's budget).  Raises
    :class:`BudgetError` when its seminorm exceeds that budget.
    """
    q = boundary_gradient(curve, datum, source, weights=weights)
    image = BoundaryCurve(curve.grid, k_map(curve, q), curve.lipschitz_budget)
    seminorm = image.seminorm()
    if seminorm > curve.lipschitz_budget:
        raise BudgetError(seminorm, curve.lipschitz_budget)
    return image


def _budget_sweep(datum, T, A, source, safety):
    C1, C2, C3 = bound_constants(datum, A, source)
    with np.errstate(over="ignore"):
        growth = np.exp(np.pi * C1**2 * T)
    return float(
        safety * 0.25 * math.exp(T) * (1 + 2 * C1 * math.sqrt(T)) * growth * (C2 * math.sqrt(T) + C3)
    )


def budget_sweeps(datum, T, source=SOURCE, safety=1.5, sweeps=3):
    """Successive substitutions ``A_1, ..., A_sweeps`` starting from ``C1 = 0``."""
    values, A = [], 0.0
    for _ in range(sweeps):
        A = _budget_sweep(datum, T, A, source, safety)
        values.append(A if math.isfinite(A) else math.inf)
        if not math.isfinite(A):
            break
    return values


def lipschitz_budget(datum, T, source=SOURCE, safety=1.5, sweeps=3):
    """Recommended ``A`` from the a priori bound on ``|q|``.

    ``A = safety/4 e^T (1 + 2 C1 sqrt(T)) exp(pi C1^2 T) (C2 sqrt(T) + C3)``
    with ``C1 = A/sqrt(2 pi)``; the dependence on ``A`` is resolved by
    ``sweeps`` substitutions starting from ``C1 = 0``.  The result may be huge
    or ``inf`` once ``T`` is too long for the bound to close.
    """
    return budget_sweeps(datum, T, source, safety, sweeps)[-1]


def default_budget(datum, T, source=SOURCE, safety=1.5):
    """:func:`lipschitz_budget` if its sweeps settle, else the ``C1 = 0`` estimate.

    The sweeps count as settled when the last one moved ``A`` by less than 10%.
    """
    values = budget_sweeps(datum, T, source, safety)
    if len(values) >= 2 and math.isfinite(values[-1]) and values[-1] <= 1.1 * values[-2]:
        return values[-1]
    log.info(
        "a priori budget does not settle at T=%g (sweeps %s); using the C1=0 estimate A=%.4g",
        T,
        ", ".join(f"{a:.3g}" for a in values),
        values[0],
    )
    return values[0]


def _iterate(config, datum, grid, A):
    weights = abel_weights(grid)
    curve = BoundaryCurve.constant(grid, config.b, A)
    theta = config.damping
    history, ratios = [], []
    stalls = 0
    for it in range(1, int(config.max_iter) + 1):
        image = apply_K(curve, datum, config.source, weights=weights)
        residual = float(np.max(np.abs(image.values - curve.values)))
        if history:
            ratios.append(residual / history[-1] if history[-1] > 0 else 0.0)
            stalls = stalls + 1 if residual >= history[-1] else 0
        history.append(residual)
        log.debug("iteration %d: residual %.3e (theta=%g)", it, residual, theta)
        if residual <= config.tol_fp:
            return curve, history, ratios, theta, True
        if stalls >= STALL_LIMIT and theta > FALLBACK_DAMPING:
            log.info("residual stalled for %d iterations, damping to %g", stalls, FALLBACK_DAMPING)
            theta = FALLBACK_DAMPING
            stalls = 0
        curve = BoundaryCurve(grid, (1 - theta) * curve.values + theta * image.values, A)
    return curve, history, ratios, theta, False


def solve_fbp(config, datum):
    """Self-consistent free boundary on ``[0, T]``.

    Returns ``(curve, field, report)``.  With ``adaptive_T`` the horizon is
    halved (at most six times) whenever an iterate leaves the Lipschitz class.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` or the halving cap is exhausted; ``history`` holds
        the residuals of the last attempt and ``report`` the diagnostics.
    """
    config.validate()
    if abs(datum.b - config.b) > 1e-12:
        raise DomainError(f"datum starts at {datum.b}, config at {config.b}")
    T = float(config.T)
    report = FixedPointReport(damping_used=config.damping)
    for halving in range(MAX_HALVINGS + 1):
        A = config.A if config.A is not None else default_budget(datum, T, config.source)
        C3 = datum.sup_h_xi()
        if A <= C3 / 4:
            warnings.warn(f"budget A={A:.4g} does not exceed sup|h_xi|/4={C3 / 4:.4g}", stacklevel=2)
        grid = config.make_grid(T)
        report.budget, report.horizon_used, report.halvings = A, T, halving
        try:
            curve, history, ratios, theta, ok = _iterate(config, datum, grid, A)
        except BudgetError as exc:
            if not config.adaptive_T:
                raise
            log.info("%s; halving T from %g", exc, T)
            T *= 0.5
            continue
        report.iterates = len(history)
        report.residual_history = history
        report.contraction_ratios = ratios
        report.final_residual = history[-1]
        report.damping_used = theta
        report.lipschitz_seminorm = lipschitz_seminorm(curve)
        if not ok:
            err = ConvergenceError(
                f"no convergence in {config.max_iter} iterations (residual {history[-1]:.3e})",
                history,
            )
            err.report = report
            raise err
        report.converged = True
        field_solution = solve_field(curve, datum, config.source)
        return curve, field_solution, report
    err = ConvergenceError(f"horizon halved {MAX_HALVINGS} times without an admissible iterate")
    err.report = report
    raise err
