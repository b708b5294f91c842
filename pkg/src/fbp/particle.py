"""N-particle branching Brownian motion with selection of the leftmost.

``n`` independent standard Brownian motions; at rate one per particle a
uniformly chosen particle splits in place and at the same instant the
leftmost particle is removed, so the population stays at ``n``.  Waiting
times between events are exponential with rate ``n`` and positions move by
exact Gaussian increments between events, so the only error is statistical.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest

from .density import N_SNAPSHOT, clustered_breaks, reconstruct_rho, x_max
from .errors import DomainError
from .kernels import panel_rule

TABLE_SIZE = 2**14


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    time: float
    seed: int
    n_branch_events: int = 0


@dataclass(frozen=True)
class EmpiricalMeasure:
    t: float
    sorted_positions: np.ndarray
    n_branch_events: int = 0

    @property
    def leftmost(self):
        return float(self.sorted_positions[0])

    @property
    def size(self):
        return self.sorted_positions.size


def inverse_cdf_table(rho0, support, size=TABLE_SIZE):
    """Nodes and normalised cumulative mass of ``rho0`` on ``size`` points."""
    a, b = support
    x = np.linspace(a, b, size)
    dens = np.maximum(rho0(x), 0.0)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x) * (dens[1:] + dens[:-1]))])
    return x, cdf / cdf[-1]


def sample_initial(datum, n, rng, size=TABLE_SIZE):
    """I.i.d. draws from ``rho0`` by inverse-CDF on a tabulated cumulative."""
    x, cdf = inverse_cdf_table(datum.rho0, datum.support, size)
    return np.interp(rng.random(n), cdf, x)


def _leftmost(pos):
    # np.argmin returns the first index among ties
    return int(np.argmin(pos))


def simulate(n, datum, t_end, seed, snapshot_times=None, branching=True, rng=None):
    """Run one ensemble and return its empirical measures.

    Parameters
    ----------
    n : int
        Population size, at least 2.
    datum : InitialDatum
        Initial positions are drawn from ``datum.rho0``.
    t_end : float
        Final time.
    seed : int
        Seed of the ``numpy`` PCG64 generator (ignored if ``rng`` is given).
    snapshot_times : sequence of float, optional
        Times at which to record the ensemble; ``t_end`` is always included.
    branching : bool
        ``False`` switches off branching and selection (pure diffusion).
    """
    if int(n) != n or n < 2:
        raise DomainError(f"need an integer population n >= 2, got {n}")
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    n = int(n)
    times = sorted(set([float(t) for t in (snapshot_times or ())] + [float(t_end)]))
    if times[0] < 0 or times[-1] > t_end:
        raise DomainError("snapshot times must lie in [0, t_end]")
    rng = np.random.default_rng(seed) if rng is None else rng
    pos = sample_initial(datum, n, rng)
    ens = ParticleEnsemble(pos, 0.0, seed)
    out = []
    for t_snap in times:
        _advance(ens, t_snap, rng, branching)
        out.append(EmpiricalMeasure(t_snap, np.sort(ens.positions), ens.n_branch_events))
    return out


def _advance(ens, t_target, rng, branching):
    pos, n = ens.positions, ens.positions.size
    while True:
        wait = rng.exponential(1.0 / n) if branching else math.inf
        dt = min(wait, t_target - ens.time)
        if dt > 0:
            pos += rng.normal(0.0, math.sqrt(dt), n)
        if ens.time + wait >= t_target:
            # memorylessness: the unused waiting time is redrawn next call
            ens.time = t_target
            return
        ens.time += wait
        parent = int(rng.integers(n))
        victim = _leftmost(pos)
        if victim != parent:
            pos[victim] = pos[parent]
        ens.n_branch_events += 1


def simulate_replicas(n, datum, t_end, seed, replicas, snapshot_times=None, branching=True, workers=None):
    """Independent replicas on spawned seed streams, run on a thread pool."""
    streams = np.random.SeedSequence(seed).spawn(replicas)

    def one(ss):
        return simulate(n, datum, t_end, seed, snapshot_times, branching, rng=np.random.default_rng(ss))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, streams))


def empirical_cdf(measure, x):
    """Fraction of particles at or left of ``x``."""
    sp = measure.sorted_positions
    return np.searchsorted(sp, x, side="right") / sp.size


class PDEDistribution:
    """Cumulative ``int_{L_t}^x rho(y, t) dy`` tabulated from a field solution."""

    def __init__(self, field, t, n_nodes=N_SNAPSHOT):
        self.t = t
        self.boundary = float(field.curve(t))
        self.x = clustered_breaks(self.boundary, x_max(field), n_nodes - 1)
        nodes, weights = panel_rule(self.x, 4)
        pieces = (weights * reconstruct_rho(field, nodes, t)).reshape(-1, 4).sum(axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self.mass = float(self.cum[-1])

    def cdf(self, x):
        return np.interp(x, self.x, self.cum, left=0.0, right=self.cum[-1]) / self.mass

    def sample(self, n, rng):
        """Direct inverse-CDF draws from ``rho(., t)``."""
        return np.interp(rng.random(n), self.cum / self.mass, self.x)


def datum_cdf(datum, size=TABLE_SIZE):
    """Cumulative distribution of ``rho0`` (tabulated)."""
    x, cdf = inverse_cdf_table(datum.rho0, datum.support, size)
    return lambda y: np.interp(y, x, cdf, left=0.0, right=1.0)


def ks_distance(samples, cdf):
    return float(kstest(np.asarray(samples), cdf).statistic)


def compare_to_pde(measures, field):
    """Per-snapshot KS distance to the PDE density and ``|leftmost - L_t|``.

    Returns a list of dicts with keys ``t``, ``ks_distance``, ``leftmost``,
    ``L_t`` and ``leftmost_gap``.
    """
    rows = []
    for m in measures:
        if not 0 < m.t <= field.grid.T * (1 + 1e-12):
            raise DomainError(f"snapshot time {m.t} outside the field horizon")
        dist = PDEDistribution(field, m.t)
        rows.append(
            {
                "t": m.t,
                "ks_distance": ks_distance(m.sorted_positions, dist.cdf),
                "leftmost": m.leftmost,
                "L_t": dist.boundary,
                "leftmost_gap": abs(m.leftmost - dist.boundary),
            }
        )
    return rows
