"""Discrete renewal computations for the negligibility bounds.

For a lattice lifetime with pmf (g_1, ..., g_L) the renewal mass function is

    u(0) = 1,   u(n) = sum_l g_l u(n - l),

and U(n) = sum_{m <= n} u(m) is the renewal function (the n = 0 atom is the
G^*0 point mass at the origin).  By the key renewal theorem u(n) -> 1/mu and
U(t) ~ t/mu.  The expected number of particles at time t with age at most x,

    A(t, x) = sum_{n <= t} (1 - G(t - n)) J(x - (t - n)) u(n),

with J the unit step (J(y) = 1 for y >= 0), satisfies the conservation
identity A(t, t) = E Z(t) = 1 for every critical model.  U(t)(1 - G(eps *
phi(t))) bounds the probability that some time-t particle survives past
t + eps * phi(t), the quantity the tail condition

    t^3 (1 - G(eps * phi(t))) / phi(t) -> 0

keeps negligible relative to the small-population event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .models import Model
from .schedules import Schedule, ScheduleError


@dataclass(frozen=True)
class RenewalTable:
    """u(n) and its prefix sums U(n) for n = 0..t_max."""

    u: np.ndarray
    U: np.ndarray

    @property
    def t_max(self) -> int:
        return len(self.u) - 1


def renewal_function(lifetime, t_max: int) -> RenewalTable:
    """Renewal masses by discrete convolution (lattice) or closed form
    U(t) = 1 + rate*t (exponential, where u holds the density rate)."""
    if lifetime.kind == "exponential":
        n = np.arange(t_max + 1, dtype=float)
        u = np.full(t_max + 1, lifetime.rate)
        u[0] = 1.0
        return RenewalTable(u=u, U=1.0 + lifetime.rate * n)
    if not lifetime.is_lattice:
        raise ValueError(
            f"renewal_function supports lattice and exponential lifetimes, got {lifetime.kind!r}"
        )
    g = lifetime.lattice_pmf
    lmax = len(g)
    u = np.zeros(t_max + 1)
    u[0] = 1.0
    for n in range(1, t_max + 1):
        acc = 0.0
        for ell in range(1, min(n, lmax) + 1):
            if g[ell - 1] != 0.0:
                acc += g[ell - 1] * u[n - ell]
        u[n] = acc
    return RenewalTable(u=u, U=np.cumsum(u))


def growth_constant(table: RenewalTable, mu: float) -> float:
    """Empirical max of U(t) mu / t over t >= 1: the measured constant in the
    linear growth bound U(t) <= C t / mu (no closed value is assumed)."""
    n = np.arange(1, table.t_max + 1, dtype=float)
    return float(np.max(table.U[1:] * mu / n))


def expected_young(model: Model, t: int, x: float, table: RenewalTable = None) -> float:
    """A(t, x) = E[number of particles at t with age <= x], lattice models.

    A(t, t) = 1 exactly (criticality conservation); x < 0 gives 0.
    """
    t = int(t)
    if x < 0:
        return 0.0
    if table is None:
        table = renewal_function(model.lifetime, t)
    life = model.lifetime
    acc = 0.0
    n0 = max(0, int(math.ceil(t - x)))  # J(x - (t - n)) = 1 iff n >= t - x
    for n in range(n0, t + 1):
        acc += life.sf(float(t - n)) * table.u[n]
    return acc


def neglig_bound(model: Model, t: int, epsilon: float, phi: Schedule) -> float:
    """U(t) (1 - G(eps * phi(t))): Markov-inequality bound for the probability
    that a particle alive at t survives past t + eps * phi(t)."""
    table = renewal_function(model.lifetime, int(t))
    return float(table.U[int(t)]) * model.lifetime.sf(epsilon * phi(t))


def check_tail_condition(
    model: Model,
    phi: Schedule,
    t_grid: Sequence[int],
    epsilons: Sequence[float] = (0.1, 0.5, 1.0),
) -> Dict:
    """Tabulate t^3 (1 - G(eps phi(t))) / phi(t) over the grid.

    Rejects schedules with phi(t) >= t anywhere on the grid (the condition is
    stated for phi = o(t)); flags any epsilon whose sequence fails to decrease
    to its final value, which signals a tail too heavy for the window.
    """
    t_grid = sorted(int(t) for t in t_grid)
    for t in t_grid:
        if phi(t) >= t:
            raise ScheduleError(
                f"schedule {phi} has phi({t}) = {phi(t):g} >= t; phi must be o(t)"
            )
    rows: List[Dict] = []
    flagged = []
    for eps in epsilons:
        values = [t**3 * model.lifetime.sf(eps * phi(t)) / phi(t) for t in t_grid]
        nondecreasing = all(b >= a for a, b in zip(values, values[1:]))
        if nondecreasing and values[-1] > 0.0:
            flagged.append(eps)
        rows.append({"epsilon": eps, "t": list(t_grid), "value": values})
    return {"rows": rows, "flagged_epsilons": flagged, "ok": not flagged}


def monte_carlo_renewal_count(lifetime, t: float, n_paths: int, stream) -> np.ndarray:
    """Number of renewal epochs in (0, t] per path (verification oracle for
    the convolution table: mean + 1 estimates U(t))."""
    from .models import sample_lifetime

    counts = np.zeros(n_paths, dtype=np.int64)
    # lifetimes are >= min support > 0, so at most ceil(t / min_support) epochs
    if lifetime.is_lattice:
        min_step = 1 + int(np.argmax(lifetime.lattice_pmf > 0))
        max_epochs = int(t // min_step) + 1
    else:
        max_epochs = None  # open-ended; draw in batches below
    remaining = np.arange(n_paths)
    totals = np.zeros(n_paths)
    batch = 0
    while len(remaining) and (max_epochs is None or batch < max_epochs + 1):
        draws = sample_lifetime(lifetime, stream, size=len(remaining))
        totals[remaining] += draws
        alive = totals[remaining] <= t
        counts[remaining[alive]] += 1
        remaining = remaining[alive]
        batch += 1
    return counts
