"""Genealogy Monte Carlo and the rejection-based conditioning harness.

A replicate is a Bellman-Harris tree grown breadth-first to an extended
horizon t_ext = t + max(x queries).  Its randomness is fully determined by
(master seed, replicate index) through per-particle key splitting (see
`bhreduce.rng`), so the harness can run a cheap counting pass over every
replicate and afterwards replay only the accepted ones with full genealogy
recording -- the trees are identical by construction.

Alive convention: a particle occupies [birth, death); at a death instant the
particle is gone and its children exist.  This makes Z(t, t) = Z(t) and the
young/old decomposition Z*(t, x) = Z(t+x) - Z~(t+x, x) exact pathwise, where
Z*(t, x) counts same-particle survivors (birth < t, death > t + x) and
Z~(t, x) counts particles alive at t with age at most x.

The reduced count Z(s, t) is the number of particles alive at s with at
least one descendant-or-self alive at t; a particle dying exactly at t with
children present contributes through those children, which are alive at t.
beta(t) is the last time the reduced count equals 1 (on integers for lattice
models, on the jump structure for continuous ones) and d(t) = t - beta(t).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .models import Model
from .rng import Stream, mix64
from .schedules import Schedule
from .series import UnsupportedModelError

DEFAULT_CAP = 10**6
DEFAULT_CHUNK = 1 << 19


class CappedReplicateError(RuntimeError):
    """A single-tree simulation hit the population cap."""


class EmptySampleError(RuntimeError):
    """Conditioning accepted zero replicates; downstream comparisons refuse."""


# ---------------------------------------------------------------------------
# Model packing for the kernels


def _pack_model(model: Model):
    off_cdf = np.cumsum(model.offspring.pmf)
    off_cdf[-1] = 1.0  # guard the inverse-cdf walk against rounding
    life = model.lifetime
    if life.is_lattice:
        life_cdf = np.cumsum(life.lattice_pmf)
        life_cdf[-1] = 1.0
        return off_cdf, _kernels.LIFE_LATTICE, life_cdf, 0.0, 0.0
    if life.kind == "exponential":
        return off_cdf, _kernels.LIFE_EXPONENTIAL, np.ones(1), life.rate, 0.0
    return off_cdf, _kernels.LIFE_UNIFORM, np.ones(1), life.a, life.b


# ---------------------------------------------------------------------------
# Genealogies


@dataclass(frozen=True)
class GenealogyNode:
    id: int
    parent: Optional[int]
    birth: float
    death: float
    n_children: int


@dataclass(frozen=True)
class Genealogy:
    """Per-particle arrays of one simulated tree (or forest, for Y runs)."""

    birth: np.ndarray
    death: np.ndarray
    parent: np.ndarray
    n_children: np.ndarray
    t_extended: float
    root_key: int

    @property
    def size(self) -> int:
        return len(self.birth)

    def node(self, i: int) -> GenealogyNode:
        p = int(self.parent[i])
        return GenealogyNode(
            id=i,
            parent=None if p < 0 else p,
            birth=float(self.birth[i]),
            death=float(self.death[i]),
            n_children=int(self.n_children[i]),
        )

    def alive_at(self, s: float) -> np.ndarray:
        return np.flatnonzero((self.birth <= s) & (s < self.death))

    def validate(self) -> None:
        """Check the structural invariants; raises AssertionError on violation."""
        assert np.all(self.death > self.birth), "death must exceed birth"
        roots = self.parent < 0
        assert np.all(self.birth[roots] == 0.0), "roots must be born at 0"
        child_mask = ~roots
        assert np.all(
            self.birth[child_mask] == self.death[self.parent[child_mask]]
        ), "children must be born at their parent's death"
        counted = np.bincount(self.parent[child_mask], minlength=self.size)
        assert np.all(counted == self.n_children), "n_children must match recorded children"


def _simulate_recorded(model: Model, t_extended: float, root_key: int,
                       cap: int, y_mode: bool) -> Tuple[Genealogy, bool]:
    off_cdf, kind, life_cdf, p0, p1 = _pack_model(model)
    birth = np.empty(cap, np.float64)
    death = np.empty(cap, np.float64)
    parent = np.empty(cap, np.int64)
    nchild = np.empty(cap, np.int32)
    n, capped = _kernels.record_tree(
        np.uint64(root_key), float(t_extended), y_mode,
        off_cdf, kind, life_cdf, p0, p1, cap, birth, death, parent, nchild,
    )
    gen = Genealogy(
        birth=birth[:n].copy(),
        death=death[:n].copy(),
        parent=parent[:n].copy(),
        n_children=nchild[:n].copy(),
        t_extended=float(t_extended),
        root_key=int(root_key),
    )
    return gen, capped


def simulate_tree(model: Model, t_extended: float, stream: Stream,
                  cap: int = DEFAULT_CAP) -> Genealogy:
    """Complete genealogy of all particles born by t_extended, breadth-first.

    Deterministic given the stream's key.  Raises CappedReplicateError when
    the population cap is hit (callers doing rejection count such replicates
    separately instead).
    """
    gen, capped = _simulate_recorded(model, t_extended, stream.key, cap, False)
    if capped:
        raise CappedReplicateError(f"population cap {cap} exceeded")
    return gen


def simulate_y_tree(model: Model, t_extended: float, stream: Stream,
                    cap: int = DEFAULT_CAP) -> Genealogy:
    """Genealogy of the Y process: an offspring-distributed random number of
    independent initial particles (possibly zero), all born at time 0."""
    gen, capped = _simulate_recorded(model, t_extended, stream.key, cap, True)
    if capped:
        raise CappedReplicateError(f"population cap {cap} exceeded")
    return gen


@dataclass(frozen=True)
class TrajectoryObservables:
    Z_t: int
    Z_reduced: Dict[float, int]
    beta: Optional[float]
    d: Optional[float]
    Z_star: Dict[float, int]
    Z_tilde: Dict[float, int]
    Z_plus: Dict[float, int]          # Z(t + x)
    Z_tilde_plus: Dict[float, int]    # Z~(t + x, x)
    max_residual: Dict[float, Optional[float]]
    extinct_by: Optional[float]


def observables(
    genealogy: Genealogy,
    t: float,
    s_grid: Sequence[float] = (),
    x_grid: Sequence[float] = (),
    *,
    lattice: Optional[bool] = None,
) -> TrajectoryObservables:
    """Extract reduced counts, MRCA depth and age/survivor profiles at t.

    The genealogy must have been simulated to at least t + max(x_grid).
    `lattice` selects the beta convention (integer vs jump-structure); by
    default it is inferred from the birth/death times being integral.
    """
    s_arr = np.asarray(sorted(s_grid), dtype=float)
    x_arr = np.asarray(sorted(x_grid), dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > t):
        raise ValueError("s_grid entries must lie in [0, t]")
    if np.any(x_arr < 0):
        raise ValueError("x_grid entries must be nonnegative")
    need = t + (x_arr.max() if len(x_arr) else 0.0)
    if need > genealogy.t_extended + 1e-9:
        raise ValueError(
            f"genealogy simulated to {genealogy.t_extended}, but queries need {need}"
        )
    n = genealogy.size
    z_s = np.zeros(len(s_arr), np.int64)
    maxres = np.zeros(len(s_arr), np.float64)
    z_star = np.zeros(len(x_arr), np.int64)
    z_tilde = np.zeros(len(x_arr), np.int64)
    z_plus = np.zeros(len(x_arr), np.int64)
    z_tilde_plus = np.zeros(len(x_arr), np.int64)
    z_t, split, ext = _kernels.tree_observables(
        genealogy.birth, genealogy.death, genealogy.parent, n, float(t),
        s_arr, x_arr, z_s, maxres, z_star, z_tilde, z_plus, z_tilde_plus,
    )
    if lattice is None:
        lattice = bool(
            np.all(genealogy.birth == np.floor(genealogy.birth))
            and np.all(genealogy.death == np.floor(genealogy.death))
        )
    if z_t == 0:
        beta = d = None
    else:
        beta = split - 1.0 if lattice else split
        if beta < 0:
            beta = d = None  # count >= 2 from time 0 (Y forests): no MRCA
        else:
            d = t - beta
    return TrajectoryObservables(
        Z_t=int(z_t),
        Z_reduced={float(s): int(c) for s, c in zip(s_arr, z_s)},
        beta=beta,
        d=d,
        Z_star={float(x): int(c) for x, c in zip(x_arr, z_star)},
        Z_tilde={float(x): int(c) for x, c in zip(x_arr, z_tilde)},
        Z_plus={float(x): int(c) for x, c in zip(x_arr, z_plus)},
        Z_tilde_plus={float(x): int(c) for x, c in zip(x_arr, z_tilde_plus)},
        max_residual={
            float(s): (float(r) if r >= 0 else None) for s, r in zip(s_arr, maxres)
        },
        extinct_by=float(ext) if z_t == 0 and n > 0 else None,
    )


# ---------------------------------------------------------------------------
# Exhaustive enumeration oracle


def enumerate_exact(model: Model, t: int, s: float) -> Dict[Tuple[int, int], Fraction]:
    """Exact joint pmf of (Z(s, t), Z(t)) by exhaustive outcome recursion.

    Guarded to lattice models and t <= 4 (the state space is exponential in
    t).  Probabilities are exact rationals over the float pmf entries.
    """
    if not model.lifetime.is_lattice:
        raise UnsupportedModelError("enumerate_exact requires a lattice model")
    t = int(t)
    if t > 4:
        raise ValueError("enumerate_exact is limited to t <= 4")
    if not (0 <= s <= t):
        raise ValueError("need 0 <= s <= t")
    f = [Fraction(x) for x in model.offspring.pmf.tolist()]
    g = [Fraction(x) for x in model.lifetime.lattice_pmf.tolist()]

    def convolve(d1, d2):
        out: Dict[Tuple[int, int], Fraction] = {}
        for (a1, z1), p1 in d1.items():
            for (a2, z2), p2 in d2.items():
                key = (a1 + a2, z1 + z2)
                out[key] = out.get(key, Fraction(0)) + p1 * p2
        return out

    power_cache: Dict[Tuple[int, int], Dict] = {}

    def children_sum(b: int, k: int) -> Dict:
        if k == 0:
            return {(0, 0): Fraction(1)}
        key = (b, k)
        if key not in power_cache:
            power_cache[key] = convolve(children_sum(b, k - 1), subtree(b))
        return power_cache[key]

    memo: Dict[int, Dict] = {}

    def subtree(b: int) -> Dict:
        """Joint law of (a, z) for the subtree of a particle born at b, where
        z counts its subtree members alive at t and a counts those alive at s
        with a living time-t descendant-or-self."""
        if b in memo:
            return memo[b]
        out: Dict[Tuple[int, int], Fraction] = {}
        for ell, g_ell in enumerate(g, start=1):
            if g_ell == 0:
                continue
            d = b + ell
            if d > t:
                a = 1 if b <= s else 0  # alive at t, hence self-contributing at s
                key = (a, 1)
                out[key] = out.get(key, Fraction(0)) + g_ell
                continue
            for k, f_k in enumerate(f):
                if f_k == 0:
                    continue
                for (a_c, z_c), p in children_sum(d, k).items():
                    if b <= s < d:
                        a = 1 if z_c >= 1 else 0
                    else:
                        a = a_c
                    key = (a, z_c)
                    out[key] = out.get(key, Fraction(0)) + g_ell * f_k * p
        memo[b] = out
        return out

    return subtree(0)


def marginal(joint: Dict[Tuple[int, int], Fraction], axis: int) -> Dict[int, Fraction]:
    """Marginal of the enumerate_exact joint law: axis 0 -> Z(s,t), 1 -> Z(t)."""
    out: Dict[int, Fraction] = {}
    for key, p in joint.items():
        out[key[axis]] = out.get(key[axis], Fraction(0)) + p
    return out


# ---------------------------------------------------------------------------
# Conditioning events and the rejection harness


@dataclass(frozen=True)
class EventSpec:
    """survival: {Z(t) > 0}; small-pop: {0 < Z(t) <= B phi(t)};
    linear-band: {0 < Z(t) < B a t}."""

    kind: str
    phi: Optional[Schedule] = None
    a: Optional[float] = None

    def bounds(self, model: Model, t: float) -> Tuple[int, Optional[int]]:
        """Inclusive acceptance bounds (lo, hi) on Z(t); hi None = unbounded.

        small-pop uses Z <= floor(B phi(t) + 1e-12); linear-band uses
        Z <= ceil(B a t - 1e-12) - 1 (strict upper bound).
        """
        B = model.constants.B
        if self.kind == "survival":
            return 1, None
        if self.kind == "small-pop":
            if self.phi is None:
                raise ValueError("small-pop event needs a phi schedule")
            hi = int(math.floor(B * self.phi(t) + 1e-12))
            return 1, hi
        if self.kind == "linear-band":
            if self.a is None:
                raise ValueError("linear-band event needs the slope a")
            hi = int(math.ceil(B * self.a * t - 1e-12)) - 1
            return 1, hi
        raise ValueError(f"unknown event kind {self.kind!r}")

    def describe(self, model: Model, t: float) -> Dict:
        lo, hi = self.bounds(model, t)
        return {
            "kind": self.kind,
            "phi": str(self.phi) if self.phi else None,
            "a": self.a,
            "z_lo": lo,
            "z_hi": hi,
        }


@dataclass(frozen=True)
class SimConfig:
    model: Model
    t: float
    replicates: int
    seed: int
    event: EventSpec
    s_grid: Tuple[float, ...] = ()
    x_grid: Tuple[float, ...] = ()
    cap: int = DEFAULT_CAP
    want_mrca: bool = True
    y_process: bool = False
    chunk_size: int = DEFAULT_CHUNK
    jobs: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if any(s < 0 or s > self.t for s in self.s_grid):
            raise ValueError("s_grid entries must lie in [0, t]")
        if any(x < 0 for x in self.x_grid):
            raise ValueError("x_grid entries must be nonnegative")
        object.__setattr__(self, "s_grid", tuple(sorted(float(s) for s in self.s_grid)))
        object.__setattr__(self, "x_grid", tuple(sorted(float(x) for x in self.x_grid)))

    @property
    def t_extended(self) -> float:
        return self.t + (max(self.x_grid) if self.x_grid else 0.0)

    @property
    def detailed(self) -> bool:
        return self.want_mrca or bool(self.s_grid) or bool(self.x_grid)


@dataclass
class ConditionedSample:
    """Accepted-replicate observables plus whole-run counting statistics.

    z_counts[k] counts replicates with Z(t) = k over every non-capped
    replicate (accepted or not), so unconditional tail rates can be read off
    the same run.  Detailed per-accepted arrays are ordered by replicate
    index and are None when the run was configured count-only.
    """

    config_echo: Dict
    n_total: int
    n_capped: int
    n_accepted: int
    acceptance_rate: float
    wilson: Tuple[float, float]
    z_counts: np.ndarray
    accepted_replicates: np.ndarray
    accepted_z: np.ndarray
    d_values: Optional[np.ndarray] = None
    reduced_counts: Optional[np.ndarray] = None      # (n_acc, len(s_grid))
    z_star: Optional[np.ndarray] = None              # (n_acc, len(x_grid))
    z_tilde: Optional[np.ndarray] = None
    z_plus: Optional[np.ndarray] = None
    z_tilde_plus: Optional[np.ndarray] = None
    max_residual: Optional[np.ndarray] = None        # (n_acc, len(s_grid))
    s_grid: Tuple[float, ...] = ()
    x_grid: Tuple[float, ...] = ()

    @property
    def empty(self) -> bool:
        return self.n_accepted == 0

    def require_nonempty(self) -> "ConditionedSample":
        if self.empty:
            raise EmptySampleError(
                "conditioning accepted zero replicates; increase the replicate "
                "budget or loosen the event"
            )
        return self

    def reduced_histogram(self, s: float) -> Dict[int, int]:
        """Counts of Z(s, t) = j over accepted replicates."""
        self.require_nonempty()
        idx = self.s_grid.index(float(s))
        vals, counts = np.unique(self.reduced_counts[:, idx], return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def _run_chunk(args) -> Dict:
    """Worker: counting pass over one replicate range, detail pass on accepts."""
    (
        packed, master_mixed, rep_lo, rep_hi, t, t_ext, y_mode, cap,
        lo, hi, s_grid, x_grid, detailed, lattice,
    ) = args
    off_cdf, kind, life_cdf, p0, p1 = packed
    n = rep_hi - rep_lo
    z = np.empty(n, np.int64)
    no_probe = np.zeros(0)
    probe_alive = np.zeros((n, 0), np.int64)
    probe_maxres = np.zeros((n, 0), np.float64)
    star = np.zeros((n, 0), np.int64)
    _kernels.pass1_range(
        np.uint64(master_mixed), rep_lo, rep_hi, float(t), float(t_ext), y_mode,
        off_cdf, kind, life_cdf, p0, p1,
        no_probe, no_probe, cap, z, probe_alive, probe_maxres, star,
    )
    capped = int(np.sum(z < 0))
    valid = z >= 0
    hist = np.bincount(z[valid])
    acc_mask = valid & (z >= lo)
    if hi is not None:
        acc_mask &= z <= hi
    accepted = np.flatnonzero(acc_mask)
    result = {
        "rep_lo": rep_lo,
        "n": n,
        "capped": capped,
        "hist": hist,
        "accepted": accepted + rep_lo,
        "accepted_z": z[accepted],
    }
    if detailed and len(accepted):
        n_s, n_x = len(s_grid), len(x_grid)
        s_arr = np.asarray(s_grid, dtype=float)
        x_arr = np.asarray(x_grid, dtype=float)
        d_vals = np.full(len(accepted), np.nan)
        red = np.zeros((len(accepted), n_s), np.int64)
        zst = np.zeros((len(accepted), n_x), np.int64)
        ztl = np.zeros((len(accepted), n_x), np.int64)
        zpl = np.zeros((len(accepted), n_x), np.int64)
        ztp = np.zeros((len(accepted), n_x), np.int64)
        mres = np.zeros((len(accepted), n_s), np.float64)
        birth = np.empty(cap, np.float64)
        death = np.empty(cap, np.float64)
        parent = np.empty(cap, np.int64)
        nchild = np.empty(cap, np.int32)
        for row, rep in enumerate(accepted + rep_lo):
            root = np.uint64(
                _kernels._child_key(np.uint64(master_mixed), np.uint64(rep))
            )
            nn, was_capped = _kernels.record_tree(
                root, float(t_ext), y_mode, off_cdf, kind, life_cdf, p0, p1,
                cap, birth, death, parent, nchild,
            )
            if was_capped:
                raise RuntimeError("replay capped a replicate the counting pass accepted")
            z_t, split, _ = _kernels.tree_observables(
                birth, death, parent, nn, float(t), s_arr, x_arr,
                red[row], mres[row], zst[row], ztl[row], zpl[row], ztp[row],
            )
            if z_t != z[accepted[row]]:
                raise RuntimeError(
                    f"replay mismatch at replicate {rep}: {z_t} != {z[accepted[row]]}"
                )
            beta = split - 1.0 if lattice else split
            d_vals[row] = t - beta if beta >= 0 else np.nan
        result.update(
            d_values=d_vals, reduced=red, z_star=zst, z_tilde=ztl,
            z_plus=zpl, z_tilde_plus=ztp, max_residual=mres,
        )
    return result


def run_conditioned(config: SimConfig) -> ConditionedSample:
    """Rejection sampling of the configured event over all replicates.

    Plain rejection: every replicate is simulated, Z(t) decides acceptance,
    accepted replicates are replayed with genealogy recording to extract the
    reduced-process observables.  Results are bit-identical for a given
    (config, seed) regardless of `jobs` and `chunk_size`.
    """
    model = config.model
    t = float(config.t)
    lo, hi = config.event.bounds(model, t)
    packed = _pack_model(model)
    master_mixed = mix64(config.seed)
    lattice = model.lifetime.is_lattice

    ranges = [
        (lo_i, min(lo_i + config.chunk_size, config.replicates))
        for lo_i in range(0, config.replicates, config.chunk_size)
    ]
    args = [
        (
            packed, master_mixed, rep_lo, rep_hi, t, config.t_extended,
            config.y_process, config.cap, lo, hi,
            config.s_grid, config.x_grid, config.detailed, lattice,
        )
        for rep_lo, rep_hi in ranges
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_chunk, args))
    else:
        results = [_run_chunk(a) for a in args]
    results.sort(key=lambda r: r["rep_lo"])

    n_capped = sum(r["capped"] for r in results)
    max_z = max(len(r["hist"]) for r in results)
    z_counts = np.zeros(max_z, np.int64)
    for r in results:
        z_counts[: len(r["hist"])] += r["hist"]
    accepted = np.concatenate([r["accepted"] for r in results])
    accepted_z = np.concatenate([r["accepted_z"] for r in results])
    n_acc = len(accepted)
    denom = config.replicates - n_capped
    from .stats import wilson_interval

    rate = n_acc / denom if denom else math.nan
    wilson = wilson_interval(n_acc, denom) if denom else (math.nan, math.nan)

    sample = ConditionedSample(
        config_echo={
            "model": model.name or "unnamed",
            "t": t,
            "replicates": config.replicates,
            "seed": config.seed,
            "cap": config.cap,
            "event": config.event.describe(model, t),
            "s_grid": list(config.s_grid),
            "x_grid": list(config.x_grid),
            "y_process": config.y_process,
        },
        n_total=config.replicates,
        n_capped=n_capped,
        n_accepted=n_acc,
        acceptance_rate=rate,
        wilson=wilson,
        z_counts=z_counts,
        accepted_replicates=accepted,
        accepted_z=accepted_z,
        s_grid=config.s_grid,
        x_grid=config.x_grid,
    )
    if config.detailed:
        def cat(key, width, dtype):
            parts = [
                r[key] for r in results if "d_values" in r
            ]
            if not parts:
                return np.zeros((0, width) if width is not None else 0, dtype)
            return np.concatenate(parts)

        sample.d_values = cat("d_values", None, np.float64)
        sample.reduced_counts = cat("reduced", len(config.s_grid), np.int64)
        sample.z_star = cat("z_star", len(config.x_grid), np.int64)
        sample.z_tilde = cat("z_tilde", len(config.x_grid), np.int64)
        sample.z_plus = cat("z_plus", len(config.x_grid), np.int64)
        sample.z_tilde_plus = cat("z_tilde_plus", len(config.x_grid), np.int64)
        sample.max_residual = cat("max_residual", len(config.s_grid), np.float64)
    return sample


# ---------------------------------------------------------------------------
# Residual-lifetime diagnostics


def _scan_counts(model, t, t_ext, probes, star_x, replicates, seed,
                 cap=DEFAULT_CAP, chunk=DEFAULT_CHUNK, y_mode=False):
    """Counting pass over all replicates; returns per-replicate arrays."""
    packed = _pack_model(model)
    off_cdf, kind, life_cdf, p0, p1 = packed
    master_mixed = mix64(seed)
    probes = np.asarray(probes, dtype=float)
    star_x = np.asarray(star_x, dtype=float)
    z_all = np.empty(replicates, np.int64)
    alive_all = np.empty((replicates, len(probes)), np.int64)
    maxres_all = np.empty((replicates, len(probes)), np.float64)
    star_all = np.empty((replicates, len(star_x)), np.int64)
    for rep_lo in range(0, replicates, chunk):
        rep_hi = min(rep_lo + chunk, replicates)
        n = rep_hi - rep_lo
        z = np.empty(n, np.int64)
        alive = np.zeros((n, len(probes)), np.int64)
        maxres = np.zeros((n, len(probes)), np.float64)
        star = np.zeros((n, len(star_x)), np.int64)
        _kernels.pass1_range(
            np.uint64(master_mixed), rep_lo, rep_hi, float(t), float(t_ext),
            y_mode, off_cdf, kind, life_cdf, p0, p1,
            probes, star_x, cap, z, alive, maxres, star,
        )
        z_all[rep_lo:rep_hi] = z
        alive_all[rep_lo:rep_hi] = alive
        maxres_all[rep_lo:rep_hi] = maxres
        star_all[rep_lo:rep_hi] = star
    return z_all, alive_all, maxres_all, star_all


def residual_event_rate(
    model: Model,
    t: float,
    y: float,
    epsilon: float,
    phi: Schedule,
    replicates: int,
    seed: int,
) -> float:
    """Empirical P(some particle at t - y phi(t) has residual life
    > eps phi(t)) / empirical P(0 < Z(t) <= B phi(t)).

    The numerator is the complement of the bounded-residual event from the
    sublinear-window proof machinery; the ratio should shrink along a t grid
    when the tail condition holds.
    """
    w = y * phi(t)
    if not (0 < w < t):
        raise ValueError("need 0 < y*phi(t) < t")
    s0 = t - w
    z, _, maxres, _ = _scan_counts(model, t, t, [s0], [], replicates, seed)
    valid = z >= 0
    threshold = epsilon * phi(t)
    num = int(np.sum(valid & (maxres[:, 0] > threshold)))
    lo, hi = EventSpec("small-pop", phi=phi).bounds(model, t)
    den = int(np.sum(valid & (z >= lo) & (z <= hi)))
    if den == 0:
        return math.nan
    return num / den


def star_survival_ratio(
    model: Model, t: float, epsilon: float, replicates: int, seed: int
) -> float:
    """Empirical P(Z*(t, eps t) > 0) / P(Z(t) > 0): the probability that some
    time-t particle personally survives past (1 + eps) t, relative to
    survival, which vanishes in the limit for linear windows."""
    x = epsilon * t
    z, _, _, star = _scan_counts(model, t, t + x, [], [x], replicates, seed)
    valid = z >= 0
    den = int(np.sum(valid & (z > 0)))
    if den == 0:
        return math.nan
    num = int(np.sum(valid & (star[:, 0] > 0)))
    return num / den
