"""Exact distribution of Z(t) for lattice lifetimes via truncated pgf recursion.

For a lattice lifetime with pmf (g_1, ..., g_L) the generating function
F(t; s) = E[s^Z(t)] satisfies, for integer t >= 1,

    F(t; s) = (1 - G(t)) s + sum_{l <= min(t, L)} g_l * f(F(t - l; s)),

with F(0; s) = s, where f is the offspring pgf.  Truncating every series at
order K is exact for the retained coefficients -- the order-k output of a
composition depends only on orders <= k of the input -- so K controls only
the reported tail mass, never the accuracy of c_0..c_K.

On top of the coefficient view this module provides the diagnostics that
track the local limit behaviour t^2 e^{k/(Bt)} P(Z(t)=k) -> 1/B^2, the
difference asymptotics of F(t; 1 - 1/psi) - F(t; 0), and the derivative
asymptotics of F^(k)(t; w) near w = 1, the last two through cancellation-free
forward recursions (see `difference_ratio`, `derivative_ratio`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from .models import Model, OffspringLaw

# Direct convolution below this length; FFT convolution above.  FFT round-off
# (~1e-15 absolute per step) only ever touches orders above the exact block.
_DIRECT_LEN = 1024
# Orders 0.._EXACT_BLOCK are always recomputed with direct arithmetic.
_EXACT_BLOCK = 48
# Negative round-off beyond this magnitude is a bug, below it is clamped.
_CLAMP_NEG = 1e-12


class UnsupportedModelError(ValueError):
    """Raised when an exact-engine operation receives a continuous-lifetime model."""


class TruncationError(ValueError):
    """Raised when a query addresses orders beyond the truncation."""


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients c_0..c_K of a (sub-)probability generating function.

    tail_mass = 1 - sum(c_k) is the probability mass beyond the truncation.
    """

    coeffs: np.ndarray
    K: int
    tail_mass: float

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray) -> "TruncatedSeries":
        coeffs = np.asarray(coeffs, dtype=float)
        neg = coeffs < 0.0
        if np.any(coeffs[neg] < -_CLAMP_NEG):
            raise ValueError(
                f"series coefficient below -{_CLAMP_NEG}: min={coeffs.min()!r}"
            )
        if np.any(neg):
            coeffs = coeffs.copy()
            coeffs[neg] = 0.0
        total = math.fsum(coeffs.tolist())
        if total > 1.0 + 1e-12:
            raise ValueError(f"series mass {total!r} exceeds 1")
        coeffs.setflags(write=False)
        return cls(coeffs=coeffs, K=len(coeffs) - 1, tail_mass=1.0 - total)

    def evaluate(self, s: float) -> float:
        """sum_k c_k s^k by Horner."""
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * s + c
        return acc

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.coeffs)), self.coeffs))


def default_truncation(model: Model, t: int) -> int:
    """K = max(ceil(8 B t), 256): orders beyond ~8Bt hold mass < e^-8 under the
    exponential coefficient profile of the local limit law."""
    return max(int(math.ceil(8.0 * model.constants.B * t)), 256)


# ---------------------------------------------------------------------------
# Polynomial composition


def _mul_trunc(a: np.ndarray, b: np.ndarray, K: int) -> np.ndarray:
    n = min(len(a) + len(b) - 1, K + 1)
    if n <= _DIRECT_LEN:
        return np.convolve(a, b)[:n]
    return fftconvolve(a, b)[:n]


def _compose_direct(pmf: np.ndarray, p: np.ndarray, K: int) -> np.ndarray:
    """Horner composition sum_k f_k P^k truncated at K, direct convolutions."""
    out = np.array([pmf[-1]])
    for fk in pmf[-2::-1]:
        out = np.convolve(out, p)[: K + 1]
        out[0] += fk
    if len(out) < K + 1:
        out = np.concatenate([out, np.zeros(K + 1 - len(out))])
    return out


def _compose_ps(pmf: np.ndarray, p: np.ndarray, K: int) -> np.ndarray:
    """Paterson-Stockmeyer composition: ~2*sqrt(deg f) long multiplications."""
    deg = len(pmf) - 1
    c = max(int(math.isqrt(deg)) + 1, 2)
    powers: List[np.ndarray] = [np.array([1.0]), p]
    for _ in range(2, c + 1):
        powers.append(_mul_trunc(powers[-1], p, K))
    out: Optional[np.ndarray] = None
    for i in range(deg // c, -1, -1):
        chunk = np.zeros(min(K, (c - 1) * max(len(p) - 1, 1)) + 1)
        for j in range(c - 1, -1, -1):
            idx = i * c + j
            if idx <= deg and pmf[idx] != 0.0:
                pw = powers[j]
                if len(pw) > len(chunk):
                    chunk = np.concatenate([chunk, np.zeros(len(pw) - len(chunk))])
                chunk[: len(pw)] += pmf[idx] * pw
        if out is None:
            out = chunk
        else:
            out = _mul_trunc(out, powers[c], K)
            if len(chunk) > len(out):
                out = np.concatenate([out, np.zeros(len(chunk) - len(out))])
            out[: len(chunk)] += chunk
    if len(out) < K + 1:
        out = np.concatenate([out, np.zeros(K + 1 - len(out))])
    return out[: K + 1]


def compose_offspring(offspring: OffspringLaw, p: np.ndarray, K: int) -> np.ndarray:
    """f(P(s)) truncated at order K.

    The low-order block 0..min(K, 48) is always recomputed by direct Horner
    arithmetic, so the constant term replays the scalar recursion bit for bit
    and FFT round-off never reaches the survival probability.
    """
    pmf = offspring.pmf
    p = p[: K + 1]
    if len(pmf) > 9 and K + 1 > _DIRECT_LEN:
        out = _compose_ps(pmf, p, K)
    else:
        out = _compose_direct(pmf, p, K)
    m = min(K, _EXACT_BLOCK)
    if K + 1 > _DIRECT_LEN:
        out[: m + 1] = _compose_direct(pmf, p[: m + 1], m)
    out[(out < 0.0) & (out > -_CLAMP_NEG)] = 0.0
    return out


# ---------------------------------------------------------------------------
# The recursion


def _lattice_or_raise(model: Model, op: str) -> np.ndarray:
    if not model.lifetime.is_lattice:
        raise UnsupportedModelError(
            f"{op} requires a lattice lifetime; got {model.lifetime.kind!r} "
            "(no closed recursion on a finite grid for continuous lifetimes)"
        )
    return model.lifetime.lattice_pmf


def _coeff_evolution(model: Model, t_max: int, K: int):
    """Yield (t, coeffs) for t = 0..t_max; coeffs arrays are reused, copy to keep."""
    g = _lattice_or_raise(model, "pgf_recursion")
    if K < 1:
        raise ValueError("K must be >= 1")
    lmax = len(g)
    cur = np.zeros(K + 1)
    cur[1] = 1.0  # F(0; s) = s
    window: List[np.ndarray] = [cur]
    yield 0, cur
    gtail = np.cumsum(g[::-1])[::-1]  # gtail[l-1] = P(tau >= l)
    for t in range(1, t_max + 1):
        out = np.zeros(K + 1)
        if t <= lmax - 1:
            out[min(1, K)] = gtail[t]  # (1 - G(t)) s
        for ell in range(1, min(t, lmax) + 1):
            if g[ell - 1] == 0.0:
                continue
            out += g[ell - 1] * compose_offspring(model.offspring, window[-ell], K)
        window.append(out)
        if len(window) > lmax:
            window.pop(0)
        yield t, out


def pgf_recursion(model: Model, t: int, K: Optional[int] = None) -> TruncatedSeries:
    """Coefficients of F(t; s) on s^0..s^K, i.e. P(Z(t) = k) for k <= K."""
    if t < 0 or t != int(t):
        raise ValueError(f"t must be a nonnegative integer, got {t!r}")
    t = int(t)
    if K is None:
        K = default_truncation(model, t)
    if K < 1:
        raise ValueError("K must be >= 1")
    for tt, coeffs in _coeff_evolution(model, t, K):
        pass
    return TruncatedSeries.from_coeffs(coeffs)


def pgf_series_grid(
    model: Model, ts: Sequence[int], K: Optional[int] = None
) -> Dict[int, TruncatedSeries]:
    """One forward pass snapshotting F(t; s) at each requested t."""
    wanted = sorted(set(int(t) for t in ts))
    if wanted and wanted[0] < 0:
        raise ValueError("t values must be nonnegative")
    if K is None:
        K = default_truncation(model, max(wanted)) if wanted else 256
    out: Dict[int, TruncatedSeries] = {}
    targets = set(wanted)
    for t, coeffs in _coeff_evolution(model, max(wanted) if wanted else 0, K):
        if t in targets:
            out[t] = TruncatedSeries.from_coeffs(coeffs.copy())
    return out


def y_pgf(model: Model, t: int, K: Optional[int] = None) -> TruncatedSeries:
    """Coefficients of T(t; s) = f(F(t; s)): the process started from a random,
    offspring-distributed number of initial particles."""
    if K is None:
        K = default_truncation(model, int(t))
    base = pgf_recursion(model, t, K)
    return TruncatedSeries.from_coeffs(compose_offspring(model.offspring, base.coeffs, K))


# ---------------------------------------------------------------------------
# Scalar evaluations (no truncation at all)


def pgf_at(model: Model, t: int, s0: float) -> float:
    """F(t; s0) for a fixed argument by scalar recursion."""
    g = _lattice_or_raise(model, "pgf_at")
    lmax = len(g)
    t = int(math.floor(t))
    gtail = np.cumsum(g[::-1])[::-1]
    vals = [float(s0)]
    for tt in range(1, t + 1):
        acc = gtail[tt] * s0 if tt <= lmax - 1 else 0.0
        for ell in range(1, min(tt, lmax) + 1):
            if g[ell - 1] != 0.0:
                acc += g[ell - 1] * model.offspring.pgf(vals[tt - ell])
        vals.append(acc)
    return vals[t]


def survival_curve(model: Model, t_max: int) -> np.ndarray:
    """Q(t) = P(Z(t) > 0) = 1 - F(t; 0) for t = 0..t_max (scalar recursion)."""
    g = _lattice_or_raise(model, "survival_prob")
    lmax = len(g)
    f0 = np.empty(t_max + 1)
    f0[0] = 0.0
    for t in range(1, t_max + 1):
        acc = 0.0  # the (1 - G(t)) s term vanishes at s = 0
        for ell in range(1, min(t, lmax) + 1):
            if g[ell - 1] != 0.0:
                acc += g[ell - 1] * model.offspring.pgf(f0[t - ell])
        f0[t] = acc
    return 1.0 - f0


def survival_prob(model: Model, t: int) -> float:
    """P(Z(t) > 0), exact up to O(t * eps) rounding and truncation-free."""
    return float(survival_curve(model, int(t))[int(t)])


def point_prob(model: Model, t: int, k: int, K: Optional[int] = None) -> float:
    """P(Z(t) = k) read off the coefficient view."""
    if K is None:
        K = max(default_truncation(model, int(t)), int(k))
    if k > K:
        raise TruncationError(f"k={k} exceeds truncation K={K}")
    series = pgf_recursion(model, t, K)
    return float(series.coeffs[int(k)])


# ---------------------------------------------------------------------------
# Local limit diagnostics


def local_limit_error_grid(
    model: Model, ts: Sequence[int], C: float = 1.0, K: Optional[int] = None
) -> Dict[int, float]:
    """sup_{1 <= k <= C t} | t^2 e^{k/(Bt)} P(Z(t)=k) - 1/B^2 | at each t.

    The default truncation is just past C*t: retained coefficients are exact
    for any K, and the diagnostic never looks beyond k = C*t.
    """
    B = model.constants.B
    ts = sorted(set(int(t) for t in ts))
    if min(ts) < 1:
        raise ValueError("local limit diagnostics need t >= 1")
    if K is None:
        K = max(int(math.ceil(C * max(ts))) + 1, 256)
    grid = pgf_series_grid(model, ts, K)
    out: Dict[int, float] = {}
    for t, series in grid.items():
        kmax = min(int(math.floor(C * t)), series.K)
        k = np.arange(1, kmax + 1)
        vals = t * t * np.exp(k / (B * t)) * series.coeffs[1 : kmax + 1]
        out[t] = float(np.max(np.abs(vals - 1.0 / B**2)))
    return out


def local_limit_error(model: Model, t: int, C: float = 1.0, K: Optional[int] = None) -> float:
    return local_limit_error_grid(model, [t], C, K)[int(t)]


def local_bound_constant(
    model: Model, ts: Sequence[int], K: Optional[int] = None
) -> float:
    """max over the grid of t^2 P(Z(t)=k), k >= 1: the empirical value of the
    uniform local bound constant (finite by the local limit theorem)."""
    ts = sorted(set(int(t) for t in ts))
    if K is None:
        K = default_truncation(model, max(ts))
    grid = pgf_series_grid(model, ts, K)
    return max(
        float(t * t * np.max(series.coeffs[1:])) for t, series in grid.items()
    )


# ---------------------------------------------------------------------------
# Difference and derivative asymptotics (cancellation-free recursions)


def _divided_difference(offspring: OffspringLaw, a: float, b: float) -> float:
    """(f(a) - f(b)) / (a - b) = sum_k f_k sum_{j<k} a^j b^{k-1-j}.

    Every term is nonnegative for a, b in [0, 1]: no cancellation, so the
    propagated difference keeps full relative accuracy.
    """
    pmf = offspring.pmf
    h = 0.0
    bp = 1.0
    acc = 0.0
    for k in range(1, len(pmf)):
        h = a * h + bp
        bp *= b
        if pmf[k] != 0.0:
            acc += pmf[k] * h
    return acc


def difference_ratio(model: Model, t: int, psi: float) -> float:
    """[F(t; 1 - 1/psi) - F(t; 0)] * B^2 t^2 / psi for 1 < psi < t.

    The difference D(t) is propagated directly through the recursion,

        D(t) = (1 - G(t)) s0 + sum_l g_l D(t-l) * fdd(F(t-l; s0), F(t-l; 0)),

    with fdd the positive-sum divided difference of the offspring pgf, so no
    subtractive cancellation occurs and the result is exact to O(t eps)
    relative rounding (tends to 1 as t -> infinity for psi = o(t))."""
    if not (1.0 < psi < t):
        raise ValueError(f"psi must satisfy 1 < psi < t, got psi={psi!r}, t={t!r}")
    g = _lattice_or_raise(model, "difference_ratio")
    lmax = len(g)
    t = int(t)
    s0 = 1.0 - 1.0 / psi
    gtail = np.cumsum(g[::-1])[::-1]
    a = [s0]   # F(.; s0)
    b = [0.0]  # F(.; 0)
    d = [s0]   # difference
    for tt in range(1, t + 1):
        live = gtail[tt] if tt <= lmax - 1 else 0.0
        acc_a = live * s0
        acc_b = 0.0
        acc_d = live * s0
        for ell in range(1, min(tt, lmax) + 1):
            if g[ell - 1] == 0.0:
                continue
            acc_a += g[ell - 1] * model.offspring.pgf(a[tt - ell])
            acc_b += g[ell - 1] * model.offspring.pgf(b[tt - ell])
            acc_d += g[ell - 1] * d[tt - ell] * _divided_difference(
                model.offspring, a[tt - ell], b[tt - ell]
            )
        a.append(acc_a)
        b.append(acc_b)
        d.append(acc_d)
    B = model.constants.B
    return d[t] * B * B * t * t / psi


def derivative_at(series: TruncatedSeries, k: int, w: float) -> float:
    """k-th derivative of the truncated polynomial at w in [0, 1):
    sum_{m >= k} c_m m!/(m-k)! w^{m-k}, Horner from the top order down."""
    if k > series.K:
        raise TruncationError(f"derivative order {k} exceeds truncation K={series.K}")
    coeffs = series.coeffs
    falling = 1.0
    for i in range(k):
        falling *= series.K - i
    acc = 0.0
    for m in range(series.K, k - 1, -1):
        acc = acc * w + coeffs[m] * falling
        if m > k:
            falling *= (m - k) / m
    return acc


@lru_cache(maxsize=None)
def _composition_multisets(k: int) -> Tuple[Tuple[int, ...], ...]:
    """All (i_1, ..., i_k) with sum r*i_r = k (partition multiplicity vectors)."""
    results: List[Tuple[int, ...]] = []

    def rec(r: int, remaining: int, acc: List[int]):
        if r == 0:
            if remaining == 0:
                results.append(tuple(acc[::-1]))
            return
        for i in range(remaining // r, -1, -1):
            acc.append(i)
            rec(r - 1, remaining - r * i, acc)
            acc.pop()

    rec(k, k, [])
    return tuple(results)


def faa_di_bruno(H_derivs: Sequence[float], T_derivs: Sequence[float], k: int) -> float:
    """d^k/dz^k H(T(z)) from H^(0..k) at T(z) and T^(1..k) at z.

    Sums k!/(i_1! ... i_k!) * H^(I_k)(T) * prod_r (T^(r)/r!)^{i_r} over all
    multiplicity vectors with sum r*i_r = k.
    """
    if k == 0:
        return float(H_derivs[0])
    if len(H_derivs) < k + 1:
        raise ValueError(f"need H derivatives up to order {k}, got {len(H_derivs) - 1}")
    if len(T_derivs) < k:
        raise ValueError(f"need T derivatives up to order {k}, got {len(T_derivs)}")
    total = 0.0
    for multi in _composition_multisets(k):
        I_k = sum(multi)
        term = math.factorial(k) * float(H_derivs[I_k])
        for r, i_r in enumerate(multi, start=1):
            if i_r:
                term *= (float(T_derivs[r - 1]) / math.factorial(r)) ** i_r
                term /= math.factorial(i_r)
        total += term
    return total


def derivative_jet(model: Model, t: int, w: float, k: int) -> np.ndarray:
    """(F(t; w), F'(t; w), ..., F^(k)(t; w)) propagated forward in t.

    Differentiating the recursion k times turns each composition f(F(t-l; s))
    into a Faa di Bruno combination of the offspring-pgf derivatives at
    F(t-l; w) with the previous jet; the result is the exact derivative
    vector, free of series truncation."""
    g = _lattice_or_raise(model, "derivative_jet")
    lmax = len(g)
    t = int(t)
    gtail = np.cumsum(g[::-1])[::-1]
    jet = np.zeros(k + 1)
    jet[0] = w
    if k >= 1:
        jet[1] = 1.0  # F(0; s) = s
    window = [jet]
    for tt in range(1, t + 1):
        out = np.zeros(k + 1)
        if tt <= lmax - 1:
            out[0] = gtail[tt] * w
            if k >= 1:
                out[1] += gtail[tt]
        for ell in range(1, min(tt, lmax) + 1):
            if g[ell - 1] == 0.0:
                continue
            prev = window[-ell]
            f_derivs = model.offspring.pgf_derivatives(prev[0], k)
            out[0] += g[ell - 1] * f_derivs[0]
            for r in range(1, k + 1):
                out[r] += g[ell - 1] * faa_di_bruno(f_derivs, prev[1:], r)
        window.append(out)
        if len(window) > lmax:
            window.pop(0)
    return window[-1]


def derivative_ratio(model: Model, t: int, psi: float, k: int) -> float:
    """F^(k)(t; w) * B^2 t^2 / ((B psi)^{k+1} k!) with w = f(F(psi; 0)).

    Tends to 1 as t -> infinity with psi = o(t); for the Galton-Watson oracle
    it matches the linear-fractional closed form to rounding."""
    if not (1.0 < psi < t):
        raise ValueError(f"psi must satisfy 1 < psi < t, got psi={psi!r}, t={t!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    w = model.offspring.pgf(pgf_at(model, int(math.floor(psi)), 0.0))
    jet = derivative_jet(model, int(t), w, k)
    B = model.constants.B
    return float(jet[k]) * B * B * t * t / ((B * psi) ** (k + 1) * math.factorial(k))
